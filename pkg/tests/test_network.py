from itertools import combinations

import numpy as np
import pytest

from fcqn.errors import TopologyError
from fcqn.network import Channel, LinkState, build_fcqn, default_allocation, distribute, itu_pair
from fcqn.qcore import fidelity_pure
from fcqn.schemas import NoiseSpec, SourceParams
from fcqn.source import expected_rates
from fcqn.states import phi_plus


def test_default_allocation_channel_sets():
    topo = default_allocation()
    assert topo.channels_of("Alice") == {"i1", "i4", "s6"}
    assert topo.channels_of("Bob") == {"i2", "s4", "s5"}
    assert topo.channels_of("Chloe") == {"s2", "i3", "i6"}
    assert topo.channels_of("David") == {"s1", "s3", "i5"}


def test_default_allocation_links_every_pair_once():
    topo = default_allocation()
    assert topo.n_links == 6
    assert topo.link(1) == ("David", "Alice")
    assert topo.pair_index("Alice", "Bob") == 4
    assert sorted(topo.link_label(j) for j in range(1, 7)) == ["AB", "AC", "AD", "BC", "BD", "CD"]


def test_itu_pairs_are_symmetric_about_c34():
    signal, idler = itu_pair(3)
    assert (signal.label, idler.label) == ("C37", "C31")
    assert np.isclose(signal.frequency_thz + idler.frequency_thz, 2 * 193.4)
    assert default_allocation().itu_channels_of("Alice") == {"C33", "C30", "C40"}


def test_channel_parse_non_grid_label():
    channel = Channel.parse("x7")
    assert channel.index is None
    assert channel.frequency_thz is None


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_build_fcqn_invariants(n):
    users = [f"user{k}" for k in range(n)]
    pairs = [itu_pair(j) for j in range(1, n * (n - 1) // 2 + 1)]
    topo = build_fcqn(users, pairs)
    assert topo.n_links == n * (n - 1) // 2
    linked = {frozenset(topo.link(j)) for j in range(1, topo.n_links + 1)}
    assert linked == {frozenset(p) for p in combinations(users, 2)}
    for user in users:
        assert len(topo.channels_of(user)) == n - 1


def test_build_fcqn_reports_shortfall():
    with pytest.raises(TopologyError, match="short by 2"):
        build_fcqn(["A", "B", "C", "D"], [itu_pair(j) for j in range(1, 5)])


def test_build_fcqn_rejects_asymmetric_pairs():
    with pytest.raises(TopologyError):
        build_fcqn(["A", "B"], [("C35", "C30")] + [itu_pair(2)])


def test_build_fcqn_rejects_single_user():
    with pytest.raises(TopologyError):
        build_fcqn(["A"], [itu_pair(1)])


def test_link_label_falls_back_to_full_names():
    topo = build_fcqn(["Ann", "Abe"], [itu_pair(1)])
    assert topo.link_label(1) == "Abe-Ann"


def test_distribute_applies_per_link_noise():
    topo = default_allocation()
    noise = [NoiseSpec(kind="werner", strength=f) for f in (0.9, 0.8, 0.7, 0.95, 0.85, 0.75)]
    links = distribute(topo, phi_plus(), noise)
    assert [link.channel_pair for link in links] == [1, 2, 3, 4, 5, 6]
    assert np.isclose(fidelity_pure(links[2].rho, phi_plus()), 0.7)
    assert np.isclose(links[0].transmission, 10 ** -0.2)


def test_distribute_checks_noise_length():
    with pytest.raises(TopologyError):
        distribute(default_allocation(), phi_plus(), [None] * 5)


def test_build_fcqn_on_four_users_matches_deployed_allocation():
    deployed = default_allocation()
    built = build_fcqn(deployed.users, [itu_pair(j) for j in range(1, 7)])
    assert {frozenset(p) for p in built.link_map.values()} == {frozenset(p) for p in deployed.link_map.values()}
    assert built.channel_pairs == deployed.channel_pairs
    for user in deployed.users:
        assert len(built.channels_of(user)) == len(deployed.channels_of(user)) == 3
        partners = {str(built.pair_index(user, v)) for v in built.users if v != user}
        assert {name[1:] for name in built.channels_of(user)} == partners


def test_topology_is_read_only_after_validation():
    topo = default_allocation()
    with pytest.raises(TypeError):
        topo.link_map[1] = ("Alice", "Alice")
    with pytest.raises(TypeError):
        topo.user_channels["Alice"] = ()
    assert hash(topo) == hash(default_allocation())
    assert topo == default_allocation()


def test_fiber_scales_count_rates_but_not_the_state():
    base = SourceParams(pump_power=0.2)
    near = distribute(default_allocation(), phi_plus(), [None] * 6, fiber_km=0.0)[1]
    far = distribute(default_allocation(), phi_plus(), [None] * 6, fiber_km=25.0)[1]
    assert near.coincidence_rate(base) == pytest.approx(expected_rates(base, 2)["true"])
    assert far.coincidence_rate(base) == pytest.approx(near.coincidence_rate(base) * far.transmission**2)
    assert far.source_params(base).detection_efficiency == pytest.approx(0.15 * 10 ** -0.5)
    assert np.allclose(far.rho.matrix, near.rho.matrix)
    assert LinkState(("A", "B"), near.rho, channel_pair=9).coincidence_rate(base) is None
