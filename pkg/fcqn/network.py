# fcqn/network.py
"""Fully connected network topology on a 100 GHz DWDM grid."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from fcqn.errors import TopologyError
from fcqn.qcore import DensityMatrix, PureState
from fcqn.schemas import NoiseSpec, SourceParams
from fcqn.source import expected_rates
from fcqn.states import apply_noise

logger = logging.getLogger(__name__)

GRID_ORIGIN_THZ = 190.0
GRID_SPACING_THZ = 0.1
DEGENERATE_CHANNEL = 34
FIBER_LOSS_DB_PER_KM = 0.2

DEPLOYED_USERS = ("Alice", "Bob", "Chloe", "David")
DEPLOYED_USER_CHANNELS = {
    "Alice": ("i1", "i4", "s6"),
    "Bob": ("i2", "s4", "s5"),
    "Chloe": ("s2", "i3", "i6"),
    "David": ("s1", "s3", "i5"),
}

_ITU = re.compile(r"^C(\d+)$")


@dataclass(frozen=True)
class Channel:
    label: str
    index: int | None = None

    @classmethod
    def parse(cls, value: "Channel | int | str") -> "Channel":
        if isinstance(value, Channel):
            return value
        if isinstance(value, int):
            return cls(f"C{value}", value)
        match = _ITU.match(str(value))
        return cls(str(value), int(match.group(1)) if match else None)

    @property
    def frequency_thz(self) -> float | None:
        if self.index is None:
            return None
        return round(GRID_ORIGIN_THZ + GRID_SPACING_THZ * self.index, 4)


def itu_pair(j: int) -> tuple[Channel, Channel]:
    """Signal C(34+j) paired with idler C(34-j), symmetric about the degenerate channel."""
    return Channel.parse(DEGENERATE_CHANNEL + j), Channel.parse(DEGENERATE_CHANNEL - j)


@dataclass(frozen=True)
class NetworkTopology:
    users: tuple[str, ...]
    channel_pairs: tuple[tuple[Channel, Channel], ...]
    link_map: Mapping[int, tuple[str, str]]
    user_channels: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "channel_pairs", tuple(tuple(p) for p in self.channel_pairs))
        object.__setattr__(self, "link_map", MappingProxyType({j: tuple(p) for j, p in self.link_map.items()}))
        object.__setattr__(
            self, "user_channels", MappingProxyType({u: tuple(c) for u, c in self.user_channels.items()})
        )
        self.validate()

    def __hash__(self) -> int:
        return hash((self.users, self.channel_pairs, tuple(sorted(self.link_map.items()))))

    def validate(self) -> None:
        n = len(self.users)
        if len(set(self.users)) != n:
            raise TopologyError("user labels must be unique")
        expected = {frozenset(p) for p in combinations(self.users, 2)}
        linked = [frozenset(p) for p in self.link_map.values()]
        if len(linked) != len(set(linked)) or set(linked) != expected:
            raise TopologyError("link map is not a bijection onto all user pairs")
        if sorted(self.link_map) != list(range(1, len(self.link_map) + 1)):
            raise TopologyError("link indices must run 1..C(n,2)")
        if len(self.channel_pairs) < len(self.link_map):
            raise TopologyError("fewer channel pairs than links")
        for user in self.users:
            degree = sum(user in pair for pair in self.link_map.values())
            if degree != n - 1:
                raise TopologyError(f"{user} appears in {degree} links, expected {n - 1}")
            if len(self.user_channels.get(user, ())) != n - 1:
                raise TopologyError(f"{user} holds {len(self.user_channels.get(user, ()))} channels, expected {n - 1}")

    @property
    def n_links(self) -> int:
        return len(self.link_map)

    def link(self, j: int) -> tuple[str, str]:
        try:
            return self.link_map[j]
        except KeyError:
            raise TopologyError(f"no link with channel pair index {j}") from None

    def pair_index(self, u: str, v: str) -> int:
        for j, pair in self.link_map.items():
            if {u, v} == set(pair):
                return j
        raise TopologyError(f"no link between {u} and {v}")

    def channels_of(self, user: str) -> frozenset[str]:
        if user not in self.user_channels:
            raise TopologyError(f"unknown user {user!r}")
        return frozenset(self.user_channels[user])

    def itu_channels_of(self, user: str) -> frozenset[str]:
        out = set()
        for name in self.channels_of(user):
            signal, idler = self.channel_pairs[int(name[1:]) - 1]
            out.add((signal if name[0] == "s" else idler).label)
        return frozenset(out)

    def link_label(self, j: int) -> str:
        """Initials ("AB") when they identify users uniquely, else "u-v"."""
        pair = sorted(self.link(j))
        if len({user[0] for user in self.users}) == len(self.users):
            return "".join(user[0] for user in pair)
        return "-".join(pair)

    def to_dict(self) -> dict:
        return {
            "users": list(self.users),
            "channel_pairs": [[s.label, i.label] for s, i in self.channel_pairs],
            "link_map": {str(j): list(pair) for j, pair in sorted(self.link_map.items())},
            "user_channels": {u: sorted(c) for u, c in self.user_channels.items()},
        }


def _check_energy_conservation(pairs: Sequence[tuple[Channel, Channel]]) -> None:
    sums = {s.index + i.index for s, i in pairs if s.index is not None and i.index is not None}
    if len(sums) > 1:
        raise TopologyError(f"channel pairs are not symmetric about one degenerate channel (sums {sorted(sums)})")


def default_allocation() -> NetworkTopology:
    """Four users, signal C35-C40 with idler C33-C28, channel sets as deployed."""
    pairs = tuple(itu_pair(j) for j in range(1, 7))
    holder = {name: user for user, names in DEPLOYED_USER_CHANNELS.items() for name in names}
    link_map = {j: (holder[f"s{j}"], holder[f"i{j}"]) for j in range(1, 7)}
    return NetworkTopology(DEPLOYED_USERS, pairs, link_map, dict(DEPLOYED_USER_CHANNELS))


def build_fcqn(users: Sequence[str], channel_pairs: Iterable) -> NetworkTopology:
    """
    Assign channel pair j to the j-th user pair in lexicographic order of ``users``.
    The first user of each pair receives the signal channel, the second the idler.
    """
    users = tuple(users)
    pairs = tuple((Channel.parse(s), Channel.parse(i)) for s, i in channel_pairs)
    if len(users) < 2:
        raise TopologyError("a network needs at least two users")
    needed = comb(len(users), 2)
    if len(pairs) < needed:
        raise TopologyError(
            f"{len(users)} users need {needed} channel pairs, got {len(pairs)} (short by {needed - len(pairs)})"
        )
    _check_energy_conservation(pairs)
    pairs = pairs[:needed]

    link_map: dict[int, tuple[str, str]] = {}
    user_channels: dict[str, list[str]] = {u: [] for u in users}
    for j, (u, v) in enumerate(combinations(users, 2), start=1):
        link_map[j] = (u, v)
        user_channels[u].append(f"s{j}")
        user_channels[v].append(f"i{j}")
    return NetworkTopology(users, pairs, link_map, {u: tuple(c) for u, c in user_channels.items()})


def topology_from_config(spec) -> NetworkTopology:
    if spec is None or spec == "default":
        return default_allocation()
    return build_fcqn(spec.users, spec.channel_pairs)


@dataclass(frozen=True)
class LinkState:
    link: tuple[str, str]
    rho: DensityMatrix
    fiber_km: float = 10.0
    noise: NoiseSpec | None = None
    channel_pair: int = field(default=0)

    @property
    def transmission(self) -> float:
        """Power transmission of one fiber arm; scales count rates only."""
        return 10 ** (-FIBER_LOSS_DB_PER_KM * self.fiber_km / 10)

    def source_params(self, base: SourceParams) -> SourceParams:
        """``base`` with the detection efficiency of both arms reduced by the fiber."""
        return base.model_copy(update={"detection_efficiency": base.detection_efficiency * self.transmission})

    def coincidence_rate(self, base: SourceParams) -> float | None:
        """Expected true coincidences per second after both fiber arms."""
        if not 1 <= self.channel_pair <= len(base.slope_k_j):
            return None
        return expected_rates(self.source_params(base), self.channel_pair)["true"]


def distribute(
    topology: NetworkTopology,
    source_state: PureState | DensityMatrix,
    per_link_noise: Sequence[NoiseSpec | None],
    fiber_km: float = 10.0,
) -> list[LinkState]:
    """One LinkState per channel pair j, in j order, each holding the noised source state."""
    if len(per_link_noise) != topology.n_links:
        raise TopologyError(f"{len(per_link_noise)} noise specs for {topology.n_links} links")
    rho = source_state.density() if isinstance(source_state, PureState) else source_state
    links = []
    for j, noise in zip(sorted(topology.link_map), per_link_noise):
        links.append(LinkState(topology.link(j), apply_noise(rho, noise), fiber_km, noise, j))
        logger.debug("link %d %s: noise=%s", j, topology.link(j), noise)
    return links
