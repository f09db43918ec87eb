# fcqn/services/harness.py
"""
Scenario runner behind the CLI and the HTTP service.

Every scenario derives one child seed per link (or θ point) from the config
seed, fans the per-item work out over ``workers`` threads and assembles its
tables in item order, so equal configs produce byte-identical reports.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Mapping

import numpy as np
import yaml
from pydantic import ValidationError

from fcqn import settings
from fcqn.certify import (
    correlators_from_counts,
    mdi_lower_bound,
    mdi_witness,
    mdi_witness_from_bsm,
    witness_expectation,
    witness_from_counts,
)
from fcqn.db import Base, SessionLocal, engine
from fcqn.errors import ConfigError, FcqnError, MeasurementError, TopologyError
from fcqn.measure import BASIS_OUTCOMES, CORRELATOR_BASES, correlation_counts, tomography_counts, umzi_convert
from fcqn.network import NetworkTopology, distribute, itu_pair, topology_from_config
from fcqn.oracle import TOMOGRAPHY_LABELS, e_tr_theta_curve, mle_tomography, trace_distance_entanglement
from fcqn.qcore import POLARIZATION_LABELS, TIME_BIN_LABELS, PureState, fidelity_pure
from fcqn.schemas import (
    AttackBlock,
    AttackSpec,
    ExperimentConfig,
    MdiBlock,
    Report,
    SourceBlock,
    SourceParams,
    ThetaScanBlock,
    TomographyBlock,
)
from fcqn.services import reference
from fcqn.services.calibration import calibrate_theta_point, werner_for_fidelity, werner_for_mdi_value
from fcqn.services.ledger import record_run
from fcqn.services.reporting import canonical_config, config_hash, versions, write_report
from fcqn.source import car, expected_car, expected_rates, pgr, simulate_counts
from fcqn.states import apply_noise, phi_plus, phi_theta, theta_from_hwp, time_bin_pair

logger = logging.getLogger(__name__)


# ---------- configuration ----------

def _pydantic_errors(exc: ValidationError) -> list[dict[str, str]]:
    errors = []
    for err in exc.errors():
        field = ".".join(str(p) for p in err["loc"]) or "<root>"
        errors.append({"field": field, "message": err["msg"]})
    return errors


def parse_config_text(text: str) -> dict:
    """YAML (JSON is a subset) to a plain mapping."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([{"field": "<root>", "message": f"not valid YAML: {exc}"}]) from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError([{"field": "<root>", "message": "config must be a mapping"}])
    return data


def validate_config(raw: str | Mapping) -> ExperimentConfig:
    """Parse YAML text or a mapping into a checked config; raises ConfigError listing every problem."""
    data = parse_config_text(raw) if isinstance(raw, str) else dict(raw)

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_pydantic_errors(exc)) from None

    errors = []
    topology = None
    try:
        topology = topology_from_config(config.topology)
    except TopologyError as exc:
        errors.append({"field": "topology", "message": str(exc)})

    if config.scenario == "theta_scan":
        block = config.theta_scan or ThetaScanBlock()
        for k, angle in enumerate(block.hwp_angles_deg):
            try:
                theta_from_hwp(angle)
            except FcqnError as exc:
                errors.append({"field": f"theta_scan.hwp_angles_deg.{k}", "message": str(exc)})
        if config.noise is not None and len(config.noise) != len(block.hwp_angles_deg):
            errors.append({"field": "noise", "message": f"theta_scan needs one noise entry per angle ({len(block.hwp_angles_deg)})"})
    elif config.noise is not None and topology is not None and len(config.noise) != topology.n_links:
        errors.append({"field": "noise", "message": f"{len(config.noise)} noise entries for {topology.n_links} links"})

    if errors:
        raise ConfigError(errors)
    return config


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _fan_out(config: ExperimentConfig, fn: Callable, items: list) -> list:
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(fn, items))


def _labels(topology: NetworkTopology) -> list[str]:
    return [topology.link_label(j) for j in sorted(topology.link_map)]


def _default_fidelity_noise(config: ExperimentConfig, topology: NetworkTopology, fiber: str):
    if config.noise is not None:
        return list(config.noise)
    targets = reference.link_fidelities(fiber)
    return [werner_for_fidelity(targets[label]) if label in targets else None for label in _labels(topology)]


def _f(value) -> float | None:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


# ---------- scenarios ----------

def run_source_sweep(config: ExperimentConfig, topology: NetworkTopology):
    block = config.source or SourceBlock()
    slopes = tuple(block.slopes) if block.slopes else SourceParams().slope_k_j
    points = [(j, power) for j in range(1, len(slopes) + 1) for power in block.pump_powers]
    seeds = _child_seeds(config.seed, len(points))

    def one(item):
        (j, power), seed = item
        params = SourceParams(
            pump_power=power,
            slope_k_j=slopes,
            rep_period=block.rep_period,
            window=block.window,
            detection_efficiency=block.detection_efficiency,
        )
        record = simulate_counts(params, j, block.duration, seed)
        try:
            measured_pgr = pgr(record)
        except MeasurementError:
            measured_pgr = None
        try:
            measured_car = car(record)
        except MeasurementError:
            measured_car = None
        try:
            model_car = expected_car(params, j)
        except MeasurementError:
            model_car = None
        signal, idler = itu_pair(j)
        row = {
            "channel_pair": j,
            "signal_channel": signal.label,
            "idler_channel": idler.label,
            "pump_power_mW": float(power),
            "N_s_cps": float(record.N_s),
            "N_i_cps": float(record.N_i),
            "N_c_cps": float(record.N_c),
            "pgr_Hz": _f(measured_pgr),
            "pgr_model_Hz": float(expected_rates(params, j)["pair_rate"]),
            "car": _f(measured_car),
            "car_model": _f(model_car),
        }
        return row, record

    results = _fan_out(config, one, list(zip(points, seeds)))
    rows = [r for r, _ in results]
    lowest = min(block.pump_powers)
    histogram = [
        {"channel_pair": rec.channel_pair, "pump_power_mW": float(rec.pump_power), "delay_ns": float(d), "counts": int(c)}
        for _, rec in results
        if rec.pump_power == lowest
        for d, c in zip(rec.delays, rec.histogram)
    ]
    cars = [r["car"] for r in rows if r["pump_power_mW"] == lowest and r["car"] is not None]
    summary = {"lowest_pump_mW": float(lowest), "min_car_at_lowest_pump": _f(min(cars)) if cars else None}
    return {"source_sweep": rows, "coincidence_histogram": histogram}, summary


def run_allocate(config: ExperimentConfig, topology: NetworkTopology):
    users = [
        {
            "user": user,
            "channels": " ".join(sorted(topology.channels_of(user))),
            "itu_channels": " ".join(sorted(topology.itu_channels_of(user))),
        }
        for user in topology.users
    ]
    links = []
    for j in sorted(topology.link_map):
        signal, idler = topology.channel_pairs[j - 1]
        u, v = topology.link(j)
        links.append({
            "channel_pair": j,
            "link": topology.link_label(j),
            "signal_holder": u,
            "idler_holder": v,
            "signal_channel": signal.label,
            "idler_channel": idler.label,
            "signal_THz": _f(signal.frequency_thz),
            "idler_THz": _f(idler.frequency_thz),
        })
    return {"users": users, "links": links}, {"n_users": len(topology.users), "n_links": topology.n_links}


def run_witness(config: ExperimentConfig, topology: NetworkTopology):
    noise = _default_fidelity_noise(config, topology, "post")
    links = distribute(topology, phi_plus(), noise)
    seeds = _child_seeds(config.seed, len(links))
    labels = _labels(topology)

    def one(item):
        (link, label), seed = item
        pol_rho, prob = umzi_convert(link.rho)
        counts = correlation_counts(pol_rho, config.shots, seed)
        value, err = witness_from_counts(counts)
        corr = correlators_from_counts(counts)
        return {
            "link": label,
            "channel_pair": link.channel_pair,
            "fidelity": fidelity_pure(link.rho, phi_plus()),
            "witness": value,
            "witness_std_err": err,
            "witness_exact": witness_expectation(link.rho),
            "xx": corr["XX"],
            "yy": corr["YY"],
            "zz": corr["ZZ"],
            "postselection_prob": prob,
            "coincidence_cps": _f(link.coincidence_rate(SourceParams())),
        }

    rows = _fan_out(config, one, list(zip(zip(links, labels), seeds)))
    summary = {"all_negative": all(r["witness"] < 0 for r in rows)}
    return {"witness": rows}, summary


def _twelve_counts(table: np.ndarray) -> dict[str, float]:
    out = {}
    for basis in CORRELATOR_BASES:
        outs = BASIS_OUTCOMES[basis[0]]
        for a in outs:
            for b in outs:
                out[a + b] = float(table[TOMOGRAPHY_LABELS.index(a), TOMOGRAPHY_LABELS.index(b)])
    return out


def run_tomography(config: ExperimentConfig, topology: NetworkTopology):
    block = config.tomography or TomographyBlock()
    noise = _default_fidelity_noise(config, topology, block.fiber)
    links = distribute(topology, phi_plus(), noise)
    seeds = _child_seeds(config.seed, len(links))
    labels = _labels(topology)
    target = phi_plus(POLARIZATION_LABELS)

    def one(item):
        (link, label), seed = item
        pol_rho, _ = umzi_convert(link.rho)
        data = tomography_counts(pol_rho, config.shots, seed)
        estimate = mle_tomography(data)
        value, err = witness_from_counts(_twelve_counts(data.counts))
        row = {
            "link": label,
            "channel_pair": link.channel_pair,
            "fidelity_true": fidelity_pure(pol_rho, target),
            "fidelity_mle": fidelity_pure(estimate, target),
            "witness_mle": witness_expectation(estimate),
            "witness_counts": value,
            "witness_std_err": err,
        }
        elements = [
            {"link": label, "row": POLARIZATION_LABELS[i], "col": POLARIZATION_LABELS[k],
             "re": float(estimate.matrix[i, k].real), "im": float(estimate.matrix[i, k].imag)}
            for i in range(4)
            for k in range(4)
        ]
        return row, elements

    results = _fan_out(config, one, list(zip(zip(links, labels), seeds)))
    rows = [r for r, _ in results]
    elements = [e for _, els in results for e in els]
    fidelities = [r["fidelity_mle"] for r in rows]
    summary = {"mean_fidelity": float(np.mean(fidelities)), "std_fidelity": float(np.std(fidelities))}
    return {"tomography": rows, "density_matrices": elements}, summary


def _attack_state(name: str):
    if name == "phi_plus":
        return phi_plus()
    if name == "ll":
        return PureState(np.array([0, 0, 0, 1], dtype=complex), TIME_BIN_LABELS)
    return phi_theta(0.0)


def run_attack(config: ExperimentConfig, topology: NetworkTopology):
    block = config.attack or AttackBlock()
    spec = AttackSpec(delay=block.delay, attacked_settings=block.attacked)
    noise = list(config.noise) if config.noise is not None else [None] * topology.n_links
    links = distribute(topology, _attack_state(block.state), noise)
    seeds = _child_seeds(config.seed, len(links))
    labels = _labels(topology)
    reported = reference.attack_table()

    def one(item):
        (link, label), seed = item
        pol_rho, _ = umzi_convert(link.rho)
        honest = correlation_counts(pol_rho, config.shots, seed)
        attacked = correlation_counts(pol_rho, config.shots, seed, attack=spec)
        w0, e0 = witness_from_counts(honest)
        w1, e1 = witness_from_counts(attacked)
        corr = correlators_from_counts(attacked)
        ref = reported.get(label, {})
        return {
            "link": label,
            "witness_no_attack": w0,
            "std_err_no_attack": e0,
            "witness_attack": w1,
            "std_err_attack": e1,
            "xx_attack": corr["XX"],
            "yy_attack": corr["YY"],
            "zz_attack": corr["ZZ"],
            "reported_no_attack": _f(ref.get("without", [None])[0]),
            "reported_attack": _f(ref.get("under", [None])[0]),
        }

    rows = _fan_out(config, one, list(zip(zip(links, labels), seeds)))
    summary = {"state": block.state, "delay_ns": block.delay, "all_fooled": all(r["witness_attack"] < 0 for r in rows)}
    return {"attack": rows}, summary


def run_mdi(config: ExperimentConfig, topology: NetworkTopology):
    block = config.mdi or MdiBlock()
    labels = _labels(topology)
    targets = reference.mdi_targets()
    if config.noise is not None:
        noise = list(config.noise)
    elif block.calibrate:
        noise = [werner_for_mdi_value(targets[label]) if label in targets else None for label in labels]
    else:
        noise = [None] * topology.n_links
    links = distribute(topology, phi_plus(), noise)
    seeds = _child_seeds(config.seed, len(links))

    def one(item):
        (link, label), seed = item
        sampled = mdi_witness_from_bsm(link.rho, config.shots, seed, input_infidelity=block.input_infidelity)
        exact = mdi_witness(link.rho)
        row = {
            "link": label,
            "I_value": sampled.I_value,
            "std_err": sampled.std_err,
            "lower_bound": sampled.lower_bound,
            "sigma_below_zero": _f(sampled.significance()),
            "I_exact": exact.I_value,
            "lower_bound_exact": exact.lower_bound,
            "I_reported": _f(targets.get(label)),
        }
        terms = [
            {"link": label, "term": term, "probability": p, "std_err": sampled.per_term_err[term], "probability_exact": exact.per_term_probs[term]}
            for term, p in sampled.per_term_probs.items()
        ]
        return row, terms

    results = _fan_out(config, one, list(zip(zip(links, labels), seeds)))
    rows = [r for r, _ in results]
    sigmas = [r["sigma_below_zero"] for r in rows if r["sigma_below_zero"] is not None]
    summary = {"all_negative": all(r["I_value"] < 0 for r in rows), "min_sigma": min(sigmas) if sigmas else None}
    return {"mdi": rows, "mdi_terms": [t for _, ts in results for t in ts]}, summary


def run_theta_scan(config: ExperimentConfig, topology: NetworkTopology):
    block = config.theta_scan or ThetaScanBlock()
    angles = list(block.hwp_angles_deg)
    thetas = [theta_from_hwp(a) for a in angles]
    table = reference.theta_table()
    seeds = _child_seeds(config.seed, len(thetas))

    def reported_row(angle):
        return next((r for r in table if math.isclose(r["hwp_deg"], angle, abs_tol=1e-9)), None)

    def one(item):
        (k, angle, theta), seed = item
        ref = reported_row(angle)
        visibility, phase = 1.0, 0.0
        if config.noise is not None:
            rho = apply_noise(time_bin_pair(theta).density(), config.noise[k])
        elif block.calibrate and ref is not None:
            cal = calibrate_theta_point(theta, ref["lower_bound"], ref["e_tr"])
            rho, visibility, phase = cal.state(), cal.visibility, cal.phase
        else:
            rho = time_bin_pair(theta).density()
        sampled = mdi_witness_from_bsm(rho, config.shots, seed)
        return {
            "hwp_deg": float(angle),
            "theta_rad": theta,
            "I_ideal": -math.sin(2 * theta) / 8,
            "lower_bound_ideal": math.sin(2 * theta) / 32,
            "I_value": sampled.I_value,
            "std_err": sampled.std_err,
            "lower_bound": sampled.lower_bound,
            "lower_bound_exact": mdi_lower_bound(mdi_witness(rho).I_value),
            "e_tr": trace_distance_entanglement(rho).distance,
            "visibility": visibility,
            "phase_rad": phase,
            "reported_lower_bound": _f(ref["lower_bound"]) if ref else None,
            "reported_e_tr": _f(ref["e_tr"]) if ref else None,
        }

    rows = _fan_out(config, one, list(zip(zip(range(len(angles)), angles, thetas), seeds)))
    grid = list(np.linspace(0.0, math.pi / 4, 16))
    curve = [
        {"theta_rad": float(t), "e_tr_ideal": e, "lower_bound_ideal": math.sin(2 * t) / 32}
        for t, e in zip(grid, e_tr_theta_curve(grid))
    ]
    bounds = [r["lower_bound"] for r in rows]
    summary = {"monotonic_bound": all(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:]))}
    return {"theta_scan": rows, "e_tr_curve": curve}, summary


SCENARIOS: dict[str, Callable] = {
    "source_sweep": run_source_sweep,
    "allocate": run_allocate,
    "witness": run_witness,
    "tomography": run_tomography,
    "attack": run_attack,
    "mdi": run_mdi,
    "theta_scan": run_theta_scan,
}


def _clean(rows: list[dict]) -> list[dict]:
    return [{k: (float(v) if isinstance(v, (np.floating,)) else v) for k, v in row.items()} for row in rows]


def run(config: ExperimentConfig, output_dir: str | None = None, write: bool = True) -> Report:
    """Execute one scenario and optionally write its report and tables."""
    topology = topology_from_config(config.topology)
    logger.info("running %s (seed=%d, shots=%d)", config.scenario, config.seed, config.shots)
    tables, summary = SCENARIOS[config.scenario](config, topology)
    report = Report(
        scenario=config.scenario,
        seed=config.seed,
        config=canonical_config(config),
        config_hash=config_hash(config),
        versions=versions(),
        tables={name: _clean(rows) for name, rows in tables.items()},
        summary=summary,
    )
    target = output_dir or config.output_dir
    if write:
        write_report(report, target, config.format)
    if settings.RECORD_RUNS:
        Base.metadata.create_all(bind=engine)
        db = SessionLocal()
        try:
            record_run(db, report, str(target) if write else None)
        finally:
            db.close()
    logger.info("finished %s", config.scenario)
    return report
