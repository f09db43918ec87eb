# fcqn/source.py
"""
Poissonian count model of the multiplexed pair source.

For channel pair j at pump power P the true pair rate is R = k_j * P (k_j in
MHz/mW). Each arm detects a fraction η of the pairs, uncorrelated singles
overlap inside the coincidence window at N_s * N_i * window, and the
coincidence histogram carries one peak per laser period: the zero-delay peak
holds true plus accidental coincidences, every side peak only accidentals.
"""
from __future__ import annotations

import logging

import numpy as np

from fcqn.errors import MeasurementError, ParameterError
from fcqn.schemas import CountRecord, SourceParams

logger = logging.getLogger(__name__)

NS = 1e-9
MHZ = 1e6


def pgr(record: CountRecord) -> float:
    """Klyshko pair-generation rate N_s·N_i/N_c in Hz."""
    if record.N_c <= 0:
        raise MeasurementError(f"no net coincidences on channel pair {record.channel_pair}; PGR undefined")
    return record.N_s * record.N_i / record.N_c


def car_from_peaks(c_max: float, c_acc: float) -> float:
    if c_acc <= 0:
        raise MeasurementError("accidental level is zero; CAR undefined")
    return (c_max - c_acc) / c_acc


def _peak_counts(record: CountRecord) -> tuple[float, float]:
    delays = np.asarray(record.delays, dtype=float)
    counts = np.asarray(record.histogram, dtype=float)
    if delays.size == 0:
        raise MeasurementError("record carries no coincidence histogram")
    order = np.rint(delays / record.rep_period)
    on_peak = np.isclose(delays, order * record.rep_period, atol=record.window / 2)
    zero = on_peak & (order == 0)
    side = on_peak & (order != 0)
    if not zero.any() or not side.any():
        raise MeasurementError("histogram needs the zero-delay peak and at least one side peak")
    return float(counts[zero].sum()), float(counts[side].mean())


def car(record: CountRecord) -> float:
    """(C_max − C_acc)/C_acc with C_acc the mean side-peak height."""
    c_max, c_acc = _peak_counts(record)
    return car_from_peaks(c_max, c_acc)


def expected_rates(params: SourceParams, channel_pair: int) -> dict[str, float]:
    """Mean singles, true-coincidence and accidental rates (counts/s) for one channel pair."""
    if not 1 <= channel_pair <= len(params.slope_k_j):
        raise ParameterError(f"channel pair {channel_pair} not in 1..{len(params.slope_k_j)}")
    pair_rate = params.slope_k_j[channel_pair - 1] * params.pump_power * MHZ
    eta = params.efficiency(channel_pair)
    singles = eta * pair_rate
    true_c = eta * eta * pair_rate
    acc = singles * singles * params.window * NS
    return {"pair_rate": pair_rate, "N_s": singles, "N_i": singles, "true": true_c, "accidental": acc}


def expected_car(params: SourceParams, channel_pair: int) -> float:
    rates = expected_rates(params, channel_pair)
    if rates["accidental"] <= 0:
        raise MeasurementError("no accidentals at zero pump power; CAR undefined")
    return rates["true"] / rates["accidental"]


def simulate_counts(params: SourceParams, channel_pair: int, duration: float, seed: int) -> CountRecord:
    """Sample singles and the coincidence histogram for ``duration`` seconds."""
    if duration <= 0:
        raise ParameterError("duration must be positive")
    rng = np.random.default_rng(seed)
    rates = expected_rates(params, channel_pair)

    singles_s = rng.poisson(rates["N_s"] * duration)
    singles_i = rng.poisson(rates["N_i"] * duration)

    orders = np.arange(-params.side_peaks, params.side_peaks + 1)
    delays = orders * params.rep_period
    means = np.full(orders.size, rates["accidental"] * duration)
    means[orders == 0] += rates["true"] * duration
    histogram = rng.poisson(means)

    c0 = histogram[orders == 0].sum()
    c_side = histogram[orders != 0].mean()
    net = max(float(c0) - float(c_side), 0.0)
    n_s, n_i = singles_s / duration, singles_i / duration
    n_c = min(net / duration, n_s, n_i)

    logger.debug("pair %d at %.3f mW: N_s=%.0f N_i=%.0f N_c=%.0f", channel_pair, params.pump_power, n_s, n_i, n_c)
    return CountRecord(
        channel_pair=channel_pair,
        pump_power=params.pump_power,
        duration=duration,
        N_s=n_s,
        N_i=n_i,
        N_c=n_c,
        delays=tuple(float(d) for d in delays),
        histogram=tuple(int(c) for c in histogram),
        rep_period=params.rep_period,
        window=params.window,
        seed=seed,
    )
