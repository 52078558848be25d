from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from models.errors import InternalError, InvalidParameterError
from models.types import RunRecord, ThroughputTrace


@dataclass(frozen=True)
class Summary:
    """Statistics over the retained iterations of a run.

    Pure and serializable; percentiles use linear interpolation.
    """
    count: int
    mean: float
    std: float
    p50: float
    p99: float
    minimum: float
    maximum: float


def compute_summary(samples: Sequence[float]) -> Summary:
    """Summarize a list of completion times.

    Parameters
    ----------
    samples:
        Completion times in ns, already stripped of warmup iterations.

    Returns
    -------
    Summary:
        Deterministic for a given input order.
    """
    if len(samples) == 0:
        raise InvalidParameterError("no samples to summarize")
    arr = np.asarray(samples, dtype=float)
    return Summary(
        count=int(arr.size),
        mean=float(arr.mean()),
        std=float(arr.std()),
        p50=float(np.percentile(arr, 50)),
        p99=float(np.percentile(arr, 99)),
        minimum=float(arr.min()),
        maximum=float(arr.max()),
    )


def summarize_record(record: RunRecord) -> Summary:
    return compute_summary(record.retained)


def compute_ratio(baseline: RunRecord, congested: RunRecord) -> float:
    """mean(baseline) / mean(congested); 1 is unaffected, lower is slower."""
    if not baseline.retained or not congested.retained:
        raise InvalidParameterError("ratio needs retained samples on both sides")
    b = summarize_record(baseline).mean
    c = summarize_record(congested).mean
    if b <= 0 or c <= 0:
        raise InternalError("zero mean runtime")
    return b / c


def bandwidth_gbps(bytes_per_rank: int, mean_ns: float) -> float:
    """Algorithmic bandwidth seen by one rank."""
    if mean_ns <= 0:
        return 0.0
    return bytes_per_rank * 8 / mean_ns


@dataclass(frozen=True)
class TraceStats:
    mean_bps: float
    cov: float
    peak_to_trough: float
    cycles: int


def trace_stats(trace: ThroughputTrace, *, trim: int = 1) -> TraceStats:
    """Mean rate, coefficient of variation, peak/trough and oscillation count.

    The first and last `trim` samples are partial buckets and are skipped
    when enough samples exist.
    """
    rates = [r for _, r in trace.samples]
    if not rates:
        raise InvalidParameterError("empty throughput trace")
    if len(rates) > 2 * trim + 1:
        rates = rates[trim:len(rates) - trim]
    arr = np.asarray(rates, dtype=float)
    mean = float(arr.mean())
    cov = float(arr.std() / mean) if mean > 0 else 0.0
    lo, hi = float(arr.min()), float(arr.max())
    ptt = math.inf if lo <= 0 else hi / lo
    if hi == lo:
        ptt = 1.0
    # upward crossings of the mean count oscillation cycles
    above = arr > mean
    cycles = int(np.count_nonzero(above[1:] & ~above[:-1]))
    return TraceStats(mean_bps=mean, cov=cov, peak_to_trough=ptt, cycles=cycles)
