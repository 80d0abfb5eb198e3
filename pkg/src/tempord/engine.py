"""Window x shift sweep, causal-vector extraction and stability statistics."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

import numpy as np

from tempord import _kernel
from tempord.types import (
    AnalysisConfig,
    BivariateRecord,
    CausalVector,
    DistanceKind,
    Method,
    StabilityReport,
    StableRun,
    TemporalOrderMatrix,
    validate_config,
)

log = logging.getLogger(__name__)

THREADS_ENV = "TEMPORD_THREADS"


def default_workers() -> int:
    """Worker count from ``TEMPORD_THREADS`` (0 or unset = one per CPU)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def compute_matrix(
    record: BivariateRecord, config: AnalysisConfig, workers: Optional[int] = None
) -> TemporalOrderMatrix:
    """Fill the temporal-order matrix.

    Row ``w`` compares ``signal1[t, t+L)`` (``t`` = w-th window start) with
    ``signal2`` starting ``s`` samples later for every shift ``s`` on the
    grid. A positive best shift therefore means signal1 precedes signal2.
    Cells whose second segment leaves the signal, or whose segments are
    degenerate under the chosen scaling/metric, are masked.

    Rows are split into contiguous blocks evaluated on ``workers`` threads;
    the result is bit-identical for any worker count.
    """
    validate_config(config, record)
    x = np.ascontiguousarray(record.signal1.values, dtype=float)
    y = np.ascontiguousarray(record.signal2.values, dtype=float)
    L = config.segment_len_samples
    starts = config.window_starts(x.size).astype(np.int64)
    shifts = config.shifts.astype(np.int64)
    method = _kernel.LM if config.method is Method.LM else _kernel.TD
    kind = _kernel.MANHATTAN if config.distance_kind is DistanceKind.MANHATTAN else _kernel.FOURIER
    scaling = int(config.scaling)

    stats1 = _kernel.window_stats(x, starts, L, scaling)
    stats2 = _kernel.window_stats(y, np.arange(y.size - L + 1, dtype=np.int64), L, scaling)

    n_rows = starts.size
    scores = np.zeros((n_rows, shifts.size))
    defined = np.zeros((n_rows, shifts.size), dtype=bool)
    args = (x, y, starts, shifts, record.offset_samples, L, method, kind, scaling, *stats1, *stats2)

    workers = default_workers() if workers is None else max(1, int(workers))
    workers = min(workers, n_rows)
    if workers <= 1:
        _kernel.fill_rows(*args, 0, n_rows, scores, defined)
    else:
        bounds = np.linspace(0, n_rows, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_kernel.fill_rows, *args, int(lo), int(hi), scores, defined)
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            for f in futures:
                f.result()
    log.debug("filled %dx%d matrix with %d worker(s)", n_rows, shifts.size, workers)
    return TemporalOrderMatrix(
        np.ma.array(scores, mask=~defined),
        starts,
        shifts,
        record.sample_rate_hz,
        config.method,
        config.distance_kind,
        record.signal1.start_time_s,
    )


def _tie_order(shifts: np.ndarray) -> np.ndarray:
    # smallest |shift| first, then the more negative one
    return np.lexsort((shifts, np.abs(shifts)))


def extract_causal_vector(matrix: TemporalOrderMatrix, threshold: Optional[float] = None) -> CausalVector:
    """Best shift per window.

    The maximum adjusted R-squared (LM) or the minimum distance (TD) among
    defined cells; with a threshold only cells strictly above (LM) or below
    (TD) it compete. Rows without a candidate stay undefined.
    """
    scores = matrix.scores.filled(0.0)
    candidates = matrix.defined.copy()
    if threshold is not None:
        if matrix.higher_is_better:
            candidates &= scores > threshold
        else:
            candidates &= scores < threshold
    fill = -np.inf if matrix.higher_is_better else np.inf
    masked = np.where(candidates, scores, fill)
    best = masked.max(axis=1) if matrix.higher_is_better else masked.min(axis=1)
    ties = candidates & (masked == best[:, None])

    order = _tie_order(matrix.shifts)
    pick = order[np.argmax(ties[:, order], axis=1)]
    has = candidates.any(axis=1)
    chosen = matrix.shifts[pick]
    step = int(matrix.shifts[1] - matrix.shifts[0]) if matrix.shifts.size > 1 else 1
    return CausalVector(
        np.ma.array(chosen, mask=~has),
        matrix.window_starts,
        matrix.sample_rate_hz,
        matrix.start_time_s,
        step,
    )


def stability_report(cv: CausalVector, config: AnalysisConfig, signal_duration_s: float) -> StabilityReport:
    """Mean/SD of the causal vector and its stable runs.

    A stable run is a maximal stretch of consecutive defined windows whose
    shifts stay within ``stable_tolerance_steps`` shift steps of the run's
    first value.
    """
    fs = cv.sample_rate_hz
    step_s = config.window_step_samples / fs
    tol = config.stable_tolerance_steps * config.shift_step_samples
    values = cv.shifts.data
    defined = cv.defined
    times = cv.window_start_times_s

    runs: list[StableRun] = []
    i, n = 0, len(cv)
    while i < n:
        if not defined[i]:
            i += 1
            continue
        anchor = values[i]
        j = i + 1
        while j < n and defined[j] and abs(values[j] - anchor) <= tol:
            j += 1
        run_ms = values[i:j] * (1000.0 / fs)
        runs.append(StableRun(float(times[i]), (j - i) * step_s, float(run_ms.mean())))
        i = j

    shifts_ms = values[defined] * (1000.0 / fs)
    mean = float(shifts_ms.mean()) if shifts_ms.size else None
    sd = float(shifts_ms.std(ddof=1)) if shifts_ms.size > 1 else None
    if signal_duration_s > 0:
        ratio = 100.0 * defined.sum() * step_s / signal_duration_s
    else:
        ratio = 0.0
    return StabilityReport(
        mean_shift_ms=mean,
        sd_shift_ms=sd,
        longest_stable_run_s=max((r.duration_s for r in runs), default=0.0),
        defined_ratio_percent=float(min(100.0, max(0.0, ratio))),
        stable_runs=runs,
        mean_run_duration_ms=float(np.mean([r.duration_s for r in runs]) * 1000.0) if runs else None,
    )


class AnalysisResult(NamedTuple):
    matrix: TemporalOrderMatrix
    causal_vector: CausalVector
    report: StabilityReport


def run_analysis(
    record: BivariateRecord, config: Optional[AnalysisConfig] = None, workers: Optional[int] = None
) -> AnalysisResult:
    """Matrix, causal vector and stability report in one call.

    Without a config: Gaussian scaling, TD-Manhattan, 10 s segments, shifts
    from -2 s to +2 s in one-sample steps, no threshold.
    """
    if config is None:
        config = AnalysisConfig.from_seconds(record.sample_rate_hz)
    matrix = compute_matrix(record, config, workers=workers)
    cv = extract_causal_vector(matrix, config.threshold)
    report = stability_report(cv, config, record.signal1.duration_s)
    return AnalysisResult(matrix, cv, report)
