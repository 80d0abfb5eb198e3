"""From raw recordings to an aligned :class:`BivariateRecord`.

R-peak detection follows the Pan-Tompkins QRS detector (band-pass,
derivative, squaring, moving-window integration, dual adaptive thresholds
with search-back). Filtering stages are applied zero-phase so no group-delay
bookkeeping is needed when mapping detections back to the raw ECG.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy import signal as sps

from tempord.errors import (
    BadFactor,
    DegenerateSegment,
    MissingColumn,
    NoBeatsFound,
    NonUniformSampling,
    ParseError,
    RateTooLow,
    TooFewBeats,
)
from tempord.metrics import is_flat
from tempord.types import BivariateRecord, Scaling, TimeSeries

log = logging.getLogger(__name__)

RR_MIN_S = 0.2
RR_MAX_S = 3.0

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class BeatTimes:
    times_s: np.ndarray

    def __post_init__(self):
        times = np.array(self.times_s, dtype=float)
        if times.ndim != 1:
            raise ValueError("beat times must be 1-D")
        if np.any(np.diff(times) <= 0):
            raise ValueError("beat times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times_s", times)

    def __len__(self) -> int:
        return self.times_s.size

    @property
    def rr_s(self) -> np.ndarray:
        return np.diff(self.times_s)


# ---------------------------------------------------------------------------
# scaling


def scale_segment(segment, mode: Scaling) -> np.ndarray:
    """Standardize one analysis segment.

    ``NONE`` returns the input, ``UNIFORM`` maps min..max onto 0..1 and
    ``GAUSSIAN`` subtracts the mean and divides by the sample standard
    deviation. Constant input raises :class:`DegenerateSegment` for the two
    standardizing modes.
    """
    x = np.asarray(segment, dtype=float)
    if x.size < 2:
        raise DegenerateSegment("segment needs at least two samples")
    mode = Scaling(mode)
    if mode is Scaling.NONE:
        return x.copy()
    if is_flat(x):
        raise DegenerateSegment("constant segment cannot be standardized")
    if mode is Scaling.UNIFORM:
        lo = x.min()
        return (x - lo) / (x.max() - lo)
    centered = x - x.mean()
    centered -= centered.mean()  # second pass removes the rounding residue of the first
    return centered / centered.std(ddof=1)


# ---------------------------------------------------------------------------
# QRS detection


def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    kernel = np.full(width, 1.0 / width)
    return np.convolve(x, kernel, mode="same")


def _pan_tompkins_stages(ecg: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (band-passed, integrated) signals."""
    sos = sps.butter(2, [5.0, 15.0], btype="bandpass", fs=fs, output="sos")
    padlen = min(3 * (2 * len(sos) + 1), ecg.size - 1)
    filtered = sps.sosfiltfilt(sos, ecg, padlen=padlen)
    # five-point derivative, centered
    deriv = np.zeros_like(filtered)
    deriv[2:-2] = (-filtered[:-4] - 2 * filtered[1:-3] + 2 * filtered[3:-1] + filtered[4:]) * (fs / 8.0)
    squared = deriv * deriv
    width = max(1, int(round(0.150 * fs)))
    return filtered, _moving_average(squared, width)


def detect_r_peaks(ecg: TimeSeries) -> BeatTimes:
    """Detect R peaks and return their times.

    Candidate fiducial points are local maxima of the integrated signal at
    least 200 ms apart. Each candidate is classified with the two running
    thresholds (integrated and band-passed signal), with search-back for
    beats missed after 166% of the average RR interval and a slope test
    against T waves within 360 ms of the previous beat. Accepted beats are
    moved to the largest raw ECG sample within 50 ms.

    Raises
    ------
    RateTooLow
        Sampling rate under 100 Hz.
    NoBeatsFound
        Fewer than two beats detected.
    """
    fs = ecg.sample_rate_hz
    if fs < 100:
        raise RateTooLow(f"QRS detection needs at least 100 Hz, got {fs} Hz")
    raw = ecg.values
    if raw.size < 16 or is_flat(raw):
        raise NoBeatsFound("signal carries no energy")

    filtered, integrated = _pan_tompkins_stages(raw, fs)
    refractory = int(round(0.200 * fs))
    half_win = int(round(0.075 * fs))
    candidates, _ = sps.find_peaks(integrated, distance=refractory)
    if candidates.size == 0:
        raise NoBeatsFound("no candidate peaks in the integrated signal")

    abs_f = np.abs(filtered)
    slope = np.abs(np.gradient(filtered))
    peak_f = np.array([abs_f[max(0, c - half_win): c + half_win + 1].max() for c in candidates])
    peak_i = integrated[candidates]

    # running peak levels start from a 2 s learning window: its maximum is a beat, its mean is noise
    learn = max(1, int(round(2.0 * fs)))
    spki = integrated[:learn].max()
    npki = integrated[:learn].mean()
    spkf = abs_f[:learn].max()
    npkf = abs_f[:learn].mean()

    qrs: list[int] = []  # indices into candidates
    noise: list[int] = []
    rr_selected: list[int] = []
    last_slope = 0.0

    def thresholds():
        thr_i = npki + 0.25 * (spki - npki)
        thr_f = npkf + 0.25 * (spkf - npkf)
        return thr_i, thr_f

    def accept(k: int, searchback: bool = False):
        nonlocal spki, spkf, last_slope
        w = 0.25 if searchback else 0.125
        spki = w * peak_i[k] + (1 - w) * spki
        spkf = w * peak_f[k] + (1 - w) * spkf
        c = candidates[k]
        last_slope = slope[max(0, c - half_win): c + 1].max()
        if qrs:
            rr = c - candidates[qrs[-1]]
            if rr_selected:
                avg2 = np.mean(rr_selected)
                if 0.92 * avg2 <= rr <= 1.16 * avg2:
                    rr_selected.append(rr)
            else:
                rr_selected.append(rr)
            del rr_selected[:-8]
        qrs.append(k)

    for k, c in enumerate(candidates):
        thr_i, thr_f = thresholds()

        # search-back for a missed beat
        if len(qrs) >= 2 and rr_selected:
            missed_limit = 1.66 * np.mean(rr_selected)
            last = candidates[qrs[-1]]
            if c - last > missed_limit:
                pool = [n for n in noise if candidates[n] - last > refractory and candidates[n] < c]
                pool = [n for n in pool if peak_i[n] > 0.5 * thr_i and peak_f[n] > 0.5 * thr_f]
                if pool:
                    best = max(pool, key=lambda n: peak_i[n])
                    noise.remove(best)
                    accept(best, searchback=True)
                    thr_i, thr_f = thresholds()

        if peak_i[k] > thr_i and peak_f[k] > thr_f:
            if qrs and c - candidates[qrs[-1]] < int(round(0.360 * fs)):
                s = slope[max(0, c - half_win): c + 1].max()
                if s < 0.5 * last_slope:
                    noise.append(k)
                    npki = 0.125 * peak_i[k] + 0.875 * npki
                    npkf = 0.125 * peak_f[k] + 0.875 * npkf
                    continue
            accept(k)
        else:
            noise.append(k)
            npki = 0.125 * peak_i[k] + 0.875 * npki
            npkf = 0.125 * peak_f[k] + 0.875 * npkf

    qrs.sort()
    refine = int(round(0.050 * fs))
    peaks = []
    for k in qrs:
        c = candidates[k]
        lo = max(0, c - refine)
        idx = lo + int(np.argmax(raw[lo: c + refine + 1]))
        if peaks and idx - peaks[-1] < refractory:
            if raw[idx] > raw[peaks[-1]]:
                peaks[-1] = idx
            continue
        peaks.append(idx)
    if len(peaks) < 2:
        raise NoBeatsFound(f"only {len(peaks)} beat(s) detected")
    log.debug("detected %d beats from %d candidates", len(peaks), candidates.size)
    return BeatTimes(ecg.start_time_s + np.asarray(peaks) / fs)


# ---------------------------------------------------------------------------
# tachogram


def rr_points(beats: BeatTimes) -> tuple[np.ndarray, np.ndarray]:
    """RR interval (ms) attached to each beat, with out-of-range points removed.

    Each beat carries the interval ending at it; the first beat carries the
    interval that starts at it so the curve covers the first beat too.
    """
    t = beats.times_s
    if t.size < 2:
        raise TooFewBeats(f"need at least two beats, got {t.size}")
    rr = np.diff(t)
    rr = np.concatenate([rr[:1], rr])
    keep = (rr >= RR_MIN_S) & (rr <= RR_MAX_S)
    if keep.sum() < 2:
        raise TooFewBeats("fewer than two beats survive the RR range guard")
    return t[keep], rr[keep] * 1000.0


def build_tachogram(beats: BeatTimes, target_rate_hz: float) -> TimeSeries:
    """Linearly interpolate the RR-interval curve onto a uniform grid.

    The grid starts at the first retained beat and stops at or before the
    last one.
    """
    if not target_rate_hz > 0:
        raise ValueError("target_rate_hz must be positive")
    t, rr = rr_points(beats)
    n = int(math.floor((t[-1] - t[0]) * target_rate_hz + 1e-9)) + 1
    grid = t[0] + np.arange(n) / target_rate_hz
    return TimeSeries(np.interp(grid, t, rr), target_rate_hz, t[0])


def tachogram_on_grid(beats: BeatTimes, reference: TimeSeries) -> TimeSeries:
    """Tachogram sampled on the part of ``reference``'s grid inside the beat span."""
    t, rr = rr_points(beats)
    times = reference.times
    inside = np.flatnonzero((times >= t[0] - 1e-9) & (times <= t[-1] + 1e-9))
    if inside.size == 0:
        raise TooFewBeats("beat span does not cover any reference sample")
    grid = times[inside]
    return TimeSeries(np.interp(grid, t, rr), reference.sample_rate_hz, reference.time_of(int(inside[0])))


# ---------------------------------------------------------------------------
# resampling


def decimate(ts: TimeSeries, factor: int) -> TimeSeries:
    """Zero-phase anti-alias low-pass, then keep every ``factor``-th sample.

    The low-pass is a 4th-order Butterworth run forward and backward with its
    cutoff at 40% of the output Nyquist frequency.
    """
    if isinstance(factor, bool) or int(factor) != factor or factor < 1:
        raise BadFactor(f"factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return ts
    x = ts.values
    if x.size >= 2:
        sos = sps.butter(4, 0.4 / factor, output="sos")
        padlen = min(3 * (2 * len(sos) + 1), x.size - 1)
        x = sps.sosfiltfilt(sos, x, padlen=padlen)
    return TimeSeries(x[::factor], ts.sample_rate_hz / factor, ts.start_time_s)


# ---------------------------------------------------------------------------
# CSV input


def _snap_rate(rate: float) -> float:
    nearest = round(rate)
    if nearest > 0 and abs(rate - nearest) <= 1e-6 * rate:
        return float(nearest)
    return rate


def read_columns(path: PathLike, columns: Sequence[str]) -> tuple[np.ndarray, dict[str, np.ndarray], float]:
    """Read ``time_s`` plus ``columns`` from a CSV file.

    Returns ``(time, {column: values}, sample_rate_hz)`` after checking that
    time steps are uniform within a relative tolerance of 1e-6.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for name in ("time_s", *columns):
            if name not in header:
                raise MissingColumn(f"{path}: missing column {name!r}")
        idx = [header.index(name) for name in ("time_s", *columns)]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(row[i]) for i in idx])
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: cannot parse row {row!r}") from None
    if len(rows) < 2:
        raise ParseError(f"{path}: need at least two samples to infer the sampling rate")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite values")
    time = data[:, 0]
    steps = np.diff(time)
    mean_step = (time[-1] - time[0]) / (time.size - 1)
    if mean_step <= 0 or np.any(np.abs(steps - mean_step) > 1e-6 * mean_step):
        raise NonUniformSampling(f"{path}: time steps are not uniform")
    rate = _snap_rate(1.0 / mean_step)
    return time, {name: data[:, k + 1] for k, name in enumerate(columns)}, rate


def load_series_csv(path: PathLike, column: str = "ecg") -> TimeSeries:
    time, cols, rate = read_columns(path, [column])
    return TimeSeries(cols[column], rate, time[0])


def load_bivariate_csv(path: PathLike, columns: Sequence[str] = ("ch1", "ch2")) -> BivariateRecord:
    """Load a ``time_s,ch1,ch2`` file; ``ch1`` becomes the stationary signal."""
    c1, c2 = columns
    time, cols, rate = read_columns(path, [c1, c2])
    return BivariateRecord(
        TimeSeries(cols[c1], rate, time[0]),
        TimeSeries(cols[c2], rate, time[0]),
        (c1, c2),
    )
