"""Shared domain types.

Shifts, segment lengths and window positions are integers counted in
samples; seconds and milliseconds appear only in derived properties and at
the I/O boundary. Undefined matrix cells and causal-vector entries are
carried by the mask of a :class:`numpy.ma.MaskedArray`, never by a sentinel
score.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from tempord.errors import (
    BadThreshold,
    ConfigError,
    EmptyShiftRange,
    InvalidSeries,
    MisalignedGrid,
    NoOverlap,
    RateMismatch,
    SegmentTooLong,
    SegmentTooShort,
)

# relative tolerance used whenever seconds must map onto whole samples
GRID_RTOL = 1e-9


class Method(str, enum.Enum):
    LM = "lm"
    TD = "td"


class DistanceKind(str, enum.Enum):
    MANHATTAN = "manhattan"
    FOURIER = "fourier"


class Scaling(enum.IntEnum):
    NONE = 0
    UNIFORM = 1
    GAUSSIAN = 2


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def seconds_to_samples(seconds: float, sample_rate_hz: float, what: str = "value") -> int:
    """Convert a duration to a whole number of samples.

    Raises :class:`ConfigError` when ``seconds * sample_rate_hz`` is not an
    integer (within a relative tolerance of 1e-9); silently rounding would
    distort the shift grid.
    """
    exact = seconds * sample_rate_hz
    n = round(exact)
    if abs(exact - n) > GRID_RTOL * max(1.0, abs(exact)):
        raise ConfigError(
            f"{what} of {seconds!r} s is not a whole number of samples at {sample_rate_hz!r} Hz"
        )
    return int(n)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar signal.

    The time of sample ``i`` is ``start_time_s + i / sample_rate_hz``.
    """

    values: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise InvalidSeries("values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise InvalidSeries("values must be finite")
        rate = float(self.sample_rate_hz)
        if not (math.isfinite(rate) and rate > 0):
            raise InvalidSeries(f"sample_rate_hz must be positive, got {self.sample_rate_hz!r}")
        if not math.isfinite(float(self.start_time_s)):
            raise InvalidSeries("start_time_s must be finite")
        object.__setattr__(self, "values", _frozen_array(values))
        object.__setattr__(self, "sample_rate_hz", rate)
        object.__setattr__(self, "start_time_s", float(self.start_time_s))

    def __len__(self) -> int:
        return self.values.size

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self)) / self.sample_rate_hz

    def time_of(self, index: int) -> float:
        return self.start_time_s + index / self.sample_rate_hz

    def index_of(self, time_s: float) -> int:
        return int(round((time_s - self.start_time_s) * self.sample_rate_hz))


@dataclass(frozen=True, eq=False)
class BivariateRecord:
    """Two channels on a shared sample grid.

    ``signal1`` is held stationary during analysis and ``signal2`` is shifted.
    """

    signal1: TimeSeries
    signal2: TimeSeries
    labels: tuple[str, str] = ("signal1", "signal2")

    def __post_init__(self):
        r1, r2 = self.signal1.sample_rate_hz, self.signal2.sample_rate_hz
        if abs(r1 - r2) > 1e-12 * max(r1, r2):
            raise RateMismatch(f"sample rates differ: {r1} Hz vs {r2} Hz")
        offset = (self.signal2.start_time_s - self.signal1.start_time_s) * r1
        if abs(offset - round(offset)) > 1e-6:
            raise MisalignedGrid("signal start times differ by a fractional number of samples")
        end1 = self.signal1.start_time_s + self.signal1.duration_s
        end2 = self.signal2.start_time_s + self.signal2.duration_s
        if min(end1, end2) <= max(self.signal1.start_time_s, self.signal2.start_time_s):
            raise NoOverlap("signals do not overlap in time")
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != 2:
            raise InvalidSeries("labels must be a pair of names")
        object.__setattr__(self, "labels", labels)

    @property
    def sample_rate_hz(self) -> float:
        return self.signal1.sample_rate_hz

    @property
    def offset_samples(self) -> int:
        """Index of signal1's first sample on signal2's grid, negated.

        Signal2 sample ``j`` is simultaneous with signal1 sample ``j + offset``.
        """
        return int(round((self.signal2.start_time_s - self.signal1.start_time_s) * self.sample_rate_hz))

    def swapped(self) -> "BivariateRecord":
        return BivariateRecord(self.signal2, self.signal1, (self.labels[1], self.labels[0]))


@dataclass(frozen=True)
class AnalysisConfig:
    method: Method = Method.TD
    distance_kind: DistanceKind = DistanceKind.MANHATTAN
    scaling: Scaling = Scaling.GAUSSIAN
    segment_len_samples: int = 250
    shift_min_samples: int = -50
    shift_max_samples: int = 50
    shift_step_samples: int = 1
    window_step_samples: int = 1
    threshold: Optional[float] = None
    stable_tolerance_steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "distance_kind", DistanceKind(self.distance_kind))
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        for name in ("segment_len_samples", "shift_min_samples", "shift_max_samples",
                     "shift_step_samples", "window_step_samples", "stable_tolerance_steps"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.segment_len_samples < 1:
            raise ConfigError("segment_len_samples must be positive")
        if self.shift_step_samples < 1 or self.window_step_samples < 1:
            raise ConfigError("step sizes must be positive")
        if self.stable_tolerance_steps < 0:
            raise ConfigError("stable_tolerance_steps must be non-negative")
        if self.shift_min_samples > self.shift_max_samples:
            raise EmptyShiftRange(
                f"shift_min ({self.shift_min_samples}) exceeds shift_max ({self.shift_max_samples})"
            )
        if self.threshold is not None:
            t = float(self.threshold)
            if not math.isfinite(t):
                raise BadThreshold("threshold must be finite")
            if self.method is Method.LM and not 0.0 <= t <= 1.0:
                raise BadThreshold(f"LM threshold must lie in [0, 1], got {t}")
            if self.method is Method.TD and not t > 0.0:
                raise BadThreshold(f"TD threshold must be positive, got {t}")
            object.__setattr__(self, "threshold", t)
        min_len = 3 if self.method is Method.LM else (2 if self.scaling or self.distance_kind is DistanceKind.FOURIER else 1)
        if self.segment_len_samples < min_len:
            raise SegmentTooShort(f"segment must hold at least {min_len} samples for this configuration")

    @classmethod
    def from_seconds(
        cls,
        sample_rate_hz: float,
        *,
        segment_s: float = 10.0,
        shift_min_s: float = -2.0,
        shift_max_s: float = 2.0,
        shift_step_s: Optional[float] = None,
        window_step_s: Optional[float] = None,
        **kwargs,
    ) -> "AnalysisConfig":
        """Build a config from durations; steps default to one sample."""
        conv = lambda s, what: seconds_to_samples(s, sample_rate_hz, what)  # noqa: E731
        return cls(
            segment_len_samples=conv(segment_s, "segment length"),
            shift_min_samples=conv(shift_min_s, "shift_min"),
            shift_max_samples=conv(shift_max_s, "shift_max"),
            shift_step_samples=1 if shift_step_s is None else conv(shift_step_s, "shift step"),
            window_step_samples=1 if window_step_s is None else conv(window_step_s, "window step"),
            **kwargs,
        )

    @property
    def shifts(self) -> np.ndarray:
        return np.arange(self.shift_min_samples, self.shift_max_samples + 1, self.shift_step_samples)

    def window_starts(self, n_samples: int) -> np.ndarray:
        return np.arange(0, n_samples - self.segment_len_samples + 1, self.window_step_samples)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["distance_kind"] = self.distance_kind.value
        d["scaling"] = self.scaling.name.lower()
        return d


def validate_config(config: AnalysisConfig, record: BivariateRecord) -> AnalysisConfig:
    """Check ``config`` against ``record`` and return it unchanged.

    Raises a :class:`ConfigError` subclass naming the violated constraint.
    """
    n1, n2 = len(record.signal1), len(record.signal2)
    L = config.segment_len_samples
    if L > n1 or L > n2:
        raise SegmentTooLong(f"segment of {L} samples exceeds signal length ({n1}, {n2})")
    starts = config.window_starts(n1)
    j = starts[:, None] + config.shifts[None, :] - record.offset_samples
    if not np.any((j >= 0) & (j <= n2 - L)):
        raise NoOverlap("no (window, shift) pair keeps both segments inside the signals")
    return config


@dataclass(frozen=True, eq=False)
class TemporalOrderMatrix:
    """Score grid over (window index, shift index); masked cells are undefined."""

    scores: np.ma.MaskedArray
    window_starts: np.ndarray
    shifts: np.ndarray
    sample_rate_hz: float
    method: Method
    distance_kind: DistanceKind
    start_time_s: float = 0.0

    def __post_init__(self):
        scores = np.ma.array(self.scores, dtype=float, copy=True)
        scores.mask = np.ma.getmaskarray(scores).copy()
        windows = np.array(self.window_starts, dtype=np.int64)
        shifts = np.array(self.shifts, dtype=np.int64)
        if scores.shape != (windows.size, shifts.size):
            raise ValueError("scores shape does not match the window/shift axes")
        for name, axis in (("window_starts", windows), ("shifts", shifts)):
            steps = np.diff(axis)
            if steps.size and (steps[0] <= 0 or np.any(steps != steps[0])):
                raise ValueError(f"{name} must be strictly increasing with a constant step")
        defined = scores.compressed()
        if not np.all(np.isfinite(defined)):
            raise ValueError("defined scores must be finite")
        method = Method(self.method)
        if method is Method.LM and np.any(defined > 1.0):
            raise ValueError("adjusted R-squared scores cannot exceed 1")
        if method is Method.TD and np.any(defined < 0.0):
            raise ValueError("distances cannot be negative")
        scores.data[scores.mask] = 0.0
        scores.data.setflags(write=False)
        windows.setflags(write=False)
        shifts.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "window_starts", windows)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "distance_kind", DistanceKind(self.distance_kind))

    @property
    def shape(self) -> tuple[int, int]:
        return self.scores.shape

    @property
    def defined(self) -> np.ndarray:
        return ~np.ma.getmaskarray(self.scores)

    @property
    def shifts_s(self) -> np.ndarray:
        return self.shifts / self.sample_rate_hz

    @property
    def window_start_times_s(self) -> np.ndarray:
        return self.start_time_s + self.window_starts / self.sample_rate_hz

    @property
    def higher_is_better(self) -> bool:
        return self.method is Method.LM


@dataclass(frozen=True, eq=False)
class CausalVector:
    """Best shift per window, in samples; masked entries are undefined."""

    shifts: np.ma.MaskedArray
    window_starts: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0
    shift_step_samples: int = 1

    def __post_init__(self):
        shifts = np.ma.array(self.shifts, dtype=np.int64, copy=True)
        shifts.mask = np.ma.getmaskarray(shifts).copy()
        shifts.data[shifts.mask] = 0
        windows = np.array(self.window_starts, dtype=np.int64)
        if shifts.shape != windows.shape:
            raise ValueError("causal vector and window axis differ in length")
        shifts.data.setflags(write=False)
        windows.setflags(write=False)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "window_starts", windows)

    def __len__(self) -> int:
        return self.shifts.size

    @property
    def defined(self) -> np.ndarray:
        return ~np.ma.getmaskarray(self.shifts)

    @property
    def entries_s(self) -> np.ma.MaskedArray:
        return self.shifts / self.sample_rate_hz

    @property
    def entries_ms(self) -> np.ma.MaskedArray:
        return self.shifts * (1000.0 / self.sample_rate_hz)

    @property
    def window_start_times_s(self) -> np.ndarray:
        return self.start_time_s + self.window_starts / self.sample_rate_hz


class StableRun(NamedTuple):
    start_time_s: float
    duration_s: float
    shift_ms: float


@dataclass(frozen=True)
class StabilityReport:
    mean_shift_ms: Optional[float]
    sd_shift_ms: Optional[float]
    longest_stable_run_s: float
    defined_ratio_percent: float
    stable_runs: Sequence[StableRun] = field(default_factory=tuple)
    mean_run_duration_ms: Optional[float] = None

    def __post_init__(self):
        runs = tuple(StableRun(*r) for r in self.stable_runs)
        object.__setattr__(self, "stable_runs", runs)
        longest = max((r.duration_s for r in runs), default=0.0)
        if not math.isclose(self.longest_stable_run_s, longest, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("longest_stable_run_s must equal the longest listed run")
        if not 0.0 <= self.defined_ratio_percent <= 100.0:
            raise ValueError("defined_ratio_percent must lie in [0, 100]")

    def to_dict(self) -> dict:
        return {
            "mean_shift_ms": self.mean_shift_ms,
            "sd_shift_ms": self.sd_shift_ms,
            "longest_stable_run_s": self.longest_stable_run_s,
            "defined_ratio_percent": self.defined_ratio_percent,
            "stable_runs": [r._asdict() for r in self.stable_runs],
            "mean_run_duration_ms": self.mean_run_duration_ms,
        }
