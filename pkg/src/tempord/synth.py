"""Ground-truth signal pairs with a known lag.

Two generators: a lagged sinusoid pair, and an RSA-like pair in which a
tachogram oscillates with breathing but leads the tidal-volume curve by an
injected lag. The lag is a generator input, not the output of any
physiological model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from tempord.errors import OffGridLag
from tempord.types import BivariateRecord, TimeSeries


class SynthKind(str, enum.Enum):
    LAGGED_SINE = "lagged-sine"
    RSA_PAIR = "rsa-pair"


@dataclass(frozen=True)
class SynthSpec:
    kind: SynthKind = SynthKind.LAGGED_SINE
    duration_s: float = 120.0
    sample_rate_hz: float = 25.0
    breath_rate_bpm: float = 6.0
    frequency_hz: Optional[float] = None  # overrides breath_rate_bpm for LAGGED_SINE
    depth_factor: float = 1.0
    lag_s: float = 0.0
    noise_sd: float = 0.0
    rng_seed: int = 0
    rr_baseline_ms: float = 1000.0
    rr_gain_ms: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SynthKind(self.kind))
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if not self.noise_sd >= 0:
            raise ValueError("noise_sd must be non-negative")
        if not self.breath_rate_bpm > 0:
            raise ValueError("breath_rate_bpm must be positive")
        if self.frequency_hz is not None and not self.frequency_hz > 0:
            raise ValueError("frequency_hz must be positive")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def frequency(self) -> float:
        if self.frequency_hz is not None:
            return self.frequency_hz
        return self.breath_rate_bpm / 60.0

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration_s * self.sample_rate_hz + 1e-9))

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate_hz


def gen_lagged_sine(spec: SynthSpec) -> BivariateRecord:
    """``signal2`` is ``signal1`` delayed by ``lag_s`` (plus independent noise).

    The lag must fall on the sample grid so the engine can recover it
    exactly.
    """
    lag_samples = spec.lag_s * spec.sample_rate_hz
    if abs(lag_samples - round(lag_samples)) > 1e-9 * max(1.0, abs(lag_samples)):
        raise OffGridLag(f"lag {spec.lag_s} s is not a multiple of 1/{spec.sample_rate_hz} s")
    rng = np.random.default_rng(spec.rng_seed)
    t = spec.times()
    w = 2 * np.pi * spec.frequency
    s1 = np.sin(w * t)
    s2 = np.sin(w * (t - spec.lag_s))
    if spec.noise_sd:
        s1 = s1 + rng.normal(0.0, spec.noise_sd, t.size)
        s2 = s2 + rng.normal(0.0, spec.noise_sd, t.size)
    return BivariateRecord(
        TimeSeries(s1, spec.sample_rate_hz),
        TimeSeries(s2, spec.sample_rate_hz),
        ("signal1", "signal2"),
    )


def gen_rsa_pair(spec: SynthSpec) -> BivariateRecord:
    """Tachogram (ms, ``signal1``) leading tidal volume (``signal2``) by ``lag_s``."""
    rng = np.random.default_rng(spec.rng_seed)
    t = spec.times()
    w = 2 * np.pi * spec.breath_rate_bpm / 60.0
    tidal = spec.depth_factor * np.sin(w * t)
    tacho = spec.rr_baseline_ms + spec.rr_gain_ms * np.sin(w * (t + spec.lag_s))
    if spec.noise_sd:
        tacho = tacho + rng.normal(0.0, spec.noise_sd, t.size)
    return BivariateRecord(
        TimeSeries(tacho, spec.sample_rate_hz),
        TimeSeries(tidal, spec.sample_rate_hz),
        ("tachogram", "tidal_volume"),
    )


def generate(spec: SynthSpec) -> BivariateRecord:
    if spec.kind is SynthKind.RSA_PAIR:
        return gen_rsa_pair(spec)
    return gen_lagged_sine(spec)
