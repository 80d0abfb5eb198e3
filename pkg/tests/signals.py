"""Signal generators used only by the tests."""

import numpy as np

from tempord.types import TimeSeries


def spike_train(beat_times, duration_s, fs=250.0, width_s=0.020, amplitude=1.0, noise_sd=0.0, seed=0):
    """Zero baseline with a triangular spike centred on each beat time."""
    t = np.arange(int(round(duration_s * fs))) / fs
    x = np.zeros_like(t)
    half = width_s / 2
    for b in beat_times:
        near = np.abs(t - b) < half
        x[near] = np.maximum(x[near], amplitude * (1 - np.abs(t[near] - b) / half))
    if noise_sd:
        x = x + np.random.default_rng(seed).normal(0.0, noise_sd, t.size)
    return TimeSeries(x, fs)


def regular_beats(bpm, duration_s, fs=250.0, start_s=0.5):
    """Beat times on the sample grid at a constant rate, ending 0.5 s before the end."""
    rr = round(60.0 / bpm * fs) / fs
    return np.arange(start_s, duration_s - 0.5, rr)
