"""Sampled (axis, rate) series shared by the simulators and the fitters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CW = "CW"
CCW = "CCW"


@dataclass(frozen=True)
class SpectrumSeries:
    """Rates sampled on a strictly increasing axis.

    ``freq`` holds the sample axis.  For spectra it is an angular frequency
    (rad/s) relative to a stated reference; for spacing scans it is the
    atomic spacing in nm (``axis_name`` says which).  ``error`` is an
    optional per-point standard deviation used for inverse-variance weights.
    """

    freq: np.ndarray
    rate: np.ndarray
    channel: str = ""
    axis_name: str = "freq"
    error: np.ndarray | None = field(default=None)

    def __post_init__(self):
        freq = np.asarray(self.freq, dtype=float)
        rate = np.asarray(self.rate, dtype=float)
        if freq.ndim != 1 or rate.shape != freq.shape:
            raise ValueError("freq and rate must be 1-D arrays of equal length")
        if freq.size > 1 and np.any(np.diff(freq) <= 0):
            raise ValueError("series axis must be strictly increasing")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "rate", rate)
        if self.error is not None:
            error = np.asarray(self.error, dtype=float)
            if error.shape != freq.shape:
                raise ValueError("error column must match the series length")
            object.__setattr__(self, "error", error)

    def __len__(self):
        return self.freq.size

    def with_rate(self, rate, error=None) -> SpectrumSeries:
        return SpectrumSeries(self.freq, rate, self.channel, self.axis_name, error)


def add_noise(series: SpectrumSeries, fraction: float, rng: np.random.Generator,
              mode: str = "multiplicative") -> SpectrumSeries:
    """Return a noisy copy of ``series``.

    ``multiplicative``: rate * (1 + fraction * N(0, 1)).
    ``shot``: Gaussian with variance proportional to rate, scaled so that a
    point at the series maximum has relative deviation ``fraction``.
    Negative draws are kept; clipping would bias the fits.
    """
    rate = series.rate
    if mode == "multiplicative":
        sigma = fraction * np.abs(rate)
    elif mode == "shot":
        peak = float(np.max(np.abs(rate))) or 1.0
        sigma = fraction * np.sqrt(np.abs(rate) * peak)
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    noisy = rate + sigma * rng.standard_normal(rate.shape)
    return series.with_rate(noisy, error=sigma)
