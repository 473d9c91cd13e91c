"""Structure factors and Bragg interference for a 1-D array in a ring cavity.

Atoms sit at r_n = n*d + offset_n along the cavity axis and are driven by a
side probe tilted by phi from normal incidence.  Light scattered into the
clockwise (CW) mode picks up a phase k*r_n*(1 - sin phi) per atom, the
counter-clockwise (CCW) mode k*r_n*(1 + sin phi).

Sign convention: phi > 0 makes the CW interference period longer than the
CCW one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .constants import WAVELENGTH_NM
from .series import SpectrumSeries


class Mode(str, Enum):
    CW = "CW"
    CCW = "CCW"

    @property
    def sign(self) -> int:
        # multiplies sin(phi) in the phase factor k r (1 -/+ sin phi)
        return -1 if self is Mode.CW else 1


@dataclass(frozen=True)
class AtomArray:
    n_atoms: int
    spacing_d: float
    offsets: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        if not self.spacing_d > 0:
            raise ValueError(f"spacing_d must be positive, got {self.spacing_d}")
        if self.offsets is not None:
            offsets = tuple(float(x) for x in self.offsets)
            if len(offsets) != self.n_atoms:
                raise ValueError(
                    f"offsets has {len(offsets)} entries for {self.n_atoms} atoms"
                )
            object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "n_atoms", int(self.n_atoms))

    @property
    def positions(self) -> np.ndarray:
        r = self.spacing_d * np.arange(self.n_atoms, dtype=float)
        if self.offsets is not None:
            r = r + np.asarray(self.offsets)
        return r

    def with_spacing(self, spacing_d: float) -> AtomArray:
        return AtomArray(self.n_atoms, spacing_d, self.offsets)


@dataclass(frozen=True)
class ProbeGeometry:
    wavelength_lambda: float = WAVELENGTH_NM
    incidence_angle_phi: float = 0.0  # degrees

    def __post_init__(self):
        if not self.wavelength_lambda > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength_lambda}")
        if not abs(self.incidence_angle_phi) < 90.0:
            raise ValueError(f"|phi| must be below 90 degrees, got {self.incidence_angle_phi}")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength_lambda

    @property
    def sin_phi(self) -> float:
        return math.sin(math.radians(self.incidence_angle_phi))


def _mode(mode) -> Mode:
    return mode if isinstance(mode, Mode) else Mode(str(mode).upper())


def phase_per_atom(spacing, probe: ProbeGeometry, mode) -> np.ndarray:
    """k*d*(1 -/+ sin phi): accumulated phase between neighbouring atoms."""
    return probe.k * np.asarray(spacing, dtype=float) * (1.0 + _mode(mode).sign * probe.sin_phi)


def structure_factor(array: AtomArray, probe: ProbeGeometry, mode) -> complex:
    """Complex amplitude G = sum_n exp(i k r_n (1 -/+ sin phi))."""
    q = probe.k * (1.0 + _mode(mode).sign * probe.sin_phi)
    return complex(np.sum(np.exp(1j * q * array.positions)))


def cross_mode_factor(array: AtomArray, probe: ProbeGeometry) -> complex:
    """G0 = sum_j exp(-2 i k r_j), the CW<->CCW coupling factor.

    Diagnostic only: the steady-state photon numbers drop this term.
    """
    return complex(np.sum(np.exp(-2j * probe.k * array.positions)))


def interference_period(probe: ProbeGeometry, mode) -> float:
    """Spacing period of the collective signal in one mode, lambda/(1 -/+ sin phi)."""
    return probe.wavelength_lambda / (1.0 + _mode(mode).sign * probe.sin_phi)


def angle_from_period_ratio(period_cw: float, period_ccw: float) -> float:
    """Probe angle in degrees recovered from the two interference periods.

    With R = period_ccw/period_cw = (1 - sin phi)/(1 + sin phi), this returns
    phi = arcsin((1 - R)/(1 + R)), the inverse of :func:`interference_period`.
    """
    if not (period_cw > 0 and period_ccw > 0):
        raise ValueError("interference periods must be positive")
    ratio = period_ccw / period_cw
    return math.degrees(math.asin((1.0 - ratio) / (1.0 + ratio)))


def array_factor(n_atoms: int, theta) -> np.ndarray:
    """|sum_{n<N} exp(i n theta)|^2 evaluated by direct summation."""
    theta = np.asarray(theta, dtype=float)
    n = np.arange(n_atoms, dtype=float)
    amp = np.exp(1j * np.multiply.outer(theta, n)).sum(axis=-1)
    return np.abs(amp) ** 2


def bragg_scan(array: AtomArray, probe: ProbeGeometry, d_min: float, d_max: float,
               n_points: int) -> dict[Mode, SpectrumSeries]:
    """|G(d)|^2 for both modes on a uniform spacing grid (offsets held fixed)."""
    if not d_min < d_max:
        raise ValueError("d_min must be below d_max")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    d = np.linspace(d_min, d_max, int(n_points))
    base = np.arange(array.n_atoms, dtype=float)
    offsets = np.zeros(array.n_atoms) if array.offsets is None else np.asarray(array.offsets)
    positions = np.multiply.outer(d, base) + offsets
    out = {}
    for mode in (Mode.CW, Mode.CCW):
        q = probe.k * (1.0 + mode.sign * probe.sin_phi)
        rate = np.abs(np.exp(1j * q * positions).sum(axis=1)) ** 2
        out[mode] = SpectrumSeries(d, rate, channel=mode.value, axis_name="d_nm")
    return out


def _ideal_rate(n: int, condition: str) -> float:
    if condition == "constructive":
        return float(n * n)
    if condition == "destructive":
        return float(n % 2)
    raise ValueError(f"condition must be 'constructive' or 'destructive', got {condition!r}")


def ideal_scaling(n_max: int, condition: str) -> list[tuple[int, float]]:
    """Collective rate relative to one atom for stationary atoms, N = 1..n_max.

    Constructive spacing gives N^2.  At the destructive spacing neighbouring
    phasors cancel pairwise, leaving 0 for even N and one phasor for odd N.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    return [(n, _ideal_rate(n, condition)) for n in range(1, n_max + 1)]


def debye_waller(lamb_dicke: float, n_phonon: float) -> float:
    """exp(-eta^2 (2 n + 1)): thermal suppression of interatomic cross terms."""
    if lamb_dicke < 0 or n_phonon < 0:
        raise ValueError("lamb_dicke and n_phonon must be non-negative")
    return math.exp(-lamb_dicke ** 2 * (2.0 * n_phonon + 1.0))


def thermal_bragg_scaling(n_max: int, lamb_dicke: float, n_phonon: float,
                          condition: str, coherence: float = 1.0) -> list[tuple[int, float]]:
    """Collective rate with the cross terms damped by the Debye-Waller factor.

    rate(N) = N + (|G_ideal|^2 - N) * W * coherence.  ``coherence`` is an
    extra multiplicative damping of the cross terms (the multi-level
    interference contrast); leave it at 1 for the purely thermal model.
    """
    w = debye_waller(lamb_dicke, n_phonon) * coherence
    return [(n, n + (g2 - n) * w) for n, g2 in ideal_scaling(n_max, condition)]


def peak_half_width(series: SpectrumSeries) -> float:
    """Full width at half maximum of the tallest peak, by linear interpolation."""
    x, y = series.freq, series.rate
    i = int(np.argmax(y))
    half = 0.5 * y[i]

    def crossing(step):
        j = i
        while 0 <= j + step < y.size and y[j + step] > half:
            j += step
        if not 0 <= j + step < y.size:
            raise ValueError("peak is not bracketed by the scan")
        x0, x1, y0, y1 = x[j], x[j + step], y[j], y[j + step]
        return x0 + (half - y0) * (x1 - x0) / (y1 - y0)

    return crossing(1) - crossing(-1)
