"""Steady state of a side-driven atom array in a two-mode ring cavity.

The atomic excitation is eliminated adiabatically (low saturation), leaving
each cavity mode driven through its structure factor and pulled by N*U_e.
All frequencies are angular (rad/s).  The CW<->CCW coupling U_e*G0 is
dropped, which holds in the far-detuned limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import constants as C
from .geometry import AtomArray, Mode, ProbeGeometry, structure_factor
from .multilevel import chiral_weights
from .series import CCW, CW, SpectrumSeries

SATURATION_THRESHOLD = 0.1


class SaturationWarning(UserWarning):
    """The drive is strong enough that the low-saturation elimination is doubtful."""


@dataclass(frozen=True)
class CavityParams:
    kappa: float = C.KAPPA
    eta_cooperativity: float = C.COOPERATIVITY
    gamma_atom: float = C.GAMMA_CS_D2
    chiral_splitting: float = C.CHIRAL_SPLIT

    def __post_init__(self):
        for name in ("kappa", "eta_cooperativity", "gamma_atom"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.chiral_splitting < 0:
            raise ValueError("chiral_splitting must be non-negative")

    @property
    def g_coupling(self) -> float:
        """Vacuum coupling g from eta = 4 g^2/(kappa Gamma)."""
        return math.sqrt(self.g_squared)

    @property
    def g_squared(self) -> float:
        return self.eta_cooperativity * self.kappa * self.gamma_atom / 4.0


@dataclass(frozen=True)
class DriveParams:
    rabi_omega: float
    delta_a: float
    delta_c: float = 0.0

    def saturation(self, gamma_atom: float) -> float:
        return 0.5 * self.rabi_omega ** 2 / ((gamma_atom / 2.0) ** 2 + self.delta_a ** 2)


@dataclass(frozen=True)
class EffectiveParams:
    u_e: float
    omega_e: float
    lorentz_l: float


def effective_params(cav: CavityParams, drive: DriveParams) -> EffectiveParams:
    half_gamma_sq = (cav.gamma_atom / 2.0) ** 2
    denom = half_gamma_sq + drive.delta_a ** 2
    u_e = cav.g_squared * drive.delta_a / denom
    omega_e = 2.0 * cav.g_coupling * drive.rabi_omega * drive.delta_a / (
        cav.gamma_atom ** 2 + 4.0 * drive.delta_a ** 2)
    return EffectiveParams(u_e=u_e, omega_e=omega_e, lorentz_l=half_gamma_sq / denom)


def linewidth_broadening(cav: CavityParams, drive: DriveParams) -> float:
    """Per-atom increase of the cavity linewidth, kappa * eta * L(Delta_a)."""
    return cav.kappa * cav.eta_cooperativity * effective_params(cav, drive).lorentz_l


def check_saturation(cav: CavityParams, drive: DriveParams) -> float:
    s = drive.saturation(cav.gamma_atom)
    if s > SATURATION_THRESHOLD:
        warnings.warn(
            f"saturation parameter {s:.3g} exceeds {SATURATION_THRESHOLD}; "
            "the adiabatic elimination assumes low saturation",
            SaturationWarning, stacklevel=3,
        )
    return s


def lorentzian_denominator(n_atoms: int, cav: CavityParams, drive: DriveParams,
                           delta_c=None) -> np.ndarray:
    eff = effective_params(cav, drive)
    dc = drive.delta_c if delta_c is None else np.asarray(delta_c, dtype=float)
    broadened = cav.kappa * (1.0 + n_atoms * cav.eta_cooperativity * eff.lorentz_l)
    return broadened ** 2 + 4.0 * (dc - n_atoms * eff.u_e) ** 2


def mode_photon_numbers(array: AtomArray, probe: ProbeGeometry, cav: CavityParams,
                        drive: DriveParams, delta_c=None):
    """Mean intracavity photon numbers (n_cw, n_ccw).

    ``delta_c`` optionally overrides ``drive.delta_c`` with an array of
    probe-cavity detunings; the outputs then have its shape.
    """
    check_saturation(cav, drive)
    drive_term = cav.g_squared * drive.rabi_omega ** 2 / (
        cav.gamma_atom ** 2 + 4.0 * drive.delta_a ** 2)
    cavity_term = 4.0 / lorentzian_denominator(array.n_atoms, cav, drive, delta_c)
    g_cw = abs(structure_factor(array, probe, Mode.CW)) ** 2
    g_ccw = abs(structure_factor(array, probe, Mode.CCW)) ** 2
    n_cw = g_cw * drive_term * cavity_term
    n_ccw = g_ccw * drive_term * cavity_term
    if np.ndim(n_cw) == 0:
        return float(n_cw), float(n_ccw)
    return n_cw, n_ccw


def lorentzian(freq, center: float, width: float) -> np.ndarray:
    """Peak-normalised Lorentzian of full width ``width``."""
    return width ** 2 / (width ** 2 + 4.0 * (np.asarray(freq, dtype=float) - center) ** 2)


def unit_area_lorentzian(freq, center: float, width: float) -> np.ndarray:
    half = 0.5 * width
    return (half / math.pi) / ((np.asarray(freq, dtype=float) - center) ** 2 + half ** 2)


# Helicity q (relative to the cavity axis) resonant at +split/2 and -split/2 in
# each propagation direction.  The sigma+ CW mode is degenerate with the
# sigma- CCW mode.
RESONANCE_HELICITY = {
    CW: {+1: +0.5, -1: -0.5},
    CCW: {-1: +0.5, +1: -0.5},
}


def empty_cavity_spectrum(cav: CavityParams, freq_grid) -> dict[str, SpectrumSeries]:
    """Two unit-area Lorentzians of full width kappa at +/- splitting/2.

    Returns the helicity components under ``"sigma+"`` and ``"sigma-"`` and
    their sum under ``"total"`` (CW-mode labelling).
    """
    freq = np.asarray(freq_grid, dtype=float)
    if freq.size == 0:
        raise ValueError("frequency grid is empty")
    half = 0.5 * cav.chiral_splitting
    plus = unit_area_lorentzian(freq, +half, cav.kappa)
    minus = unit_area_lorentzian(freq, -half, cav.kappa)
    return {
        "sigma+": SpectrumSeries(freq, plus, "sigma+"),
        "sigma-": SpectrumSeries(freq, minus, "sigma-"),
        "total": SpectrumSeries(freq, plus + minus, "total"),
    }


def chiral_scattering_spectrum(zeeman, cav: CavityParams, freq_grid, f_prime: int = 5,
                               drive_weights=(1.0, 1.0)):
    """Single-atom scattering spectra into the CW and CCW modes.

    Each helicity channel q contributes its coupling weight
    sum_m c_m cg(F, m, q, F')^2 (times the probe's weight in that helicity)
    on the resonance where that helicity lives for the given direction.
    ``drive_weights`` are the probe's (sigma+, sigma-) intensities.
    """
    freq = np.asarray(freq_grid, dtype=float)
    weights = chiral_weights(zeeman, f_prime)
    drive = {+1: drive_weights[0], -1: drive_weights[1]}
    out = []
    for direction in (CW, CCW):
        rate = np.zeros_like(freq)
        for q, side in RESONANCE_HELICITY[direction].items():
            center = side * cav.chiral_splitting
            rate = rate + drive[q] * weights[q] * lorentzian(freq, center, cav.kappa)
        out.append(SpectrumSeries(freq, rate, direction))
    return tuple(out)
