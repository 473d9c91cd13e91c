"""Thermal motion of a trapped atom and its resolved-sideband cavity spectrum.

Sideband order convention: ``m > 0`` removes m phonons, so the scattered
photon is blue-shifted by m*omega_t.  In the cavity spectrum that order is
resonant when the probe sits at omega_c - m*omega_t (probe red-detuned from
the cavity, the cooling configuration).  Detailed balance then reads
P(-m) = exp(m hbar omega / k_B T) P(m) and, at T = 0, P(m > 0) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import constants as C
from .bessel import log_ive
from .cavity import CavityParams, lorentzian
from .series import SpectrumSeries

BOLTZMANN_TAIL = 1e-9
# Default oracle truncation; a 1e-9 tail alone leaves ~1e-4 relative error on
# P(|m| = 4) near the ground state.
ORACLE_DEFAULT_TAIL = 1e-17
MAX_ORACLE_LEVELS = 5000

# Per-label default truncation |m| <= M of the cavity spectrum.
DEFAULT_MAX_ORDER = {"axial": 4, "radial": 2}


def lamb_dicke_from_trap(trap_freq: float, recoil: float = C.RECOIL) -> float:
    """eta = sqrt(E_rec / hbar omega_t), both given as angular frequencies."""
    return math.sqrt(recoil / trap_freq)


@dataclass(frozen=True)
class ThermalMode:
    trap_freq: float
    n_phonon: float
    lamb_dicke: float | None = None
    label: str = "radial"

    def __post_init__(self):
        if not self.trap_freq > 0:
            raise ValueError("trap_freq must be positive")
        if not self.n_phonon >= 0 or math.isinf(self.n_phonon):
            raise ValueError(f"n_phonon must be finite and non-negative, got {self.n_phonon}")
        if self.lamb_dicke is None:
            object.__setattr__(self, "lamb_dicke", lamb_dicke_from_trap(self.trap_freq))
        elif self.lamb_dicke < 0:
            raise ValueError("lamb_dicke must be non-negative")

    @property
    def boltzmann_ratio(self) -> float:
        """exp(-hbar omega / k_B T) = n/(n+1)."""
        return self.n_phonon / (self.n_phonon + 1.0)

    @property
    def beta(self) -> float:
        """hbar omega / k_B T; infinite in the ground state."""
        if self.n_phonon == 0:
            return math.inf
        return math.log1p(1.0 / self.n_phonon)

    def with_phonons(self, n_phonon: float) -> ThermalMode:
        return replace(self, n_phonon=n_phonon)


def boltzmann_weight(mode: ThermalMode, level: int) -> float:
    if level < 0:
        raise ValueError("level must be non-negative")
    n = mode.n_phonon
    if n == 0:
        return 1.0 if level == 0 else 0.0
    return math.exp(level * math.log(mode.boltzmann_ratio) - math.log1p(n))


def sideband_fraction(mode: ThermalMode, order: int) -> float:
    """Thermal-averaged probability that one scattering event removes ``order`` phonons.

    P(m) = exp(-m beta/2 - (2n+1) eta^2) I_m(2 eta^2 sqrt(n(n+1))),
    using exp(beta/2) n = sqrt(n(n+1)).
    """
    m = int(order)
    eta2 = mode.lamb_dicke ** 2
    n = mode.n_phonon
    if eta2 == 0.0:
        return 1.0 if m == 0 else 0.0
    if n == 0:
        # removable T = 0 limit: only phonon-adding orders survive
        if m > 0:
            return 0.0
        k = -m
        return math.exp(-eta2 + k * math.log(eta2) - math.lgamma(k + 1))
    x = 2.0 * eta2 * math.sqrt(n * (n + 1.0))
    log_p = -0.5 * m * mode.beta - (2.0 * n + 1.0) * eta2 + x + log_ive(m, x)
    return math.exp(log_p)


def sideband_fractions(mode: ThermalMode, max_order: int) -> np.ndarray:
    """P(m) for m = -max_order..max_order."""
    return np.array([sideband_fraction(mode, m) for m in range(-max_order, max_order + 1)])


def oracle_cutoff(mode: ThermalMode, tail: float = BOLTZMANN_TAIL) -> int:
    """Smallest L with sum_{l >= L} p_l = q^L below ``tail``."""
    q = mode.boltzmann_ratio
    if q == 0.0:
        return 1
    cutoff = math.ceil(math.log(tail) / math.log(q))
    if cutoff > MAX_ORACLE_LEVELS:
        raise ValueError(
            f"n_phonon={mode.n_phonon} needs {cutoff} levels; the oracle is capped "
            f"at {MAX_ORACLE_LEVELS}"
        )
    return max(cutoff, 1)


def _default_cutoff(mode: ThermalMode) -> int:
    q = mode.boltzmann_ratio
    if q == 0.0:
        return 1
    strict = math.ceil(math.log(ORACLE_DEFAULT_TAIL) / math.log(q))
    return max(oracle_cutoff(mode), min(strict, MAX_ORACLE_LEVELS))


def _laguerre_table(n_max: int, alpha: int, x: float) -> np.ndarray:
    """L^alpha_n(x) for n = 0..n_max by the three-term recurrence."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1 + alpha - x) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def displacement_elements(n_levels: int, order: int, lamb_dicke: float) -> np.ndarray:
    """|<l - m| exp(i eta (a + a^dag)) |l>|^2 for l = 0..n_levels-1.

    Uses e^-eta^2 eta^(2|m|) (n_<! / n_>!) [L^|m|_{n_<}(eta^2)]^2; entries with
    l - m < 0 are zero.
    """
    m = int(order)
    k = abs(m)
    eta2 = lamb_dicke ** 2
    levels = np.arange(n_levels)
    n_low = levels - m if m > 0 else levels
    valid = n_low >= 0
    out = np.zeros(n_levels)
    if not valid.any():
        return out
    n_low = n_low[valid]
    lag = _laguerre_table(int(n_low.max()), k, eta2)[n_low]
    # log(n_<! / n_>!) = -sum_{j=1..k} log(n_< + j)
    log_ratio = np.array([-math.fsum(math.log(nl + j) for j in range(1, k + 1)) for nl in n_low])
    if eta2 == 0.0:
        out[valid] = 1.0 if k == 0 else 0.0
        return out
    log_pref = -eta2 + k * math.log(eta2) + log_ratio
    out[valid] = np.exp(log_pref) * lag ** 2
    return out


def franck_condon_oracle(mode: ThermalMode, order: int, level_cutoff: int | None = None) -> float:
    """Brute-force thermal sum sum_l p_l |<l - m|D|l>|^2 (independent check of P(m))."""
    required = oracle_cutoff(mode)
    if level_cutoff is None:
        level_cutoff = _default_cutoff(mode)
    elif level_cutoff < required:
        raise ValueError(
            f"level_cutoff={level_cutoff} leaves a Boltzmann tail above {BOLTZMANN_TAIL:g}; "
            f"need at least {required}"
        )
    p = np.array([boltzmann_weight(mode, l) for l in range(level_cutoff)])
    terms = p * displacement_elements(level_cutoff, order, mode.lamb_dicke)
    return math.fsum(terms)


def thermal_coherence(mode: ThermalMode, level_cutoff: int | None = None) -> float:
    """sum_l p_l <l|exp(i eta (a + a^dag))|l>, the elastic (carrier) amplitude.

    Its square is the Debye-Waller factor damping interatomic interference.
    """
    cutoff = _default_cutoff(mode) if level_cutoff is None else level_cutoff
    eta2 = mode.lamb_dicke ** 2
    p = np.array([boltzmann_weight(mode, l) for l in range(cutoff)])
    diag = math.exp(-0.5 * eta2) * _laguerre_table(cutoff - 1, 0, eta2)
    return math.fsum(p * diag)


def _mode_orders(mode: ThermalMode, max_orders) -> int:
    if max_orders is not None and mode.label in max_orders:
        return int(max_orders[mode.label])
    return DEFAULT_MAX_ORDER.get(mode.label, 4)


def cavity_spectrum(modes: Sequence[ThermalMode], cav: CavityParams, base_rate: float,
                    cavity_center: float, freq_grid, max_orders=None,
                    cross_terms: bool = False) -> SpectrumSeries:
    """Cavity-filtered scattering rate versus probe frequency.

    rate(w_p) = base_rate * sum P_1(m) P_2(n) L(w_p + m w_1 + n w_2 - w_c),
    L the peak-normalised cavity Lorentzian of width kappa.  Orders are
    truncated per mode label (axial |m| <= 4, radial |n| <= 2 unless
    ``max_orders`` says otherwise); with two modes only m*n = 0 terms are
    kept unless ``cross_terms`` is set.
    """
    if not 1 <= len(modes) <= 2:
        raise ValueError("cavity_spectrum takes one or two thermal modes")
    freq = np.asarray(freq_grid, dtype=float)
    orders = []
    for mode in modes:
        top = _mode_orders(mode, max_orders)
        ms = np.arange(-top, top + 1)
        orders.append((mode, ms, sideband_fractions(mode, top)))
    rate = np.zeros_like(freq)
    if len(orders) == 1:
        mode, ms, weights = orders[0]
        for m, w in zip(ms, weights):
            rate += w * lorentzian(freq, cavity_center - m * mode.trap_freq, cav.kappa)
    else:
        (mode_a, ms_a, w_a), (mode_b, ms_b, w_b) = orders
        for m, pa in zip(ms_a, w_a):
            for n, pb in zip(ms_b, w_b):
                if m != 0 and n != 0 and not cross_terms:
                    continue
                shift = m * mode_a.trap_freq + n * mode_b.trap_freq
                rate += pa * pb * lorentzian(freq, cavity_center - shift, cav.kappa)
    return SpectrumSeries(freq, base_rate * rate, channel="cavity")


def carrier_tail(trap_freq: float, cav: CavityParams) -> float:
    """Carrier Lorentzian evaluated one trap frequency away from resonance."""
    return cav.kappa ** 2 / (cav.kappa ** 2 + 4.0 * trap_freq ** 2)


def phonon_from_sidebands(rate_red: float, rate_blue: float, rate_carrier: float,
                          trap_freq: float, cav: CavityParams,
                          crosstalk: str = "carrier") -> float:
    """Mean phonon number from rates probed at omega_c - w_t, omega_c + w_t and omega_c.

    ``crosstalk="carrier"`` subtracts the carrier tail from both sidebands and
    applies n = red/(blue - red).  ``"full"`` instead inverts the 3x3 matrix
    of Lorentzian leakage between all three lines, which also removes the
    blue sideband's tail at the red probe point; use it when kappa/w_t is
    not small.
    """
    if crosstalk == "carrier":
        tail = carrier_tail(trap_freq, cav)
        red = rate_red - tail * rate_carrier
        blue = rate_blue - tail * rate_carrier
    elif crosstalk == "full":
        t1 = carrier_tail(trap_freq, cav)
        t2 = carrier_tail(2.0 * trap_freq, cav)
        # rows: probe at red, carrier, blue; columns: P(+1), P(0), P(-1)
        leak = np.array([[1.0, t1, t2], [t1, 1.0, t1], [t2, t1, 1.0]])
        red, _, blue = np.linalg.solve(leak, [rate_red, rate_carrier, rate_blue])
    else:
        raise ValueError(f"unknown crosstalk model {crosstalk!r}")
    if not blue > red:
        raise ValueError(
            f"corrected blue sideband ({blue:.4g}) must exceed the red one ({red:.4g})"
        )
    return float(red / (blue - red))


class TemperatureEstimate(NamedTuple):
    microkelvin: float
    ground_state: bool


def phonon_to_temperature(mode: ThermalMode) -> TemperatureEstimate:
    """T = hbar omega / (k_B ln((1+n)/n)), in microkelvin."""
    if mode.n_phonon == 0:
        return TemperatureEstimate(0.0, True)
    kelvin = C.HBAR * mode.trap_freq / (C.KB * mode.beta)
    return TemperatureEstimate(kelvin * 1e6, False)


def ground_state_probability(n_phonon: float) -> float:
    if n_phonon < 0:
        raise ValueError("n_phonon must be non-negative")
    return 1.0 / (1.0 + n_phonon)


class CoolingLimit(NamedTuple):
    approx: float
    exact: float
    recoil_term: float


def cooling_limit(cav: CavityParams, trap_freq: float, d_factor: float = C.COOLING_D,
                  c_factor: float = C.COOLING_C_MEAN,
                  eta_effective: float | None = None) -> CoolingLimit:
    """Resolved-sideband cavity-cooling limit.

    exact:  (r D eta + C) / (D eta (1 - r)),  r = kappa^2/(kappa^2 + 16 w^2)
    approx: kappa^2/(16 w^2) + (C/D)(1 + kappa^2/(16 w^2))/eta
    """
    if eta_effective is None:
        eta_effective = effective_cooperativity(cav.eta_cooperativity)
    for name, value in (("trap_freq", trap_freq), ("d_factor", d_factor),
                        ("c_factor", c_factor), ("eta_effective", eta_effective)):
        if not value > 0:
            raise ValueError(f"{name} must be positive")
    recoil = cav.kappa ** 2 / (16.0 * trap_freq ** 2)
    if math.isinf(eta_effective):
        # r/(1 - r) = kappa^2/(16 w^2): both forms reduce to the recoil term
        return CoolingLimit(recoil, recoil, recoil)
    r = cav.kappa ** 2 / (cav.kappa ** 2 + 16.0 * trap_freq ** 2)
    d_eta = d_factor * eta_effective
    exact = (r * d_eta + c_factor) / (d_eta * (1.0 - r))
    approx = recoil + (c_factor / d_factor) * (1.0 + recoil) / eta_effective
    return CoolingLimit(approx, exact, recoil)


def effective_cooperativity(eta_bare: float, multiplicity_factor: float = C.MULTIPLICITY_FACTOR,
                            polarization_factor: float = C.POLARIZATION_FACTOR) -> float:
    for name, value in (("multiplicity_factor", multiplicity_factor),
                        ("polarization_factor", polarization_factor)):
        if not 0 < value <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {value}")
    return eta_bare * multiplicity_factor * polarization_factor
