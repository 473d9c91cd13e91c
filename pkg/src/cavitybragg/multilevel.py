"""Zeeman-sublevel effects on collective Rayleigh scattering (Cs D2, F = 4).

Clebsch-Gordan coefficients come from the Racah closed form evaluated with
exact rational arithmetic.  Each sublevel m scatters in helicity channel q
with amplitude

    alpha_m^(q) = sum_F' cg(F, m, q, F')^2 / (Delta_F' + i Gamma/2),

where Delta_F' is the probe detuning from excited level F'.  Tracing over
the atomic state turns part of the collective signal incoherent; the
surviving fraction is the contrast C = |sum c_m alpha_m|^2 / sum c_m |alpha_m|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import constants as C

HELICITIES = (+1, -1)


def _as_fraction(value) -> Fraction:
    frac = Fraction(value).limit_denominator(2)
    if frac != Fraction(value) or frac.denominator not in (1, 2):
        raise ValueError(f"angular momentum quantum numbers must be (half-)integers, got {value}")
    return frac


def _factorial(value: Fraction) -> int:
    if value.denominator != 1 or value < 0:
        raise ValueError("factorial of a non-integer")
    return math.factorial(int(value))


@lru_cache(maxsize=None)
def _cg_signed_square(j1: Fraction, m1: Fraction, j2: Fraction, m2: Fraction,
                      j: Fraction, m: Fraction) -> tuple[int, Fraction]:
    """Sign and exact square of <j1 m1; j2 m2 | j m> (Racah formula)."""
    if m1 + m2 != m or abs(m) > j or abs(m1) > j1 or abs(m2) > j2:
        return 0, Fraction(0)
    if not abs(j1 - j2) <= j <= j1 + j2 or (j1 + j2 + j).denominator != 1:
        return 0, Fraction(0)
    f = _factorial
    prefactor = Fraction(
        (2 * j + 1) * f(j1 + j2 - j) * f(j1 - j2 + j) * f(-j1 + j2 + j),
        f(j1 + j2 + j + 1),
    ) * (f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2))
    k_min = int(max(0, j2 - j - m1, j1 + m2 - j))
    k_max = int(min(j1 + j2 - j, j1 - m1, j2 + m2))
    total = Fraction(0)
    for k in range(k_min, k_max + 1):
        denom = (f(Fraction(k)) * f(j1 + j2 - j - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
                 * f(j - j2 + m1 + k) * f(j - j1 - m2 + k))
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0, Fraction(0)
    return (1 if total > 0 else -1), prefactor * total * total


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """<j1 m1; j2 m2 | j m>, exact internally, rounded to float on output."""
    args = tuple(_as_fraction(x) for x in (j1, m1, j2, m2, j, m))
    sign, square = _cg_signed_square(*args)
    return sign * math.sqrt(square)


def _validate(f, m, q, f_prime):
    f, m, f_prime = _as_fraction(f), _as_fraction(m), _as_fraction(f_prime)
    if f < 0 or f_prime < 0:
        raise ValueError("F and F' must be non-negative")
    if abs(m) > f or (f - m).denominator != 1:
        raise ValueError(f"m={m} is not a sublevel of F={f}")
    if q not in (-1, 0, 1):
        raise ValueError(f"dipole polarization q must be -1, 0 or +1, got {q}")
    return f, m, f_prime


def cg_squared(f, m, q: int, f_prime) -> Fraction:
    """Exact |<F', m+q | F, m; 1, q>|^2; zero when a selection rule fails."""
    f, m, f_prime = _validate(f, m, q, f_prime)
    return _cg_signed_square(f, m, Fraction(1), Fraction(q), f_prime, m + q)[1]


def cg_coefficient(f, m, q: int, f_prime) -> float:
    """<F', m+q | F, m; 1, q> as a float."""
    f, m, f_prime = _validate(f, m, q, f_prime)
    sign, square = _cg_signed_square(f, m, Fraction(1), Fraction(q), f_prime, m + q)
    return sign * math.sqrt(square)


@dataclass(frozen=True)
class LevelData:
    """Excited hyperfine levels F' with angular-frequency offsets from the top level."""

    offsets: Mapping[int, float] = field(default_factory=lambda: {
        5: 0.0,
        4: -C.HFS_F5_F4,
        3: -(C.HFS_F5_F4 + C.HFS_F4_F3),
    })
    gamma: float = C.GAMMA_CS_D2
    f_ground: int = 4

    def __post_init__(self):
        levels = sorted(self.offsets)
        values = [self.offsets[k] for k in levels]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("excited-level offsets must increase with F'")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class ZeemanDistribution:
    f_ground: int
    populations: Mapping[int, float]

    def __post_init__(self):
        pops = {int(m): float(c) for m, c in dict(self.populations).items()}
        for m, c in pops.items():
            if abs(m) > self.f_ground:
                raise ValueError(f"sublevel m={m} outside F={self.f_ground}")
            if c < 0:
                raise ValueError(f"population c_{m} is negative")
        if abs(math.fsum(pops.values()) - 1.0) > 1e-12:
            raise ValueError(f"populations sum to {math.fsum(pops.values())!r}, not 1")
        full = {m: pops.get(m, 0.0) for m in range(-self.f_ground, self.f_ground + 1)}
        object.__setattr__(self, "populations", full)

    @classmethod
    def uniform(cls, f_ground: int = 4) -> ZeemanDistribution:
        n = 2 * f_ground + 1
        return cls(f_ground, {m: 1.0 / n for m in range(-f_ground, f_ground + 1)})

    @classmethod
    def stretched(cls, f_ground: int = 4, purity: float = 1.0, sign: int = +1) -> ZeemanDistribution:
        """Population ``purity`` in m = sign*F, the remainder spread uniformly."""
        if not 0 <= purity <= 1:
            raise ValueError("purity must lie in [0, 1]")
        top = sign * f_ground
        others = [m for m in range(-f_ground, f_ground + 1) if m != top]
        pops = {m: (1.0 - purity) / len(others) for m in others}
        pops[top] = purity
        return cls(f_ground, pops)

    @classmethod
    def equal(cls, sublevels, f_ground: int = 4) -> ZeemanDistribution:
        sublevels = list(sublevels)
        return cls(f_ground, {m: 1.0 / len(sublevels) for m in sublevels})

    def mirrored(self) -> ZeemanDistribution:
        return ZeemanDistribution(self.f_ground, {-m: c for m, c in self.populations.items()})


@dataclass(frozen=True)
class RayleighAmplitudes:
    amplitudes: Mapping[tuple[int, int], complex]
    detuning_reference: float


def rayleigh_amplitude(m: int, q: int, levels: LevelData, delta_ca: float) -> complex:
    """alpha_m^(q) for a probe detuned by ``delta_ca`` from the top excited level."""
    total = 0j
    for f_prime, offset in levels.offsets.items():
        weight = cg_squared(levels.f_ground, m, q, f_prime)
        if weight:
            total += float(weight) / ((delta_ca - offset) + 0.5j * levels.gamma)
    return total


def rayleigh_amplitudes(levels: LevelData, delta_ca: float) -> RayleighAmplitudes:
    f = levels.f_ground
    table = {(m, q): rayleigh_amplitude(m, q, levels, delta_ca)
             for m in range(-f, f + 1) for q in HELICITIES}
    return RayleighAmplitudes(table, delta_ca)


def _weights(zeeman: ZeemanDistribution, amplitudes: RayleighAmplitudes, q: int):
    ms = sorted(zeeman.populations)
    c = np.array([zeeman.populations[m] for m in ms])
    alpha = np.array([amplitudes.amplitudes[(m, q)] for m in ms])
    return c, alpha


def interference_contrast(zeeman: ZeemanDistribution, amplitudes: RayleighAmplitudes,
                          q: int) -> float:
    c, alpha = _weights(zeeman, amplitudes, q)
    incoherent = float(np.sum(c * np.abs(alpha) ** 2))
    if incoherent == 0.0:
        raise ValueError("no populated sublevel scatters in this channel")
    if np.count_nonzero(c > 0) == 1:
        return 1.0
    coherent = abs(np.sum(c * alpha)) ** 2
    # rounding can push an exactly-unit contrast a few ulp above 1
    return min(coherent / incoherent, 1.0)


def multilevel_scaling(zeeman: ZeemanDistribution, amplitudes: RayleighAmplitudes, q: int,
                       n_max: int) -> list[tuple[int, float]]:
    """Photon number at the Bragg condition relative to one atom: N + (N^2 - N) C."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    contrast = interference_contrast(zeeman, amplitudes, q)
    return [(n, n + (n * n - n) * contrast) for n in range(1, n_max + 1)]


def two_atom_photon_number(zeeman: ZeemanDistribution, amplitudes: RayleighAmplitudes,
                           q: int, phase: float) -> float:
    """sum_{m,l} c_m c_l |alpha_m + alpha_l e^{i phase}|^2 (two atoms, relative phase)."""
    c, alpha = _weights(zeeman, amplitudes, q)
    field_sum = alpha[:, None] + alpha[None, :] * np.exp(1j * phase)
    return float(np.sum(np.outer(c, c) * np.abs(field_sum) ** 2))


def chiral_weights(zeeman: ZeemanDistribution, f_prime: int = 5) -> dict[int, float]:
    """Helicity coupling weights sum_m c_m cg(F, m, q, F')^2 for q = +1, -1."""
    return {
        q: math.fsum(c * float(cg_squared(zeeman.f_ground, m, q, f_prime))
                     for m, c in zeeman.populations.items())
        for q in HELICITIES
    }
