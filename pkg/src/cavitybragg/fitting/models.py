"""Concrete model fits: two-mode Bragg scans, sideband spectra, chiral doublet."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import find_peaks

from ..cavity import CavityParams, lorentzian
from ..constants import RECOIL, TWO_PI
from ..geometry import array_factor
from ..series import SpectrumSeries
from ..thermal import ThermalMode, cavity_spectrum, lamb_dicke_from_trap
from .solver import FitProblem, FitResult, least_squares_solve, register_model

N_PERIOD_CANDIDATES = 5
AMBIGUITY_RSS = 0.01


class FitError(RuntimeError):
    """A fit could not produce a trustworthy answer."""


class AmbiguousFitError(FitError):
    pass


def format_uncertainty(value: float, error: float) -> str:
    """'783.1(4)' style: error quoted in units of the last printed digit.

    Errors of one or more units keep their decimal point, e.g. 3.4(2.4).
    """
    if not math.isfinite(error):
        return f"{value:.6g}(inf)"
    if error <= 0:
        return f"{value:.6g}"
    # one significant digit of error, two when it starts with a 1
    exponent = int(math.floor(math.log10(error)))
    lead = error / 10 ** exponent
    digits = (1 if round(lead) < 2 else 0) - exponent
    if 1 <= error < 10:
        digits = 1
    if digits <= 0:
        step = 10 ** (-digits)
        return f"{round(value / step) * step:.0f}({round(error / step) * step:.0f})"
    if error >= 1:
        return f"{value:.{digits}f}({error:.{digits}f})"
    return f"{value:.{digits}f}({round(error * 10 ** digits):d})"


# ---------------------------------------------------------------------------
# Separation and probe angle from two-mode interference scans


def _separation_model(n_atoms: int, wavelength: float):
    k = TWO_PI / wavelength

    def model(p, axes):
        scale, phi, c0_cw, c1_cw, c0_ccw, c1_ccw = p
        s = math.sin(phi)
        x_cw, x_ccw = axes
        g_cw = array_factor(n_atoms, k * scale * (1.0 - s) * x_cw)
        g_ccw = array_factor(n_atoms, k * scale * (1.0 + s) * x_ccw)
        return [c0_cw + c1_cw * g_cw, c0_ccw + c1_ccw * g_ccw]

    return model


def periodogram_peaks(series: SpectrumSeries, n_peaks: int = N_PERIOD_CANDIDATES,
                      oversample: int = 10) -> np.ndarray:
    """Spatial frequencies (cycles per axis unit) of the strongest periodogram peaks."""
    x, y = series.freq, series.rate - series.rate.mean()
    span = x[-1] - x[0]
    nyquist = 0.5 / np.median(np.diff(x))
    freqs = np.arange(1.0 / span, nyquist, 1.0 / (oversample * span))
    power = np.abs(np.exp(-2j * np.pi * np.outer(freqs, x)) @ y) ** 2
    idx, _ = find_peaks(power)
    if idx.size == 0:
        idx = np.array([int(np.argmax(power))])
    top = idx[np.argsort(power[idx])[::-1][:n_peaks]]
    return freqs[top]


def inverse_variance_weights(series: Sequence[SpectrumSeries]) -> np.ndarray:
    """1/sigma per point, concatenated over channels, from the attached error columns."""
    if any(s.error is None for s in series):
        raise ValueError("inverse-variance weighting needs an error column")
    sigma = np.concatenate([s.error for s in series])
    if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
        raise ValueError("error column must be positive and finite for weighting")
    return 1.0 / sigma


def _linear_amplitudes(g: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    design = np.column_stack([np.ones_like(g), g])
    (c0, c1), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(c0), float(c1)


@dataclass
class SeparationFit:
    d_scale: float
    phi_deg: float
    period_cw: float
    period_ccw: float
    c0_cw: float
    c1_cw: float
    c0_ccw: float
    c1_ccw: float
    errors: dict[str, float]
    result: FitResult = field(repr=False)

    def summary(self) -> str:
        e = self.errors
        return (f"period_cw={format_uncertainty(self.period_cw, e['period_cw'])} "
                f"period_ccw={format_uncertainty(self.period_ccw, e['period_ccw'])} "
                f"phi={format_uncertainty(self.phi_deg, e['phi_deg'])} deg")


def fit_separation(scan_cw: SpectrumSeries, scan_ccw: SpectrumSeries, n_atoms: int,
                   wavelength: float, period_hints=(), workers: int = 1,
                   inverse_variance: bool = False) -> SeparationFit:
    """Fit S(d) = c0 + c1 |G(d)|^2 jointly to CW and CCW spacing scans.

    The nominal spacing axis is multiplied by a shared scale factor; phi and
    that scale fix both periods.  Starts come from the strongest periodogram
    peaks of each channel (plus ``period_hints`` as (period_cw, period_ccw)
    pairs); the model is periodic in d, so local minima are common.
    """
    for scan in (scan_cw, scan_ccw):
        if len(scan) < 4:
            raise ValueError("each scan needs at least four points")
    k = TWO_PI / wavelength
    f_cw = list(periodogram_peaks(scan_cw))
    f_ccw = list(periodogram_peaks(scan_ccw))
    pairs = [(a, b) for a in f_cw for b in f_ccw]
    pairs += [(1.0 / pc, 1.0 / pr) for pc, pr in period_hints]

    starts = []
    for a, b in pairs:
        scale = 0.5 * wavelength * (a + b)
        s = (b - a) / (a + b)
        phi = math.asin(s)
        g_cw = array_factor(n_atoms, k * scale * (1.0 - s) * scan_cw.freq)
        g_ccw = array_factor(n_atoms, k * scale * (1.0 + s) * scan_ccw.freq)
        starts.append([scale, phi, *_linear_amplitudes(g_cw, scan_cw.rate),
                       *_linear_amplitudes(g_ccw, scan_ccw.rate)])

    names = ("d_scale", "phi", "c0_cw", "c1_cw", "c0_ccw", "c1_ccw")
    lim = math.radians(89.0)
    problem = FitProblem(
        model=_separation_model(n_atoms, wavelength),
        names=names,
        x0=starts[0],
        starts=starts[1:],
        data=[scan_cw, scan_ccw],
        lower=[1e-12, -lim, -np.inf, -np.inf, -np.inf, -np.inf],
        upper=[np.inf, lim, np.inf, np.inf, np.inf, np.inf],
        weights=inverse_variance_weights([scan_cw, scan_ccw]) if inverse_variance else None,
    )
    result = least_squares_solve(problem, workers=workers)
    _check_ambiguity(result, wavelength)

    scale, phi = result.params[:2]
    s = math.sin(phi)
    period_cw = wavelength / (scale * (1.0 - s))
    period_ccw = wavelength / (scale * (1.0 + s))
    cov = result.covariance[:2, :2] if result.covariance is not None else np.full((2, 2), np.inf)
    # d(period)/d(scale, phi)
    grad_cw = np.array([-period_cw / scale, period_cw * math.cos(phi) / (1.0 - s)])
    grad_ccw = np.array([-period_ccw / scale, -period_ccw * math.cos(phi) / (1.0 + s)])
    errs = result.errors
    errors = {
        "d_scale": float(errs[0]),
        "phi_deg": math.degrees(errs[1]),
        "period_cw": _propagate(grad_cw, cov, errs[:2]),
        "period_ccw": _propagate(grad_ccw, cov, errs[:2]),
        "c0_cw": float(errs[2]), "c1_cw": float(errs[3]),
        "c0_ccw": float(errs[4]), "c1_ccw": float(errs[5]),
    }
    return SeparationFit(float(scale), math.degrees(phi), period_cw, period_ccw,
                         *map(float, result.params[2:]), errors=errors, result=result)


def _propagate(grad, cov, errs) -> float:
    if not np.all(np.isfinite(errs)):
        return math.inf
    return float(math.sqrt(max(grad @ cov @ grad, 0.0)))


def _check_ambiguity(result: FitResult, wavelength: float):
    best = result.params
    best_periods = _periods(best, wavelength)
    for cand in result.candidates:
        if cand is result or not cand.converged:
            continue
        if cand.rss > result.rss * (1.0 + AMBIGUITY_RSS) or result.rss == 0.0:
            continue
        periods = _periods(cand.params, wavelength)
        if np.any(np.abs(periods / best_periods - 1.0) > 1e-4):
            raise AmbiguousFitError(
                f"distinct minima with periods {best_periods} and {periods} "
                f"have residuals within {AMBIGUITY_RSS:.0%}"
            )


def _periods(p, wavelength):
    s = math.sin(p[1])
    return np.array([wavelength / (p[0] * (1.0 - s)), wavelength / (p[0] * (1.0 + s))])


# ---------------------------------------------------------------------------
# Six-parameter thermal sideband spectrum

SIDEBAND_PARAMS = ("omega_c", "omega_axial", "omega_radial", "n_axial", "n_radial", "rate_scale")


@dataclass
class SidebandFitConfig:
    cav: CavityParams = field(default_factory=CavityParams)
    initial: Mapping[str, float] = field(default_factory=dict)
    lower: Mapping[str, float] = field(default_factory=dict)
    upper: Mapping[str, float] = field(default_factory=dict)
    fixed: Mapping[str, float] = field(default_factory=dict)
    include_radial: bool = True
    max_orders: Mapping[str, int] | None = None
    cross_terms: bool = False
    recoil: float = RECOIL
    n_axial_starts: tuple[float, ...] = (1.0, 4.0, 12.0)
    inverse_variance: bool = False


def sideband_model_rate(p: Mapping[str, float], freq, config: SidebandFitConfig) -> np.ndarray:
    modes = [ThermalMode(p["omega_axial"], p["n_axial"],
                         lamb_dicke_from_trap(p["omega_axial"], config.recoil), label="axial")]
    if config.include_radial:
        modes.append(ThermalMode(p["omega_radial"], p["n_radial"],
                                 lamb_dicke_from_trap(p["omega_radial"], config.recoil),
                                 label="radial"))
    spec = cavity_spectrum(modes, config.cav, p["rate_scale"], p["omega_c"], freq,
                           max_orders=config.max_orders, cross_terms=config.cross_terms)
    return spec.rate


@register_model("sideband_spectrum")
def _sideband_registered(p, axes, config: SidebandFitConfig | None = None):
    config = config or SidebandFitConfig()
    return [sideband_model_rate(dict(zip(SIDEBAND_PARAMS, p)), axes[0], config)]


def _default_sideband_guess(spectrum: SpectrumSeries) -> dict[str, float]:
    i = int(np.argmax(spectrum.rate))
    return {
        "omega_c": float(spectrum.freq[i]),
        "omega_axial": TWO_PI * 20e3,
        "omega_radial": TWO_PI * 89e3,
        "n_axial": 1.0,
        "n_radial": 0.3,
        "rate_scale": float(spectrum.rate[i]),
    }


def _default_sideband_bounds(spectrum: SpectrumSeries):
    lo = {"omega_c": spectrum.freq[0], "omega_axial": TWO_PI * 2e3, "omega_radial": TWO_PI * 5e3,
          "n_axial": 0.0, "n_radial": 0.0, "rate_scale": 0.0}
    hi = {"omega_c": spectrum.freq[-1], "omega_axial": TWO_PI * 500e3,
          "omega_radial": TWO_PI * 500e3, "n_axial": 200.0, "n_radial": 200.0,
          "rate_scale": np.inf}
    return lo, hi


def fit_sideband_spectrum(spectrum: SpectrumSeries, config: SidebandFitConfig | None = None,
                          workers: int = 1) -> FitResult:
    """Fit cavity frequency, both trap frequencies, both phonon numbers and the rate scale.

    Lamb-Dicke parameters follow the trap-frequency parameters on every
    evaluation.  Parameters named in ``config.fixed`` are held constant; with
    ``include_radial=False`` the radial pair is dropped from the model.
    """
    config = config or SidebandFitConfig()
    guess = _default_sideband_guess(spectrum)
    guess.update(config.initial)
    lo, hi = _default_sideband_bounds(spectrum)
    lo.update(config.lower)
    hi.update(config.upper)
    fixed = dict(config.fixed)
    if not config.include_radial:
        fixed.setdefault("omega_radial", guess["omega_radial"])
        fixed.setdefault("n_radial", 0.0)
    free = [n for n in SIDEBAND_PARAMS if n not in fixed]

    def model(p, axes):
        values = dict(fixed)
        values.update(zip(free, p))
        return [sideband_model_rate(values, axes[0], config)]

    # scale the rate guess so the initial model peak matches the data peak
    trial = dict(guess)
    trial.update(fixed)
    trial["rate_scale"] = 1.0
    peak = float(np.max(sideband_model_rate(trial, spectrum.freq, config)))
    guess["rate_scale"] = guess["rate_scale"] / peak if peak > 0 else guess["rate_scale"]
    guess = {n: float(np.clip(v, lo[n], hi[n])) for n, v in guess.items()}

    starts = []
    for n_ax in (config.n_axial_starts if "n_axial" in free else (guess["n_axial"],)):
        start = dict(guess, n_axial=n_ax)
        starts.append([start[n] for n in free])
    weights = None
    if config.inverse_variance:
        weights = inverse_variance_weights([spectrum])
    typical = dict(guess, omega_c=config.cav.kappa, n_axial=1.0, n_radial=1.0)
    problem = FitProblem(model, free, starts[0], [spectrum],
                         lower=[lo[n] for n in free], upper=[hi[n] for n in free],
                         weights=weights, starts=starts[1:],
                         typical=[abs(typical[n]) or 1.0 for n in free])
    result = least_squares_solve(problem, workers=workers)
    _flag_unseen_sidebands(result, fixed, spectrum)
    return result


def _flag_unseen_sidebands(result: FitResult, fixed: Mapping[str, float],
                           spectrum: SpectrumSeries):
    """A trap frequency whose first sideband lies outside the scan is not identified."""
    values = dict(fixed)
    values.update(zip(result.names, result.params))
    lo, hi = spectrum.freq[0], spectrum.freq[-1]
    unseen = [
        name for name in ("omega_axial", "omega_radial")
        if name in result.names
        and not (lo <= values["omega_c"] - values[name] and values["omega_c"] + values[name] <= hi)
    ]
    if unseen:
        result.degenerate = True
        result.message += f"; sidebands of {', '.join(unseen)} fall outside the scan"


# ---------------------------------------------------------------------------
# Lorentzian doublet (empty-cavity chiral splitting)

DOUBLET_PARAMS = ("center_1", "center_2", "width", "amp_1", "amp_2", "offset")


@register_model("lorentzian_doublet")
def doublet_model(p, axes):
    c1, c2, width, a1, a2, offset = p
    x = axes[0]
    return [offset + a1 * lorentzian(x, c1, width) + a2 * lorentzian(x, c2, width)]


@dataclass
class DoubletFit:
    centers: tuple[float, float]
    width: float
    amplitudes: tuple[float, float]
    offset: float
    splitting: float
    errors: dict[str, float]
    degenerate: bool
    result: FitResult = field(repr=False)


def fit_lorentzian_doublet(spectrum: SpectrumSeries, inverse_variance: bool = False) -> DoubletFit:
    """Two Lorentzians sharing one width, plus a constant offset.

    ``degenerate`` is set when the data show fewer than two separated peaks,
    the fitted centres sit within one linewidth, or the Jacobian is singular.
    """
    x, y = spectrum.freq, spectrum.rate
    base = float(np.median(y))
    height = float(np.max(y)) - base
    idx, props = find_peaks(y, prominence=0.25 * height)
    order = idx[np.argsort(props["prominences"])[::-1]]
    dx = float(np.median(np.diff(x)))
    i0 = int(order[0]) if order.size else int(np.argmax(y))
    above = np.flatnonzero(y - base > 0.5 * height)
    near = above[np.abs(above - i0) < max(4, above.size)]
    width = max(dx * (near.max() - near.min() + 1) if near.size else 2 * dx, 2 * dx)
    width = min(width, 0.25 * (x[-1] - x[0]))
    single = order.size < 2
    if single:
        c1, c2 = x[i0] - 0.25 * width, x[i0] + 0.25 * width
        a1 = a2 = 0.5 * height
    else:
        i1 = int(order[1])
        c1, c2 = sorted((x[i0], x[i1]))
        a1, a2 = (y[i0] - base, y[i1] - base) if x[i0] < x[i1] else (y[i1] - base, y[i0] - base)
    span = x[-1] - x[0]
    problem = FitProblem(
        "lorentzian_doublet", DOUBLET_PARAMS, [c1, c2, width, a1, a2, base], [spectrum],
        lower=[x[0], x[0], 1e-6 * span, -np.inf, -np.inf, -np.inf],
        upper=[x[-1], x[-1], span, np.inf, np.inf, np.inf],
        weights=inverse_variance_weights([spectrum]) if inverse_variance else None,
    )
    result = least_squares_solve(problem)
    p = result.params
    if p[0] > p[1]:
        swap = [1, 0, 2, 4, 3, 5]
        p = p[swap]
        result.params = p
        result.errors = result.errors[swap]
        if result.covariance is not None:
            result.covariance = result.covariance[np.ix_(swap, swap)]
    e = result.errors
    splitting = float(p[1] - p[0])
    cov = result.covariance
    split_err = (math.sqrt(max(cov[0, 0] + cov[1, 1] - 2 * cov[0, 1], 0.0))
                 if cov is not None and np.all(np.isfinite(e[:2])) else math.inf)
    degenerate = single or result.degenerate or splitting < abs(p[2])
    errors = dict(zip(DOUBLET_PARAMS, map(float, e)))
    errors["splitting"] = split_err
    return DoubletFit((float(p[0]), float(p[1])), float(p[2]), (float(p[3]), float(p[4])),
                      float(p[5]), splitting, errors, degenerate, result)
