"""Box-bounded Levenberg-Marquardt with a finite-difference Jacobian."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..series import SpectrumSeries

REL_STEP = 1e-6
FTOL = 1e-10
GTOL = 1e-10
MAX_ITER = 500
LAMBDA_MAX = 1e16
SINGULAR_RCOND = 1e-10

# name -> f(params, axes) -> list of predicted rates, one per data channel
MODELS: dict[str, Callable] = {}


def register_model(name: str):
    def decorator(func):
        MODELS[name] = func
        return func
    return decorator


@dataclass
class FitProblem:
    model: str | Callable
    names: Sequence[str]
    x0: Sequence[float]
    data: Sequence[SpectrumSeries]
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None
    weights: np.ndarray | None = None
    starts: Sequence[Sequence[float]] | None = None
    # magnitude below which finite-difference steps stop shrinking
    typical: Sequence[float] | None = None

    def __post_init__(self):
        n = len(self.names)
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.typical is None:
            self.typical = np.where(self.x0 != 0, np.abs(self.x0), 1.0)
        else:
            self.typical = np.abs(np.asarray(self.typical, float))
            if self.typical.shape != (n,) or np.any(self.typical == 0):
                raise ValueError("typical scales must be non-zero, one per parameter")
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if not (self.x0.shape == self.lower.shape == self.upper.shape == (n,)):
            raise ValueError("parameter names, x0 and bounds must have equal length")
        for start in [self.x0, *(self.starts or [])]:
            start = np.asarray(start, float)
            if np.any(start < self.lower) or np.any(start > self.upper):
                raise ValueError("initial values must lie inside the bounds")
        n_data = sum(len(s) for s in self.data)
        if n_data < n:
            raise ValueError(f"{n_data} data points cannot determine {n} parameters")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, float)
            if self.weights.shape != (n_data,):
                raise ValueError("weight vector must match the data length")

    @property
    def observed(self) -> np.ndarray:
        return np.concatenate([s.rate for s in self.data])

    def model_func(self) -> Callable:
        return MODELS[self.model] if isinstance(self.model, str) else self.model

    def residual_func(self) -> Callable[[np.ndarray], np.ndarray]:
        model = self.model_func()
        axes = [s.freq for s in self.data]
        y = self.observed
        w = self.weights

        def residual(p):
            pred = np.concatenate([np.asarray(v, float) for v in model(p, axes)])
            r = pred - y
            return r if w is None else r * w

        return residual


@dataclass
class FitResult:
    names: tuple[str, ...]
    params: np.ndarray
    errors: np.ndarray
    rss: float
    converged: bool
    iterations: int
    start_index: int = 0
    start_rss: tuple[float, ...] = ()
    degenerate: bool = False
    at_bound: tuple[str, ...] = ()
    message: str = ""
    covariance: np.ndarray | None = field(default=None, repr=False)
    history: list[float] = field(default_factory=list, repr=False)
    candidates: list = field(default_factory=list, repr=False)

    def __getitem__(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def error(self, name: str) -> float:
        return float(self.errors[self.names.index(name)])

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {n: (float(v), float(e)) for n, v, e in zip(self.names, self.params, self.errors)}


def _steps(p: np.ndarray, typical=None) -> np.ndarray:
    floor = 1.0 if typical is None else typical
    return REL_STEP * np.maximum(np.abs(p), floor)


def jacobian(residual, p, lower, upper, r0=None, typical=None) -> np.ndarray:
    """Central differences, falling back to one-sided steps at the bounds.

    Steps are 1e-6 relative to max(|p|, typical), so a parameter passing
    through zero keeps a usable step.
    """
    h = _steps(p, typical)
    cols = []
    for j in range(p.size):
        up, down = p.copy(), p.copy()
        up_ok = p[j] + h[j] <= upper[j]
        down_ok = p[j] - h[j] >= lower[j]
        if up_ok and down_ok:
            up[j] += h[j]
            down[j] -= h[j]
            cols.append((residual(up) - residual(down)) / (2.0 * h[j]))
        else:
            base = residual(p) if r0 is None else r0
            if up_ok:
                up[j] += h[j]
                cols.append((residual(up) - base) / h[j])
            else:
                down[j] -= h[j]
                cols.append((base - residual(down)) / h[j])
    return np.column_stack(cols)


def forward_jacobian(residual, p) -> np.ndarray:
    """Forward-difference stencil, kept independent of :func:`jacobian` for cross-checks."""
    r0 = residual(p)
    h = np.sqrt(np.finfo(float).eps) * np.where(np.abs(p) > 0, np.abs(p), 1.0)
    cols = []
    for j in range(p.size):
        q = p.copy()
        q[j] += h[j]
        cols.append((residual(q) - r0) / h[j])
    return np.column_stack(cols)


def _covariance(J: np.ndarray, rss: float):
    """Parameter covariance s^2 (J^T J)^-1 via SVD; None-like inf where unidentified."""
    m, n = J.shape
    norms = np.linalg.norm(J, axis=0)
    norms = np.where(norms > 0, norms, 1.0)
    u, s, vt = np.linalg.svd(J / norms, full_matrices=False)
    keep = s > SINGULAR_RCOND * s[0] if s.size and s[0] > 0 else np.zeros_like(s, bool)
    degenerate = not keep.all()
    dof = m - n
    s2 = rss / dof if dof > 0 else math.inf
    inv = (vt[keep].T / s[keep] ** 2) @ vt[keep]
    cov = s2 * inv / np.outer(norms, norms)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if degenerate:
        null = vt[~keep]
        loading = np.max(np.abs(null), axis=0)
        errors = np.where(loading > 1e-3, np.inf, errors)
    return cov, errors, degenerate


def levenberg_marquardt(residual: Callable[[np.ndarray], np.ndarray], x0, lower=None,
                        upper=None, names=None, max_iter: int = MAX_ITER,
                        typical=None) -> FitResult:
    """Minimise sum(residual(p)^2) inside [lower, upper].

    Marquardt-scaled damping (J^T J + lam diag(J^T J)) with a floor on the
    diagonal, so rank-deficient problems still produce finite steps.  Steps are
    projected onto the bounds and only accepted when the cost decreases.
    """
    p = np.asarray(x0, dtype=float).copy()
    n = p.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
    names = tuple(names) if names is not None else tuple(f"p{i}" for i in range(n))
    if typical is None:
        typical = np.where(p != 0, np.abs(p), 1.0)
    r = residual(p)
    if not np.all(np.isfinite(r)):
        raise ValueError("residual is not finite at the initial point")
    cost = float(r @ r)
    floor_cost = (np.finfo(float).eps * max(math.sqrt(cost), 1e-300)) ** 2
    history = [cost]
    lam = 1e-3
    converged = False
    message = "iteration limit reached"
    it = 0
    J = jacobian(residual, p, lower, upper, r, typical)
    while it < max_iter:
        it += 1
        g = J.T @ r
        col = np.linalg.norm(J, axis=0)
        rnorm = math.sqrt(cost)
        if rnorm == 0 or cost <= floor_cost:
            converged, message = True, "residual at machine precision"
            break
        scaled = np.abs(g) / np.where(col > 0, col * rnorm, np.inf)
        if scaled.max(initial=0.0) < GTOL:
            converged, message = True, "gradient below tolerance"
            break
        A = J.T @ J
        diag = np.diag(A).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(initial=0.0), 1e-300))
        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(p + step, lower, upper)
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else math.inf
            if cost_trial < cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            # stuck at rounding level of the starting residual counts as an exact fit
            converged = scaled.max(initial=0.0) < 1e-6 or cost <= 1e-20 * history[0]
            message = "no further decrease possible"
            break
        rel = (cost - cost_trial) / cost
        p, r, cost = trial, r_trial, cost_trial
        history.append(cost)
        lam = max(lam / 3.0, 1e-12)
        J = jacobian(residual, p, lower, upper, r, typical)
        if rel < FTOL:
            converged, message = True, "relative cost change below tolerance"
            break
    cov, errors, degenerate = _covariance(J, cost)
    span = np.maximum(np.abs(p), 1.0)
    at_bound = tuple(
        name for name, v, lo, hi, s in zip(names, p, lower, upper, span)
        if (np.isfinite(lo) and v - lo <= 1e-9 * s) or (np.isfinite(hi) and hi - v <= 1e-9 * s)
    )
    return FitResult(names, p, errors, cost, converged, it, degenerate=degenerate,
                     at_bound=at_bound, message=message, covariance=cov, history=history)


def least_squares_solve(problem: FitProblem, workers: int = 1) -> FitResult:
    """Solve from every start; the lowest RSS wins, ties broken by start index."""
    residual = problem.residual_func()
    starts = [problem.x0, *(np.asarray(s, float) for s in (problem.starts or []))]

    def run(start):
        return levenberg_marquardt(residual, start, problem.lower, problem.upper, problem.names,
                                   typical=problem.typical)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    best = min(range(len(results)), key=lambda i: (results[i].rss, i))
    winner = results[best]
    winner.start_index = best
    winner.start_rss = tuple(res.rss for res in results)
    winner.candidates = results
    return winner
