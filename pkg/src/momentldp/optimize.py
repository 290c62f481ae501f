"""Quasi-Newton ascent with multistart and divergence detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

EPS = np.finfo(float).eps
PLATEAU_STEPS = 10


@dataclass(frozen=True)
class OptimizerOptions:
    """Controls for :func:`maximize` and :func:`multistart_maximize`.

    Attributes
    ----------
    max_iterations : int
        BFGS iterations per start.
    gradient_tolerance : float
        Convergence threshold on the gradient norm.
    restarts : int
        Random starts in addition to the origin.
    divergence_norm : float
        Iterates beyond this norm are reported as escaping.
    max_step : float
        Cap on the norm of a single step.
    armijo : float
        Sufficient-increase constant of the backtracking line search.
    backtrack : float
        Step shrink factor.
    max_backtracks : int
    seed : int
        Seed for the restart points.
    """

    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    restarts: int = 8
    divergence_norm: float = 1e3
    max_step: float = 10.0
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    seed: int = 0

    def __post_init__(self):
        for name in ("max_iterations", "gradient_tolerance", "divergence_norm",
                     "max_step", "armijo", "backtrack", "max_backtracks"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")
        if not self.backtrack < 1:
            raise ValueError("backtrack must be below 1")

    @classmethod
    def from_dict(cls, d: dict | None) -> "OptimizerOptions":
        return cls(**(d or {}))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class OptimizeResult:
    """Outcome of one ascent run.

    ``status`` is one of ``'converged'``, ``'escaped'``, ``'maxiter'`` or
    ``'stalled'``.  For escaped runs ``direction`` is the unit vector of the
    final iterate and ``slope`` the directional derivative along it.
    """

    x: np.ndarray
    value: float
    grad: np.ndarray
    status: str
    iterations: int
    evaluations: int
    direction: np.ndarray | None = None
    slope: float | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))


def _safe_eval(fun, x):
    try:
        f, g = fun(x)
    except (FloatingPointError, np.linalg.LinAlgError, ValueError, ZeroDivisionError):
        return -np.inf, None
    if g is None or not np.isfinite(f) or not np.all(np.isfinite(g)):
        return -np.inf, None
    return float(f), np.asarray(g, float)


def maximize(fun: Callable, x0, opts: OptimizerOptions = OptimizerOptions()) -> OptimizeResult:
    """BFGS ascent of a smooth function with a backtracking Armijo search.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (value, gradient)``. Non-finite values are treated as
        ``-inf`` and rejected by the line search.
    x0 : array_like
    opts : OptimizerOptions
    """
    x = np.array(x0, float)
    n = len(x)
    f, g = _safe_eval(fun, x)
    nev = 1
    if g is None:
        raise ValueError("objective is not finite at the starting point")
    hinv = np.eye(n)
    status = "maxiter"
    it = 0
    plateau = 0
    for it in range(1, opts.max_iterations + 1):
        gn = np.linalg.norm(g)
        if gn <= opts.gradient_tolerance:
            status = "converged"
            break
        xn = np.linalg.norm(x)
        if xn > opts.divergence_norm:
            status = "escaped"
            break
        p = hinv @ g
        if g @ p <= 0:
            hinv = np.eye(n)
            p = g.copy()
        pn = np.linalg.norm(p)
        if pn > opts.max_step:
            p *= opts.max_step / pn
        slope = g @ p
        t = 1.0
        accepted = flat = False
        for _ in range(opts.max_backtracks):
            xt = x + t * p
            ft, gt = _safe_eval(fun, xt)
            nev += 1
            if gt is not None:
                if ft >= f + opts.armijo * t * slope:
                    accepted = True
                    flat = abs(ft - f) <= 10 * EPS * (1 + abs(f))
                    break
                # float-level plateau: accept if the gradient still shrinks
                if abs(ft - f) <= 10 * EPS * (1 + abs(f)) and np.linalg.norm(gt) < gn:
                    accepted = flat = True
                    break
            t *= opts.backtrack
        if not accepted:
            if not np.allclose(hinv, np.eye(n)):
                hinv = np.eye(n)
                continue
            status = "stalled"
            break
        # repeated plateau steps: the gradient is at its noise floor
        plateau = plateau + 1 if flat else 0
        if plateau >= PLATEAU_STEPS:
            x, f, g = xt, ft, gt
            status = "stalled"
            break
        s = xt - x
        y = g - gt          # gradient change of the minimized function -f
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            rho = 1.0 / sy
            v = np.eye(n) - rho * np.outer(s, y)
            hinv = v @ hinv @ v.T + rho * np.outer(s, s)
        x, f, g = xt, ft, gt
    else:
        status = "converged" if np.linalg.norm(g) <= opts.gradient_tolerance else "maxiter"
    res = OptimizeResult(x, f, g, status, it, nev)
    if status == "escaped":
        d = x / np.linalg.norm(x)
        res.direction = d
        res.slope = float(g @ d)
    return res


def restart_points(dim: int, opts: OptimizerOptions):
    """Origin followed by Gaussian points at scales 0.5, 1, 2, 4, ..."""
    rng = np.random.default_rng(opts.seed)
    pts = [np.zeros(dim)]
    for i in range(opts.restarts):
        pts.append(0.5 * 2.0 ** i * rng.standard_normal(dim))
    return pts


def multistart_maximize(fun: Callable, dim: int, opts: OptimizerOptions = OptimizerOptions(),
                        starts=None):
    """Run :func:`maximize` from several starts.

    Returns
    -------
    best : OptimizeResult
        Highest final value among runs (escaped runs rank first when their
        slope is positive, since their supremum is unbounded).
    runs : list of OptimizeResult
    """
    starts = restart_points(dim, opts) if starts is None else starts
    runs = []
    for s in starts:
        try:
            runs.append(maximize(fun, s, opts))
        except ValueError:
            continue
    if not runs:
        raise ValueError("objective is not finite at any start")

    def key(r):
        esc = r.status == "escaped" and (r.slope or 0) > 0
        return (esc, r.value)
    best = max(runs, key=key)
    return best, runs
