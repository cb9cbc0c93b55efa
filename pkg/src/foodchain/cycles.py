"""The planar limit cycle on the z = 0 face and its Floquet multipliers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConsistencyError, ConvergenceError, DomainError, NoCyclePredicted, UsageError
from .integrator import IntegratorConfig, attracting_set_bounds
from .model import ParameterSet, derived, p_poly

#: Tighter than the trajectory defaults: period and monodromy feed 1e-6 checks.
CYCLE_CONFIG = IntegratorConfig(rtol=1e-11, atol=1e-14, max_step=0.5)

_NO_SECTIONS = (np.empty(0, dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64))
_NO_AUX = (np.zeros((2, 6)), np.zeros(2))


@dataclass(frozen=True)
class LimitCycle:
    """One period of the cycle, sampled uniformly from a section crossing."""

    times: np.ndarray
    samples: np.ndarray
    derivatives: np.ndarray
    period: float
    section: tuple
    y_max: float
    y_min: float
    convergence_residual: float
    closure_residual: float
    n_returns: int

    def to_dict(self) -> dict:
        return {
            "T": self.period,
            "section": {"coordinate": self.section[0], "level": self.section[1], "direction": self.section[2]},
            "y_max": self.y_max,
            "y_min": self.y_min,
            "x_max": float(self.samples[:, 0].max()),
            "x_min": float(self.samples[:, 0].min()),
            "convergence_residual": self.convergence_residual,
            "closure_residual": self.closure_residual,
            "n_returns": self.n_returns,
            "n_samples": int(self.samples.shape[0]),
        }


@dataclass(frozen=True)
class FloquetResult:
    period: float
    monodromy: np.ndarray
    multipliers: tuple
    m33_closed_form: float
    transversal_average: float
    trivial_multiplier_error: float
    in_plane_multiplier: complex
    stable_in_R3: bool

    @property
    def m33(self) -> float:
        return float(self.monodromy[2, 2])

    def to_dict(self) -> dict:
        return {
            "T": self.period,
            "multipliers": [{"re": m.real, "im": m.imag} for m in self.multipliers],
            "m33": self.m33,
            "m33_closed_form": self.m33_closed_form,
            "transversal_average": self.transversal_average,
            "stable_in_R3": self.stable_in_R3,
            "trivial_multiplier_error": self.trivial_multiplier_error,
            "in_plane_multiplier": {"re": self.in_plane_multiplier.real, "im": self.in_plane_multiplier.imag},
            "monodromy": self.monodromy.tolist(),
        }


def _check_cycle_predicted(p: ParameterSet):
    dp = derived(p)
    if p.a1 >= 1.0:
        raise NoCyclePredicted("no cycle predicted: a1 >= 1")
    if not dp.A1_holds:
        raise NoCyclePredicted("no cycle predicted: lambda1 outside (0, 1)")
    if not dp.lambda1 < dp.hopf_threshold:
        raise NoCyclePredicted("no cycle predicted: lambda1 >= (1 - a1)/2")
    return dp


def find_h2_cycle(
    p: ParameterSet,
    cfg: IntegratorConfig = CYCLE_CONFIG,
    delta_cycle: float = 1e-9,
    max_returns: int = 5000,
    n_samples: int = 4096,
    start=None,
) -> LimitCycle:
    """Converge onto the planar cycle via returns to ``x = lambda1`` (x increasing).

    The default start is just off the unstable focus,
    ``(lambda1 + 0.01 (1 - lambda1), p(lambda1))``.
    """
    dp = _check_cycle_predicted(p)
    lam1 = dp.lambda1
    if start is None:
        y = np.array([lam1 + 0.01 * (1.0 - lam1), p_poly(lam1, p.a1)])
    else:
        y = np.asarray(start, dtype=float)[:2].copy()
        if np.any(y <= 0):
            raise DomainError("cycle search must start in the open positive quadrant")
    prm = p.as_array()
    atol = np.full(2, cfg.atol)
    sec = (np.array([0]), np.array([lam1]), np.array([1]))
    t = 0.0
    prev = None
    returns = 0
    residual = np.inf
    batch = 20
    while returns < max_returns:
        res = _kernels.solve(
            _kernels.PLANAR, t, y, t + 1e7, prm, *_NO_AUX, cfg.rtol, atol, cfg.max_step, 0.0,
            np.empty(0), *sec, batch, batch, 100_000_000,
        )
        ct, cy, status = res[2], res[3], res[9]
        if status not in (_kernels.STATUS_STOPPED, _kernels.STATUS_OK) or ct.size == 0:
            raise ConvergenceError(f"cycle search stalled (status {status})", residual)
        pts = cy if prev is None else np.vstack([prev[1][None, :], cy])
        tms = ct if prev is None else np.concatenate([[prev[0]], ct])
        returns += ct.size
        diffs = np.max(np.abs(np.diff(pts, axis=0)), axis=1)
        if diffs.size:
            residual = float(diffs[-1])
        if diffs.size and residual < delta_cycle:
            period = float(tms[-1] - tms[-2])
            return _resample(p, cy[-1], period, cfg, n_samples, residual, returns, lam1)
        prev = (float(ct[-1]), cy[-1].copy())
        t, y = float(ct[-1]), cy[-1].copy()
    raise ConvergenceError(f"cycle did not converge in {max_returns} returns", residual)


def _resample(p, gamma0, period, cfg, n_samples, residual, returns, lam1) -> LimitCycle:
    prm = p.as_array()
    times = np.linspace(0.0, period, n_samples + 1)
    res = _kernels.solve(
        _kernels.PLANAR, 0.0, gamma0.copy(), period, prm, *_NO_AUX, cfg.rtol, np.full(2, cfg.atol),
        cfg.max_step, 0.0, times, *_NO_SECTIONS, 0, -1, 100_000_000,
    )
    Y2 = res[0]
    samples = np.column_stack([Y2, np.zeros(len(times))])
    derivs = np.empty_like(samples)
    out = np.empty(3)
    for i, s in enumerate(samples):
        _kernels.field(_kernels.FULL, 0.0, s, prm, *_NO_AUX, out)
        derivs[i] = out
    closure = float(np.max(np.abs(samples[-1] - samples[0])))
    return LimitCycle(
        times=times,
        samples=samples,
        derivatives=derivs,
        period=period,
        section=("x", lam1, +1),
        y_max=float(samples[:, 1].max()),
        y_min=float(samples[:, 1].min()),
        convergence_residual=residual,
        closure_residual=closure,
        n_returns=returns,
    )


def monodromy(p: ParameterSet, c: LimitCycle, cfg: IntegratorConfig = CYCLE_CONFIG) -> np.ndarray:
    """``M(T)`` from ``M' = DF(gamma(t)) M``, ``M(0) = I``.

    The cycle is Hermite-interpolated from its uniform samples.
    """
    gap = float(c.times[1] - c.times[0])
    if gap > cfg.max_step:
        raise UsageError(f"cycle sample spacing {gap:g} exceeds max_step {cfg.max_step:g}")
    aux = np.column_stack([c.samples, c.derivatives])
    auxs = np.array([0.0, gap])
    res = _kernels.solve(
        _kernels.VAR_CYCLE, 0.0, np.eye(3).ravel(), c.period, p.as_array(), aux, auxs,
        cfg.rtol, np.full(9, cfg.atol), cfg.max_step, 0.0, np.empty(0), *_NO_SECTIONS, 0, -1, 100_000_000,
    )
    if res[9] != _kernels.STATUS_OK:
        raise ConvergenceError(f"variational integration failed (status {res[9]})")
    return res[6].reshape(3, 3).copy()


def planar_monodromy(p: ParameterSet, c: LimitCycle, cfg: IntegratorConfig = CYCLE_CONFIG) -> np.ndarray:
    """2x2 monodromy of the x-y subsystem, integrated jointly with the orbit."""
    y0 = np.concatenate([c.samples[0, :2], np.eye(2).ravel()])
    res = _kernels.solve(
        _kernels.VAR_PLANAR, 0.0, y0, c.period, p.as_array(), *_NO_AUX,
        cfg.rtol, np.full(6, cfg.atol), cfg.max_step, 0.0, np.empty(0), *_NO_SECTIONS, 0, -1, 100_000_000,
    )
    return res[6][2:].reshape(2, 2).copy()


def transversal_integrand(p: ParameterSet, y):
    """Per-capita growth of a rare top predator: ``-d2 + m2 y / (a2 + y)``."""
    return -p.d2 + p.m2 * y / (p.a2 + y)


def _periodic_mean(values: np.ndarray) -> float:
    # trapezoid rule over a full period (endpoint duplicates the start)
    return float(np.mean(values[:-1]))


def floquet(p: ParameterSet, c: LimitCycle, cfg: IntegratorConfig = CYCLE_CONFIG,
            rel_tol: float = 1e-6) -> FloquetResult:
    """Floquet multipliers of the planar cycle inside the full system."""
    M = monodromy(p, c, cfg)
    mult = np.linalg.eigvals(M)
    mult = tuple(sorted((complex(m) for m in mult), key=lambda m: -abs(m)))
    avg = _periodic_mean(transversal_integrand(p, c.samples[:, 1]))
    closed = float(np.exp(avg * c.period))
    if abs(M[2, 2] - closed) > rel_tol * abs(closed):
        raise ConsistencyError(f"M33 = {M[2, 2]!r} but quadrature gives {closed!r}")
    block = np.linalg.eigvals(M[:2, :2])
    trivial = int(np.argmin(np.abs(block - 1.0)))
    in_plane = complex(block[1 - trivial])
    triv_err = float(min(abs(m - 1.0) for m in mult))
    return FloquetResult(
        period=c.period,
        monodromy=M,
        multipliers=mult,
        m33_closed_form=closed,
        transversal_average=avg,
        trivial_multiplier_error=triv_err,
        in_plane_multiplier=in_plane,
        stable_in_R3=bool(avg < 0 and abs(in_plane) < 1.0),
    )


@dataclass(frozen=True)
class FCondition:
    lhs: float
    rhs: float
    holds: bool
    y_M: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "y_M": self.y_M}


def f_condition(p: ParameterSet, y_M: float = None) -> FCondition:
    """Sufficient condition for top-predator extinction around the cycle.

    ``a2 lambda2 / (a2 + y_M) > (1 + a1)^3 / (4 a1)``; ``y_M`` defaults to
    the attracting-set bound ``1 + 1/(4 d1)``.
    """
    dp = derived(p)
    if dp.lambda2 is None:
        raise DomainError("lambda2 undefined (m2 <= d2)")
    if y_M is None:
        y_M = attracting_set_bounds(p)[1]
    if not y_M > 0:
        raise DomainError("y_M must be positive")
    lhs = p.a2 * dp.lambda2 / (p.a2 + y_M)
    rhs = (1.0 + p.a1) ** 3 / (4.0 * p.a1)
    return FCondition(lhs, rhs, lhs > rhs, y_M)


def section_recurrence(times, points, tol: float, k_max: int = 16):
    """Smallest ``k`` with ``|P[i+k] - P[i]| < tol`` over the latest returns.

    Returns ``(k, period, residual)`` where ``period`` is the mean time
    between matching returns, or ``None`` when no ``k <= k_max`` recurs.
    """
    times = np.asarray(times)
    points = np.asarray(points)
    n = len(times)
    for k in range(1, k_max + 1):
        m = min(n - k, 3 * k + 3)
        if m < 3:
            return None
        a = points[n - k - m : n - k]
        b = points[n - m :]
        resid = float(np.max(np.abs(b - a)))
        if resid < tol:
            period = float(np.mean(times[n - m :] - times[n - k - m : n - k]))
            return k, period, resid
    return None
