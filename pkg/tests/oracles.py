"""Independent reference computations used only by the tests."""

import numpy as np
from numba import njit

from foodchain import _kernels

_NO_SEC = (np.empty(0, dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64))


@njit(cache=True)
def _planar(x, y, a1, d1, m1):
    return x * (1 - x - y / (a1 + x)), y * (-d1 + m1 * x / (a1 + x))


@njit(cache=True)
def rk4_section_times(x, y, a1, d1, m1, level, dt, n_cross):
    """Fixed-step RK4 on the x-y subsystem; upward crossings of ``x = level``.

    Crossing times come from bisection on the cubic Hermite interpolant
    over the bracketing step.
    """
    out = np.empty(n_cross)
    k = 0
    t = 0.0
    fx, fy = _planar(x, y, a1, d1, m1)
    while k < n_cross:
        k2x, k2y = _planar(x + 0.5 * dt * fx, y + 0.5 * dt * fy, a1, d1, m1)
        k3x, k3y = _planar(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, a1, d1, m1)
        k4x, k4y = _planar(x + dt * k3x, y + dt * k3y, a1, d1, m1)
        xn = x + dt / 6 * (fx + 2 * k2x + 2 * k3x + k4x)
        yn = y + dt / 6 * (fy + 2 * k2y + 2 * k3y + k4y)
        fxn, fyn = _planar(xn, yn, a1, d1, m1)
        if x < level <= xn:
            lo, hi = 0.0, 1.0
            for _ in range(60):
                s = 0.5 * (lo + hi)
                h00 = 2 * s**3 - 3 * s**2 + 1
                h10 = s**3 - 2 * s**2 + s
                h01 = -2 * s**3 + 3 * s**2
                h11 = s**3 - s**2
                v = h00 * x + h10 * dt * fx + h01 * xn + h11 * dt * fxn - level
                if v < 0:
                    lo = s
                else:
                    hi = s
            out[k] = t + 0.5 * (lo + hi) * dt
            k += 1
        x, y, fx, fy = xn, yn, fxn, fyn
        t += dt
    return out


def flow(p, s0, t_end, rtol=1e-13, atol=1e-16, max_step=0.1, signed=True):
    """Time-``t_end`` map of the full system; ``signed`` allows negative states."""
    kind = _kernels.FULL_SIGNED if signed else _kernels.FULL
    res = _kernels.solve(
        kind, 0.0, np.asarray(s0, dtype=float).copy(), float(t_end), p.as_array(),
        np.zeros((2, 6)), np.zeros(2), rtol, np.full(3, atol), max_step, 0.0, np.empty(0),
        *_NO_SEC, 0, -1, 100_000_000,
    )
    return res[6].copy()


def separation_exponent(p, s0, t_discard, t_total, tau=0.5, d0=1e-8, seed=0):
    """Largest exponent from two nearby trajectories, renormalized every ``tau``."""
    s = flow(p, s0, t_discard, rtol=1e-11, atol=1e-14, max_step=1.0, signed=False)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(3)
    u = s + d0 * v / np.linalg.norm(v)
    acc = 0.0
    n = int(round(t_total / tau))
    for _ in range(n):
        s1 = flow(p, s, tau, rtol=1e-11, atol=1e-14, max_step=1.0, signed=False)
        u1 = flow(p, u, tau, rtol=1e-11, atol=1e-14, max_step=1.0, signed=False)
        d = np.linalg.norm(u1 - s1)
        acc += np.log(d / d0)
        u = s1 + (u1 - s1) * d0 / d
        s = s1
    return acc / (n * tau)
