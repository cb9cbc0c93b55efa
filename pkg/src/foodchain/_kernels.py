"""Compiled Dormand-Prince 5(4) integrator for the food chain system.

One integrator serves every right-hand side the package needs; ``kind``
selects the vector field:

    0  full 3-species system                  (n = 3)
    1  x-y subsystem                          (n = 2)
    2  full system + one tangent vector       (n = 6)
    3  full system + 3x3 variational matrix   (n = 12, row-major)
    4  3x3 variational matrix along a cycle   (n = 9, non-autonomous;
       the cycle is Hermite-interpolated from ``aux``/``auxs``)
    5  x-y subsystem + 2x2 variational matrix (n = 6)
    6  full system without positivity projection (n = 3)

Population components are projected onto the nonnegative orthant after
every accepted step (kind 6 skips this, e.g. for finite differences
across a face).

Parameter vector layout is ``[a1, a2, d1, d2, m1, m2]``.
"""

import numpy as np
from numba import njit

FULL = 0
PLANAR = 1
TANGENT = 2
VAR_FULL = 3
VAR_CYCLE = 4
VAR_PLANAR = 5
FULL_SIGNED = 6

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_STOPPED = 3
STATUS_MAX_STEPS = 4

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    ]
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# Shampine's 4th-order continuous extension (same as MATLAB ode45 / scipy RK45).
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@njit(cache=True)
def _jac3(x, y, z, prm, J):
    a1, a2, d1, d2, m1, m2 = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5]
    ax = a1 + x
    ay = a2 + y
    J[0, 0] = 1.0 - 2.0 * x - a1 * y / (ax * ax)
    J[0, 1] = -x / ax
    J[0, 2] = 0.0
    J[1, 0] = a1 * m1 * y / (ax * ax)
    J[1, 1] = -d1 + m1 * x / ax - a2 * z / (ay * ay)
    J[1, 2] = -y / ay
    J[2, 0] = 0.0
    J[2, 1] = a2 * m2 * z / (ay * ay)
    J[2, 2] = -d2 + m2 * y / ay


@njit(cache=True)
def _f3(x, y, z, prm, out):
    a1, a2, d1, d2, m1, m2 = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5]
    out[0] = x * (1.0 - x - y / (a1 + x))
    out[1] = y * (-d1 + m1 * x / (a1 + x) - z / (a2 + y))
    out[2] = z * (-d2 + m2 * y / (a2 + y))


@njit(cache=True)
def _cycle_point(t, aux, auxs, g):
    # cubic Hermite on uniform samples; aux rows are (x, y, z, x', y', z')
    t0 = auxs[0]
    dt = auxs[1]
    n = aux.shape[0]
    u = (t - t0) / dt
    i = int(np.floor(u))
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    s = u - i
    h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s)
    h10 = s * (1.0 - s) * (1.0 - s)
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    for k in range(3):
        g[k] = (
            h00 * aux[i, k]
            + h10 * dt * aux[i, 3 + k]
            + h01 * aux[i + 1, k]
            + h11 * dt * aux[i + 1, 3 + k]
        )


@njit(cache=True)
def field(kind, t, y, prm, aux, auxs, out):
    if kind == FULL:
        _f3(y[0], y[1], y[2], prm, out)
    elif kind == PLANAR:
        a1, d1, m1 = prm[0], prm[2], prm[4]
        out[0] = y[0] * (1.0 - y[0] - y[1] / (a1 + y[0]))
        out[1] = y[1] * (-d1 + m1 * y[0] / (a1 + y[0]))
    elif kind == TANGENT:
        _f3(y[0], y[1], y[2], prm, out)
        J = np.empty((3, 3))
        _jac3(y[0], y[1], y[2], prm, J)
        for i in range(3):
            out[3 + i] = J[i, 0] * y[3] + J[i, 1] * y[4] + J[i, 2] * y[5]
    elif kind == VAR_FULL:
        _f3(y[0], y[1], y[2], prm, out)
        J = np.empty((3, 3))
        _jac3(y[0], y[1], y[2], prm, J)
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    acc += J[i, k] * y[3 + 3 * k + j]
                out[3 + 3 * i + j] = acc
    elif kind == VAR_CYCLE:
        g = np.empty(3)
        _cycle_point(t, aux, auxs, g)
        J = np.empty((3, 3))
        _jac3(g[0], g[1], g[2], prm, J)
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    acc += J[i, k] * y[3 * k + j]
                out[3 * i + j] = acc
    else:  # VAR_PLANAR
        a1, d1, m1 = prm[0], prm[2], prm[4]
        x = y[0]
        yy = y[1]
        ax = a1 + x
        out[0] = x * (1.0 - x - yy / ax)
        out[1] = yy * (-d1 + m1 * x / ax)
        j00 = 1.0 - 2.0 * x - a1 * yy / (ax * ax)
        j01 = -x / ax
        j10 = a1 * m1 * yy / (ax * ax)
        j11 = -d1 + m1 * x / ax
        for j in range(2):
            out[2 + j] = j00 * y[2 + j] + j01 * y[4 + j]
            out[4 + j] = j10 * y[2 + j] + j11 * y[4 + j]


@njit(cache=True)
def _step(kind, t, y, h, K, prm, aux, auxs, ynew, ytmp):
    """One Dormand-Prince step; K[0] must hold f(t, y). Fills K[1..6], ynew."""
    n = y.shape[0]
    for s in range(1, 6):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * K[j, i]
            ytmp[i] = y[i] + h * acc
        field(kind, t + _C[s] * h, ytmp, prm, aux, auxs, K[s])
    for i in range(n):
        acc = 0.0
        for j in range(6):
            acc += _B[j] * K[j, i]
        ynew[i] = y[i] + h * acc
    field(kind, t + h, ynew, prm, aux, auxs, K[6])


@njit(cache=True)
def _error_norm(y, ynew, K, h, rtol, atol):
    n = y.shape[0]
    acc = 0.0
    for i in range(n):
        e = 0.0
        for j in range(7):
            e += _E[j] * K[j, i]
        e *= h
        sc = atol[i] + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (e / sc) ** 2
    return np.sqrt(acc / n)


@njit(cache=True)
def _initial_step(kind, t, y, f0, prm, aux, auxs, rtol, atol, max_step, direction_span):
    n = y.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol[i] + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = np.empty(n)
    for i in range(n):
        y1[i] = y[i] + h0 * f0[i]
    f1 = np.empty(n)
    field(kind, t + h0, y1, prm, aux, auxs, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol[i] + rtol * abs(y[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


@njit(cache=True)
def _dense(yold, K, h, sigma, out):
    n = yold.shape[0]
    s1 = sigma
    s2 = s1 * sigma
    s3 = s2 * sigma
    s4 = s3 * sigma
    for i in range(n):
        acc = 0.0
        for j in range(7):
            kj = K[j, i]
            acc += kj * (_P[j, 0] * s1 + _P[j, 1] * s2 + _P[j, 2] * s3 + _P[j, 3] * s4)
        out[i] = yold[i] + h * acc


@njit(cache=True)
def _hermite_root(g0, g1, d0, d1, h, level):
    # root in (0, 1] of the cubic Hermite interpolant of a scalar minus level
    lo = 0.0
    hi = 1.0
    glo = g0 - level
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        s = mid
        v = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s) * g0
            + s * (1.0 - s) * (1.0 - s) * h * d0
            + s * s * (3.0 - 2.0 * s) * g1
            + s * s * (s - 1.0) * h * d1
            - level
        )
        if (v > 0.0) == (glo > 0.0) and v != 0.0:
            lo = mid
            glo = v
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def _n_population(kind):
    if kind == FULL or kind == TANGENT or kind == VAR_FULL:
        return 3
    if kind == PLANAR or kind == VAR_PLANAR:
        return 2
    return 0


@njit(cache=True)
def solve(
    kind,
    t0,
    y0,
    t_end,
    prm,
    aux,
    auxs,
    rtol,
    atol,
    max_step,
    h_init,
    t_out,
    sec_idx,
    sec_level,
    sec_dir,
    sec_cap,
    stop_after,
    max_steps,
):
    """Integrate from ``t0`` to ``t_end`` (landing exactly on ``t_end``).

    Dense output is written at the sorted times ``t_out``.  Crossings of the
    sections ``y[sec_idx[j]] = sec_level[j]`` in direction ``sec_dir[j]``
    (+1, -1, 0 for both) are located by cubic Hermite interpolation over
    the step and polished with Newton iterations that re-take the step
    from its left end.  Integration stops early once section 0 has been
    crossed ``stop_after`` times (``stop_after < 0`` disables this).
    """
    n_pop = _n_population(kind)
    if kind == FULL_SIGNED:
        kind = FULL
    n = y0.shape[0]
    nsec = sec_idx.shape[0]
    n_out = t_out.shape[0]
    Y = np.full((n_out, n), np.nan)
    cross_t = np.empty(sec_cap)
    cross_y = np.empty((sec_cap, n))
    cross_s = np.empty(sec_cap, dtype=np.int64)
    n_cross = 0
    n_sec0 = 0

    K = np.empty((7, n))
    Kc = np.empty((7, n))
    y = y0.copy()
    ynew = np.empty(n)
    ytmp = np.empty(n)
    yc = np.empty(n)
    t = t0
    field(kind, t, y, prm, aux, auxs, K[0])

    io = 0
    while io < n_out and t_out[io] < t0:
        io += 1
    while io < n_out and t_out[io] == t0:
        for i in range(n):
            Y[io, i] = y[i]
        io += 1

    span = t_end - t0
    if h_init > 0.0:
        h = min(h_init, max_step)
    else:
        h = _initial_step(kind, t, y, K[0], prm, aux, auxs, rtol, atol, max_step, span)
    status = STATUS_OK
    steps = 0
    eps = 2.220446049250313e-16

    while t < t_end:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        h = min(h, max_step)
        last = False
        if t + h >= t_end:
            h_use = t_end - t
            last = True
        else:
            h_use = h
        if h_use < 10.0 * eps * max(abs(t), 1.0):
            status = STATUS_UNDERFLOW
            break
        _step(kind, t, y, h_use, K, prm, aux, auxs, ynew, ytmp)
        err = _error_norm(y, ynew, K, h_use, rtol, atol)
        finite = True
        for i in range(n):
            if not np.isfinite(ynew[i]):
                finite = False
        if not finite:
            err = np.inf
        if err > 1.0:
            if not np.isfinite(err):
                h = h_use * 0.2
            else:
                h = h_use * max(0.2, 0.9 * err ** (-0.2))
            if h < 10.0 * eps * max(abs(t), 1.0):
                status = STATUS_NONFINITE if not finite else STATUS_UNDERFLOW
                break
            continue
        steps += 1
        t_new = t_end if last else t + h_use

        # components decaying below atol can drift across zero; the faces
        # are invariant, so project and refresh the FSAL derivative
        projected = False
        for i in range(n_pop):
            if ynew[i] < 0.0:
                ynew[i] = 0.0
                projected = True
        if projected:
            field(kind, t_new, ynew, prm, aux, auxs, K[6])

        # dense output
        while io < n_out and t_out[io] <= t_new:
            if t_out[io] == t_new:
                for i in range(n):
                    Y[io, i] = ynew[i]
            else:
                _dense(y, K, h_use, (t_out[io] - t) / h_use, Y[io])
            io += 1

        # section crossings
        stop = False
        for j in range(nsec):
            c = sec_idx[j]
            g0 = y[c] - sec_level[j]
            g1 = ynew[c] - sec_level[j]
            hit = False
            if sec_dir[j] >= 0 and g0 < 0.0 and g1 >= 0.0:
                hit = True
            if sec_dir[j] <= 0 and g0 > 0.0 and g1 <= 0.0:
                hit = True
            if not hit:
                continue
            sigma = _hermite_root(y[c], ynew[c], K[0, c], K[6, c], h_use, sec_level[j])
            tau = sigma * h_use
            for i in range(n):
                Kc[0, i] = K[0, i]
            for _ in range(4):
                _step(kind, t, y, tau, Kc, prm, aux, auxs, yc, ytmp)
                g = yc[c] - sec_level[j]
                dg = Kc[6, c]
                if dg == 0.0:
                    break
                dtau = -g / dg
                tau += dtau
                if abs(dtau) <= 1e-15 * max(1.0, abs(t)):
                    break
            if tau <= 0.0 or tau > h_use:
                tau = sigma * h_use
            _step(kind, t, y, tau, Kc, prm, aux, auxs, yc, ytmp)
            if n_cross < sec_cap:
                cross_t[n_cross] = t + tau
                for i in range(n):
                    cross_y[n_cross, i] = yc[i]
                cross_s[n_cross] = j
                n_cross += 1
            if j == 0:
                n_sec0 += 1
                if stop_after >= 0 and n_sec0 >= stop_after:
                    stop = True

        t = t_new
        for i in range(n):
            y[i] = ynew[i]
            K[0, i] = K[6, i]
        if err == 0.0:
            fac = 10.0
        else:
            fac = min(10.0, max(0.2, 0.9 * err ** (-0.2)))
        if not last:
            h = h_use * fac
        elif h_use * fac > h:
            h = h_use * fac
        if stop:
            status = STATUS_STOPPED
            break

    return (
        Y,
        io,
        cross_t[:n_cross].copy(),
        cross_y[:n_cross].copy(),
        cross_s[:n_cross].copy(),
        t,
        y,
        h,
        steps,
        status,
    )


@njit(cache=True)
def lyapunov(y0, prm, t_discard, t_total, tau, rtol, atol, max_step):
    """Tangent-vector renormalization (largest exponent).

    ``y0`` is ``(x, y, z, v1, v2, v3)``.  The tangent vector is renormalized
    every ``tau`` time units; logs of growth are accumulated after
    ``t_discard``.  Returns the running estimate after every post-discard
    renormalization and the final state.
    """
    n_seg = int(np.floor(t_total / tau + 0.5))
    n_disc = int(np.floor(t_discard / tau + 0.5))
    hist = np.empty(max(n_seg - n_disc, 0))
    aux = np.zeros((2, 6))
    auxs = np.zeros(2)
    t_out = np.empty(0)
    sec_idx = np.empty(0, dtype=np.int64)
    sec_lv = np.empty(0)
    sec_dir = np.empty(0, dtype=np.int64)
    y = y0.copy()
    nrm = 0.0
    for i in range(3, 6):
        nrm += y[i] * y[i]
    nrm = np.sqrt(nrm)
    for i in range(3, 6):
        y[i] /= nrm
    h = 0.0
    acc = 0.0
    status = STATUS_OK
    k = 0
    for seg in range(n_seg):
        t0 = seg * tau
        res = solve(TANGENT, t0, y, t0 + tau, prm, aux, auxs, rtol, atol, max_step, h,
                    t_out, sec_idx, sec_lv, sec_dir, 0, -1, 10_000_000)
        st = res[9]
        if st != STATUS_OK:
            status = st
            break
        y = res[6].copy()
        h = res[7]
        nrm = 0.0
        for i in range(3, 6):
            nrm += y[i] * y[i]
        nrm = np.sqrt(nrm)
        for i in range(3, 6):
            y[i] /= nrm
        if seg >= n_disc:
            acc += np.log(nrm)
            hist[k] = acc / ((k + 1) * tau)
            k += 1
    return hist[:k].copy(), y, status
