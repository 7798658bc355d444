"""Numba kernels: bump-sum profiles, geodesic right-hand side, DOP853 stepping.

A profile is carried into the kernels as an ``(n, 3)`` float array of rows
``(a, b, amplitude)``; each row is the flat-at-endpoints bump supported on
``(a, b)`` normalised to peak value ``amplitude``.  An empty array is the
zero profile.

The state vector is ``(theta, phi, p_theta, p_phi)``.  The kernels integrate
the homogeneous geodesic Hamiltonian ``h = |p|``; since ``h`` is conserved this
is the flow of ``H = h**2 / 2`` with time rescaled by ``1 / h(y0)``, which is
what is coded (``inv_h0``).
"""
import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0

# stop codes returned by the drivers
STOP_END = 0
STOP_DOMAIN = 1
STOP_BOUNDARY = 2
STOP_MAX_STEPS = 3
STOP_UNDERFLOW = 4


@njit(cache=True)
def profile_value(theta, terms):
    f = 0.0
    for i in range(terms.shape[0]):
        a = terms[i, 0]
        b = terms[i, 1]
        if a < theta < b:
            u = (theta - a) * (b - theta)
            w = b - a
            f += terms[i, 2] * np.exp(4.0 / (w * w) - 1.0 / u)
    return f


@njit(cache=True)
def profile_derivative(theta, terms):
    df = 0.0
    for i in range(terms.shape[0]):
        a = terms[i, 0]
        b = terms[i, 1]
        if a < theta < b:
            u = (theta - a) * (b - theta)
            w = b - a
            g = terms[i, 2] * np.exp(4.0 / (w * w) - 1.0 / u)
            df += g * (a + b - 2.0 * theta) / (u * u)
    return df


@njit(cache=True)
def hamiltonian(y, terms):
    """Geodesic Hamiltonian h = sqrt(p_theta^2 / E + p_phi^2 / G)."""
    r = 1.0 + profile_value(y[0], terms)
    c = np.cos(y[0])
    return np.sqrt(y[2] * y[2] / (r * r) + y[3] * y[3] / (c * c))


@njit(cache=True)
def rhs(y, terms, inv_h0, out):
    theta = y[0]
    r = 1.0 + profile_value(theta, terms)
    dr = profile_derivative(theta, terms)
    c = np.cos(theta)
    s = np.sin(theta)
    pt = y[2]
    pp = y[3]
    out[0] = inv_h0 * pt / (r * r)
    out[1] = inv_h0 * pp / (c * c)
    out[2] = inv_h0 * (pt * pt * dr / (r * r * r) - pp * pp * s / (c * c * c))
    out[3] = 0.0


@njit(cache=True)
def _stages(y, f0, h, terms, inv_h0, K):
    n = y.shape[0]
    ytmp = np.empty(n)
    for j in range(n):
        K[0, j] = f0[j]
    for s in range(1, N_STAGES):
        for j in range(n):
            acc = 0.0
            for m in range(s):
                acc += A[s, m] * K[m, j]
            ytmp[j] = y[j] + h * acc
        rhs(ytmp, terms, inv_h0, K[s])
    y_new = np.empty(n)
    for j in range(n):
        acc = 0.0
        for m in range(N_STAGES):
            acc += B[m] * K[m, j]
        y_new[j] = y[j] + h * acc
    return y_new


@njit(cache=True)
def single_step(y, h, terms, inv_h0):
    """One DOP853 step of size ``h`` without error control."""
    n = y.shape[0]
    K = np.empty((N_STAGES + 1, n))
    f0 = np.empty(n)
    rhs(y, terms, inv_h0, f0)
    return _stages(y, f0, h, terms, inv_h0, K)


@njit(cache=True)
def _error_norm(K, h, y, y_new, rtol, atol):
    n = y.shape[0]
    e5 = 0.0
    e3 = 0.0
    for j in range(n):
        sc = atol + max(abs(y[j]), abs(y_new[j])) * rtol
        a5 = 0.0
        a3 = 0.0
        for m in range(N_STAGES + 1):
            a5 += E5[m] * K[m, j]
            a3 += E3[m] * K[m, j]
        e5 += (a5 / sc) ** 2
        e3 += (a3 / sc) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * n)


@njit(cache=True)
def _initial_step(y, f0, direction, rtol, atol, terms, inv_h0):
    n = y.shape[0]
    d0 = 0.0
    d1 = 0.0
    for j in range(n):
        sc = atol + abs(y[j]) * rtol
        d0 += (y[j] / sc) ** 2
        d1 += (f0[j] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = np.empty(n)
    for j in range(n):
        y1[j] = y[j] + h0 * direction * f0[j]
    f1 = np.empty(n)
    rhs(y1, terms, inv_h0, f1)
    d2 = 0.0
    for j in range(n):
        sc = atol + abs(y[j]) * rtol
        d2 += ((f1[j] - f0[j]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1)


@njit(cache=True)
def _capped(h_abs, y, h_max, cap_from):
    # embedded error estimates are unreliable across the flat edges of a
    # bump, so steps that can reach a support are capped
    if abs(y[0]) + 2.0 * h_abs >= cap_from:
        return min(h_abs, h_max)
    return h_abs


@njit(cache=True)
def _crossed(y_old, y_new, theta_max, boundary):
    """Terminal condition crossed during a step (0 = none)."""
    if abs(y_new[0]) >= theta_max:
        return STOP_DOMAIN
    if boundary:
        if y_new[1] <= 0.0 or y_new[1] >= np.pi:
            return STOP_BOUNDARY
    return 0


@njit(cache=True)
def integrate(y0, t_end, rtol, atol, h_max, cap_from, terms, theta_max,
              boundary, project, t_eval, max_steps):
    """Adaptive DOP853 from t = 0 to ``t_end`` (either sign).

    Returns ``(ts, ys, eval_ys, n_eval, stop)``: accepted step points (the
    first is the initial point), states at the ``t_eval`` times reached, and
    a stop code.  On a terminal stop the last accepted step is the one during
    which the terminal condition was crossed.
    """
    n = y0.shape[0]
    h0 = hamiltonian(y0, terms)
    inv_h0 = 1.0 / h0
    direction = 1.0 if t_end >= 0.0 else -1.0
    cap = 256
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    n_pts = 1
    ts[0] = 0.0
    ys[0] = y0
    eval_ys = np.empty((t_eval.shape[0], n))
    n_eval = 0
    while n_eval < t_eval.shape[0] and t_eval[n_eval] * direction <= 0.0:
        eval_ys[n_eval] = y0
        n_eval += 1
    if t_end == 0.0:
        return ts[:1], ys[:1], eval_ys, n_eval, STOP_END

    K = np.empty((N_STAGES + 1, n))
    y = y0.copy()
    f = np.empty(n)
    rhs(y, terms, inv_h0, f)
    t = 0.0
    h_abs = _initial_step(y, f, direction, rtol, atol, terms, inv_h0)
    stop = STOP_END
    steps = 0
    while (t_end - t) * direction > 0.0:
        if steps >= max_steps:
            stop = STOP_MAX_STEPS
            break
        min_step = 10.0 * abs(np.nextafter(t, direction * np.inf) - t)
        if h_abs < min_step:
            stop = STOP_UNDERFLOW
            break
        rejected = False
        while True:
            h_abs = _capped(h_abs, y, h_max, cap_from)
            h = h_abs * direction
            t_new = t + h
            if (t_new - t_end) * direction > 0.0:
                t_new = t_end
            h = t_new - t
            h_abs = abs(h)
            y_new = _stages(y, f, h, terms, inv_h0, K)
            f_new = np.empty(n)
            rhs(y_new, terms, inv_h0, f_new)
            for j in range(n):
                K[N_STAGES, j] = f_new[j]
            err = _error_norm(K, h, y, y_new, rtol, atol)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                if rejected:
                    factor = min(1.0, factor)
                h_next = h_abs * factor
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            rejected = True
            if h_abs < min_step:
                break
        if h_abs < min_step and err >= 1.0:
            stop = STOP_UNDERFLOW
            break
        steps += 1
        if project:
            scale = h0 / hamiltonian(y_new, terms)
            y_new[2] *= scale
            y_new[3] *= scale
            rhs(y_new, terms, inv_h0, f_new)
        code = _crossed(y, y_new, theta_max, boundary)
        while (n_eval < t_eval.shape[0]
               and (t_eval[n_eval] - t_new) * direction <= 0.0):
            if code != 0:
                break
            te = t_eval[n_eval]
            if te == t_new:
                eval_ys[n_eval] = y_new
            else:
                eval_ys[n_eval] = single_step(y, te - t, terms, inv_h0)
            n_eval += 1
        if n_pts == cap:
            cap *= 2
            ts2 = np.empty(cap)
            ys2 = np.empty((cap, n))
            ts2[:n_pts] = ts[:n_pts]
            ys2[:n_pts] = ys[:n_pts]
            ts = ts2
            ys = ys2
        ts[n_pts] = t_new
        ys[n_pts] = y_new
        n_pts += 1
        t = t_new
        y = y_new
        f = f_new
        h_abs = h_next
        if code != 0:
            stop = code
            break
    return ts[:n_pts], ys[:n_pts], eval_ys, n_eval, stop


@njit(cache=True)
def flow_final(y0, t_end, rtol, atol, h_max, cap_from, terms):
    """State at ``t_end`` only (no storage, no events)."""
    n = y0.shape[0]
    if t_end == 0.0:
        return y0.copy(), STOP_END
    inv_h0 = 1.0 / hamiltonian(y0, terms)
    direction = 1.0 if t_end >= 0.0 else -1.0
    K = np.empty((N_STAGES + 1, n))
    y = y0.copy()
    f = np.empty(n)
    rhs(y, terms, inv_h0, f)
    t = 0.0
    h_abs = _initial_step(y, f, direction, rtol, atol, terms, inv_h0)
    f_new = np.empty(n)
    while (t_end - t) * direction > 0.0:
        min_step = 10.0 * abs(np.nextafter(t, direction * np.inf) - t)
        if h_abs < min_step:
            return y, STOP_UNDERFLOW
        rejected = False
        while True:
            h_abs = _capped(h_abs, y, h_max, cap_from)
            t_new = t + h_abs * direction
            if (t_new - t_end) * direction > 0.0:
                t_new = t_end
            h = t_new - t
            h_abs = abs(h)
            y_new = _stages(y, f, h, terms, inv_h0, K)
            rhs(y_new, terms, inv_h0, f_new)
            for j in range(n):
                K[N_STAGES, j] = f_new[j]
            err = _error_norm(K, h, y, y_new, rtol, atol)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                if rejected:
                    factor = min(1.0, factor)
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            rejected = True
            if h_abs < min_step:
                return y, STOP_UNDERFLOW
        t = t_new
        y = y_new
        for j in range(n):
            f[j] = f_new[j]
        h_abs = h_abs * factor
    return y, STOP_END


@njit(cache=True)
def flow_final_batch(y0s, t_end, rtol, atol, h_max, cap_from, terms):
    out = np.empty_like(y0s)
    codes = np.empty(y0s.shape[0], dtype=np.int64)
    for i in range(y0s.shape[0]):
        y, code = flow_final(y0s[i], t_end, rtol, atol, h_max, cap_from,
                             terms)
        out[i] = y
        codes[i] = code
    return out, codes


@njit(cache=True)
def locate(y, h, inv_h0, terms, comp, offset, t_tol):
    """Bisect ``y[comp] - offset`` for a sign change inside a step of size h.

    The step is re-evaluated from its start with a single DOP853 step of the
    trial length, so the located point sits on the same discrete solution.
    Returns ``(s, y_at_s)`` with ``s`` the offset from the step start.
    """
    lo = 0.0
    hi = h
    g_lo = y[comp] - offset
    y_hi = single_step(y, hi, terms, inv_h0)
    while abs(hi - lo) > t_tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        y_mid = single_step(y, mid, terms, inv_h0)
        g_mid = y_mid[comp] - offset
        if g_mid == 0.0:
            return mid, y_mid
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo = mid
            g_lo = g_mid
        else:
            hi = mid
            y_hi = y_mid
    return hi, y_hi
