"""Compiled Dormand-Prince 5(4) kernels for the co-moving Hamiltonian system.

State layout: ``y = [q, p]`` or, for the tangent flow,
``y = [q, p, m11, m12, m21, m22, action]`` where ``m`` is the row-major
monodromy matrix and ``action`` accumulates the generating-function integrand.

Status codes returned by the drivers: 0 finished, 1 step budget exhausted,
2 step size underflow.
"""

import math

import numpy as np
from numba import njit

# Dormand-Prince 5(4) coefficients
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# fifth-order minus embedded fourth-order weights
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0


@njit(cache=True)
def forcing_value(t, omega, cc, sc):
    s = 0.0
    for k in range(cc.shape[0]):
        w = (k + 1) * omega * t
        s += cc[k] * math.cos(w) + sc[k] * math.sin(w)
    return s


@njit(cache=True)
def rhs(t, y, dy, a, K, omega, cc, sc):
    q = y[0]
    p = y[1]
    r = math.sqrt(1.0 + p * p)
    ang = q + K * t
    f = forcing_value(t, omega, cc, sc)
    dy[0] = p / r - K
    dy[1] = -a * math.sin(ang) + f
    if y.shape[0] > 2:
        g = 1.0 / (r * r * r)
        c = -a * math.cos(ang)
        dy[2] = g * y[4]
        dy[3] = g * y[5]
        dy[4] = c * y[2]
        dy[5] = c * y[3]
        dy[6] = -1.0 / r + a * math.cos(ang) + f * q


@njit(cache=True)
def _stages(t, y, h, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, a, K, omega, cc, sc):
    """One DP5 step from (t, y) with k1 = f(t, y) given; fills ynew and k7."""
    n = y.shape[0]
    for i in range(n):
        ytmp[i] = y[i] + h * A21 * k1[i]
    rhs(t + C2 * h, ytmp, k2, a, K, omega, cc, sc)
    for i in range(n):
        ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    rhs(t + C3 * h, ytmp, k3, a, K, omega, cc, sc)
    for i in range(n):
        ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    rhs(t + C4 * h, ytmp, k4, a, K, omega, cc, sc)
    for i in range(n):
        ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    rhs(t + C5 * h, ytmp, k5, a, K, omega, cc, sc)
    for i in range(n):
        ytmp[i] = y[i] + h * (
            A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
        )
    rhs(t + h, ytmp, k6, a, K, omega, cc, sc)
    for i in range(n):
        ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
    rhs(t + h, ynew, k7, a, K, omega, cc, sc)


@njit(cache=True)
def _error_norm(y, ynew, h, k1, k3, k4, k5, k6, k7, rtol, atol):
    n = y.shape[0]
    acc = 0.0
    for i in range(n):
        e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        if i == 0:
            # the lifted angle grows without bound; measure its error on a unit scale
            sc = atol + rtol
        else:
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (e / sc) ** 2
    return math.sqrt(acc / n)


@njit(cache=True)
def integrate(y0, t0, t1, h0, rtol, atol, max_steps, a, K, omega, cc, sc):
    """Adaptive DP5 from t0 to t1 (t1 >= t0).

    Returns (y, t_reached, status, n_steps, h_next).
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    ytmp = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    t = t0
    if t1 <= t0:
        return y, t, 0, 0, h0
    h = min(h0, t1 - t0)
    rhs(t, y, k1, a, K, omega, cc, sc)
    steps = 0
    rejected = False
    while t < t1:
        if steps >= max_steps:
            return y, t, 1, steps, h
        last = False
        if t + h >= t1:
            h_use = t1 - t
            last = True
        else:
            h_use = h
        _stages(t, y, h_use, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, a, K, omega, cc, sc)
        err = _error_norm(y, ynew, h_use, k1, k3, k4, k5, k6, k7, rtol, atol)
        steps += 1
        if err <= 1.0:
            if last:
                t = t1
            else:
                t = t + h_use
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
            if rejected:
                fac = min(fac, 1.0)
            rejected = False
            # a clipped final step does not shrink the carried step size
            if not last or h_use >= h:
                h = h_use * fac
        else:
            fac = max(FAC_MIN, SAFETY * err ** -0.2)
            h = h_use * fac
            rejected = True
            if h < 1e-14 * max(1.0, abs(t)):
                return y, t, 2, steps, h
    return y, t, 0, steps, h


@njit(cache=True)
def single_step(t, y, h, a, K, omega, cc, sc):
    n = y.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    rhs(t, y, k1, a, K, omega, cc, sc)
    _stages(t, y, h, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, a, K, omega, cc, sc)
    return ynew


@njit(cache=True)
def integrate_to_event(
    y0, t0, t_max, h0, rtol, atol, max_steps, comp, level, a, K, omega, cc, sc, t_tol
):
    """Integrate until ``y[comp] - level`` changes sign.

    The sign at the start is taken from the first point where the event
    function is nonzero, so starting exactly on the event surface is fine.
    The crossing is located to ``t_tol`` by bisection on the size of a single
    DP5 step from the last accepted point.

    Returns (t_event, y_event, status) with status 0 found, 1 budget
    exhausted, 2 step underflow, 3 no crossing before t_max.
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    ytmp = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    t = t0
    h = min(h0, t_max - t0)
    rhs(t, y, k1, a, K, omega, cc, sc)
    g_prev = y[comp] - level
    steps = 0
    rejected = False
    while t < t_max:
        if steps >= max_steps:
            return t, y, 1
        h_use = min(h, t_max - t)
        _stages(t, y, h_use, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, a, K, omega, cc, sc)
        err = _error_norm(y, ynew, h_use, k1, k3, k4, k5, k6, k7, rtol, atol)
        steps += 1
        if err > 1.0:
            h = h_use * max(FAC_MIN, SAFETY * err ** -0.2)
            rejected = True
            if h < 1e-14 * max(1.0, abs(t)):
                return t, y, 2
            continue
        g_new = ynew[comp] - level
        if g_prev != 0.0 and (g_new == 0.0 or (g_new > 0.0) != (g_prev > 0.0)):
            lo = 0.0
            hi = h_use
            y_hi = ynew.copy()
            while hi - lo > t_tol:
                mid = 0.5 * (lo + hi)
                y_mid = single_step(t, y, mid, a, K, omega, cc, sc)
                g_mid = y_mid[comp] - level
                if g_mid == 0.0:
                    return t + mid, y_mid, 0
                if (g_mid > 0.0) == (g_prev > 0.0):
                    lo = mid
                else:
                    hi = mid
                    y_hi = y_mid
            return t + hi, y_hi, 0
        t = t + h_use
        for i in range(n):
            y[i] = ynew[i]
            k1[i] = k7[i]
        if g_new != 0.0:
            g_prev = g_new
        if err == 0.0:
            fac = FAC_MAX
        else:
            fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
        if rejected:
            fac = min(fac, 1.0)
        rejected = False
        h = h_use * fac
    return t, y, 3
