"""Independent reference computations used only by the tests.

Nothing here imports the integrator or solver under test.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _field(t, q, p, a, K, omega, cc, sc):
    f = 0.0
    for k in range(cc.shape[0]):
        f += cc[k] * math.cos((k + 1) * omega * t) + sc[k] * math.sin((k + 1) * omega * t)
    return p / math.sqrt(1.0 + p * p) - K, f - a * math.sin(q + K * t)


@njit(cache=True)
def _rk4(q, p, t0, t1, n, a, K, omega, cc, sc):
    h = (t1 - t0) / n
    for i in range(n):
        t = t0 + i * h
        k1q, k1p = _field(t, q, p, a, K, omega, cc, sc)
        k2q, k2p = _field(t + h / 2, q + h / 2 * k1q, p + h / 2 * k1p, a, K, omega, cc, sc)
        k3q, k3p = _field(t + h / 2, q + h / 2 * k2q, p + h / 2 * k2p, a, K, omega, cc, sc)
        k4q, k4p = _field(t + h, q + h * k3q, p + h * k3p, a, K, omega, cc, sc)
        q += h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return q, p


def rk4_flow(a, T, N, cos, sin, q0, p0, t0, t1, n_steps=1_000_000):
    """Fixed-step RK4 for q' = p/sqrt(1+p^2) - K, p' = -a sin(q + K t) + f(t)."""
    n = max(len(cos), len(sin))
    cc = np.zeros(n)
    sc = np.zeros(n)
    cc[: len(cos)] = cos
    sc[: len(sin)] = sin
    K = 2 * math.pi * N / T
    return _rk4(float(q0), float(p0), float(t0), float(t1), int(n_steps), float(a), K,
                2 * math.pi / T, cc, sc)


def polyline_crossings(qa, pa, qb, pb):
    """Number of proper crossings between the 2 pi-periodic graph polyline
    (qa, pa) (qa sorted in [0, 2 pi)) and the closed image polyline (qb, pb)
    given as a lifted sequence with qb[-1] ~ qb[0] + 2 pi after wrapping.

    Brute-force segment intersection over the universal cover: the graph is
    unrolled over enough periods to cover the image.
    """
    two_pi = 2 * math.pi
    qb = np.asarray(qb, float)
    pb = np.asarray(pb, float)
    qb_closed = np.append(qb, qb[0] + two_pi)
    pb_closed = np.append(pb, pb[0])
    k_lo = int(math.floor(qb_closed.min() / two_pi)) - 1
    k_hi = int(math.floor(qb_closed.max() / two_pi)) + 1
    gq = np.concatenate([qa + two_pi * k for k in range(k_lo, k_hi + 1)] + [[qa[0] + two_pi * (k_hi + 1)]])
    gp = np.concatenate([pa for _ in range(k_lo, k_hi + 1)] + [[pa[0]]])
    count = 0
    for i in range(len(qb_closed) - 1):
        x1, y1, x2, y2 = qb_closed[i], pb_closed[i], qb_closed[i + 1], pb_closed[i + 1]
        lo, hi = min(x1, x2), max(x1, x2)
        js = np.flatnonzero((gq[1:] >= lo) & (gq[:-1] <= hi))
        for j in js:
            x3, y3, x4, y4 = gq[j], gp[j], gq[j + 1], gp[j + 1]
            d = (x2 - x1) * (y4 - y3) - (y2 - y1) * (x4 - x3)
            if d == 0:
                continue
            s = ((x3 - x1) * (y4 - y3) - (y3 - y1) * (x4 - x3)) / d
            u = ((x3 - x1) * (y2 - y1) - (y3 - y1) * (x2 - x1)) / d
            if 0 <= s < 1 and 0 <= u < 1:
                count += 1
    return count


def scipy_map(a, T, N, cos, sin, z, rtol=1e-12, atol=1e-13):
    """Time-T map through scipy's DOP853 with a separately coded field."""
    from scipy.integrate import solve_ivp

    K = 2 * math.pi * N / T
    w = 2 * math.pi / T

    def rhs(t, y):
        f = sum(c * math.cos((k + 1) * w * t) for k, c in enumerate(cos))
        f += sum(s * math.sin((k + 1) * w * t) for k, s in enumerate(sin))
        return [y[1] / math.sqrt(1 + y[1] ** 2) - K, f - a * math.sin(y[0] + K * t)]

    sol = solve_ivp(rhs, (0.0, T), list(z), method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1]


def multistart_newton(a, T, N, cos, sin, seeds):
    """Roots of S(z) - z from each seed via scipy's hybrid method on the
    DOP853 map.  Returns the converged roots (residual < 1e-9)."""
    from scipy.optimize import root

    roots = []
    for z0 in seeds:
        sol = root(lambda z: scipy_map(a, T, N, cos, sin, z) - z, z0, method="hybr",
                   options={"xtol": 1e-13})
        if np.linalg.norm(scipy_map(a, T, N, cos, sin, sol.x) - sol.x) < 1e-9:
            roots.append(sol.x)
    return roots


def winding_of_samples(dq, dp):
    """Winding number of a closed sampled planar loop around the origin."""
    ang = np.unwrap(np.arctan2(np.append(dp, dp[0]), np.append(dq, dq[0])))
    return int(round((ang[-1] - ang[0]) / (2 * math.pi)))
