"""Generic adaptive Dormand-Prince 4(5) integrator on numpy state vectors.

This is the vectorized counterpart of the specialized scalar engines in
``_engine_py`` / ``_engine``.  It accepts an arbitrary right-hand side, so
tests use it as an independent integration path (for example on augmented
systems such as energy-work bookkeeping).
"""

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]

B5 = A[6]

E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
              -17253 / 339200, 22 / 525, -1 / 40])

MIN_STEP = 1e-13


def step(f, t, x, h):
    """One embedded 4(5) trial step; returns (x5, error_vector)."""
    k = [f(t, x)]
    for i in range(1, 7):
        xi = x + h * sum(A[i][j] * k[j] for j in range(i))
        k.append(f(t + C[i] * h, xi))
    x5 = x + h * sum(B5[j] * k[j] for j in range(6))
    # k[6] is evaluated at (t + h, x5) by construction of the tableau
    err = h * sum(E[j] * k[j] for j in range(7))
    return x5, err


def integrate(f, x0, t0, t1, rtol=1e-9, atol=1e-9, h0=None, max_step=None):
    """Integrate x' = f(t, x) from t0 to t1 adaptively.

    Returns (x(t1), steps_taken).  Raises RuntimeError on step underflow or
    non-finite states.
    """
    x = np.array(x0, dtype=float)
    t = t0
    span = t1 - t0
    h = span if h0 is None else float(h0)
    if max_step is not None:
        h = min(h, max_step)
    steps = 0
    while True:
        rem = t1 - t
        if rem <= 0:
            return x, steps
        last = h >= rem
        h_eff = rem if last else h
        x5, ev = step(f, t, x, h_eff)
        steps += 1
        if np.all(np.isfinite(x5)):
            sk = atol + rtol * np.maximum(np.abs(x), np.abs(x5))
            err = np.sqrt(np.mean((ev / sk) ** 2))
        else:
            err = np.inf
        if np.isfinite(err) and err <= 1.0:
            x = x5
            if last:
                return x, steps
            t += h_eff
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            factor = 0.2 if not np.isfinite(err) else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = h_eff * factor
        if max_step is not None:
            h = min(h, max_step)
        if h < MIN_STEP:
            raise RuntimeError("step size underflow at t=%g" % t)
