"""Pure-Python core for double-pendulum simulation.

This module and the Cython module ``_engine`` are twins: the arithmetic
(right-hand side, Dormand-Prince 4(5) tableau, step-acceptance policy,
Cramer solve of the 2x2 mass matrix) is written in the same order in both,
so they produce bit-identical trajectories.  ``dynamics`` picks whichever
is available at import time.
"""

from math import cos, isfinite, sin, sqrt

BACKEND = "pure"

MIN_STEP = 1e-13
MAX_PERIOD_STEPS = 10_000_000

# Dormand-Prince 4(5) tableau
A21 = 1.0 / 5.0
A31 = 3.0 / 40.0
A32 = 9.0 / 40.0
A41 = 44.0 / 45.0
A42 = -56.0 / 15.0
A43 = 32.0 / 9.0
A51 = 19372.0 / 6561.0
A52 = -25360.0 / 2187.0
A53 = 64448.0 / 6561.0
A54 = -212.0 / 729.0
A61 = 9017.0 / 3168.0
A62 = -355.0 / 33.0
A63 = 46732.0 / 5247.0
A64 = 49.0 / 176.0
A65 = -5103.0 / 18656.0
B1 = 35.0 / 384.0
B3 = 500.0 / 1113.0
B4 = 125.0 / 192.0
B5 = -2187.0 / 6784.0
B6 = 11.0 / 84.0
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0


def rhs(m1, m2, l1, l2, g, th1, th2, w1, w2, u1, u2):
    """Control-affine pendulum right-hand side, solved by Cramer's rule."""
    c2 = cos(th2)
    s2 = sin(th2)
    a = m2 * l1 * l2 * s2
    m11 = (m1 + m2) * l1 * l1 + 2.0 * m2 * l1 * l2 * c2 + m2 * l2 * l2
    m12 = m2 * l1 * l2 * c2 + m2 * l2 * l2
    m22 = m2 * l2 * l2
    s1 = sin(th1)
    s12 = sin(th1 + th2)
    tg1 = (m1 + m2) * g * l1 * s1 + m2 * g * l2 * s12
    tg2 = m2 * g * l2 * s12
    r1 = tg1 + u1 + a * (2.0 * w1 + w2) * w2
    r2 = tg2 + u2 - a * w1 * w1
    det = m11 * m22 - m12 * m12
    dw1 = (m22 * r1 - m12 * r2) / det
    dw2 = (m11 * r2 - m12 * r1) / det
    return w1, w2, dw1, dw2


def integrate_period(m1, m2, l1, l2, g, th1, th2, w1, w2, u1, u2,
                     dt, rtol, atol, h0):
    """Advance one zero-order-hold control period of length dt.

    Returns (th1, th2, w1, w2, h_carry, steps, status); status 0 is
    success, 1 means step-size underflow or a non-finite state.
    """
    t = 0.0
    h = h0 if 0.0 < h0 <= dt else dt
    steps = 0
    while True:
        rem = dt - t
        if rem <= 0.0:
            return th1, th2, w1, w2, h, steps, 0
        last = h >= rem
        h_eff = rem if last else h

        k11, k12, k13, k14 = rhs(m1, m2, l1, l2, g, th1, th2, w1, w2, u1, u2)
        k21, k22, k23, k24 = rhs(
            m1, m2, l1, l2, g,
            th1 + h_eff * (A21 * k11),
            th2 + h_eff * (A21 * k12),
            w1 + h_eff * (A21 * k13),
            w2 + h_eff * (A21 * k14), u1, u2)
        k31, k32, k33, k34 = rhs(
            m1, m2, l1, l2, g,
            th1 + h_eff * (A31 * k11 + A32 * k21),
            th2 + h_eff * (A31 * k12 + A32 * k22),
            w1 + h_eff * (A31 * k13 + A32 * k23),
            w2 + h_eff * (A31 * k14 + A32 * k24), u1, u2)
        k41, k42, k43, k44 = rhs(
            m1, m2, l1, l2, g,
            th1 + h_eff * (A41 * k11 + A42 * k21 + A43 * k31),
            th2 + h_eff * (A41 * k12 + A42 * k22 + A43 * k32),
            w1 + h_eff * (A41 * k13 + A42 * k23 + A43 * k33),
            w2 + h_eff * (A41 * k14 + A42 * k24 + A43 * k34), u1, u2)
        k51, k52, k53, k54 = rhs(
            m1, m2, l1, l2, g,
            th1 + h_eff * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41),
            th2 + h_eff * (A51 * k12 + A52 * k22 + A53 * k32 + A54 * k42),
            w1 + h_eff * (A51 * k13 + A52 * k23 + A53 * k33 + A54 * k43),
            w2 + h_eff * (A51 * k14 + A52 * k24 + A53 * k34 + A54 * k44),
            u1, u2)
        k61, k62, k63, k64 = rhs(
            m1, m2, l1, l2, g,
            th1 + h_eff * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51),
            th2 + h_eff * (A61 * k12 + A62 * k22 + A63 * k32 + A64 * k42 + A65 * k52),
            w1 + h_eff * (A61 * k13 + A62 * k23 + A63 * k33 + A64 * k43 + A65 * k53),
            w2 + h_eff * (A61 * k14 + A62 * k24 + A63 * k34 + A64 * k44 + A65 * k54),
            u1, u2)
        y1 = th1 + h_eff * (B1 * k11 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
        y2 = th2 + h_eff * (B1 * k12 + B3 * k32 + B4 * k42 + B5 * k52 + B6 * k62)
        y3 = w1 + h_eff * (B1 * k13 + B3 * k33 + B4 * k43 + B5 * k53 + B6 * k63)
        y4 = w2 + h_eff * (B1 * k14 + B3 * k34 + B4 * k44 + B5 * k54 + B6 * k64)
        k71, k72, k73, k74 = rhs(m1, m2, l1, l2, g, y1, y2, y3, y4, u1, u2)
        steps += 1

        ok = isfinite(y1) and isfinite(y2) and isfinite(y3) and isfinite(y4)
        if ok:
            ev1 = h_eff * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
            ev2 = h_eff * (E1 * k12 + E3 * k32 + E4 * k42 + E5 * k52 + E6 * k62 + E7 * k72)
            ev3 = h_eff * (E1 * k13 + E3 * k33 + E4 * k43 + E5 * k53 + E6 * k63 + E7 * k73)
            ev4 = h_eff * (E1 * k14 + E3 * k34 + E4 * k44 + E5 * k54 + E6 * k64 + E7 * k74)
            s1 = abs(th1) if abs(th1) > abs(y1) else abs(y1)
            s2 = abs(th2) if abs(th2) > abs(y2) else abs(y2)
            s3 = abs(w1) if abs(w1) > abs(y3) else abs(y3)
            s4 = abs(w2) if abs(w2) > abs(y4) else abs(y4)
            q1 = ev1 / (atol + rtol * s1)
            q2 = ev2 / (atol + rtol * s2)
            q3 = ev3 / (atol + rtol * s3)
            q4 = ev4 / (atol + rtol * s4)
            err = sqrt((q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4) / 4.0)
            ok = isfinite(err)
        if ok and err <= 1.0:
            th1, th2, w1, w2 = y1, y2, y3, y4
            if last:
                return th1, th2, w1, w2, h, steps, 0
            t += h_eff
        if not ok:
            factor = 0.2
        elif err == 0.0:
            factor = 5.0
        else:
            factor = 0.9 * err ** -0.2
            if factor < 0.2:
                factor = 0.2
            elif factor > 5.0:
                factor = 5.0
        h = h_eff * factor
        if h < MIN_STEP or steps >= MAX_PERIOD_STEPS:
            return th1, th2, w1, w2, h, steps, 1
