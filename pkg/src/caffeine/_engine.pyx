# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled core for double-pendulum simulation.

Twin of ``_engine_py``: identical arithmetic in identical order (right-hand
side, Dormand-Prince 4(5) tableau, acceptance policy, Cramer 2x2 solve), so
the two backends produce bit-identical trajectories.
"""

from libc.math cimport cos, fabs, isfinite, pow, sin, sqrt

BACKEND = "compiled"

cdef double MIN_STEP = 1e-13
cdef long MAX_PERIOD_STEPS = 10000000

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0
cdef double B3 = 500.0 / 1113.0
cdef double B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0
cdef double B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0


cdef struct Deriv:
    double d1
    double d2
    double d3
    double d4


cdef inline Deriv c_rhs(double m1, double m2, double l1, double l2, double g,
                        double th1, double th2, double w1, double w2,
                        double u1, double u2) noexcept nogil:
    cdef double c2 = cos(th2)
    cdef double s2 = sin(th2)
    cdef double a = m2 * l1 * l2 * s2
    cdef double m11 = (m1 + m2) * l1 * l1 + 2.0 * m2 * l1 * l2 * c2 + m2 * l2 * l2
    cdef double m12 = m2 * l1 * l2 * c2 + m2 * l2 * l2
    cdef double m22 = m2 * l2 * l2
    cdef double s1 = sin(th1)
    cdef double s12 = sin(th1 + th2)
    cdef double tg1 = (m1 + m2) * g * l1 * s1 + m2 * g * l2 * s12
    cdef double tg2 = m2 * g * l2 * s12
    cdef double r1 = tg1 + u1 + a * (2.0 * w1 + w2) * w2
    cdef double r2 = tg2 + u2 - a * w1 * w1
    cdef double det = m11 * m22 - m12 * m12
    cdef Deriv out
    out.d1 = w1
    out.d2 = w2
    out.d3 = (m22 * r1 - m12 * r2) / det
    out.d4 = (m11 * r2 - m12 * r1) / det
    return out


def rhs(double m1, double m2, double l1, double l2, double g,
        double th1, double th2, double w1, double w2, double u1, double u2):
    """Control-affine pendulum right-hand side, solved by Cramer's rule."""
    cdef Deriv d = c_rhs(m1, m2, l1, l2, g, th1, th2, w1, w2, u1, u2)
    return d.d1, d.d2, d.d3, d.d4


def integrate_period(double m1, double m2, double l1, double l2, double g,
                     double th1, double th2, double w1, double w2,
                     double u1, double u2,
                     double dt, double rtol, double atol, double h0):
    """Advance one zero-order-hold control period of length dt.

    Returns (th1, th2, w1, w2, h_carry, steps, status); status 0 is
    success, 1 means step-size underflow or a non-finite state.
    """
    cdef double t = 0.0
    cdef double h = h0 if 0.0 < h0 <= dt else dt
    cdef long steps = 0
    cdef bint last, ok
    cdef double rem, h_eff, y1, y2, y3, y4, err, factor
    cdef double ev1, ev2, ev3, ev4, s1, s2, s3, s4, q1, q2, q3, q4
    cdef Deriv k1, k2, k3, k4, k5, k6, k7
    err = 0.0
    while True:
        rem = dt - t
        if rem <= 0.0:
            return th1, th2, w1, w2, h, steps, 0
        last = h >= rem
        h_eff = rem if last else h

        k1 = c_rhs(m1, m2, l1, l2, g, th1, th2, w1, w2, u1, u2)
        k2 = c_rhs(m1, m2, l1, l2, g,
                   th1 + h_eff * (A21 * k1.d1),
                   th2 + h_eff * (A21 * k1.d2),
                   w1 + h_eff * (A21 * k1.d3),
                   w2 + h_eff * (A21 * k1.d4), u1, u2)
        k3 = c_rhs(m1, m2, l1, l2, g,
                   th1 + h_eff * (A31 * k1.d1 + A32 * k2.d1),
                   th2 + h_eff * (A31 * k1.d2 + A32 * k2.d2),
                   w1 + h_eff * (A31 * k1.d3 + A32 * k2.d3),
                   w2 + h_eff * (A31 * k1.d4 + A32 * k2.d4), u1, u2)
        k4 = c_rhs(m1, m2, l1, l2, g,
                   th1 + h_eff * (A41 * k1.d1 + A42 * k2.d1 + A43 * k3.d1),
                   th2 + h_eff * (A41 * k1.d2 + A42 * k2.d2 + A43 * k3.d2),
                   w1 + h_eff * (A41 * k1.d3 + A42 * k2.d3 + A43 * k3.d3),
                   w2 + h_eff * (A41 * k1.d4 + A42 * k2.d4 + A43 * k3.d4),
                   u1, u2)
        k5 = c_rhs(m1, m2, l1, l2, g,
                   th1 + h_eff * (A51 * k1.d1 + A52 * k2.d1 + A53 * k3.d1 + A54 * k4.d1),
                   th2 + h_eff * (A51 * k1.d2 + A52 * k2.d2 + A53 * k3.d2 + A54 * k4.d2),
                   w1 + h_eff * (A51 * k1.d3 + A52 * k2.d3 + A53 * k3.d3 + A54 * k4.d3),
                   w2 + h_eff * (A51 * k1.d4 + A52 * k2.d4 + A53 * k3.d4 + A54 * k4.d4),
                   u1, u2)
        k6 = c_rhs(m1, m2, l1, l2, g,
                   th1 + h_eff * (A61 * k1.d1 + A62 * k2.d1 + A63 * k3.d1 + A64 * k4.d1 + A65 * k5.d1),
                   th2 + h_eff * (A61 * k1.d2 + A62 * k2.d2 + A63 * k3.d2 + A64 * k4.d2 + A65 * k5.d2),
                   w1 + h_eff * (A61 * k1.d3 + A62 * k2.d3 + A63 * k3.d3 + A64 * k4.d3 + A65 * k5.d3),
                   w2 + h_eff * (A61 * k1.d4 + A62 * k2.d4 + A63 * k3.d4 + A64 * k4.d4 + A65 * k5.d4),
                   u1, u2)
        y1 = th1 + h_eff * (B1 * k1.d1 + B3 * k3.d1 + B4 * k4.d1 + B5 * k5.d1 + B6 * k6.d1)
        y2 = th2 + h_eff * (B1 * k1.d2 + B3 * k3.d2 + B4 * k4.d2 + B5 * k5.d2 + B6 * k6.d2)
        y3 = w1 + h_eff * (B1 * k1.d3 + B3 * k3.d3 + B4 * k4.d3 + B5 * k5.d3 + B6 * k6.d3)
        y4 = w2 + h_eff * (B1 * k1.d4 + B3 * k3.d4 + B4 * k4.d4 + B5 * k5.d4 + B6 * k6.d4)
        k7 = c_rhs(m1, m2, l1, l2, g, y1, y2, y3, y4, u1, u2)
        steps += 1

        ok = isfinite(y1) and isfinite(y2) and isfinite(y3) and isfinite(y4)
        if ok:
            ev1 = h_eff * (E1 * k1.d1 + E3 * k3.d1 + E4 * k4.d1 + E5 * k5.d1 + E6 * k6.d1 + E7 * k7.d1)
            ev2 = h_eff * (E1 * k1.d2 + E3 * k3.d2 + E4 * k4.d2 + E5 * k5.d2 + E6 * k6.d2 + E7 * k7.d2)
            ev3 = h_eff * (E1 * k1.d3 + E3 * k3.d3 + E4 * k4.d3 + E5 * k5.d3 + E6 * k6.d3 + E7 * k7.d3)
            ev4 = h_eff * (E1 * k1.d4 + E3 * k3.d4 + E4 * k4.d4 + E5 * k5.d4 + E6 * k6.d4 + E7 * k7.d4)
            s1 = fabs(th1) if fabs(th1) > fabs(y1) else fabs(y1)
            s2 = fabs(th2) if fabs(th2) > fabs(y2) else fabs(y2)
            s3 = fabs(w1) if fabs(w1) > fabs(y3) else fabs(y3)
            s4 = fabs(w2) if fabs(w2) > fabs(y4) else fabs(y4)
            q1 = ev1 / (atol + rtol * s1)
            q2 = ev2 / (atol + rtol * s2)
            q3 = ev3 / (atol + rtol * s3)
            q4 = ev4 / (atol + rtol * s4)
            err = sqrt((q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4) / 4.0)
            ok = isfinite(err)
        if ok and err <= 1.0:
            th1 = y1
            th2 = y2
            w1 = y3
            w2 = y4
            if last:
                return th1, th2, w1, w2, h, steps, 0
            t += h_eff
        if not ok:
            factor = 0.2
        elif err == 0.0:
            factor = 5.0
        else:
            factor = 0.9 * pow(err, -0.2)
            if factor < 0.2:
                factor = 0.2
            elif factor > 5.0:
                factor = 5.0
        h = h_eff * factor
        if h < MIN_STEP or steps >= MAX_PERIOD_STEPS:
            return th1, th2, w1, w2, h, steps, 1
