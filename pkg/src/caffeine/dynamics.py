"""Double-pendulum manipulator dynamics and adaptive ZOH simulation.

Angles are measured from the upright equilibrium, the second joint relative
to the first, and the state is x = (theta1, theta2, dtheta1, dtheta2) on
R^4 with no wrapping.  Both joints are torque-actuated (B = I).

Simulation integrates with an embedded Dormand-Prince 4(5) pair between
control sample boundaries; the control input is held constant over each
period.  The inner loop runs in the compiled extension ``_engine`` when it
built, else in its pure-Python twin; both give bit-identical results.
"""

import csv
import os

import numpy as np

if os.environ.get("CAFFEINE_PURE"):
    from . import _engine_py as _engine
else:
    try:
        from . import _engine  # type: ignore[attr-defined]
    except ImportError:
        from . import _engine_py as _engine


def simulation_backend():
    """Name of the active integrator core, "compiled" or "pure"."""
    return _engine.BACKEND


class PendulumParams:
    """Masses, lengths, and gravity of the two-link pendulum."""

    def __init__(self, m1, m2, l1, l2, g=9.81):
        for name, v in (("m1", m1), ("m2", m2), ("l1", l1), ("l2", l2), ("g", g)):
            if not v > 0:
                raise ValueError("%s must be positive, got %r" % (name, v))
        self.m1 = float(m1)
        self.m2 = float(m2)
        self.l1 = float(l1)
        self.l2 = float(l2)
        self.g = float(g)

    def __repr__(self):
        return ("PendulumParams(m1=%g, m2=%g, l1=%g, l2=%g, g=%g)"
                % (self.m1, self.m2, self.l1, self.l2, self.g))


#: plant used to generate data
TRUE_PARAMS = PendulumParams(1.0, 1.0, 1.0, 1.0)
#: deliberately wrong model handed to the nominal controller
NOMINAL_PARAMS = PendulumParams(0.6, 0.6, 0.6, 0.6)


class PendulumState:
    """Named view of the packed state vector (q, qdot)."""

    def __init__(self, theta1, theta2, dtheta1, dtheta2):
        self.theta1 = float(theta1)
        self.theta2 = float(theta2)
        self.dtheta1 = float(dtheta1)
        self.dtheta2 = float(dtheta2)

    @classmethod
    def from_array(cls, x):
        return cls(*np.asarray(x, dtype=float))

    def as_array(self):
        return np.array([self.theta1, self.theta2, self.dtheta1, self.dtheta2])


class Trajectory:
    """Uniformly sampled rollout: times (n,), states (n, 4), inputs (n, 2).

    ``error`` is None for a clean run, or a tag describing why the rollout
    ended early ("diverged", or "controller: ...").  ``steps`` counts the
    integrator steps taken.
    """

    def __init__(self, times, states, inputs, rate, error=None, steps=0):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.inputs = np.asarray(inputs, dtype=float)
        self.rate = float(rate)
        self.error = error
        self.steps = int(steps)
        if not (len(self.times) == len(self.states) == len(self.inputs)):
            raise ValueError("times, states, inputs must have equal length")

    def __len__(self):
        return len(self.times)


def mass_matrix(p, q):
    """Configuration-dependent 2x2 inertia matrix M(q)."""
    c2 = np.cos(q[1])
    m11 = (p.m1 + p.m2) * p.l1 ** 2 + 2.0 * p.m2 * p.l1 * p.l2 * c2 + p.m2 * p.l2 ** 2
    m12 = p.m2 * p.l1 * p.l2 * c2 + p.m2 * p.l2 ** 2
    m22 = p.m2 * p.l2 ** 2
    return np.array([[m11, m12], [m12, m22]])


def coriolis(p, q, qd):
    """Coriolis/centrifugal matrix C(q, qdot); every entry carries a qdot."""
    a = p.m2 * p.l1 * p.l2 * np.sin(q[1])
    return np.array([
        [-2.0 * a * qd[1], -a * qd[1]],
        [a * qd[0], 0.0],
    ])


def gravity_torque(p, q):
    """Gravity torque vector; positive torque pulls away from upright."""
    s1 = np.sin(q[0])
    s12 = np.sin(q[0] + q[1])
    return np.array([
        (p.m1 + p.m2) * p.g * p.l1 * s1 + p.m2 * p.g * p.l2 * s12,
        p.m2 * p.g * p.l2 * s12,
    ])


def control_affine(p, x):
    """Drift f(x) and input matrix g(x) with xdot = f(x) + g(x) u.

    The joints are fully actuated, so g's lower block is M(q)^{-1}.
    """
    x = np.asarray(x, dtype=float)
    q, qd = x[:2], x[2:]
    M = mass_matrix(p, q)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    Minv = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det
    acc = Minv @ (gravity_torque(p, q) - coriolis(p, q, qd) @ qd)
    f = np.concatenate([qd, acc])
    g = np.vstack([np.zeros((2, 2)), Minv])
    return f, g


def total_energy(p, x):
    """Kinetic plus potential energy; the upright rest state is the maximum
    of the potential."""
    x = np.asarray(x, dtype=float)
    q, qd = x[:2], x[2:]
    T = 0.5 * qd @ mass_matrix(p, q) @ qd
    U = (p.m1 + p.m2) * p.g * p.l1 * np.cos(q[0]) + p.m2 * p.g * p.l2 * np.cos(q[0] + q[1])
    return float(T + U)


def simulate(p, controller, x0, duration, rate, rtol=1e-9, atol=1e-9):
    """Roll out the closed loop with zero-order-hold control.

    Args:
        p: PendulumParams of the plant.
        controller: callable (t, x) -> u of shape (2,), queried at every
            sample boundary.
        x0: initial state, shape (4,).
        duration: total time in seconds, a multiple of 1/rate.
        rate: control rate in Hz; duration*rate samples are recorded at
            t = 0, 1/rate, ..., duration - 1/rate.
        rtol, atol: integrator tolerances (the max step is one period).

    Returns:
        Trajectory.  A controller exception or a diverging state ends the
        rollout early; the partial trajectory carries an error tag.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")
    n = int(round(duration * rate))
    if n < 1 or abs(duration * rate - n) > 1e-9:
        raise ValueError("duration must be a positive multiple of 1/rate")
    dt = 1.0 / rate
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (4,) or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a finite 4-vector")

    times = np.arange(n) * dt
    states = np.empty((n, 4))
    inputs = np.empty((n, 2))
    h_carry = 0.0
    total_steps = 0
    error = None
    k = 0
    for i in range(n):
        states[i] = x
        try:
            u = np.asarray(controller(times[i], x), dtype=float).reshape(2)
        except Exception as exc:  # noqa: BLE001, the tag preserves the cause
            error = "controller: %s: %s" % (type(exc).__name__, exc)
            break
        if not np.all(np.isfinite(u)):
            error = "controller: non-finite input"
            break
        inputs[i] = u
        k = i + 1
        if i == n - 1:
            break
        th1, th2, w1, w2, h_carry, steps, status = _engine.integrate_period(
            p.m1, p.m2, p.l1, p.l2, p.g,
            x[0], x[1], x[2], x[3], u[0], u[1],
            dt, rtol, atol, h_carry,
        )
        total_steps += steps
        x = np.array([th1, th2, w1, w2])
        if status != 0 or not np.all(np.isfinite(x)):
            error = "diverged"
            break
    return Trajectory(times[:k], states[:k], inputs[:k], rate,
                      error=error, steps=total_steps)


def feedback_linearizing_controller(p, Kp=None, Kd=None):
    """Controller canceling the model p so the loop tracks qddot = -Kp q - Kd qdot.

    With the default gains (Kp = I, Kd = 2I) the linearized loop is
    critically damped.  Exact only when p matches the plant.
    """
    Kp = np.eye(2) if Kp is None else np.asarray(Kp, dtype=float)
    Kd = 2.0 * np.eye(2) if Kd is None else np.asarray(Kd, dtype=float)

    def controller(t, x):
        x = np.asarray(x, dtype=float)
        q, qd = x[:2], x[2:]
        v = -Kp @ q - Kd @ qd
        return mass_matrix(p, q) @ v + coriolis(p, q, qd) @ qd - gravity_torque(p, q)

    return controller


def zero_controller(t, x):
    """Unactuated plant; conserves total energy."""
    return np.zeros(2)


TRAJECTORY_HEADER = ["t", "th1", "th2", "dth1", "dth2", "u1", "u2"]


def save_trajectory(traj, path):
    """Write a trajectory as CSV with header t, th1, th2, dth1, dth2, u1, u2."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for t, x, u in zip(traj.times, traj.states, traj.inputs):
            w.writerow([repr(float(v)) for v in (t, *x, *u)])


def load_trajectory(path):
    """Read a trajectory CSV written by save_trajectory."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TRAJECTORY_HEADER:
        raise ValueError("unrecognized trajectory file %s" % path)
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    if len(data) < 2:
        raise ValueError("trajectory needs at least two samples to infer rate")
    rate = 1.0 / (data[1, 0] - data[0, 0])
    return Trajectory(data[:, 0], data[:, 1:5], data[:, 5:7], rate)
