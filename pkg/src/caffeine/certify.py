"""Certificate-function machinery: C(x), its gradient, model-based Cdot,
and construction of the finite-difference residual dataset.

The certificate is the quadratic C(x) = x' P x with comparison function
alpha(c) = slope * c.  Residual targets are forward differences of C along
sampled trajectories minus the nominal model's Cdot, which is exactly the
quantity the affine regression models learn.
"""

import csv

import numpy as np


class CLFSpec:
    """Quadratic certificate x' P x with a linear comparison function."""

    def __init__(self, P, alpha_slope):
        P = np.asarray(P, dtype=float)
        if P.shape != (4, 4) or not np.allclose(P, P.T):
            raise ValueError("P must be symmetric 4x4")
        if np.linalg.eigvalsh(P)[0] <= 0:
            raise ValueError("P must be positive definite")
        if not alpha_slope > 0:
            raise ValueError("alpha_slope must be positive")
        self.P = 0.5 * (P + P.T)
        self.alpha_slope = float(alpha_slope)

    def alpha(self, c):
        return self.alpha_slope * c


def default_clf_spec():
    """The certificate used by the pendulum experiments."""
    P = np.array([
        [12.0, 0.0, 3.16, 0.0],
        [0.0, 12.0, 0.0, 3.16],
        [3.16, 0.0, 4.04, 0.0],
        [0.0, 3.16, 0.0, 4.04],
    ])
    return CLFSpec(P, 0.725)


def clf_value(spec, x):
    x = np.asarray(x, dtype=float)
    return float(x @ spec.P @ x)


def clf_grad(spec, x):
    x = np.asarray(x, dtype=float)
    return 2.0 * (spec.P @ x)


def cdot_model(spec, f, g, x, u):
    """grad C(x) . (f(x) + g(x) u) for callables f, g."""
    b, a = cdot_split(spec, f, g, x)
    return float(b + a @ np.asarray(u, dtype=float))


def cdot_split(spec, f, g, x):
    """Affine split of the model Cdot: (bias, row) with Cdot = bias + row @ u."""
    grad = clf_grad(spec, x)
    return float(grad @ f(x)), grad @ g(x)


class LabeledSample:
    """One residual regression sample with its provenance."""

    def __init__(self, x, u, z, traj_id, idx):
        self.x = np.asarray(x, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.z = float(z)
        self.traj_id = int(traj_id)
        self.idx = int(idx)


def build_residual_dataset(trajectories, spec, f, g):
    """Forward difference C along trajectories and subtract the nominal Cdot.

    For each trajectory with samples x_0..x_L at uniform spacing dt, emits
    one sample per i < L with target
    z_i = (C(x_{i+1}) - C(x_i)) / dt - cdot_model(spec, f, g, x_i, u_i);
    the final sample of each trajectory is dropped.

    Raises ValueError on a non-uniform time grid.
    """
    out = []
    for tid, traj in enumerate(trajectories):
        if len(traj) < 2:
            continue
        dts = np.diff(traj.times)
        if np.max(np.abs(dts - dts[0])) > 1e-9 * max(1.0, abs(dts[0])):
            raise ValueError("trajectory %d has a non-uniform time grid" % tid)
        dt = float(dts[0])
        cvals = np.einsum("ij,jk,ik->i", traj.states, spec.P, traj.states)
        for i in range(len(traj) - 1):
            x, u = traj.states[i], traj.inputs[i]
            z = (cvals[i + 1] - cvals[i]) / dt - cdot_model(spec, f, g, x, u)
            out.append(LabeledSample(x, u, z, tid, i))
    return out


def dataset_arrays(samples):
    """Stack a LabeledSample list into (X, U, z) arrays."""
    X = np.array([s.x for s in samples])
    U = np.array([s.u for s in samples])
    z = np.array([s.z for s in samples])
    return X, U, z


DATASET_HEADER = ["x1", "x2", "x3", "x4", "u1", "u2", "z", "traj_id", "idx"]


def save_dataset(samples, path):
    """Write residual samples as CSV (columns x1..x4, u1, u2, z, traj_id, idx)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DATASET_HEADER)
        for s in samples:
            w.writerow([repr(float(v)) for v in (*s.x, *s.u, s.z)]
                       + [s.traj_id, s.idx])


def load_dataset(path):
    """Read a residual dataset CSV written by save_dataset."""
    out = []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != DATASET_HEADER:
        raise ValueError("unrecognized dataset file %s" % path)
    for r in rows[1:]:
        vals = [float(v) for v in r[:7]]
        out.append(LabeledSample(vals[0:4], vals[4:6], vals[6],
                                 int(r[7]), int(r[8])))
    return out
