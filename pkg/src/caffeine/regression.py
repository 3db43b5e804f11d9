"""Ridge regression, GP-style posteriors, and affine-in-input decomposition.

Two representations are supported throughout:

* "rf": an explicit random feature map (CompoundBasis), primal normal
  equations (Phi^T Phi + lam I) of size D x D,
* "kernel": a KernelSpec, dual equations (K + lam I or K + lam^2 I for the
  posterior) of size N x N.

The affine decomposition turns a fitted posterior at a frozen state x into
(Xi, G, Omega) with mean Xi @ [u; 1] and standard deviation
||Omega @ [u; 1]||, which is what the conic controllers consume.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from . import features as feat
from . import kernels as kern
from .kernels import UnsupportedVariantError

PRIMAL = "primal"
DUAL = "dual"

#: negative variance / eigenvalue magnitudes beyond this are an error, not noise
CLAMP_TOL = 1e-8

SAVE_FORMAT = "caffeine-model-v1"


class NumericalHealthError(RuntimeError):
    """A quantity that must be nonnegative came out negative beyond tolerance."""


class RidgeModel:
    """Fitted ridge regressor in primal (weights) or dual (coefficients) form."""

    def __init__(self, mode, lam, basis=None, kernel=None, weights=None,
                 coeffs=None, X=None, U=None, Phi=None):
        self.mode = mode
        self.lam = float(lam)
        self.basis = basis
        self.kernel = kernel
        self.weights = weights
        self.coeffs = coeffs
        self.X = X
        self.U = U
        self.Phi = Phi


class GPModel:
    """Posterior mean/variance model with a cached SPD factorization."""

    def __init__(self, lam, beta, basis=None, kernel=None, X=None, U=None,
                 z=None, factor=None, alpha=None, weights=None):
        if not lam > 0:
            raise ValueError("noise scale lam must be positive")
        self.lam = float(lam)
        self.beta = float(beta)
        self.basis = basis
        self.kernel = kernel
        self.X = X
        self.U = U
        self.z = z
        self._factor = factor
        self._alpha = alpha      # kernel mode: (K + lam^2 I)^{-1} z
        self.weights = weights   # rf mode: (Phi^T Phi + lam I)^{-1} Phi^T z


class AffinePosterior:
    """Frozen-state posterior: mean Xi @ [u;1], std ||Omega @ [u;1]||."""

    def __init__(self, xi, G, omega):
        self.xi = xi
        self.G = G
        self.omega = omega

    def mean(self, u):
        return float(self.xi @ _augment(u))

    def std(self, u):
        return float(np.linalg.norm(self.omega @ _augment(u)))


def fit_ridge(z, lam, Phi=None, basis=None, kernel=None, X=None, U=None, mode=None):
    """Fit ridge regression from features, a basis, or a kernel.

    Args:
        z: (N,) training targets.
        lam: regularization >= 0 (0 requires a nonsingular system).
        Phi: optional precomputed (N, D) feature matrix.
        basis: CompoundBasis; the feature matrix is built here (counted as
            part of the fit, which is what benchmark timings want).
        kernel: KernelSpec for the dual path on exact kernels.
        X, U: (N, n), (N, m) training samples for basis/kernel fits.
        mode: "primal" or "dual"; defaults to primal for features and dual
            for kernels.

    Returns:
        RidgeModel.
    """
    z = np.asarray(z, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if kernel is not None:
        if mode == PRIMAL:
            raise ValueError("kernel fits have no primal form")
        K = kern.gram(kernel, (X, U))
        K[np.diag_indices_from(K)] += lam
        coeffs = cho_solve(cho_factor(K, lower=True, overwrite_a=True), z)
        return RidgeModel(DUAL, lam, kernel=kernel,
                          X=np.array(X, dtype=float), U=np.array(U, dtype=float),
                          coeffs=coeffs)
    if Phi is None:
        if basis is None:
            raise ValueError("provide Phi, basis, or kernel")
        Phi = feat.feature_matrix(basis, (X, U))
    Phi = np.asarray(Phi, dtype=float)
    if mode is None:
        mode = PRIMAL
    if mode == PRIMAL:
        A = Phi.T @ Phi
        A[np.diag_indices_from(A)] += lam
        w = cho_solve(cho_factor(A, lower=True, overwrite_a=True), Phi.T @ z)
        return RidgeModel(PRIMAL, lam, basis=basis, weights=w)
    if mode == DUAL:
        K = Phi @ Phi.T
        K[np.diag_indices_from(K)] += lam
        coeffs = cho_solve(cho_factor(K, lower=True, overwrite_a=True), z)
        return RidgeModel(DUAL, lam, basis=basis, coeffs=coeffs, Phi=Phi)
    raise ValueError("unknown mode %r" % (mode,))


def predict(model, x, u):
    """Predict at one query (x, u) or at batches (X, U) row-wise."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    U = np.asarray(u, dtype=float)
    U = U[None, :] if single else U
    if isinstance(model, GPModel):
        out = _gp_mean(model, X, U)
    elif model.mode == PRIMAL:
        out = feat.feature_matrix(model.basis, (X, U)) @ model.weights
    elif model.kernel is not None:
        out = kern.cross_gram(model.kernel, (model.X, model.U), (X, U)).T @ model.coeffs
    else:
        out = feat.feature_matrix(model.basis, (X, U)) @ model.Phi.T @ model.coeffs
    return float(out[0]) if single else out


def fit_gp(z, lam, beta=1.0, basis=None, kernel=None, X=None, U=None):
    """Fit the posterior model; kernel mode factors K + lam^2 I, rf mode
    Phi^T Phi + lam I."""
    z = np.asarray(z, dtype=float)
    X = np.array(X, dtype=float)
    U = np.array(U, dtype=float)
    if kernel is not None:
        K = kern.gram(kernel, (X, U))
        K[np.diag_indices_from(K)] += lam ** 2
        factor = cho_factor(K, lower=True, overwrite_a=True)
        alpha = cho_solve(factor, z)
        return GPModel(lam, beta, kernel=kernel, X=X, U=U, z=z,
                       factor=factor, alpha=alpha)
    if basis is None:
        raise ValueError("provide basis or kernel")
    Phi = feat.feature_matrix(basis, (X, U))
    A = Phi.T @ Phi
    A[np.diag_indices_from(A)] += lam
    factor = cho_factor(A, lower=True, overwrite_a=True)
    w = cho_solve(factor, Phi.T @ z)
    return GPModel(lam, beta, basis=basis, X=X, U=U, z=z,
                   factor=factor, weights=w)


def gp_posterior(model, x, u):
    """Posterior mean and standard deviation at (x, u); batched row-wise.

    Negative predicted variances within CLAMP_TOL are clamped to zero;
    anything more negative raises NumericalHealthError.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    U = np.asarray(u, dtype=float)
    U = U[None, :] if single else U
    mu = _gp_mean(model, X, U)
    var = _gp_variance(model, X, U)
    bad = float(np.min(var)) if var.size else 0.0
    if bad < -CLAMP_TOL:
        raise NumericalHealthError("posterior variance %g below -%g" % (bad, CLAMP_TOL))
    sigma = np.sqrt(np.maximum(var, 0.0))
    if single:
        return float(mu[0]), float(sigma[0])
    return mu, sigma


def _gp_mean(model, X, U):
    if model.kernel is not None:
        ks = kern.cross_gram(model.kernel, (model.X, model.U), (X, U))
        return ks.T @ model._alpha
    Phi = feat.feature_matrix(model.basis, (X, U))
    return Phi @ model.weights


def _gp_variance(model, X, U):
    if model.kernel is not None:
        ks = kern.cross_gram(model.kernel, (model.X, model.U), (X, U))
        v = cho_solve(model._factor, ks)
        return _self_kernel(model.kernel, X, U) - np.sum(ks * v, axis=0)
    Phi = feat.feature_matrix(model.basis, (X, U))
    v = cho_solve(model._factor, Phi.T)
    return model.lam * np.sum(Phi.T * v, axis=0)


def _self_kernel(spec, X, U):
    """k(s, s) row-wise for each sample s = (x, u)."""
    if spec.variant == kern.VANILLA:
        return np.ones(X.shape[0])
    Y = np.hstack([U, np.ones((U.shape[0], 1))])
    if spec.variant == feat.ADP:
        return np.sum(Y ** 2, axis=1)
    P = np.stack([np.exp(-g * np.sum(X ** 2, axis=1)) for g in spec.gammas], axis=1)
    return np.sum(Y ** 2 * (1.0 - P ** 2), axis=1) + np.sum(Y * P, axis=1) ** 2


def affine_decompose(model, x):
    """Decompose the posterior at state x into (Xi, G, Omega).

    Kernel mode assembles the N x (m+1) affine kernel block; rf mode uses
    the feature operator Psi(x).  Omega comes from the symmetric
    eigendecomposition of G with negative eigenvalues (>= -CLAMP_TOL)
    clamped to zero.

    Raises UnsupportedVariantError for vanilla models and
    NumericalHealthError if G is indefinite beyond tolerance.
    """
    if not isinstance(model, GPModel):
        raise TypeError("affine_decompose needs a fitted GPModel")
    x = np.asarray(x, dtype=float)
    if model.kernel is not None:
        spec = model.kernel
        if spec.variant == kern.VANILLA:
            raise UnsupportedVariantError("vanilla kernel is not affine in u")
        k_train = kern.cross_affine(spec, model.X, model.U, x)
        xi = model._alpha @ k_train
        S = cho_solve(model._factor, k_train)
        G = kern.query_self(spec, x) - k_train.T @ S
    else:
        Psi = feat.feature_operator(model.basis, x)
        xi = model.weights @ Psi
        G = model.lam * (Psi.T @ cho_solve(model._factor, Psi))
    G = 0.5 * (G + G.T)
    vals, vecs = eigh(G)
    if vals[0] < -CLAMP_TOL:
        raise NumericalHealthError(
            "posterior covariance eigenvalue %g below -%g" % (vals[0], CLAMP_TOL)
        )
    vals = np.maximum(vals, 0.0)
    omega = np.sqrt(vals)[:, None] * vecs.T
    return AffinePosterior(xi, G, omega)


def affine_mean(model, x):
    """Mean row Xi with prediction Xi @ [u; 1]; works for ridge and GP models."""
    x = np.asarray(x, dtype=float)
    basis = model.basis
    kernel = model.kernel
    if kernel is not None:
        if kernel.variant == kern.VANILLA:
            raise UnsupportedVariantError("vanilla kernel is not affine in u")
        k_train = kern.cross_affine(kernel, model.X, model.U, x)
        coeff = model._alpha if isinstance(model, GPModel) else model.coeffs
        return coeff @ k_train
    Psi = feat.feature_operator(basis, x)
    if isinstance(model, GPModel) or model.mode == PRIMAL:
        return model.weights @ Psi
    return model.coeffs @ (model.Phi @ Psi)


def save_model(model, path):
    """Serialize a model to an .npz record; features are re-derived on load."""
    rec = {"format": SAVE_FORMAT, "lam": model.lam}
    if isinstance(model, GPModel):
        rec.update(kind="gp", beta=model.beta, X=model.X, U=model.U, z=model.z)
    else:
        rec.update(kind="ridge", mode=model.mode)
        if model.coeffs is not None:
            rec["coeffs"] = model.coeffs
        if model.weights is not None:
            rec["weights"] = model.weights
        if model.X is not None:
            rec.update(X=model.X, U=model.U)
        if model.Phi is not None:
            rec["Phi"] = model.Phi
    if model.kernel is not None:
        rec.update(rep="kernel", variant=model.kernel.variant,
                   gammas=np.array(model.kernel.gammas))
    else:
        b = model.basis
        rec.update(rep="rf", variant=b.variant, gammas=np.array(b.gammas),
                   seeds=np.array(b.seeds, dtype=np.uint64),
                   n=b.n, m=b.m, D=b.state_dim)
    np.savez(path, **rec)


def load_model(path):
    """Load a model saved by save_model, refitting cached factorizations."""
    with np.load(path, allow_pickle=False) as f:
        rec = {k: f[k] for k in f.files}
    if str(rec["format"]) != SAVE_FORMAT:
        raise ValueError("unrecognized model format %r" % (rec["format"],))
    lam = float(rec["lam"])
    basis = kernel = None
    if str(rec["rep"]) == "kernel":
        kernel = kern.KernelSpec(str(rec["variant"]), tuple(rec["gammas"]))
    else:
        bases = [
            feat.sample_state_basis(int(rec["n"]), int(rec["D"]), g, int(s))
            for g, s in zip(rec["gammas"], rec["seeds"])
        ]
        basis = feat.CompoundBasis(bases, str(rec["variant"]))
    if str(rec["kind"]) == "gp":
        return fit_gp(rec["z"], lam, beta=float(rec["beta"]),
                      basis=basis, kernel=kernel, X=rec["X"], U=rec["U"])
    mode = str(rec["mode"])
    return RidgeModel(mode, lam, basis=basis, kernel=kernel,
                      weights=rec.get("weights"), coeffs=rec.get("coeffs"),
                      X=rec.get("X"), U=rec.get("U"), Phi=rec.get("Phi"))


def _augment(u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.concatenate([u, [1.0]])
