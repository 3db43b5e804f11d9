"""Exact kernel evaluations for the control-affine regression models.

Three kernels share one RBF building block k(v) = exp(-gamma*||v||^2):

* vanilla: one RBF on the concatenated (x, u) vector,
* adp: sum_i u_i u'_i k_i(x - x') + k_{m+1}(x - x'),
* ad: the adp diagonal plus dense cross terms k_i(x) k_l(x') for i != l,
  where the one-argument form is k_i(x) = k_i(x - 0).

Gram and cross assembly is vectorized; pairwise squared-distance matrices
are cached per distinct bandwidth so the common all-equal-gamma case does
the heavy work once.
"""

import warnings

import numpy as np

from .features import AD, ADP, feature_matrix, state_feature_matrix

VANILLA = "vanilla"


class KernelSpec:
    """Kernel family tag plus its bandwidths.

    For "adp"/"ad", gammas holds the m+1 individual bandwidths; for
    "vanilla" it holds the single bandwidth applied to the concatenated
    (x, u) vector.
    """

    def __init__(self, variant, gammas):
        if variant not in (VANILLA, ADP, AD):
            raise ValueError("unknown kernel variant %r" % (variant,))
        if np.isscalar(gammas):
            gammas = (float(gammas),)
        gammas = tuple(float(g) for g in gammas)
        if not gammas or any(g <= 0 for g in gammas):
            raise ValueError("bandwidths must be positive")
        if variant == VANILLA and len(gammas) != 1:
            raise ValueError("vanilla kernel takes exactly one bandwidth")
        if variant in (ADP, AD) and len(gammas) < 2:
            raise ValueError("compound kernels need m+1 >= 2 bandwidths")
        self.variant = variant
        self.gammas = gammas

    @property
    def m(self):
        if self.variant == VANILLA:
            raise ValueError("vanilla kernel has no input dimension")
        return len(self.gammas) - 1


def rbf(x, xp, gamma):
    """exp(-gamma * ||x - xp||^2) for a single pair of vectors."""
    v = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    return float(np.exp(-gamma * np.dot(v, v)))


def adp_kernel(spec, x, u, xp, up):
    """Product compound kernel at one pair of (state, input) samples."""
    _require(spec, ADP)
    y, yp = _augment(u), _augment(up)
    ks = _individual(spec, x, xp)
    return float(np.sum(y * yp * ks))


def ad_kernel(spec, x, u, xp, up):
    """Dense compound kernel at one pair of (state, input) samples."""
    _require(spec, AD)
    y, yp = _augment(u), _augment(up)
    ks = _individual(spec, x, xp)
    p = _one_arg(spec, x)
    pp = _one_arg(spec, xp)
    diag = np.sum(y * yp * ks)
    cross = np.dot(y, p) * np.dot(yp, pp) - np.sum(y * p * yp * pp)
    return float(diag + cross)


def gram(kernel, samples):
    """N x N kernel matrix over samples = (X, U)."""
    X, U = _arrays(samples)
    return _gram_block(kernel, X, U, None, None)


def cross_gram(kernel, samples, queries):
    """N x Q matrix of kernel values between samples and queries."""
    X, U = _arrays(samples)
    X2, U2 = _arrays(queries)
    return _gram_block(kernel, X, U, X2, U2)


def cross_vector(kernel, samples, query):
    """Kernel values between every sample and one query (x, u)."""
    x, u = query
    X2 = np.asarray(x, dtype=float)[None, :]
    U2 = np.asarray(u, dtype=float)[None, :]
    return _gram_block(kernel, *_arrays(samples), X2, U2)[:, 0]


def cross_affine(spec, X, U, x):
    """Rows kappa_j(x) with k((x_j, u_j), (x, u)) = kappa_j(x) @ [u; 1].

    This is the N x (m+1) block the affine posterior decomposition is built
    from; it exists because both compound kernels are affine in the query
    input.
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    Y = _augment_rows(U)
    d = np.sum((X - x[None, :]) ** 2, axis=1)
    Kq = np.stack([np.exp(-g * d) for g in spec.gammas], axis=1)
    if spec.variant == ADP:
        return Y * Kq
    if spec.variant == AD:
        P = _one_arg_rows(spec, X)
        pq = _one_arg(spec, x)
        W = Y * P
        return Y * Kq + np.outer(W.sum(axis=1), pq) - W * pq[None, :]
    raise UnsupportedVariantError("affine kernel rows need adp or ad, got vanilla")


def query_self(spec, x):
    """(m+1) x (m+1) matrix M with k((x,u),(x,u')) = [u;1]^T M [u';1]."""
    k = len(spec.gammas)
    if spec.variant == ADP:
        return np.eye(k)
    if spec.variant == AD:
        pq = _one_arg(spec, np.asarray(x, dtype=float))
        return np.diag(1.0 - pq ** 2) + np.outer(pq, pq)
    raise UnsupportedVariantError("query self-matrix needs adp or ad, got vanilla")


class UnsupportedVariantError(ValueError):
    """Raised when an operation needs a compound (affine) kernel variant."""


class ApproxErrorReport:
    """Result of measure_approx_error.

    Attributes:
        eps_individual: max over bases of the sup feature-vs-kernel error.
        eps_compound: sup over the grid of |compound error| / (u^T u' + 1).
        bound_holds: whether |compound error| <= eps_individual*(u^T u' + 1)
            at every usable grid point.
        n_excluded: grid points dropped because u^T u' + 1 <= 0.
    """

    def __init__(self, eps_individual, eps_compound, bound_holds, n_excluded):
        self.eps_individual = eps_individual
        self.eps_compound = eps_compound
        self.bound_holds = bound_holds
        self.n_excluded = n_excluded


def measure_approx_error(cb, kernel, grid):
    """Measure feature-map approximation error against the exact kernels.

    Args:
        cb: CompoundBasis realizing the feature map.
        kernel: KernelSpec built from the same gammas and variant.
        grid: tuple (X, U, X2, U2) of row-aligned sample pairs.

    Returns:
        ApproxErrorReport with the per-basis sup error, the normalized
        compound sup error, and the pointwise bound check.
    """
    if kernel.variant != cb.variant:
        raise ValueError("kernel variant %r does not match basis variant %r"
                         % (kernel.variant, cb.variant))
    if len(kernel.gammas) != cb.m + 1 or any(
        abs(g - bg) > 1e-12 for g, bg in zip(kernel.gammas, cb.gammas)
    ):
        raise ValueError("kernel and basis must be built from the same gammas")
    X, U, X2, U2 = (np.asarray(a, dtype=float) for a in grid)

    d = np.sum((X - X2) ** 2, axis=1)
    eps_individual = 0.0
    origin = np.zeros((1, X.shape[1]))
    for b in cb.bases:
        F1 = state_feature_matrix(b, X)
        F2 = state_feature_matrix(b, X2)
        dots = np.sum(F1 * F2, axis=1)
        err = np.max(np.abs(dots - np.exp(-b.gamma * d)))
        eps_individual = max(eps_individual, float(err))
        if cb.variant == AD:
            # The dense kernel also evaluates each individual kernel at the
            # one-argument displacements k_i(x - 0), so the measured
            # individual error must cover those evaluations too.
            f0 = state_feature_matrix(b, origin)[0]
            for A, FA in ((X, F1), (X2, F2)):
                one = FA @ f0
                exact_one = np.exp(-b.gamma * np.sum(A ** 2, axis=1))
                err = np.max(np.abs(one - exact_one))
                eps_individual = max(eps_individual, float(err))

    phi = feature_matrix(cb, (X, U))
    phi2 = feature_matrix(cb, (X2, U2))
    approx = np.sum(phi * phi2, axis=1)
    exact = _pair_compound(kernel, X, U, X2, U2)
    err = np.abs(approx - exact)

    denom = np.sum(U * U2, axis=1) + 1.0
    usable = denom > 0
    n_excluded = int(np.sum(~usable))
    if n_excluded:
        warnings.warn(
            "%d grid points with u^T u' + 1 <= 0 excluded from the bound check"
            % n_excluded
        )
    eps_compound = float(np.max(err[usable] / denom[usable])) if usable.any() else 0.0
    bound_holds = bool(np.all(err[usable] <= eps_individual * denom[usable]))
    return ApproxErrorReport(eps_individual, eps_compound, bound_holds, n_excluded)


def _require(spec, variant):
    if spec.variant != variant:
        raise ValueError("expected a %r kernel, got %r" % (variant, spec.variant))


def _augment(u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.concatenate([u, [1.0]])


def _augment_rows(U):
    return np.hstack([U, np.ones((U.shape[0], 1))])


def _individual(spec, x, xp):
    v = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    d = np.dot(v, v)
    return np.exp(-np.array(spec.gammas) * d)


def _one_arg(spec, x):
    d = np.dot(x, x)
    return np.exp(-np.array(spec.gammas) * d)


def _one_arg_rows(spec, X):
    d = np.sum(X ** 2, axis=1)
    return np.stack([np.exp(-g * d) for g in spec.gammas], axis=1)


def _arrays(samples):
    X, U = samples
    return np.atleast_2d(np.asarray(X, dtype=float)), np.atleast_2d(np.asarray(U, dtype=float))


def _sqdist(A, B):
    """Pairwise squared Euclidean distances, clipped at zero."""
    aa = np.sum(A ** 2, axis=1)
    bb = aa if B is A else np.sum(B ** 2, axis=1)
    S = A @ B.T
    S *= -2.0
    S += aa[:, None]
    S += bb[None, :]
    np.maximum(S, 0.0, out=S)
    return S


def _rbf_matrices(X, X2, gammas):
    """exp(-g * sqdist) for each distinct g, returned per requested index."""
    S = _sqdist(X, X if X2 is None else X2)
    cache = {}
    out = []
    for g in gammas:
        if g not in cache:
            cache[g] = np.exp(-g * S)
        out.append(cache[g])
    return out


def _gram_block(spec, X, U, X2, U2):
    symmetric = X2 is None
    if spec.variant == VANILLA:
        A = np.hstack([X, U])
        B = A if symmetric else np.hstack([X2, U2])
        S = _sqdist(A, B if not symmetric else A)
        S *= -spec.gammas[0]
        return np.exp(S, out=S)

    Y = _augment_rows(U)
    Y2 = Y if symmetric else _augment_rows(U2)
    gammas = spec.gammas
    if len(set(gammas)) == 1:
        Kx = _rbf_matrices(X, None if symmetric else X2, gammas[:1])[0]
        K = Y @ Y2.T
        K *= Kx
    else:
        Kxs = _rbf_matrices(X, None if symmetric else X2, gammas)
        K = np.zeros((X.shape[0], X.shape[0] if symmetric else X2.shape[0]))
        for i in range(len(gammas)):
            K += np.outer(Y[:, i], Y2[:, i]) * Kxs[i]
    if spec.variant == AD:
        W = Y * _one_arg_rows(spec, X)
        W2 = W if symmetric else Y2 * _one_arg_rows(spec, X2)
        K += np.outer(W.sum(axis=1), W2.sum(axis=1))
        K -= W @ W2.T
    return K


def _pair_compound(spec, X, U, X2, U2):
    """Row-wise compound kernel values k((x_j, u_j), (x2_j, u2_j))."""
    Y = _augment_rows(U)
    Y2 = _augment_rows(U2)
    d = np.sum((X - X2) ** 2, axis=1)
    Ks = np.stack([np.exp(-g * d) for g in spec.gammas], axis=1)
    vals = np.sum(Y * Y2 * Ks, axis=1)
    if spec.variant == AD:
        W = Y * _one_arg_rows(spec, X)
        W2 = Y2 * _one_arg_rows(spec, X2)
        vals = vals + W.sum(axis=1) * W2.sum(axis=1) - np.sum(W * W2, axis=1)
    return vals
