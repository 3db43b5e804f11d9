"""Random Fourier state bases and the two control-affine compound bases.

A state basis is a bank of D/2 random frequency vectors realizing, in
expectation, the RBF kernel k(v) = exp(-gamma*||v||^2).  Compound bases
combine m+1 state bases so that the resulting feature map is affine in the
input u: the "product" variant stacks input-scaled blocks, the "dense"
variant sums them into a single block.
"""

import numpy as np

ADP = "adp"
AD = "ad"

# Reserved spawn-key families so independent parts of a run never share a
# random stream.  Basis index i of a compound basis uses (seed, STREAM_BASIS, i).
STREAM_BASIS = 0
STREAM_SPLIT = 1
STREAM_BENCH = 2
STREAM_EPISODIC = 3
STREAM_SYNTHETIC = 4
STREAM_GRID = 5


def derive_stream_seed(master_seed, *tags):
    """Derive a 64-bit child seed from a master seed and integer tags.

    Uses the SeedSequence spawn-key mechanism, so distinct tag tuples give
    statistically independent streams and adding new tags never perturbs
    existing ones.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(t) for t in tags))
    return int(ss.generate_state(1, np.uint64)[0])


def stream_rng(master_seed, *tags):
    """Counter-based generator for the stream identified by (seed, tags)."""
    return np.random.Generator(np.random.Philox(key=derive_stream_seed(master_seed, *tags)))


class StateBasis:
    """One sampled random Fourier basis for state vectors of dimension n.

    Attributes:
        frequencies: (n, D/2) array, columns are the sampled frequency vectors.
        gamma: RBF bandwidth; frequencies are N(0, 2*gamma*I) so the realized
            kernel is exp(-gamma*||v||^2).
        seed: the 64-bit seed the frequencies were drawn from.
    """

    def __init__(self, frequencies, gamma, seed):
        self.frequencies = frequencies
        self.gamma = float(gamma)
        self.seed = int(seed)

    @property
    def n(self):
        return self.frequencies.shape[0]

    @property
    def dim(self):
        return 2 * self.frequencies.shape[1]


def sample_state_basis(n, D, gamma, seed):
    """Draw a StateBasis with D/2 i.i.d. N(0, 2*gamma*I_n) frequency columns.

    Re-sampling with identical (n, D, gamma, seed) is bit-reproducible.
    Raises ValueError for odd or too-small D, non-positive gamma, or n < 1.
    """
    n = int(n)
    D = int(D)
    if n < 1:
        raise ValueError("state dimension must be >= 1, got %d" % n)
    if D < 2 or D % 2 != 0:
        raise ValueError("feature dimension must be even and >= 2, got %d" % D)
    if not gamma > 0:
        raise ValueError("gamma must be positive, got %r" % (gamma,))
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    freqs = rng.normal(0.0, np.sqrt(2.0 * gamma), size=(n, D // 2))
    return StateBasis(freqs, gamma, seed)


def eval_state_basis(basis, x):
    """Evaluate one basis at a single state, returning a unit-norm D-vector.

    Entries come in (sin, cos) pairs scaled by sqrt(2/D), one pair per
    frequency column, so ||psi(x)||_2 = 1 identically.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.n,):
        raise ValueError(
            "state has shape %s, basis expects (%d,)" % (x.shape, basis.n)
        )
    return state_feature_matrix(basis, x[None, :])[0]


def state_feature_matrix(basis, X):
    """Rows of psi evaluated at each row of X, shape (N, D)."""
    X = np.asarray(X, dtype=float)
    proj = X @ basis.frequencies
    D = basis.dim
    out = np.empty((X.shape[0], D))
    out[:, 0::2] = np.sin(proj)
    out[:, 1::2] = np.cos(proj)
    out *= np.sqrt(2.0 / D)
    return out


class CompoundBasis:
    """m+1 state bases plus a variant tag, realizing a control-affine map.

    variant "adp": phi(x, u) = [u_1 psi_1(x); ...; u_m psi_m(x); psi_{m+1}(x)],
    output dimension D*(m+1).
    variant "ad": phi(x, u) = sum_i u_i psi_i(x) + psi_{m+1}(x), output
    dimension D.
    """

    def __init__(self, bases, variant):
        bases = tuple(bases)
        if len(bases) < 2:
            raise ValueError("a compound basis needs at least 2 state bases")
        n, D = bases[0].n, bases[0].dim
        for b in bases:
            if b.n != n or b.dim != D:
                raise ValueError("all state bases must share n and D")
        if variant not in (ADP, AD):
            raise ValueError("unknown variant %r" % (variant,))
        self.bases = bases
        self.variant = variant

    @property
    def m(self):
        return len(self.bases) - 1

    @property
    def n(self):
        return self.bases[0].n

    @property
    def state_dim(self):
        """Per-basis feature dimension D."""
        return self.bases[0].dim

    @property
    def output_dim(self):
        D = self.state_dim
        return D * (self.m + 1) if self.variant == ADP else D

    @property
    def gammas(self):
        return tuple(b.gamma for b in self.bases)

    @property
    def seeds(self):
        return tuple(b.seed for b in self.bases)


def build_compound_basis(n, m, D, gammas, seed, variant):
    """Sample a CompoundBasis of m+1 independent state bases.

    Args:
        n: state dimension.
        m: input dimension (m+1 bases are drawn).
        D: per-basis feature dimension, even.
        gammas: scalar or sequence of m+1 bandwidths.
        seed: master seed; basis i draws from the derived stream (seed, i).
        variant: "adp" or "ad".
    """
    if np.isscalar(gammas):
        gammas = [float(gammas)] * (m + 1)
    gammas = [float(g) for g in gammas]
    if len(gammas) != m + 1:
        raise ValueError("need m+1=%d gammas, got %d" % (m + 1, len(gammas)))
    bases = [
        sample_state_basis(n, D, gammas[i], derive_stream_seed(seed, STREAM_BASIS, i))
        for i in range(m + 1)
    ]
    return CompoundBasis(bases, variant)


def eval_compound_basis(cb, x, u):
    """Evaluate the compound feature map at one (state, input) pair."""
    u = np.asarray(u, dtype=float)
    if u.shape != (cb.m,):
        raise ValueError("input has shape %s, basis expects (%d,)" % (u.shape, cb.m))
    psis = [eval_state_basis(b, x) for b in cb.bases]
    if cb.variant == ADP:
        parts = [u[i] * psis[i] for i in range(cb.m)]
        parts.append(psis[cb.m])
        return np.concatenate(parts)
    out = psis[cb.m].copy()
    for i in range(cb.m):
        out += u[i] * psis[i]
    return out


def feature_operator(cb, x):
    """Matrix Psi(x) with phi(x, u) = Psi(x) @ [u; 1].

    Shape (output_dim, m+1): block-diagonal psi columns for the product
    variant, side-by-side psi columns for the dense variant.
    """
    psis = [eval_state_basis(b, x) for b in cb.bases]
    k = cb.m + 1
    if cb.variant == ADP:
        D = cb.state_dim
        out = np.zeros((D * k, k))
        for i in range(k):
            out[i * D:(i + 1) * D, i] = psis[i]
        return out
    return np.stack(psis, axis=1)


def feature_matrix(cb, samples):
    """Feature matrix with one compound-basis row per (x, u) sample.

    Args:
        cb: CompoundBasis.
        samples: either a sequence of (x, u) pairs or a tuple (X, U) of
            arrays with shapes (N, n) and (N, m).

    Returns:
        (N, output_dim) array whose row i is eval_compound_basis(cb, x_i, u_i).
    """
    X, U = _as_sample_arrays(cb, samples)
    if X.shape[0] == 0:
        raise ValueError("empty sample list")
    psi_mats = [state_feature_matrix(b, X) for b in cb.bases]
    if cb.variant == ADP:
        parts = [U[:, i:i + 1] * psi_mats[i] for i in range(cb.m)]
        parts.append(psi_mats[cb.m])
        return np.hstack(parts)
    out = psi_mats[cb.m].copy()
    for i in range(cb.m):
        out += U[:, i:i + 1] * psi_mats[i]
    return out


def _as_sample_arrays(cb, samples):
    if isinstance(samples, tuple) and len(samples) == 2:
        X = np.atleast_2d(np.asarray(samples[0], dtype=float))
        U = np.atleast_2d(np.asarray(samples[1], dtype=float))
    else:
        samples = list(samples)
        X = np.array([np.asarray(s[0], dtype=float) for s in samples])
        U = np.array([np.asarray(s[1], dtype=float) for s in samples])
        if X.ndim == 1:
            X = X.reshape(0, cb.n)
            U = U.reshape(0, cb.m)
    if X.shape[1:] != (cb.n,) or U.shape[1:] != (cb.m,):
        raise ValueError(
            "samples have shapes %s, %s; basis expects (*, %d), (*, %d)"
            % (X.shape, U.shape, cb.n, cb.m)
        )
    if X.shape[0] != U.shape[0]:
        raise ValueError("state and input counts differ")
    return X, U
