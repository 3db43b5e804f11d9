"""Exact compound kernels: pair formulas, vectorized assembly, structure."""

import numpy as np
import pytest

from caffeine import kernels
from caffeine.features import AD, ADP, build_compound_basis, eval_compound_basis
from caffeine.kernels import (
    VANILLA,
    KernelSpec,
    ad_kernel,
    adp_kernel,
    cross_affine,
    cross_gram,
    cross_vector,
    gram,
    measure_approx_error,
    query_self,
    rbf,
)


def reference_adp(gammas, x, u, xp, up):
    """Independent per-pair formula: sum_i y_i y'_i exp(-g_i ||x-x'||^2)."""
    y = np.concatenate([u, [1.0]])
    yp = np.concatenate([up, [1.0]])
    d = np.sum((np.asarray(x) - np.asarray(xp)) ** 2)
    return sum(y[i] * yp[i] * np.exp(-gammas[i] * d) for i in range(len(gammas)))


def reference_ad(gammas, x, u, xp, up):
    """Product part plus one-argument cross terms over i != l."""
    y = np.concatenate([u, [1.0]])
    yp = np.concatenate([up, [1.0]])
    total = reference_adp(gammas, x, u, xp, up)
    kx = [np.exp(-g * np.sum(np.asarray(x) ** 2)) for g in gammas]
    kxp = [np.exp(-g * np.sum(np.asarray(xp) ** 2)) for g in gammas]
    for i in range(len(gammas)):
        for l in range(len(gammas)):
            if i != l:
                total += y[i] * kx[i] * yp[l] * kxp[l]
    return total


@pytest.fixture()
def pairs(rng):
    X = rng.normal(size=(6, 3))
    U = rng.normal(size=(6, 2))
    X2 = rng.normal(size=(6, 3))
    U2 = rng.normal(size=(6, 2))
    return X, U, X2, U2


def test_rbf_formula():
    assert rbf([1.0, 0.0], [0.0, 0.0], 2.0) == pytest.approx(np.exp(-2.0), abs=1e-15)
    assert rbf([0.3, -0.5], [0.3, -0.5], 7.0) == 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("rbf", 1.0)
    with pytest.raises(ValueError):
        KernelSpec(ADP, (1.0,))  # compound needs m+1 >= 2
    with pytest.raises(ValueError):
        KernelSpec(VANILLA, (1.0, 2.0))
    with pytest.raises(ValueError):
        KernelSpec(AD, (1.0, -2.0))
    assert KernelSpec(ADP, (1.0, 2.0, 3.0)).m == 2
    with pytest.raises(ValueError):
        KernelSpec(VANILLA, 1.0).m


def test_pair_kernels_match_reference(pairs):
    gammas = (0.5, 1.5, 1.0)
    adp = KernelSpec(ADP, gammas)
    ad = KernelSpec(AD, gammas)
    X, U, X2, U2 = pairs
    for j in range(X.shape[0]):
        assert adp_kernel(adp, X[j], U[j], X2[j], U2[j]) == pytest.approx(
            reference_adp(gammas, X[j], U[j], X2[j], U2[j]), abs=1e-13
        )
        assert ad_kernel(ad, X[j], U[j], X2[j], U2[j]) == pytest.approx(
            reference_ad(gammas, X[j], U[j], X2[j], U2[j]), abs=1e-13
        )


def test_pair_kernels_enforce_variant(pairs):
    X, U, X2, U2 = pairs
    with pytest.raises(ValueError):
        adp_kernel(KernelSpec(AD, (1.0, 1.0, 1.0)), X[0], U[0], X2[0], U2[0])
    with pytest.raises(ValueError):
        ad_kernel(KernelSpec(ADP, (1.0, 1.0, 1.0)), X[0], U[0], X2[0], U2[0])


@pytest.mark.parametrize("gammas", [(1.0, 1.0, 1.0), (0.5, 1.5, 1.0)])
@pytest.mark.parametrize("variant", [ADP, AD])
def test_gram_matches_pair_loop(variant, gammas, rng):
    spec = KernelSpec(variant, gammas)
    fn = adp_kernel if variant == ADP else ad_kernel
    X = rng.normal(size=(5, 3))
    U = rng.normal(size=(5, 2))
    K = gram(spec, (X, U))
    assert K.shape == (5, 5)
    for i in range(5):
        for j in range(5):
            assert K[i, j] == pytest.approx(fn(spec, X[i], U[i], X[j], U[j]), abs=1e-12)
    np.testing.assert_allclose(K, K.T, atol=1e-12)


@pytest.mark.parametrize("gammas", [(1.0, 1.0, 1.0), (0.5, 1.5, 1.0)])
@pytest.mark.parametrize("variant", [ADP, AD])
def test_cross_gram_matches_pair_loop(variant, gammas, rng):
    spec = KernelSpec(variant, gammas)
    fn = adp_kernel if variant == ADP else ad_kernel
    X = rng.normal(size=(4, 3))
    U = rng.normal(size=(4, 2))
    X2 = rng.normal(size=(3, 3))
    U2 = rng.normal(size=(3, 2))
    K = cross_gram(spec, (X, U), (X2, U2))
    assert K.shape == (4, 3)
    for i in range(4):
        for j in range(3):
            assert K[i, j] == pytest.approx(
                fn(spec, X[i], U[i], X2[j], U2[j]), abs=1e-12
            )
    v = cross_vector(spec, (X, U), (X2[1], U2[1]))
    np.testing.assert_allclose(v, K[:, 1], atol=1e-13)


def test_vanilla_gram_is_rbf_on_concatenation(rng):
    spec = KernelSpec(VANILLA, 0.8)
    X = rng.normal(size=(5, 3))
    U = rng.normal(size=(5, 2))
    K = gram(spec, (X, U))
    Z = np.hstack([X, U])
    for i in range(5):
        for j in range(5):
            assert K[i, j] == pytest.approx(rbf(Z[i], Z[j], 0.8), abs=1e-13)


@pytest.mark.parametrize("variant", [ADP, AD])
def test_cross_affine_reassembles_kernel_values(variant, rng):
    spec = KernelSpec(variant, (0.5, 1.5, 1.0))
    fn = adp_kernel if variant == ADP else ad_kernel
    X = rng.normal(size=(6, 3))
    U = rng.normal(size=(6, 2))
    x = rng.normal(size=3)
    rows = cross_affine(spec, X, U, x)
    assert rows.shape == (6, 3)
    for _ in range(4):
        u = rng.normal(size=2)
        y = np.concatenate([u, [1.0]])
        for j in range(6):
            assert rows[j] @ y == pytest.approx(fn(spec, X[j], U[j], x, u), abs=1e-12)


def test_cross_affine_rejects_vanilla(rng):
    spec = KernelSpec(VANILLA, 1.0)
    with pytest.raises(ValueError):
        cross_affine(spec, rng.normal(size=(3, 2)), rng.normal(size=(3, 1)), np.zeros(2))


@pytest.mark.parametrize("variant", [ADP, AD])
def test_query_self_reassembles_kernel_values(variant, rng):
    spec = KernelSpec(variant, (0.5, 1.5, 1.0))
    fn = adp_kernel if variant == ADP else ad_kernel
    x = rng.normal(size=3)
    M = query_self(spec, x)
    assert M.shape == (3, 3)
    np.testing.assert_allclose(M, M.T, atol=1e-15)
    for _ in range(4):
        u, up = rng.normal(size=2), rng.normal(size=2)
        y = np.concatenate([u, [1.0]])
        yp = np.concatenate([up, [1.0]])
        assert y @ M @ yp == pytest.approx(fn(spec, x, u, x, up), abs=1e-12)


def test_query_self_product_variant_is_identity(rng):
    M = query_self(KernelSpec(ADP, (0.3, 2.0, 1.0)), rng.normal(size=3))
    np.testing.assert_array_equal(M, np.eye(3))


def test_ad_gram_is_positive_semidefinite(rng):
    # The dense compound kernel equals an inner product of feature sums, so
    # every Gram matrix must be PSD up to roundoff.
    spec = KernelSpec(AD, (1.0, 1.0, 1.0))
    for seed in range(5):
        r = np.random.default_rng(seed)
        X = r.normal(size=(20, 4))
        U = r.normal(size=(20, 2))
        w = np.linalg.eigvalsh(gram(spec, (X, U)))
        assert w.min() >= -1e-8


def test_adp_gram_is_positive_semidefinite(rng):
    spec = KernelSpec(ADP, (0.5, 1.5, 1.0))
    X = rng.normal(size=(15, 3))
    U = rng.normal(size=(15, 2))
    w = np.linalg.eigvalsh(gram(spec, (X, U)))
    assert w.min() >= -1e-8


def test_product_features_obey_inflation_bound(rng):
    # For the product layout the compound error decomposes exactly into
    # per-basis errors with weights u_i u'_i summing to u^T u' + 1, so with
    # nonnegative inputs the measured bound is a theorem.
    gammas = (1.0, 1.0, 1.0)
    spec = KernelSpec(ADP, gammas)
    cb = build_compound_basis(3, 2, 2048, gammas, 17, ADP)
    X = rng.normal(size=(40, 3))
    U = rng.uniform(0, 1, size=(40, 2))
    X2 = rng.normal(size=(40, 3))
    U2 = rng.uniform(0, 1, size=(40, 2))
    report = measure_approx_error(cb, spec, (X, U, X2, U2))
    assert report.bound_holds
    assert report.eps_compound <= report.eps_individual + 1e-12
    assert report.eps_individual < 0.2
    assert report.n_excluded == 0


def test_dense_features_obey_summed_weight_bound(rng):
    # The dense layout's cross terms carry weights y_i y'_j over ALL index
    # pairs, so the provable inflation factor is (||u||_1 + 1)(||u'||_1 + 1)
    # rather than (u^T u' + 1).  Check that corrected bound pointwise, with
    # the individual error measured over every displacement the dense
    # kernel evaluates (aligned pairs and one-argument forms).
    gammas = (1.0, 1.0, 1.0)
    spec = KernelSpec(AD, gammas)
    X = rng.normal(size=(60, 3))
    U = rng.uniform(0, 1, size=(60, 2))
    X2 = rng.normal(size=(60, 3))
    U2 = rng.uniform(0, 1, size=(60, 2))
    for seed in range(3):
        cb = build_compound_basis(3, 2, 512, gammas, seed, AD)
        report = measure_approx_error(cb, spec, (X, U, X2, U2))
        phi = np.array([eval_compound_basis(cb, x, u) for x, u in zip(X, U)])
        phi2 = np.array([eval_compound_basis(cb, x, u) for x, u in zip(X2, U2)])
        err = np.abs(
            np.sum(phi * phi2, axis=1)
            - np.array(
                [
                    ad_kernel(spec, X[j], U[j], X2[j], U2[j])
                    for j in range(X.shape[0])
                ]
            )
        )
        weight = (np.sum(U, axis=1) + 1.0) * (np.sum(U2, axis=1) + 1.0)
        assert np.all(err <= report.eps_individual * weight)


def test_dense_individual_error_covers_one_argument_forms(rng):
    # The dense report's individual error must be at least the error of the
    # one-argument estimates psi_i(x)^T psi_i(0), which the dense kernel
    # relies on; the product report uses aligned pairs only.
    from caffeine.features import eval_state_basis

    gammas = (1.0, 1.0)
    X = rng.normal(size=(30, 2))
    X2 = rng.normal(size=(30, 2))
    U = rng.uniform(0, 1, size=(30, 1))
    U2 = rng.uniform(0, 1, size=(30, 1))
    cb = build_compound_basis(2, 1, 64, gammas, 8, AD)
    report = measure_approx_error(cb, KernelSpec(AD, gammas), (X, U, X2, U2))
    one_arg = 0.0
    for b in cb.bases:
        f0 = eval_state_basis(b, np.zeros(2))
        for A in (X, X2):
            for row in A:
                est = eval_state_basis(b, row) @ f0
                one_arg = max(one_arg, abs(est - np.exp(-b.gamma * row @ row)))
    assert report.eps_individual >= one_arg - 1e-12


def test_measure_approx_error_flags_mismatches(rng):
    cb = build_compound_basis(3, 2, 64, 1.0, 0, ADP)
    with pytest.raises(ValueError):
        measure_approx_error(cb, KernelSpec(AD, (1.0, 1.0, 1.0)), None)
    with pytest.raises(ValueError):
        measure_approx_error(cb, KernelSpec(ADP, (1.0, 2.0, 1.0)), None)


def test_measure_approx_error_excludes_degenerate_inputs(rng):
    # u^T u' + 1 <= 0 points cannot normalize the bound; they are dropped
    # with a warning and counted.
    cb = build_compound_basis(2, 1, 64, 1.0, 3, ADP)
    spec = KernelSpec(ADP, (1.0, 1.0))
    X = rng.normal(size=(3, 2))
    X2 = rng.normal(size=(3, 2))
    U = np.array([[2.0], [0.5], [1.0]])
    U2 = np.array([[-1.0], [0.5], [1.0]])  # first pair: u^T u' + 1 = -1
    with pytest.warns(UserWarning):
        report = measure_approx_error(cb, spec, (X, U, X2, U2))
    assert report.n_excluded == 1


def test_compound_feature_dot_matches_direct_eval(rng):
    # Spot check that the report's compound error matches a direct
    # feature-map evaluation at one grid point.
    gammas = (1.0, 1.0)
    cb = build_compound_basis(2, 1, 32, gammas, 5, AD)
    spec = KernelSpec(AD, gammas)
    x, xp = rng.normal(size=2), rng.normal(size=2)
    u, up = rng.normal(size=1), rng.normal(size=1)
    dot = eval_compound_basis(cb, x, u) @ eval_compound_basis(cb, xp, up)
    exact = ad_kernel(spec, x, u, xp, up)
    report = measure_approx_error(
        cb, spec, (x[None, :], u[None, :], xp[None, :], up[None, :])
    )
    denom = float(u @ up) + 1.0
    assert report.eps_compound == pytest.approx(abs(dot - exact) / denom, abs=1e-13)


def test_unsupported_variant_error_is_a_value_error():
    assert issubclass(kernels.UnsupportedVariantError, ValueError)
