"""Acceptance suite: ten end-to-end checks at their stated tolerances.

Each test prints one summary line; the pytest verdict for each test is the
pass/fail line for that criterion.  Heavy fixtures (the full data
collection) are session-scoped and shared between criteria.
"""

import time

import numpy as np
import pytest

from caffeine import harness, kernels, regression
from caffeine.control import (InfeasibleError, QPProblem, RobustBoundParams,
                              SOCPProblem, constraint_value,
                              robust_socp_controller, robust_terms,
                              solve_ccf_qp, solve_ccf_socp)
from caffeine.dynamics import TRUE_PARAMS, control_affine, mass_matrix, \
    simulate, total_energy, zero_controller
from caffeine.features import (AD, ADP, STREAM_BENCH, build_compound_basis,
                               derive_stream_seed, eval_compound_basis,
                               stream_rng)
from caffeine.harness import (AD_K, AD_RF, ADP_K, ADP_RF, NOMINAL, ORACLE,
                              VANILLA_K)
from caffeine.kernels import KernelSpec, gram, measure_approx_error
from caffeine.regression import affine_decompose, fit_gp, fit_ridge, \
    gp_posterior, predict

MASTER_SEED = 100


def _report(name, detail):
    print("\n[%s] %s" % (name, detail))


# ---------------------------------------------------------------------------
# 1. feature/kernel consistency


def test_criterion_01_feature_kernel_consistency():
    t_start = time.perf_counter()
    n, m, gamma, D = 4, 2, 1.0, 2048
    rng = stream_rng(MASTER_SEED, STREAM_BENCH, 91)
    X = rng.normal(size=(100, n))
    X2 = rng.normal(size=(100, n))

    def unit_ball(count):
        v = rng.normal(size=(count, m))
        radii = rng.random(count) ** (1.0 / m)
        return v * (radii / np.linalg.norm(v, axis=1))[:, None]

    U, U2 = unit_ball(100), unit_ball(100)
    worst = {}
    for variant in (ADP, AD):
        ks = KernelSpec(variant, (gamma,) * (m + 1))
        exact = np.array([
            kernels.adp_kernel(ks, x, u, x2, u2) if variant == ADP
            else kernels.ad_kernel(ks, x, u, x2, u2)
            for x, u, x2, u2 in zip(X, U, X2, U2)])
        acc = np.zeros(100)
        for r in range(10):
            cb = build_compound_basis(
                n, m, D, gamma,
                derive_stream_seed(MASTER_SEED, STREAM_BENCH, 92, r), variant)
            F1 = np.array([eval_compound_basis(cb, x, u)
                           for x, u in zip(X, U)])
            F2 = np.array([eval_compound_basis(cb, x, u)
                           for x, u in zip(X2, U2)])
            acc += np.sum(F1 * F2, axis=1)
        dev = np.max(np.abs(acc / 10.0 - exact))
        worst[variant] = dev
        assert dev <= 0.05
    elapsed = time.perf_counter() - t_start
    assert elapsed < 30.0
    _report("criterion 1", "max |mean feature dot - exact kernel|: "
            "adp %.4f, ad %.4f (tol 0.05), %.1f s" %
            (worst[ADP], worst[AD], elapsed))


# ---------------------------------------------------------------------------
# 2. pointwise error-inflation bound


def test_criterion_02_error_inflation_bound():
    rng = stream_rng(MASTER_SEED, STREAM_BENCH, 90)
    X = rng.normal(size=(200, 4))
    U = rng.random(size=(200, 2))
    X2 = rng.normal(size=(200, 4))
    U2 = rng.random(size=(200, 2))
    outcomes = []
    failures = []
    for variant in (ADP, AD):
        ks = KernelSpec(variant, (1.0, 1.0, 1.0))
        for D in (64, 256, 1024):
            cb = build_compound_basis(4, 2, D, 1.0, MASTER_SEED + D, variant)
            rep = measure_approx_error(cb, ks, (X, U, X2, U2))
            outcomes.append("%s/D=%d:%s" % (variant, D,
                                            "ok" if rep.bound_holds else "FAIL"))
            if not rep.bound_holds:
                failures.append((variant, D, rep.eps_compound,
                                 rep.eps_individual))
    _report("criterion 2", " ".join(outcomes))
    assert not failures, (
        "compound error exceeded individual sup error x (u'u + 1) at: %s"
        % ", ".join("%s/D=%d (normalized compound %.4f > individual %.4f)"
                    % f for f in failures))


# ---------------------------------------------------------------------------
# 3. dense-variant Gram validity


def test_criterion_03_ad_gram_psd():
    worst = np.inf
    ks = KernelSpec(AD, (1.0, 1.0, 1.0))
    for s in range(20):
        rng = stream_rng(MASTER_SEED, STREAM_BENCH, 70, s)
        X = rng.normal(size=(50, 4))
        U = rng.normal(size=(50, 2))
        K = gram(ks, (X, U))
        eig = float(np.linalg.eigvalsh(K)[0])
        worst = min(worst, eig)
        assert eig >= -1e-8
    _report("criterion 3", "min eigenvalue over 20 seeds: %.3e (>= -1e-8)"
            % worst)


# ---------------------------------------------------------------------------
# 4. ridge identity and affine decomposition


def test_criterion_04_ridge_and_decomposition_identities():
    rng = stream_rng(MASTER_SEED, STREAM_BENCH, 80)
    worst_ridge = 0.0
    for variant, (N, D) in ((ADP, (60, 8)), (AD, (60, 8)),
                            (ADP, (10, 16)), (AD, (10, 16))):
        X = rng.normal(size=(N, 4))
        U = rng.normal(size=(N, 2))
        z = rng.normal(size=N)
        cb = build_compound_basis(4, 2, D, 1.0, MASTER_SEED, variant)
        ks = KernelSpec(variant, (1.0, 1.0, 1.0))
        primal = fit_ridge(z, 1.0, basis=cb, X=X, U=U, mode="primal")
        dual = fit_ridge(z, 1.0, basis=cb, X=X, U=U, mode="dual")
        Xq = rng.normal(size=(50, 4))
        Uq = rng.normal(size=(50, 2))
        a = predict(primal, Xq, Uq)
        b = predict(dual, Xq, Uq)
        rel = np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-12))
        worst_ridge = max(worst_ridge, rel)
        assert rel <= 1e-8

    model = fit_gp(rng.normal(size=40), 1.0,
                   kernel=KernelSpec(AD, (1.0, 1.0, 1.0)),
                   X=rng.normal(size=(40, 4)), U=rng.normal(size=(40, 2)))
    worst_mu = worst_sig = 0.0
    for _ in range(50):
        x = rng.normal(size=4)
        u = rng.normal(size=2)
        post = affine_decompose(model, x)
        y = np.concatenate([u, [1.0]])
        mu_d, sig_d = gp_posterior(model, x[None, :], u[None, :])
        mu_a = float(post.xi @ y)
        sig_a = float(np.linalg.norm(post.omega @ y))
        worst_mu = max(worst_mu,
                       abs(mu_a - mu_d[0]) / max(abs(mu_d[0]), 1e-12))
        worst_sig = max(worst_sig,
                        abs(sig_a - sig_d[0]) / max(abs(sig_d[0]), 1e-12))
    assert worst_mu <= 1e-8 and worst_sig <= 1e-8
    _report("criterion 4", "primal/dual rel %.2e; decomposition mu rel %.2e, "
            "sigma rel %.2e (tol 1e-8)" % (worst_ridge, worst_mu, worst_sig))


# ---------------------------------------------------------------------------
# 5. dynamics exactness and energy conservation


def test_criterion_05_dynamics():
    M0 = mass_matrix(TRUE_PARAMS, np.zeros(2))
    np.testing.assert_array_equal(M0, [[5.0, 2.0], [2.0, 1.0]])
    f0, _ = control_affine(TRUE_PARAMS, np.zeros(4))
    np.testing.assert_array_equal(f0, np.zeros(4))
    x0 = np.array([1.0, -0.5, 0.0, 0.0])
    traj = simulate(TRUE_PARAMS, zero_controller, x0, 10.0, 10.0,
                    rtol=1e-9, atol=1e-9)
    assert traj.error is None
    e = np.array([total_energy(TRUE_PARAMS, s) for s in traj.states])
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0]))
    assert drift <= 1e-6
    _report("criterion 5", "M(0) exact; f(0)=0; 10 s energy drift %.2e "
            "(tol 1e-6)" % drift)


# ---------------------------------------------------------------------------
# 6. solver soundness against grid oracles


def test_criterion_06_solver_soundness():
    rng = stream_rng(MASTER_SEED, STREAM_BENCH, 60)
    worst_kkt = worst_gap = 0.0
    for i in range(1000):
        u_d = rng.normal(scale=2.0, size=2)
        a = rng.normal(size=2)
        b = rng.normal(scale=2.0)
        c1 = (0.0, 1.0, 25.0, 50.0)[i % 4]
        rho = (1.0, 100.0, 1e6)[i % 3]
        p = QPProblem(u_d, c1, a, b, rho)
        u, delta, kkt = solve_ccf_qp(p)
        worst_kkt = max(worst_kkt, kkt)
        assert kkt <= 1e-8
        obj = u @ u + c1 * (u - u_d) @ (u - u_d) + rho * delta ** 2
        # two-stage grid on the slack-eliminated objective: a global coarse
        # pass, then a fine pass around the reported optimum
        R = max(np.linalg.norm(u_d), np.linalg.norm(u), 1.0) + 0.5
        center = np.zeros(2)
        stage_best = []
        for h, half in ((R / 50, 50), (0.002, 30)):
            g1 = center[0] + np.arange(-half, half + 1) * h
            g2 = center[1] + np.arange(-half, half + 1) * h
            G1, G2 = np.meshgrid(g1, g2)
            au = a[0] * G1 + a[1] * G2 + b
            F = (G1 ** 2 + G2 ** 2
                 + c1 * ((G1 - u_d[0]) ** 2 + (G2 - u_d[1]) ** 2)
                 + rho * np.maximum(0.0, au) ** 2)
            stage_best.append(float(np.min(F)))
            center = u
        # no grid point anywhere may beat the reported optimum, and the fine
        # grid around it must come within resolution of it
        assert obj <= min(stage_best) + 1e-9 * (1.0 + min(stage_best))
        gap = abs(obj - stage_best[1])
        worst_gap = max(worst_gap, gap)
        assert gap <= 1e-9 * (1.0 + stage_best[1])

    rng = stream_rng(MASTER_SEED, STREAM_BENCH, 61)
    n_solved = n_infeasible = 0
    worst_resid = worst_norm_gap = 0.0
    h = 0.02
    g = np.arange(-3.0, 3.0 + h / 2, h)
    G1, G2 = np.meshgrid(g, g)
    Y = np.stack([G1.ravel(), G2.ravel(), np.ones(G1.size)], axis=1)
    un_grid = np.hypot(G1.ravel(), G2.ravel())
    for i in range(100):
        extras = dict(epsilon=0.0, nu=0.0, iota=0.0, delta=0.0)
        if i % 3 == 0:
            extras = dict(epsilon=0.3, nu=abs(rng.normal(scale=0.3)),
                          iota=abs(rng.normal(scale=0.2)),
                          delta=abs(rng.normal(scale=0.5)))
        p = SOCPProblem(rng.normal(size=3),
                        rng.normal(size=(3, 3), scale=0.5),
                        rng.normal() - 0.5, abs(rng.normal()) + 0.3, **extras)
        cvals = (Y @ p.xi
                 + p.beta * np.linalg.norm(Y @ p.omega.T, axis=1)
                 + p.epsilon * (p.nu * un_grid + p.iota * un_grid ** 2
                                + p.delta)
                 + p.alpha_term)
        try:
            u, residual = solve_ccf_socp(p)
        except InfeasibleError:
            n_infeasible += 1
            assert float(np.min(cvals)) > -0.05
            continue
        n_solved += 1
        worst_resid = max(worst_resid, residual)
        assert residual <= 1e-6
        feas = cvals <= 0.0
        if np.any(feas):
            best = float(np.sqrt(np.min(un_grid[feas] ** 2)))
            norm = float(np.linalg.norm(u))
            worst_norm_gap = max(worst_norm_gap, abs(best - norm))
            assert norm <= best + 1e-6
            assert best <= norm + 2 * h
        else:
            # feasible set thinner than the grid: any shrink toward the
            # origin must leave the feasible set, or the point wasn't minimal
            for s in np.linspace(0.005, 0.5, 100):
                assert constraint_value(p, (1.0 - s) * u) > 0.0
    assert n_solved + n_infeasible == 100
    _report("criterion 6", "1000 QPs worst KKT %.2e, worst grid gap %.2e; "
            "%d SOCPs solved (worst residual %.2e, worst norm gap %.3f), "
            "%d infeasible" % (worst_kkt, worst_gap, n_solved, worst_resid,
                               worst_norm_gap, n_infeasible))


# ---------------------------------------------------------------------------
# 7. prediction benchmark at full scale


def test_criterion_07_prediction_benchmark(collection):
    t_start = time.perf_counter()
    assert collection.n_train == 8859 and collection.n_test == 2215
    rows = harness.run_prediction_benchmark(collection, MASTER_SEED)
    elapsed = time.perf_counter() - t_start

    def rmse_of(method, D=None):
        sel = [r for r in rows if r["method"] == method
               and (D is None or r["D"] == D)]
        assert sel and all(r["status"] == "ok" for r in sel)
        return np.array([r["rmse"] for r in sel])

    vanilla = rmse_of(VANILLA_K)[0]
    adp_k = rmse_of(ADP_K)[0]
    ad_k = rmse_of(AD_K)[0]
    assert vanilla > min(adp_k, ad_k)

    med_adp = float(np.median(rmse_of(ADP_RF, 1024)))
    med_ad = float(np.median(rmse_of(AD_RF, 1024)))
    assert abs(med_adp - adp_k) <= 0.1 * adp_k
    assert abs(med_ad - ad_k) <= 0.1 * ad_k

    t_ad = np.mean([r["fit_seconds"] for r in rows if r["method"] == AD_RF])
    t_adp = np.mean([r["fit_seconds"] for r in rows if r["method"] == ADP_RF])
    assert t_ad < t_adp
    assert elapsed < 1200.0
    _report("criterion 7", "vanilla %.4f > min kernel %.4f; "
            "D=1024 medians adp-rf %.4f (kernel %.4f), ad-rf %.4f "
            "(kernel %.4f); mean fit s ad-rf %.3f < adp-rf %.3f; %.0f s"
            % (vanilla, min(adp_k, ad_k), med_adp, adp_k, med_ad, ad_k,
               t_ad, t_adp, elapsed))


# ---------------------------------------------------------------------------
# 8. synthetic matched-budget benchmark


def test_criterion_08_synthetic_benchmark():
    rows = harness.run_synthetic_benchmark(MASTER_SEED)
    assert all(r["status"] == "ok" for r in rows)

    def median_rmse(m, variant, k):
        vals = [r["rmse"] for r in rows
                if r["m"] == m and r["variant"] == variant and r["k"] == k]
        assert len(vals) == 10
        return float(np.median(vals))

    ad_20 = median_rmse(20, AD, 10)
    adp_20 = median_rmse(20, ADP, 10)
    assert ad_20 <= adp_20
    ad_1 = median_rmse(1, AD, 10)
    adp_1 = median_rmse(1, ADP, 10)
    assert abs(ad_1 - adp_1) <= 0.15 * adp_1
    _report("criterion 8", "m=20 largest budget: ad %.4f <= adp %.4f; "
            "m=1: ad %.4f vs adp %.4f (within 15%%)"
            % (ad_20, adp_20, ad_1, adp_1))


# ---------------------------------------------------------------------------
# 9. closed-loop study


def test_criterion_09_closed_loop(clf_spec, warm_arrays):
    rec_oracle, _ = harness.run_baseline_rollout(ORACLE, clf_spec)
    rec_nominal, _ = harness.run_baseline_rollout(NOMINAL, clf_spec)
    assert rec_oracle["ratio"] <= 0.01
    assert rec_nominal["ratio"] > 0.1

    finals = {}
    sizes = {}
    for method in (AD_K, ADP_K, AD_RF, ADP_RF):
        result = harness.run_episodic_loop(method, warm_arrays, clf_spec,
                                           MASTER_SEED)
        finals[method] = result.final_record["ratio"]
        sizes[method] = result.final_size
        assert result.final_record["status"] == "ok"
        assert finals[method] <= 0.1
        assert result.final_size == 3215
    _report("criterion 9", "oracle %.6f <= 0.01; nominal %.4f > 0.1; "
            "episodic ratios %s; final sizes %s"
            % (rec_oracle["ratio"], rec_nominal["ratio"],
               {k: round(v, 6) for k, v in finals.items()},
               sorted(set(sizes.values()))))


# ---------------------------------------------------------------------------
# 10. robustness terms and controller coincidence


def test_criterion_10_robust_terms_and_coincidence(clf_spec):
    cases = [
        ((0.1, 1.0, 1.0, 0.1, 2.0, 100, 1.0), (0.1, 0.004, 1.4204)),
        ((0.0, 2.0, 3.0, 1.0, 1.0, 4, 2.0), (1.75, 0.0, 7.375)),
        ((0.5, 0.5, 2.0, 0.2, 4.0, 25, 0.5), (1.76, 0.32, 2.6924)),
    ]
    for args, want in cases:
        got = robust_terms(RobustBoundParams(*args))
        for g, w in zip(got, want):
            assert g == pytest.approx(w, abs=1e-12)
    _, iota0, _ = robust_terms(RobustBoundParams(0.0, 1.0, 1.0, 0.1, 2.0,
                                                 100, 1.0))
    assert iota0 == 0.0

    rng = stream_rng(MASTER_SEED, STREAM_BENCH, 95)
    X = rng.normal(size=(30, 4))
    U = rng.normal(size=(30, 2))
    z = rng.normal(size=30)
    cb = build_compound_basis(4, 2, 16, 1.0, MASTER_SEED, AD)
    model = fit_gp(z, 1.0, basis=cb, X=X, U=U)
    split = harness._split_fn(clf_spec, TRUE_PARAMS)
    with_extras = robust_socp_controller(
        model, split, clf_spec, beta=1.0, epsilon=0.0,
        robust=(0.5, 0.2, 1.0), slack_rho=1e6)
    plain = robust_socp_controller(model, split, clf_spec, beta=1.0,
                                   slack_rho=1e6)
    worst = 0.0
    for _ in range(20):
        x = rng.normal(scale=0.5, size=4)
        du = np.max(np.abs(with_extras(0.0, x) - plain(0.0, x)))
        worst = max(worst, du)
        assert du <= 1e-8
    _report("criterion 10", "three hand-substituted sets at 1e-12; "
            "iota(eps=0)=0; zero-extras controller max deviation %.2e "
            "(tol 1e-8)" % worst)
