"""Experiment harness: data collection, benchmarks, and the episodic loop.

Everything here is deterministic given a master seed.  Sub-experiments pull
independent random streams from the master seed via named stream tags so
that, e.g., basis resampling in one benchmark never perturbs the train/test
split or another benchmark's draws.
"""

import csv
import dataclasses
import hashlib
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import kernels
from .certify import build_residual_dataset, cdot_split, clf_value, dataset_arrays
from .control import ce_controller
from .dynamics import (NOMINAL_PARAMS, TRUE_PARAMS, control_affine,
                       feedback_linearizing_controller, simulate,
                       simulation_backend)
from .features import (AD, ADP, STREAM_BENCH, STREAM_EPISODIC, STREAM_SPLIT,
                       STREAM_SYNTHETIC, build_compound_basis,
                       derive_stream_seed, stream_rng)
from .kernels import KernelSpec
from .regression import NumericalHealthError, fit_ridge, predict

VANILLA_K = "vanilla-k"
ADP_K = "adp-k"
AD_K = "ad-k"
ADP_RF = "adp-rf"
AD_RF = "ad-rf"
ORACLE = "oracle"
NOMINAL = "nominal"

EPISODIC_METHODS = (AD_K, ADP_K, AD_RF, ADP_RF)
BASELINE_METHODS = (ORACLE, NOMINAL)

# Gains of the shared desired-input law (see desired_input_law).
DESIRED_KP = 56.0
DESIRED_KD = 15.0

BENCH_FORMAT = "# caffeine-bench v1"
BENCH_FIELDS = ["method", "variant", "D", "resample", "rmse", "fit_seconds",
                "n_train", "n_test", "seed", "status"]
SYNTH_FIELDS = ["m", "variant", "k", "D_per_basis", "D_compound", "resample",
                "rmse", "fit_seconds", "seed", "status"]
EPISODIC_FIELDS = ["episode", "method", "n_fit", "D_compound", "c_start",
                   "c_final", "ratio", "n_total_after", "status"]

_VARIANT_CODE = {ADP: 0, AD: 1}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclasses.dataclass
class ExperimentConfig:
    """All tunables of the pendulum experiments, JSON-overridable."""

    seed: int = 100
    gamma: float = 1.0
    lam: float = 1.0
    beta: float = 1.0
    alpha_slope: float = 0.725
    c1: float = 25.0
    rho: float = 1.0e6
    fl_kp: float = DESIRED_KP
    fl_kd: float = DESIRED_KD
    collect_duration: float = 5.0
    rate: float = 10.0
    test_fraction: float = 0.2
    episodes: int = 10
    episode_duration: float = 10.0
    episodic_gamma: float = 1.0
    episodic_lam: float = 0.01
    x0: tuple = (2.0, 0.0, 0.0, 0.0)
    rtol: float = 1.0e-9
    atol: float = 1.0e-9
    workers: int = 1
    bench_dims: tuple = (32, 64, 128, 256, 512, 1024)
    bench_resamples: int = 10
    timing_repeats: int = 3
    synthetic_m: tuple = (1, 10, 20)
    synthetic_schedule: int = 10
    synthetic_samples: int = 1000
    synthetic_resamples: int = 10
    synthetic_noise: float = 0.1
    synthetic_lam: float = 0.01


_INT_FIELDS = {"seed", "episodes", "workers", "bench_resamples",
               "timing_repeats", "synthetic_schedule", "synthetic_samples",
               "synthetic_resamples"}
_TUPLE_FIELDS = {"x0", "bench_dims", "synthetic_m"}


def load_config(path=None, overrides=None):
    """Build an ExperimentConfig from defaults, a JSON file, and overrides.

    Raises ConfigError for unreadable/invalid JSON, unknown keys, or values
    of the wrong type.
    """
    merged = {}
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc))
        if not isinstance(loaded, dict):
            raise ConfigError("config root must be a JSON object")
        merged.update(loaded)
    merged.update(overrides or {})

    valid = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kwargs = {}
    for key, value in merged.items():
        if key not in valid:
            raise ConfigError("unknown config key %r" % key)
        if key in _TUPLE_FIELDS:
            if not isinstance(value, (list, tuple)) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value):
                raise ConfigError("config key %r must be a numeric list" % key)
            value = tuple(value)
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError("config key %r must be an integer" % key)
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError("config key %r must be a number" % key)
            value = float(value)
        kwargs[key] = value
    return ExperimentConfig(**kwargs)


def config_digest(config):
    """Stable sha256 of the configuration (canonical JSON)."""
    payload = json.dumps(dataclasses.asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def write_run_manifest(out_dir, command, config):
    """Record what produced the artifacts in out_dir (config hash, versions)."""
    import platform

    versions = {"python": platform.python_version(),
                "numpy": np.__version__}
    try:
        import scipy
        versions["scipy"] = scipy.__version__
    except ImportError:                                    # pragma: no cover
        pass
    try:
        from importlib import metadata
        versions["caffeine"] = metadata.version("artifact")
    except Exception:                                      # pragma: no cover
        versions["caffeine"] = "unknown"
    manifest = {
        "command": command,
        "config": dataclasses.asdict(config),
        "config_sha256": config_digest(config),
        "backend": simulation_backend(),
        "versions": versions,
        "created_unix": time.time(),
    }
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def write_bench_csv(path, rows, fieldnames):
    """CSV with the benchmark format marker as the first line."""
    with open(path, "w", newline="") as fh:
        fh.write(BENCH_FORMAT + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_bench_csv(path):
    with open(path, newline="") as fh:
        marker = fh.readline().rstrip("\r\n")
        if marker != BENCH_FORMAT:
            raise ValueError("unrecognized benchmark file %s" % path)
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Data collection on the initial-condition grid
# ---------------------------------------------------------------------------

def ic_grid(n_points=226):
    """Deterministic grid of initial conditions, evenly subsampled.

    The full grid is the product of angles {+-0.5, +-1.0, +-1.5} on both
    joints and rates {-0.5, 0, 0.5} on both joints (324 points); an evenly
    spaced subset of n_points is kept.
    """
    angles = (-1.5, -1.0, -0.5, 0.5, 1.0, 1.5)
    rates = (-0.5, 0.0, 0.5)
    full = np.array([(a1, a2, r1, r2)
                     for a1 in angles for a2 in angles
                     for r1 in rates for r2 in rates])
    if not 1 <= n_points <= len(full):
        raise ValueError("n_points must be in [1, %d]" % len(full))
    keep = np.round(np.linspace(0, len(full) - 1, n_points)).astype(int)
    return full[keep]


def split_indices(n, test_fraction, seed):
    """Deterministic train/test permutation split; returns (train, test)."""
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError("test_fraction must be in [0, 1)")
    n_test = int(round(n * test_fraction))
    perm = stream_rng(seed, STREAM_SPLIT).permutation(n)
    return perm[n_test:].copy(), perm[:n_test].copy()


class CollectionResult:
    """Grid rollouts plus the labeled residual dataset and its split."""

    def __init__(self, trajectories, samples, X, U, z, train_idx, test_idx):
        self.trajectories = trajectories
        self.samples = samples
        self.X = X
        self.U = U
        self.z = z
        self.train_idx = train_idx
        self.test_idx = test_idx

    @property
    def n_train(self):
        return len(self.train_idx)

    @property
    def n_test(self):
        return len(self.test_idx)


def _affine_callables(params):
    def f(x):
        return control_affine(params, x)[0]

    def g(x):
        return control_affine(params, x)[1]

    return f, g


def _split_fn(spec, params):
    f, g = _affine_callables(params)

    def split(x):
        return cdot_split(spec, f, g, x)

    return split


def desired_input_law(params, kp=DESIRED_KP, kd=DESIRED_KD):
    """Linearizing desired-input law with scalar proportional/derivative gains.

    Every controller in the closed-loop study shares this law built on the
    nominal model; only the constraint side distinguishes them.  The default
    gains are stiff enough that correcting the constraint rescues the loop
    at the 10 Hz hold, yet the nominal constraint alone still fails.
    """
    return feedback_linearizing_controller(params, Kp=np.eye(2) * float(kp),
                                           Kd=np.eye(2) * float(kd))


def collect_grid_data(spec, seed, *, params_true=TRUE_PARAMS,
                      params_nominal=NOMINAL_PARAMS, duration=5.0, rate=10.0,
                      c1=25.0, rho=1.0e6, test_fraction=0.2,
                      rtol=1.0e-9, atol=1.0e-9, n_points=226,
                      fl_kp=DESIRED_KP, fl_kd=DESIRED_KD):
    """Roll the model-free certificate controller out from every grid IC.

    The controller knows only the nominal model (both its desired
    linearizing input and the constraint decomposition); rollouts happen on
    the true plant.  Labels are finite-difference residuals of the
    certificate value against the nominal decomposition.  A failed rollout
    is dropped with a warning; the rest of the collection proceeds.
    """
    f_nom, g_nom = _affine_callables(params_nominal)
    controller = ce_controller(None, _split_fn(spec, params_nominal), spec,
                               c1=c1, rho=rho,
                               u_d=desired_input_law(params_nominal, fl_kp, fl_kd))
    trajectories = []
    n_failed = 0
    for x0 in ic_grid(n_points):
        traj = simulate(params_true, controller, x0, duration, rate,
                        rtol=rtol, atol=atol)
        if traj.error is not None:
            n_failed += 1
            continue
        trajectories.append(traj)
    if n_failed:
        warnings.warn("%d of %d collection rollouts diverged and were "
                      "excluded" % (n_failed, n_points))
    samples = build_residual_dataset(trajectories, spec, f_nom, g_nom)
    X, U, z = dataset_arrays(samples)
    train_idx, test_idx = split_indices(len(z), test_fraction, seed)
    return CollectionResult(trajectories, samples, X, U, z, train_idx, test_idx)


# ---------------------------------------------------------------------------
# Prediction benchmark: kernel exact vs random-feature approximations
# ---------------------------------------------------------------------------

def _rmse(model, X, U, z):
    return float(np.sqrt(np.mean((predict(model, X, U) - z) ** 2)))


_BENCH_DATA = {}


def _bench_init(payload):
    _BENCH_DATA["arrays"] = payload


def _rf_bench_task(task):
    """One random-feature fit: build the basis, time the fit, score it.

    A failed factorization flags the row instead of aborting the run.
    """
    X_tr, U_tr, z_tr, X_te, U_te, z_te = _BENCH_DATA["arrays"]
    basis = build_compound_basis(task["n"], task["m"], task["D"],
                                 task["gamma"], task["basis_seed"],
                                 task["variant"])
    t0 = time.perf_counter()
    try:
        model = fit_ridge(z_tr, task["lam"], basis=basis, X=X_tr, U=U_tr)
    except (NumericalHealthError, np.linalg.LinAlgError):
        return {"method": task["method"], "variant": task["variant"],
                "D": task["D"], "resample": task["resample"],
                "rmse": float("nan"), "fit_seconds": float("nan"),
                "n_train": len(z_tr), "n_test": len(z_te),
                "seed": task["basis_seed"], "status": "failed"}
    elapsed = time.perf_counter() - t0
    return {"method": task["method"], "variant": task["variant"],
            "D": task["D"], "resample": task["resample"],
            "rmse": _rmse(model, X_te, U_te, z_te),
            "fit_seconds": elapsed,
            "n_train": len(z_tr), "n_test": len(z_te),
            "seed": task["basis_seed"], "status": "ok"}


def _map_tasks(task_fn, tasks, arrays, workers):
    if workers <= 1:
        _bench_init(arrays)
        try:
            return [task_fn(t) for t in tasks]
        finally:
            _BENCH_DATA.clear()
    with ProcessPoolExecutor(max_workers=workers, initializer=_bench_init,
                             initargs=(arrays,)) as pool:
        return list(pool.map(task_fn, tasks))


def run_prediction_benchmark(data, seed, *, dims=(32, 64, 128, 256, 512, 1024),
                             n_resamples=10, gamma=1.0, lam=1.0,
                             timing_repeats=3, workers=1):
    """Exact-kernel ridge baselines vs random-feature ridge across widths.

    Kernel rows carry D=0 and the median fit time over timing_repeats runs;
    random-feature rows carry the per-state-basis width D and one row per
    basis resampling.  Fit timing wraps the fit call only (Gram/feature
    construction happens inside the fit); basis sampling is excluded.
    """
    X_tr = data.X[data.train_idx]
    U_tr = data.U[data.train_idx]
    z_tr = data.z[data.train_idx]
    X_te = data.X[data.test_idx]
    U_te = data.U[data.test_idx]
    z_te = data.z[data.test_idx]
    n = X_tr.shape[1]
    m = U_tr.shape[1]

    rows = []
    for method, variant in ((VANILLA_K, kernels.VANILLA), (ADP_K, ADP),
                            (AD_K, AD)):
        n_gamma = 1 if variant == kernels.VANILLA else m + 1
        ks = KernelSpec(variant, (gamma,) * n_gamma)
        times = []
        model = None
        for _ in range(timing_repeats):
            t0 = time.perf_counter()
            model = fit_ridge(z_tr, lam, kernel=ks, X=X_tr, U=U_tr)
            times.append(time.perf_counter() - t0)
        rows.append({"method": method, "variant": variant, "D": 0,
                     "resample": 0, "rmse": _rmse(model, X_te, U_te, z_te),
                     "fit_seconds": float(np.median(times)),
                     "n_train": len(z_tr), "n_test": len(z_te),
                     "seed": int(seed), "status": "ok"})

    tasks = []
    for D in dims:
        for method, variant in ((ADP_RF, ADP), (AD_RF, AD)):
            for r in range(n_resamples):
                tasks.append({
                    "method": method, "variant": variant, "D": int(D),
                    "resample": r, "n": n, "m": m, "gamma": gamma, "lam": lam,
                    "basis_seed": derive_stream_seed(
                        seed, STREAM_BENCH, _VARIANT_CODE[variant], int(D), r),
                })
    arrays = (X_tr, U_tr, z_tr, X_te, U_te, z_te)
    rows.extend(_map_tasks(_rf_bench_task, tasks, arrays, workers))
    return rows


# ---------------------------------------------------------------------------
# Synthetic control-affine regression benchmark
# ---------------------------------------------------------------------------

class SyntheticProblem:
    """Random sinusoid mixture, affine in the input channels.

    h(x, u) = 3 sin(2 pi x.w0) - 2 sin(4 pi x.w1)
              + sum_j gain_j sin(2 pi x.c_j) u_j

    All weight vectors and gains are uniform on [0, 1).  Channel directions
    and gains are drawn from per-channel streams, so the first channels
    coincide bit-exactly across different channel counts m.
    """

    def __init__(self, m, seed, state_dim=6):
        self.m = int(m)
        self.state_dim = int(state_dim)
        self.w0 = stream_rng(seed, STREAM_SYNTHETIC, 0).random(state_dim)
        self.w1 = stream_rng(seed, STREAM_SYNTHETIC, 1).random(state_dim)
        cw, gains = [], []
        for j in range(self.m):
            r = stream_rng(seed, STREAM_SYNTHETIC, 2 + j)
            cw.append(r.random(state_dim))
            gains.append(r.random())
        self.channel_w = np.array(cw).reshape(self.m, state_dim)
        self.gains = np.array(gains)

    def clean(self, X, U):
        base = (3.0 * np.sin(2.0 * np.pi * X @ self.w0)
                - 2.0 * np.sin(4.0 * np.pi * X @ self.w1))
        ch = np.sin(2.0 * np.pi * X @ self.channel_w.T) * self.gains
        return base + np.sum(ch * U, axis=1)


class SyntheticData:
    def __init__(self, problem, X, U, z, train_idx, test_idx):
        self.problem = problem
        self.X = X
        self.U = U
        self.z = z
        self.train_idx = train_idx
        self.test_idx = test_idx


def generate_synthetic_hm(m, seed, *, n_samples=1000, noise_std=0.1,
                          test_fraction=0.1, state_dim=6):
    """Sampled dataset for the synthetic problem with m input channels."""
    if m < 1:
        raise ValueError("m must be >= 1")
    problem = SyntheticProblem(m, seed, state_dim)
    r = stream_rng(seed, STREAM_SYNTHETIC, 10_000 + int(m))
    X = r.random((n_samples, state_dim))
    U = r.random((n_samples, m))
    noise = r.normal(0.0, noise_std, n_samples)
    z = problem.clean(X, U) + noise
    n_test = int(round(n_samples * test_fraction))
    perm = r.permutation(n_samples)
    return SyntheticData(problem, X, U, z, perm[n_test:].copy(),
                         perm[:n_test].copy())


def _synth_task(task):
    return _rf_bench_task(task)


def run_synthetic_benchmark(seed, *, m_values=(1, 10, 20), schedule=10,
                            n_resamples=10, n_samples=1000, noise_std=0.1,
                            gamma=1.0, lam=0.01, workers=1):
    """Matched-budget comparison of the two compound feature layouts.

    For step k in 1..schedule the per-state-basis widths are 22k for the
    product layout and 22k(m+1) for the additive layout, so both compound
    feature vectors have dimension 22k(m+1): equal parameter budget, equal
    fit cost, quality differences attributable to the layout alone.
    """
    rows = []
    for m in m_values:
        data = generate_synthetic_hm(m, seed, n_samples=n_samples,
                                     noise_std=noise_std)
        arrays = (data.X[data.train_idx], data.U[data.train_idx],
                  data.z[data.train_idx], data.X[data.test_idx],
                  data.U[data.test_idx], data.z[data.test_idx])
        tasks = []
        for k in range(1, schedule + 1):
            for variant in (ADP, AD):
                per_basis = 22 * k if variant == ADP else 22 * k * (m + 1)
                for r in range(n_resamples):
                    tasks.append({
                        "method": variant, "variant": variant, "D": per_basis,
                        "resample": r, "n": data.X.shape[1], "m": m,
                        "gamma": gamma, "lam": lam,
                        "basis_seed": derive_stream_seed(
                            seed, STREAM_SYNTHETIC, 20_000,
                            _VARIANT_CODE[variant], m, k, r),
                    })
        for task, out in zip(tasks, _map_tasks(_synth_task, tasks, arrays,
                                               workers)):
            k = task["D"] // 22 if task["variant"] == ADP else \
                task["D"] // (22 * (task["m"] + 1))
            rows.append({"m": m, "variant": task["variant"], "k": k,
                         "D_per_basis": task["D"],
                         "D_compound": 22 * k * (m + 1),
                         "resample": task["resample"], "rmse": out["rmse"],
                         "fit_seconds": out["fit_seconds"],
                         "seed": task["basis_seed"],
                         "status": out["status"]})
    return rows


# ---------------------------------------------------------------------------
# Episodic learning loop and baselines
# ---------------------------------------------------------------------------

def _even_floor(n):
    return max(2, 2 * (int(n) // 2))


def episodic_dims(method, n_samples, m):
    """Per-state-basis width for the episodic random-feature fits.

    Every state basis gets one fifth of the training set size (rounded down
    to an even sine/cosine pair count), for either feature layout.
    """
    if method not in (AD_RF, ADP_RF):
        raise ValueError("not a random-feature method: %r" % (method,))
    return _even_floor(int(n_samples) // 5)


def fit_episodic_model(method, X, U, z, *, gamma, lam, seed, episode):
    """Fit the mean model used by the certainty-equivalent controller.

    Returns (model, compound_feature_dim); kernel methods report dim 0.
    """
    m = U.shape[1]
    if method in (AD_K, ADP_K):
        variant = AD if method == AD_K else ADP
        ks = KernelSpec(variant, (gamma,) * (m + 1))
        return fit_ridge(z, lam, kernel=ks, X=X, U=U), 0
    if method in (AD_RF, ADP_RF):
        variant = AD if method == AD_RF else ADP
        D = episodic_dims(method, len(z), m)
        basis = build_compound_basis(
            X.shape[1], m, D, gamma,
            derive_stream_seed(seed, STREAM_EPISODIC, _VARIANT_CODE[variant],
                               episode), variant)
        return fit_ridge(z, lam, basis=basis, X=X, U=U), basis.output_dim
    raise ValueError("unknown episodic method %r" % (method,))


def _measured_rollout(params_true, controller, spec, x0, duration, rate,
                      rtol, atol):
    """Simulate through the final measured time and score the certificate."""
    traj = simulate(params_true, controller, np.asarray(x0, dtype=float),
                    duration + 1.0 / rate, rate, rtol=rtol, atol=atol)
    c0 = clf_value(spec, traj.states[0])
    cf = clf_value(spec, traj.states[-1])
    status = "ok" if traj.error is None else traj.error
    return traj, c0, cf, status


class EpisodicResult:
    def __init__(self, method, records, X, U, z, trajectories):
        self.method = method
        self.records = records
        self.X = X
        self.U = U
        self.z = z
        self.trajectories = trajectories

    @property
    def final_size(self):
        return len(self.z)

    @property
    def final_record(self):
        """Evaluation of the controller fit on the complete dataset."""
        return self.records[-1]


def run_episodic_loop(method, warm_data, spec, seed, *,
                      params_true=TRUE_PARAMS, params_nominal=NOMINAL_PARAMS,
                      episodes=10, episode_duration=10.0, rate=10.0,
                      gamma=1.0, lam=0.01, c1=25.0, rho0=1.0e6,
                      x0=(2.0, 0.0, 0.0, 0.0), rtol=1.0e-9, atol=1.0e-9,
                      fl_kp=DESIRED_KP, fl_kd=DESIRED_KD):
    """Alternate fitting the residual model and rolling out its controller.

    warm_data is an (X, U, z) triple of starting samples.  Each episode
    refits on everything gathered so far, rolls out from x0 with the
    certainty-equivalent controller (desired input from the nominal
    linearizing law, slack penalty rho0*(t+1) along the trajectory), and
    appends the rollout's residual labels.  A closing evaluation rollout
    (episode index episodes+1) scores the controller fit on the complete
    dataset without appending its data.  Record fields follow
    EPISODIC_FIELDS; c_final is the certificate value at the final measured
    time episode_duration.
    """
    if method not in EPISODIC_METHODS:
        raise ValueError("unknown episodic method %r" % (method,))
    X, U, z = (np.array(a, dtype=float) for a in warm_data)
    f_nom, g_nom = _affine_callables(params_nominal)
    nominal_split = _split_fn(spec, params_nominal)
    u_desired = desired_input_law(params_nominal, fl_kp, fl_kd)

    records = []
    trajectories = []
    for episode in range(1, episodes + 1):
        model, d_comp = fit_episodic_model(method, X, U, z, gamma=gamma,
                                           lam=lam, seed=seed, episode=episode)
        controller = ce_controller(model, nominal_split, spec, c1=c1,
                                   rho=lambda t: rho0 * (t + 1.0),
                                   u_d=u_desired)
        traj, c0, cf, status = _measured_rollout(
            params_true, controller, spec, x0, episode_duration, rate,
            rtol, atol)
        trajectories.append(traj)
        n_fit = len(z)
        new = build_residual_dataset([traj], spec, f_nom, g_nom)
        if new:
            Xn, Un, zn = dataset_arrays(new)
            X = np.vstack([X, Xn])
            U = np.vstack([U, Un])
            z = np.concatenate([z, zn])
        records.append({"episode": episode, "method": method, "n_fit": n_fit,
                        "D_compound": d_comp, "c_start": c0, "c_final": cf,
                        "ratio": cf / c0, "n_total_after": len(z),
                        "status": status})
    # Evaluation rollout of the final controller, fit on everything
    # gathered; its data is not appended.
    model, d_comp = fit_episodic_model(method, X, U, z, gamma=gamma, lam=lam,
                                       seed=seed, episode=episodes + 1)
    controller = ce_controller(model, nominal_split, spec, c1=c1,
                               rho=lambda t: rho0 * (t + 1.0), u_d=u_desired)
    traj, c0, cf, status = _measured_rollout(
        params_true, controller, spec, x0, episode_duration, rate, rtol, atol)
    trajectories.append(traj)
    records.append({"episode": episodes + 1, "method": method,
                    "n_fit": len(z), "D_compound": d_comp, "c_start": c0,
                    "c_final": cf, "ratio": cf / c0, "n_total_after": len(z),
                    "status": status})
    return EpisodicResult(method, records, X, U, z, trajectories)


def run_baseline_rollout(kind, spec, *, params_true=TRUE_PARAMS,
                         params_nominal=NOMINAL_PARAMS, duration=10.0,
                         rate=10.0, c1=25.0, rho=1.0e6,
                         x0=(2.0, 0.0, 0.0, 0.0), rtol=1.0e-9, atol=1.0e-9,
                         fl_kp=DESIRED_KP, fl_kd=DESIRED_KD):
    """Model-free certificate controller rollout.

    Both baselines share the nominal desired-input law; kind "oracle" uses
    the true model in the constraint decomposition, kind "nominal" the
    nominal one.  The plant is always the true one.  Returns (record,
    trajectory) with the same record fields as the episodic loop.
    """
    if kind not in BASELINE_METHODS:
        raise ValueError("unknown baseline %r" % (kind,))
    params_ctrl = params_true if kind == ORACLE else params_nominal
    controller = ce_controller(None, _split_fn(spec, params_ctrl), spec,
                               c1=c1, rho=rho,
                               u_d=desired_input_law(params_nominal, fl_kp, fl_kd))
    traj, c0, cf, status = _measured_rollout(params_true, controller, spec,
                                             x0, duration, rate, rtol, atol)
    record = {"episode": 0, "method": kind, "n_fit": 0, "D_compound": 0,
              "c_start": c0, "c_final": cf, "ratio": cf / c0,
              "n_total_after": 0, "status": status}
    return record, traj


def warm_start_arrays(data, stride=5):
    """Strided subsample of a CollectionResult for seeding the episodic loop."""
    return (data.X[::stride].copy(), data.U[::stride].copy(),
            data.z[::stride].copy())
