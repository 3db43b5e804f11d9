"""Command-line entry points.

Subcommands map one-to-one onto the harness experiments; every run writes a
manifest recording the configuration hash and library versions next to its
outputs.  Exit codes: 0 success, 2 configuration problem, 3 numerical
failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .certify import CLFSpec, clf_value, default_clf_spec, save_dataset, \
    load_dataset, dataset_arrays
from .control import InfeasibleError, ce_controller
from .dynamics import (NOMINAL_PARAMS, TRUE_PARAMS, feedback_linearizing_controller,
                       save_trajectory, simulate, simulation_backend,
                       zero_controller)
from .harness import ConfigError, load_config
from .regression import NumericalHealthError, load_model, save_model, fit_ridge


def _spec_for(config):
    base = default_clf_spec()
    if config.alpha_slope == base.alpha_slope:
        return base
    return CLFSpec(base.P, config.alpha_slope)


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _cmd_collect(args, config):
    out = _ensure_out(args.out)
    spec = _spec_for(config)
    data = harness.collect_grid_data(
        spec, config.seed, duration=config.collect_duration, rate=config.rate,
        c1=config.c1, rho=config.rho, test_fraction=config.test_fraction,
        rtol=config.rtol, atol=config.atol, fl_kp=config.fl_kp,
        fl_kd=config.fl_kd)
    save_dataset(data.samples, os.path.join(out, "dataset.csv"))
    with open(os.path.join(out, "split.json"), "w") as fh:
        json.dump({"train": data.train_idx.tolist(),
                   "test": data.test_idx.tolist()}, fh)
    harness.write_run_manifest(out, "collect", config)
    print("collected %d trajectories, %d samples (%d train / %d test)"
          % (len(data.trajectories), len(data.z), data.n_train, data.n_test))
    return 0


def _load_or_collect(args, config, spec):
    if getattr(args, "data", None):
        samples = load_dataset(args.data)
        X, U, z = dataset_arrays(samples)
        train_idx, test_idx = harness.split_indices(
            len(z), config.test_fraction, config.seed)
        return harness.CollectionResult(None, samples, X, U, z,
                                        train_idx, test_idx)
    return harness.collect_grid_data(
        spec, config.seed, duration=config.collect_duration, rate=config.rate,
        c1=config.c1, rho=config.rho, test_fraction=config.test_fraction,
        rtol=config.rtol, atol=config.atol, fl_kp=config.fl_kp,
        fl_kd=config.fl_kd)


def _cmd_predict_bench(args, config):
    out = _ensure_out(args.out)
    spec = _spec_for(config)
    data = _load_or_collect(args, config, spec)
    rows = harness.run_prediction_benchmark(
        data, config.seed, dims=config.bench_dims,
        n_resamples=config.bench_resamples, gamma=config.gamma,
        lam=config.lam, timing_repeats=config.timing_repeats,
        workers=config.workers)
    harness.write_bench_csv(os.path.join(out, "prediction_bench.csv"), rows,
                            harness.BENCH_FIELDS)
    harness.write_run_manifest(out, "predict-bench", config)
    print("wrote %d benchmark rows" % len(rows))
    return 0


def _cmd_synthetic_bench(args, config):
    out = _ensure_out(args.out)
    rows = harness.run_synthetic_benchmark(
        config.seed, m_values=tuple(int(v) for v in config.synthetic_m),
        schedule=config.synthetic_schedule,
        n_resamples=config.synthetic_resamples,
        n_samples=config.synthetic_samples, noise_std=config.synthetic_noise,
        gamma=config.gamma, lam=config.synthetic_lam, workers=config.workers)
    harness.write_bench_csv(os.path.join(out, "synthetic_bench.csv"), rows,
                            harness.SYNTH_FIELDS)
    harness.write_run_manifest(out, "synthetic-bench", config)
    print("wrote %d benchmark rows" % len(rows))
    return 0


def _cmd_episodic(args, config):
    out = _ensure_out(args.out)
    spec = _spec_for(config)
    method = args.method
    if method in harness.BASELINE_METHODS:
        record, traj = harness.run_baseline_rollout(
            method, spec, duration=config.episode_duration, rate=config.rate,
            c1=config.c1, rho=config.rho, x0=config.x0, rtol=config.rtol,
            atol=config.atol, fl_kp=config.fl_kp, fl_kd=config.fl_kd)
        records = [record]
        save_trajectory(traj, os.path.join(out, "rollout_%s.csv" % method))
    else:
        data = _load_or_collect(args, config, spec)
        warm = harness.warm_start_arrays(data)
        result = harness.run_episodic_loop(
            method, warm, spec, config.seed, episodes=config.episodes,
            episode_duration=config.episode_duration, rate=config.rate,
            gamma=config.episodic_gamma, lam=config.episodic_lam, c1=config.c1,
            rho0=config.rho, x0=config.x0, rtol=config.rtol, atol=config.atol,
            fl_kp=config.fl_kp, fl_kd=config.fl_kd)
        records = result.records
        save_trajectory(result.trajectories[-1],
                        os.path.join(out, "rollout_%s.csv" % method))
    harness.write_bench_csv(os.path.join(out, "episodic_%s.csv" % method),
                            records, harness.EPISODIC_FIELDS)
    harness.write_run_manifest(out, "episodic", config)
    for rec in records:
        print("episode %d: certificate %.6g -> %.6g (%s)"
              % (rec["episode"], rec["c_start"], rec["c_final"],
                 rec["status"]))
    return 0


def _cmd_simulate(args, config):
    out = _ensure_out(args.out)
    spec = _spec_for(config)
    x0 = np.array([float(v) for v in args.x0.split(",")])
    if x0.shape != (4,):
        raise ConfigError("--x0 needs four comma-separated numbers")
    if args.controller == "zero":
        controller = zero_controller
    elif args.controller == "fl":
        controller = feedback_linearizing_controller(TRUE_PARAMS)
    elif args.controller == "nominal-qp":
        controller = ce_controller(
            None, harness._split_fn(spec, NOMINAL_PARAMS), spec,
            c1=config.c1, rho=config.rho,
            u_d=harness.desired_input_law(NOMINAL_PARAMS, config.fl_kp,
                                          config.fl_kd))
    else:
        controller = ce_controller(
            None, harness._split_fn(spec, TRUE_PARAMS), spec,
            c1=config.c1, rho=config.rho,
            u_d=harness.desired_input_law(NOMINAL_PARAMS, config.fl_kp,
                                          config.fl_kd))
    traj = simulate(TRUE_PARAMS, controller, x0, args.duration, args.rate,
                    rtol=config.rtol, atol=config.atol)
    save_trajectory(traj, os.path.join(out, "trajectory.csv"))
    harness.write_run_manifest(out, "simulate", config)
    if traj.error is not None:
        print("simulation failed: %s" % traj.error, file=sys.stderr)
        return 3
    print("simulated %d samples with the %s backend"
          % (len(traj), simulation_backend()))
    return 0


def _cmd_eval(args, config):
    out = _ensure_out(args.out)
    spec = _spec_for(config)
    method = args.method
    if method in harness.BASELINE_METHODS:
        record, traj = harness.run_baseline_rollout(
            method, spec, duration=config.episode_duration, rate=config.rate,
            c1=config.c1, rho=config.rho, x0=config.x0, rtol=config.rtol,
            atol=config.atol, fl_kp=config.fl_kp, fl_kd=config.fl_kd)
    else:
        if args.model:
            model = load_model(args.model)
        else:
            data = _load_or_collect(args, config, spec)
            model, _ = harness.fit_episodic_model(
                method, data.X, data.U, data.z, gamma=config.episodic_gamma,
                lam=config.episodic_lam, seed=config.seed, episode=0)
            if args.save_model:
                save_model(model, args.save_model)
        controller = ce_controller(
            model, harness._split_fn(spec, NOMINAL_PARAMS), spec,
            c1=config.c1, rho=lambda t: config.rho * (t + 1.0),
            u_d=harness.desired_input_law(NOMINAL_PARAMS, config.fl_kp,
                                          config.fl_kd))
        traj, c0, cf, status = harness._measured_rollout(
            TRUE_PARAMS, controller, spec, config.x0, config.episode_duration,
            config.rate, config.rtol, config.atol)
        record = {"episode": 0, "method": method, "n_fit": 0,
                  "D_compound": 0, "c_start": c0, "c_final": cf,
                  "ratio": cf / c0, "n_total_after": 0, "status": status}
    save_trajectory(traj, os.path.join(out, "eval_%s_trajectory.csv" % method))
    with open(os.path.join(out, "eval_%s.json" % method), "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
    harness.write_run_manifest(out, "eval", config)
    print("certificate %.6g -> %.6g (ratio %.3g, %s)"
          % (record["c_start"], record["c_final"], record["ratio"],
             record["status"]))
    return 0 if record["status"] == "ok" else 3


_METHOD_CHOICES = harness.EPISODIC_METHODS + harness.BASELINE_METHODS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="caffeine",
        description="Compound random-feature regression and certificate "
                    "control experiments on a double pendulum.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("collect", help="roll out the grid and label residuals")
    common(p)

    p = sub.add_parser("predict-bench",
                       help="kernel vs random-feature prediction benchmark")
    common(p)
    p.add_argument("--data", help="reuse a saved dataset.csv")

    p = sub.add_parser("synthetic-bench",
                       help="matched-budget synthetic regression benchmark")
    common(p)

    p = sub.add_parser("episodic", help="episodic learning loop or baseline")
    common(p)
    p.add_argument("--method", required=True, choices=_METHOD_CHOICES)
    p.add_argument("--data", help="reuse a saved dataset.csv")

    p = sub.add_parser("simulate", help="single rollout to a trajectory CSV")
    common(p)
    p.add_argument("--controller", default="zero",
                   choices=("zero", "fl", "nominal-qp", "oracle-qp"))
    p.add_argument("--x0", default="2,0,0,0")
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--rate", type=float, default=10.0)

    p = sub.add_parser("eval", help="fit once and evaluate one rollout")
    common(p)
    p.add_argument("--method", required=True, choices=_METHOD_CHOICES)
    p.add_argument("--data", help="reuse a saved dataset.csv")
    p.add_argument("--model", help="load a saved model instead of fitting")
    p.add_argument("--save-model", help="save the fitted model")
    return parser


_COMMANDS = {
    "collect": _cmd_collect,
    "predict-bench": _cmd_predict_bench,
    "synthetic-bench": _cmd_synthetic_bench,
    "episodic": _cmd_episodic,
    "simulate": _cmd_simulate,
    "eval": _cmd_eval,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        config = load_config(args.config, overrides)
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except (NumericalHealthError, InfeasibleError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print("runtime failure: %s" % exc, file=sys.stderr)
        return 3
