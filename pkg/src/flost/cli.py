"""Command-line pipeline: generate -> sample -> tune -> fit -> evaluate.

Exit codes: 0 success, 1 numerical/other failure, 2 bad usage (unknown flag,
bad value), 3 inconsistent dimensions, 4 unreadable or malformed input file.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .estimator import (
    P_GIVEN, RegularizationConfig, fit, parameter_count, reconstruct, theorem_lambda_schedule,
)
from .metrics import IndexSet, chunked_rmse, percentile_rmse, percentile_threshold
from .synthesis import SamplingSpec, SynthesisSpec, flost_truncate, generate_flost_truth, sample_observations
from .tensor import half_length
from .tuning import TuningSpec, grid_search

EXIT_FAILURE, EXIT_USAGE, EXIT_DIMS, EXIT_FILE = 1, 2, 3, 4


class DimensionError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _threads(n):
    return None if n in (None, 0) else n


def _check_k(k: int, T: int):
    if not 1 <= k <= half_length(T):
        raise DimensionError(f"--k {k} must lie in [1, {half_length(T)}] for T={T}")


def _base_config(args, obs) -> RegularizationConfig:
    M, N, T = obs.dims
    _check_k(args.k, T)
    return theorem_lambda_schedule(M, N, T, obs.effective_p, args.sigma_gamma, args.c1, args.c2, args.k)


def _load_obs(args):
    obs = io.read_observations(args.obs)
    if getattr(args, "p", None) is not None:
        obs = obs.__class__(obs.dims, obs.i, obs.j, obs.t, obs.values, args.p, P_GIVEN)
    return obs


def cmd_generate(args):
    spec = SynthesisSpec((args.m, args.n, args.t), args.rank, args.k, args.sparsity, args.seed)
    io.write_tensor(args.out, generate_flost_truth(spec))


def cmd_truncate(args):
    x = io.read_tensor(args.input)
    io.write_tensor(args.out, flost_truncate(x, args.rank, args.k, args.sparsity))


def cmd_sample(args):
    x = io.read_tensor(args.input)
    io.write_observations(args.out, sample_observations(x, SamplingSpec(args.p, args.sigma, args.seed)))


def cmd_fit(args):
    obs = _load_obs(args)
    if args.lambda1 is not None:
        _check_k(args.k, obs.dims[2])
        if args.lambda2 is None and args.k < half_length(obs.dims[2]):
            raise ValueError("--lambda2 is required with --lambda1 when K leaves a sparse tail")
        cfg = RegularizationConfig(args.k, tuple(args.lambda1), args.lambda2 or 0.0,
                                   args.c1, args.c2, args.sigma_gamma)
    else:
        cfg = _base_config(args, obs).scaled(args.lambda1_scale, args.lambda2_scale)
    model = fit(obs, cfg, _threads(args.threads))
    est = reconstruct(model)
    io.write_tensor(args.out_tensor, est)
    if args.out_model:
        io.save_model(args.out_model, model)
    print(f"fit: {model.fit_seconds:.3f} s, ranks={model.ranks}, tail_nnz={model.tail_nnz}, "
          f"parameters={parameter_count(model)}", file=sys.stderr)


def cmd_tune(args):
    obs = _load_obs(args)
    base = _base_config(args, obs)
    spec = TuningSpec.log_grid(args.grid_log_min, args.grid_log_max, args.grid_steps,
                               args.holdout, args.seed)
    result = grid_search(obs, base, spec, _threads(args.threads))
    result.write_csv(args.report)
    s1, s2 = result.best_scales
    best = {"lambda1_scale": s1, "lambda2_scale": s2, "lambda1": list(result.best.lambda1),
            "lambda2": result.best.lambda2, "validation_rmse": result.best_rmse}
    if args.out_config:
        with open(args.out_config, "w") as fh:
            json.dump(best, fh, indent=2)
    print(json.dumps(best))


def _split_reports(est, truth, delta, quantiles, chunk_len):
    out = [r.to_json() for r in percentile_rmse(est, truth, delta, quantiles)]
    if chunk_len:
        for q in quantiles:
            sub = IndexSet(delta.mask & (truth > percentile_threshold(truth, q)), f"{delta.label}>q{q:g}")
            out.extend(r.to_json() for r in chunked_rmse(est, truth, sub, chunk_len))
    return out


def evaluate_report(est, truth, obs, quantiles=(0.0, 0.75, 0.95, 0.99), chunk_len=None, model=None):
    """JSON-ready report of train (observed) and test (unobserved) RMSEs."""
    if est.shape != truth.shape or tuple(obs.dims) != truth.shape:
        raise DimensionError(f"dims differ: estimate {est.shape}, truth {truth.shape}, obs {obs.dims}")
    report = {
        "train": _split_reports(est, truth, IndexSet.observed(obs), quantiles, chunk_len),
        "test": _split_reports(est, truth, IndexSet.missing(obs), quantiles, chunk_len),
    }
    if model is not None:
        if tuple(model.dims) != truth.shape:
            raise DimensionError(f"model dims {model.dims} differ from truth {truth.shape}")
        report["parameter_count"] = parameter_count(model)
        report["wall_clock_seconds"] = model.fit_seconds
    return report


def cmd_evaluate(args):
    est = io.read_tensor(args.estimate)
    truth = io.read_tensor(args.truth)
    obs = io.read_observations(args.obs)
    model = io.load_model(args.model) if args.model else None
    report = evaluate_report(est, truth, obs, args.quantiles, args.chunk_len, model)
    with open(args.report, "w") as fh:
        json.dump(report, fh, indent=2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw an (r, K, s)-FLoST ground-truth tensor")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--t", type=int, required=True)
    g.add_argument("--rank", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--sparsity", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    tr = sub.add_parser("truncate", help="project a tensor onto FLoST structure")
    tr.add_argument("--input", required=True)
    tr.add_argument("--rank", type=int, required=True)
    tr.add_argument("--k", type=int, required=True)
    tr.add_argument("--sparsity", type=int, required=True)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_truncate)

    s = sub.add_parser("sample", help="Bernoulli-sample a tensor with Gaussian noise")
    s.add_argument("--input", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    def schedule_flags(p):
        p.add_argument("--c1", type=float, default=1.0)
        p.add_argument("--c2", type=float, default=1.0)
        p.add_argument("--sigma-gamma", type=float, default=1.0)
        p.add_argument("--p", type=float, default=None, help="override the stored sampling rate")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")

    f = sub.add_parser("fit", help="fit the estimator and write the completed tensor")
    f.add_argument("--obs", required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--lambda1-scale", type=float, default=1.0)
    f.add_argument("--lambda2-scale", type=float, default=1.0)
    f.add_argument("--lambda1", type=_floats, default=None,
                   help="absolute weight(s); one value or K comma-separated values")
    f.add_argument("--lambda2", type=float, default=None)
    schedule_flags(f)
    f.add_argument("--out-tensor", required=True)
    f.add_argument("--out-model", default=None)
    f.set_defaults(func=cmd_fit)

    t = sub.add_parser("tune", help="grid-search the penalty scales on a held-out split")
    t.add_argument("--obs", required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--grid-log-min", type=float, default=-1.5)
    t.add_argument("--grid-log-max", type=float, default=0.5)
    t.add_argument("--grid-steps", type=int, default=5)
    t.add_argument("--holdout", type=float, default=0.1)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--report", required=True, help="CSV table scale1,scale2,validation_rmse")
    t.add_argument("--out-config", default=None, help="JSON file for the selected weights")
    schedule_flags(t)
    t.set_defaults(func=cmd_tune)

    e = sub.add_parser("evaluate", help="RMSE report on observed and unobserved entries")
    e.add_argument("--estimate", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--obs", required=True)
    e.add_argument("--model", default=None)
    e.add_argument("--chunk-len", type=int, default=None)
    e.add_argument("--quantiles", type=_floats, default=[0.0, 0.75, 0.95, 0.99])
    e.add_argument("--report", required=True)
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except DimensionError as exc:
        code, msg = EXIT_DIMS, str(exc)
    except (OSError, io.TensorFileError, io.ObservationParseError) as exc:
        code, msg = EXIT_FILE, str(exc)
    except (ValueError, IndexError, RuntimeError, np.linalg.LinAlgError) as exc:
        code, msg = EXIT_FAILURE, str(exc)
    else:
        return 0
    print(f"flost {args.command}: error: {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
