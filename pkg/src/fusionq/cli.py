"""Command-line interface: ``fusionq {train,predict,eval,compare,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible or
degenerate model.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io, kernel, metrics, ranking, selection, synth
from .exceptions import DataError, FusionError, ModelError
from .mincq import vote_scores
from .types import SolverConfig

log = logging.getLogger("fusionq")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fusionq", description="Late fusion of classifier scores with MinCq.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="cross-validate and train a fusion model")
    t.add_argument("--train", required=True, type=Path, help="training score CSV")
    t.add_argument("--model", required=True, type=Path, help="output model file")
    t.add_argument("--report", type=Path, help="output cross-validation report (JSON)")
    t.add_argument("--algorithm", default="mincq",
                   choices=["mincq", "mincq-pw", "mincq-pwav",
                            "sum", "map-weighted", "best-confidence", "h-best"])
    t.add_argument("--mu", type=float, help="single margin value (overrides --grid-mu)")
    t.add_argument("--beta", type=float, help="single slack weight (overrides --grid-beta)")
    t.add_argument("--gamma", type=float, help="single RBF width (overrides --grid-gamma)")
    t.add_argument("--grid-mu", type=_floats, default=list(selection.DEFAULT_MU_GRID))
    t.add_argument("--grid-beta", type=_floats, default=list(selection.DEFAULT_BETA_GRID))
    t.add_argument("--grid-gamma", type=_floats,
                   help="RBF widths; default 2^k/n for k=-3..3")
    t.add_argument("--kernel", choices=["none", "rbf"], default="none")
    t.add_argument("--max-anchors", type=int)
    t.add_argument("--max-slacks", type=int, default=ranking.DEFAULT_MAX_SLACKS,
                   help="largest pairwise slack count mincq-pw may build")
    t.add_argument("--folds", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--qp-eps", type=float, default=SolverConfig.eps_abs)
    t.add_argument("--qp-max-iter", type=int, default=SolverConfig.max_iter)

    pr = sub.add_parser("predict", help="score a CSV with a trained model")
    pr.add_argument("--model", required=True, type=Path)
    pr.add_argument("--data", required=True, type=Path)
    pr.add_argument("--out", type=Path, help="output CSV (default: stdout)")

    e = sub.add_parser("eval", help="evaluate a model on labelled scores")
    e.add_argument("--model", required=True, type=Path)
    e.add_argument("--data", required=True, type=Path)
    e.add_argument("--out", type=Path, help="output report (default: stdout)")

    c = sub.add_parser("compare", help="paired t-test between two per-concept metric files")
    c.add_argument("metrics_a", type=Path)
    c.add_argument("metrics_b", type=Path)

    s = sub.add_parser("synth", help="generate a synthetic score CSV")
    s.add_argument("--config", required=True, type=Path, help="key = value SynthSpec file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, type=Path)
    return p


def _emit(text: str, out: Path = None):
    if out is None:
        sys.stdout.write(text)
    else:
        io.atomic_write(out, lambda fh: fh.write(text))


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _train_config(args, n_voters):
    algorithm = args.algorithm.replace("-", "_")
    grid = {}
    if algorithm in ("mincq", "mincq_pw", "mincq_pwav"):
        grid["mu"] = [args.mu] if args.mu is not None else args.grid_mu
        if algorithm != "mincq":
            grid["beta"] = [args.beta] if args.beta is not None else args.grid_beta
        if args.kernel == "rbf":
            gammas = args.grid_gamma or kernel.default_gamma_grid(n_voters)
            grid["gamma"] = [args.gamma] if args.gamma is not None else gammas
    elif args.kernel == "rbf":
        raise UsageError("the kernel layer applies to the MinCq algorithms only")
    if any(not vals for vals in grid.values()):
        raise UsageError("hyperparameter grids must not be empty")
    return {
        "command": "train",
        "train": str(args.train),
        "model": str(args.model),
        "report": str(args.report) if args.report else None,
        "algorithm": algorithm,
        "grid": grid,
        "kernel": args.kernel,
        "max_anchors": args.max_anchors,
        "max_slacks": args.max_slacks,
        "folds": args.folds,
        "seed": args.seed,
        "qp_eps": args.qp_eps,
        "qp_max_iter": args.qp_max_iter,
        "threads": selection.thread_count(),
    }


def cmd_train(args):
    data = io.read_scores(args.train)
    config = _train_config(args, data.n)
    log.info("resolved configuration: %s", json.dumps(config, sort_keys=True))
    cfg = SolverConfig(eps_abs=config["qp_eps"], eps_rel=config["qp_eps"],
                       max_iter=config["qp_max_iter"])
    model, cv = selection.train_with_cv(
        data, config["algorithm"], config["grid"], folds=config["folds"], seed=config["seed"],
        cfg=cfg, max_anchors=config["max_anchors"], max_slacks=config["max_slacks"])
    io.write_model(model, args.model)
    if args.report:
        report = {
            "config": config,
            "best_params": cv.best_params,
            "grid_points": cv.grid_points,
            "mean_map": [_clean(float(v)) for v in cv.mean_maps()],
            "fold_map": [[_clean(float(v)) for v in row] for row in cv.cv_map_table],
            "skipped": [{"grid_point": cv.grid_points[g], "reason": r} for g, r in cv.skipped],
        }
        _emit(io.dumps_json(report), args.report)
    log.info("best parameters %s; model written to %s", cv.best_params, args.model)
    return EXIT_OK


def cmd_predict(args):
    log.info("resolved configuration: %s", json.dumps(
        {"command": "predict", "model": str(args.model), "data": str(args.data),
         "out": str(args.out) if args.out else None}, sort_keys=True))
    model = io.read_model(args.model)
    data = io.read_scores(args.data)
    h = vote_scores(model, data)
    lines = ["id,score,label"]
    lines += [f"{i},{io._fmt(v)},{1 if v >= 0 else -1}" for i, v in zip(data.example_ids, h)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_eval(args):
    log.info("resolved configuration: %s", json.dumps(
        {"command": "eval", "model": str(args.model), "data": str(args.data),
         "out": str(args.out) if args.out else None}, sort_keys=True))
    model = io.read_model(args.model)
    data = io.read_scores(args.data)
    h = vote_scores(model, data)
    voters = model.kernel.transform(data) if model.kernel is not None else data
    report = metrics.evaluate(h, data, voters)
    doc = {k: _clean(v) for k, v in report.summary().items()}
    doc["algorithm"] = model.algorithm
    doc["m"] = data.m
    if voters.n <= 20:
        doc["diversity"] = np.asarray(report.diversity).tolist()
        doc["diversity_voters"] = list(voters.voter_names)
    _emit(io.dumps_json(doc), args.out)
    return EXIT_OK


def cmd_compare(args):
    log.info("resolved configuration: %s", json.dumps(
        {"command": "compare", "metrics_a": str(args.metrics_a),
         "metrics_b": str(args.metrics_b)}, sort_keys=True))
    a = io.read_metric_file(args.metrics_a)
    b = io.read_metric_file(args.metrics_b)
    if set(a) != set(b):
        raise DataError("metric files list different concepts")
    concepts = sorted(a)
    res = metrics.paired_t_test([a[c] for c in concepts], [b[c] for c in concepts])
    _emit(io.dumps_json({"n": len(concepts), "t_stat": res.t_stat, "p_value": res.p_value}))
    return EXIT_OK


def cmd_synth(args):
    spec = synth.parse_spec(args.config.read_text())
    log.info("resolved configuration: %s", json.dumps(
        {"command": "synth", "seed": args.seed, "out": str(args.out),
         "spec": synth.format_spec(spec)}, sort_keys=True))
    io.write_scores(synth.generate(spec, args.seed), args.out)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "eval": cmd_eval,
            "compare": cmd_compare, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fusionq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fusionq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError,) as exc:
        print(f"fusionq: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (DataError, OSError) as exc:
        print(f"fusionq: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FusionError as exc:
        print(f"fusionq: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
