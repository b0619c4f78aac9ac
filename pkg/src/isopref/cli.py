"""Command-line driver: ``isopref fit | predict | evaluate | synth | mismatch | bootstrap``.

Numeric output goes to stdout or ``--out``; any failure prints one JSON
object ``{"error": ..., "message": ...}`` on stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Sequence

from .cv import cross_validate, default_grid, parse_grid, split
from .io import IngestConfig, ingest_csv, json_ready, load_model, read_json, rejection_dicts, save_model
from .lattice import InputError
from .metrics import EmpiricalDistribution, bootstrap_ci, irreducible_error, metric_report, preference_misalignment
from .mismatch import demo_bias, feasibility_checks, write_bias
from .postprocess import evaluate_many
from .synthetic import ExperimentConfig, Family, default_threads, run_all, write_results

EXIT_INPUT = 2
EXIT_INTERNAL = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _open_out(path: str | None):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")


def _write_json(obj, path: str | None) -> None:
    fh = _open_out(path)
    try:
        fh.write(json.dumps(json_ready(obj)) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _ingest_config(args) -> IngestConfig:
    doc = read_json(args.config) if args.config else {}
    for key in ("criteria_columns", "score_column", "m", "score_min", "score_max", "delimiter"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    return IngestConfig.from_dict(doc)


def cmd_fit(args) -> None:
    cfg = _ingest_config(args)
    res = ingest_csv(args.data, cfg)
    if not 0 < args.split < 1:
        raise InputError("--split must be strictly between 0 and 1")
    grid = parse_grid(args.lambda_grid) if args.lambda_grid else default_grid()
    train, test = split(res.dataset, args.seed, args.split)
    cv = cross_validate(train, grid, args.seed)
    report = metric_report(cv.final_model, test).to_dict()
    report.update(
        chosen_lambda=cv.chosen_lambda,
        n_train=train.n,
        n_test=test.n,
        seed=args.seed,
        rejected=rejection_dicts(res.rejections),
    )
    if args.model_out:
        save_model(cv.final_model, args.model_out)
    _write_json(report, args.out)


def cmd_predict(args) -> None:
    model = load_model(args.model)
    spec = model.spec
    doc = read_json(args.config) if args.config else {}
    cols = args.criteria_columns or doc.get("criteria_columns")
    if not cols:
        raise InputError("need criteria columns (--config or --criteria-columns)")
    cfg = IngestConfig(tuple(cols), "", spec.m, spec.score_min, spec.score_max, args.delimiter or doc.get("delimiter", ","))
    if cfg.spec.d != spec.d:
        raise InputError(f"model has {spec.d} criteria but {cfg.spec.d} columns were given")
    res = ingest_csv(args.data, cfg, require_score=False)
    pred = evaluate_many(model, res.X)
    raw = spec.unscale(pred)
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["line", *cfg.criteria_columns, "prediction", "prediction_raw"])
        for line, x, p, r in zip(res.lines, res.X, pred, raw):
            w.writerow([int(line), *(int(v) for v in x), repr(float(p)), repr(float(r))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    for rej in res.rejections:
        print(json.dumps({"rejected": rej.line, "reason": rej.reason}), file=sys.stderr)


def cmd_evaluate(args) -> None:
    model = load_model(args.model)
    cfg = _ingest_config(args)
    if (cfg.spec.d, cfg.spec.m) != (model.spec.d, model.spec.m):
        raise InputError("data config and model disagree on the lattice")
    test = ingest_csv(args.data, cfg).dataset
    report = metric_report(model, test).to_dict()
    if args.model_b:
        other = load_model(args.model_b)
        if (other.spec.d, other.spec.m) != (model.spec.d, model.spec.m):
            raise InputError("the two models live on different lattices")
        mis, se = preference_misalignment(model, other, EmpiricalDistribution.from_dataset(test))
        report.update(preference_misalignment=mis, preference_misalignment_se=se)
    _write_json(report, args.out)


def cmd_synth(args) -> None:
    doc = read_json(args.config) if args.config else {}
    families = doc.pop("families", [f.value for f in Family])
    if args.families:
        families = args.families.split(",")
    for key in ("d", "m", "sigma", "trials"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if args.sizes:
        doc["sample_sizes"] = [int(v) for v in args.sizes.split(",")]
    if args.lambda_grid:
        doc["grid"] = parse_grid(args.lambda_grid)
    doc["seed"] = args.seed
    try:
        cfg = ExperimentConfig(**doc)
        families = [Family(f) for f in families]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad experiment config: {exc}") from exc
    rows = run_all(cfg, families, args.threads)
    fh = _open_out(args.out)
    try:
        write_results(rows, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_mismatch(args) -> None:
    checks = feasibility_checks()
    premises = all(checks["B4_chains"]) and checks["B4_isotonic"] and not checks["M_ranking3_gam_orderable"]
    if not premises:
        raise RuntimeError(f"construction premises failed: {checks}")
    ms = [int(v) for v in args.m.split(",")]
    rows = [row for m in ms for row in demo_bias(m)]
    fh = _open_out(args.out)
    try:
        write_bias(rows, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_bootstrap(args) -> None:
    cfg = _ingest_config(args)
    ds = ingest_csv(args.data, cfg).dataset
    lo, hi = bootstrap_ci(irreducible_error, ds, args.resamples, args.seed)
    _write_json(
        {
            "irreducible_error": irreducible_error(ds),
            "ci_low": lo,
            "ci_high": hi,
            "resamples": args.resamples,
            "n": ds.n,
            "seed": args.seed,
        },
        args.out,
    )


def _add_ingest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("data", help="ratings CSV with a header row")
    p.add_argument("--config", help="JSON ingest config (criteria_columns, score_column, m, score_min, score_max)")
    p.add_argument("--criteria-columns", dest="criteria_columns", type=lambda s: s.split(","))
    p.add_argument("--score-column", dest="score_column")
    p.add_argument("--m", type=int)
    p.add_argument("--score-min", dest="score_min", type=float)
    p.add_argument("--score-max", dest="score_max", type=float)
    p.add_argument("--delimiter")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=default_threads())
    common.add_argument("--out", help="output path (default stdout)")

    parser = _Parser(prog="isopref", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="split, cross-validate, refit and report")
    _add_ingest_flags(p)
    p.add_argument("--lambda-grid", help="comma list including 0 and inf")
    p.add_argument("--split", type=float, default=0.8, help="training fraction")
    p.add_argument("--model-out", help="where to write the fitted model")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="evaluate a saved model on criteria rows")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--config")
    p.add_argument("--criteria-columns", dest="criteria_columns", type=lambda s: s.split(","))
    p.add_argument("--delimiter")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="error report of a saved model on labeled data")
    p.add_argument("model")
    _add_ingest_flags(p)
    p.add_argument("--model-b", help="second model for preference misalignment")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", parents=[common], help="sample-size benchmark on synthetic utilities")
    p.add_argument("--config", help="JSON with ExperimentConfig fields and optional families")
    p.add_argument("--families", help="comma list of linear, leontief, cobb_douglas")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--sizes", help="comma list of sample sizes")
    p.add_argument("--lambda-grid")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mismatch", parents=[common], help="linear-fit bias on the counterexample matrices")
    p.add_argument("--m", default="3,4,6,8,9,12", help="comma list of matrix sizes")
    p.set_defaults(func=cmd_mismatch)

    p = sub.add_parser("bootstrap", parents=[common], help="percentile interval of the irreducible error")
    _add_ingest_flags(p)
    p.add_argument("--resamples", "-B", type=int, default=1000)
    p.set_defaults(func=cmd_bootstrap)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head); stay quiet
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_INTERNAL
    except InputError as exc:
        print(json.dumps({"error": "input", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
