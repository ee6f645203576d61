"""Command-line interface: ``boa <command> ...``.

Every artifact carries a run manifest: the resolved command arguments,
the configuration, content hashes of the inputs and the tool version.
``boa rerun`` replays a manifest and rewrites the artifacts byte for byte.
Wall-clock times go to a ``.log`` file next to the main artifact so the
artifacts themselves stay reproducible.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, bitset
from .config import LEVELS, PRIORS, ModelConfig, load_config
from .data import Schema, Table, build_index, load_csv, load_schema
from .datasets import breast_cancer, breast_cancer_model, breast_cancer_schema, tic_tac_toe, tic_tac_toe_schema
from .evaluation import SimSpec, evaluate_fixed, kfold_auc, mean_distances, rows_to_csv, runtime_report, \
    simulation_csv, simulation_study
from .exceptions import DataError, PoolError, SchemaError
from .infer import SearchProblem, default_n_jobs
from .mining import MinedPool, info_gain_screen, mine_frequent, mine_pool, roc_filter
from .model import LikelihoodHyper
from .patterns import pattern_coverage, pattern_set_from_json, pattern_set_to_json
from .pipeline import bounds_for, fit

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

BUILTIN = {
    "tic-tac-toe": (tic_tac_toe, tic_tac_toe_schema),
    "breast-cancer": (breast_cancer, breast_cancer_schema),
}
REFERENCE_MODELS = {"breast-cancer": breast_cancer_model}

# Arguments that name output files; recorded by basename only so a rerun in
# another directory writes identical manifests.
OUTPUT_ARGS = ("out", "roc_csv", "trace", "summary", "runtime_csv")


# ---------------------------------------------------------------- helpers

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_json(path, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} file {path} is not valid JSON ({exc})") from None


class Run:
    """Collects the manifest of one command invocation."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.inputs: dict[str, str] = {}
        self.dataset: str | None = None
        self.config: ModelConfig | None = None
        self.bounds: dict | None = None
        self.started = time.perf_counter()

    def add_input(self, role: str, path) -> None:
        if path is not None and os.path.exists(path):
            self.inputs[role] = _sha256(path)

    def manifest(self) -> dict:
        recorded = {}
        for key, value in sorted(vars(self.args).items()):
            if key in ("func", "threads"):
                continue
            if key in OUTPUT_ARGS and value is not None:
                value = os.path.basename(value)
            elif key in ("data", "schema", "config", "pool", "model", "grid") and value not in (None, "reference"):
                value = os.path.abspath(value)
            recorded[key] = value
        doc = {
            "tool": "boa",
            "version": __version__,
            "command": self.command,
            "arguments": recorded,
            "input_sha256": dict(sorted(self.inputs.items())),
            "dataset_fingerprint": self.dataset,
            "seed": self.config.sa.seed if self.config is not None else getattr(self.args, "seed", None),
        }
        if self.config is not None:
            cfg = self.config.to_dict()
            cfg["sa"]["n_jobs"] = 1  # thread count never changes results
            doc["config"] = cfg
        if self.bounds is not None:
            doc["bounds"] = self.bounds
        return doc

    def write_log(self, artifact) -> None:
        seconds = time.perf_counter() - self.started
        _write(str(artifact) + ".log", f"command={self.command} wall_clock_seconds={seconds:.3f}\n")

    def write_csv(self, path, text: str) -> None:
        """CSV artifact plus its ``.manifest.json`` sidecar."""
        _write(path, text)
        _write(str(path) + ".manifest.json", _dump_json(self.manifest()))


def _load_table(args, run: Run, require_label: bool = True) -> Table:
    if args.dataset:
        load, _ = BUILTIN[args.dataset]
        table = load()
    else:
        if not args.data or not args.schema:
            raise SchemaError("give --dataset, or both --data and --schema")
        if not os.path.exists(args.schema):
            raise SchemaError(f"schema file not found: {args.schema}")
        schema = load_schema(args.schema)
        run.add_input("schema", args.schema)
        run.add_input("data", args.data)
        table = load_csv(args.data, schema, require_label=require_label)
    run.dataset = table.fingerprint()
    return table


def _config(args, run: Run) -> ModelConfig:
    """Config file (if any) with command-line flags layered on top."""
    cfg = load_config(args.config) if getattr(args, "config", None) else ModelConfig()
    if getattr(args, "config", None):
        run.add_input("config", args.config)
    top = {}
    for flag in ("prior", "lambda_M", "lambda_L", "bb_alpha", "bb_beta"):
        v = getattr(args, flag, None)
        if v is not None:
            top[flag] = v
    if getattr(args, "no_bounds", False):
        top["use_bounds"] = False
    if top:
        cfg = replace(cfg, **top)
    lik = {k: getattr(args, k) for k in ("alpha_pos", "beta_pos", "alpha_neg", "beta_neg")
           if getattr(args, k, None) is not None}
    if lik:
        cfg = cfg.with_likelihood(**lik)
    mining = {}
    for flag, key in (("min_support", "min_support_fraction"), ("min_support_count", "min_support_count"),
                      ("max_length", "max_length"), ("top_k", "top_k")):
        v = getattr(args, flag, None)
        if v is not None:
            mining[key] = v
    if getattr(args, "no_negative", False):
        mining["include_negative_literals"] = False
    if mining:
        cfg = cfg.with_mining(**mining)
    sa = {}
    for flag in ("level", "max_steps", "restarts", "explore_p", "T0", "seed"):
        v = getattr(args, flag, None)
        if v is not None:
            sa[flag] = v
    sa["n_jobs"] = args.threads if getattr(args, "threads", None) else default_n_jobs()
    cfg = cfg.with_sa(**sa)
    run.config = cfg
    return cfg


# ---------------------------------------------------------------- commands

def cmd_mine(args) -> int:
    run = Run("mine", args)
    table = _load_table(args, run)
    cfg = _config(args, run)
    index = build_index(table)
    mining = cfg.mining
    threshold = mining.threshold(index.n_pos)
    if threshold > index.n_pos:
        print(f"warning: support threshold {threshold} exceeds the {index.n_pos} positive records; "
              "the pool is empty", file=sys.stderr)
    mined = mine_frequent(index, mining)
    kept = roc_filter(mined)
    pool = info_gain_screen(kept, mining.top_k)
    pool.notes.update({"n_mined": len(mined), "n_after_roc": len(kept), "n_after_screen": len(pool)})

    doc = pool.to_json(index.schema)
    doc["manifest"] = run.manifest()
    _write(args.out, _dump_json(doc))
    if args.roc_csv:
        on_frontier = set(kept.patterns)
        selected = set(pool.patterns)
        rows = [{"pattern": p.render(index.schema), "length": len(p),
                 "support_pos": int(mined.support_pos[i]), "support_neg": int(mined.support_neg[i]),
                 "fpr": repr(float(mined.fpr[i])), "tpr": repr(float(mined.tpr[i])),
                 "roc_kept": int(p in on_frontier), "selected": int(p in selected)}
                for i, p in enumerate(mined.patterns)]
        run.write_csv(args.roc_csv, rows_to_csv(rows) if rows else
                      "pattern,length,support_pos,support_neg,fpr,tpr,roc_kept,selected\n")
    run.write_log(args.out)
    print(f"{len(pool)} patterns ({len(mined)} mined, {len(kept)} on the ROC frontier) -> {args.out}")
    return EXIT_OK


def _load_pool(path, index, run: Run) -> MinedPool:
    doc = _read_json(path, "pool")
    run.add_input("pool", path)
    try:
        return MinedPool.from_json(doc, index)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed pool file {path}: {exc}") from None


def cmd_train(args) -> int:
    run = Run("train", args)
    table = _load_table(args, run)
    cfg = _config(args, run)
    index = build_index(table)
    pool = None
    if cfg.sa.level == "pattern":
        if not args.pool:
            raise SchemaError("pattern-level training needs a candidate pool (--pool, made by 'boa mine')")
        pool = _load_pool(args.pool, index, run)
    result = fit(index, cfg, pool)
    run.bounds = result.bounds.to_dict() if result.bounds is not None else None
    s = result.score
    c = s.confusion
    doc = {
        "model": pattern_set_to_json(result.pattern_set, index.schema),
        "score": {"log_prior": s.log_prior, "log_likelihood": s.log_likelihood, "energy": s.energy,
                  "tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
        "min_support_applied": result.min_support_applied,
        "candidates_searched": None if result.pool is None else len(result.pool),
        "manifest": run.manifest(),
    }
    _write(args.out, _dump_json(doc))
    if args.trace:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["chain", "step", "current_energy", "best_energy", "accepted"])
        if result.trace is not None:
            for chain, step, cur, best, acc in result.trace.rows():
                w.writerow([chain, step, repr(cur), repr(best), int(acc)])
        run.write_csv(args.trace, buf.getvalue())
    run.write_log(args.out)
    print(result.pattern_set.render(index.schema))
    print(f"training errors: {c.fp + c.fn} of {c.n}; energy {s.energy:.6f} -> {args.out}")
    return EXIT_OK


def _load_model(args, schema: Schema, run: Run):
    if args.model == "reference":
        if args.dataset not in REFERENCE_MODELS:
            raise SchemaError("--model reference is only available with --dataset breast-cancer")
        return REFERENCE_MODELS[args.dataset]()
    doc = _read_json(args.model, "model")
    run.add_input("model", args.model)
    doc = doc.get("model", doc)
    try:
        return pattern_set_from_json(doc, schema)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed model file {args.model}: {exc}") from None


def cmd_predict(args) -> int:
    run = Run("predict", args)
    table = _load_table(args, run, require_label=False)
    model = _load_model(args, table.schema, run)
    universe = sorted({lit for p in model for lit in p.literals})
    index = build_index(table, universe)
    n = index.n_records
    fired = np.zeros(n, dtype=np.int64)
    for k, p in reversed(list(enumerate(model, start=1))):
        fired[bitset.unpack(pattern_coverage(p, index), n)] = k
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record", "prediction", "fired"])
    for i in range(n):
        w.writerow([i, int(fired[i] > 0), int(fired[i])])
    run.write_csv(args.out, buf.getvalue())
    run.write_log(args.out)
    print(f"{int((fired > 0).sum())} of {n} records predicted positive -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    run = Run("evaluate", args)
    table = _load_table(args, run)
    if args.model:
        model = _load_model(args, table.schema, run)
        metrics = evaluate_fixed(model, build_index(table))
        doc = {"mode": "fixed", "model": pattern_set_to_json(model, table.schema), "metrics": metrics.to_dict(),
               "manifest": run.manifest()}
        _write(args.out, _dump_json(doc))
        run.write_log(args.out)
        m = metrics
        print(f"accuracy {m.accuracy:.4f}  tpr {m.tpr:.4f}  fpr {m.fpr:.4f} -> {args.out}")
        return EXIT_OK

    cfg = _config(args, run)
    grid = None
    if args.grid:
        doc = _read_json(args.grid, "grid")
        run.add_input("grid", args.grid)
        try:
            grid = [LikelihoodHyper(**h) for h in doc]
        except TypeError as exc:
            raise SchemaError(f"malformed grid file: {exc}") from None
    res = kfold_auc(table, cfg, k=args.folds, grid=grid, seed=args.fold_seed, label_noise=args.label_noise)
    doc = {
        "mode": "kfold",
        "folds": [{"fold": f.fold, "auc": f.auc, "skipped": f.skipped} for f in res.folds],
        "auc_mean": res.mean,
        "auc_std": res.std,
        "manifest": run.manifest(),
    }
    _write(args.out, _dump_json(doc))
    if args.roc_csv:
        rows = [{k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()} for r in res.rows()]
        run.write_csv(args.roc_csv, rows_to_csv(rows))
    run.write_log(args.out)
    print(f"AUC {res.mean:.4f} +/- {res.std:.4f} over {len(res.aucs)} folds -> {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    run = Run("simulate", args)
    spec = SimSpec(N=args.N, M=args.M, m=args.m, density=args.density, checkpoints=tuple(args.checkpoints),
                   replicates=args.replicates, seed=args.seed)
    cfg = _config(args, run)
    records = simulation_study(spec, cfg.sa)
    run.write_csv(args.out, simulation_csv(spec, records))
    if args.summary:
        means = mean_distances(records)
        _write(args.summary, _dump_json({"mean_edit_distance": {str(c): v for c, v in means.items()},
                                         "replicates": len(records), "manifest": run.manifest()}))
    if args.runtime_csv:
        # timings vary run to run, so this file is a log rather than an artifact
        rows = runtime_report(spec, checkpoints=[0, *spec.checkpoints], sa=cfg.sa)
        _write(args.runtime_csv, rows_to_csv(rows))
    run.write_log(args.out)
    means = mean_distances(records)
    print("mean edit distance: " + ", ".join(f"{c}: {v:.3f}" for c, v in means.items()) + f" -> {args.out}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    run = Run("bounds", args)
    table = _load_table(args, run)
    cfg = _config(args, run)
    index = build_index(table)
    pool = None
    problem = None
    if cfg.prior == "beta_binomial":
        if cfg.sa.level == "literal":
            problem = SearchProblem.for_literals(index, cfg)
        elif args.pool:
            pool = _load_pool(args.pool, index, run)
        else:
            pool = mine_pool(index, cfg.mining)
    report = bounds_for(index, cfg, pool=pool, problem=problem)
    run.bounds = report.to_dict()
    doc = {"bounds": report.to_dict(), "n_pos": index.n_pos, "n_neg": index.n_neg, "manifest": run.manifest()}
    _write(args.out, _dump_json(doc))
    run.write_log(args.out)
    d = report.to_dict()
    print(f"m_upper {d['m_upper']}  min support {d['min_support_C']}  risk bound {d['generalization_bound']}"
          f" -> {args.out}")
    return EXIT_OK


def _manifest_from(path) -> dict:
    doc = _read_json(path, "artifact or manifest")
    if "manifest" in doc:
        return doc["manifest"]
    if "command" in doc and "arguments" in doc:
        return doc
    raise SchemaError(f"{path} holds no run manifest")


def cmd_rerun(args) -> int:
    manifest = _manifest_from(args.manifest)
    command = manifest["command"]
    recorded = dict(manifest["arguments"])
    out_dir = Path(args.out_dir)
    for key in OUTPUT_ARGS:
        if recorded.get(key):
            recorded[key] = str(out_dir / recorded[key])
    ns = argparse.Namespace(**recorded)
    ns.threads = args.threads
    for role, digest in manifest.get("input_sha256", {}).items():
        path = recorded.get(role)
        if path and os.path.exists(path) and _sha256(path) != digest:
            raise DataError(f"input {role} ({path}) changed since the original run")
        if path and not os.path.exists(path):
            raise DataError(f"input {role} ({path}) is missing")
    status = COMMANDS[command](ns)
    return status


COMMANDS = {
    "mine": cmd_mine,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "rerun": cmd_rerun,
}


# ---------------------------------------------------------------- parser

def _data_args(p) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--dataset", choices=sorted(BUILTIN), help="bundled dataset instead of --data/--schema")
    g.add_argument("--data", help="CSV file with a header row")
    g.add_argument("--schema", help="schema JSON describing the CSV columns")


def _model_args(p, search: bool = True) -> None:
    g = p.add_argument_group("model (flags override --config)")
    g.add_argument("--config", help="config JSON")
    g.add_argument("--prior", choices=PRIORS)
    g.add_argument("--alpha-pos", dest="alpha_pos", type=float)
    g.add_argument("--beta-pos", dest="beta_pos", type=float)
    g.add_argument("--alpha-neg", dest="alpha_neg", type=float)
    g.add_argument("--beta-neg", dest="beta_neg", type=float)
    g.add_argument("--lambda-M", dest="lambda_M", type=float)
    g.add_argument("--lambda-L", dest="lambda_L", type=float)
    g.add_argument("--bb-alpha", dest="bb_alpha", type=float, nargs="+", help="one value per pattern length")
    g.add_argument("--bb-beta", dest="bb_beta", type=float, nargs="+", help="one value per pattern length")
    g.add_argument("--min-support", dest="min_support", type=float, help="fraction of positive records")
    g.add_argument("--min-support-count", dest="min_support_count", type=int)
    g.add_argument("--max-length", dest="max_length", type=int)
    g.add_argument("--top-k", dest="top_k", type=int)
    g.add_argument("--no-negative", dest="no_negative", action="store_true", help="omit != literals")
    if search:
        s = p.add_argument_group("search")
        s.add_argument("--level", choices=LEVELS)
        s.add_argument("--max-steps", dest="max_steps", type=int)
        s.add_argument("--restarts", type=int)
        s.add_argument("--explore-p", dest="explore_p", type=float)
        s.add_argument("--T0", dest="T0", type=float)
        s.add_argument("--seed", type=int)
        s.add_argument("--no-bounds", dest="no_bounds", action="store_true",
                       help="do not prune candidates below the minimum-support bound")
        s.add_argument("--threads", type=int, help="parallel chains (default: $BOA_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boa", description="Bayesian Or's of And's rule-set classifiers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine the candidate pattern pool")
    _data_args(p)
    _model_args(p, search=False)
    p.add_argument("--out", required=True, help="pool JSON")
    p.add_argument("--roc-csv", dest="roc_csv", help="every mined pattern in ROC space")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("train", help="search for the MAP pattern set")
    _data_args(p)
    _model_args(p)
    p.add_argument("--pool", help="pool JSON from 'boa mine' (pattern level)")
    p.add_argument("--out", required=True, help="model JSON")
    p.add_argument("--trace", help="per-step energy trace CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a model to records")
    _data_args(p)
    p.add_argument("--model", required=True, help="model JSON, or 'reference' for a bundled model")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="fixed-model metrics or k-fold AUC")
    _data_args(p)
    _model_args(p)
    p.add_argument("--model", help="evaluate this model instead of cross-validating ('reference' for bundled)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--fold-seed", dest="fold_seed", type=int, default=0)
    p.add_argument("--label-noise", dest="label_noise", type=float, default=0.0,
                   help="fraction of training labels flipped in every fold")
    p.add_argument("--grid", help="JSON list of likelihood hyperparameter settings for the ROC sweep")
    p.add_argument("--out", required=True, help="metrics JSON")
    p.add_argument("--roc-csv", dest="roc_csv", help="per-fold ROC points")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="planted pattern-set recovery")
    p.add_argument("--N", type=int, default=2000, help="records")
    p.add_argument("--M", type=int, default=1000, help="candidate patterns")
    p.add_argument("--m", type=int, default=5, help="true patterns")
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--checkpoints", type=int, nargs="+", default=[5000, 10000, 20000])
    p.add_argument("--replicates", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int)
    p.add_argument("--explore-p", dest="explore_p", type=float)
    p.add_argument("--T0", dest="T0", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True, help="per-replicate edit distances CSV")
    p.add_argument("--summary", help="mean edit distances JSON")
    p.add_argument("--runtime-csv", dest="runtime_csv", help="wall-clock per iteration budget (not reproducible)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bounds", help="size, support and risk bounds for a configuration")
    _data_args(p)
    _model_args(p)
    p.add_argument("--pool", help="pool JSON supplying the Beta-Binomial pool sizes (mined if absent)")
    p.add_argument("--out", required=True, help="bound report JSON")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rerun", help="replay the run recorded in an artifact or manifest")
    p.add_argument("manifest", help="JSON artifact or .manifest.json sidecar")
    p.add_argument("--out-dir", dest="out_dir", required=True, help="directory for the regenerated artifacts")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, PoolError) as exc:
        print(f"boa: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"boa: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
