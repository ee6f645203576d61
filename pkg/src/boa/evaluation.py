"""Experiment harnesses: cross-validated AUC, fixed-model metrics, planted recovery, timing."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .config import ModelConfig, SAConfig
from .data import EQ, AttributeSchema, DatasetIndex, Literal, Schema, Table, build_index
from .exceptions import SchemaError
from .infer import sa_search
from .mining import from_patterns, mine_pool
from .model import LikelihoodHyper
from .patterns import ConfusionCounts, Pattern, PatternSet, confusion, edit_distance
from .pipeline import fit


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    hyper: LikelihoodHyper | None = None


def default_grid() -> list[LikelihoodHyper]:
    """Sweep over the two Beta pseudo-count sizes that trade coverage against precision."""
    values = (1.0, 10.0, 100.0, 1000.0)
    return [LikelihoodHyper(alpha_pos=a, beta_pos=1.0, alpha_neg=b, beta_neg=1.0) for a in values for b in values]


def auc_from_points(points: Iterable[RocPoint | tuple[float, float]]) -> float:
    """Area under the upper envelope of ROC points, anchored at (0, 0) and (1, 1)."""
    pts = {(0.0, 0.0), (1.0, 1.0)}
    for p in points:
        f, t = (p.fpr, p.tpr) if isinstance(p, RocPoint) else p
        pts.add((float(f), float(t)))
    # keep points no other point dominates (lower-or-equal fpr with higher-or-equal tpr)
    ordered = sorted(pts, key=lambda q: (q[0], -q[1]))
    envelope = []
    best_tpr = -1.0
    for f, t in ordered:
        if t > best_tpr:
            envelope.append((f, t))
            best_tpr = t
    if envelope[-1][0] < 1.0:
        # (1, 1) is dominated once some point reaches tpr 1; the curve still runs to fpr 1
        envelope.append((1.0, 1.0))
    xs = np.array([q[0] for q in envelope])
    ys = np.array([q[1] for q in envelope])
    return float(np.trapezoid(ys, xs))


@dataclass
class Metrics:
    accuracy: float
    tpr: float
    fpr: float
    confusion: ConfusionCounts

    def to_dict(self) -> dict:
        c = self.confusion
        return {"accuracy": self.accuracy, "tpr": self.tpr, "fpr": self.fpr,
                "tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}


def metrics_from_confusion(c: ConfusionCounts) -> Metrics:
    return Metrics(
        accuracy=(c.tp + c.tn) / c.n if c.n else float("nan"),
        tpr=c.tp / c.n_pos if c.n_pos else 0.0,
        fpr=c.fp / c.n_neg if c.n_neg else 0.0,
        confusion=c,
    )


def evaluate_fixed(pattern_set: PatternSet, index: DatasetIndex) -> Metrics:
    """Accuracy, tpr and fpr of a given pattern set on ``index``."""
    n_attr = index.schema.n_attributes
    for p in pattern_set:
        for lit in p.literals:
            if lit.attribute >= n_attr:
                raise SchemaError("pattern set refers to an attribute the data does not have")
            lit.validate(index.schema)
    return metrics_from_confusion(confusion(pattern_set, index))


@dataclass
class FoldResult:
    fold: int
    auc: float | None
    points: list[RocPoint]
    skipped: str | None = None


@dataclass
class KFoldResult:
    folds: list[FoldResult]

    @property
    def aucs(self) -> list[float]:
        return [f.auc for f in self.folds if f.auc is not None]

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs)) if self.aucs else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.aucs)) if self.aucs else float("nan")

    def rows(self):
        for f in self.folds:
            for p in f.points:
                h = p.hyper
                yield {"fold": f.fold, "alpha_pos": h.alpha_pos, "beta_pos": h.beta_pos, "alpha_neg": h.alpha_neg,
                       "beta_neg": h.beta_neg, "fpr": p.fpr, "tpr": p.tpr}


def kfold_auc(table: Table, config: ModelConfig, k: int = 5, grid: Sequence[LikelihoodHyper] | None = None,
              seed: int = 0, label_noise: float = 0.0) -> KFoldResult:
    """Stratified k-fold AUC of the hyperparameter sweep.

    Each fold mines once on its training split, fits one pattern set per grid
    setting and places it in ROC space on the test split.  ``label_noise``
    flips that fraction of training labels, chosen at random; test labels
    stay clean.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    grid = list(grid) if grid is not None else default_grid()
    if not grid:
        raise ValueError("the hyperparameter grid is empty")
    labels = table.labels
    folds = []
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    noise_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    for f, (train, test) in enumerate(splitter.split(np.zeros(len(labels)), labels)):
        train_t = table.subset(train)
        test_t = table.subset(test)
        if label_noise > 0:
            flip = np.zeros(len(train), dtype=bool)
            flip[noise_rng.choice(len(train), size=int(round(label_noise * len(train))), replace=False)] = True
            train_t = train_t.with_labels(train_t.labels ^ flip)
        one_class = [name for name, t in (("train", train_t), ("test", test_t))
                     if t.labels.all() or not t.labels.any()]
        if one_class:
            folds.append(FoldResult(f, None, [], skipped=f"single class in {', '.join(one_class)} split"))
            continue
        train_ix = build_index(train_t)
        test_ix = build_index(test_t, train_ix.literal_universe)
        pool = mine_pool(train_ix, config.mining) if config.sa.level == "pattern" else None
        points = []
        for g, h in enumerate(grid):
            cfg = replace(config, likelihood=h, sa=replace(config.sa, seed=config.sa.seed + 1000 * f + g))
            res = fit(train_ix, cfg, pool)
            m = evaluate_fixed(res.pattern_set, test_ix)
            points.append(RocPoint(m.fpr, m.tpr, h))
        folds.append(FoldResult(f, auc_from_points(points), points))
    return KFoldResult(folds)


@dataclass(frozen=True)
class SimSpec:
    N: int
    M: int
    m: int
    density: float = 0.1
    checkpoints: tuple[int, ...] = (5000, 10000, 20000)
    replicates: int = 30
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.m <= self.M:
            raise SchemaError("need 0 <= m <= M")
        if not 0 < self.density <= 1:
            raise SchemaError("density must lie in (0, 1]")
        if self.N < 1 or self.replicates < 1:
            raise SchemaError("N and replicates must be >= 1")


def planted_schema(M: int) -> Schema:
    return Schema(tuple(AttributeSchema(f"c{j}", "categorical", ("0", "1")) for j in range(M)),
                  label_column="y", positive_label="1")


def generate_planted(spec: SimSpec, rng: np.random.Generator) -> tuple[DatasetIndex, PatternSet, list[Pattern]]:
    """Bernoulli coverage matrix, hidden true columns, and labels from their OR.

    Each column is one opaque single-literal pattern.  Returns the index, the
    true set and the full list of column patterns.
    """
    X = rng.random((spec.N, spec.M)) < spec.density
    truth_cols = np.sort(rng.choice(spec.M, size=spec.m, replace=False)) if spec.m else np.zeros(0, dtype=int)
    y = X[:, truth_cols].any(axis=1) if spec.m else np.zeros(spec.N, dtype=bool)
    schema = planted_schema(spec.M)
    universe = tuple(Literal(j, EQ, 1) for j in range(spec.M))
    index = DatasetIndex.from_matrix(schema, universe, X, y)
    columns = [Pattern.of(lit) for lit in universe]
    return index, PatternSet.of(columns[j] for j in truth_cols), columns


def simulation_config(spec: SimSpec, sa: SAConfig | None = None) -> ModelConfig:
    sa = sa or SAConfig()
    sa = replace(sa, max_steps=max(spec.checkpoints), checkpoints=spec.checkpoints, level="pattern")
    return ModelConfig(prior="none", sa=sa).with_mining(max_length=1)


@dataclass
class SimRecord:
    replicate: int
    distances: dict[int, int]
    seconds: float
    separated_at: list


def simulation_study(spec: SimSpec, sa: SAConfig | None = None, on_replicate=None) -> list[SimRecord]:
    """Planted-recovery experiment: edit distance of the best set at each checkpoint.

    Replicate ``r`` uses ``SeedSequence(spec.seed, spawn_key=(r,))`` for the
    instance and ``spec.seed + r`` as the search seed.
    """
    records = []
    for r in range(spec.replicates):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(r,)))
        index, truth, columns = generate_planted(spec, rng)
        config = simulation_config(spec, sa)
        config = config.with_sa(seed=spec.seed + r)
        pool = from_patterns(index, columns, max_length=1)
        t0 = time.perf_counter()
        _, trace = sa_search(index, pool, config)
        seconds = time.perf_counter() - t0
        dist = {c: edit_distance(trace.checkpoints[c], truth) for c in spec.checkpoints}
        rec = SimRecord(r, dist, seconds, [ch.separated_at for ch in trace.chains])
        records.append(rec)
        if on_replicate is not None:
            on_replicate(rec)
    return records


def mean_distances(records: Sequence[SimRecord]) -> dict[int, float]:
    if not records:
        return {}
    return {c: float(np.mean([r.distances[c] for r in records])) for c in records[0].distances}


def simulation_csv(spec: SimSpec, records: Sequence[SimRecord]) -> str:
    """One row per replicate; deterministic (no timing columns)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "M", "m", "replicate", *[f"edit_distance_{c}" for c in spec.checkpoints]])
    for r in records:
        w.writerow([spec.N, spec.M, spec.m, r.replicate, *[r.distances[c] for c in spec.checkpoints]])
    return buf.getvalue()


def runtime_report(spec: SimSpec, checkpoints: Sequence[int] | None = None, sa: SAConfig | None = None,
                   stop_when_separated: bool = False) -> list[dict]:
    """Wall-clock seconds and mean edit distance after each iteration budget.

    Every budget reruns the search from scratch, so seconds include the
    whole search up to that budget.  Chains run to the full budget unless
    ``stop_when_separated`` is set.
    """
    checkpoints = sorted(checkpoints or spec.checkpoints)
    sa = replace(sa or SAConfig(), stop_when_separated=stop_when_separated)
    out = []
    for c in checkpoints:
        seconds, dists = [], []
        for r in range(spec.replicates):
            rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(r,)))
            index, truth, columns = generate_planted(spec, rng)
            pool = from_patterns(index, columns, max_length=1)
            config = ModelConfig(prior="none", sa=replace(sa, max_steps=c, checkpoints=(), seed=spec.seed + r))
            config = config.with_mining(max_length=1)
            t0 = time.perf_counter()
            best, _ = sa_search(index, pool, config)
            seconds.append(time.perf_counter() - t0)
            dists.append(edit_distance(best, truth))
        out.append({"iterations": c, "seconds": float(np.mean(seconds)), "mean_edit_distance": float(np.mean(dists))})
    return out


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()
