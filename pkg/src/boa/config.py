"""Run configuration: model hyperparameters, mining settings and the search schedule."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

from .exceptions import SchemaError
from .mining import MiningConfig
from .model import BetaBinomialHyper, LikelihoodHyper, PoissonHyper

PRIORS = ("beta_binomial", "poisson", "none")
LEVELS = ("pattern", "literal")


@dataclass(frozen=True)
class SAConfig:
    """Simulated-annealing schedule.

    ``checkpoints`` lists step counts at which the best set found so far is
    recorded (used by the simulation harness).  ``stop_when_separated`` halts a
    chain once no training record is misclassified.
    """

    max_steps: int = 50000
    explore_p: float = 0.1
    restarts: int = 3
    T0: float = 1.0
    level: str = "pattern"
    seed: int = 0
    checkpoints: tuple[int, ...] = ()
    stop_when_separated: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.max_steps < 0:
            raise SchemaError("max_steps must be >= 0")
        if not 0.0 <= self.explore_p <= 1.0:
            raise SchemaError("explore_p must lie in [0, 1]")
        if self.restarts < 1:
            raise SchemaError("restarts must be >= 1")
        if not (self.T0 > 0 and math.isfinite(self.T0)):
            raise SchemaError("T0 must be a finite positive number")
        if self.level not in LEVELS:
            raise SchemaError(f"level must be one of {LEVELS}, not {self.level!r}")
        if self.seed < 0 or self.seed >= 2**64:
            raise SchemaError("seed must be an unsigned 64-bit integer")
        if self.n_jobs < 1:
            raise SchemaError("n_jobs must be >= 1")
        object.__setattr__(self, "checkpoints", tuple(sorted(int(c) for c in self.checkpoints)))


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to reproduce a fit, apart from the data and the seed.

    ``bb_alpha``/``bb_beta`` left as ``None`` take the per-length defaults
    of :meth:`BetaBinomialHyper.from_pool_sizes`.
    """

    prior: str = "beta_binomial"
    likelihood: LikelihoodHyper = field(default_factory=LikelihoodHyper)
    bb_alpha: tuple[float, ...] | None = None
    bb_beta: tuple[float, ...] | None = None
    lambda_M: float = 3.0
    lambda_L: float = 2.0
    mining: MiningConfig = field(default_factory=MiningConfig)
    sa: SAConfig = field(default_factory=SAConfig)
    use_bounds: bool = True

    def __post_init__(self):
        if self.prior not in PRIORS:
            raise SchemaError(f"prior must be one of {PRIORS}, not {self.prior!r}")
        for name in ("bb_alpha", "bb_beta"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(x) for x in v))
        PoissonHyper(self.lambda_M, self.lambda_L)  # validates

    @property
    def max_length(self) -> int:
        return self.mining.max_length

    def beta_binomial(self, pool_sizes: Sequence[int]) -> BetaBinomialHyper:
        return BetaBinomialHyper.from_pool_sizes(pool_sizes, self.bb_alpha, self.bb_beta)

    def poisson(self, level_counts: Sequence[int]) -> PoissonHyper:
        return PoissonHyper(self.lambda_M, self.lambda_L, tuple(level_counts))

    def with_sa(self, **changes) -> "ModelConfig":
        return replace(self, sa=replace(self.sa, **changes))

    def with_mining(self, **changes) -> "ModelConfig":
        return replace(self, mining=replace(self.mining, **changes))

    def with_likelihood(self, **changes) -> "ModelConfig":
        return replace(self, likelihood=replace(self.likelihood, **changes))

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("bb_alpha", "bb_beta"):
            if doc[key] is not None:
                doc[key] = list(doc[key])
        doc["sa"]["checkpoints"] = list(doc["sa"]["checkpoints"])
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        doc = dict(doc)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "likelihood" in doc:
                doc["likelihood"] = LikelihoodHyper(**doc["likelihood"])
            if "mining" in doc:
                doc["mining"] = MiningConfig(**doc["mining"])
            if "sa" in doc:
                doc["sa"] = SAConfig(**doc["sa"])
            return cls(**doc)
        except TypeError as exc:
            raise SchemaError(f"bad config: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_config(path) -> ModelConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return ModelConfig.from_dict(doc)


def save_config(config: ModelConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config.dumps() + "\n")
