"""Bayesian Or's of And's: interpretable rule-set classifiers.

A model is a disjunction of conjunctions over categorical and ordinal
attribute tests.  Candidates are mined from the data, scored by a prior on
the shape of the rule set times a Beta-integrated likelihood, and the MAP
set is found by simulated annealing.

>>> from boa import ModelConfig, build_index, fit, tic_tac_toe
>>> result = fit(build_index(tic_tac_toe()), ModelConfig())  # doctest: +SKIP
"""
from __future__ import annotations

__version__ = "0.1.0"

from .config import ModelConfig, SAConfig, load_config, save_config
from .data import AttributeSchema, DatasetIndex, Literal, Schema, Table, build_index, expand_literals, load_csv
from .datasets import breast_cancer, breast_cancer_model, tic_tac_toe, tic_tac_toe_truth
from .exceptions import BoaError, DataError, PoolError, SchemaError
from .infer import exhaustive_map, sa_search
from .mining import MinedPool, MiningConfig, mine_pool
from .model import BetaBinomialHyper, LikelihoodHyper, PoissonHyper, Score, score
from .patterns import Pattern, PatternSet, classify, confusion, edit_distance
from .pipeline import FitResult, fit

__all__ = [
    "AttributeSchema", "BetaBinomialHyper", "BoaError", "DataError", "DatasetIndex", "FitResult",
    "LikelihoodHyper", "Literal", "MinedPool", "MiningConfig", "ModelConfig", "Pattern", "PatternSet",
    "PoissonHyper", "PoolError", "SAConfig", "Schema", "SchemaError", "Score", "Table", "__version__",
    "breast_cancer", "breast_cancer_model", "build_index", "classify", "confusion", "edit_distance",
    "exhaustive_map", "expand_literals", "fit", "load_config", "load_csv", "mine_pool", "sa_search",
    "save_config", "score", "tic_tac_toe", "tic_tac_toe_truth",
]
