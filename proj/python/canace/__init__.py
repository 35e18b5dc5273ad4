"""Canonical cluster expansions with purified self-interacting features."""

import json

import numpy as np

from ._canace import (
    Family,
    IndexSet,
    PurificationOperator,
    brute_force_canonical,
    build_purification_operator,
    canonical_design,
    close_index_set,
    cross_validate,
    filter_invariant,
    generate_index_set,
    purification_prior,
    self_design,
    self_interacting,
    smoothness_prior,
    tikhonov_solve,
    tsvd_solve,
)
from ._canace import _run_experiment

EXPERIMENTS = ("purify-info", "cond", "decay", "fit", "invariance-check", "span-check")


def _as_config(X):
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def run_experiment(name, config=None, seed=42, threads=1):
    """Run one experiment. Returns (metadata, tables, passed); each table is a list of row dicts."""
    meta, raw, passed = _run_experiment(name, json.dumps(config) if config else "", seed, threads)
    tables = {key: [dict(zip(header, row)) for row in rows] for key, (header, rows) in raw.items()}
    return json.loads(meta), tables, passed


def canonical(family, P, X):
    """Canonical features over P.rows for one configuration."""
    return P.apply(self_interacting(family, P.cols, _as_config(X)))


__all__ = [
    "EXPERIMENTS",
    "Family",
    "IndexSet",
    "PurificationOperator",
    "brute_force_canonical",
    "build_purification_operator",
    "canonical",
    "canonical_design",
    "close_index_set",
    "cross_validate",
    "filter_invariant",
    "generate_index_set",
    "purification_prior",
    "run_experiment",
    "self_design",
    "self_interacting",
    "smoothness_prior",
    "tikhonov_solve",
    "tsvd_solve",
]
