"""Inference attack: guess a secret attribute of original records from the
nearest synthetic neighbor on the auxiliary columns.

A categorical guess is correct on exact match (missing matches missing); a
continuous guess is correct within a relative tolerance of the true value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import build_ranges, knn
from .tabular import ColumnKind, Dataset, TabularError, Value, align

_EPS_DENOMINATOR = 1e-12


@dataclass(frozen=True)
class InferenceConfig:
    aux_cols: tuple[str, ...]
    secret: str
    n_attacks: int
    tolerance: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.aux_cols:
            raise ValueError("aux_cols must be non-empty")
        if self.secret in self.aux_cols:
            raise ValueError("the secret cannot be an auxiliary column")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be non-negative")
        if self.n_attacks < 1:
            raise ValueError("n_attacks must be >= 1")


@dataclass
class InferenceResult:
    outcomes_main: np.ndarray
    outcomes_naive: np.ndarray
    outcomes_control: np.ndarray
    guesses: list[Value]  # main-attack guesses, aligned with outcomes_main
    n_unscored_main: int = 0  # targets dropped for a missing true secret
    n_unscored_control: int = 0


def guess_correct(
    truth: Value,
    guess: Value,
    kind: ColumnKind,
    tolerance: float,
    secret_range: float,
) -> bool:
    """Scoring rule for one inference guess.

    Categorical: exact token match; missing matches missing. Continuous:
    |truth - guess| / |truth| <= tolerance, with an exact-zero truth scored
    by the absolute rule |guess| <= tolerance * secret_range. A missing
    guess for a present truth is incorrect.
    """
    if kind is ColumnKind.CATEGORICAL:
        return truth == guess
    if truth is None or guess is None:
        return truth is None and guess is None
    if truth == 0.0:
        return abs(guess) <= tolerance * secret_range
    return abs(truth - guess) / max(abs(truth), _EPS_DENOMINATOR) <= tolerance


def _attack_outcomes(
    targets: Dataset,
    syn: Dataset,
    cfg: InferenceConfig,
    ranges,
    secret_range: float,
) -> tuple[np.ndarray, list[Value], int]:
    kind = syn.kind(cfg.secret)
    neighbors = knn(targets, syn, list(cfg.aux_cols), k=1, ranges=ranges)
    outcomes = []
    guesses: list[Value] = []
    unscored = 0
    for i in range(targets.n_rows):
        truth = targets.value(i, cfg.secret)
        if truth is None:
            unscored += 1
            continue
        guess = syn.value(int(neighbors[i].indices[0]), cfg.secret)
        guesses.append(guess)
        outcomes.append(
            guess_correct(truth, guess, kind, cfg.tolerance, secret_range)
        )
    return np.array(outcomes, dtype=bool), guesses, unscored


def _naive_guesses(
    syn: Dataset, secret: str, n: int, rng: np.random.Generator
) -> list[Value]:
    """Uninformed guesses sampled uniformly from the secret's support."""
    if syn.kind(secret) is ColumnKind.CATEGORICAL:
        cats = syn.categories(secret)
        present = [c for c, cnt in zip(cats, syn.category_counts(secret)) if cnt]
        if not present:
            raise TabularError(
                f"secret {secret!r} has no observed values in the synthetic data"
            )
        return [present[i] for i in rng.integers(len(present), size=n)]
    mm = syn.nonmissing_minmax(secret)
    if mm is None:
        raise TabularError(
            f"secret {secret!r} has no observed values in the synthetic data"
        )
    return [float(v) for v in rng.uniform(mm[0], mm[1], size=n)]


def run(
    syn: Dataset, train: Dataset, control: Dataset, cfg: InferenceConfig
) -> InferenceResult:
    """Run the main, naive, and control inference attacks.

    For each target the guess is the secret value of the nearest synthetic
    record on the auxiliary columns. Targets whose true secret is missing
    cannot be scored and are dropped from the outcome vectors (counted in
    the result). The naive attack guesses random values for the same
    training targets.
    """
    common = align(syn, train)
    align(syn, control)
    if cfg.secret not in common:
        raise TabularError(f"secret column {cfg.secret!r} not in schema")
    for name in cfg.aux_cols:
        if name not in common:
            raise TabularError(f"auxiliary column {name!r} not in schema")
    if cfg.n_attacks > min(train.n_rows, control.n_rows):
        raise TabularError(
            f"n_attacks={cfg.n_attacks} exceeds the available targets"
            f" (train {train.n_rows}, control {control.n_rows})"
        )
    rng = np.random.default_rng(cfg.seed)
    ranges = build_ranges(list(cfg.aux_cols), syn, train, control)
    if syn.kind(cfg.secret) is ColumnKind.CONTINUOUS:
        secret_ranges = build_ranges([cfg.secret], syn, train, control)
        secret_range = secret_ranges.span(cfg.secret)
    else:
        secret_range = 0.0

    idx_train = rng.choice(train.n_rows, size=cfg.n_attacks, replace=False)
    idx_control = rng.choice(control.n_rows, size=cfg.n_attacks, replace=False)
    targets_train = train.select_rows(idx_train)
    targets_control = control.select_rows(idx_control)

    o_main, guesses, unscored_main = _attack_outcomes(
        targets_train, syn, cfg, ranges, secret_range
    )
    o_control, _, unscored_control = _attack_outcomes(
        targets_control, syn, cfg, ranges, secret_range
    )

    kind = syn.kind(cfg.secret)
    naive_values = _naive_guesses(syn, cfg.secret, cfg.n_attacks, rng)
    o_naive = []
    for i in range(targets_train.n_rows):
        truth = targets_train.value(i, cfg.secret)
        if truth is None:
            continue
        o_naive.append(
            guess_correct(
                truth, naive_values[i], kind, cfg.tolerance, secret_range
            )
        )

    return InferenceResult(
        outcomes_main=o_main,
        outcomes_naive=np.array(o_naive, dtype=bool),
        outcomes_control=o_control,
        guesses=guesses,
        n_unscored_main=unscored_main,
        n_unscored_control=unscored_control,
    )
