"""Singling-out attack: generate predicates from the synthetic data that are
likely to isolate exactly one record, then count how often they do so in the
training and control data.

The main and control evaluations share the identical guess list; the naive
baseline evaluates fully random predicates that skip the selection step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .predicates import (
    Predicate,
    evaluate,
    multivariate_predicate,
    random_predicate,
    univariate_predicates,
)
from .tabular import Dataset, TabularError, align

logger = logging.getLogger(__name__)


class SinglingOutMode(str, Enum):
    UNIVARIATE = "univariate"
    MULTIVARIATE = "multivariate"


@dataclass(frozen=True)
class SinglingOutConfig:
    n_attacks: int
    mode: SinglingOutMode = SinglingOutMode.MULTIVARIATE
    n_attrs: int = 3  # multivariate only
    seed: int = 0
    max_generation_factor: int = 50  # cap = factor * n_attacks candidates

    def __post_init__(self):
        if self.n_attacks < 1:
            raise ValueError("n_attacks must be >= 1")
        if self.max_generation_factor < 1:
            raise ValueError("max_generation_factor must be >= 1")


@dataclass
class SinglingOutResult:
    outcomes_main: np.ndarray
    outcomes_naive: np.ndarray
    outcomes_control: np.ndarray
    m_train: int
    m_naive: int
    m_control: int
    predicates: list[Predicate]
    exhausted: bool = False  # generation could not reach n_attacks guesses

    @property
    def n_guesses(self) -> int:
        return len(self.predicates)


def generate_guesses(
    syn: Dataset, cfg: SinglingOutConfig, rng: np.random.Generator
) -> tuple[list[Predicate], bool]:
    """Build the singling-out guesses from the synthetic dataset.

    Univariate mode pools the unique-value predicates of every attribute and
    picks `n_attacks` of them at random. Multivariate mode repeatedly draws a
    random synthetic record and `n_attrs` random attributes, keeps the
    resulting predicate only if it matches exactly one synthetic row, and
    stops after `n_attacks` keeps or `max_generation_factor * n_attacks`
    candidates.

    Returns the guesses plus a flag set when generation was exhausted before
    reaching `n_attacks`.
    """
    if syn.n_rows == 0:
        raise TabularError("synthetic dataset is empty")
    if cfg.mode is SinglingOutMode.UNIVARIATE:
        pool: list[Predicate] = []
        for attr in syn.attribute_names:
            pool.extend(univariate_predicates(syn, attr))
        if len(pool) <= cfg.n_attacks:
            exhausted = len(pool) < cfg.n_attacks
            if exhausted:
                logger.warning(
                    "univariate generation exhausted: %d predicates available,"
                    " %d requested", len(pool), cfg.n_attacks,
                )
            return pool, exhausted
        picked = rng.choice(len(pool), size=cfg.n_attacks, replace=False)
        return [pool[i] for i in picked], False

    if not 1 <= cfg.n_attrs <= syn.n_attributes:
        raise TabularError(
            f"n_attrs must be in [1, {syn.n_attributes}], got {cfg.n_attrs}"
        )
    kept: list[Predicate] = []
    cap = cfg.max_generation_factor * cfg.n_attacks
    candidates = 0
    names = syn.attribute_names
    while len(kept) < cfg.n_attacks and candidates < cap:
        rec = syn.record(int(rng.integers(syn.n_rows)))
        chosen = rng.choice(syn.n_attributes, size=cfg.n_attrs, replace=False)
        pred = multivariate_predicate(syn, [names[i] for i in chosen], rec)
        candidates += 1
        if evaluate(pred, syn) == 1:
            kept.append(pred)
    exhausted = len(kept) < cfg.n_attacks
    if exhausted:
        logger.warning(
            "multivariate generation exhausted: %d guesses after %d"
            " candidates (cap %d)", len(kept), candidates, cap,
        )
    return kept, exhausted


def run(
    syn: Dataset, train: Dataset, control: Dataset, cfg: SinglingOutConfig
) -> SinglingOutResult:
    """Run the main, naive, and control singling-out attacks.

    A guess succeeds when it matches exactly one row of the target dataset.
    Control successes are raw counts here; rescaling for a control set
    smaller than the training set is a separate step (see the stats module).
    """
    align(syn, train)
    align(syn, control)
    rng = np.random.default_rng(cfg.seed)
    guesses, exhausted = generate_guesses(syn, cfg, rng)

    o_main = np.array([evaluate(p, train) == 1 for p in guesses], dtype=bool)
    o_control = np.array(
        [evaluate(p, control) == 1 for p in guesses], dtype=bool
    )

    naive_attrs = (
        cfg.n_attrs if cfg.mode is SinglingOutMode.MULTIVARIATE else 1
    )
    o_naive = np.array(
        [
            evaluate(random_predicate(syn, naive_attrs, rng), train) == 1
            for _ in range(cfg.n_attacks)
        ],
        dtype=bool,
    )
    return SinglingOutResult(
        outcomes_main=o_main,
        outcomes_naive=o_naive,
        outcomes_control=o_control,
        m_train=int(o_main.sum()),
        m_naive=int(o_naive.sum()),
        m_control=int(o_control.sum()),
        predicates=guesses,
        exhausted=exhausted,
    )
