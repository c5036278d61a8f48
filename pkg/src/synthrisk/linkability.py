"""Linkability attack: use the synthetic data to decide whether two disjoint
attribute fragments belong to the same individual.

For each target, the k nearest synthetic records are found separately on the
two attribute sets; the link is established when the neighbor sets share at
least one synthetic record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import build_ranges, knn
from .tabular import Dataset, TabularError, align


@dataclass(frozen=True)
class LinkabilityConfig:
    aux_split: tuple[tuple[str, ...], tuple[str, ...]]
    n_attacks: int
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        cols_a, cols_b = self.aux_split
        if not cols_a or not cols_b:
            raise ValueError("both auxiliary column sets must be non-empty")
        if set(cols_a) & set(cols_b):
            raise ValueError("auxiliary column sets must be disjoint")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n_attacks < 1:
            raise ValueError("n_attacks must be >= 1")


@dataclass
class LinkabilityResult:
    outcomes_main: np.ndarray
    outcomes_naive: np.ndarray
    outcomes_control: np.ndarray


def _link_outcomes(
    targets: Dataset,
    syn: Dataset,
    cfg: LinkabilityConfig,
    ranges,
) -> np.ndarray:
    cols_a, cols_b = cfg.aux_split
    la = knn(targets, syn, cols_a, cfg.k, ranges=ranges)
    lb = knn(targets, syn, cols_b, cfg.k, ranges=ranges)
    out = np.zeros(targets.n_rows, dtype=bool)
    for i in range(targets.n_rows):
        out[i] = bool(set(la[i].indices.tolist())
                      & set(lb[i].indices.tolist()))
    return out


def run(
    syn: Dataset, train: Dataset, control: Dataset, cfg: LinkabilityConfig
) -> LinkabilityResult:
    """Run the main, naive, and control linkability attacks.

    Targets are sampled without replacement from the training set (main) and
    the control set (control); both use the identical linking procedure. The
    naive baseline draws, for each target, k distinct synthetic indices per
    side uniformly at random and checks the same intersection rule.
    """
    align(syn, train)
    align(syn, control)
    cols_a, cols_b = cfg.aux_split
    for name in (*cols_a, *cols_b):
        if name not in syn.attribute_names:
            raise TabularError(f"auxiliary column {name!r} not in schema")
    if cfg.k > syn.n_rows:
        raise TabularError(
            f"k={cfg.k} exceeds the synthetic dataset size {syn.n_rows}"
        )
    if cfg.n_attacks > min(train.n_rows, control.n_rows):
        raise TabularError(
            f"n_attacks={cfg.n_attacks} exceeds the available targets"
            f" (train {train.n_rows}, control {control.n_rows})"
        )
    rng = np.random.default_rng(cfg.seed)
    cols = list(cols_a) + list(cols_b)
    ranges = build_ranges(cols, syn, train, control)

    idx_train = rng.choice(train.n_rows, size=cfg.n_attacks, replace=False)
    idx_control = rng.choice(control.n_rows, size=cfg.n_attacks, replace=False)

    o_main = _link_outcomes(train.select_rows(idx_train), syn, cfg, ranges)
    o_control = _link_outcomes(
        control.select_rows(idx_control), syn, cfg, ranges
    )

    o_naive = np.zeros(cfg.n_attacks, dtype=bool)
    for i in range(cfg.n_attacks):
        side_a = rng.choice(syn.n_rows, size=cfg.k, replace=False)
        side_b = rng.choice(syn.n_rows, size=cfg.k, replace=False)
        o_naive[i] = bool(set(side_a.tolist()) & set(side_b.tolist()))

    return LinkabilityResult(
        outcomes_main=o_main,
        outcomes_naive=o_naive,
        outcomes_control=o_control,
    )
