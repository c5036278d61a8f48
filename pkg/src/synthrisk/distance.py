"""Mixed-type Gower distance and exact brute-force k-nearest-neighbor search.

The per-attribute distance is 0/1 mismatch for categorical attributes and a
range-scaled absolute difference for continuous ones; the record distance is
the mean over the attribute subset, so it always lands in [0, 1]. Missing is
a first-class value: missing equals missing (distance 0), while a one-sided
missing counts as maximally dissimilar (distance 1).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .tabular import ColumnKind, Dataset, Record, TabularError

WORKERS_ENV_VAR = "SYNTHRISK_WORKERS"


def worker_count() -> int:
    """Worker budget for parallel sections, from the environment."""
    raw = os.environ.get(WORKERS_ENV_VAR)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RangeTable:
    """(min, max) per continuous attribute, fixed for one evaluation run.

    Ranges are taken over the union of corpus and query values so that the
    scaled difference of any compared pair is at most 1. An attribute with
    max == min contributes 0 whenever both values are present.
    """

    ranges: Mapping[str, tuple[float, float]]

    def span(self, name: str) -> float:
        lo, hi = self.ranges[name]
        return hi - lo

    def __contains__(self, name: str) -> bool:
        return name in self.ranges


def build_ranges(cols: Sequence[str], *datasets: Dataset) -> RangeTable:
    """Range table for the continuous attributes of `cols` over all datasets."""
    ranges: dict[str, tuple[float, float]] = {}
    for name in cols:
        kinds = {ds.kind(name) for ds in datasets}
        if len(kinds) > 1:
            raise TabularError(f"attribute {name!r} has mixed kinds")
        if kinds.pop() is not ColumnKind.CONTINUOUS:
            continue
        lo, hi = np.inf, -np.inf
        for ds in datasets:
            mm = ds.nonmissing_minmax(name)
            if mm is not None:
                lo, hi = min(lo, mm[0]), max(hi, mm[1])
        if lo <= hi:
            ranges[name] = (lo, hi)
        else:  # all values missing everywhere
            ranges[name] = (0.0, 0.0)
    return RangeTable(ranges)


@dataclass(frozen=True)
class NeighborSet:
    """The k nearest corpus rows for one query, nearest first.

    Distances are non-decreasing; ties are broken by lower corpus index.
    """

    indices: np.ndarray
    distances: np.ndarray


def gower_distance(
    a: Record, b: Record, cols: Sequence[str], ranges: RangeTable
) -> float:
    """Gower distance between two records over an attribute subset.

    Per attribute: categorical contributes 0 if the tokens are equal or both
    values are missing, else 1; continuous contributes |a-b| / (max-min)
    clipped to [0, 1], with a one-sided missing counting 1 and both missing 0.
    The result is the mean over `cols`.

    Raises:
        TabularError: unknown attribute or mismatched kinds.
    """
    if not cols:
        raise TabularError("attribute subset is empty")
    total = 0.0
    for name in cols:
        ka, kb = a.kind(name), b.kind(name)
        if ka is not kb:
            raise TabularError(f"attribute {name!r} has mismatched kinds")
        va, vb = a.value(name), b.value(name)
        if va is None and vb is None:
            continue  # contributes 0
        if va is None or vb is None:
            total += 1.0
            continue
        if ka is ColumnKind.CATEGORICAL:
            total += 0.0 if va == vb else 1.0
        else:
            span = ranges.span(name)
            if span > 0.0:
                total += min(abs(va - vb) / span, 1.0)
    return total / len(cols)


class _ColumnPair:
    """Query/corpus arrays for one attribute, recoded into a shared space."""

    __slots__ = ("kind", "q_codes", "c_codes", "q_values", "q_missing",
                 "c_values", "c_missing", "span")

    def __init__(self, name: str, queries: Dataset, corpus: Dataset,
                 ranges: RangeTable):
        self.kind = corpus.kind(name)
        if self.kind is ColumnKind.CATEGORICAL:
            q_cats, c_cats = queries.categories(name), corpus.categories(name)
            index = {c: i for i, c in enumerate(c_cats)}
            for cat in q_cats:
                if cat not in index:
                    index[cat] = len(index)
            self.c_codes = corpus.codes(name)
            table = np.array([index[c] for c in q_cats], dtype=np.int64)
            raw = queries.codes(name)
            q = np.full(raw.shape, -1, dtype=np.int64)
            present = raw >= 0
            if table.size:
                q[present] = table[raw[present]]
            self.q_codes = q
        else:
            self.q_values, self.q_missing = queries.numbers(name)
            self.c_values, self.c_missing = corpus.numbers(name)
            self.span = ranges.span(name)

    def accumulate(self, out: np.ndarray, rows: slice) -> None:
        """Add this attribute's distances for a block of queries to `out`."""
        if self.kind is ColumnKind.CATEGORICAL:
            out += self.q_codes[rows, None] != self.c_codes[None, :]
            return
        qv = self.q_values[rows, None]
        qm = self.q_missing[rows, None]
        cm = self.c_missing[None, :]
        if self.span > 0.0:
            d = np.abs(qv - self.c_values[None, :])
            d /= self.span
            np.clip(d, 0.0, 1.0, out=d)
        else:
            d = np.zeros((qv.shape[0], self.c_values.shape[0]))
        # one-sided missing -> 1, both missing -> 0
        d[qm & ~cm] = 1.0
        d[~qm & cm] = 1.0
        d[qm & cm] = 0.0
        out += d


def knn(
    queries: Dataset,
    corpus: Dataset,
    cols: Sequence[str],
    k: int,
    ranges: RangeTable | None = None,
    workers: int | None = None,
) -> list[NeighborSet]:
    """Exact k nearest corpus rows for every query row, by Gower distance.

    Ties are broken by lower corpus index, so the result is deterministic and
    independent of the worker count. If `ranges` is not given it is computed
    over the union of corpus and query values.

    Raises:
        TabularError: empty attribute subset, empty corpus, or k < 1.
    """
    if not cols:
        raise TabularError("attribute subset is empty")
    if k < 1:
        raise TabularError("k must be >= 1")
    if corpus.n_rows == 0:
        raise TabularError("corpus is empty")
    if ranges is None:
        ranges = build_ranges(cols, corpus, queries)
    pairs = [_ColumnPair(name, queries, corpus, ranges) for name in cols]
    n_q, n_c = queries.n_rows, corpus.n_rows
    k_eff = min(k, n_c)
    workers = workers or worker_count()

    out_idx = np.empty((n_q, k_eff), dtype=np.intp)
    out_dist = np.empty((n_q, k_eff), dtype=np.float64)

    def run_block(start: int, stop: int) -> None:
        rows = slice(start, stop)
        dmat = np.zeros((stop - start, n_c))
        for pair in pairs:
            pair.accumulate(dmat, rows)
        dmat /= len(cols)
        # stable argsort keeps the lowest corpus index first among ties
        order = np.argsort(dmat, axis=1, kind="stable")[:, :k_eff]
        out_idx[rows] = order
        out_dist[rows] = np.take_along_axis(dmat, order, axis=1)

    block = max(64, -(-n_q // max(1, 2 * workers)))
    blocks = [(s, min(s + block, n_q)) for s in range(0, n_q, block)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda se: run_block(*se), blocks))
    else:
        for s, e in blocks:
            run_block(s, e)

    return [NeighborSet(out_idx[i], out_dist[i]) for i in range(n_q)]
