"""Utility score (0-100) of a synthetic dataset against the original:
marginal similarity, pairwise-dependency similarity, and query-count
similarity, averaged.

All three components are computed in canonical (sorted) order so they are
exactly invariant under row permutation of either dataset.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .predicates import evaluate, random_predicate
from .tabular import ColumnKind, Dataset, TabularError, align

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UtilityScore:
    marginal: float
    pairwise: float
    query: float

    @property
    def total(self) -> float:
        return (self.marginal + self.pairwise + self.query) / 3.0


_MISSING_TOKEN = "\x00missing"  # internal bucket label, cannot collide


def _categorical_distribution(
    ds: Dataset, name: str, support: list[str]
) -> np.ndarray:
    codes = ds.codes(name)
    cats = ds.categories(name)
    counts = {c: 0 for c in support}
    observed = ds.category_counts(name)
    for cat, cnt in zip(cats, observed):
        counts[cat] = int(cnt)
    n_missing = int((codes < 0).sum())
    if _MISSING_TOKEN in counts:
        counts[_MISSING_TOKEN] = n_missing
    total = sum(counts.values())
    return np.array([counts[c] for c in support], dtype=np.float64) / total


def _jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence in bits; 0 for equal, 1 for disjoint."""
    m = 0.5 * (p + q)
    def half(a):
        pos = a > 0
        return float(np.sum(a[pos] * np.log2(a[pos] / m[pos])))
    return 0.5 * half(p) + 0.5 * half(q)


def _ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic on raw samples (no binning)."""
    a = np.sort(a)
    b = np.sort(b)
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / len(a)
    cdf_b = np.searchsorted(b, points, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def marginal_score(ori: Dataset, syn: Dataset) -> float:
    """Mean per-column marginal similarity, in [0, 100].

    Categorical columns score 100 * (1 - Jensen-Shannon divergence), with
    missing counted as its own bucket; continuous columns score
    100 * (1 - KS statistic) over the non-missing values.
    """
    cols = align(ori, syn)
    scores = []
    for name in cols:
        if ori.kind(name) is ColumnKind.CATEGORICAL:
            support = sorted(
                set(ori.categories(name)) | set(syn.categories(name))
            )
            if ori.missing_mask(name).any() or syn.missing_mask(name).any():
                support.append(_MISSING_TOKEN)
            if not support:
                continue  # both sides entirely empty of values
            p = _categorical_distribution(ori, name, support)
            q = _categorical_distribution(syn, name, support)
            scores.append(100.0 * (1.0 - _jensen_shannon(p, q)))
        else:
            va, ma = ori.numbers(name)
            vb, mb = syn.numbers(name)
            a, b = va[~ma], vb[~mb]
            if len(a) == 0 and len(b) == 0:
                continue
            if len(a) == 0 or len(b) == 0:
                scores.append(0.0)
                continue
            scores.append(100.0 * (1.0 - _ks_statistic(a, b)))
    if not scores:
        raise TabularError("no columns with values to compare")
    return float(sum(scores) / len(scores))


def _canonical_codes(ds: Dataset, name: str) -> np.ndarray:
    """Category codes renumbered by sorted token order; missing stays -1."""
    cats = ds.categories(name)
    rank = {c: r for r, c in enumerate(sorted(cats))}
    table = np.array([rank[c] for c in cats], dtype=np.int64)
    codes = ds.codes(name)
    out = np.full(codes.shape, -1, dtype=np.int64)
    present = codes >= 0
    if table.size:
        out[present] = table[codes[present]]
    return out


def _pearson_abs(x: np.ndarray, y: np.ndarray) -> float | None:
    """|Pearson correlation| of paired samples, in canonical order."""
    order = np.lexsort((y, x))
    x, y = x[order], y[order]
    xm = x - x.mean()
    ym = y - y.mean()
    vx = float(xm @ xm)
    vy = float(ym @ ym)
    if vx == 0.0 or vy == 0.0:
        return None
    return abs(float(xm @ ym) / math.sqrt(vx * vy))


def _correlation_ratio(codes: np.ndarray, y: np.ndarray) -> float | None:
    """Correlation ratio (eta) between a categorical and a continuous column."""
    order = np.lexsort((y, codes))
    codes, y = codes[order], y[order]
    total_mean = y.mean()
    sst = float(((y - total_mean) ** 2).sum())
    if sst == 0.0:
        return None
    boundaries = np.flatnonzero(np.diff(codes)) + 1
    starts = np.concatenate([[0], boundaries])
    sums = np.add.reduceat(y, starts)
    counts = np.diff(np.concatenate([starts, [len(y)]]))
    ssb = float((counts * (sums / counts - total_mean) ** 2).sum())
    return math.sqrt(min(ssb / sst, 1.0))


def _entropy_bits(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    pos = p > 0
    return -float(np.sum(p[pos] * np.log2(p[pos])))


def _normalized_mutual_information(
    a: np.ndarray, b: np.ndarray
) -> float | None:
    """NMI of two categorical code vectors, normalized by the mean entropy."""
    width = int(b.max()) + 2
    keys = (a + 1) * width + (b + 1)
    _, joint = np.unique(keys, return_counts=True)
    counts_a = np.bincount(a + 1)
    counts_b = np.bincount(b + 1)
    ha = _entropy_bits(counts_a[counts_a > 0])
    hb = _entropy_bits(counts_b[counts_b > 0])
    if ha == 0.0 or hb == 0.0:
        return None
    mi = max(0.0, ha + hb - _entropy_bits(joint))
    return min(mi / ((ha + hb) / 2.0), 1.0)


def _pair_statistic(ds: Dataset, col_a: str, col_b: str) -> float | None:
    """Dependency statistic in [0, 1] for one column pair, or None if
    undefined (constant column or no complete rows)."""
    kind_a, kind_b = ds.kind(col_a), ds.kind(col_b)
    if kind_a is ColumnKind.CONTINUOUS and kind_b is ColumnKind.CONTINUOUS:
        xa, ma = ds.numbers(col_a)
        xb, mb = ds.numbers(col_b)
        keep = ~(ma | mb)
        if keep.sum() < 2:
            return None
        return _pearson_abs(xa[keep], xb[keep])
    if kind_a is ColumnKind.CATEGORICAL and kind_b is ColumnKind.CATEGORICAL:
        a = _canonical_codes(ds, col_a)
        b = _canonical_codes(ds, col_b)
        keep = (a >= 0) & (b >= 0)
        if keep.sum() < 2:
            return None
        return _normalized_mutual_information(a[keep], b[keep])
    if kind_a is ColumnKind.CONTINUOUS:  # normalize to (categorical, continuous)
        col_a, col_b = col_b, col_a
    codes = _canonical_codes(ds, col_a)
    y, my = ds.numbers(col_b)
    keep = (codes >= 0) & ~my
    if keep.sum() < 2:
        return None
    return _correlation_ratio(codes[keep], y[keep])


def pairwise_score(ori: Dataset, syn: Dataset) -> float:
    """Mean per-pair dependency similarity, in [0, 100].

    The statistic per pair is |Pearson correlation| (continuous-continuous),
    the correlation ratio (categorical-continuous), or normalized mutual
    information (categorical-categorical); all lie in [0, 1], and the pair
    scores 100 * (1 - |stat_ori - stat_syn|). Pairs undefined on either side
    (constant columns) are skipped and logged.
    """
    cols = align(ori, syn)
    if len(cols) < 2:
        raise TabularError("pairwise score needs at least 2 shared columns")
    scores = []
    for i, col_a in enumerate(cols):
        for col_b in cols[i + 1:]:
            stat_ori = _pair_statistic(ori, col_a, col_b)
            stat_syn = _pair_statistic(syn, col_a, col_b)
            if stat_ori is None or stat_syn is None:
                logger.info(
                    "pairwise statistic undefined for (%s, %s); pair skipped",
                    col_a, col_b,
                )
                continue
            scores.append(100.0 * (1.0 - abs(stat_ori - stat_syn)))
    if not scores:
        raise TabularError("no column pair has a defined statistic")
    return float(sum(scores) / len(scores))


def query_score(
    ori: Dataset,
    syn: Dataset,
    n_queries: int = 500,
    rng: np.random.Generator | None = None,
) -> float:
    """Similarity of random-query response sizes, in [0, 100].

    Random conjunctive predicates with 1-3 atoms are evaluated on both
    datasets; the score is 100 * max(0, Pearson correlation of the two match
    count vectors). If the counts have zero variance the queries are redrawn
    once; a second failure scores 0 with a warning.
    """
    if n_queries < 2:
        raise TabularError("n_queries must be >= 2")
    align(ori, syn)
    rng = rng if rng is not None else np.random.default_rng(0)
    d = ori.n_attributes
    for attempt in range(2):
        counts_ori = np.empty(n_queries)
        counts_syn = np.empty(n_queries)
        for i in range(n_queries):
            n_atoms = int(rng.integers(1, min(3, d) + 1))
            pred = random_predicate(ori, n_atoms, rng)
            counts_ori[i] = evaluate(pred, ori)
            counts_syn[i] = evaluate(pred, syn)
        if counts_ori.std() > 0.0 and counts_syn.std() > 0.0:
            if np.array_equal(counts_ori, counts_syn):
                return 100.0  # correlation of a vector with itself is 1
            r = float(np.corrcoef(counts_ori, counts_syn)[0, 1])
            return 100.0 * max(0.0, r)
    logger.warning(
        "query counts have zero variance after resampling; query score is 0"
    )
    return 0.0


def utility_score(
    ori: Dataset,
    syn: Dataset,
    n_queries: int = 500,
    rng: np.random.Generator | None = None,
) -> UtilityScore:
    """Combined utility score: mean of marginal, pairwise, and query scores."""
    return UtilityScore(
        marginal=marginal_score(ori, syn),
        pairwise=pairwise_score(ori, syn),
        query=query_score(ori, syn, n_queries=n_queries, rng=rng),
    )
