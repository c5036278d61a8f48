"""Conjunctive predicates over dataset rows, and the guess generators.

A predicate is an AND of per-attribute atoms. Comparisons against a missing
stored value are false (SQL-like); only `is_missing` matches missing. Three
generators are provided: univariate predicates targeting unique attribute
values, multivariate predicates anchored on a synthetic record, and fully
random predicates used as the uninformed baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .tabular import ColumnKind, Dataset, Record, TabularError, Value


class AtomOp(str, Enum):
    EQ = "=="
    NEQ = "!="
    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="
    IS_MISSING = "is missing"


_CATEGORICAL_OPS = {AtomOp.EQ, AtomOp.NEQ, AtomOp.IS_MISSING}


@dataclass(frozen=True)
class Atom:
    """One condition on one attribute; `value` is unused for is_missing."""

    attr: str
    op: AtomOp
    value: Value = None

    def to_text(self) -> str:
        if self.op is AtomOp.IS_MISSING:
            return f"{self.attr} is missing"
        if isinstance(self.value, str):
            return f"{self.attr} {self.op.value} '{self.value}'"
        return f"{self.attr} {self.op.value} {self.value!r}"


@dataclass(frozen=True)
class Predicate:
    """Non-empty conjunction of atoms."""

    atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("predicate needs at least one atom")

    def to_text(self) -> str:
        return " & ".join(a.to_text() for a in self.atoms)

    def __str__(self) -> str:
        return self.to_text()


def _atom_mask(atom: Atom, ds: Dataset) -> np.ndarray:
    kind = ds.kind(atom.attr)
    if atom.op is AtomOp.IS_MISSING:
        return ds.missing_mask(atom.attr)
    if kind is ColumnKind.CATEGORICAL:
        if atom.op not in _CATEGORICAL_OPS:
            raise TabularError(
                f"operator {atom.op.value!r} not valid for categorical"
                f" attribute {atom.attr!r}"
            )
        if not isinstance(atom.value, str):
            raise TabularError(
                f"categorical atom on {atom.attr!r} needs a string value"
            )
        codes = ds.codes(atom.attr)
        cats = ds.categories(atom.attr)
        try:
            code = cats.index(atom.value)
        except ValueError:
            code = -2  # value unseen in this dataset: matches nothing
        if atom.op is AtomOp.EQ:
            return codes == code
        return (codes != code) & (codes >= 0)
    if isinstance(atom.value, str) or atom.value is None:
        raise TabularError(
            f"continuous atom on {atom.attr!r} needs a numeric value"
        )
    values, missing = ds.numbers(atom.attr)
    v = float(atom.value)
    if atom.op is AtomOp.EQ:
        mask = values == v
    elif atom.op is AtomOp.NEQ:
        mask = values != v
    elif atom.op is AtomOp.LT:
        mask = values < v
    elif atom.op is AtomOp.GT:
        mask = values > v
    elif atom.op is AtomOp.LE:
        mask = values <= v
    elif atom.op is AtomOp.GE:
        mask = values >= v
    else:  # pragma: no cover
        raise TabularError(f"unsupported operator {atom.op}")
    return mask & ~missing


def matches(p: Predicate, ds: Dataset) -> np.ndarray:
    """Boolean row mask of the records satisfying every atom."""
    out = _atom_mask(p.atoms[0], ds)
    for atom in p.atoms[1:]:
        out = out & _atom_mask(atom, ds)
    return out


def evaluate(p: Predicate, ds: Dataset) -> int:
    """Number of rows satisfying the predicate."""
    return int(matches(p, ds).sum())


def univariate_predicates(syn: Dataset, attr: str) -> list[Predicate]:
    """Single-attribute predicates targeting unique values of `attr`.

    Emits "attr is missing" when exactly one value is missing; for a
    continuous attribute, "attr <= min" and "attr >= max" over the
    non-missing values; for a categorical attribute, "attr == v" for every
    token occurring exactly once. May return an empty list.
    """
    preds: list[Predicate] = []
    n_missing = int(syn.missing_mask(attr).sum())
    if n_missing == 1:
        preds.append(Predicate((Atom(attr, AtomOp.IS_MISSING),)))
    if syn.kind(attr) is ColumnKind.CONTINUOUS:
        mm = syn.nonmissing_minmax(attr)
        if mm is not None:
            preds.append(Predicate((Atom(attr, AtomOp.LE, mm[0]),)))
            preds.append(Predicate((Atom(attr, AtomOp.GE, mm[1]),)))
    else:
        counts = syn.category_counts(attr)
        cats = syn.categories(attr)
        for code in np.flatnonzero(counts == 1):
            preds.append(Predicate((Atom(attr, AtomOp.EQ, cats[code]),)))
    return preds


def multivariate_predicate(
    syn: Dataset, attrs: Sequence[str], rec: Record
) -> Predicate:
    """Conjunction anchored on `rec`, one atom per attribute in `attrs`.

    A missing value yields "attr is missing". A continuous value v yields
    "attr >= v" when v is at or above the column's lower median, else
    "attr <= v", which biases the atom toward the sparse tail. A categorical
    value yields equality. The result always matches `rec` itself.
    """
    if not attrs:
        raise TabularError("attrs must be non-empty")
    atoms = []
    for attr in attrs:
        v = rec.value(attr)
        if v is None:
            atoms.append(Atom(attr, AtomOp.IS_MISSING))
        elif syn.kind(attr) is ColumnKind.CONTINUOUS:
            med = syn.lower_median(attr)
            op = AtomOp.GE if med is None or v >= med else AtomOp.LE
            atoms.append(Atom(attr, op, v))
        else:
            atoms.append(Atom(attr, AtomOp.EQ, v))
    return Predicate(tuple(atoms))


def random_predicate(
    syn: Dataset, n_attrs: int, rng: np.random.Generator
) -> Predicate:
    """Uninformed baseline predicate over `n_attrs` random attributes.

    Each atom draws a random operator and a value sampled uniformly from the
    attribute's support in `syn`: a categorical atom uses == or != with an
    observed token, a continuous atom uses one of <, >, <=, >= with a value
    uniform on [min, max]. These predicates skip any selection step.
    """
    d = syn.n_attributes
    if not 1 <= n_attrs <= d:
        raise TabularError(f"n_attrs must be in [1, {d}], got {n_attrs}")
    names = syn.attribute_names
    chosen = rng.choice(d, size=n_attrs, replace=False)
    atoms = []
    for i in chosen:
        attr = names[i]
        if syn.kind(attr) is ColumnKind.CATEGORICAL:
            cats = syn.categories(attr)
            # sorted so the draw does not depend on row order
            present = sorted(
                c for c, n in zip(cats, syn.category_counts(attr)) if n
            )
            if not present:
                atoms.append(Atom(attr, AtomOp.IS_MISSING))
                continue
            op = AtomOp.EQ if rng.integers(2) == 0 else AtomOp.NEQ
            atoms.append(Atom(attr, op, present[rng.integers(len(present))]))
        else:
            mm = syn.nonmissing_minmax(attr)
            if mm is None:
                atoms.append(Atom(attr, AtomOp.IS_MISSING))
                continue
            op = (AtomOp.LT, AtomOp.GT, AtomOp.LE, AtomOp.GE)[rng.integers(4)]
            atoms.append(Atom(attr, op, float(rng.uniform(mm[0], mm[1]))))
    return Predicate(tuple(atoms))
