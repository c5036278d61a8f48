"""Typed in-memory tabular data: CSV ingestion, schema inference, splitting.

Columns are either categorical (string tokens, compared byte-exactly) or
continuous (finite floats). Missingness is explicit: an empty CSV field loads
as missing, and stored numbers are never NaN/Inf. Datasets are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

Value = str | float | None  # None means missing


class ColumnKind(str, Enum):
    CATEGORICAL = "categorical"
    CONTINUOUS = "continuous"


class DatasetRole(str, Enum):
    TRAIN = "train"
    CONTROL = "control"
    SYNTHETIC = "synthetic"
    RELEASE = "release"


class TabularError(ValueError):
    """Raised for malformed input data or schema violations."""


@dataclass(frozen=True)
class SplitSpec:
    """Parameters for a disjoint two-way row split."""

    control_fraction: float
    seed: int


class _CategoricalData:
    __slots__ = ("categories", "codes")

    def __init__(self, categories: tuple[str, ...], codes: np.ndarray):
        self.categories = categories
        self.codes = codes  # int32, -1 encodes missing
        codes.setflags(write=False)


class _ContinuousData:
    __slots__ = ("values", "missing")

    def __init__(self, values: np.ndarray, missing: np.ndarray):
        self.values = values  # float64, finite; 0.0 placeholder where missing
        self.missing = missing  # bool mask
        values.setflags(write=False)
        missing.setflags(write=False)


class Record:
    """Read-only view of one dataset row."""

    __slots__ = ("_ds", "_i")

    def __init__(self, dataset: "Dataset", index: int):
        self._ds = dataset
        self._i = index

    @property
    def index(self) -> int:
        return self._i

    def kind(self, name: str) -> ColumnKind:
        return self._ds.kind(name)

    def value(self, name: str) -> Value:
        return self._ds.value(self._i, name)


class Dataset:
    """Immutable table of typed columns.

    Construct via :func:`load_csv`, :meth:`from_rows`, or the column-oriented
    constructor. All mutating access is blocked by storing columns in
    read-only numpy arrays; helper methods return new datasets.
    """

    def __init__(
        self,
        names: Sequence[str],
        kinds: Sequence[ColumnKind],
        data: Sequence[_CategoricalData | _ContinuousData],
        n_rows: int,
        role: DatasetRole | None = None,
    ):
        if len(set(names)) != len(names):
            raise TabularError("duplicate attribute names")
        self._names = tuple(names)
        self._kinds = tuple(kinds)
        self._data = tuple(data)
        self._n_rows = n_rows
        self.role = role
        self._index = {n: i for i, n in enumerate(self._names)}
        self._stats: dict[tuple[str, str], object] = {}

    # -- construction ------------------------------------------------------

    @classmethod
    def from_rows(
        cls,
        schema: Sequence[tuple[str, ColumnKind]],
        rows: Iterable[Sequence[Value]],
        role: DatasetRole | None = None,
    ) -> "Dataset":
        """Build a dataset from row tuples of cell values (None = missing)."""
        names = [n for n, _ in schema]
        kinds = [k for _, k in schema]
        columns: list[list[Value]] = [[] for _ in names]
        for row in rows:
            if len(row) != len(names):
                raise TabularError(
                    f"row has {len(row)} fields, expected {len(names)}"
                )
            for j, v in enumerate(row):
                columns[j].append(v)
        return cls.from_columns(schema, dict(zip(names, columns)), role=role)

    @classmethod
    def from_columns(
        cls,
        schema: Sequence[tuple[str, ColumnKind]],
        columns: Mapping[str, Sequence[Value]],
        role: DatasetRole | None = None,
    ) -> "Dataset":
        """Build a dataset from per-attribute value sequences."""
        names = [n for n, _ in schema]
        kinds = [k for _, k in schema]
        lengths = {len(columns[n]) for n in names}
        if len(lengths) > 1:
            raise TabularError("columns differ in length")
        n_rows = lengths.pop() if lengths else 0
        data = [
            _pack_column(columns[n], k, n) for n, k in zip(names, kinds)
        ]
        return cls(names, kinds, data, n_rows, role=role)

    # -- basic properties ----------------------------------------------------

    @property
    def n_rows(self) -> int:
        return self._n_rows

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def schema(self) -> tuple[tuple[str, ColumnKind], ...]:
        return tuple(zip(self._names, self._kinds))

    @property
    def n_attributes(self) -> int:
        return len(self._names)

    def kind(self, name: str) -> ColumnKind:
        return self._kinds[self._col(name)]

    def _col(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise TabularError(f"unknown attribute {name!r}") from None

    def _column_data(self, name: str) -> _CategoricalData | _ContinuousData:
        return self._data[self._col(name)]

    # -- cell access ---------------------------------------------------------

    def value(self, row: int, name: str) -> Value:
        d = self._column_data(name)
        if isinstance(d, _CategoricalData):
            code = int(d.codes[row])
            return None if code < 0 else d.categories[code]
        if d.missing[row]:
            return None
        return float(d.values[row])

    def record(self, index: int) -> Record:
        if not 0 <= index < self._n_rows:
            raise IndexError(f"row index {index} out of range")
        return Record(self, index)

    def column_values(self, name: str) -> list[Value]:
        return [self.value(i, name) for i in range(self._n_rows)]

    # -- columnar access for vectorized code ---------------------------------

    def categories(self, name: str) -> tuple[str, ...]:
        d = self._column_data(name)
        if not isinstance(d, _CategoricalData):
            raise TabularError(f"attribute {name!r} is not categorical")
        return d.categories

    def codes(self, name: str) -> np.ndarray:
        d = self._column_data(name)
        if not isinstance(d, _CategoricalData):
            raise TabularError(f"attribute {name!r} is not categorical")
        return d.codes

    def numbers(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Return (values, missing-mask) for a continuous attribute."""
        d = self._column_data(name)
        if not isinstance(d, _ContinuousData):
            raise TabularError(f"attribute {name!r} is not continuous")
        return d.values, d.missing

    def missing_mask(self, name: str) -> np.ndarray:
        d = self._column_data(name)
        if isinstance(d, _CategoricalData):
            return d.codes < 0
        return d.missing

    # -- cached per-column statistics -----------------------------------------

    def nonmissing_minmax(self, name: str) -> tuple[float, float] | None:
        """(min, max) over non-missing values, or None if all missing."""
        key = ("minmax", name)
        if key not in self._stats:
            values, missing = self.numbers(name)
            present = values[~missing]
            self._stats[key] = (
                (float(present.min()), float(present.max()))
                if present.size
                else None
            )
        return self._stats[key]  # type: ignore[return-value]

    def lower_median(self, name: str) -> float | None:
        """Lower median of non-missing values, or None if all missing."""
        key = ("median", name)
        if key not in self._stats:
            values, missing = self.numbers(name)
            present = values[~missing]
            if present.size == 0:
                self._stats[key] = None
            else:
                mid = (present.size - 1) // 2
                self._stats[key] = float(np.partition(present, mid)[mid])
        return self._stats[key]  # type: ignore[return-value]

    def category_counts(self, name: str) -> np.ndarray:
        """Occurrence count per category code (missing not counted)."""
        key = ("counts", name)
        if key not in self._stats:
            d = self._column_data(name)
            assert isinstance(d, _CategoricalData)
            counts = np.bincount(
                d.codes[d.codes >= 0], minlength=len(d.categories)
            )
            self._stats[key] = counts
        return self._stats[key]  # type: ignore[return-value]

    # -- derived datasets -----------------------------------------------------

    def select_rows(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        """New dataset holding the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        data: list[_CategoricalData | _ContinuousData] = []
        for d in self._data:
            if isinstance(d, _CategoricalData):
                data.append(_CategoricalData(d.categories, d.codes[idx]))
            else:
                data.append(_ContinuousData(d.values[idx], d.missing[idx]))
        return Dataset(self._names, self._kinds, data, len(idx), role=self.role)

    def select_columns(self, names: Sequence[str]) -> "Dataset":
        """New dataset restricted to the given attributes, in the given order."""
        cols = [self._col(n) for n in names]
        return Dataset(
            [self._names[c] for c in cols],
            [self._kinds[c] for c in cols],
            [self._data[c] for c in cols],
            self._n_rows,
            role=self.role,
        )

    def concat(self, other: "Dataset") -> "Dataset":
        """Stack rows of two datasets with identical schemas."""
        if self.schema != other.schema:
            raise TabularError("cannot concatenate datasets with different schemas")
        data: list[_CategoricalData | _ContinuousData] = []
        for name in self._names:
            a, b = self._column_data(name), other._column_data(name)
            if isinstance(a, _CategoricalData):
                assert isinstance(b, _CategoricalData)
                cats, a_codes = a.categories, a.codes
                remap = _remap_codes(cats, b.categories)
                merged_cats = remap.categories
                b_codes = remap.apply(b.codes)
                data.append(
                    _CategoricalData(
                        merged_cats, np.concatenate([a_codes, b_codes])
                    )
                )
            else:
                assert isinstance(b, _ContinuousData)
                data.append(
                    _ContinuousData(
                        np.concatenate([a.values, b.values]),
                        np.concatenate([a.missing, b.missing]),
                    )
                )
        return Dataset(
            self._names, self._kinds, data, self._n_rows + other._n_rows
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema or self._n_rows != other._n_rows:
            return False
        for name in self._names:
            if self.column_values(name) != other.column_values(name):
                return False
        return True

    def __hash__(self):  # pragma: no cover - identity hashing only
        return id(self)

    def __repr__(self) -> str:
        return (
            f"Dataset(n_rows={self._n_rows}, n_attributes={len(self._names)},"
            f" role={self.role.value if self.role else None})"
        )


@dataclass(frozen=True)
class _CodeRemap:
    categories: tuple[str, ...]
    table: np.ndarray

    def apply(self, codes: np.ndarray) -> np.ndarray:
        out = np.full(codes.shape, -1, dtype=np.int32)
        present = codes >= 0
        out[present] = self.table[codes[present]]
        return out


def _remap_codes(
    base: tuple[str, ...], other: tuple[str, ...]
) -> _CodeRemap:
    """Mapping that recodes `other`'s codes into `base` extended as needed."""
    merged = list(base)
    index = {c: i for i, c in enumerate(base)}
    table = np.empty(len(other), dtype=np.int32)
    for i, cat in enumerate(other):
        if cat not in index:
            index[cat] = len(merged)
            merged.append(cat)
        table[i] = index[cat]
    return _CodeRemap(tuple(merged), table)


def _pack_column(
    values: Sequence[Value], kind: ColumnKind, name: str
) -> _CategoricalData | _ContinuousData:
    n = len(values)
    if kind is ColumnKind.CONTINUOUS:
        out = np.zeros(n, dtype=np.float64)
        missing = np.zeros(n, dtype=bool)
        for i, v in enumerate(values):
            if v is None:
                missing[i] = True
            else:
                x = float(v)
                if not math.isfinite(x):
                    raise TabularError(
                        f"non-finite number in continuous column {name!r};"
                        " use missing instead"
                    )
                out[i] = x
        return _ContinuousData(out, missing)
    categories: list[str] = []
    index: dict[str, int] = {}
    codes = np.empty(n, dtype=np.int32)
    for i, v in enumerate(values):
        if v is None:
            codes[i] = -1
            continue
        token = v if isinstance(v, str) else repr(v)
        if token not in index:
            index[token] = len(categories)
            categories.append(token)
        codes[i] = index[token]
    return _CategoricalData(tuple(categories), codes)


def _parse_number(token: str) -> float | None:
    try:
        x = float(token)
    except ValueError:
        return None
    return x if math.isfinite(x) else None


def load_csv(
    path: str | Path,
    schema_override: Mapping[str, ColumnKind] | None = None,
    role: DatasetRole | None = None,
) -> Dataset:
    """Load an RFC-4180 style CSV file with a header row.

    An empty field is missing. Column kinds come from `schema_override` where
    given; otherwise a column whose non-missing fields all parse as finite
    numbers is continuous, and categorical if not (an all-missing column
    defaults to categorical).

    Raises:
        TabularError: ragged rows, duplicate header names, zero data rows, or
            a value that cannot be parsed under a continuous override.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TabularError(f"{path}: empty file, header required") from None
        if len(set(header)) != len(header):
            raise TabularError(f"{path}: duplicate header names")
        raw_columns: list[list[str]] = [[] for _ in header]
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise TabularError(
                    f"{path}:{lineno}: row has {len(row)} fields,"
                    f" expected {len(header)}"
                )
            for j, field in enumerate(row):
                raw_columns[j].append(field)
    n_rows = len(raw_columns[0]) if raw_columns else 0
    if n_rows == 0:
        raise TabularError(f"{path}: empty dataset (no data rows)")

    override = dict(schema_override or {})
    for name in override:
        if name not in header:
            raise TabularError(f"schema override names unknown column {name!r}")

    schema: list[tuple[str, ColumnKind]] = []
    columns: dict[str, list[Value]] = {}
    for name, raw in zip(header, raw_columns):
        parsed: list[float | None] = []
        numeric = True
        for token in raw:
            if token == "":
                parsed.append(None)
                continue
            x = _parse_number(token)
            if x is None:
                numeric = False
                break
            parsed.append(x)
        kind = override.get(name)
        if kind is None:
            has_values = any(t != "" for t in raw)
            kind = (
                ColumnKind.CONTINUOUS
                if numeric and has_values
                else ColumnKind.CATEGORICAL
            )
        if kind is ColumnKind.CONTINUOUS:
            if not numeric:
                bad = next(
                    t for t in raw if t != "" and _parse_number(t) is None
                )
                raise TabularError(
                    f"{path}: column {name!r} declared continuous but value"
                    f" {bad!r} is not a finite number"
                )
            columns[name] = parsed
        else:
            columns[name] = [None if t == "" else t for t in raw]
        schema.append((name, kind))
    return Dataset.from_columns(schema, columns, role=role)


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write a dataset as CSV (header row, missing as empty field).

    Continuous values use shortest round-trip float formatting, so
    `load_csv(write_csv(ds))` with the same schema reproduces `ds` exactly.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.attribute_names)
        for i in range(ds.n_rows):
            row = []
            for name in ds.attribute_names:
                v = ds.value(i, name)
                if v is None:
                    row.append("")
                elif isinstance(v, float):
                    row.append(repr(v))
                else:
                    row.append(v)
            writer.writerow(row)


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split rows into disjoint (train, control) parts.

    |control| = round(N * control_fraction). Both parts keep the original row
    order, and the partition is deterministic for a fixed seed.
    """
    if not 0.0 < spec.control_fraction < 1.0:
        raise TabularError(
            f"control_fraction must be in (0, 1), got {spec.control_fraction}"
        )
    if ds.n_rows < 2:
        raise TabularError("need at least 2 rows to split")
    n_control = round(ds.n_rows * spec.control_fraction)
    if n_control == 0 or n_control == ds.n_rows:
        raise TabularError(
            f"control_fraction {spec.control_fraction} leaves an empty part"
            f" for {ds.n_rows} rows"
        )
    rng = np.random.default_rng(spec.seed)
    control_idx = np.sort(
        rng.choice(ds.n_rows, size=n_control, replace=False)
    )
    mask = np.zeros(ds.n_rows, dtype=bool)
    mask[control_idx] = True
    train_idx = np.flatnonzero(~mask)
    train = ds.select_rows(train_idx)
    train.role = DatasetRole.TRAIN
    control = ds.select_rows(control_idx)
    control.role = DatasetRole.CONTROL
    return train, control


def align(a: Dataset, b: Dataset) -> list[str]:
    """Common attributes of two datasets, in `a`'s column order.

    Raises:
        TabularError: if an attribute is present in both with different kinds,
            or the intersection is empty.
    """
    common = []
    for name, kind in a.schema:
        if name in b.attribute_names:
            other = b.kind(name)
            if other is not kind:
                raise TabularError(
                    f"attribute {name!r} is {kind.value} in one dataset"
                    f" and {other.value} in the other"
                )
            common.append(name)
    if not common:
        raise TabularError("datasets share no attributes")
    return common
