"""Dataset loading, numeric quantization into intervals, splits and folds."""

from __future__ import annotations

import csv
import json
import random
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .core import FeatureSpace, Instance

ALLOWED_INTERVALS = (4, 5, 6)


class IngestError(ValueError):
    """Load or quantization failure, with row/column context in the message."""


@dataclass(frozen=True)
class Dataset:
    """A tabular dataset over categorical features, plus an optional class column.

    A column with domain None holds raw floats and is awaiting quantization;
    everything downstream of `quantize` sees value indices only. The class
    column is kept out of the feature space (rule mining drops it anyway).
    """

    names: tuple[str, ...]
    domains: tuple[Optional[tuple[str, ...]], ...]
    rows: tuple[tuple, ...]
    class_name: Optional[str] = None
    class_domain: Optional[tuple[str, ...]] = None
    class_labels: Optional[tuple[int, ...]] = None
    class_position: Optional[int] = None

    def __post_init__(self):
        if len(self.names) != len(self.domains):
            raise IngestError("column names and domains disagree")
        for r, row in enumerate(self.rows):
            if len(row) != len(self.names):
                raise IngestError("row %d has %d cells, expected %d"
                                  % (r, len(row), len(self.names)))
            for c, (dom, cell) in enumerate(zip(self.domains, row)):
                if dom is not None and not (isinstance(cell, int) and 0 <= cell < len(dom)):
                    raise IngestError("row %d, column %r: bad value index %r"
                                      % (r, self.names[c], cell))
        if self.class_labels is not None:
            if len(self.class_labels) != len(self.rows):
                raise IngestError("class labels do not cover all rows")
            if any(not 0 <= c < len(self.class_domain) for c in self.class_labels):
                raise IngestError("class label index out of range")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def numeric_columns(self) -> tuple[str, ...]:
        return tuple(n for n, d in zip(self.names, self.domains) if d is None)

    @property
    def space(self) -> FeatureSpace:
        if self.numeric_columns:
            raise IngestError("columns %s are numeric; quantize first"
                              % (list(self.numeric_columns),))
        return FeatureSpace.make(zip(self.names, self.domains))

    def instances(self) -> list[Instance]:
        space = self.space  # validates
        return [space.instance(row) for row in self.rows]

    def row_labels(self, r: int) -> dict[str, str]:
        """Feature name -> value label for one row (quantized datasets only)."""
        out = {}
        for name, dom, cell in zip(self.names, self.domains, self.rows[r]):
            if dom is None:
                raise IngestError("column %r is numeric; quantize first" % name)
            out[name] = dom[cell]
        return out

    def take(self, indices: Sequence[int]) -> "Dataset":
        rows = tuple(self.rows[i] for i in indices)
        labels = tuple(self.class_labels[i] for i in indices) \
            if self.class_labels is not None else None
        return replace(self, rows=rows, class_labels=labels)

    def write_csv(self, path) -> None:
        """Write back as CSV with value labels, class column in its original position."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self._header())
            for r in range(self.n_rows):
                writer.writerow(self._render_row(r))

    def _header(self) -> list[str]:
        header = list(self.names)
        if self.class_name is not None:
            pos = self.class_position if self.class_position is not None else len(header)
            header.insert(pos, self.class_name)
        return header

    def _render_row(self, r: int) -> list[str]:
        cells = []
        for name, dom, cell in zip(self.names, self.domains, self.rows[r]):
            cells.append(("%g" % cell) if dom is None else dom[cell])
        if self.class_name is not None:
            pos = self.class_position if self.class_position is not None else len(cells)
            cells.insert(pos, self.class_domain[self.class_labels[r]])
        return cells


def _try_float(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, class_column: Optional[str | int] = "last",
             numeric_columns: Optional[Sequence[str]] = None,
             categorical_columns: Sequence[str] = ()) -> Dataset:
    """Load a headered CSV.

    Categorical domains are built in first-appearance order. Columns whose
    cells all parse as floats are marked numeric (awaiting quantization)
    unless forced categorical; `numeric_columns` forces the opposite. The
    last column is the class unless `class_column` names another one or is
    None for a class-free table.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("%s: empty file, expected a header row" % path) from None
        table = []
        for r, row in enumerate(reader):
            if len(row) != len(header):
                raise IngestError("%s: row %d has %d cells, expected %d"
                                  % (path, r + 1, len(row), len(header)))
            table.append(row)
    if not header:
        raise IngestError("%s: header row is empty" % path)

    if class_column == "last":
        class_pos = len(header) - 1
    elif class_column is None:
        class_pos = None
    elif isinstance(class_column, int):
        class_pos = class_column
    else:
        if class_column not in header:
            raise IngestError("%s: class column %r not in header" % (path, class_column))
        class_pos = header.index(class_column)

    names, domains, columns = [], [], []
    class_name = class_domain = class_labels = None
    for c, name in enumerate(header):
        cells = [row[c] for row in table]
        for r, cell in enumerate(cells):
            if cell == "":
                raise IngestError("%s: row %d, column %r: empty cell" % (path, r + 1, name))
        if c == class_pos:
            class_name = name
            class_domain, class_labels = _index_labels(path, name, cells, minimum=2)
            continue
        forced_num = numeric_columns is not None and name in numeric_columns
        forced_cat = name in categorical_columns
        floats = [_try_float(cell) for cell in cells]
        numeric = forced_num or (not forced_cat and cells and all(f is not None for f in floats))
        names.append(name)
        if numeric:
            for r, f in enumerate(floats):
                if f is None:
                    raise IngestError("%s: row %d, column %r: unparseable numeric %r"
                                      % (path, r + 1, name, cells[r]))
            domains.append(None)
            columns.append(floats)
        else:
            dom, idx = _index_labels(path, name, cells, minimum=2)
            domains.append(dom)
            columns.append(idx)

    rows = tuple(tuple(col[r] for col in columns) for r in range(len(table)))
    return Dataset(tuple(names), tuple(domains), rows, class_name,
                   class_domain, class_labels, class_pos)


def _index_labels(path, name, cells, minimum):
    domain: list[str] = []
    seen: dict[str, int] = {}
    idx = []
    for cell in cells:
        if cell not in seen:
            seen[cell] = len(domain)
            domain.append(cell)
        idx.append(seen[cell])
    if cells and len(domain) < minimum:
        raise IngestError("%s: column %r has a domain of size %d (< %d)"
                          % (path, name, len(domain), minimum))
    return tuple(domain), tuple(idx)


@dataclass(frozen=True)
class ColumnBins:
    """Fitted bins for one numeric column: strictly increasing interior cut points."""

    cuts: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.cuts, self.cuts[1:])):
            raise IngestError("cut points must be strictly increasing: %s" % (self.cuts,))
        if len(self.labels) != len(self.cuts) + 1:
            raise IngestError("expected %d interval labels, got %d"
                              % (len(self.cuts) + 1, len(self.labels)))

    def interval(self, x: float) -> int:
        # values on a cut point go to the lower interval; out-of-range clamps
        return bisect_left(self.cuts, x)

    @classmethod
    def from_cuts(cls, cuts: Sequence[float]) -> "ColumnBins":
        cuts = tuple(float(c) for c in cuts)
        labels = ["<=%g" % cuts[0]]
        labels += ["(%g,%g]" % (a, b) for a, b in zip(cuts, cuts[1:])]
        labels.append(">%g" % cuts[-1])
        return cls(cuts, tuple(labels))


@dataclass(frozen=True)
class QuantizationSpec:
    """Per-column fitted bins; persisting this makes runs reproducible bit-for-bit."""

    columns: Mapping[str, ColumnBins] = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {"format": "kxp.qspec/1",
                "columns": {name: {"cuts": list(b.cuts), "labels": list(b.labels)}
                            for name, b in self.columns.items()}}

    @classmethod
    def from_obj(cls, obj: Mapping) -> "QuantizationSpec":
        if obj.get("format") != "kxp.qspec/1":
            raise IngestError("unrecognized quantization spec format %r" % obj.get("format"))
        return cls({name: ColumnBins(tuple(spec["cuts"]), tuple(spec["labels"]))
                    for name, spec in obj["columns"].items()})

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "QuantizationSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_obj(json.load(fh))


def fit_quantization(ds: Dataset, q: int | Mapping[str, int] = 5,
                     force: bool = False) -> QuantizationSpec:
    """Fit equal-width bins on the dataset's numeric columns (train data only).

    `q` is an interval count in {4, 5, 6} (or a per-column mapping); pass
    force=True to allow other counts >= 2.
    """
    columns = {}
    for c, name in enumerate(ds.names):
        if ds.domains[c] is not None:
            continue
        qc = q[name] if isinstance(q, Mapping) else q
        if qc not in ALLOWED_INTERVALS and not force:
            raise IngestError("interval count %d for column %r not in %s "
                              "(use force to override)" % (qc, name, list(ALLOWED_INTERVALS)))
        if qc < 2:
            raise IngestError("interval count %d for column %r is below 2" % (qc, name))
        values = [row[c] for row in ds.rows]
        if not values:
            raise IngestError("column %r has no rows to fit on" % name)
        lo, hi = min(values), max(values)
        if lo == hi:
            raise IngestError("column %r is constant (%g); cannot quantize" % (name, lo))
        cuts = [lo + (hi - lo) * i / qc for i in range(1, qc)]
        columns[name] = ColumnBins.from_cuts(cuts)
    return QuantizationSpec(columns)


def quantize(ds: Dataset, spec: QuantizationSpec) -> Dataset:
    """Map numeric columns to interval indices using the fitted cut points.

    The spec must cover exactly the numeric columns. Columns already carrying
    the spec's interval labels pass through unchanged, so re-applying a spec
    is the identity.
    """
    pending = set(ds.numeric_columns)
    missing = pending - set(spec.columns)
    if missing:
        raise IngestError("no bins for numeric columns %s" % sorted(missing))
    domains = list(ds.domains)
    columns = {c: list(col) for c, col in enumerate(zip(*ds.rows))} if ds.rows else {}
    for name, bins in spec.columns.items():
        if name not in ds.names:
            raise IngestError("spec covers unknown column %r" % name)
        c = ds.names.index(name)
        if ds.domains[c] is not None:
            if ds.domains[c] != bins.labels:
                raise IngestError("column %r is categorical and does not match "
                                  "the spec's intervals" % name)
            continue
        domains[c] = bins.labels
        if ds.rows:
            columns[c] = [bins.interval(x) for x in columns[c]]
    if ds.rows:
        rows = tuple(tuple(columns[c][r] for c in range(len(ds.names)))
                     for r in range(ds.n_rows))
    else:
        rows = ()
    return replace(ds, domains=tuple(domains), rows=rows)


def split_indices(n: int, fraction: float = 0.8,
                  seed: int = 0) -> tuple[list[int], list[int]]:
    if not 0.0 < fraction < 1.0:
        raise IngestError("split fraction must be in (0, 1), got %g" % fraction)
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_train = min(max(int(round(n * fraction)), 1), n - 1)
    return sorted(order[:n_train]), sorted(order[n_train:])


def split(ds: Dataset, fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random train/test partition; exact, disjoint and deterministic under seed."""
    train_idx, test_idx = split_indices(ds.n_rows, fraction, seed)
    return ds.take(train_idx), ds.take(test_idx)


def fold_indices(n: int, k: int = 5, seed: int = 0) -> list[tuple[list[int], list[int]]]:
    if k < 2:
        raise IngestError("need at least 2 folds, got %d" % k)
    if k > n:
        raise IngestError("cannot make %d folds from %d rows" % (k, n))
    order = list(range(n))
    random.Random(seed).shuffle(order)
    base, extra = divmod(n, k)
    out, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        test_idx = set(order[start:start + size])
        start += size
        out.append((sorted(set(order) - test_idx), sorted(test_idx)))
    return out


def folds(ds: Dataset, k: int = 5, seed: int = 0) -> list[tuple[Dataset, Dataset]]:
    """k cross-validation pairs; the k test chunks are disjoint and cover all rows."""
    return [(ds.take(train_idx), ds.take(test_idx))
            for train_idx, test_idx in fold_indices(ds.n_rows, k, seed)]
