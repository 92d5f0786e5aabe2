"""Multi-label datasets: loading, splitting, standardisation and characteristics.

Datasets are stored as a dense feature matrix ``X`` (N x d, float64) and a
binary label matrix ``Y`` (N x L, int8).  Both arrays are made read-only on
construction.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class DatasetError(ValueError):
    """Base class for dataset loading and validation problems."""


class ArffParseError(DatasetError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UnsupportedAttributeError(DatasetError):
    pass


class LabelConfigError(DatasetError):
    pass


class DegenerateSplitError(DatasetError):
    pass


class UndefinedImbalanceError(DatasetError):
    pass


@dataclass(frozen=True)
class MultiLabelDataset:
    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple[str, ...]
    label_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        Y = np.array(self.Y, copy=True)
        if X.ndim != 2 or Y.ndim != 2:
            raise DatasetError("X and Y must be two-dimensional")
        if X.shape[0] != Y.shape[0]:
            raise DatasetError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] < 1:
            raise DatasetError("dataset has no instances")
        if X.shape[1] < 1:
            raise DatasetError("dataset has no features")
        if Y.shape[1] < 2:
            raise DatasetError("a multi-label dataset needs at least 2 labels")
        if not np.isin(Y, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")
        if not np.isfinite(X).all():
            raise DatasetError("features must be finite")
        Y = Y.astype(np.int8)
        X.setflags(write=False)
        Y.setflags(write=False)
        feature_names = tuple(self.feature_names)
        label_names = tuple(self.label_names)
        if len(feature_names) != X.shape[1] or len(label_names) != Y.shape[1]:
            raise DatasetError("name lists do not match matrix shapes")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "feature_names", feature_names)
        object.__setattr__(self, "label_names", label_names)

    @property
    def n_instances(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_labels(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx) -> "MultiLabelDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return MultiLabelDataset(self.X[idx], self.Y[idx], self.feature_names,
                                 self.label_names, self.name)

    def with_features(self, X: np.ndarray) -> "MultiLabelDataset":
        return MultiLabelDataset(X, self.Y, self.feature_names, self.label_names, self.name)


# ---------------------------------------------------------------------------
# Label selection

LabelSpec = Union[int, Sequence[str]]


def parse_label_spec(text: str) -> LabelSpec:
    """Parse ``"last-6"``, ``"last:6"``, ``"6"`` (trailing count) or ``"a,b,c"`` (names)."""
    text = text.strip()
    m = re.fullmatch(r"(?:last[-:])?(\d+)", text, flags=re.IGNORECASE)
    if m:
        return int(m.group(1))
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise LabelConfigError(f"empty label selection {text!r}")
    return names


def _resolve_labels(attr_names: Sequence[str], label_spec: LabelSpec) -> list[int]:
    if isinstance(label_spec, (int, np.integer)):
        k = int(label_spec)
        if k < 2 or k >= len(attr_names):
            raise LabelConfigError(
                f"trailing label count {k} invalid for {len(attr_names)} attributes")
        return list(range(len(attr_names) - k, len(attr_names)))
    positions = {name: i for i, name in enumerate(attr_names)}
    out = []
    for name in label_spec:
        if name not in positions:
            raise LabelConfigError(f"unknown label attribute {name!r}")
        out.append(positions[name])
    if len(set(out)) != len(out):
        raise LabelConfigError("duplicate label names")
    return out


# ---------------------------------------------------------------------------
# ARFF

@dataclass
class _Attribute:
    name: str
    kind: str  # "numeric" | "nominal" | "string" | "date" | "relational"
    values: list[str] = field(default_factory=list)
    line: int = 0


def _split_values(text: str, line_no: int) -> list[str]:
    """Split a comma-separated ARFF row, honouring single and double quotes."""
    out, buf, quote, escaped = [], [], None, False
    for ch in text:
        if escaped:
            buf.append(ch)
            escaped = False
        elif ch == "\\" and quote:
            escaped = True
        elif quote:
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            quote = ch
        elif ch == ",":
            out.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    if quote:
        raise ArffParseError("unterminated quote", line_no)
    out.append("".join(buf).strip())
    return out


def _parse_attribute(rest: str, line_no: int) -> _Attribute:
    rest = rest.strip()
    if not rest:
        raise ArffParseError("@attribute without a name", line_no)
    if rest[0] in "'\"":
        end = rest.find(rest[0], 1)
        if end < 0:
            raise ArffParseError("unterminated attribute name", line_no)
        name, spec = rest[1:end], rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) < 2:
            raise ArffParseError(f"attribute {parts[0]!r} has no type", line_no)
        name, spec = parts
        spec = spec.strip()
    if not spec:
        raise ArffParseError(f"attribute {name!r} has no type", line_no)
    if spec.startswith("{"):
        if not spec.endswith("}"):
            raise ArffParseError(f"malformed nominal specification for {name!r}", line_no)
        values = [v for v in _split_values(spec[1:-1], line_no)]
        return _Attribute(name, "nominal", values, line_no)
    kind = spec.split()[0].lower()
    if kind in ("numeric", "real", "integer"):
        return _Attribute(name, "numeric", line=line_no)
    if kind in ("string", "date", "relational"):
        return _Attribute(name, kind, line=line_no)
    raise ArffParseError(f"unknown attribute type {spec!r}", line_no)


def _read_arff(path: Path):
    attrs: list[_Attribute] = []
    rows: list[tuple[int, list[str]]] = []
    in_data = False
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@relation"):
                    continue
                if low.startswith("@attribute"):
                    attrs.append(_parse_attribute(line[len("@attribute"):], line_no))
                    continue
                if low.startswith("@data"):
                    in_data = True
                    continue
                raise ArffParseError(f"unexpected header line {line[:40]!r}", line_no)
            if line.startswith("{"):
                raise ArffParseError("sparse ARFF rows are not supported", line_no)
            values = _split_values(line, line_no)
            if len(values) != len(attrs):
                raise ArffParseError(
                    f"expected {len(attrs)} values, found {len(values)}", line_no)
            rows.append((line_no, values))
    if not attrs:
        raise ArffParseError("no @attribute declarations found")
    if not in_data:
        raise ArffParseError("no @data section found")
    return attrs, rows


def _to_float(value: str, line_no: int, attr: str) -> float:
    if value == "?":
        raise ArffParseError(f"missing value for {attr!r} is not supported", line_no)
    try:
        return float(value)
    except ValueError:
        raise ArffParseError(f"non-numeric value {value!r} for {attr!r}", line_no) from None


def _is_binary_nominal(attr: _Attribute) -> bool:
    return sorted(attr.values) == ["0", "1"]


def load_arff(path, label_spec: LabelSpec, nominal: str = "error") -> MultiLabelDataset:
    """Read a dense ARFF file.

    Features must be numeric or binary nominal ``{0,1}``.  Other nominal
    features raise :class:`UnsupportedAttributeError` unless
    ``nominal="onehot"``, in which case they are expanded into one indicator
    column per declared value.  Numeric label attributes are binarised as
    ``value > 0``.
    """
    path = Path(path)
    attrs, rows = _read_arff(path)
    label_pos = _resolve_labels([a.name for a in attrs], label_spec)
    label_set = set(label_pos)

    for pos in label_pos:
        a = attrs[pos]
        if a.kind == "nominal" and not _is_binary_nominal(a):
            raise UnsupportedAttributeError(
                f"label attribute {a.name!r} must be nominal {{0,1}} or numeric")
        if a.kind not in ("nominal", "numeric"):
            raise UnsupportedAttributeError(f"label attribute {a.name!r} has type {a.kind}")

    columns = []  # (attribute position, one-hot value or None)
    feature_names = []
    for pos, a in enumerate(attrs):
        if pos in label_set:
            continue
        if a.kind == "numeric" or (a.kind == "nominal" and _is_binary_nominal(a)):
            columns.append((pos, None))
            feature_names.append(a.name)
        elif a.kind == "nominal" and nominal == "onehot":
            for v in a.values:
                columns.append((pos, v))
                feature_names.append(f"{a.name}={v}")
        else:
            raise UnsupportedAttributeError(
                f"feature attribute {a.name!r} (line {a.line}) has unsupported type {a.kind}")

    X = np.empty((len(rows), len(columns)))
    Y = np.empty((len(rows), len(label_pos)), dtype=np.int8)
    for i, (line_no, values) in enumerate(rows):
        for j, (pos, onehot) in enumerate(columns):
            raw = values[pos]
            if onehot is not None:
                if raw == "?":
                    raise ArffParseError(f"missing value for {attrs[pos].name!r}", line_no)
                if raw not in attrs[pos].values:
                    raise ArffParseError(
                        f"value {raw!r} not declared for {attrs[pos].name!r}", line_no)
                X[i, j] = 1.0 if raw == onehot else 0.0
            else:
                X[i, j] = _to_float(raw, line_no, attrs[pos].name)
        for j, pos in enumerate(label_pos):
            Y[i, j] = 1 if _to_float(values[pos], line_no, attrs[pos].name) > 0 else 0
    if len(rows) == 0:
        raise ArffParseError("@data section is empty")
    return MultiLabelDataset(X, Y, feature_names, [attrs[p].name for p in label_pos],
                             name=path.stem)


# ---------------------------------------------------------------------------
# CSV

def load_csv(path, label_spec: LabelSpec) -> MultiLabelDataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArffParseError("empty CSV file", 1) from None
        header = [h.strip() for h in header]
        label_pos = _resolve_labels(header, label_spec)
        feat_pos = [i for i in range(len(header)) if i not in set(label_pos)]
        xs, ys = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ArffParseError(
                    f"expected {len(header)} values, found {len(row)}", line_no)
            xs.append([_to_float(row[i].strip(), line_no, header[i]) for i in feat_pos])
            ys.append([1 if _to_float(row[i].strip(), line_no, header[i]) > 0 else 0
                       for i in label_pos])
    if not xs:
        raise ArffParseError("CSV file has no data rows")
    return MultiLabelDataset(np.array(xs), np.array(ys), [header[i] for i in feat_pos],
                             [header[i] for i in label_pos], name=path.stem)


def write_csv(ds: MultiLabelDataset, path) -> None:
    """Write features then labels; floats use ``repr`` so a reload is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + list(ds.label_names))
        for x, y in zip(ds.X, ds.Y):
            w.writerow([repr(float(v)) for v in x] + [int(v) for v in y])


def load_dataset(path, label_spec: LabelSpec, nominal: str = "error") -> MultiLabelDataset:
    """Dispatch on file extension (``.arff`` or ``.csv``)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if isinstance(label_spec, str):
        label_spec = parse_label_spec(label_spec)
    suffix = path.suffix.lower()
    if suffix == ".arff":
        return load_arff(path, label_spec, nominal=nominal)
    if suffix == ".csv":
        return load_csv(path, label_spec)
    raise DatasetError(f"unsupported dataset format {suffix!r}")


# ---------------------------------------------------------------------------
# Splitting

@dataclass(frozen=True)
class SplitSpec:
    t: float = 0.6
    seed: int = 0
    folds: int = 10

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_train_validation(ds: MultiLabelDataset, spec: SplitSpec):
    """Random (unstratified) split into training and validation parts.

    The training part has ``round(t * N)`` instances (halves round up).
    Both parts keep the original instance order.
    """
    n = ds.n_instances
    n_train = _round_half_up(spec.t * n)
    if n_train <= 0 or n_train >= n:
        raise DegenerateSplitError(
            f"t={spec.t} on {n} instances leaves an empty training or validation part")
    perm = np.random.default_rng(int(spec.seed)).permutation(n)
    train_idx = np.sort(perm[:n_train])
    val_idx = np.sort(perm[n_train:])
    return ds.subset(train_idx), ds.subset(val_idx)


def kfold_indices(n: int, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled k-fold partition; the first ``n % folds`` folds get one extra index."""
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > n:
        raise ValueError(f"cannot make {folds} folds from {n} instances")
    perm = np.random.default_rng(int(seed)).permutation(n)
    out = []
    for test in np.array_split(perm, folds):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        out.append((np.flatnonzero(mask), np.sort(test)))
    return out


# ---------------------------------------------------------------------------
# Standardisation

@dataclass(frozen=True)
class FeatureScaler:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.shape[0]:
            raise ValueError(f"expected {self.mean.shape[0]} features, got {X.shape[-1]}")
        out = np.zeros(np.broadcast_shapes(X.shape, self.mean.shape))
        ok = self.scale > 0
        out[..., ok] = (X[..., ok] - self.mean[ok]) / self.scale[ok]
        return out


def standardize(fit: MultiLabelDataset) -> FeatureScaler:
    """z-score statistics (population std) of the fit set; constant columns map to 0."""
    if fit.n_instances < 2:
        raise ValueError("need at least 2 instances to fit a scaler")
    mean = fit.X.mean(axis=0)
    std = fit.X.std(axis=0)
    # Treat round-off level spread as constant.
    std = np.where(std > 1e-12 * np.maximum(1.0, np.abs(mean)), std, 0.0)
    return FeatureScaler(mean, std)


def apply(scaler: FeatureScaler, ds: MultiLabelDataset) -> MultiLabelDataset:
    return ds.with_features(scaler.transform(ds.X))


# ---------------------------------------------------------------------------
# Characteristics

@dataclass(frozen=True)
class DatasetStats:
    n: int
    d: int
    l: int
    lc: float
    ld: float
    avir: float
    avgsc: float

    def as_dict(self) -> dict:
        return {"N": self.n, "d": self.d, "L": self.l, "LC": self.lc, "LD": self.ld,
                "avIR": self.avir, "AVsc": self.avgsc}


def _labels(ds_or_Y) -> np.ndarray:
    Y = ds_or_Y.Y if isinstance(ds_or_Y, MultiLabelDataset) else np.asarray(ds_or_Y)
    return Y.astype(np.int64)


def label_cardinality(ds) -> float:
    return float(_labels(ds).sum(axis=1).mean())


def label_density(ds) -> float:
    Y = _labels(ds)
    return label_cardinality(Y) / Y.shape[1]


def imbalance_ratios(ds, label_names=None) -> np.ndarray:
    """Per-label IRLbl = (count of the most frequent label) / (count of this label)."""
    Y = _labels(ds)
    counts = Y.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        if label_names is None and isinstance(ds, MultiLabelDataset):
            label_names = ds.label_names
        name = label_names[empty[0]] if label_names is not None else f"#{empty[0]}"
        raise UndefinedImbalanceError(f"label {name!r} has no positive instances")
    return counts.max() / counts


def average_imbalance_ratio(ds) -> float:
    return float(imbalance_ratios(ds).mean())


def average_scumble(ds) -> float:
    """Mean over instances of 1 - geomean(IRLbl of active labels) / mean(IRLbl of active labels)."""
    Y = _labels(ds).astype(bool)
    ir = imbalance_ratios(ds)
    n_active = Y.sum(axis=1)
    log_ir = np.where(Y, np.log(ir), 0.0).sum(axis=1)
    sum_ir = np.where(Y, ir, 0.0).sum(axis=1)
    has = n_active > 0
    sc = np.zeros(Y.shape[0])
    k = n_active[has]
    sc[has] = 1.0 - np.exp(log_ir[has] / k) / (sum_ir[has] / k)
    # geometric <= arithmetic mean; clip round-off below zero
    return float(np.clip(sc, 0.0, 1.0).mean())


def dataset_stats(ds: MultiLabelDataset) -> DatasetStats:
    return DatasetStats(
        n=ds.n_instances,
        d=ds.n_features,
        l=ds.n_labels,
        lc=label_cardinality(ds),
        ld=label_density(ds),
        avir=average_imbalance_ratio(ds),
        avgsc=average_scumble(ds),
    )
