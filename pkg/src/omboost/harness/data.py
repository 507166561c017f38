"""CSV ingestion plus the two small benchmark datasets."""

from __future__ import annotations

import csv
import itertools
import math
import os
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import Example


class DataError(Exception):
    """Unreadable or invalid dataset."""


@dataclass
class DatasetSpec:
    path: str
    label_column: str
    feature_columns: list[str] | None = None     # None: every non-label column
    categorical: list[str] = field(default_factory=list)
    fill_missing: float | None = None
    labels: list[str] | None = None              # declared label set, in order
    shuffle_seeds: list[int] = field(default_factory=list)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray            # 0-based
    classes: list[str]       # classes[j] is label j + 1 in outputs
    feature_names: list[str]
    name: str = ""

    @property
    def k(self) -> int:
        return len(self.classes)

    def __len__(self):
        return len(self.y)

    def examples(self, order=None):
        idx = range(len(self.y)) if order is None else order
        for j in idx:
            yield Example(self.X[j], int(self.y[j]), 1.0)


MISSING = {"", "?", "NA", "na", "NaN", "nan"}


def load_dataset(spec: DatasetSpec) -> Dataset:
    path = Path(spec.path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            rows.append((reader.line_num, [c.strip() for c in row]))
    if not rows:
        raise DataError(f"{path}: no data rows")
    if spec.label_column not in header:
        raise DataError(f"{path}: label column {spec.label_column!r} not in header")
    li = header.index(spec.label_column)
    feats = spec.feature_columns or [h for h in header if h != spec.label_column]
    for f in feats:
        if f not in header:
            raise DataError(f"{path}: feature column {f!r} not in header")
    fidx = [header.index(f) for f in feats]

    if spec.labels is not None:
        classes = list(spec.labels)
    else:
        classes = sorted({r[li] for _, r in rows}, key=_natural_key)
    cmap = {c: j for j, c in enumerate(classes)}

    levels = {}
    for f, j in zip(feats, fidx):
        if f in spec.categorical:
            levels[f] = sorted({r[j] for _, r in rows if r[j] not in MISSING}, key=_natural_key)
    names = []
    for f in feats:
        names.extend(f"{f}={v}" for v in levels[f]) if f in levels else names.append(f)

    X = np.zeros((len(rows), len(names)))
    y = np.zeros(len(rows), dtype=np.int64)
    for n, (line, r) in enumerate(rows):
        lab = r[li]
        if lab not in cmap:
            raise DataError(f"{path}:{line}: label {lab!r} outside declared set {classes}")
        y[n] = cmap[lab]
        col = 0
        for f, j in zip(feats, fidx):
            v = r[j]
            if f in levels:
                if v in MISSING:
                    if spec.fill_missing is None:
                        raise DataError(f"{path}:{line}: missing value in {f!r}")
                else:
                    X[n, col + levels[f].index(v)] = 1.0
                col += len(levels[f])
                continue
            if v in MISSING:
                if spec.fill_missing is None:
                    raise DataError(f"{path}:{line}: missing value in {f!r}")
                X[n, col] = spec.fill_missing
            else:
                try:
                    X[n, col] = float(v)
                except ValueError:
                    raise DataError(f"{path}:{line}: non-numeric value {v!r} in {f!r}") from None
                if not math.isfinite(X[n, col]):
                    raise DataError(f"{path}:{line}: non-finite value in {f!r}")
            col += 1
    return Dataset(X, y, classes, names, name=path.stem)


def _natural_key(v: str):
    try:
        return (0, float(v), v)
    except ValueError:
        return (1, 0.0, v)


def ingest_csv(spec: DatasetSpec, seed=None):
    """Yield the dataset's examples in file order, or shuffled by ``seed``."""
    ds = load_dataset(spec)
    order = None
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(ds))
    yield from ds.examples(order)


# Balance scale: every (left weight, left distance, right weight, right distance)
# in 1..5, labelled by which torque is larger.

BALANCE_HEADER = ["class", "left_weight", "left_distance", "right_weight", "right_distance"]


def balance_rows():
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        label = "L" if left > right else "R" if right > left else "B"
        yield [label, lw, ld, rw, rd]


def write_balance_csv(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(BALANCE_HEADER)
        w.writerows(balance_rows())
    return path


def balance_spec(path) -> DatasetSpec:
    return DatasetSpec(str(path), "class", labels=["B", "L", "R"])


# Car evaluation: 6 categorical attributes over their full factorial grid.

CARS_LEVELS = {
    "buying": ["vhigh", "high", "med", "low"],
    "maint": ["vhigh", "high", "med", "low"],
    "doors": ["2", "3", "4", "5more"],
    "persons": ["2", "4", "more"],
    "lug_boot": ["small", "med", "big"],
    "safety": ["low", "med", "high"],
}
CARS_CLASSES = ["unacc", "acc", "good", "vgood"]
CARS_CLASS_COUNTS = {"unacc": 1210, "acc": 384, "good": 69, "vgood": 65}
CARS_HEADER = list(CARS_LEVELS) + ["class"]
CARS_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/car/car.data"


def validate_cars_rows(rows) -> None:
    """The raw file must hold each attribute combination exactly once."""
    if len(rows) != 1728:
        raise DataError(f"car data: expected 1728 rows, got {len(rows)}")
    seen = set()
    for n, r in enumerate(rows, start=1):
        if len(r) != 7:
            raise DataError(f"car data line {n}: expected 7 fields")
        for (name, lv), v in zip(CARS_LEVELS.items(), r[:6]):
            if v not in lv:
                raise DataError(f"car data line {n}: bad {name} value {v!r}")
        if r[6] not in CARS_CLASSES:
            raise DataError(f"car data line {n}: bad class {r[6]!r}")
        seen.add(tuple(r[:6]))
    if len(seen) != 1728:
        raise DataError("car data: attribute grid has duplicates")
    # content check in place of a file hash
    counts = {c: 0 for c in CARS_CLASSES}
    for r in rows:
        counts[r[6]] += 1
    if counts != CARS_CLASS_COUNTS:
        raise DataError(f"car data: class counts {counts} differ from {CARS_CLASS_COUNTS}")


def prepare_cars(raw_path, dest) -> Path:
    """Validate a raw headerless ``car.data`` file and rewrite it with a header."""
    raw_path = Path(raw_path)
    if not raw_path.is_file():
        raise DataError(f"{raw_path}: no such file")
    with open(raw_path, newline="", encoding="utf-8") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh) if r]
    if rows and rows[0] == CARS_HEADER:
        rows = rows[1:]
    validate_cars_rows(rows)
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CARS_HEADER)
        w.writerows(rows)
    return dest


def fetch_cars(dest, url: str = CARS_URL, timeout: float = 30.0) -> Path:
    dest = Path(dest)
    raw = dest.with_suffix(".raw")
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            raw.write_bytes(resp.read())
    except OSError as exc:
        raise DataError(f"could not download car data from {url}: {exc}") from exc
    try:
        return prepare_cars(raw, dest)
    finally:
        raw.unlink(missing_ok=True)


def cars_spec(path) -> DatasetSpec:
    return DatasetSpec(str(path), "class", categorical=list(CARS_LEVELS), labels=CARS_CLASSES)


def data_dir() -> Path:
    return Path(os.environ.get("OMBOOST_DATA", Path.home() / ".cache" / "omboost"))


def locate_cars() -> Path | None:
    """Prepared car CSV from the data directory, preparing a raw ``car.data`` if present."""
    d = data_dir()
    prepared = d / "cars.csv"
    if prepared.is_file():
        return prepared
    raw = d / "car.data"
    if raw.is_file():
        return prepare_cars(raw, prepared)
    return None
