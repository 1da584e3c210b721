"""Synthetic 2-D dataset generators, Iris/IDX loaders, pooling, and splits.

Every generator and loader is deterministic per seed. Generator constants
live in GENERATOR_PARAMS and can be overridden per call; defaults put each
dataset in its intended regime (separable clusters, annulus, moons, nested
clusters, interleaved rows with one simple separating feature).
"""

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    ClassTooSmallError,
    DatasetParseError,
    NotEnoughSamplesError,
    TruncatedFileError,
    UnknownKindError,
    WrongColumnCountError,
    WrongDimError,
)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

SYNTHETIC_KINDS = (
    "gaussian",
    "circle",
    "half_moon",
    "hierarchical",
    "checkerboard",
    "checkerboard_pulled_in",
)

GENERATOR_PARAMS = {
    "gaussian": {"means": ((0.0, 2.0), (-2.0, -1.0), (2.0, -1.0)), "sigma": 0.4},
    "circle": {"radii": (1.0, 2.0), "sigma": 0.12},
    "half_moon": {"sigma": 0.1},
    "hierarchical": {
        "super_centers": ((-2.0, 0.0), (2.0, 0.0)),
        "intra_offset": 0.6,
        "sigma": 0.25,
    },
    "checkerboard": {"spacing": 2.0, "row_offset": 0.75, "sigma": 0.25},
    "checkerboard_pulled_in": {"spacing": 1.0, "row_offset": 0.75, "sigma": 0.25},
}


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix X (n, d), integer labels y in [0, C), class count C."""

    X: np.ndarray
    y: np.ndarray
    C: int
    name: str = ""

    def __post_init__(self):
        x = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.intp)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("X must be a non-empty (n, d) matrix")
        if y.shape != (x.shape[0],):
            raise ValueError("y must have one label per row of X")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        if np.any(y < 0) or np.any(y >= self.C):
            raise ValueError(f"labels must lie in [0, {self.C})")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def take(self, indices, name=None):
        return LabeledDataset(
            self.X[indices], self.y[indices], self.C,
            self.name if name is None else name,
        )


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned 2-D scan grid with `resolution` nodes per axis."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid bounds must be increasing")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")

    def axes(self):
        xs = np.linspace(self.x_min, self.x_max, self.resolution)
        ys = np.linspace(self.y_min, self.y_max, self.resolution)
        return xs, ys

    def nodes(self):
        """All grid points, x varying fastest; shape (resolution**2, 2).

        A field with shape (resolution, resolution) is indexed [iy, ix].
        """
        xs, ys = self.axes()
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


def _merged_params(kind, overrides):
    params = dict(GENERATOR_PARAMS[kind])
    if overrides:
        params.update(overrides)
    return params


def _cluster_counts(total, n_clusters):
    base = total // n_clusters
    return [base + (1 if i < total % n_clusters else 0) for i in range(n_clusters)]


def _checkerboard_centers(spacing, row_offset):
    # class 0 columns at (-s, 0, s), class 1 interleaved half a step over;
    # rows offset in the second feature so one horizontal threshold separates
    class0 = [(-spacing, row_offset), (0.0, row_offset), (spacing, row_offset)]
    class1 = [(-spacing / 2, -row_offset), (spacing / 2, -row_offset), (3 * spacing / 2, -row_offset)]
    return class0, class1


def gen_synthetic(kind, n_per_class, seed, params=None):
    """Seeded 2-D mixture datasets; see GENERATOR_PARAMS for the constants."""
    if kind not in SYNTHETIC_KINDS:
        raise UnknownKindError(
            f"unknown dataset kind {kind!r}; valid kinds: {', '.join(SYNTHETIC_KINDS)}"
        )
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    p = _merged_params(kind, params)
    rng = np.random.default_rng(seed)
    xs, ys = [], []

    if kind == "gaussian":
        for c, mean in enumerate(p["means"]):
            xs.append(np.asarray(mean) + p["sigma"] * rng.standard_normal((n_per_class, 2)))
            ys.append(np.full(n_per_class, c))
    elif kind == "circle":
        for c, radius in enumerate(p["radii"]):
            angles = rng.uniform(0.0, 2.0 * np.pi, n_per_class)
            r = radius + p["sigma"] * rng.standard_normal(n_per_class)
            xs.append(np.column_stack([r * np.cos(angles), r * np.sin(angles)]))
            ys.append(np.full(n_per_class, c))
    elif kind == "half_moon":
        t = np.linspace(0.0, np.pi, n_per_class)
        outer = np.column_stack([np.cos(t), np.sin(t)])
        inner = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
        for c, moon in enumerate((outer, inner)):
            xs.append(moon + p["sigma"] * rng.standard_normal((n_per_class, 2)))
            ys.append(np.full(n_per_class, c))
    elif kind == "hierarchical":
        c = 0
        for sx, sy in p["super_centers"]:
            for dy in (p["intra_offset"], -p["intra_offset"]):
                center = np.array([sx, sy + dy])
                xs.append(center + p["sigma"] * rng.standard_normal((n_per_class, 2)))
                ys.append(np.full(n_per_class, c))
                c += 1
    else:  # checkerboard variants
        class0, class1 = _checkerboard_centers(p["spacing"], p["row_offset"])
        for c, centers in enumerate((class0, class1)):
            counts = _cluster_counts(n_per_class, len(centers))
            for center, count in zip(centers, counts):
                xs.append(np.asarray(center) + p["sigma"] * rng.standard_normal((count, 2)))
            ys.append(np.full(n_per_class, c))

    x = np.vstack(xs)
    y = np.concatenate(ys)
    n_classes = int(y.max()) + 1
    return LabeledDataset(x, y, n_classes, name=kind)


def load_iris(path):
    """Iris-style CSV: 4 numeric feature columns plus a class column.

    Class names map to indices in order of first appearance; an optional
    header line is skipped. Exactly 3 classes are required.
    """
    rows = []
    class_order = []
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != 5:
                raise WrongColumnCountError(
                    f"expected 5 columns, found {len(record)}", line=lineno
                )
            try:
                features = [float(v) for v in record[:4]]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise DatasetParseError(
                    f"non-numeric feature in {record[:4]!r}", line=lineno
                ) from None
            label = record[4].strip()
            if label not in class_order:
                class_order.append(label)
            rows.append((features, class_order.index(label)))
    if not rows:
        raise DatasetParseError("no data rows found")
    if len(class_order) != 3:
        raise DatasetParseError(f"expected 3 classes, found {len(class_order)}")
    x = np.array([r[0] for r in rows])
    y = np.array([r[1] for r in rows])
    return LabeledDataset(x, y, 3, name="iris")


def _read_idx(path, expected_magic, n_dims):
    with open(path, "rb") as fh:
        raw = fh.read()
    header = 4 + 4 * n_dims
    if len(raw) < header:
        raise TruncatedFileError(f"{path}: header needs {header} bytes, file has {len(raw)}")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expected_magic:
        raise BadMagicError(f"{path}: magic {magic:#010x}, expected {expected_magic:#010x}")
    dims = struct.unpack(f">{n_dims}I", raw[4:header])
    count = int(np.prod(dims))
    if len(raw) < header + count:
        raise TruncatedFileError(
            f"{path}: payload needs {count} bytes, file has {len(raw) - header}"
        )
    data = np.frombuffer(raw, dtype=np.uint8, count=count, offset=header)
    return data.reshape(dims)


def load_mnist_subset(images_path, labels_path, digits, per_class, seed):
    """Seeded per-digit subsample of an IDX image/label pair.

    Keeps the requested digits, relabels them to 0..C-1 in the given order,
    flattens images row-major, and scales pixels to [0, 1].
    """
    digits = [int(d) for d in digits]
    if len(set(digits)) != len(digits) or any(d < 0 or d > 9 for d in digits):
        raise ValueError("digits must be distinct values in 0..9")
    images = _read_idx(images_path, IMAGE_MAGIC, 3)
    labels = _read_idx(labels_path, LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise DatasetParseError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for new_label, digit in enumerate(digits):
        available = np.flatnonzero(labels == digit)
        if available.size < per_class:
            raise NotEnoughSamplesError(
                f"digit {digit} has {available.size} samples, need {per_class}"
            )
        chosen = np.sort(rng.choice(available, size=per_class, replace=False))
        xs.append(images[chosen].reshape(per_class, -1).astype(np.float64) / 255.0)
        ys.append(np.full(per_class, new_label))
    name = "mnist-" + "".join(str(d) for d in digits)
    return LabeledDataset(np.vstack(xs), np.concatenate(ys), len(digits), name=name)


def downsample_images(data, factor=4):
    """Non-overlapping factor x factor average pooling of square images."""
    side = int(round(np.sqrt(data.d)))
    if side * side != data.d or side % factor != 0:
        raise WrongDimError(
            f"d={data.d} is not a square image side divisible by {factor}"
        )
    out = side // factor
    pooled = data.X.reshape(data.n, out, factor, out, factor).mean(axis=(2, 4))
    return LabeledDataset(pooled.reshape(data.n, out * out), data.y, data.C, name=data.name)


def split(data, train_fraction, seed):
    """Seeded stratified split into disjoint, exhaustive train/test parts."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(data.C):
        members = np.flatnonzero(data.y == c)
        if members.size == 0:
            continue
        n_train = int(round(train_fraction * members.size))
        if n_train == 0:
            raise ClassTooSmallError(
                f"class {c} has {members.size} samples; train share would be empty"
            )
        order = rng.permutation(members)
        train_idx.extend(order[:n_train])
        test_idx.extend(order[n_train:])
    train = data.take(np.sort(train_idx), name=f"{data.name}_train")
    test = data.take(np.sort(test_idx), name=f"{data.name}_test")
    return train, test


def dataset_to_csv(data, path):
    """Write header f0..f{d-1},label and one row per sample; floats carry 17
    significant digits so the file round-trips bit-exactly."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join([f"f{i}" for i in range(data.d)] + ["label"]) + "\n")
        for row, label in zip(data.X, data.y):
            fh.write(",".join(f"{v:.17g}" for v in row) + f",{label}\n")


def dataset_from_csv(path, name=None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError("empty file") from None
        d = len(header) - 1
        if d < 1 or header[-1] != "label" or header[0] != "f0":
            raise DatasetParseError("expected header f0,...,label", line=1)
        xs, ys = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != d + 1:
                raise WrongColumnCountError(
                    f"expected {d + 1} columns, found {len(record)}", line=lineno
                )
            try:
                xs.append([float(v) for v in record[:d]])
                ys.append(int(record[d]))
            except ValueError:
                raise DatasetParseError(f"malformed row {record!r}", line=lineno) from None
    if not xs:
        raise DatasetParseError("no data rows found")
    y = np.array(ys)
    inferred_name = name if name is not None else str(path)
    return LabeledDataset(np.array(xs), y, int(y.max()) + 1, name=inferred_name)
