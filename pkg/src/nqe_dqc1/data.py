"""Dataset ingestion: MNIST IDX parsing, 0/1 subset selection, PCA to five
features, stratified splits, JSON persistence and a synthetic blob generator.

Labels follow the classifier convention: digit 0 -> -1, digit 1 -> +1.
"""
from __future__ import annotations

import csv
import gzip
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError, SchemaError, VersionError

SCHEMA_VERSION = 1
IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
N_PIXELS = 28 * 28
ANGLE_SCALE = 1.0  # radians per standard deviation of a PCA component
ANGLE_COVERAGE = 0.99  # fraction of fit images whose features must sit in [-pi, pi]


@dataclass(frozen=True)
class RawImage:
    pixels: np.ndarray  # (784,) uint8, row-major 28x28
    label: int


@dataclass
class PcaBasis:
    basis: np.ndarray  # (k, 784), orthonormal rows
    mean: np.ndarray  # (784,)
    std: np.ndarray | None = None  # per-component std on the fit set
    scale: float = ANGLE_SCALE

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.tolist(),
            "mean": self.mean.tolist(),
            "std": None if self.std is None else self.std.tolist(),
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PcaBasis":
        std = doc.get("std")
        return cls(
            np.asarray(doc["basis"], dtype=float),
            np.asarray(doc["mean"], dtype=float),
            None if std is None else np.asarray(std, dtype=float),
            float(doc["scale"]),
        )


@dataclass
class Dataset:
    features: np.ndarray  # (N, 5)
    labels: np.ndarray  # (N,) of +/-1
    split_tag: str = "all"
    pca: PcaBasis | None = None
    provenance: dict = field(default_factory=dict)
    ids: np.ndarray | None = None  # stable sample identifiers, survive splitting

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            self.features = self.features.reshape(len(self.labels), -1) if len(self.labels) else np.empty((0, 0))
        if self.features.shape[0] != len(self.labels):
            raise DomainError(f"{self.features.shape[0]} feature rows but {len(self.labels)} labels")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise DomainError("labels must be -1 or +1")
        if self.ids is None:
            self.ids = np.arange(len(self.labels))
        self.ids = np.asarray(self.ids, dtype=int)
        if self.split_tag not in ("train", "test", "all"):
            raise DomainError(f"unknown split tag {self.split_tag!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx, split_tag: str) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], split_tag, self.pca, dict(self.provenance), self.ids[idx])

    def require_both_labels(self) -> None:
        if len(np.unique(self.labels)) < 2:
            raise DomainError("dataset must contain both labels")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return _to_doc(self) == _to_doc(other)


def _maybe_gunzip(blob: bytes) -> bytes:
    return gzip.decompress(blob) if blob[:2] == b"\x1f\x8b" else blob


def parse_idx(image_bytes: bytes, label_bytes: bytes) -> list[RawImage]:
    """Decode an IDX3 image file and IDX1 label file (raw or gzip)."""
    img = _maybe_gunzip(image_bytes)
    lab = _maybe_gunzip(label_bytes)
    if len(img) < 16:
        raise FormatError("image file shorter than its 16-byte header", len(img))
    if len(lab) < 8:
        raise FormatError("label file shorter than its 8-byte header", len(lab))
    magic, n_img, rows, cols = struct.unpack(">IIII", img[:16])
    if magic != IMAGE_MAGIC:
        raise FormatError(f"bad image magic 0x{magic:08x}", 0)
    magic, n_lab = struct.unpack(">II", lab[:8])
    if magic != LABEL_MAGIC:
        raise FormatError(f"bad label magic 0x{magic:08x}", 0)
    if n_img != n_lab:
        raise FormatError(f"{n_img} images but {n_lab} labels", 4)
    size = rows * cols
    if len(img) < 16 + n_img * size:
        raise FormatError(f"image data truncated: need {16 + n_img * size} bytes", len(img))
    if len(lab) < 8 + n_lab:
        raise FormatError(f"label data truncated: need {8 + n_lab} bytes", len(lab))
    pixels = np.frombuffer(img, dtype=np.uint8, count=n_img * size, offset=16).reshape(n_img, size)
    labels = np.frombuffer(lab, dtype=np.uint8, count=n_lab, offset=8)
    return [RawImage(pixels[i].copy(), int(labels[i])) for i in range(n_img)]


def read_idx_files(image_path, label_path) -> list[RawImage]:
    return parse_idx(Path(image_path).read_bytes(), Path(label_path).read_bytes())


def write_idx(images: list[RawImage], rows: int = 28, cols: int = 28) -> tuple[bytes, bytes]:
    """Serialize images back to (image_bytes, label_bytes) IDX containers."""
    pix = np.stack([im.pixels for im in images]).astype(np.uint8)
    lab = np.array([im.label for im in images], dtype=np.uint8)
    return (
        struct.pack(">IIII", IMAGE_MAGIC, len(images), rows, cols) + pix.tobytes(),
        struct.pack(">II", LABEL_MAGIC, len(images)) + lab.tobytes(),
    )


def select_binary_subset(images: list[RawImage], digits=(0, 1), count: int = 500, seed: int = 0) -> list[RawImage]:
    """Random, class-balanced pick of ``count`` images of the two digits.

    With odd ``count`` the extra image goes to a seed-chosen digit.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    pools = [[i for i, im in enumerate(images) if im.label == d] for d in digits]
    want = [count // 2, count // 2]
    if count % 2:
        want[int(rng.integers(2))] += 1
    for d, pool, w in zip(digits, pools, want):
        if len(pool) < w:
            raise DomainError(f"need {w} images of digit {d}, only {len(pool)} available")
    chosen = np.concatenate([rng.choice(pool, size=w, replace=False) for pool, w in zip(pools, want)])
    chosen = chosen[rng.permutation(len(chosen))]
    return [images[i] for i in chosen]


def _pixel_matrix(images) -> np.ndarray:
    if isinstance(images, np.ndarray):
        return np.asarray(images, dtype=float)
    return np.stack([im.pixels for im in images]).astype(float) / 255.0


def fit_pca(images, k: int = 5) -> PcaBasis:
    """Top-k principal axes of the (pixel / 255) data.

    ``images`` is a list of RawImage or an (N, d) float array already in
    working units. Each basis row is signed so its largest-magnitude entry is
    positive. The per-component std and angle scale are fitted on the same set.
    """
    x = _pixel_matrix(images)
    if x.shape[0] < k:
        raise DomainError(f"need at least {k} samples for {k} components")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / max(1, x.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    rank = int(np.sum(evals > 1e-10 * max(evals[0], 1e-300)))
    if k > rank:
        raise DomainError(f"requested {k} components but data rank is {rank}")
    basis = evecs[:, :k].T.copy()
    for row in basis:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    pca = PcaBasis(basis, mean)
    raw = centered @ basis.T
    pca.std = raw.std(axis=0)
    pca.scale = angle_scale(raw / pca.std)
    return pca


def angle_scale(standardized: np.ndarray) -> float:
    """ANGLE_SCALE, shrunk if needed so ANGLE_COVERAGE of rows fit in [-pi, pi]."""
    worst = np.quantile(np.max(np.abs(standardized), axis=1), ANGLE_COVERAGE)
    return float(min(ANGLE_SCALE, np.pi / worst)) if worst > 0 else ANGLE_SCALE


def project(pca: PcaBasis, image, scaled: bool = True) -> np.ndarray:
    """Features of one image (RawImage or working-unit pixel vector)."""
    x = image.pixels.astype(float) / 255.0 if isinstance(image, RawImage) else np.asarray(image, dtype=float)
    feats = pca.basis @ (x - pca.mean)
    if scaled and pca.std is not None:
        feats = feats / pca.std * pca.scale
    return feats


def build_dataset(images: list[RawImage], pca: PcaBasis, digits=(0, 1), provenance: dict | None = None) -> Dataset:
    x = _pixel_matrix(images)
    feats = (x - pca.mean) @ pca.basis.T
    if pca.std is not None:
        feats = feats / pca.std * pca.scale
    labels = np.array([-1 if im.label == digits[0] else 1 for im in images])
    return Dataset(feats, labels, "all", pca, provenance or {})


def split(data: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Label-stratified disjoint split."""
    if not 0.0 <= train_fraction <= 1.0:
        raise DomainError("train_fraction must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    train_idx, test_idx = [], []
    for label in (-1, 1):
        idx = np.flatnonzero(data.labels == label)
        idx = idx[rng.permutation(len(idx))]
        cut = int(round(train_fraction * len(idx)))
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    return data.subset(sorted(train_idx), "train"), data.subset(sorted(test_idx), "test")


def synthetic_dataset(n_per_class: int, separation: float, seed: int = 0, dim: int = 5) -> Dataset:
    """Two unit-variance Gaussian blobs whose means are ``separation`` apart."""
    if separation < 0:
        raise DomainError("separation must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    axis = np.ones(dim) / np.sqrt(dim)
    minus = rng.normal(size=(n_per_class, dim)) - 0.5 * separation * axis
    plus = rng.normal(size=(n_per_class, dim)) + 0.5 * separation * axis
    feats = np.vstack([minus, plus])
    labels = np.r_[-np.ones(n_per_class, dtype=int), np.ones(n_per_class, dtype=int)]
    order = rng.permutation(len(labels))
    prov = {"source": "synthetic", "n_per_class": n_per_class, "separation": separation, "seed": seed}
    return Dataset(feats[order], labels[order], "all", None, prov)


def load_feature_csv(path, provenance: dict | None = None) -> Dataset:
    """Generic import: one row per sample, feature columns then a label column.

    Labels may be +/-1 or 0/1 (0 maps to -1). A header row is skipped if its
    first field is not numeric.
    """
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise SchemaError(f"{path}: non-numeric row {row}")
    if not rows:
        raise SchemaError(f"{path}: no samples")
    table = np.array(rows)
    if not np.all(np.isin(table[:, -1], (-1, 0, 1))):
        raise SchemaError(f"{path}: labels must be -1, 0 or 1")
    labels = np.where(table[:, -1] > 0, 1, -1)
    prov = {"source": str(path)}
    prov.update(provenance or {})
    return Dataset(table[:, :-1], labels, "all", None, prov)


def _to_doc(data: Dataset) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "split_tag": data.split_tag,
        "features": data.features.tolist(),
        "labels": data.labels.tolist(),
        "ids": data.ids.tolist(),
        "pca": None if data.pca is None else data.pca.to_dict(),
        "provenance": data.provenance,
    }


def dataset_to_json(data: Dataset) -> str:
    return json.dumps(_to_doc(data), sort_keys=True)


def save_dataset(data: Dataset, path) -> None:
    Path(path).write_text(dataset_to_json(data))


def load_dataset(path) -> Dataset:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid dataset JSON ({exc})") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise SchemaError(f"{path}: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise VersionError(f"{path}: schema_version {doc['schema_version']}, expected {SCHEMA_VERSION}")
    try:
        return Dataset(
            np.asarray(doc["features"], dtype=float),
            np.asarray(doc["labels"], dtype=int),
            doc["split_tag"],
            None if doc["pca"] is None else PcaBasis.from_dict(doc["pca"]),
            doc["provenance"],
            np.asarray(doc["ids"], dtype=int),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
