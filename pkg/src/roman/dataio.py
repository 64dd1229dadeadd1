"""Dataset ingestion, preprocessing and tensor serialization.

Supported inputs are the sktime-style ``.ts`` text format (header keys
``@problemName``, ``@univariate``, ``@classLabel``, ``@data``; dimensions
separated by ``:``, values by ``,``; ``?`` marks a missing value) and a
single-table TSV with the label in the first column.

Tensors are stored as a flat little-endian float64 payload next to a
JSON sidecar (``<path>.json``) holding dims, a SHA-256 digest, a format
version and arbitrary metadata such as routing provenance.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChecksumMismatch,
    ParseError,
    UnequalLength,
    UnknownClassLabel,
    VersionMismatch,
)

TENSOR_FORMAT_VERSION = 1


@dataclass
class TimeSeriesDataset:
    """N equal-length multivariate series with integer class labels."""

    values: np.ndarray  # (N, C, L) float64
    labels: np.ndarray  # (N,) int64 class ids
    class_names: list[str]
    dataset_id: str = "unnamed"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 3:
            raise ValueError(f"values must be (N, C, L), got shape {self.values.shape}")
        if self.labels.shape != (self.values.shape[0],):
            raise ValueError("labels must have one entry per instance")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= len(self.class_names)
        ):
            raise ValueError("labels outside the declared class range")

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def length(self) -> int:
        return self.values.shape[2]


# ---------------------------------------------------------------------------
# .ts parsing


def _parse_bool(token, path, line_no):
    t = token.strip().lower()
    if t in ("true", "false"):
        return t == "true"
    raise ParseError(f"expected true/false, got {token!r}", path, line_no)


def _parse_value(token, path, line_no, col):
    t = token.strip()
    if t == "?":
        return np.nan
    try:
        return float(t)
    except ValueError:
        raise ParseError(f"bad value {token!r}", path, line_no, col) from None


def load_ts(path) -> TimeSeriesDataset:
    """Parse a ``.ts`` file into a dataset; missing markers become NaN."""
    header = {}
    data_started = False
    instances = []  # list of (list-of-channel-lists, raw label)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not data_started:
                if line.lower() == "@data":
                    data_started = True
                    continue
                if not line.startswith("@"):
                    raise ParseError(f"expected header or @data, got {line!r}", path, line_no)
                parts = line.split(None, 1)
                key = parts[0][1:].lower()
                header[key] = parts[1].strip() if len(parts) > 1 else ""
                continue

            parts = line.split(":")
            if len(parts) < 2:
                raise ParseError("data line needs at least one dimension and a label",
                                 path, line_no)
            label_token = parts[-1].strip()
            channels = []
            col = 1
            for dim in parts[:-1]:
                values = [
                    _parse_value(tok, path, line_no, col + dim.index(tok))
                    for tok in dim.split(",")
                ]
                channels.append(values)
                col += len(dim) + 1
            instances.append((channels, label_token))

    if not data_started:
        raise ParseError("no @data section found", path, None)
    if not instances:
        raise ParseError("empty @data section", path, None)

    class_header = header.get("classlabel", "")
    class_parts = class_header.split()
    if not class_parts or not _parse_bool(class_parts[0], path, None):
        raise ParseError("@classLabel must declare true plus the label set", path, None)
    class_names = class_parts[1:]
    if not class_names:
        raise ParseError("@classLabel declares no labels", path, None)
    label_index = {name: i for i, name in enumerate(class_names)}

    n_channels = len(instances[0][0])
    length = len(instances[0][0][0])
    if "univariate" in header:
        univariate = _parse_bool(header["univariate"], path, None)
        if univariate and n_channels != 1:
            raise ParseError(
                f"@univariate true but {n_channels} dimensions found", path, None)

    values = np.empty((len(instances), n_channels, length), dtype=np.float64)
    labels = np.empty(len(instances), dtype=np.int64)
    nan_count = 0
    for i, (channels, label_token) in enumerate(instances):
        if len(channels) != n_channels:
            raise ParseError(
                f"instance {i} has {len(channels)} dimensions, expected {n_channels}",
                path, None)
        for c, vals in enumerate(channels):
            if len(vals) != length:
                raise UnequalLength(
                    f"{path}: instance {i} dimension {c} has length {len(vals)}, "
                    f"expected {length}")
            values[i, c] = vals
        nan_count += int(np.isnan(values[i]).sum())
        if label_token not in label_index:
            raise UnknownClassLabel(
                f"{path}: label {label_token!r} not in declared set {class_names}")
        labels[i] = label_index[label_token]

    return TimeSeriesDataset(
        values=values,
        labels=labels,
        class_names=class_names,
        dataset_id=header.get("problemname", "unnamed"),
        provenance={"source": str(path), "nan_count": nan_count, "normalized": False},
    )


def load_tsv(path) -> TimeSeriesDataset:
    """Parse a single-table TSV: one row per instance, label first column."""
    rows = []
    raw_labels = []
    length = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = line.split("\t")
            if len(tokens) < 2:
                raise ParseError("row needs a label and at least one value", path, line_no)
            raw_labels.append(tokens[0].strip())
            vals = [_parse_value(t, path, line_no, i + 1) for i, t in enumerate(tokens[1:])]
            if length is None:
                length = len(vals)
            elif len(vals) != length:
                raise UnequalLength(
                    f"{path}:{line_no}: row has {len(vals)} values, expected {length}")
            rows.append(vals)
    if not rows:
        raise ParseError("empty file", path, None)

    class_names = sorted(set(raw_labels))
    label_index = {name: i for i, name in enumerate(class_names)}
    values = np.asarray(rows, dtype=np.float64)[:, np.newaxis, :]
    labels = np.asarray([label_index[l] for l in raw_labels], dtype=np.int64)
    nan_count = int(np.isnan(values).sum())
    return TimeSeriesDataset(
        values=values,
        labels=labels,
        class_names=class_names,
        dataset_id="unnamed",
        provenance={"source": str(path), "nan_count": nan_count, "normalized": False},
    )


def load_dataset(path) -> TimeSeriesDataset:
    """Dispatch on extension: ``.ts`` or TSV."""
    p = str(path)
    if p.endswith(".ts"):
        return load_ts(p)
    return load_tsv(p)


def write_ts(path, ds: TimeSeriesDataset) -> None:
    """Write a dataset in the ``.ts`` format (lossless float round trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"@problemName {ds.dataset_id}\n")
        fh.write(f"@univariate {'true' if ds.n_channels == 1 else 'false'}\n")
        if ds.n_channels > 1:
            fh.write(f"@dimension {ds.n_channels}\n")
        fh.write("@equalLength true\n")
        fh.write(f"@seriesLength {ds.length}\n")
        fh.write(f"@classLabel true {' '.join(ds.class_names)}\n")
        fh.write("@data\n")
        for i in range(ds.n_instances):
            dims = []
            for c in range(ds.n_channels):
                dims.append(",".join(
                    "?" if np.isnan(v) else repr(float(v)) for v in ds.values[i, c]))
            fh.write(":".join(dims) + ":" + ds.class_names[ds.labels[i]] + "\n")


# ---------------------------------------------------------------------------
# Preprocessing contract


def znorm_channel(values: np.ndarray) -> np.ndarray:
    # Population std (denominator N); constant channels become all zeros.
    mean = values.mean()
    std = values.std()
    if std == 0.0:
        return np.zeros_like(values)
    return (values - mean) / std


def preprocess(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """NaN imputation followed by per-series per-channel z-normalization.

    NaNs are replaced by the finite mean of the containing channel
    (all-NaN channels become zeros). Normalization uses the population
    standard deviation; constant channels are left as zeros.
    """
    out = np.empty_like(ds.values)
    nan_count = 0
    for i in range(ds.n_instances):
        for c in range(ds.n_channels):
            channel = ds.values[i, c]
            nan_mask = np.isnan(channel)
            if nan_mask.any():
                nan_count += int(nan_mask.sum())
                if nan_mask.all():
                    out[i, c] = 0.0
                    continue
                channel = np.where(nan_mask, channel[~nan_mask].mean(), channel)
            out[i, c] = znorm_channel(channel)
    provenance = dict(ds.provenance)
    provenance.update({"normalized": True, "nan_imputed": nan_count})
    return TimeSeriesDataset(
        values=out,
        labels=ds.labels.copy(),
        class_names=list(ds.class_names),
        dataset_id=ds.dataset_id,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Tensor container


def _sidecar_path(path) -> str:
    return str(path) + ".json"


def save_tensor(path, tensor: np.ndarray, metadata: dict | None = None) -> None:
    """Write a float64 tensor payload plus its JSON sidecar header."""
    arr = np.ascontiguousarray(tensor, dtype=np.float64)
    payload = arr.astype("<f8", copy=False).tobytes()
    header = {
        "version": TENSOR_FORMAT_VERSION,
        "dtype": "<f8",
        "dims": list(arr.shape),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "metadata": metadata or {},
    }
    with open(path, "wb") as fh:
        fh.write(payload)
    with open(_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_tensor(path):
    """Read a tensor container; returns (array, metadata dict)."""
    with open(_sidecar_path(path), "r", encoding="utf-8") as fh:
        header = json.load(fh)
    if header.get("version") != TENSOR_FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: tensor format version {header.get('version')}, "
            f"expected {TENSOR_FORMAT_VERSION}")
    with open(path, "rb") as fh:
        payload = fh.read()
    dims = tuple(header["dims"])
    expected_bytes = int(np.prod(dims, dtype=np.int64)) * 8 if dims else 8
    if len(payload) != expected_bytes:
        raise ChecksumMismatch(
            f"{path}: payload holds {len(payload)} bytes, header dims {dims} "
            f"imply {expected_bytes}")
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header["sha256"]:
        raise ChecksumMismatch(f"{path}: payload digest does not match header")
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
    return arr, header["metadata"]
