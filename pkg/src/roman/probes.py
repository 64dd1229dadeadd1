"""Downstream probe classifiers used by the benchmark harness.

Two probes share one random-kernel feature extractor and one ridge head:

* the pooled probe summarizes every kernel's response by its proportion
  of positive values (PPV), which suppresses absolute position;
* the flatten probe keeps the thresholded response at every time step
  (locally smoothed but never downsampled), so position is fully
  preserved and the head can read temporal layout directly.

Kernels are 9-tap, random-weight, random-dilation, and mix a random
subset of input channels, so on routed inputs they can combine
pseudochannels from different scales and windows. The head is ridge
regression on one-vs-rest targets with the regularization strength
chosen by closed-form leave-one-out error.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from numba import config as _numba_config
from numba import njit, prange, set_num_threads

from .errors import ChecksumMismatch, DegenerateFeatures, ShapeMismatch, VersionMismatch

# The GNU OpenMP layer is always present next to this package's numba
# builds; selecting it up front avoids the noisy TBB-version probe.
_numba_config.THREADING_LAYER = "omp"


def _pin_threads(threads):
    """Clamp the numba worker count; None leaves it unchanged."""
    if threads is not None:
        set_num_threads(max(1, min(int(threads), _numba_config.NUMBA_NUM_THREADS)))


MODEL_FORMAT_VERSION = 1

DEFAULT_LAMBDA_GRID = tuple(10.0 ** k for k in range(-3, 4))

#: Instances used for the per-kernel bias quantile at fit time.
BIAS_SAMPLE_SIZE = 64


@dataclass(frozen=True)
class PooledProbeConfig:
    """Pooled random-kernel probe settings.

    Dilations are sampled log-uniformly up to the receptive-field bound
    (L - 1) / (kernel_length - 1), which for 9-tap kernels is (L - 1) / 8.
    Half of the kernels use centered zero padding.
    """

    n_kernels: int = 2000
    kernel_length: int = 9
    max_dilation: int | None = None  # None: receptive-field bound
    max_channel_mix: int | None = None  # None: min(C, kernel_length)
    use_padding: bool = True
    binary_features: bool = False
    channel_lag_fraction: float = 0.0
    response_smoothing: int = 0
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    seed: int = 0


@dataclass(frozen=True)
class FlattenProbeConfig:
    """Flatten probe settings.

    The dilation cap keeps each kernel's receptive field local, the way
    a shallow convolutional stack is local; layout information is then
    carried by the per-position features rather than by wide kernels.
    Valid positions only, so every feature has a fixed input alignment.
    """

    n_kernels: int = 512
    kernel_length: int = 9
    max_dilation: int | None = 4
    max_channel_mix: int | None = None  # None: min(C, kernel_length)
    use_padding: bool = False
    binary_features: bool = False
    channel_lag_fraction: float = 0.5
    response_smoothing: int = 16  # stride-1 box width over thresholded responses
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    seed: int = 0


@dataclass
class KernelBank:
    """Sampled kernels: per-kernel channel subsets, weights, per-channel
    temporal lags, dilations, zero-padding widths and the quantile level
    used to place the bias."""

    channels: list  # list of int arrays
    weights: list   # list of (n_ch, kernel_length) float arrays
    lags: list      # list of int arrays, one lag per mixed channel
    dilations: np.ndarray
    paddings: np.ndarray
    quantiles: np.ndarray

    def __len__(self):
        return len(self.dilations)


def sample_kernels(rng, n_kernels, n_channels, length, kernel_length,
                   max_dilation=None, use_padding=True, max_channel_mix=None,
                   channel_lag_fraction=0.0) -> KernelBank:
    """Draw the kernel bank for a given input shape.

    Half of the kernels (chosen at random) use centered zero padding,
    the other half only valid positions, following the random-kernel
    classifier convention. With a nonzero lag fraction, kernels that mix
    several channels read each channel at its own random temporal lag,
    so one unit can align content that sits at different offsets in
    different channels; out-of-range taps read as zero.
    """
    if length <= kernel_length:
        raise ShapeMismatch(
            f"series length {length} too short for {kernel_length}-tap kernels")
    bound = (length - 1) // (kernel_length - 1)
    cap = bound if max_dilation is None else min(max_dilation, bound)
    cap = max(cap, 1)
    log_cap = np.log2(cap)
    max_mix = min(n_channels, kernel_length)
    if max_channel_mix is not None:
        max_mix = min(max_mix, max(1, max_channel_mix))

    max_lag = int(channel_lag_fraction * length)

    channels, weights, lags = [], [], []
    dilations = np.empty(n_kernels, dtype=np.int64)
    paddings = np.zeros(n_kernels, dtype=np.int64)
    for i in range(n_kernels):
        n_ch = int(rng.integers(1, max_mix + 1))
        channels.append(np.sort(rng.choice(n_channels, size=n_ch, replace=False)))
        w = rng.normal(0.0, 1.0, size=(n_ch, kernel_length))
        w -= w.mean()
        weights.append(w)
        if n_ch > 1 and max_lag > 0:
            lag = rng.integers(-max_lag, max_lag + 1, size=n_ch)
            lag[0] = 0
        else:
            lag = np.zeros(n_ch, dtype=np.int64)
        lags.append(lag.astype(np.int64))
        dilations[i] = min(int(2.0 ** rng.uniform(0.0, log_cap)), cap) if cap > 1 else 1
        if use_padding and rng.integers(2) == 1:
            paddings[i] = ((kernel_length - 1) * dilations[i]) // 2
    quantiles = rng.uniform(0.0, 1.0, size=n_kernels)
    return KernelBank(channels=channels, weights=weights, lags=lags,
                      dilations=dilations, paddings=paddings, quantiles=quantiles)


@njit(cache=True, parallel=True)
def _kernel_features(values, ch_counts, ch_flat, lag_flat, w_flat, dilations,
                     paddings, klen, quantiles, biases, fit_mode, sub_idx,
                     pooled, binary, smooth, offsets):
    # Each kernel writes only its own feature slice, so the parallel
    # loop is bit-identical to the sequential one.
    n = values.shape[0]
    length = values.shape[2]
    n_kernels = ch_counts.size
    feats = np.zeros((n, offsets[n_kernels]))
    ch_starts = np.zeros(n_kernels + 1, dtype=np.int64)
    for k in range(n_kernels):
        ch_starts[k + 1] = ch_starts[k] + ch_counts[k]
    for k in prange(n_kernels):
        d = dilations[k]
        pad = paddings[k]
        out_len = length + 2 * pad - (klen - 1) * d
        resp = np.zeros((n, out_len))
        for ci in range(ch_counts[k]):
            c = ch_flat[ch_starts[k] + ci]
            lag = lag_flat[ch_starts[k] + ci]
            for j in range(klen):
                w = w_flat[ch_starts[k] * klen + ci * klen + j]
                base = j * d - pad + lag
                t_lo = max(0, -base)
                t_hi = min(out_len, length - base)
                for i in range(n):
                    for t in range(t_lo, t_hi):
                        resp[i, t] += w * values[i, c, base + t]
        if fit_mode:
            biases[k] = np.quantile(resp[sub_idx].ravel(), quantiles[k])
        bias = biases[k]
        if pooled:
            for i in range(n):
                count = 0
                for t in range(out_len):
                    if resp[i, t] > bias:
                        count += 1
                feats[i, offsets[k]] = count / out_len
        else:
            for i in range(n):
                for t in range(out_len):
                    value = resp[i, t] - bias
                    if binary:
                        resp[i, t] = 1.0 if value > 0.0 else 0.0
                    else:
                        resp[i, t] = value if value > 0.0 else 0.0
            if smooth > 1:
                width = min(smooth, out_len)
                for i in range(n):
                    acc = 0.0
                    for t in range(width):
                        acc += resp[i, t]
                    feats[i, offsets[k]] = acc / width
                    for t in range(out_len - width):
                        acc += resp[i, t + width] - resp[i, t]
                        feats[i, offsets[k] + t + 1] = acc / width
            else:
                for i in range(n):
                    for t in range(out_len):
                        feats[i, offsets[k] + t] = resp[i, t]
    return feats


def _feature_offsets(bank: "KernelBank", length, kernel_length, pooled, smooth):
    if pooled:
        widths = np.ones(len(bank), dtype=np.int64)
    else:
        widths = length + 2 * bank.paddings - (kernel_length - 1) * bank.dilations
        if smooth > 1:
            widths = np.maximum(widths - (smooth - 1), 1)
    return np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)


def _extract_features(values, bank, biases, pooled, fit_mode, kernel_length,
                      bias_rng=None, binary=False, smooth=0):
    """All kernel features as one (N, F) matrix; in fit mode biases are
    set to per-kernel quantiles of the responses on a training
    subsample."""
    n = values.shape[0]
    ch_counts = np.array([len(c) for c in bank.channels], dtype=np.int64)
    ch_flat = (np.concatenate(bank.channels).astype(np.int64)
               if len(bank) else np.empty(0, dtype=np.int64))
    lag_flat = (np.concatenate(bank.lags).astype(np.int64)
                if len(bank) else np.empty(0, dtype=np.int64))
    w_flat = (np.concatenate([w.ravel() for w in bank.weights])
              if len(bank) else np.empty(0))
    offsets = _feature_offsets(bank, values.shape[2], kernel_length, pooled, smooth)
    if fit_mode:
        biases = np.empty(len(bank))
        sub = min(BIAS_SAMPLE_SIZE, n)
        sub_idx = np.sort(bias_rng.choice(n, size=sub, replace=False))
    else:
        sub_idx = np.zeros(1, dtype=np.int64)
    feats = _kernel_features(
        np.ascontiguousarray(values), ch_counts, ch_flat, lag_flat, w_flat,
        bank.dilations, bank.paddings, kernel_length, bank.quantiles, biases,
        fit_mode, sub_idx.astype(np.int64), pooled, binary, smooth, offsets)
    return feats, biases


# ---------------------------------------------------------------------------
# Ridge head with closed-form leave-one-out selection


def ridge_loo_residuals(features, targets, lam, eig=None):
    """Exact leave-one-out residuals of ridge on the given features.

    Computed from the eigendecomposition of the Gram matrix via
    e_i = (y_i - yhat_i) / (1 - h_ii); identical to refitting with row i
    removed.
    """
    if eig is None:
        gram = features @ features.T
        eig = np.linalg.eigh(gram)
    evals, evecs = eig
    evals = np.maximum(evals, 0.0)
    shrink = evals / (evals + lam)
    coeff = evecs.T @ targets
    fitted = evecs @ (shrink[:, np.newaxis] * coeff)
    leverage = (evecs ** 2 * shrink).sum(axis=1)
    return (targets - fitted) / (1.0 - leverage)[:, np.newaxis]


def fit_ridge_gcv(features, targets, lambda_grid=DEFAULT_LAMBDA_GRID):
    """Ridge weights with the penalty chosen by mean squared LOO error.

    Returns (weights, chosen_lambda). Weights solve the regularized
    normal equations for the standardized feature matrix as given
    (intercept column included by the caller, penalized like any other
    feature).
    """
    gram = features @ features.T
    eig = np.linalg.eigh(gram)
    best_lam, best_score = None, np.inf
    for lam in lambda_grid:
        residuals = ridge_loo_residuals(features, targets, lam, eig=eig)
        score = float(np.mean(residuals ** 2))
        if score < best_score:
            best_lam, best_score = lam, score
    evals, evecs = eig
    evals = np.maximum(evals, 0.0)
    dual = evecs @ ((evecs.T @ targets) / (evals + best_lam)[:, np.newaxis])
    weights = features.T @ dual
    return weights, best_lam


# ---------------------------------------------------------------------------
# Probe models


@dataclass
class ProbeModel:
    """Fitted probe: kernel bank, biases, feature scaling and ridge head."""

    kind: str                    # "pooled" or "flatten"
    input_shape: tuple           # (C, L) the model was fitted on
    classes: np.ndarray
    bank: KernelBank
    biases: np.ndarray
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    weights: np.ndarray          # (n_features + 1, n_classes), last row intercept
    chosen_lambda: float
    config: dict = field(default_factory=dict)


def _standardize(features, mean, scale):
    return (features - mean) / scale


def _fit_probe(values, labels, kind, n_kernels, kernel_length, max_dilation,
               use_padding, max_channel_mix, binary_features,
               channel_lag_fraction, response_smoothing, lambda_grid, seed,
               threads=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise ValueError(f"training batch must be (N, C, L), got {values.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least 2 classes to fit a probe")

    rng = np.random.default_rng(seed)
    bank = sample_kernels(rng, n_kernels, values.shape[1], values.shape[2],
                          kernel_length, max_dilation, use_padding, max_channel_mix,
                          channel_lag_fraction)
    _pin_threads(threads)
    features, biases = _extract_features(values, bank, None, kind == "pooled",
                                         fit_mode=True, kernel_length=kernel_length,
                                         bias_rng=rng, binary=binary_features,
                                         smooth=response_smoothing)

    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    constant = scale == 0.0
    if constant.all():
        raise DegenerateFeatures("every extracted feature is constant")
    scale = np.where(constant, 1.0, scale)
    features = _standardize(features, mean, scale)
    design = np.concatenate([features, np.ones((features.shape[0], 1))], axis=1)

    targets = np.where(labels[:, np.newaxis] == classes[np.newaxis, :], 1.0, -1.0)
    weights, chosen = fit_ridge_gcv(design, targets, lambda_grid)

    return ProbeModel(
        kind=kind,
        input_shape=values.shape[1:],
        classes=classes,
        bank=bank,
        biases=biases,
        feature_mean=mean,
        feature_scale=scale,
        weights=weights,
        chosen_lambda=chosen,
        config={
            "n_kernels": n_kernels,
            "kernel_length": kernel_length,
            "max_dilation": max_dilation,
            "use_padding": use_padding,
            "max_channel_mix": max_channel_mix,
            "binary_features": binary_features,
            "channel_lag_fraction": channel_lag_fraction,
            "response_smoothing": response_smoothing,
            "lambda_grid": list(lambda_grid),
            "seed": seed,
        },
    )


def fit_pooled_probe(values, labels, config: PooledProbeConfig | None = None,
                     threads=None) -> ProbeModel:
    """Fit the pooled (PPV) probe on a (N, C, L) batch."""
    cfg = config or PooledProbeConfig()
    return _fit_probe(values, labels, "pooled", cfg.n_kernels, cfg.kernel_length,
                      cfg.max_dilation, cfg.use_padding, cfg.max_channel_mix,
                      cfg.binary_features, cfg.channel_lag_fraction,
                      cfg.response_smoothing, cfg.lambda_grid, cfg.seed, threads)


def fit_flatten_probe(values, labels, config: FlattenProbeConfig | None = None,
                      threads=None) -> ProbeModel:
    """Fit the position-preserving flatten probe on a (N, C, L) batch."""
    cfg = config or FlattenProbeConfig()
    return _fit_probe(values, labels, "flatten", cfg.n_kernels, cfg.kernel_length,
                      cfg.max_dilation, cfg.use_padding, cfg.max_channel_mix,
                      cfg.binary_features, cfg.channel_lag_fraction,
                      cfg.response_smoothing, cfg.lambda_grid, cfg.seed, threads)


def decision_scores(model: ProbeModel, values, threads=None) -> np.ndarray:
    """One-vs-rest scores, shape (N, n_classes)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3 or values.shape[1:] != tuple(model.input_shape):
        raise ShapeMismatch(
            f"expected batch of shape (N, {model.input_shape[0]}, "
            f"{model.input_shape[1]}), got {values.shape}")
    if values.shape[0] == 0:
        return np.empty((0, model.classes.size))
    _pin_threads(threads)
    features, _ = _extract_features(values, model.bank, model.biases,
                                    model.kind == "pooled", fit_mode=False,
                                    kernel_length=model.config["kernel_length"],
                                    binary=model.config.get("binary_features", False),
                                    smooth=model.config.get("response_smoothing", 0))
    features = _standardize(features, model.feature_mean, model.feature_scale)
    design = np.concatenate([features, np.ones((features.shape[0], 1))], axis=1)
    return design @ model.weights


def predict(model: ProbeModel, values, threads=None) -> np.ndarray:
    """Predicted class ids; score ties resolve toward the lowest class."""
    scores = decision_scores(model, values, threads=threads)
    if scores.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return model.classes[np.argmax(scores, axis=1)]


# ---------------------------------------------------------------------------
# Model serialization: versioned binary blob, byte-deterministic


_MAGIC = b"RMPROBE1"


def _model_arrays(model: ProbeModel):
    arrays = {
        "classes": model.classes.astype(np.int64),
        "dilations": model.bank.dilations.astype(np.int64),
        "paddings": model.bank.paddings.astype(np.int64),
        "quantiles": model.bank.quantiles.astype(np.float64),
        "biases": model.biases.astype(np.float64),
        "feature_mean": model.feature_mean.astype(np.float64),
        "feature_scale": model.feature_scale.astype(np.float64),
        "weights": model.weights.astype(np.float64),
    }
    for k in range(len(model.bank)):
        arrays[f"kernel_channels_{k}"] = model.bank.channels[k].astype(np.int64)
        arrays[f"kernel_lags_{k}"] = model.bank.lags[k].astype(np.int64)
        arrays[f"kernel_weights_{k}"] = model.bank.weights[k].astype(np.float64)
    return arrays


def save_model(path, model: ProbeModel) -> None:
    """Write the model as one self-describing binary blob."""
    arrays = _model_arrays(model)
    manifest = []
    payload = bytearray()
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        manifest.append({
            "name": name,
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": len(payload),
            "nbytes": len(data),
        })
        payload.extend(data)
    header = {
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "input_shape": list(model.input_shape),
        "chosen_lambda": model.chosen_lambda,
        "config": model.config,
        "manifest": manifest,
        "sha256": hashlib.sha256(bytes(payload)).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(header_bytes).to_bytes(8, "little"))
        fh.write(header_bytes)
        fh.write(bytes(payload))


def load_model(path) -> ProbeModel:
    """Read a model blob back; round trip is bit-exact."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise VersionMismatch(f"{path}: not a probe model blob")
        header_len = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        payload = fh.read()
    if header.get("version") != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: model format version {header.get('version')}, "
            f"expected {MODEL_FORMAT_VERSION}")
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise ChecksumMismatch(f"{path}: payload digest does not match header")

    arrays = {}
    for entry in header["manifest"]:
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        arrays[entry["name"]] = np.frombuffer(payload[lo:hi], dtype=entry["dtype"]).reshape(
            entry["shape"]).copy()

    n_kernels = len(arrays["dilations"])
    bank = KernelBank(
        channels=[arrays[f"kernel_channels_{k}"] for k in range(n_kernels)],
        weights=[arrays[f"kernel_weights_{k}"] for k in range(n_kernels)],
        lags=[arrays[f"kernel_lags_{k}"] for k in range(n_kernels)],
        dilations=arrays["dilations"],
        paddings=arrays["paddings"],
        quantiles=arrays["quantiles"],
    )
    return ProbeModel(
        kind=header["kind"],
        input_shape=tuple(header["input_shape"]),
        classes=arrays["classes"],
        bank=bank,
        biases=arrays["biases"],
        feature_mean=arrays["feature_mean"],
        feature_scale=arrays["feature_scale"],
        weights=arrays["weights"],
        chosen_lambda=header["chosen_lambda"],
        config=header["config"],
    )
