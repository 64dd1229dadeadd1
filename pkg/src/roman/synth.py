"""Seeded generators for the four synthetic mechanism-study task families.

All families produce balanced binary, univariate, length-512 series
(500 train / 250 test by default), z-normalized per series with noise
added before normalization.

Randomness comes from the counter-based Philox generator keyed by
(family, seed, stream, instance index), so any instance can be
regenerated in isolation and parallel generation is bit-identical to
sequential generation. Stream 0 holds per-dataset draws (pattern
libraries), streams 1 and 2 hold the train and test instances.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataio import TimeSeriesDataset, znorm_channel
from .errors import InfeasibleGeometry

FAMILIES = ("position", "longrange", "multiscale", "invariance")

_FAMILY_IDS = {name: i + 1 for i, name in enumerate(FAMILIES)}
_STREAM_LIBRARY = 0
_STREAM_TRAIN = 1
_STREAM_TEST = 2

_MAX_REJECTION_TRIES = 10_000


def instance_rng(family: str, seed: int, stream: int, index: int) -> np.random.Generator:
    """Philox stream for one (family, seed, stream, index) combination."""
    if family not in _FAMILY_IDS:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if not 0 <= index < 1 << 48:
        raise ValueError(f"instance index {index} outside the keyed range")
    word = np.uint64(_FAMILY_IDS[family]) << np.uint64(56)
    word |= np.uint64(stream) << np.uint64(48)
    word |= np.uint64(index)
    key = np.array([np.uint64(seed & (1 << 64) - 1), word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class SynthTaskSpec:
    """Family selector plus overrides of the per-family defaults."""

    family: str
    seed: int = 0
    n_train: int = 500
    n_test: int = 250
    length: int = 512
    params: dict = field(default_factory=dict)


@dataclass
class SynthTask:
    """Generated train/test splits plus construction ground truth."""

    train: TimeSeriesDataset
    test: TimeSeriesDataset
    metadata: dict


def generate(spec: SynthTaskSpec) -> SynthTask:
    """Dispatch a SynthTaskSpec to its family generator."""
    generators = {
        "position": gen_position,
        "longrange": gen_longrange,
        "multiscale": gen_multiscale,
        "invariance": gen_invariance,
    }
    if spec.family not in generators:
        raise ValueError(f"unknown family {spec.family!r}; expected one of {FAMILIES}")
    return generators[spec.family](
        seed=spec.seed, n_train=spec.n_train, n_test=spec.n_test,
        length=spec.length, **spec.params)


def _finalize_split(family, seed, series, labels, truths, class_names, split_name):
    values = np.stack(series)[:, np.newaxis, :]
    for i in range(values.shape[0]):
        values[i, 0] = znorm_channel(values[i, 0])
    ds = TimeSeriesDataset(
        values=values,
        labels=np.asarray(labels, dtype=np.int64),
        class_names=class_names,
        dataset_id=f"{family}_seed{seed}",
        provenance={"normalized": True, "family": family, "seed": seed,
                    "split": split_name},
    )
    return ds, truths


def _generate_splits(family, seed, n_train, n_test, make_instance, class_names):
    splits = {}
    truths = {}
    for split_name, stream, n in (("train", _STREAM_TRAIN, n_train),
                                  ("test", _STREAM_TEST, n_test)):
        series, labels, infos = [], [], []
        for i in range(n):
            rng = instance_rng(family, seed, stream, i)
            label = i % 2
            x, info = make_instance(rng, label)
            series.append(x)
            labels.append(label)
            infos.append(info)
        splits[split_name], truths[split_name] = _finalize_split(
            family, seed, series, labels, infos, class_names, split_name)
    return splits, truths


# ---------------------------------------------------------------------------
# Coarse position awareness


def gen_position(seed=0, n_train=500, n_test=250, length=512, d_min=32,
                 s_min=128, gap=16, amp_low=4.0, amp_high=4.5,
                 noise_sigma=1.0) -> SynthTask:
    """Two identical spikes placed symmetrically; the label is the coarse
    border-distance regime.

    The admissible distance interval [d_min, s_min) is split at its
    midpoint with gap/2 removed on each side: class 0 draws d from the
    near-border range, class 1 from the near-center range.
    """
    mid = (d_min + s_min) // 2
    class_ranges = ((d_min, mid - gap // 2), (mid + gap - gap // 2, s_min))
    for lo, hi in class_ranges:
        if hi <= lo:
            raise InfeasibleGeometry(
                f"empty class range [{lo}, {hi}) after applying gap {gap}")
    if length - 1 - (s_min - 1) <= s_min - 1:
        raise InfeasibleGeometry(
            f"length {length} too short for center margin {s_min}")

    def make_instance(rng, label):
        lo, hi = class_ranges[label]
        d = int(rng.integers(lo, hi))
        amp = rng.uniform(amp_low, amp_high)
        x = rng.normal(0.0, noise_sigma, size=length)
        x[d] += amp
        x[length - 1 - d] += amp
        return x, {"d": d, "amplitude": amp}

    splits, truths = _generate_splits("position", seed, n_train, n_test,
                                      make_instance, ["0", "1"])
    metadata = {
        "family": "position", "seed": seed, "length": length,
        "d_min": d_min, "s_min": s_min, "gap": gap,
        "class_ranges": [list(r) for r in class_ranges],
        "amplitude_range": [amp_low, amp_high], "noise_sigma": noise_sigma,
        "instances": truths,
    }
    return SynthTask(train=splits["train"], test=splits["test"], metadata=metadata)


# ---------------------------------------------------------------------------
# Long-range correlation


def _sample_spike_offsets(rng, window_len, n_spikes, min_spacing):
    # Sorted spike offsets inside [0, window_len) with pairwise spacing
    # at least min_spacing, by rejection.
    if (n_spikes - 1) * min_spacing >= window_len:
        raise InfeasibleGeometry(
            f"{n_spikes} spikes with spacing {min_spacing} cannot fit in "
            f"{window_len} samples")
    for _ in range(_MAX_REJECTION_TRIES):
        offsets = np.sort(rng.choice(window_len, size=n_spikes, replace=False))
        if np.diff(offsets).min() >= min_spacing:
            return offsets
    raise InfeasibleGeometry("spike placement rejection sampling exhausted")


def pattern_distance(a, b) -> int:
    """Total displacement between two sorted spike-offset vectors."""
    return int(np.abs(np.asarray(a) - np.asarray(b)).sum())


def _sample_pattern_library(rng, n_patterns, window_len, n_spikes, min_spacing,
                            min_distance):
    patterns = []
    for _ in range(_MAX_REJECTION_TRIES):
        cand = _sample_spike_offsets(rng, window_len, n_spikes, min_spacing)
        if all(pattern_distance(cand, p) >= min_distance for p in patterns):
            patterns.append(cand)
            if len(patterns) == n_patterns:
                return patterns
    raise InfeasibleGeometry(
        f"could not draw {n_patterns} patterns at pairwise distance "
        f">= {min_distance}")


def gen_longrange(seed=0, n_train=500, n_test=250, length=512, burst_len=33,
                  n_spikes=4, min_spacing=6, min_pattern_distance=6,
                  library_size=3, amplitude=4.0, noise_sigma=1.0) -> SynthTask:
    """Two sparse bursts at fixed distant positions; the label says
    whether they carry the same library pattern (class 0) or different
    patterns (class 1).
    """
    if library_size < 2:
        raise InfeasibleGeometry(
            f"library of {library_size} patterns cannot produce the "
            f"different-pattern class")
    centers = (length // 6, 5 * length // 6)
    starts = tuple(c - burst_len // 2 for c in centers)
    if starts[0] < 0 or starts[1] + burst_len > length:
        raise InfeasibleGeometry("burst windows fall outside the series")
    if starts[0] + burst_len > starts[1]:
        raise InfeasibleGeometry("burst windows overlap")

    lib_rng = instance_rng("longrange", seed, _STREAM_LIBRARY, 0)
    library = _sample_pattern_library(lib_rng, library_size, burst_len,
                                      n_spikes, min_spacing,
                                      min_pattern_distance)

    def make_instance(rng, label):
        first = int(rng.integers(library_size))
        if label == 0:
            second = first
        else:
            second = int(rng.integers(library_size - 1))
            if second >= first:
                second += 1
        x = rng.normal(0.0, noise_sigma, size=length)
        for start, pat in ((starts[0], first), (starts[1], second)):
            x[start + library[pat]] += amplitude
        return x, {"patterns": [first, second]}

    splits, truths = _generate_splits("longrange", seed, n_train, n_test,
                                      make_instance, ["0", "1"])
    metadata = {
        "family": "longrange", "seed": seed, "length": length,
        "burst_len": burst_len, "burst_starts": list(starts),
        "burst_centers": list(centers), "n_spikes": n_spikes,
        "min_spacing": min_spacing,
        "min_pattern_distance": min_pattern_distance,
        "pattern_distance_metric": "total offset displacement (L1 on sorted offsets)",
        "library_size": library_size,
        "library": [p.tolist() for p in library],
        "amplitude": amplitude, "noise_sigma": noise_sigma,
        "instances": truths,
    }
    return SynthTask(train=splits["train"], test=splits["test"], metadata=metadata)


# ---------------------------------------------------------------------------
# Multiscale interaction


def gen_multiscale(seed=0, n_train=500, n_test=250, length=512,
                   coarse_cycles=1, burst_len=32, fine_cycles=4, mask_len=96,
                   n_phases=4, fine_amp=4.0, coarse_amp=2.0,
                   noise_sigma=0.75) -> SynthTask:
    """Full-length coarse cosine with a centrally masked region and a
    fine burst inside the mask; the label is coarse/fine phase agreement
    (class 0 agree, class 1 disagree).
    """
    mask_start = (length - mask_len) // 2
    burst_start = (length - burst_len) // 2
    if burst_start < mask_start or burst_start + burst_len > mask_start + mask_len:
        raise InfeasibleGeometry(
            f"burst of {burst_len} samples not contained in mask of {mask_len}")
    phases = 2.0 * np.pi * np.arange(n_phases) / n_phases
    t = np.arange(length)
    coarse_arg = 2.0 * np.pi * coarse_cycles * t / length
    tb = np.arange(burst_len)
    fine_arg = 2.0 * np.pi * fine_cycles * tb / burst_len

    def make_instance(rng, label):
        k_coarse = int(rng.integers(n_phases))
        if label == 0:
            k_fine = k_coarse
        else:
            k_fine = (k_coarse + 1 + int(rng.integers(n_phases - 1))) % n_phases
        x = rng.normal(0.0, noise_sigma, size=length)
        coarse = coarse_amp * np.cos(coarse_arg + phases[k_coarse])
        coarse[mask_start:mask_start + mask_len] = 0.0
        x += coarse
        x[burst_start:burst_start + burst_len] += fine_amp * np.cos(
            fine_arg + phases[k_fine])
        return x, {"coarse_phase": k_coarse, "fine_phase": k_fine}

    splits, truths = _generate_splits("multiscale", seed, n_train, n_test,
                                      make_instance, ["0", "1"])
    metadata = {
        "family": "multiscale", "seed": seed, "length": length,
        "coarse_cycles": coarse_cycles, "burst_len": burst_len,
        "burst_start": burst_start, "fine_cycles": fine_cycles,
        "mask_len": mask_len, "mask_start": mask_start,
        "n_phases": n_phases, "phases": phases.tolist(),
        "fine_amp": fine_amp, "coarse_amp": coarse_amp,
        "noise_sigma": noise_sigma,
        "instances": truths,
    }
    return SynthTask(train=splits["train"], test=splits["test"], metadata=metadata)


# ---------------------------------------------------------------------------
# Full positional invariance (negative control)


def gen_invariance(seed=0, n_train=500, n_test=250, length=512, motif_len=33,
                   n_spikes=4, min_spacing=3, n_distractors=2,
                   distractors_per_series=1, min_pattern_distance=6,
                   min_separation=16, amplitude=6.0,
                   noise_sigma=1.0) -> SynthTask:
    """Motif-presence task aligned with translation invariance: class 1
    contains the target motif at a random position, class 0 contains
    only distractor motifs, with equal total motif counts per class.
    """
    n_slots = distractors_per_series + 1
    if n_slots * motif_len > length:
        raise InfeasibleGeometry(
            f"{n_slots} motifs of {motif_len} samples cannot fit in {length}")

    lib_rng = instance_rng("invariance", seed, _STREAM_LIBRARY, 0)
    library = _sample_pattern_library(lib_rng, n_distractors + 1, motif_len,
                                      n_spikes, min_spacing,
                                      min_pattern_distance)
    target, distractors = library[0], library[1:]
    max_start = length - motif_len

    def draw_starts(rng):
        for _ in range(_MAX_REJECTION_TRIES):
            starts = rng.integers(0, max_start + 1, size=n_slots)
            if n_slots == 1:
                return starts
            diffs = np.abs(starts[:, None] - starts[None, :])
            if diffs[np.triu_indices(n_slots, k=1)].min() >= min_separation:
                return starts
        raise InfeasibleGeometry(
            f"could not place {n_slots} motifs with start separation "
            f">= {min_separation}")

    def make_instance(rng, label):
        starts = draw_starts(rng)
        slot_patterns = rng.integers(0, n_distractors, size=n_slots)
        target_slot = -1
        if label == 1:
            target_slot = int(rng.integers(n_slots))
        x = rng.normal(0.0, noise_sigma, size=length)
        for slot in range(n_slots):
            pat = target if slot == target_slot else distractors[slot_patterns[slot]]
            x[starts[slot] + pat] += amplitude
        return x, {
            "starts": starts.tolist(),
            "target_slot": target_slot,
            "distractor_patterns": slot_patterns.tolist(),
        }

    splits, truths = _generate_splits("invariance", seed, n_train, n_test,
                                      make_instance, ["0", "1"])
    metadata = {
        "family": "invariance", "seed": seed, "length": length,
        "motif_len": motif_len, "n_spikes": n_spikes,
        "min_spacing": min_spacing, "n_distractors": n_distractors,
        "distractors_per_series": distractors_per_series,
        "min_pattern_distance": min_pattern_distance,
        "pattern_distance_metric": "total offset displacement (L1 on sorted offsets)",
        "min_separation": min_separation,
        "target_pattern": target.tolist(),
        "distractor_library": [p.tolist() for p in distractors],
        "amplitude": amplitude, "noise_sigma": noise_sigma,
        "instances": truths,
    }
    return SynthTask(train=splits["train"], test=splits["test"], metadata=metadata)
