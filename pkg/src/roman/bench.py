"""Experiment grids, archive-style summaries and the voting-ensemble
protocol.

A grid run produces one record per (dataset, config, seed) holding the
test accuracy and the three timing components: operator preprocessing
time, probe fitting time and prediction time. Phase metrics derive as

    T_train = t_roman + t_fit        T_infer = t_roman + t_predict

and the single-scale baseline still runs the identity-form operator, so
its t_roman reflects the same wrapper cost.

Summaries compare each configuration against the single-scale baseline:
accuracy differences are averaged across seeds per dataset first, a
dataset counts as a tie when |mean difference| <= 0.005, and archive
level statistics are medians and quartiles (linear interpolation
between closest ranks, inclusive) over per-dataset values. Time ratios
divide seed-mean phase times per dataset and are median-aggregated.

Grid cells are pure functions of (dataset, config, seed) and safe to
dispatch concurrently; the runner still executes them one at a time so
the single-threaded timing sections never contend for cores.
"""

import csv
import io as _stdio
import json
import logging
import time
from dataclasses import asdict, dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .dataio import TimeSeriesDataset
from .errors import MissingBaseline, MissingMember
from .probes import (
    FlattenProbeConfig,
    PooledProbeConfig,
    fit_flatten_probe,
    fit_pooled_probe,
    predict,
)
from .routing import RomanConfig, transform_batch

logger = logging.getLogger(__name__)

TIE_MARGIN = 0.005

# Absolute guard so comparisons sitting exactly on the tie margin are
# not pushed over it by float rounding of accuracy differences.
_MARGIN_EPS = 1e-9

#: Fixed column order of the records CSV.
RECORD_COLUMNS = (
    "dataset", "probe", "scales", "alpha", "seed", "accuracy",
    "t_roman", "t_fit", "t_predict", "status", "error",
)

SUMMARY_COLUMNS = (
    "config", "baseline", "probe", "wins", "ties", "losses",
    "acc_diff_median", "acc_diff_q1", "acc_diff_q3",
    "abs_acc_diff_median", "abs_acc_diff_q1", "abs_acc_diff_q3",
    "train_ratio", "infer_ratio", "n_datasets",
)


@dataclass
class BenchmarkRecord:
    """Outcome of one (dataset, config, seed) cell."""

    dataset: str
    probe: str
    scales: int
    alpha: float
    seed: int
    accuracy: float = float("nan")
    t_roman: float = 0.0
    t_fit: float = 0.0
    t_predict: float = 0.0
    status: str = "ok"
    error: str | None = None
    predictions: list | None = None
    labels: list | None = None

    @property
    def t_train(self) -> float:
        return self.t_roman + self.t_fit

    @property
    def t_infer(self) -> float:
        return self.t_roman + self.t_predict


@dataclass
class SummaryRow:
    """Archive-level comparison of one configuration vs the baseline."""

    config: str
    baseline: str
    probe: str
    wins: int
    ties: int
    losses: int
    acc_diff_median: float
    acc_diff_q1: float
    acc_diff_q3: float
    abs_acc_diff_median: float
    abs_acc_diff_q1: float
    abs_acc_diff_q3: float
    train_ratio: float
    infer_ratio: float
    n_datasets: int


@dataclass
class DatasetPair:
    """A named train/test split, the unit the grid iterates over."""

    dataset_id: str
    train: TimeSeriesDataset
    test: TimeSeriesDataset


PROBE_FITTERS = {
    "pooled": (fit_pooled_probe, PooledProbeConfig),
    "flatten": (fit_flatten_probe, FlattenProbeConfig),
}


def run_cell(pair: DatasetPair, config: RomanConfig, seed: int, probe: str,
             probe_overrides: dict | None = None, store_predictions: bool = False,
             timed_single_thread: bool = True) -> BenchmarkRecord:
    """Run one grid cell; failures are captured in the record."""
    fit_fn, cfg_cls = PROBE_FITTERS[probe]
    scales = config.scales if config.scales is not None else -1
    record = BenchmarkRecord(dataset=pair.dataset_id, probe=probe,
                             scales=scales, alpha=config.alpha, seed=seed)
    threads = 1 if timed_single_thread else None
    try:
        probe_cfg = cfg_cls(seed=seed, **(probe_overrides or {}))
        with threadpool_limits(limits=threads):
            t0 = time.perf_counter()
            train_routed, _ = transform_batch(pair.train.values, config)
            test_routed, _ = transform_batch(pair.test.values, config)
            record.t_roman = time.perf_counter() - t0

            t0 = time.perf_counter()
            model = fit_fn(train_routed, pair.train.labels, probe_cfg,
                           threads=threads)
            record.t_fit = time.perf_counter() - t0

            t0 = time.perf_counter()
            predicted = predict(model, test_routed, threads=threads)
            record.t_predict = time.perf_counter() - t0

        record.accuracy = float((predicted == pair.test.labels).mean())
        if store_predictions:
            record.predictions = predicted.tolist()
            record.labels = pair.test.labels.tolist()
    except Exception as exc:  # per-record failure must not kill the grid
        logger.warning("cell failed (%s, S=%s, seed=%d): %s",
                       pair.dataset_id, scales, seed, exc)
        record.status = "error"
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def run_grid(pairs, configs, seeds, probe="pooled", probe_overrides=None,
             store_predictions=False, timed_single_thread=True):
    """One record per (dataset, config, seed), in that nesting order."""
    records = []
    for pair in pairs:
        for config in configs:
            for seed in seeds:
                records.append(run_cell(pair, config, seed, probe,
                                        probe_overrides, store_predictions,
                                        timed_single_thread))
    return records


# ---------------------------------------------------------------------------
# Summaries


def _quartiles(values):
    med, q1, q3 = np.percentile(np.asarray(values, dtype=np.float64),
                                [50, 25, 75], method="linear")
    return float(med), float(q1), float(q3)


def _config_key(record: BenchmarkRecord):
    return (record.probe, record.scales, record.alpha)


def _config_label(key):
    probe, scales, alpha = key
    return f"S={scales},alpha={alpha:g},probe={probe}"


def summarize(records, baseline_scales: int = 1, baseline_alpha: float | None = None):
    """Archive-level rows comparing every configuration vs the baseline.

    Datasets with a failed record on either side of a comparison are
    dropped from that comparison (pairwise exclusion, logged).
    """
    by_key = {}
    for rec in records:
        by_key.setdefault(_config_key(rec), {}).setdefault(rec.dataset, []).append(rec)

    baselines = {key: datasets for key, datasets in by_key.items()
                 if key[1] == baseline_scales
                 and (baseline_alpha is None or key[2] == baseline_alpha)}
    if not baselines:
        raise MissingBaseline(f"no records with scales={baseline_scales}")

    rows = []
    for key in sorted(by_key, key=_config_label):
        probe = key[0]
        base_key = next((bk for bk in baselines if bk[0] == probe), None)
        if base_key is None:
            raise MissingBaseline(f"no baseline records for probe {probe!r}")
        if key == base_key:
            continue
        base_datasets = by_key[base_key]

        diffs, abs_diffs, train_ratios, infer_ratios = [], [], [], []
        for dataset, recs in sorted(by_key[key].items()):
            if dataset not in base_datasets:
                raise MissingBaseline(
                    f"dataset {dataset!r} has no baseline records")
            base_recs = base_datasets[dataset]
            if any(r.status != "ok" for r in recs + base_recs):
                logger.warning("dropping dataset %r from %s comparison: "
                               "failed records", dataset, _config_label(key))
                continue
            base_by_seed = {r.seed: r for r in base_recs}
            missing = [r.seed for r in recs if r.seed not in base_by_seed]
            if missing:
                raise MissingBaseline(
                    f"dataset {dataset!r} lacks baseline seeds {missing}")
            paired = [(r, base_by_seed[r.seed]) for r in recs]
            diff = float(np.mean([r.accuracy - b.accuracy for r, b in paired]))
            diffs.append(diff * 100.0)
            abs_diffs.append(abs(diff) * 100.0)
            base_train = np.mean([b.t_train for _, b in paired])
            base_infer = np.mean([b.t_infer for _, b in paired])
            if base_train > 0:
                train_ratios.append(np.mean([r.t_train for r, _ in paired]) / base_train)
            if base_infer > 0:
                infer_ratios.append(np.mean([r.t_infer for r, _ in paired]) / base_infer)

        if not diffs:
            logger.warning("no comparable datasets for %s", _config_label(key))
            continue
        wins = sum(1 for d in diffs if d > TIE_MARGIN * 100.0 + _MARGIN_EPS)
        losses = sum(1 for d in diffs if d < -(TIE_MARGIN * 100.0 + _MARGIN_EPS))
        ties = len(diffs) - wins - losses
        med, q1, q3 = _quartiles(diffs)
        amed, aq1, aq3 = _quartiles(abs_diffs)
        rows.append(SummaryRow(
            config=_config_label(key), baseline=_config_label(base_key),
            probe=probe, wins=wins, ties=ties, losses=losses,
            acc_diff_median=med, acc_diff_q1=q1, acc_diff_q3=q3,
            abs_acc_diff_median=amed, abs_acc_diff_q1=aq1, abs_acc_diff_q3=aq3,
            train_ratio=float(np.median(train_ratios)) if train_ratios else float("nan"),
            infer_ratio=float(np.median(infer_ratios)) if infer_ratios else float("nan"),
            n_datasets=len(diffs)))
    return rows


# ---------------------------------------------------------------------------
# Hard-voting ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    """Five-member ensemble composition over (scales, seed) members."""

    mode: str  # "baseline_only" or "mixed_scale"
    voting: str = "hard"

    def members(self):
        if self.mode == "baseline_only":
            return tuple((1, seed) for seed in range(5))
        if self.mode == "mixed_scale":
            return ((1, 0), (1, 1), (2, 0), (3, 0), (4, 0))
        raise ValueError(f"unknown ensemble mode {self.mode!r}")


def hard_vote(member_predictions) -> np.ndarray:
    """Majority vote across members; ties go to the lowest class id."""
    stacked = np.asarray(member_predictions, dtype=np.int64)
    if stacked.ndim != 2:
        raise ValueError("member predictions must be a (members, instances) array")
    n_classes = int(stacked.max()) + 1 if stacked.size else 1
    voted = np.empty(stacked.shape[1], dtype=np.int64)
    for i in range(stacked.shape[1]):
        voted[i] = np.argmax(np.bincount(stacked[:, i], minlength=n_classes))
    return voted


def _prediction_index(records):
    index = {}
    for rec in records:
        if rec.status == "ok" and rec.predictions is not None:
            index[(rec.dataset, rec.scales, rec.seed)] = rec
    return index


def run_ensemble(records, spec: EnsembleSpec):
    """Per-dataset hard-vote accuracy for one ensemble composition."""
    index = _prediction_index(records)
    datasets = sorted({ds for ds, _, _ in index})
    accuracies = {}
    for dataset in datasets:
        preds = []
        labels = None
        for scales, seed in spec.members():
            rec = index.get((dataset, scales, seed))
            if rec is None:
                raise MissingMember(
                    f"dataset {dataset!r} lacks member (S={scales}, seed={seed})")
            preds.append(rec.predictions)
            labels = rec.labels
        voted = hard_vote(preds)
        accuracies[dataset] = float((voted == np.asarray(labels)).mean())
    return accuracies


def compare_ensembles(records):
    """Mixed-scale vs baseline-only comparison with the tie margin.

    Returns (per-dataset rows, archive summary dict).
    """
    base = run_ensemble(records, EnsembleSpec(mode="baseline_only"))
    mixed = run_ensemble(records, EnsembleSpec(mode="mixed_scale"))
    rows = []
    for dataset in sorted(base):
        delta = mixed[dataset] - base[dataset]
        rows.append({
            "dataset": dataset,
            "acc_baseline_only": base[dataset],
            "acc_mixed_scale": mixed[dataset],
            "acc_diff": delta,
        })
    diffs_pp = [row["acc_diff"] * 100.0 for row in rows]
    wins = sum(1 for d in diffs_pp if d > TIE_MARGIN * 100.0 + _MARGIN_EPS)
    losses = sum(1 for d in diffs_pp if d < -(TIE_MARGIN * 100.0 + _MARGIN_EPS))
    med, q1, q3 = _quartiles(diffs_pp) if diffs_pp else (float("nan"),) * 3
    summary = {
        "wins": wins, "ties": len(diffs_pp) - wins - losses, "losses": losses,
        "acc_diff_median": med, "acc_diff_q1": q1, "acc_diff_q3": q3,
        "n_datasets": len(diffs_pp),
    }
    return rows, summary


# ---------------------------------------------------------------------------
# Record and summary serialization (CSV with the fixed column order, JSONL)


def records_to_csv(records, stream=None) -> str | None:
    out = stream or _stdio.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for rec in records:
        writer.writerow([getattr(rec, col) if getattr(rec, col) is not None else ""
                         for col in RECORD_COLUMNS])
    return out.getvalue() if stream is None else None


def records_from_csv(stream) -> list:
    reader = csv.DictReader(stream)
    records = []
    for row in reader:
        records.append(BenchmarkRecord(
            dataset=row["dataset"], probe=row["probe"],
            scales=int(row["scales"]), alpha=float(row["alpha"]),
            seed=int(row["seed"]),
            accuracy=float(row["accuracy"]) if row["accuracy"] else float("nan"),
            t_roman=float(row["t_roman"]), t_fit=float(row["t_fit"]),
            t_predict=float(row["t_predict"]), status=row["status"],
            error=row["error"] or None))
    return records


def records_to_jsonl(records, stream=None) -> str | None:
    out = stream or _stdio.StringIO()
    for rec in records:
        payload = {k: v for k, v in asdict(rec).items() if v is not None}
        out.write(json.dumps(payload, sort_keys=True) + "\n")
    return out.getvalue() if stream is None else None


def records_from_jsonl(stream) -> list:
    records = []
    for line in stream:
        line = line.strip()
        if line:
            records.append(BenchmarkRecord(**json.loads(line)))
    return records


def summaries_to_csv(rows, stream=None) -> str | None:
    out = stream or _stdio.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([getattr(row, col) for col in SUMMARY_COLUMNS])
    return out.getvalue() if stream is None else None
