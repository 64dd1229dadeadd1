"""Command-line entry point.

Subcommands: ``transform``, ``synth``, ``bench``, ``summarize``,
``ensemble``. Results go to ``--out`` when given; ``bench``,
``summarize`` and ``ensemble`` write to stdout otherwise. Diagnostics
go to stderr.

Exit codes: 0 success, 2 input parse error, 3 configuration error
(including bad flags), 4 missing baseline or ensemble member.

Thread use for untimed work is taken from ``--threads``, falling back
to the ROMAN_THREADS environment variable, then to 1. Timed benchmark
sections are always pinned to one thread.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .dataio import load_dataset, preprocess, save_tensor, write_ts
from .errors import (
    BaseLengthUnreachable,
    DepthTooLarge,
    InfeasibleGeometry,
    InvalidAlpha,
    MissingBaseline,
    MissingMember,
    ParseError,
    RomanError,
    UnequalLength,
    UnknownClassLabel,
)
from .routing import RomanConfig, transform_batch
from .synth import FAMILIES, SynthTaskSpec, generate

# the probe/bench stack (and its numba dependency) loads only for the
# subcommands that need it, keeping transform/synth start-up light

EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4

_PARSE_ERRORS = (ParseError, UnequalLength, UnknownClassLabel)
_CONFIG_ERRORS = (InvalidAlpha, BaseLengthUnreachable, DepthTooLarge,
                  InfeasibleGeometry, ValueError)


class _Parser(argparse.ArgumentParser):
    # Usage problems are configuration errors under this tool's exit
    # code contract, not input parse errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("ROMAN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-integer ROMAN_THREADS={env!r}",
                  file=sys.stderr)
    return 1


def _roman_config(args) -> RomanConfig:
    if args.min_base is not None:
        return RomanConfig(min_base_length=args.min_base, alpha=args.alpha)
    return RomanConfig(scales=args.scales if args.scales is not None else 1,
                       alpha=args.alpha)


def _load_transform_input(args):
    """Dataset from .ts/.tsv text, or a raw (N, C, L) tensor container."""
    if str(args.input).endswith(".bin"):
        import numpy as np

        from .dataio import TimeSeriesDataset, load_tensor

        values, _ = load_tensor(args.input)
        if values.ndim != 3:
            raise ValueError(
                f"tensor input must have dims (N, C, L), got {values.shape}")
        return TimeSeriesDataset(
            values=values,
            labels=np.zeros(values.shape[0], dtype=np.int64),
            class_names=["0"],
            dataset_id=Path(args.input).stem,
            provenance={"source": str(args.input), "normalized": False})
    return load_dataset(args.input)


def _cmd_transform(args) -> int:
    ds = _load_transform_input(args)
    if not args.no_preprocess:
        ds = preprocess(ds)
    config = _roman_config(args)
    routed, plan = transform_batch(ds.values, config,
                                   threads=_resolve_threads(args))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan_info = plan.to_dict()
    plan_info["dataset_id"] = ds.dataset_id
    plan_info["n_instances"] = ds.n_instances
    with open(out_dir / "plan.json", "w", encoding="utf-8") as fh:
        json.dump(plan_info, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for i in range(routed.shape[0]):
        save_tensor(out_dir / f"tensor_{i:05d}.bin", routed[i], metadata={
            "dataset_id": ds.dataset_id,
            "instance": i,
            "label": int(ds.labels[i]),
            "plan": plan.to_dict(),
        })
    print(f"wrote {routed.shape[0]} tensors of shape "
          f"{routed.shape[1]}x{routed.shape[2]} to {out_dir}", file=sys.stderr)
    return 0


def _cmd_synth(args) -> int:
    spec = SynthTaskSpec(family=args.family, seed=args.seed,
                         n_train=args.n_train, n_test=args.n_test)
    task = generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.family}_seed{args.seed}"
    write_ts(out_dir / f"{stem}_TRAIN.ts", task.train)
    write_ts(out_dir / f"{stem}_TEST.ts", task.test)
    with open(out_dir / f"{stem}_metadata.json", "w", encoding="utf-8") as fh:
        json.dump(task.metadata, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {stem}_TRAIN.ts / {stem}_TEST.ts to {out_dir}", file=sys.stderr)
    return 0


def _find_pairs(args):
    from .bench import DatasetPair

    pairs = []
    for train_path, test_path in args.pair or []:
        train = preprocess(load_dataset(train_path))
        test = preprocess(load_dataset(test_path))
        pairs.append(DatasetPair(dataset_id=train.dataset_id, train=train,
                                 test=test))
    if args.data_dir:
        for train_path in sorted(Path(args.data_dir).glob("*_TRAIN.ts")):
            test_path = Path(str(train_path).replace("_TRAIN.ts", "_TEST.ts"))
            if not test_path.exists():
                continue
            train = preprocess(load_dataset(train_path))
            test = preprocess(load_dataset(test_path))
            pairs.append(DatasetPair(dataset_id=train.dataset_id, train=train,
                                     test=test))
    if not pairs:
        raise ValueError("no datasets given; use --pair or --data-dir")
    return pairs


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_bench(args) -> int:
    from .bench import records_to_csv, records_to_jsonl, run_grid

    pairs = _find_pairs(args)
    scales = [int(s) for s in args.scales.split(",")]
    configs = [RomanConfig(scales=s, alpha=args.alpha) for s in scales]
    seeds = list(range(args.seeds))
    records = run_grid(pairs, configs, seeds, probe=args.probe,
                       probe_overrides={"n_kernels": args.kernels} if args.kernels else None,
                       store_predictions=args.store_predictions)
    if args.format == "jsonl" or args.store_predictions:
        _emit(records_to_jsonl(records), args.out)
    else:
        _emit(records_to_csv(records), args.out)
    return 0


def _load_records(path):
    from .bench import records_from_csv, records_from_jsonl

    with open(path, "r", encoding="utf-8") as fh:
        if str(path).endswith(".jsonl"):
            return records_from_jsonl(fh)
        first = fh.readline()
        fh.seek(0)
        if first.startswith("{"):
            return records_from_jsonl(fh)
        return records_from_csv(fh)


def _cmd_summarize(args) -> int:
    from .bench import summaries_to_csv, summarize

    rows = summarize(_load_records(args.records),
                     baseline_scales=args.baseline_scales)
    _emit(summaries_to_csv(rows), args.out)
    return 0


def _cmd_ensemble(args) -> int:
    from .bench import compare_ensembles

    rows, summary = compare_ensembles(_load_records(args.records))
    lines = ["dataset,acc_baseline_only,acc_mixed_scale,acc_diff"]
    for row in rows:
        lines.append(f"{row['dataset']},{row['acc_baseline_only']},"
                     f"{row['acc_mixed_scale']},{row['acc_diff']}")
    lines.append("")
    _emit("\n".join(lines), args.out)
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="roman", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="apply the operator to a dataset")
    p.add_argument("--input", required=True,
                   help=".ts or TSV dataset, or a (N,C,L) tensor container (.bin)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--scales", type=int, default=None, help="pyramid depth S")
    group.add_argument("--min-base", type=int, default=None,
                       help="deepest pyramid keeping at least this base length")
    p.add_argument("--alpha", type=float, default=0.5, help="window overlap in [0,1)")
    p.add_argument("--no-preprocess", action="store_true",
                   help="apply the pure operator without NaN handling/z-normalization")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("synth", help="generate a synthetic task family")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=500)
    p.add_argument("--n-test", type=int, default=250)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="run a (dataset x config x seed) grid")
    p.add_argument("--pair", nargs=2, action="append",
                   metavar=("TRAIN", "TEST"), help="explicit dataset pair")
    p.add_argument("--data-dir", default=None,
                   help="directory with *_TRAIN.ts / *_TEST.ts pairs")
    p.add_argument("--probe", choices=("pooled", "flatten"), default="pooled")
    p.add_argument("--scales", default="1,2,3,4", help="comma-separated depths")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seeds", type=int, default=5, help="seeds 0..N-1")
    p.add_argument("--kernels", type=int, default=None,
                   help="override probe kernel count")
    p.add_argument("--store-predictions", action="store_true",
                   help="keep per-instance predictions (forces JSONL)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("summarize", help="win/tie/loss summary vs baseline")
    p.add_argument("--records", required=True, help="records CSV or JSONL")
    p.add_argument("--baseline-scales", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("ensemble", help="five-member hard-voting comparison")
    p.add_argument("--records", required=True,
                   help="records JSONL with stored predictions")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ensemble)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (MissingBaseline, MissingMember) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RomanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
