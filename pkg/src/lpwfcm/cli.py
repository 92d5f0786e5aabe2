"""Command-line entry point: ``lpwfcm {stats,run,compare,correlate}``.

Exit codes: 0 success, 2 configuration or data loading error, 3 numeric
failure during a run.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation as ev
from . import experiment as ex
from .data import DatasetError, load_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _err(msg: str) -> None:
    print(f"lpwfcm: error: {msg}", file=sys.stderr)


def cmd_stats(args) -> int:
    ds = load_dataset(args.dataset, args.labels, nominal=args.nominal)
    stats = ex.safe_stats(ds)
    header = "  ".join(f"{k:>8}" for k in ex.STAT_KEYS)
    cells = []
    for k in ex.STAT_KEYS:
        v = stats[k]
        cells.append(f"{'NA':>8}" if v is None else
                     f"{v:>8d}" if isinstance(v, int) else f"{v:>8.3f}")
    print(header)
    print("  ".join(cells))
    doc = json.dumps({"dataset": str(args.dataset), **stats}, indent=1)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    else:
        print(doc)
    return EXIT_OK


def cmd_run(args) -> int:
    overrides = {"dataset": args.dataset, "labels": args.labels, "seed": args.seed}
    if args.config:
        cfg = ex.load_config(args.config, **overrides)
    else:
        cfg = ex.parse_config("", **overrides)
    if not cfg.dataset or not cfg.labels:
        raise ex.ConfigError("dataset and labels must be given (config file or flags)")
    report = ex.run_experiment(cfg, jobs=args.jobs)
    json_path, csv_path = report.write(args.out)
    for v, losses in report.to_json()["mean_losses"].items():
        print(f"{v:>6}  " + "  ".join(f"{k}={losses[k]:.4f}" for k in ev.LOSSES))
    print(f"wrote {json_path} and {csv_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    reports = [ex.load_report(p) for p in args.reports]
    criteria = ev.LOSSES if args.criterion == "all" else (args.criterion,)
    for c in criteria:
        res = ex.compare(reports, c, fold_level=args.fold_level, alpha=args.alpha)
        print(ex.format_comparison(res))
        if args.out:
            ex.write_comparison(res, args.out)
    return EXIT_OK


def cmd_correlate(args) -> int:
    reports = [ex.load_report(p) for p in args.reports]
    rows = ex.correlate(reports)
    print("variant  criterion " + "".join(f"{k:>10}" for k in ex.STAT_KEYS))
    for row in rows:
        cells = "".join(f"{'undef':>10}" if row[k] != row[k] else f"{row[k]:>10.3f}"
                        for k in ex.STAT_KEYS)
        print(f"{row['variant']:<8} {row['criterion']:<9} {cells}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        ex.write_correlations(rows, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lpwfcm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stats", help="print dataset statistics (N, d, L, LC, LD, avIR, AVsc)")
    s.add_argument("--dataset", required=True, help="ARFF or CSV file")
    s.add_argument("--labels", required=True,
                   help="label columns: 'last-6', '6' or a comma-separated name list")
    s.add_argument("--nominal", choices=("error", "onehot"), default="error",
                   help="how to treat non-binary nominal features")
    s.add_argument("--out", help="write the JSON row here instead of stdout")
    s.set_defaults(func=cmd_stats)

    r = sub.add_parser("run", help="cross-validated run of the requested variants")
    r.add_argument("--config", help="flat key = value config file")
    r.add_argument("--dataset", help="override the dataset path")
    r.add_argument("--labels", help="override the label columns")
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--out", required=True, help="output directory for report.json and folds.csv")
    r.add_argument("--jobs", type=int, default=1,
                   help="worker processes over folds (results do not depend on it)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser(
        "compare", help="ranks, Friedman, Nemenyi CD and pairwise Wilcoxon across reports",
        description="Rows of the loss matrix are datasets (one report each, fold-averaged). "
                    "With --fold-level a single report is compared on its folds instead.")
    c.add_argument("reports", nargs="+", help="report.json files or run output directories")
    c.add_argument("--criterion", choices=(*ev.LOSSES, "all"), default="all")
    c.add_argument("--fold-level", action="store_true", help="use the folds of one report as rows")
    c.add_argument("--alpha", type=float, default=0.05, choices=(0.05, 0.1))
    c.add_argument("--out", help="directory for CSV tables")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("correlate", help="Spearman correlation of losses with dataset properties")
    k.add_argument("reports", nargs="+", help="report.json files (one per dataset, >= 3)")
    k.add_argument("--out", help="CSV output path")
    k.set_defaults(func=cmd_correlate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ex.NumericError as exc:
        _err(str(exc))
        return EXIT_NUMERIC
    except (ex.ConfigError, DatasetError, FileNotFoundError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
