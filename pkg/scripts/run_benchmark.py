"""Run all four variants on the benchmark ARFF files and compare them.

Expects emotions.arff, flags.arff and scene.arff in ``--data`` (default
``$LPWFCM_DATA`` or ``data/``).  Missing files are reported and skipped.
Writes one run directory per dataset plus comparison and correlation tables.
"""

import argparse
import os
import sys
import time
from pathlib import Path

from lpwfcm import experiment as ex

BENCHMARK = {
    "emotions": ("last-6", "error"),
    "flags": ("last-7", "onehot"),
    "scene": ("last-6", "error"),
}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", default=os.environ.get("LPWFCM_DATA", "data"))
    p.add_argument("--out", default="benchmark_out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--datasets", nargs="+", default=list(BENCHMARK))
    args = p.parse_args(argv)

    out = Path(args.out)
    reports = []
    for name in args.datasets:
        labels, nominal = BENCHMARK[name]
        path = Path(args.data) / f"{name}.arff"
        if not path.exists():
            print(f"skip {name}: {path} not found", file=sys.stderr)
            continue
        cfg = ex.parse_config(f"dataset = {path}\nlabels = {labels}\nnominal = {nominal}\n"
                              f"seed = {args.seed}\n")
        t0 = time.perf_counter()
        report = ex.run_experiment(cfg, jobs=args.jobs)
        json_path, _ = report.write(out / name)
        print(f"{name}: {time.perf_counter() - t0:.1f} s")
        for v, losses in report.to_json()["mean_losses"].items():
            print(f"  {v:>6}  " + "  ".join(f"{k}={x:.3f}" for k, x in losses.items()))
        reports.append(ex.load_report(json_path))

    if len(reports) >= 2:
        for crit in ("hamming", "zero_one", "micro_f1", "macro_f1"):
            res = ex.compare(reports, crit)
            print(ex.format_comparison(res))
            ex.write_comparison(res, out / "compare")
    if len(reports) >= 3:
        ex.write_correlations(ex.correlate(reports), out / "correlations.csv")


if __name__ == "__main__":
    main()
