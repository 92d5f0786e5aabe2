"""Cross-validated experiment runner, report files and comparison tables.

Per fold the training part ``S_N`` is split into ``T`` and ``V``; corrected
variants train their members on ``T`` and estimate competences on ``V`` while
the plain variant trains on the whole of ``S_N``.  Every random stream is
derived from the master seed (see :mod:`lpwfcm.seeding`):

* fold assignment: ``(seed, KFOLD)``
* T/V split of fold ``f``: ``(seed, SPLIT, f)``
* members of fold ``f``: ``(seed, MEMBERS, f)``, then the pair's label keys,
  then the member index

so neither the execution order nor the number of worker processes changes any
number in the report.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evaluation as ev
from .data import (MultiLabelDataset, UndefinedImbalanceError, dataset_stats, kfold_indices,
                   load_dataset)
from .ensemble import MODES, LPWConfig, fit_corrected, fit_plain
from .rrc import RRCNumericError
from .seeding import KFOLD, MEMBERS, SPLIT, derive_seed

SCHEMA_VERSION = 1
STAT_KEYS = ("N", "d", "L", "LC", "LD", "avIR", "AVsc")


class ConfigError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


# fields that describe the data rather than the method; left out of the hash
_DATA_KEYS = ("dataset", "labels", "nominal")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = ""
    labels: str = ""
    nominal: str = "error"
    variants: tuple[str, ...] = MODES
    folds: int = 10
    t: float = 0.6
    seed: int = 0
    beta: float = 1.0
    concentration: float = 2.0
    quad_points: int = 1025
    rrc_method: str = "integral"
    tnorm: str = "product"
    aggregation: str = "soft"
    theta: float = 0.5
    members: int = 20
    fraction: float = 0.2

    def validate(self) -> "ExperimentConfig":
        if not self.variants:
            raise ConfigError("variants must not be empty")
        bad = [v for v in self.variants if v not in MODES]
        if bad:
            raise ConfigError(f"unknown variants {bad}; choose from {MODES}")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("duplicate variants")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.nominal not in ("error", "onehot"):
            raise ConfigError("nominal must be 'error' or 'onehot'")
        if self.members < 1 or not 0 < self.fraction <= 1:
            raise ConfigError("members must be >= 1 and fraction in (0, 1]")
        try:
            self.lpw_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def lpw_config(self) -> LPWConfig:
        return LPWConfig(members=self.members, fraction=self.fraction,
                         concentration=self.concentration, quad_points=self.quad_points,
                         rrc_method=self.rrc_method, beta=self.beta, tnorm=self.tnorm,
                         t=self.t, aggregation=self.aggregation, theta=self.theta)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["variants"] = list(self.variants)
        return d

    def method_hash(self) -> str:
        d = {k: v for k, v in self.as_dict().items() if k not in _DATA_KEYS}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _coerce(field: dataclasses.Field, raw: str):
    if field.name == "variants":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    kind = field.type if isinstance(field.type, str) else field.type.__name__
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{field.name}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse a flat ``key = value`` file; ``#`` starts a comment.

    Keyword ``overrides`` (e.g. from command-line flags) win over the file;
    ``None`` values are ignored.
    """
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(fields[key], raw)
    for key, val in overrides.items():
        if val is not None:
            values[key] = _coerce(fields[key], val) if isinstance(val, str) else val
    return ExperimentConfig(**values).validate()


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, **overrides)


def format_config(cfg: ExperimentConfig) -> str:
    out = []
    for k, v in cfg.as_dict().items():
        out.append(f"{k} = {','.join(v) if isinstance(v, list) else v}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------

def safe_stats(ds: MultiLabelDataset) -> dict:
    """Dataset statistics; measures undefined for this data are reported as None."""
    try:
        return dataset_stats(ds).as_dict()
    except UndefinedImbalanceError:
        from .data import label_cardinality, label_density
        return {"N": ds.n_instances, "d": ds.n_features, "L": ds.n_labels,
                "LC": label_cardinality(ds.Y), "LD": label_density(ds.Y),
                "avIR": None, "AVsc": None}


def run_fold(ds: MultiLabelDataset, cfg: ExperimentConfig, fold: int,
             train_idx: np.ndarray, test_idx: np.ndarray) -> dict:
    lpw = cfg.lpw_config()
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    member_seed = derive_seed(cfg.seed, MEMBERS, fold)
    split_seed = derive_seed(cfg.seed, SPLIT, fold)
    timings, losses = {}, {}
    corrected = [v for v in cfg.variants if v != "plain"]
    models = {}
    try:
        with np.errstate(over="raise", invalid="raise"):
            if "plain" in cfg.variants:
                t0 = time.perf_counter()
                models["plain"] = fit_plain(train, lpw, member_seed)
                timings["fit_plain"] = time.perf_counter() - t0
            if corrected:
                t0 = time.perf_counter()
                shared = fit_corrected(train, lpw, member_seed, split_seed)
                timings["fit_corrected"] = time.perf_counter() - t0
                for v in corrected:
                    models[v] = shared
            for v in cfg.variants:
                t0 = time.perf_counter()
                pred = models[v].predict(test.X, mode=v)
                timings[f"predict_{v}"] = time.perf_counter() - t0
                losses[v] = ev.all_losses(test.Y, pred.relevant)
    except (RRCNumericError, FloatingPointError, ArithmeticError) as exc:
        raise NumericError(f"fold {fold}: {exc}") from exc
    return {"fold": fold, "losses": losses, "timings": timings,
            "seeds": {"members": member_seed, "split": split_seed},
            "n_train": int(train_idx.size), "n_test": int(test_idx.size)}


def _run_fold_job(args):
    return run_fold(*args)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    stats: dict
    dataset_sha256: str
    folds: list[dict]
    timings: dict

    def rows(self):
        for f in self.folds:
            for v in self.config.variants:
                yield f["fold"], v, f["losses"][v]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "variant", *ev.LOSSES])
        for fold, v, losses in self.rows():
            w.writerow([fold, v, *(repr(float(losses[k])) for k in ev.LOSSES)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.as_dict(),
            "config_hash": self.config.method_hash(),
            "dataset_sha256": self.dataset_sha256,
            "stats": self.stats,
            "variants": list(self.config.variants),
            "folds": [{k: f[k] for k in ("fold", "n_train", "n_test", "seeds", "losses")}
                      for f in self.folds],
            "mean_losses": {v: {k: float(np.mean([f["losses"][v][k] for f in self.folds]))
                                for k in ev.LOSSES} for v in self.config.variants},
            # wall-clock seconds; the only non-deterministic part of a report
            "timings": self.timings,
        }

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        json_path, csv_path = out / "report.json", out / "folds.csv"
        json_path.write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")
        csv_path.write_text(self.to_csv())
        return json_path, csv_path


def run_experiment(cfg: ExperimentConfig, jobs: int = 1,
                   dataset: MultiLabelDataset | None = None) -> ExperimentReport:
    cfg.validate()
    t0 = time.perf_counter()
    if dataset is None:
        ds = load_dataset(cfg.dataset, cfg.labels, nominal=cfg.nominal)
        digest = hashlib.sha256(Path(cfg.dataset).read_bytes()).hexdigest()
    else:
        ds = dataset
        digest = hashlib.sha256(np.ascontiguousarray(ds.X).tobytes()
                                + np.ascontiguousarray(ds.Y).tobytes()).hexdigest()
    if cfg.folds > ds.n_instances:
        raise ConfigError(f"{cfg.folds} folds for {ds.n_instances} instances")
    load_time = time.perf_counter() - t0
    splits = kfold_indices(ds.n_instances, cfg.folds, derive_seed(cfg.seed, KFOLD))
    jobs_args = [(ds, cfg, f, tr, te) for f, (tr, te) in enumerate(splits)]
    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold_job, jobs_args))
    else:
        folds = [_run_fold_job(a) for a in jobs_args]
    folds.sort(key=lambda f: f["fold"])
    timings = {"load": load_time, "folds_total": time.perf_counter() - t0,
               "per_fold": [f["timings"] for f in folds]}
    return ExperimentReport(cfg, safe_stats(ds), digest, folds, timings)


# ---------------------------------------------------------------------------
# Reading reports back for comparisons.

def load_report(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported report schema {doc.get('schema_version')!r}")
    doc["_path"] = str(path)
    return doc


def _check_compatible(reports: list[dict]) -> list[str]:
    variants = reports[0]["variants"]
    for r in reports[1:]:
        if r["variants"] != variants:
            raise ConfigError(f"{r['_path']}: variant set {r['variants']} differs from {variants}")
        if r["config_hash"] != reports[0]["config_hash"]:
            raise ConfigError(f"{r['_path']}: method settings differ (config hash mismatch)")
    return variants


def loss_matrix(reports: list[dict], criterion: str, fold_level: bool = False):
    """Rows = datasets (mean over folds) or, with ``fold_level``, the folds of one report."""
    if criterion not in ev.LOSSES:
        raise ConfigError(f"unknown criterion {criterion!r}; choose from {ev.LOSSES}")
    variants = _check_compatible(reports)
    if fold_level:
        if len(reports) != 1:
            raise ConfigError("fold-level comparison takes exactly one report")
        r = reports[0]
        ids = [f"fold{f['fold']}" for f in r["folds"]]
        vals = [[f["losses"][v][criterion] for v in variants] for f in r["folds"]]
    else:
        if len(reports) < 2:
            raise ConfigError("need at least 2 reports (datasets); use --fold-level for one")
        ids = [Path(r["config"]["dataset"]).stem or f"report{i}" for i, r in enumerate(reports)]
        vals = [[r["mean_losses"][v][criterion] for v in variants] for r in reports]
    return ids, variants, np.array(vals, dtype=np.float64)


def compare(reports: list[dict], criterion: str, fold_level: bool = False,
            alpha: float = 0.05) -> dict:
    ids, variants, lm = loss_matrix(reports, criterion, fold_level)
    stat, p, ranks = ev.friedman_test(lm)
    k, n = len(variants), lm.shape[0]
    cd = ev.nemenyi_critical_difference(k, n, alpha) if 2 <= k <= 10 else math.nan
    pairs, raw = [], []
    for i in range(k):
        for j in range(i + 1, k):
            try:
                pv = ev.wilcoxon_signed_rank(lm[:, i], lm[:, j])
            except ValueError:
                pv = math.nan
            pairs.append((variants[i], variants[j]))
            raw.append(pv)
    raw = np.array(raw)
    adj = np.full_like(raw, math.nan)
    ok = ~np.isnan(raw)
    if ok.any():
        adj[ok] = ev.holm(raw[ok])
    return {"criterion": criterion, "ids": ids, "variants": variants, "losses": lm,
            "ranks": ranks, "friedman_statistic": stat, "friedman_p": p,
            "nemenyi_cd": cd, "alpha": alpha,
            "wilcoxon": [{"a": a, "b": b, "p": float(pv), "p_holm": float(ph)}
                         for (a, b), pv, ph in zip(pairs, raw, adj)]}


def _fmt(x) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def format_comparison(res: dict) -> str:
    v = res["variants"]
    lines = [f"criterion: {res['criterion']}  rows: {len(res['ids'])}",
             "average ranks: " + "  ".join(f"{a}={r:.3f}" for a, r in zip(v, res["ranks"])),
             f"Friedman chi2 = {res['friedman_statistic']:.4f}, p = {_fmt(res['friedman_p'])}",
             f"Nemenyi CD (alpha={res['alpha']}) = {_fmt(res['nemenyi_cd'])}",
             "Wilcoxon p (upper triangle; Holm-adjusted in brackets, a Bergmann-Hommel substitute):"]
    lookup = {(w["a"], w["b"]): w for w in res["wilcoxon"]}
    width = max(len(a) for a in v) + 2
    lines.append(" " * width + "".join(a.rjust(18) for a in v))
    for i, a in enumerate(v):
        cells = []
        for j, b in enumerate(v):
            if j <= i:
                cells.append("".rjust(18))
            else:
                w = lookup[(a, b)]
                cells.append(f"{_fmt(w['p'])} [{_fmt(w['p_holm'])}]".rjust(18))
        lines.append(a.ljust(width) + "".join(cells))
    return "\n".join(lines) + "\n"


def write_comparison(res: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    c = res["criterion"]
    ev.write_loss_matrix(out / f"losses_{c}.csv", res["ids"], res["variants"], res["losses"])
    with open(out / f"wilcoxon_{c}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "p", "p_holm"])
        for row in res["wilcoxon"]:
            w.writerow([row["a"], row["b"], repr(row["p"]), repr(row["p_holm"])])
    with open(out / f"ranks_{c}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "average_rank"])
        for a, r in zip(res["variants"], res["ranks"]):
            w.writerow([a, repr(float(r))])
        w.writerow(["friedman_p", repr(res["friedman_p"])])
        w.writerow(["nemenyi_cd", repr(res["nemenyi_cd"])])
    (out / f"comparison_{c}.txt").write_text(format_comparison(res))


def correlate(reports: list[dict]) -> list[dict]:
    """Spearman correlation of per-dataset mean loss with each dataset property."""
    if len(reports) < 3:
        raise ConfigError("need at least 3 reports (datasets) to correlate")
    variants = _check_compatible(reports)
    rows = []
    for v in variants:
        for crit in ev.LOSSES:
            losses = [r["mean_losses"][v][crit] for r in reports]
            row = {"variant": v, "criterion": crit}
            for key in STAT_KEYS:
                prop = [r["stats"].get(key) for r in reports]
                if any(p is None for p in prop):
                    row[key] = math.nan
                else:
                    row[key] = ev.spearman(prop, losses)
            rows.append(row)
    return rows


def write_correlations(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "criterion", *STAT_KEYS])
        for row in rows:
            w.writerow([row["variant"], row["criterion"],
                        *("undefined" if math.isnan(row[k]) else repr(row[k]) for k in STAT_KEYS)])
