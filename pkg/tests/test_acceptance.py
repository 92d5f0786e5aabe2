"""Acceptance criteria, one test per criterion.

Each test records a PASS / FAIL (or WARN for the statistical tendency check)
line that is printed in the terminal summary.  Criteria 1, 7 and 8 need the
Emotions, Flags and Scene ARFF files in ``$LPWFCM_DATA`` (default: ``data/``
next to this directory); without them they fail and say so.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from acceptance_log import record
from conftest import make_toy
from lpwfcm import cli, ensemble as E, evaluation as ev, fuzzy as F
from lpwfcm.data import dataset_stats, load_dataset, write_csv
from lpwfcm.experiment import parse_config, run_experiment
from lpwfcm.rrc import RRCConfig, rrc_probabilities

REPO = Path(__file__).resolve().parents[1]
DATA = Path(os.environ.get("LPWFCM_DATA", REPO / "data"))
ARTIFACTS = Path(os.environ.get("LPWFCM_ARTIFACTS", REPO / "acceptance_artifacts"))

# file name, label spec, nominal handling, reference row (N, d incl. labels, L, LC, LD, avIR, AVsc)
DATASETS = {
    "emotions": ("emotions.arff", "last-6", "error", (593, 78, 6, 1.868, 0.311, 1.478, 0.011)),
    "flags": ("flags.arff", "last-7", "onehot", (194, 50, 7, 3.392, 0.485, 2.255, 0.061)),
    "scene": ("scene.arff", "last-6", "error", (2407, 300, 6, 1.074, 0.179, 1.254, 0.000)),
}


def _check(number, ok, detail):
    record(number, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def _dataset_path(name):
    path = DATA / DATASETS[name][0]
    if not path.exists():
        return None
    return path


def _require(number, names):
    missing = [str(DATA / DATASETS[n][0]) for n in names if _dataset_path(n) is None]
    if missing:
        _check(number, False, "dataset not found: " + ", ".join(missing))


def _default_config(name, variants):
    fname, labels, nominal, _ = DATASETS[name]
    return parse_config(f"dataset = {DATA / fname}\nlabels = {labels}\nnominal = {nominal}\n"
                        f"variants = {variants}\nseed = 0\n")


_RUNS = {}


def _run_all_variants(name):
    if name not in _RUNS:
        t0 = time.perf_counter()
        report = run_experiment(_default_config(name, "plain,fcm,fcm-w,fcm-o"))
        _RUNS[name] = (report, time.perf_counter() - t0)
    return _RUNS[name]


# 1 ---------------------------------------------------------------------------

def test_criterion_1_dataset_statistics():
    _require(1, DATASETS)
    t0 = time.perf_counter()
    problems, rows = [], []
    for name, (fname, labels, nominal, table) in DATASETS.items():
        ds = load_dataset(DATA / fname, labels, nominal=nominal)
        s = dataset_stats(ds)
        got = (s.n, s.d + s.l, s.l, round(s.lc, 3), round(s.ld, 3))
        if got != table[:5]:
            problems.append(f"{name} (N, d+L, L, LC, LD) = {got}, table {table[:5]}")
        if abs(s.avir - table[5]) > 0.005 or abs(s.avgsc - table[6]) > 0.005:
            problems.append(f"{name} avIR {s.avir:.4f} AVsc {s.avgsc:.4f}, table {table[5:]}")
        rows.append(f"{name}: avIR {s.avir:.3f} AVsc {s.avgsc:.3f}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 5:
        problems.append(f"runtime {elapsed:.1f} s")
    _check(1, not problems, "; ".join(problems) or f"{'; '.join(rows)} ({elapsed:.2f} s)")


# 2 ---------------------------------------------------------------------------

def test_criterion_2_rrc_against_monte_carlo():
    grid = np.round(np.arange(1, 10) / 10, 1)
    worst_z, worst_sum, problems = 0.0, 0.0, []
    quad_time = 0.0
    t_all = time.perf_counter()
    for c in (1.0, 2.0, 8.0):
        t0 = time.perf_counter()
        p = rrc_probabilities(np.column_stack([grid, 1 - grid]), RRCConfig(c))
        quad_time += time.perf_counter() - t0
        worst_sum = max(worst_sum, float(np.max(np.abs(p.sum(axis=1) - 1))))
        for d, (p1, _) in zip(grid, p):
            est, se = oracles.rrc_monte_carlo(float(d), c, 10 ** 7, seed=int(1000 * c + 10 * d))
            z = abs(p1 - est) / se
            worst_z = max(worst_z, z)
            if z > 3:
                problems.append(f"c={c} d={d}: {p1:.6f} vs MC {est:.6f} ({z:.2f} se)")
    total = time.perf_counter() - t_all
    if worst_sum > 1e-6:
        problems.append(f"p1 + p2 off by {worst_sum:.2e}")
    if quad_time >= 60:
        problems.append(f"quadrature runtime {quad_time:.1f} s")
    _check(2, not problems, "; ".join(problems) or
           f"max {worst_z:.2f} se over 27 points, max |p1+p2-1| {worst_sum:.1e}, "
           f"quadrature {quad_time:.2f} s (Monte Carlo oracle {total - quad_time:.0f} s)")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_fuzzy_confusion_oracle():
    z = np.zeros(2)
    points = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    y = np.array([[1, 0], [1, 0], [0, 1]])
    dreg = np.array([[0.9, 0.1], [0.6, 0.4], [0.2, 0.8]])
    worst, col_ok = 0.0, True
    for variant in F.VARIANTS:
        fvs = F.build_fuzzy_validation(points, y, variant, dreg=dreg.T)
        eps = F.estimate_confusion(z, fvs).eps
        want = np.array(oracles.sigma_count_confusion(z, points.tolist(), y.tolist(),
                                                      dreg.tolist(), variant))
        worst = max(worst, float(np.max(np.abs(eps - want))))
        c = F.competence(eps).c
        col_ok &= bool(np.all(c.sum(axis=0) == 1.0))
    _check(3, worst <= 1e-12 and col_ok,
           f"max |eps - brute force| {worst:.1e}, competence columns sum to 1 exactly: {col_ok}")


# 4 ---------------------------------------------------------------------------

def test_criterion_4_correction_identities():
    rng = np.random.default_rng(0)
    raw = rng.uniform(size=(200, 2))
    rrc = rrc_probabilities(raw)
    identity = np.broadcast_to(np.eye(2), (200, 2, 2))
    d_identity = float(np.max(np.abs(E.correct(rrc, identity) - rrc)))
    d_uniform = float(np.max(np.abs(E.correct(rrc, np.full((200, 2, 2), 0.5)) - 0.5)))

    pts = rng.normal(size=(40, 4))
    d = rng.uniform(size=40)
    dr = np.vstack([d, 1 - d])
    Z = rng.normal(size=(25, 4))
    single = rng.integers(0, 2, size=(40, 2))
    single[single.sum(axis=1) == 2] = [0, 1]
    a, _ = F.estimate_confusion_batch(F.build_fuzzy_validation(pts, single, "fcm", dreg=dr), Z=Z)
    b, _ = F.estimate_confusion_batch(F.build_fuzzy_validation(pts, single, "fcm-o", dreg=dr), Z=Z)
    overlap_same = bool(np.array_equal(a, b))
    balanced = np.array([[1, 0]] * 12 + [[0, 1]] * 12 + [[1, 1]] * 8 + [[0, 0]] * 8)
    a, _ = F.estimate_confusion_batch(F.build_fuzzy_validation(pts, balanced, "fcm", dreg=dr), Z=Z)
    b, _ = F.estimate_confusion_batch(F.build_fuzzy_validation(pts, balanced, "fcm-w", dreg=dr), Z=Z)
    weighted_same = bool(np.array_equal(a, b))
    ok = d_identity <= 1e-12 and d_uniform == 0.0 and overlap_same and weighted_same
    _check(4, ok, f"identity {d_identity:.1e}, uniform {d_uniform:.1e}, "
                  f"FCM-O = FCM: {overlap_same}, FCM-W = FCM: {weighted_same}")


# 5 ---------------------------------------------------------------------------

def test_criterion_5_aggregation_invariant():
    rng = np.random.default_rng(5)
    worst = 0.0
    for n_labels in (2, 3, 6, 10):
        n_pairs = n_labels * (n_labels - 1) // 2
        s = rng.uniform(size=(1000, n_pairs))
        sup = np.stack([s, 1 - s], axis=2)
        soft = E.aggregate_soft(sup, n_labels).sum(axis=1)
        vote = E.aggregate_votes(E.crisp_decisions(sup), n_labels).sum(axis=1)
        worst = max(worst, float(np.max(np.abs(soft - n_labels / 2))),
                    float(np.max(np.abs(vote - n_labels / 2))))
    _check(5, worst <= 1e-9, f"max |sum of scores - L/2| {worst:.1e} over 4 x 1000 x 2 cases")


# 6 ---------------------------------------------------------------------------

def test_criterion_6_statistics_battery():
    from test_evaluation import FRIEDMAN_FIXTURE, WILCOXON_A, WILCOXON_B

    _, p_chi2, _ = ev.friedman_test(FRIEDMAN_FIXTURE)
    p_exact = oracles.friedman_exact_p(FRIEDMAN_FIXTURE)
    w = ev.wilcoxon_signed_rank(WILCOXON_A, WILCOXON_B)
    w_enum = oracles.wilcoxon_enumeration_p(WILCOXON_A, WILCOXON_B)
    x = np.arange(8.0)
    rho = (ev.spearman(x, np.exp(x)), ev.spearman(x, -x ** 3))
    ok = abs(p_chi2 - p_exact) <= 0.02 and abs(w - w_enum) <= 1e-12 and rho == (1.0, -1.0)
    _check(6, ok, f"Friedman chi2 p {p_chi2:.4f} vs exact {p_exact:.4f}; Wilcoxon {w:.6f} vs "
                  f"enumeration {w_enum:.6f}; Spearman {rho}")


# 7 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_emotions_corridor():
    _require(7, ["emotions"])
    report, elapsed = _run_all_variants("emotions")
    mean = report.to_json()["mean_losses"]
    plain, fcm = mean["plain"]["hamming"], mean["fcm"]["hamming"]
    ok = 0.26 <= plain <= 0.36 and 0.26 <= fcm <= 0.36 and elapsed < 600
    _check(7, ok, f"Hamming plain {plain:.3f}, FCM {fcm:.3f} (corridor [0.26, 0.36]); "
                  f"run {elapsed:.0f} s with all four variants")


# 8 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_zero_one_tendency():
    _require(8, ["emotions", "flags", "scene"])
    variants = ["plain", "fcm", "fcm-w", "fcm-o"]
    lm = np.array([[_run_all_variants(n)[0].to_json()["mean_losses"][v]["zero_one"]
                    for v in variants] for n in ("emotions", "flags", "scene")])
    ranks = ev.average_ranks(lm)
    corrected = float(np.mean(ranks[1:]))
    detail = (f"zero-one ranks plain {ranks[0]:.3f}, corrected mean {corrected:.3f} "
              f"({', '.join(f'{v} {r:.3f}' for v, r in zip(variants[1:], ranks[1:]))})")
    if corrected <= ranks[0]:
        record(8, "PASS", detail)
        return
    ARTIFACTS.mkdir(parents=True, exist_ok=True)
    (ARTIFACTS / "criterion8_warning.json").write_text(json.dumps(
        {"criterion": 8, "status": "warning", "variants": variants,
         "datasets": ["emotions", "flags", "scene"], "zero_one": lm.tolist(),
         "ranks": ranks.tolist()}, indent=1))
    record(8, "WARN", detail + f"; artifact {ARTIFACTS / 'criterion8_warning.json'}")
    import warnings
    warnings.warn("zero-one tendency not reproduced: " + detail)


# 9 ---------------------------------------------------------------------------

def test_criterion_9_determinism(tmp_path):
    data = tmp_path / "synthetic.csv"
    write_csv(make_toy(n=150, d=10, n_labels=4, seed=21), data)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"dataset = {data}\nlabels = last-4\nseed = 5\n")
    outs = []
    for i, jobs in enumerate((1, 1, 2)):
        out = tmp_path / f"out{i}"
        assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--jobs", str(jobs)]) == 0
        outs.append((out / "folds.csv").read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    _check(9, ok, f"folds.csv byte-identical across 2 serial runs and a 2-process run: {ok} "
                  f"({len(outs[0])} bytes, defaults with 10 folds)")
