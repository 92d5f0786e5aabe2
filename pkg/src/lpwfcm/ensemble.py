"""Label-pairwise (one-vs-one) multi-label ensemble with optional correction.

One binary member per unordered label pair ``(m1, m2)``, trained on instances
carrying exactly one of the two labels.  Member supports are either aggregated
directly (``"plain"``) or first corrected: the RRC probabilities at the query
point are mixed through the competence matrix of a local fuzzy confusion matrix
estimated on a held-out validation set::

    p_s = sum_h P_rrc(h | x) * c[s][h]

Labels and pairs are 0-based throughout; pairs are enumerated
(0,1), (0,2), ..., (0,L-1), (1,2), ...
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import base, fuzzy
from .data import (FeatureScaler, MultiLabelDataset, SplitSpec, split_train_validation,
                   standardize)
from .rrc import RRCConfig, rrc_probabilities
from .seeding import derive_seed

MODES = ("plain",) + fuzzy.VARIANTS
AGGREGATIONS = ("soft", "vote")
BUNDLE_VERSION = 1


class PairIndex(NamedTuple):
    m: int
    m1: int
    m2: int


def enumerate_pairs(n_labels: int) -> list[PairIndex]:
    if n_labels < 2:
        raise ValueError(f"need at least 2 labels, got {n_labels}")
    return [PairIndex(m, a, b)
            for m, (a, b) in enumerate(itertools.combinations(range(n_labels), 2))]


def pairwise_training_set(X: np.ndarray, Y: np.ndarray, pair: PairIndex):
    """Instances with exactly one of the pair's labels; target 0 for ``m1``, 1 for ``m2``.

    Returns ``(training_set, degenerate)`` where ``degenerate`` is true when the
    result is empty or contains a single class.
    """
    y1, y2 = Y[:, pair.m1], Y[:, pair.m2]
    keep = (y1 + y2) == 1
    ts = base.BinaryTrainingSet(X[keep], y2[keep])
    degenerate = ts.targets.size == 0 or ts.single_class
    return ts, degenerate


@dataclass(frozen=True)
class Prediction:
    relevant: np.ndarray
    ranking: np.ndarray


def correct(rrc_p: np.ndarray, comp: np.ndarray) -> np.ndarray:
    """Mix RRC probabilities (n, 2) through competence matrices (n, 2, 2)."""
    return np.einsum("nh,nsh->ns", np.atleast_2d(rrc_p), np.asarray(comp).reshape(-1, 2, 2))


def aggregate_soft(supports: np.ndarray, n_labels: int) -> np.ndarray:
    """Normalised total support per label from pair supports of shape (n, P, 2)."""
    supports = np.asarray(supports, dtype=np.float64)
    pairs = enumerate_pairs(n_labels)
    if supports.ndim == 2:
        supports = supports[None]
    if supports.shape[1] != len(pairs):
        raise ValueError(f"expected {len(pairs)} pair supports, got {supports.shape[1]}")
    scores = np.zeros((supports.shape[0], n_labels))
    for p in pairs:
        scores[:, p.m1] += supports[:, p.m, 0]
        scores[:, p.m2] += supports[:, p.m, 1]
    return scores / (n_labels - 1)


def crisp_decisions(supports: np.ndarray) -> np.ndarray:
    """Winner within each pair: 0 for ``m1``, 1 for ``m2``; ties go to ``m1``."""
    supports = np.asarray(supports)
    return (supports[..., 1] > supports[..., 0]).astype(np.int8)


def aggregate_votes(decisions: np.ndarray, n_labels: int) -> np.ndarray:
    """Normalised vote counts from crisp pair decisions of shape (n, P)."""
    decisions = np.asarray(decisions)
    pairs = enumerate_pairs(n_labels)
    if decisions.ndim == 1:
        decisions = decisions[None]
    if decisions.shape[1] != len(pairs):
        raise ValueError(f"expected {len(pairs)} pair decisions, got {decisions.shape[1]}")
    votes = np.zeros((decisions.shape[0], n_labels))
    for p in pairs:
        won_by_second = decisions[:, p.m] == 1
        votes[:, p.m1] += ~won_by_second
        votes[:, p.m2] += won_by_second
    return votes / (n_labels - 1)


def threshold(scores: np.ndarray, theta: float = 0.5) -> np.ndarray:
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return (np.asarray(scores) > theta).astype(np.int8)


@dataclass(frozen=True)
class LPWConfig:
    members: int = 20
    fraction: float = 0.2
    concentration: float = 2.0
    quad_points: int = 1025
    rrc_method: str = "integral"
    beta: float = 1.0
    tnorm: str = "product"
    t: float = 0.6
    aggregation: str = "soft"
    theta: float = 0.5

    def __post_init__(self):
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.tnorm not in fuzzy.TNORMS:
            raise ValueError(f"tnorm must be one of {fuzzy.TNORMS}")
        self.rrc  # validates concentration / quadrature settings

    @property
    def rrc(self) -> RRCConfig:
        return RRCConfig(self.concentration, self.quad_points, self.rrc_method)


def train_members(X: np.ndarray, Y: np.ndarray, config: LPWConfig, seed: int,
                  label_keys: Sequence[int] | None = None) -> list:
    """Train one member per pair.

    The random stream of pair ``(a, b)`` is keyed by the sorted ``label_keys``
    of its two labels (default: label positions), so relabelling the columns
    while carrying the keys along reproduces the same members.
    """
    n_labels = Y.shape[1]
    keys = list(range(n_labels)) if label_keys is None else list(label_keys)
    members = []
    for p in enumerate_pairs(n_labels):
        ts, degenerate = pairwise_training_set(X, Y, p)
        if degenerate:
            members.append(base.constant_from_counts(
                (int(Y[:, p.m1].sum()), int(Y[:, p.m2].sum())), X.shape[1]))
            continue
        ka, kb = sorted((keys[p.m1], keys[p.m2]))
        members.append(base.train_subspace_ensemble(
            ts, config.members, config.fraction, derive_seed(seed, ka, kb)))
    return members


@dataclass
class ValidationData:
    features: np.ndarray  # standardised (M, d)
    Y: np.ndarray  # (M, L)
    dreg: np.ndarray  # (P, 2, M) RRC probabilities at the validation points


@dataclass
class LPWModel:
    """A trained pairwise ensemble, optionally with validation data for correction."""

    n_labels: int
    label_names: tuple[str, ...]
    scaler: FeatureScaler
    members: list
    config: LPWConfig
    validation: ValidationData | None = None
    seed: int = 0
    _fvs_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def pairs(self) -> list[PairIndex]:
        return enumerate_pairs(self.n_labels)

    def fuzzy_sets(self, variant: str) -> list[fuzzy.FuzzyValidationSet]:
        if self.validation is None:
            raise ValueError("this model was trained without a validation set")
        if variant not in self._fvs_cache:
            v = self.validation
            self._fvs_cache[variant] = [
                fuzzy.build_fuzzy_validation(v.features, v.Y[:, [p.m1, p.m2]], variant,
                                             dreg=v.dreg[p.m])
                for p in self.pairs]
        return self._fvs_cache[variant]

    def raw_supports(self, Xs: np.ndarray) -> np.ndarray:
        return np.stack([np.atleast_2d(mem.predict_support(Xs)) for mem in self.members], axis=1)

    def pair_supports(self, X, mode: str = "plain") -> np.ndarray:
        """Pair supports (n, P, 2) for raw (unstandardised) inputs ``X``."""
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        Xs = self.scaler.transform(np.atleast_2d(X))
        raw = self.raw_supports(Xs)
        if mode == "plain":
            return raw
        cfg = self.config
        rrc_p = rrc_probabilities(raw.reshape(-1, 2), cfg.rrc).reshape(raw.shape)
        neigh = fuzzy.neighborhood_matrix(Xs, self.validation.features, cfg.beta,
                                          rescale=(cfg.tnorm == "product"))
        out = np.empty_like(raw)
        for p, fvs in zip(self.pairs, self.fuzzy_sets(mode)):
            eps, _ = fuzzy.estimate_confusion_batch(fvs, neigh=neigh, tnorm=cfg.tnorm)
            out[:, p.m] = correct(rrc_p[:, p.m], fuzzy.competence_batch(eps))
        return out

    def rank(self, X, mode: str = "plain", aggregation: str | None = None) -> np.ndarray:
        aggregation = aggregation or self.config.aggregation
        sup = self.pair_supports(X, mode)
        if aggregation == "soft":
            return aggregate_soft(sup, self.n_labels)
        if aggregation == "vote":
            return aggregate_votes(crisp_decisions(sup), self.n_labels)
        raise ValueError(f"unknown aggregation {aggregation!r}")

    def predict(self, X, mode: str = "plain", aggregation: str | None = None,
                theta: float | None = None) -> Prediction:
        scores = self.rank(X, mode, aggregation)
        theta = self.config.theta if theta is None else theta
        return Prediction(threshold(scores, theta), scores)


def fit_plain(train: MultiLabelDataset, config: LPWConfig, seed: int,
              label_keys: Sequence[int] | None = None) -> LPWModel:
    """Reference ensemble trained on the whole training set, no validation part."""
    scaler = standardize(train)
    Xs = scaler.transform(train.X)
    members = train_members(Xs, train.Y, config, seed, label_keys)
    return LPWModel(train.n_labels, train.label_names, scaler, members, config, None, seed)


def fit_corrected(train: MultiLabelDataset, config: LPWConfig, seed: int, split_seed: int,
                  label_keys: Sequence[int] | None = None) -> LPWModel:
    """Split into T and V, train members on T, store RRC decision regions on V.

    Features are standardised with statistics of T.  The same model serves all
    three correction variants.
    """
    T, V = split_train_validation(train, SplitSpec(t=config.t, seed=split_seed))
    scaler = standardize(T)
    Ts, Vs = scaler.transform(T.X), scaler.transform(V.X)
    members = train_members(Ts, T.Y, config, seed, label_keys)
    n_pairs = len(members)
    raw = np.stack([np.atleast_2d(m.predict_support(Vs)) for m in members], axis=1)
    rrc_p = rrc_probabilities(raw.reshape(-1, 2), config.rrc).reshape(raw.shape)
    dreg = np.transpose(rrc_p, (1, 2, 0)).copy()  # (P, 2, M)
    assert dreg.shape[0] == n_pairs
    validation = ValidationData(Vs, np.asarray(V.Y), dreg)
    return LPWModel(train.n_labels, train.label_names, scaler, members, config,
                    validation, seed)


# ---------------------------------------------------------------------------
# Bundle persistence: a directory with manifest.json and one JSON per pair.

def config_hash(config: LPWConfig) -> str:
    blob = json.dumps(asdict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_model(model: LPWModel, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pair_files = []
    for p, member in zip(model.pairs, model.members):
        doc = {"pair": [p.m1, p.m2], "member": member.to_dict()}
        if model.validation is not None:
            doc["dreg"] = model.validation.dreg[p.m].tolist()
        name = f"pair_{p.m1:03d}_{p.m2:03d}.json"
        (directory / name).write_text(json.dumps(doc))
        pair_files.append(name)
    manifest = {
        "format": "lpwfcm.model-bundle",
        "version": BUNDLE_VERSION,
        "n_labels": model.n_labels,
        "label_names": list(model.label_names),
        "pairs": [[p.m1, p.m2] for p in model.pairs],
        "pair_files": pair_files,
        "seed": model.seed,
        "config": asdict(model.config),
        "config_hash": config_hash(model.config),
        "scaler": {"mean": model.scaler.mean.tolist(), "scale": model.scaler.scale.tolist()},
        "validation": None if model.validation is None else {
            "features": model.validation.features.tolist(),
            "Y": model.validation.Y.tolist(),
        },
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1))


def load_model(directory) -> LPWModel:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format") != "lpwfcm.model-bundle" or manifest.get("version") != BUNDLE_VERSION:
        raise ValueError("not a version-1 model bundle")
    config = LPWConfig(**manifest["config"])
    if config_hash(config) != manifest["config_hash"]:
        raise ValueError("config hash mismatch in model bundle")
    members, dregs = [], []
    for name in manifest["pair_files"]:
        doc = json.loads((directory / name).read_text())
        members.append(base.model_from_dict(doc["member"]))
        if "dreg" in doc:
            dregs.append(doc["dreg"])
    scaler = FeatureScaler(np.array(manifest["scaler"]["mean"]),
                           np.array(manifest["scaler"]["scale"]))
    validation = None
    if manifest["validation"] is not None:
        validation = ValidationData(np.array(manifest["validation"]["features"], dtype=float),
                                    np.array(manifest["validation"]["Y"], dtype=np.int8),
                                    np.array(dregs, dtype=float))
    return LPWModel(manifest["n_labels"], tuple(manifest["label_names"]), scaler, members,
                    config, validation, manifest["seed"])
