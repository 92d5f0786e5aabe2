"""Binary probabilistic base classifiers.

Gaussian naive Bayes trained on random feature subspaces; the ensemble output
is the mean member posterior, a support pair ``(s_m1, s_m2)`` summing to one.
Class 0 stands for the first label of a pair, class 1 for the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .seeding import rng_for

MODEL_FORMAT_VERSION = 1

VAR_FLOOR_FACTOR = 1e-9


@dataclass(frozen=True)
class BinaryTrainingSet:
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets).astype(np.int8)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("features must be N x d and targets length N")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("targets must be 0 or 1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def single_class(self) -> bool:
        return np.unique(self.targets).size < 2


@dataclass(frozen=True)
class GaussianNB:
    """Two-class Gaussian naive Bayes with empirical, unsmoothed priors."""

    prior: np.ndarray  # (2,)
    mean: np.ndarray  # (2, d)
    var: np.ndarray  # (2, d)

    @property
    def n_features(self) -> int:
        return self.mean.shape[1]

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.prior)
        out = np.empty((X.shape[0], 2))
        for c in range(2):
            if self.prior[c] == 0:
                out[:, c] = -np.inf
                continue
            diff = X - self.mean[c]
            out[:, c] = log_prior[c] - 0.5 * (
                np.sum(np.log(2.0 * np.pi * self.var[c]))
                + np.sum(diff * diff / self.var[c], axis=1))
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(np.atleast_2d(X))
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def to_dict(self) -> dict:
        return {"prior": self.prior.tolist(), "mean": self.mean.tolist(),
                "var": self.var.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianNB":
        return cls(np.array(d["prior"], dtype=float), np.array(d["mean"], dtype=float),
                   np.array(d["var"], dtype=float))


def train_gnb(ts: BinaryTrainingSet) -> GaussianNB:
    """Fit per-class Gaussian moments.

    The per-class variance is floored at ``1e-9 * (feature variance over the
    whole training set + 1e-12)`` so constant within-class features stay
    finite.  A class absent from ``ts`` gets prior 0 and is never predicted.
    """
    X, y = ts.features, ts.targets
    n, d = X.shape
    if n < 1:
        raise ValueError("empty training set")
    floor = VAR_FLOOR_FACTOR * (X.var(axis=0) + 1e-12)
    prior = np.zeros(2)
    mean = np.zeros((2, d))
    var = np.ones((2, d))
    for c in range(2):
        Xc = X[y == c]
        prior[c] = Xc.shape[0] / n
        if Xc.shape[0]:
            mean[c] = Xc.mean(axis=0)
            var[c] = np.maximum(Xc.var(axis=0), floor)
    return GaussianNB(prior, mean, var)


@dataclass(frozen=True)
class SubspaceEnsemble:
    subsets: tuple[np.ndarray, ...]
    models: tuple[GaussianNB, ...]
    n_features: int
    subspace_fraction: float

    @property
    def member_count(self) -> int:
        return len(self.models)

    def predict_support(self, X: np.ndarray) -> np.ndarray:
        return predict_support(self, X)

    def to_dict(self) -> dict:
        return {
            "format": "lpwfcm.subspace-ensemble",
            "version": MODEL_FORMAT_VERSION,
            "n_features": self.n_features,
            "subspace_fraction": self.subspace_fraction,
            "members": [{"features": s.tolist(), "gnb": m.to_dict()}
                        for s, m in zip(self.subsets, self.models)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubspaceEnsemble":
        if d.get("format") != "lpwfcm.subspace-ensemble" or d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError("not a version-1 subspace ensemble document")
        members = d["members"]
        return cls(tuple(np.array(m["features"], dtype=np.intp) for m in members),
                   tuple(GaussianNB.from_dict(m["gnb"]) for m in members),
                   int(d["n_features"]), float(d["subspace_fraction"]))


def subspace_size(d: int, fraction: float) -> int:
    return max(1, int(math.floor(fraction * d + 0.5)))


def train_subspace_ensemble(ts: BinaryTrainingSet, members: int = 20, fraction: float = 0.2,
                            seed: int = 0) -> SubspaceEnsemble:
    """Train ``members`` GNB models, each on its own random feature subset.

    Member ``i`` draws its subset from the stream keyed ``(seed, i)``, so
    subsets do not depend on training order.  Subsets are sampled without
    replacement within a member and independently across members.
    """
    d = ts.features.shape[1]
    if d < 1:
        raise ValueError("need at least one feature")
    if members < 1:
        raise ValueError("need at least one member")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"subspace fraction must lie in (0, 1], got {fraction}")
    k = subspace_size(d, fraction)
    subsets, models = [], []
    for i in range(members):
        idx = np.sort(rng_for(seed, i).choice(d, size=k, replace=False))
        subsets.append(idx)
        models.append(train_gnb(BinaryTrainingSet(ts.features[:, idx], ts.targets)))
    return SubspaceEnsemble(tuple(subsets), tuple(models), d, float(fraction))


def predict_support(ens: SubspaceEnsemble, X) -> np.ndarray:
    """Mean member posterior; returns shape (n, 2), or (2,) for a single vector."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != ens.n_features:
        raise ValueError(f"expected {ens.n_features} features, got {X2.shape[1]}")
    acc = np.zeros((X2.shape[0], 2))
    for idx, model in zip(ens.subsets, ens.models):
        acc += model.predict_proba(X2[:, idx])
    acc /= len(ens.models)
    return acc[0] if single else acc


@dataclass(frozen=True)
class ConstantSupport:
    """Stand-in member for a pair without two-class training data."""

    support: tuple[float, float]
    n_features: int

    def predict_support(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[-1]}")
        if X.ndim == 1:
            return np.array(self.support)
        return np.tile(np.array(self.support), (X.shape[0], 1))

    def to_dict(self) -> dict:
        return {"format": "lpwfcm.constant-support", "version": MODEL_FORMAT_VERSION,
                "support": list(self.support), "n_features": self.n_features}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstantSupport":
        return cls((float(d["support"][0]), float(d["support"][1])), int(d["n_features"]))


def constant_from_counts(counts: Sequence[int], n_features: int) -> ConstantSupport:
    n1, n2 = (int(c) for c in counts)
    if n1 + n2 == 0:
        return ConstantSupport((0.5, 0.5), n_features)
    return ConstantSupport((n1 / (n1 + n2), n2 / (n1 + n2)), n_features)


def model_from_dict(d: dict):
    fmt = d.get("format")
    if fmt == "lpwfcm.subspace-ensemble":
        return SubspaceEnsemble.from_dict(d)
    if fmt == "lpwfcm.constant-support":
        return ConstantSupport.from_dict(d)
    raise ValueError(f"unknown model format {fmt!r}")
