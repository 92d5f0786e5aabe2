"""Local fuzzy confusion matrices and competence estimates for one label pair.

For a query point ``z`` and validation instances ``k`` the (product t-norm,
sigma-count) estimate is::

    eps[s][h] = sum_k v[s][k] * dreg[h][k] * n[k] * W[s]  /  sum_k n[k] * omega[k]

where ``v`` are true-class memberships, ``dreg`` the RRC decision-region
memberships at the validation points, ``n[k] = exp(-beta * |z - x_k|^2)`` the
neighbourhood membership, ``W`` the class weights (all ones except for the
weighted variant) and ``omega[k]`` the weight of instance ``k`` in the
neighbourhood count (its class weight if it belongs exclusively to one label of
the pair, otherwise 1).

Variants: ``"fcm"`` (exclusive instances only), ``"fcm-w"`` (class-weighted)
and ``"fcm-o"`` (instances carrying both labels join both classes with
membership 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rrc import RRCConfig, rrc_probabilities

VARIANTS = ("fcm", "fcm-w", "fcm-o")
TNORMS = ("product", "min")
DEFAULT_BETA = 1.0


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown confusion-matrix variant {variant!r}; expected one of {VARIANTS}")


def neighborhood_membership(z, x, beta: float = DEFAULT_BETA):
    """Gaussian potential ``exp(-beta * ||z - x||^2)``; ``x`` may be a matrix of rows."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if z.shape[-1] != x.shape[-1]:
        raise ValueError(f"dimension mismatch: {z.shape[-1]} vs {x.shape[-1]}")
    diff = x - z
    out = np.exp(-beta * np.sum(diff * diff, axis=-1))
    return float(out) if out.ndim == 0 else out


def squared_distances(Z: np.ndarray, X: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if Z.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {Z.shape[1]} vs {X.shape[1]}")
    d2 = (np.sum(Z * Z, axis=1)[:, None] + np.sum(X * X, axis=1)[None, :]
          - 2.0 * (Z @ X.T))
    return np.maximum(d2, 0.0)


def neighborhood_matrix(Z, X, beta: float = DEFAULT_BETA, rescale: bool = True) -> np.ndarray:
    """Memberships of every row of ``X`` in the neighbourhood of every row of ``Z``.

    With ``rescale`` each row is divided by its largest entry (computed in the
    exponent), which leaves every product-t-norm ratio unchanged while keeping
    far-away query points from underflowing to an all-zero row.
    """
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    d2 = squared_distances(Z, X)
    if rescale:
        d2 = d2 - d2.min(axis=1, keepdims=True)
    return np.exp(-beta * d2)


def pair_memberships(Y_pair: np.ndarray, variant: str) -> np.ndarray:
    """True-class memberships ``v`` of shape (2, M) from the pair's label columns."""
    _check_variant(variant)
    Y_pair = np.asarray(Y_pair)
    y1, y2 = Y_pair[:, 0] == 1, Y_pair[:, 1] == 1
    v = np.zeros((2, Y_pair.shape[0]))
    v[0, y1 & ~y2] = 1.0
    v[1, y2 & ~y1] = 1.0
    if variant == "fcm-o":
        both = y1 & y2
        v[0, both] = 0.5
        v[1, both] = 0.5
    return v


def class_weights(n_m1: int, n_m2: int) -> tuple[float, float]:
    """``w_s = min(1, |V_other| / |V_s|)``; an empty class keeps weight 1."""
    w1 = 1.0 if n_m1 == 0 else min(1.0, n_m2 / n_m1)
    w2 = 1.0 if n_m2 == 0 else min(1.0, n_m1 / n_m2)
    return w1, w2


@dataclass(frozen=True)
class FuzzyValidationSet:
    """Validation memberships for one pair; arrays are (2, M) or (M, d)."""

    features: np.ndarray
    v: np.ndarray
    dreg: np.ndarray
    weights: np.ndarray
    variant: str

    def __post_init__(self):
        _check_variant(self.variant)
        for name in ("features", "v", "dreg", "weights"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        m = self.features.shape[0]
        if self.v.shape != (2, m) or self.dreg.shape != (2, m) or self.weights.shape != (2,):
            raise ValueError("inconsistent fuzzy validation set shapes")
        if m < 1:
            raise ValueError("validation set is empty")

    @property
    def size(self) -> int:
        return self.features.shape[0]

    def numerator_weights(self) -> np.ndarray:
        """(2, 2, M) memberships of instance k in V_s ∩ D_h ∩ W_s (product t-norm)."""
        return (self.v * self.weights[:, None])[:, None, :] * self.dreg[None, :, :]

    def count_weights(self) -> np.ndarray:
        """omega[k]: class weight for exclusive pair members, 1 for everything else."""
        omega = np.ones(self.size)
        for s in range(2):
            omega[self.v[s] == 1.0] = self.weights[s]
        return omega


def build_fuzzy_validation(V_features: np.ndarray, Y_pair: np.ndarray, variant: str,
                           model=None, rrc_cfg: RRCConfig = RRCConfig(),
                           dreg: np.ndarray | None = None) -> FuzzyValidationSet:
    """Assemble the fuzzy validation structures of one pair.

    ``dreg`` (shape (2, M)) can be passed in when it has already been computed
    for another variant; otherwise it is the RRC probability of ``model``'s
    support at every validation point.
    """
    _check_variant(variant)
    V_features = np.atleast_2d(np.asarray(V_features, dtype=np.float64))
    if dreg is None:
        if model is None:
            raise ValueError("need either a model or precomputed decision regions")
        dreg = rrc_probabilities(model.predict_support(V_features), rrc_cfg).T
    v = pair_memberships(Y_pair, variant)
    if variant == "fcm-w":
        weights = class_weights(int(np.sum(v[0] == 1.0)), int(np.sum(v[1] == 1.0)))
    else:
        weights = (1.0, 1.0)
    return FuzzyValidationSet(V_features, v, dreg, np.array(weights), variant)


@dataclass(frozen=True)
class FuzzyConfusionMatrix:
    eps: np.ndarray  # eps[s][h], rows = true class, columns = decision
    degenerate: bool = False


@dataclass(frozen=True)
class CompetencePair:
    c: np.ndarray  # c[s][h]; every column sums to one


def _uniform_eps(n: int) -> np.ndarray:
    return np.full((n, 2, 2), 0.25)


def estimate_confusion_batch(fvs: FuzzyValidationSet, Z=None, beta: float = DEFAULT_BETA,
                             neigh: np.ndarray | None = None, tnorm: str = "product"):
    """Confusion matrices for many query points at once.

    Either ``Z`` (query features) or a precomputed ``neigh`` matrix (n, M) must
    be given.  Returns ``(eps, degenerate)`` with shapes (n, 2, 2) and (n,).
    """
    if tnorm not in TNORMS:
        raise ValueError(f"unknown t-norm {tnorm!r}")
    if neigh is None:
        if Z is None:
            raise ValueError("need query points or a neighbourhood matrix")
        neigh = neighborhood_matrix(Z, fvs.features, beta, rescale=(tnorm == "product"))
    neigh = np.atleast_2d(neigh)
    if neigh.shape[1] != fvs.size:
        raise ValueError("neighbourhood matrix does not match the validation set")
    omega = fvs.count_weights()
    if tnorm == "product":
        # row-wise reductions: results do not depend on the batch size
        num = np.sum(neigh[:, None, :] * fvs.numerator_weights().reshape(1, 4, -1), axis=2)
        den = np.sum(neigh * omega[None, :], axis=1)
    else:
        memb = np.minimum(fvs.v[:, None, :], fvs.dreg[None, :, :])
        memb = np.minimum(memb, fvs.weights[:, None, None]).reshape(4, -1)
        num = np.minimum(neigh[:, None, :], memb[None, :, :]).sum(axis=2)
        den = np.minimum(neigh, omega[None, :]).sum(axis=1)
    degenerate = ~(den > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = (num / den[:, None]).reshape(-1, 2, 2)
    eps[degenerate] = _uniform_eps(int(degenerate.sum()))
    return eps, degenerate


def estimate_confusion(z, fvs: FuzzyValidationSet, beta: float = DEFAULT_BETA,
                       tnorm: str = "product") -> FuzzyConfusionMatrix:
    eps, flag = estimate_confusion_batch(fvs, Z=np.atleast_2d(z), beta=beta, tnorm=tnorm)
    return FuzzyConfusionMatrix(eps[0], bool(flag[0]))


def competence_batch(eps: np.ndarray) -> np.ndarray:
    """Column-normalise (n, 2, 2) confusion matrices; an all-zero column becomes (0.5, 0.5).

    The smaller entry of each column is computed by division and the larger as
    its complement, so columns sum to exactly one and swapping the two classes
    swaps the result bit for bit.
    """
    eps = np.asarray(eps, dtype=np.float64)
    if np.any(eps < 0):
        raise ValueError("confusion matrix entries must be non-negative")
    top, bottom = eps[..., 0, :], eps[..., 1, :]
    total = top + bottom
    small = np.minimum(top, bottom)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(total > 0, small / total, 0.5)
    large = 1.0 - frac
    c = np.empty_like(eps)
    top_small = top <= bottom
    c[..., 0, :] = np.where(top_small, frac, large)
    c[..., 1, :] = np.where(top_small, large, frac)
    return c


def competence(fcm) -> CompetencePair:
    eps = fcm.eps if isinstance(fcm, FuzzyConfusionMatrix) else np.asarray(fcm)
    return CompetencePair(competence_batch(eps[None])[0])
