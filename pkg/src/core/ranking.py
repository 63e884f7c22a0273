"""
Learning-to-Rank Generalization Workbench
Core module - query instances, linear scoring, permutations, radii,
ball projections and the NDCG evaluation utility
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from src.core.errors import EmptyDatasetError, NonFiniteError, ShapeError

# Relative tolerance of the permutation-invariance check
INVARIANCE_TOL = 1e-12


# =============================================================================
# Core Module: Domain Types
# =============================================================================

class NormKind(str, Enum):
    """Which weight ball the hypothesis class lives in"""
    L2 = "L2"
    L1 = "L1"


def _as_readonly(array):
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class QueryInstance:
    """One query: an m x d feature matrix and its m relevance labels"""
    features: np.ndarray
    labels: np.ndarray
    qid: Optional[str] = None

    def __post_init__(self):
        features = _as_readonly(self.features)
        labels = _as_readonly(self.labels)
        if features.ndim != 2:
            raise ShapeError(f"features must be a 2-D matrix, got shape {features.shape}")
        m, d = features.shape
        if m < 1 or d < 1:
            raise ShapeError(f"features must have m >= 1 and d >= 1, got {features.shape}")
        if labels.shape != (m,):
            raise ShapeError(f"labels must have length {m}, got shape {labels.shape}")
        if not np.all(np.isfinite(features)):
            raise NonFiniteError("features contain non-finite entries")
        if not np.all(np.isfinite(labels)):
            raise NonFiniteError("labels contain non-finite entries")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered sample of query instances sharing the feature dimension d"""
    instances: tuple

    def __post_init__(self):
        instances = tuple(self.instances)
        if not instances:
            raise EmptyDatasetError("a dataset needs at least one query instance")
        d = instances[0].d
        for i, inst in enumerate(instances):
            if inst.d != d:
                raise ShapeError(f"instance {i} has d={inst.d}, expected {d}")
        object.__setattr__(self, "instances", instances)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, index):
        return self.instances[index]

    @property
    def n(self):
        return len(self.instances)

    @property
    def d(self):
        return self.instances[0].d

    @property
    def max_m(self):
        return max(inst.m for inst in self.instances)

    @cached_property
    def stacked(self):
        """(n, m, d) features and (n, m) labels when every list has the same m, else None"""
        if any(inst.m != self.instances[0].m for inst in self.instances):
            return None
        features = np.stack([inst.features for inst in self.instances])
        labels = np.stack([inst.labels for inst in self.instances])
        return features, labels

    def extended(self, instance):
        """Return a new dataset with one more instance appended"""
        return Dataset(self.instances + (instance,))

    def subset(self, indices):
        """Return the dataset restricted to the given instance indices"""
        return Dataset(tuple(self.instances[i] for i in indices))


@dataclass(frozen=True, eq=False)
class ScoringParams:
    """Weights of the permutation-invariant linear class Xw + (1'Xv)1

    Leaving v out gives the plain linear scorer Xw.
    """
    w: np.ndarray
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        w = _as_readonly(self.w)
        if w.ndim != 1:
            raise ShapeError(f"w must be a vector, got shape {w.shape}")
        object.__setattr__(self, "w", w)
        if self.v is not None:
            v = _as_readonly(self.v)
            if v.shape != w.shape:
                raise ShapeError(f"v must match w's shape {w.shape}, got {v.shape}")
            object.__setattr__(self, "v", v)

    @property
    def d(self):
        return self.w.shape[0]


@dataclass(frozen=True)
class ClassSpec:
    """Hypothesis class: an l2 ball (radius W2, row l2 radius R_X) or an
    l1 ball (radius W1, row l-inf radius R-bar_X)"""
    norm_kind: NormKind = NormKind.L2
    weight_radius: float = 1.0
    input_radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
        if not self.weight_radius > 0:
            raise ValueError(f"weight_radius must be positive, got {self.weight_radius}")
        if not self.input_radius > 0:
            raise ValueError(f"input_radius must be positive, got {self.input_radius}")

    @property
    def score_radius(self):
        """Bound on |<x, w>| for any admissible row x and weight w (Hoelder)"""
        return self.weight_radius * self.input_radius

    def project(self, w):
        if self.norm_kind is NormKind.L2:
            return project_l2(w, self.weight_radius)
        return project_l1(w, self.weight_radius)

    def weight_norm(self, w):
        order = 2 if self.norm_kind is NormKind.L2 else 1
        return float(np.linalg.norm(w, ord=order))

    def contains(self, w, slack=1e-9):
        return self.weight_norm(w) <= self.weight_radius + slack


@dataclass(frozen=True, eq=False)
class FullLinearMap:
    """A general linear map R^{m x d} -> R^m, f(X)_i = <X, W_i>

    weights has shape (m, m, d); weights[i] is the matrix W_i.
    """
    weights: np.ndarray

    def __post_init__(self):
        weights = _as_readonly(self.weights)
        if weights.ndim != 3 or weights.shape[0] != weights.shape[1]:
            raise ShapeError(f"weights must have shape (m, m, d), got {weights.shape}")
        object.__setattr__(self, "weights", weights)

    def __call__(self, instance):
        if instance.features.shape != self.weights.shape[1:]:
            raise ShapeError(
                f"map expects X of shape {self.weights.shape[1:]}, got {instance.features.shape}"
            )
        return np.einsum("ijk,jk->i", self.weights, instance.features)


Scorer = Union[ScoringParams, Callable[[QueryInstance], np.ndarray]]


# =============================================================================
# Core Module: Scoring and Permutations
# =============================================================================

def score(params, instance):
    """Score vector Xw, or Xw + (1'Xv)1 when v is present"""
    if params.d != instance.d:
        raise ShapeError(f"weights have d={params.d} but instance has d={instance.d}")
    X = instance.features
    s = X @ params.w
    if params.v is not None:
        s = s + np.sum(X @ params.v)
    return s


def _check_permutation(perm, m):
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (m,):
        raise ShapeError(f"permutation has degree {perm.shape[0] if perm.ndim else 0}, expected {m}")
    if not np.array_equal(np.sort(perm), np.arange(m)):
        raise ValueError(f"{perm.tolist()} is not a permutation of 0..{m - 1}")
    return perm


def inverse_permutation(perm):
    perm = np.asarray(perm, dtype=np.int64)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.shape[0])
    return inverse


def apply_permutation(perm, instance):
    """Row j of the result is row perm[j] of the input; labels follow"""
    perm = _check_permutation(perm, instance.m)
    return QueryInstance(instance.features[perm], instance.labels[perm], instance.qid)


@dataclass(frozen=True)
class InvarianceCheck:
    passed: bool
    deviation: float


def _score_with(scorer, instance):
    if isinstance(scorer, ScoringParams):
        return score(scorer, instance)
    return np.asarray(scorer(instance), dtype=np.float64)


def check_invariance(scorer, instance, perm):
    """Test pi f(X) = f(pi X) for one permutation"""
    perm = _check_permutation(perm, instance.m)
    s = _score_with(scorer, instance)
    permuted_scores = _score_with(scorer, apply_permutation(perm, instance))
    deviation = float(np.max(np.abs(s[perm] - permuted_scores)))
    tolerance = INVARIANCE_TOL * (1.0 + float(np.max(np.abs(s))))
    return InvarianceCheck(passed=deviation <= tolerance, deviation=deviation)


def rank_from_scores(s):
    """Indices sorted by decreasing score; ties keep ascending index order"""
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("scores contain non-finite entries")
    return np.argsort(-s, kind="stable")


# =============================================================================
# Core Module: NDCG
# =============================================================================

def gain(y):
    """Gain function G(t) = 2^t - 1"""
    return np.power(2.0, np.asarray(y, dtype=np.float64)) - 1.0


def discount(position):
    """Discount function D(i) = 1 / log2(1 + i), positions start at 1"""
    return 1.0 / np.log2(1.0 + np.asarray(position, dtype=np.float64))


def ndcg_at_k(s, y, k):
    """NDCG@k of the ranking induced by s; all-zero gains give 1.0"""
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise ShapeError(f"scores {s.shape} and labels {y.shape} must be equal-length vectors")
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if k > s.shape[0]:
        raise ValueError(f"k={k} exceeds list length m={s.shape[0]}")
    gains = gain(y)
    discounts = discount(np.arange(1, k + 1))
    ideal = float(np.sort(gains)[::-1][:k] @ discounts)
    if ideal <= 0.0:
        return 1.0
    dcg = float(gains[rank_from_scores(s)[:k]] @ discounts)
    return dcg / ideal


def mean_ndcg_at_k(params, dataset, k=1):
    """Average NDCG@k over a dataset; lists shorter than k use their full length"""
    values = [ndcg_at_k(score(params, inst), inst.labels, min(k, inst.m)) for inst in dataset]
    return float(np.mean(values))


# =============================================================================
# Core Module: Radii and Projections
# =============================================================================

def input_radius(dataset, norm_kind=NormKind.L2):
    """Largest row l2 norm (L2 class) or row l-inf norm (L1 class)"""
    order = 2 if NormKind(norm_kind) is NormKind.L2 else np.inf
    return float(max(np.linalg.norm(inst.features, ord=order, axis=1).max() for inst in dataset))


def project_l2(w, radius):
    """Euclidean projection onto the l2 ball of the given radius"""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    w = np.asarray(w, dtype=np.float64)
    norm = np.linalg.norm(w)
    if norm <= radius:
        return w.copy()
    return w * (radius / norm)


def project_l1(w, radius):
    """Euclidean projection onto the l1 ball by sorting and soft thresholding"""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    w = np.asarray(w, dtype=np.float64)
    magnitudes = np.abs(w)
    if magnitudes.sum() <= radius:
        return w.copy()
    u = np.sort(magnitudes)[::-1]
    cssv = np.cumsum(u)
    ranks = np.arange(1, u.shape[0] + 1)
    rho = np.nonzero(u * ranks > (cssv - radius))[0][-1]
    theta = (cssv[rho] - radius) / (rho + 1.0)
    return np.sign(w) * np.clip(magnitudes - theta, 0.0, None)
