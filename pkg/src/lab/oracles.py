"""
Learning-to-Rank Generalization Workbench
Lab module - independent numerical oracles for loss gradients, Lipschitz and
smoothness constants, operator norms and the smoothness inequalities
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.errors import UnsupportedOperationError
from src.core.ranking import ClassSpec

logger = logging.getLogger(__name__)

# Largest m for which the inf->1 norm is computed by sign enumeration
MAX_ENUMERATION_M = 12


def batch_values(loss, S, Y):
    batch = getattr(loss, "value_batch", None)
    if batch is not None:
        return batch(S, Y)
    Y = np.broadcast_to(Y, S.shape)
    return np.array([loss.value(s, y) for s, y in zip(S, Y)])


def batch_gradients(loss, S, Y):
    batch = getattr(loss, "gradient_batch", None)
    if batch is not None:
        return batch(S, Y)
    Y = np.broadcast_to(Y, S.shape)
    return np.array([loss.gradient(s, y) for s, y in zip(S, Y)])


# =============================================================================
# Lab Module: Gradients and Lipschitz Constants
# =============================================================================

def finite_diff_gradient(loss, s, y, h=1e-6):
    """Central differences (phi(s + h e_j) - phi(s - h e_j)) / 2h"""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    s = np.asarray(s, dtype=np.float64)
    steps = h * np.eye(s.shape[0])
    forward = batch_values(loss, s + steps, y)
    backward = batch_values(loss, s - steps, y)
    return (forward - backward) / (2.0 * h)


@dataclass(frozen=True)
class SamplerSpec:
    """Scores uniform in [-score_scale, score_scale]^m, grades uniform in {0..y_max}"""
    m: int
    score_scale: float = 1.0
    y_max: int = 4
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if not self.score_scale > 0:
            raise ValueError(f"score_scale must be positive, got {self.score_scale}")
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        if self.y_max < 0:
            raise ValueError(f"y_max must be nonnegative, got {self.y_max}")

    def draw(self, rng, count):
        scores = rng.uniform(-self.score_scale, self.score_scale, size=(count, self.m))
        labels = rng.integers(0, self.y_max + 1, size=(count, self.m)).astype(np.float64)
        return scores, labels


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    scores: Optional[np.ndarray]
    labels: Optional[np.ndarray]


def empirical_lipschitz_inf(loss, sampler, batch_size=4096):
    """Largest l1 gradient norm over sampled (s, y), with the point attaining it"""
    rng = np.random.default_rng(sampler.seed)
    best, best_s, best_y = 0.0, None, None
    remaining = sampler.trials
    while remaining > 0:
        count = min(batch_size, remaining)
        remaining -= count
        S, Y = sampler.draw(rng, count)
        norms = np.abs(batch_gradients(loss, S, Y)).sum(axis=1)
        k = int(np.argmax(norms))
        if best_s is None or norms[k] > best:
            best, best_s, best_y = float(norms[k]), S[k].copy(), Y[k].copy()
    logger.debug("empirical G_inf for m=%d: %.6g", sampler.m, best)
    return LipschitzEstimate(best, best_s, best_y)


def concentrated_lipschitz_inf(loss, m, gaps=(1.0, 4.0, 16.0, 64.0)):
    """Largest l1 gradient norm over the family s = t e_1, y = t e_0

    Labels put all their mass on one document while the scores favour another,
    so ||softmax(s) - softmax(y)||_1 climbs to 2 as the gap t grows.
    """
    if m < 2:
        raise ValueError(f"the concentrated family needs m >= 2, got {m}")
    best, best_s, best_y = 0.0, None, None
    for t in gaps:
        s = np.zeros(m)
        s[1] = t
        y = np.zeros(m)
        y[0] = t
        norm = float(np.abs(loss.gradient(s, y)).sum())
        if best_s is None or norm > best:
            best, best_s, best_y = norm, s, y
    logger.debug("concentrated G_inf for m=%d: %.6g", m, best)
    return LipschitzEstimate(best, best_s, best_y)


# =============================================================================
# Lab Module: Operator Norms
# =============================================================================

@dataclass(frozen=True)
class OperatorNorm:
    value: float
    abs_sum_bound: float
    exact: bool
    argmax: Optional[np.ndarray] = None


def sign_vectors(m):
    codes = np.arange(2 ** m)[:, None] >> np.arange(m)[None, :]
    return 1.0 - 2.0 * (codes & 1)


def op_norm_inf_to_1(M):
    """max over v in {-1, 1}^m of ||M v||_1, exact up to m = 12

    Larger matrices get the entrywise absolute sum only, flagged inexact.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    abs_sum = float(np.abs(M).sum())
    m = M.shape[1]
    if m > MAX_ENUMERATION_M:
        return OperatorNorm(value=abs_sum, abs_sum_bound=abs_sum, exact=False)
    signs = sign_vectors(m)
    norms = np.abs(signs @ M.T).sum(axis=1)
    k = int(np.argmax(norms))
    return OperatorNorm(value=float(norms[k]), abs_sum_bound=abs_sum, exact=True, argmax=signs[k])


@dataclass(frozen=True)
class Lemma1Report:
    closed_form: float
    sampled_sup: float
    basis_sup: float
    passed: bool


def verify_lemma1(X, p, samples=1000, seed=0):
    """Compare sup over ||v||_1 = 1 of ||X'v||_p with the largest row p-norm of X"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    closed = float(np.linalg.norm(X, ord=p, axis=1).max())

    basis = np.concatenate([np.eye(X.shape[0]), -np.eye(X.shape[0])])
    basis_sup = float(np.linalg.norm(basis @ X, ord=p, axis=1).max())

    rng = np.random.default_rng(seed)
    v = rng.laplace(size=(samples, X.shape[0]))
    v /= np.abs(v).sum(axis=1, keepdims=True)
    sampled = float(np.linalg.norm(v @ X, ord=p, axis=1).max()) if samples else 0.0
    sampled_sup = max(sampled, basis_sup)

    tol = 1e-12 * (1.0 + closed)
    passed = sampled_sup <= closed + tol and abs(basis_sup - closed) <= tol
    return Lemma1Report(closed, sampled_sup, basis_sup, passed)


# =============================================================================
# Lab Module: Smoothness Inequalities
# =============================================================================

@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    passed: bool


def _require_smoothness(loss, spec, m):
    h_phi = loss.constants(spec, m).smoothness_inf
    if h_phi is None:
        raise UnsupportedOperationError(f"{loss.name} has no smoothness constant")
    return h_phi


def _compare(lhs, rhs):
    return InequalityReport(lhs, rhs, lhs <= rhs * (1.0 + 1e-9) + 1e-12)


def self_bounding_check(loss, spec, X, y, w):
    """||grad_w phi(Xw, y)||_2 <= sqrt(4 H_w phi(Xw, y)) with H_w = H_phi R^2

    R is the larger of the class radius and the actual largest row l2 norm.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    w = np.asarray(w, dtype=np.float64)
    h_phi = _require_smoothness(loss, spec, X.shape[0])
    radius = max(spec.input_radius, float(np.linalg.norm(X, axis=1).max()))
    s = X @ w
    value = loss.value(s, y)
    lhs = float(np.linalg.norm(X.T @ loss.gradient(s, y)))
    rhs = float(np.sqrt(4.0 * h_phi * radius ** 2 * max(value, 0.0)))
    return _compare(lhs, rhs)


def vector_smoothness_check(loss, s1, s2, y, spec=None):
    """(phi(s1) - phi(s2))^2 <= 6 H_phi (phi(s1) + phi(s2)) ||s1 - s2||_inf^2"""
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    h_phi = _require_smoothness(loss, spec or ClassSpec(), s1.shape[0])
    v1, v2 = loss.value(s1, y), loss.value(s2, y)
    lhs = (v1 - v2) ** 2
    rhs = 6.0 * h_phi * (v1 + v2) * float(np.max(np.abs(s1 - s2))) ** 2
    return _compare(float(lhs), float(rhs))
