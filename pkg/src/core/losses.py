"""
Learning-to-Rank Generalization Workbench
Core module - surrogate ranking losses with values, gradients, Hessians and
their l-inf Lipschitz / smoothness / boundedness constants
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import logsumexp, softmax

from src.core.errors import NonFiniteError, ShapeError, UnsupportedOperationError
from src.core.ranking import discount, gain

# Rows per chunk for the pairwise tensors of the batched RankSVM evaluation
_PAIR_BUDGET = 4_000_000


class LossKind(str, Enum):
    LISTNET = "listnet"
    SMOOTH_DCG1 = "sdcg"
    RANKSVM = "ranksvm"


@dataclass(frozen=True)
class LossConstants:
    """Analytic constants of a loss for one hypothesis class and list length

    lipschitz_inf bounds the l1 norm of the score gradient (dual of l-inf),
    lipschitz_l2 bounds its l2 norm, smoothness_inf bounds the inf->1 norm of
    the Hessian and uniform_bound bounds the loss over the class.
    """
    lipschitz_inf: float
    smoothness_inf: Optional[float]
    uniform_bound: float
    lipschitz_l2: float
    lipschitz_inf_witness: Optional[float] = None

    def consistent(self, m):
        """G_inf <= G_l2 * sqrt(m), the norm-equivalence relation"""
        return self.lipschitz_inf <= self.lipschitz_l2 * math.sqrt(m) * (1.0 + 1e-12)


def _check_pair(s, y):
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if s.ndim != 1 or s.shape != y.shape or s.shape[0] < 1:
        raise ShapeError(f"scores {s.shape} and labels {y.shape} must be equal-length vectors")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(y))):
        raise NonFiniteError("scores and labels must be finite")
    return s, y


def _check_batch(S, Y):
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    Y = np.broadcast_to(Y, S.shape) if Y.ndim == 1 else np.atleast_2d(Y)
    if Y.shape != S.shape:
        raise ShapeError(f"score batch {S.shape} and label batch {Y.shape} do not match")
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(Y))):
        raise NonFiniteError("scores and labels must be finite")
    return S, Y


# =============================================================================
# Core Module: Surrogate Losses
# =============================================================================

class SurrogateLoss:
    """Base class for surrogate losses phi(s, y) >= 0"""
    kind = None
    convex = True
    twice_differentiable = True

    def __init__(self, y_max=4):
        if y_max < 0 or int(y_max) != y_max:
            raise ValueError(f"y_max must be a nonnegative integer, got {y_max}")
        self.y_max = int(y_max)

    @property
    def sigma(self):
        return None

    @property
    def name(self):
        return self.kind.value

    def __repr__(self):
        return f"{type(self).__name__}(y_max={self.y_max})"

    def value(self, s, y):
        raise NotImplementedError

    def gradient(self, s, y):
        raise NotImplementedError

    def hessian(self, s, y):
        raise UnsupportedOperationError(f"{self.name} has no Hessian")

    def constants(self, spec, m):
        raise NotImplementedError

    def step_smoothness(self, spec, m):
        """inf->1 Hessian bound used to size smooth OGD steps; None when there is none"""
        return self.constants(spec, m).smoothness_inf

    def value_batch(self, S, Y):
        """Loss of every row of S; Y is one label vector or one per row"""
        S, Y = _check_batch(S, Y)
        return np.array([self.value(s, y) for s, y in zip(S, Y)])

    def gradient_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        return np.array([self.gradient(s, y) for s, y in zip(S, Y)])


class ListNetLoss(SurrogateLoss):
    """Top-one ListNet cross entropy -sum_j P_j(y) log P_j(s)"""
    kind = LossKind.LISTNET

    def value(self, s, y):
        s, y = _check_pair(s, y)
        return max(float(logsumexp(s) - softmax(y) @ s), 0.0)

    def gradient(self, s, y):
        s, y = _check_pair(s, y)
        return softmax(s) - softmax(y)

    def hessian(self, s, y):
        s, _ = _check_pair(s, y)
        p = softmax(s)
        return np.diag(p) - np.outer(p, p)

    def value_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        values = logsumexp(S, axis=1) - np.sum(softmax(Y, axis=1) * S, axis=1)
        return np.maximum(values, 0.0)

    def gradient_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        return softmax(S, axis=1) - softmax(Y, axis=1)

    def constants(self, spec, m):
        # -log P_j(s) <= log m + 2 ||s||_inf, and ||s||_inf <= W R over the class
        return LossConstants(
            lipschitz_inf=2.0,
            smoothness_inf=2.0,
            uniform_bound=math.log(m) + 2.0 * spec.score_radius,
            lipschitz_l2=2.0,
        )


class SmoothDCG1Loss(SurrogateLoss):
    """Smoothed DCG@1: D(1) sum_i G(y_i) softmax_i(s / sigma)"""
    kind = LossKind.SMOOTH_DCG1
    convex = False

    def __init__(self, sigma=1.0, y_max=4):
        super().__init__(y_max)
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self._sigma = float(sigma)

    @property
    def sigma(self):
        return self._sigma

    def __repr__(self):
        return f"SmoothDCG1Loss(sigma={self._sigma}, y_max={self.y_max})"

    def value(self, s, y):
        s, y = _check_pair(s, y)
        return float(discount(1) * (gain(y) @ softmax(s / self._sigma)))

    def gradient(self, s, y):
        s, y = _check_pair(s, y)
        p = softmax(s / self._sigma)
        g = gain(y)
        return discount(1) / self._sigma * p * (g - g @ p)

    def hessian(self, s, y):
        s, y = _check_pair(s, y)
        p = softmax(s / self._sigma)
        g = gain(y)
        a = g - g @ p
        outer = np.outer(p, p)
        hess = np.diag(p * a) - outer * a[:, None] - outer * a[None, :]
        return discount(1) / self._sigma ** 2 * hess

    def value_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        return discount(1) * np.sum(gain(Y) * softmax(S / self._sigma, axis=1), axis=1)

    def gradient_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        p = softmax(S / self._sigma, axis=1)
        g = gain(Y)
        centered = g - np.sum(g * p, axis=1, keepdims=True)
        return discount(1) / self._sigma * p * centered

    def constants(self, spec, m):
        top_gain = float(discount(1) * gain(self.y_max))
        lipschitz = 2.0 * top_gain / self._sigma
        return LossConstants(
            lipschitz_inf=lipschitz,
            smoothness_inf=None,
            uniform_bound=top_gain,
            lipschitz_l2=lipschitz,
        )

    def step_smoothness(self, spec, m):
        """Entry-sum bound 3 D(1) G(y_max) / sigma^2 on the Hessian

        With a_i = G(y_i) - <G, p> every |a_i| <= G(y_max), so the diagonal and
        both rank-one terms each contribute at most G(y_max) to the absolute
        entry sum. Only smooth OGD uses it; the bounds leave SDCG unsmoothed.
        """
        return 3.0 * float(discount(1) * gain(self.y_max)) / self._sigma ** 2


def ordered_pair_capacity(m, levels):
    """Most pairs (i, j) with y_i > y_j a list of m items on `levels` grades can hold"""
    levels = max(1, min(levels, m))
    q, r = divmod(m, levels)
    squares = r * (q + 1) ** 2 + (levels - r) * q ** 2
    return (m * m - squares) // 2


class RankSVMLoss(SurrogateLoss):
    """Pairwise hinge sum over pairs with y_i > y_j of max(0, 1 + s_j - s_i)

    Pairs sitting exactly on the hinge count as active in the subgradient.
    """
    kind = LossKind.RANKSVM
    twice_differentiable = False

    @staticmethod
    def _pairs(y):
        return y[:, None] > y[None, :]

    def value(self, s, y):
        s, y = _check_pair(s, y)
        margins = 1.0 + s[None, :] - s[:, None]
        return float(np.sum(np.maximum(margins, 0.0)[self._pairs(y)]))

    def gradient(self, s, y):
        s, y = _check_pair(s, y)
        margins = 1.0 + s[None, :] - s[:, None]
        active = self._pairs(y) & (margins >= 0.0)
        return active.sum(axis=0).astype(np.float64) - active.sum(axis=1)

    def hessian(self, s, y):
        raise UnsupportedOperationError("RankSVM is not twice differentiable")

    def _chunks(self, S, Y):
        m = S.shape[1]
        step = max(1, _PAIR_BUDGET // (m * m))
        for start in range(0, S.shape[0], step):
            yield S[start:start + step], Y[start:start + step]

    def value_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        out = []
        for s_block, y_block in self._chunks(S, Y):
            margins = 1.0 + s_block[:, None, :] - s_block[:, :, None]
            pairs = y_block[:, :, None] > y_block[:, None, :]
            out.append(np.sum(np.maximum(margins, 0.0) * pairs, axis=(1, 2)))
        return np.concatenate(out)

    def gradient_batch(self, S, Y):
        S, Y = _check_batch(S, Y)
        out = []
        for s_block, y_block in self._chunks(S, Y):
            margins = 1.0 + s_block[:, None, :] - s_block[:, :, None]
            active = (y_block[:, :, None] > y_block[:, None, :]) & (margins >= 0.0)
            out.append(active.sum(axis=1).astype(np.float64) - active.sum(axis=2))
        return np.concatenate(out)

    def constants(self, spec, m):
        pairs = ordered_pair_capacity(m, self.y_max + 1)
        half = m // 2
        # each gradient entry is a difference of two pair counts in [0, m - 1],
        # so |g_j| <= m - 1 and ||g||_2 <= (m - 1) sqrt(m)
        return LossConstants(
            lipschitz_inf=float(m * (m - 1)),
            smoothness_inf=None,
            uniform_bound=pairs * (1.0 + 2.0 * spec.score_radius),
            lipschitz_l2=(m - 1) * math.sqrt(m),
            lipschitz_inf_witness=float(2 * half * (m - half)),
        )


_LOSSES = {
    LossKind.LISTNET: ListNetLoss,
    LossKind.SMOOTH_DCG1: SmoothDCG1Loss,
    LossKind.RANKSVM: RankSVMLoss,
}


def make_loss(kind, sigma=None, y_max=4):
    """Build a loss from its kind name; sigma is only meaningful for sdcg"""
    kind = LossKind(kind)
    if kind is LossKind.SMOOTH_DCG1:
        return SmoothDCG1Loss(sigma=1.0 if sigma is None else sigma, y_max=y_max)
    if sigma is not None:
        raise ValueError(f"sigma applies only to sdcg, not {kind.value}")
    return _LOSSES[kind](y_max=y_max)


# =============================================================================
# Core Module: Functional Interface
# =============================================================================

def loss_value(loss, s, y):
    return loss.value(s, y)


def loss_gradient(loss, s, y):
    return loss.gradient(s, y)


def loss_hessian(loss, s, y):
    return loss.hessian(s, y)


def analytic_constants(loss, spec, m):
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    return loss.constants(spec, m)
