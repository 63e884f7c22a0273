"""
Learning-to-Rank Generalization Workbench
Core module - online gradient descent with online-to-batch averaging,
regularized ERM and projected-subgradient ERM over linear scorers
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.core.errors import (
    ConfigError,
    EmptyDatasetError,
    GuaranteeWarning,
    NonConvexLossError,
)
from src.core.losses import SurrogateLoss
from src.core.ranking import ClassSpec, Dataset, ScoringParams, score

logger = logging.getLogger(__name__)

# Rounding allowance of the line-search value test, relative to the objective
_VALUE_SLACK = 1e-14


class StepKind(str, Enum):
    OGD_FIXED = "ogd_fixed"
    OGD_THEOREM2 = "ogd_theorem2"
    SMOOTH_ETA = "smooth_eta"


@dataclass(frozen=True)
class StepPolicy:
    """OGD step-size rule; `value` is eta for ogd_fixed and L* for smooth_eta"""
    kind: StepKind = StepKind.OGD_THEOREM2
    value: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StepKind(self.kind))
        if self.kind is StepKind.OGD_FIXED:
            if self.value is None or self.value < 0:
                raise ConfigError("ogd_fixed needs a nonnegative step size")
        elif self.kind is StepKind.SMOOTH_ETA:
            if self.value is None or self.value < 0:
                raise ConfigError("smooth_eta needs a nonnegative L* estimate")

    @classmethod
    def fixed(cls, eta):
        return cls(StepKind.OGD_FIXED, eta)

    @classmethod
    def theorem2(cls):
        return cls(StepKind.OGD_THEOREM2)

    @classmethod
    def smooth(cls, l_star):
        return cls(StepKind.SMOOTH_ETA, l_star)


@dataclass(frozen=True)
class TrainConfig:
    spec: ClassSpec
    loss: SurrogateLoss
    step_policy: Optional[StepPolicy] = None
    epochs: int = 100
    lam: Optional[float] = None
    seed: int = 0
    average_final_iterate: bool = False
    shuffle: bool = False
    tol: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.lam is not None and self.lam < 0:
            raise ConfigError(f"lambda must be nonnegative, got {self.lam}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")


@dataclass
class TrainedModel:
    weights: ScoringParams
    train_loss: float
    iterate_trace: Optional[list] = None
    converged: bool = True
    heuristic: bool = False
    step_size: Optional[float] = None
    lam: Optional[float] = None
    certificate: Optional[float] = None
    notes: list = field(default_factory=list)


# =============================================================================
# Core Module: Shared Helpers
# =============================================================================

def _require_data(dataset):
    if dataset is None or len(dataset) == 0:
        raise EmptyDatasetError("training needs at least one query instance")
    if not isinstance(dataset, Dataset):
        dataset = Dataset(tuple(dataset))
    return dataset


def w_lipschitz(loss, spec, m):
    """Lipschitz constant in weight space, G_w = G_phi * R"""
    return loss.constants(spec, m).lipschitz_inf * spec.input_radius


def instance_gradient(loss, w, instance):
    s = instance.features @ w
    return instance.features.T @ loss.gradient(s, instance.labels)


def _stacked(dataset):
    return dataset.stacked if isinstance(dataset, Dataset) else None


def empirical_loss(loss, w, dataset):
    params = w if isinstance(w, ScoringParams) else ScoringParams(w)
    stacked = _stacked(dataset)
    if stacked is not None:
        X, Y = stacked
        S = X @ params.w
        if params.v is not None:
            S = S + (X @ params.v).sum(axis=1, keepdims=True)
        return float(np.mean(loss.value_batch(S, Y)))
    return float(np.mean([loss.value(score(params, inst), inst.labels) for inst in dataset]))


def empirical_gradient(loss, w, dataset):
    """Mean of X' grad_s phi(Xw, y) over the queries"""
    stacked = _stacked(dataset)
    if stacked is not None:
        X, Y = stacked
        G = loss.gradient_batch(X @ w, Y)
        return np.einsum("nmd,nm->d", X, G) / X.shape[0]
    grad = np.zeros(dataset.d)
    for inst in dataset:
        grad += instance_gradient(loss, w, inst)
    return grad / len(dataset)


def lambda_default(G_w, W2, n):
    """Regularization weight sqrt((4G^2/n) / (W^2/2 + 4W^2/n))"""
    return math.sqrt((4.0 * G_w ** 2 / n) / (W2 ** 2 / 2.0 + 4.0 * W2 ** 2 / n))


def eta_smooth(W2, H_w, L_star, n):
    """Step size W / (4HW + 2 sqrt(4H^2W^2 + 2H L* n)) for smooth losses"""
    if not H_w > 0:
        raise ValueError(f"H_w must be positive, got {H_w}")
    return W2 / (4.0 * H_w * W2 + 2.0 * math.sqrt(4.0 * H_w ** 2 * W2 ** 2 + 2.0 * H_w * L_star * n))


def _warn_nonconvex(loss, trainer):
    message = f"{loss.name} is not convex; {trainer} carries no guarantee for it"
    logger.warning(message)
    warnings.warn(message, GuaranteeWarning, stacklevel=3)


# =============================================================================
# Core Module: Online Gradient Descent
# =============================================================================

def ogd_step_size(config, dataset):
    policy = config.step_policy
    if policy is None:
        raise ConfigError("ogd_train needs an OGD step policy")
    spec, n, m = config.spec, len(dataset), dataset.max_m
    if policy.kind is StepKind.OGD_FIXED:
        return float(policy.value)
    if policy.kind is StepKind.OGD_THEOREM2:
        return spec.weight_radius / (w_lipschitz(config.loss, spec, m) * math.sqrt(2.0 * n))
    h_phi = config.loss.step_smoothness(spec, m)
    if h_phi is None:
        raise ConfigError(f"smooth_eta needs a smoothness constant, {config.loss.name} has none")
    if config.loss.constants(spec, m).smoothness_inf is None:
        logger.warning("%s has no proven smoothness constant; smooth_eta uses the Hessian envelope %.6g",
                       config.loss.name, h_phi)
    return eta_smooth(spec.weight_radius, h_phi * spec.input_radius ** 2, policy.value, n)


def ogd_train(dataset, config):
    """One pass of projected OGD from w_1 = 0, returning the iterate average"""
    dataset = _require_data(dataset)
    loss, spec = config.loss, config.spec
    heuristic = not loss.convex
    if heuristic:
        _warn_nonconvex(loss, "online gradient descent")

    eta = ogd_step_size(config, dataset)
    logger.debug("OGD step size %.6g over n=%d", eta, len(dataset))

    w = np.zeros(dataset.d)
    running = np.zeros(dataset.d)
    trace = []
    for inst in dataset:
        running += w
        s = inst.features @ w
        trace.append(loss.value(s, inst.labels))
        w = spec.project(w - eta * (inst.features.T @ loss.gradient(s, inst.labels)))

    count = len(dataset)
    if config.average_final_iterate:
        running += w
        count += 1
    w_avg = spec.project(running / count)

    params = ScoringParams(w_avg)
    train_loss = empirical_loss(loss, params, dataset)
    logger.info("OGD finished: train loss %.6g", train_loss)
    return TrainedModel(
        weights=params,
        train_loss=train_loss,
        iterate_trace=trace,
        heuristic=heuristic,
        step_size=eta,
    )


# =============================================================================
# Core Module: Regularized ERM
# =============================================================================

def rerm_objective(loss, w, dataset, lam):
    return 0.5 * lam * float(w @ w) + empirical_loss(loss, w, dataset)


def projected_gradient_norm(loss, w, dataset, lam, spec, step=1.0):
    """Norm of the gradient mapping (w - P(w - t g)) / t; zero exactly at the optimum"""
    g = lam * w + empirical_gradient(loss, w, dataset)
    return float(np.linalg.norm(w - spec.project(w - step * g)) / step)


def rerm_train(dataset, config, max_iter=5000):
    """Projected full-gradient descent with halving line search on
    (lam/2)||w||^2 + empirical loss over the weight ball"""
    dataset = _require_data(dataset)
    loss, spec = config.loss, config.spec
    if not loss.convex:
        raise NonConvexLossError(f"regularized ERM needs a convex loss, got {loss.name}")

    lam = config.lam
    if lam is None:
        lam = lambda_default(w_lipschitz(loss, spec, dataset.max_m), spec.weight_radius, len(dataset))
    logger.debug("RERM lambda %.6g", lam)

    def objective(w):
        return rerm_objective(loss, w, dataset, lam)

    def gradient(w):
        return lam * w + empirical_gradient(loss, w, dataset)

    smooth = loss.twice_differentiable
    w = np.zeros(dataset.d)
    value, g = objective(w), gradient(w)
    step = 1.0
    certificate = math.inf
    trace = [value]
    for _ in range(max_iter):
        accepted = False
        while step >= 1e-20:
            candidate = spec.project(w - step * g)
            delta = candidate - w
            candidate_value, candidate_grad = objective(candidate), gradient(candidate)
            sq = float(delta @ delta)
            model_value = value + g @ delta + sq / (2.0 * step)
            sufficient = candidate_value <= model_value + _VALUE_SLACK * (1.0 + abs(value))
            # below sqrt(eps) the value test passes on rounding; the secant test keeps step <= 1/L
            if sufficient and (not smooth or (candidate_grad - g) @ delta <= sq / step):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        certificate = float(math.sqrt(sq) / step)
        w, value, g = candidate, candidate_value, candidate_grad
        trace.append(value)
        if certificate <= config.tol:
            break
        step = min(step * 2.0, 1e6)

    converged = certificate <= config.tol
    if converged:
        logger.info("RERM converged: objective %.6g", value)
    else:
        logger.warning("RERM stopped before tolerance: gradient mapping %.3g", certificate)
    params = ScoringParams(w)
    return TrainedModel(
        weights=params,
        train_loss=empirical_loss(loss, params, dataset),
        iterate_trace=trace,
        converged=converged,
        lam=lam,
        certificate=certificate,
    )


# =============================================================================
# Core Module: Projected Subgradient ERM
# =============================================================================

def erm_train(dataset, config):
    """epochs * n projected subgradient steps with eta_t = W / (G_w sqrt t),
    returning the epoch-end iterate with the lowest training loss"""
    dataset = _require_data(dataset)
    loss, spec = config.loss, config.spec
    heuristic = not loss.convex
    if heuristic:
        _warn_nonconvex(loss, "empirical risk minimization")

    G_w = w_lipschitz(loss, spec, dataset.max_m)
    rng = np.random.default_rng(config.seed)
    n = len(dataset)

    w = np.zeros(dataset.d)
    best_w, best_loss = w.copy(), empirical_loss(loss, w, dataset)
    trace = [best_loss]
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else range(n)
        for i in order:
            t += 1
            eta = spec.weight_radius / (G_w * math.sqrt(t))
            w = spec.project(w - eta * instance_gradient(loss, w, dataset[i]))
        epoch_loss = empirical_loss(loss, w, dataset)
        trace.append(epoch_loss)
        if epoch_loss < best_loss:
            best_w, best_loss = w.copy(), epoch_loss
        if best_loss == 0.0:
            break

    logger.info("ERM finished after %d steps: train loss %.6g", t, best_loss)
    return TrainedModel(
        weights=ScoringParams(best_w),
        train_loss=best_loss,
        iterate_trace=trace,
        heuristic=heuristic,
    )
