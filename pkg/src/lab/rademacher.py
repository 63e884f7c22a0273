"""
Learning-to-Rank Generalization Workbench
Lab module - Monte-Carlo and exhaustive estimates of the empirical
Rademacher complexity of a loss class over linear scorers
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.errors import ConfigError
from src.core.ranking import NormKind
from src.core.trainers import w_lipschitz
from src.lab.oracles import batch_gradients, batch_values, sign_vectors

logger = logging.getLogger(__name__)

# Grid search over the weight ball is exact enough only in low dimension
MAX_GRID_DIM = 3
MAX_EXHAUSTIVE_N = 12
_GRID_CHUNK = 20_000


class InnerOpt(str, Enum):
    GRID = "grid"
    MULTISTART = "multistart"


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    std_error: float
    trials: int
    inner_opt: InnerOpt


def weight_grid(spec, d, pitch=None):
    """Every point of a cubic lattice with the given pitch lying in the weight ball"""
    if d > MAX_GRID_DIM:
        raise ConfigError(f"grid inner optimization needs d <= {MAX_GRID_DIM}, got d={d}")
    W = spec.weight_radius
    pitch = W / 200.0 if pitch is None else pitch
    axis = np.linspace(-W, W, int(math.ceil(2.0 * W / pitch)) + 1)
    points = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    order = 2 if spec.norm_kind is NormKind.L2 else 1
    return points[np.linalg.norm(points, ord=order, axis=1) <= W + 1e-12]


def _grid_sups(loss, spec, dataset, sigmas, pitch):
    """sup over grid points of (1/n) sum_i sigma_i phi(X_i w, y_i), one per sigma row"""
    grid = weight_grid(spec, dataset.d, pitch)
    n = len(dataset)
    sups = np.full(sigmas.shape[0], -np.inf)
    for start in range(0, grid.shape[0], _GRID_CHUNK):
        block = grid[start:start + _GRID_CHUNK]
        losses = np.empty((n, block.shape[0]))
        for i, inst in enumerate(dataset):
            losses[i] = batch_values(loss, block @ inst.features.T, inst.labels)
        sups = np.maximum(sups, (sigmas @ losses).max(axis=1) / n)
    return sups


def _ascent_sup(loss, spec, dataset, sigma, rng, restarts, iterations):
    """Projected gradient ascent from several feasible starts; best value seen"""
    n = len(dataset)
    G_w = max(w_lipschitz(loss, spec, dataset.max_m), 1e-12)

    def objective(w):
        return sum(sig * loss.value(inst.features @ w, inst.labels) for sig, inst in zip(sigma, dataset)) / n

    best = -np.inf
    for restart in range(restarts):
        w = np.zeros(dataset.d) if restart == 0 else spec.project(
            rng.normal(size=dataset.d) * spec.weight_radius
        )
        best = max(best, objective(w))
        for t in range(1, iterations + 1):
            grad = np.zeros(dataset.d)
            for sig, inst in zip(sigma, dataset):
                s = inst.features @ w
                grad += sig * (inst.features.T @ batch_gradients(loss, s[None, :], inst.labels)[0])
            w = spec.project(w + spec.weight_radius / (G_w * math.sqrt(t)) * grad / n)
            best = max(best, objective(w))
    return best


def _summarize(sups, inner_opt):
    trials = sups.shape[0]
    std_error = float(np.std(sups, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return RademacherEstimate(float(np.mean(sups)), std_error, trials, InnerOpt(inner_opt))


def monte_carlo_rademacher(loss, spec, dataset, trials=200, inner_opt=InnerOpt.GRID, seed=0,
                           pitch=None, restarts=20, iterations=100):
    """Mean and standard error of sup_w (1/n) sum_i sigma_i phi(X_i w, y_i) over random signs"""
    inner_opt = InnerOpt(inner_opt)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    rng = np.random.default_rng(seed)
    sigmas = rng.choice(np.array([-1.0, 1.0]), size=(trials, len(dataset)))
    if inner_opt is InnerOpt.GRID:
        sups = _grid_sups(loss, spec, dataset, sigmas, pitch)
    else:
        sups = np.array([
            _ascent_sup(loss, spec, dataset, sigma, rng, restarts, iterations) for sigma in sigmas
        ])
    estimate = _summarize(sups, inner_opt)
    logger.info("Rademacher estimate %.6g +- %.3g (%s)", estimate.mean, estimate.std_error, inner_opt.value)
    return estimate


def exhaustive_rademacher(loss, spec, dataset, pitch=None):
    """Exact average over all 2^n sign vectors, grid inner optimization"""
    n = len(dataset)
    if n > MAX_EXHAUSTIVE_N:
        raise ConfigError(f"exhaustive enumeration needs n <= {MAX_EXHAUSTIVE_N}, got n={n}")
    sups = _grid_sups(loss, spec, dataset, sign_vectors(n), pitch)
    return RademacherEstimate(float(np.mean(sups)), 0.0, sups.shape[0], InnerOpt.GRID)
