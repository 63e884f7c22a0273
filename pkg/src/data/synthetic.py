"""
Learning-to-Rank Generalization Workbench
Data module - synthetic query generation with controlled list length,
dimension, input radius and label noise, plus query-level splitting
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from src.core.errors import ConfigError, EmptyDatasetError, ShapeError
from src.core.ranking import Dataset, QueryInstance

logger = logging.getLogger(__name__)

CALIBRATION_DRAWS = 100_000


class RowNorm(str, Enum):
    L2 = "L2"
    LINF = "Linf"


class LabelMode(str, Enum):
    REALIZABLE = "realizable"
    NOISY = "noisy"
    RANDOM = "random"


@dataclass(frozen=True)
class SynthConfig:
    m: int
    d: int
    n: int
    input_radius: float = 1.0
    row_norm: RowNorm = RowNorm.L2
    label_mode: LabelMode = LabelMode.REALIZABLE
    w_true: Optional[np.ndarray] = None
    flip_prob: float = 0.0
    y_max: int = 4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "row_norm", RowNorm(self.row_norm))
        object.__setattr__(self, "label_mode", LabelMode(self.label_mode))
        if self.m < 1 or self.d < 1 or self.n < 1:
            raise ConfigError(f"m, d and n must be positive, got m={self.m} d={self.d} n={self.n}")
        if not self.input_radius > 0:
            raise ConfigError(f"input_radius must be positive, got {self.input_radius}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob must lie in [0, 1], got {self.flip_prob}")
        if self.y_max < 0:
            raise ConfigError(f"y_max must be nonnegative, got {self.y_max}")
        if self.w_true is not None:
            w_true = np.asarray(self.w_true, dtype=np.float64)
            if w_true.shape != (self.d,):
                raise ShapeError(f"w_true must have length {self.d}, got shape {w_true.shape}")
            object.__setattr__(self, "w_true", w_true)

    def _rng(self, stream):
        return np.random.default_rng(np.random.SeedSequence([self.seed, stream]))

    def resolved_w_true(self):
        """The generating weights; a unit-l2 Gaussian draw when none was given"""
        if self.w_true is not None:
            return self.w_true
        w = self._rng(2).normal(size=self.d)
        return w / np.linalg.norm(w)


def draw_rows(rng, count, d, radius, row_norm):
    """Rows on the l2 sphere or the l-inf cube surface of the given radius"""
    if RowNorm(row_norm) is RowNorm.L2:
        rows = rng.normal(size=(count, d))
        return radius * rows / np.linalg.norm(rows, axis=1, keepdims=True)
    rows = rng.uniform(-radius, radius, size=(count, d))
    face = rng.integers(0, d, size=count)
    rows[np.arange(count), face] = radius * rng.choice(np.array([-1.0, 1.0]), size=count)
    return rows


def grade_thresholds(config, w_true):
    """Quantiles of <x, w_true> splitting a calibration draw into y_max + 1 equal grades"""
    rows = draw_rows(config._rng(1), CALIBRATION_DRAWS, config.d, config.input_radius, config.row_norm)
    levels = np.arange(1, config.y_max + 1) / (config.y_max + 1)
    return np.quantile(rows @ w_true, levels)


def generate(config):
    """Draw n query instances of m documents each; deterministic in config.seed"""
    rng = config._rng(0)
    w_true = config.resolved_w_true()
    thresholds = None
    if config.label_mode is not LabelMode.RANDOM:
        thresholds = grade_thresholds(config, w_true)

    instances = []
    for i in range(config.n):
        X = draw_rows(rng, config.m, config.d, config.input_radius, config.row_norm)
        if thresholds is None:
            y = rng.integers(0, config.y_max + 1, size=config.m)
        else:
            y = np.searchsorted(thresholds, X @ w_true, side="right")
            if config.label_mode is LabelMode.NOISY:
                flip = rng.random(config.m) < config.flip_prob
                y = np.where(flip, rng.integers(0, config.y_max + 1, size=config.m), y)
        instances.append(QueryInstance(X, y.astype(np.float64), qid=str(i + 1)))

    logger.debug("generated %d queries (m=%d, d=%d, %s labels)",
                 config.n, config.m, config.d, config.label_mode.value)
    return Dataset(tuple(instances))


def realizable_margin_scale(dataset, w_true):
    """Scale c such that c * w_true puts every ordered pair at margin >= 1"""
    w_true = np.asarray(w_true, dtype=np.float64)
    smallest = np.inf
    for inst in dataset:
        s = inst.features @ w_true
        ordered = inst.labels[:, None] > inst.labels[None, :]
        if ordered.any():
            smallest = min(smallest, float((s[:, None] - s[None, :])[ordered].min()))
    if smallest == np.inf:
        return 1.0
    if smallest <= 0:
        raise ValueError("w_true does not order the dataset strictly; labels are not realizable")
    return 1.0 / smallest


def split(dataset, train_fraction, seed=0):
    """Query-level shuffle then split into (train, test)"""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    n_train = int(round(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise EmptyDatasetError(f"fraction {train_fraction} of n={n} leaves one side empty")
    order = np.random.default_rng(seed).permutation(n)
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])
