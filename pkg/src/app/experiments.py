"""
Learning-to-Rank Generalization Workbench
App module - the generalization-gap-versus-list-length and
excess-risk-versus-sample-size experiments
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.core.bounds import BoundInputs, BoundReport, bound_report, bound_rerm
from src.core.errors import ConfigError
from src.core.ranking import ClassSpec, mean_ndcg_at_k
from src.core.trainers import (
    StepPolicy,
    TrainConfig,
    empirical_loss,
    erm_train,
    ogd_train,
    rerm_train,
)
from src.data.synthetic import LabelMode, SynthConfig, generate

logger = logging.getLogger(__name__)

TEST_MULTIPLIER = 5
BOOTSTRAP_RESAMPLES = 1000
CI_LEVEL = 0.90


class Trainer(str, Enum):
    OGD = "ogd"
    RERM = "rerm"
    ERM = "erm"
    OGD_SMOOTH = "ogd-smooth"


@dataclass
class ExperimentResult:
    experiment: str
    trainer: str
    loss: str
    sweep_variable: str
    sweep_value: int
    trial: int
    seed: int
    train_loss: float
    test_loss: float
    gap: float
    ndcg_at_1: float
    excess: Optional[float] = None
    bound_dominates: Optional[bool] = None
    bounds: BoundReport = field(default_factory=BoundReport)

    def to_row(self):
        row = asdict(self)
        row.pop("bounds")
        row = {key: ("NA" if value is None else value) for key, value in row.items()}
        row.update(self.bounds.to_row())
        return row


@dataclass
class ExperimentSummary:
    """A named statistic with its bootstrap confidence interval, the bound
    domination tally and any pass/fail checks"""
    statistic: str
    value: float
    ci_low: float
    ci_high: float
    per_sweep: dict = field(default_factory=dict)
    dominated: int = 0
    domination_checked: int = 0
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def to_text(self):
        lines = [f"{self.statistic}: {_fmt(self.value)} "
                 f"({int(CI_LEVEL * 100)}% CI {_fmt(self.ci_low)} .. {_fmt(self.ci_high)})"]
        for key, value in self.per_sweep.items():
            lines.append(f"  {key}: mean {_fmt(value)}")
        if self.domination_checked:
            lines.append(f"  bound dominates: {self.dominated}/{self.domination_checked} rows")
        for name, ok in self.checks.items():
            lines.append(f"  check {name}: {'pass' if ok else 'FAIL'}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Criteria:
    """Thresholds on a sweep's summary statistic; None skips that check"""
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    maximum_ci: Optional[float] = None

    def evaluate(self, name, value, ci_high):
        checks = {}
        if self.minimum is not None:
            checks[f"{name} >= {self.minimum:g}"] = math.isfinite(value) and value >= self.minimum
        if self.maximum is not None:
            checks[f"{name} <= {self.maximum:g}"] = math.isfinite(value) and value <= self.maximum
        if self.maximum_ci is not None:
            checks[f"{name} CI high <= {self.maximum_ci:g}"] = math.isfinite(ci_high) and ci_high <= self.maximum_ci
        return checks


def _fmt(value):
    return "NA" if value is None or not math.isfinite(value) else f"{value:.6g}"


@dataclass(frozen=True)
class ExperimentSettings:
    """Everything shared by every trial of one sweep"""
    loss: object
    trainer: Trainer = Trainer.RERM
    d: int = 10
    weight_radius: float = 1.0
    input_radius: float = 1.0
    label_mode: LabelMode = LabelMode.NOISY
    flip_prob: float = 0.1
    y_max: int = 4
    epochs: int = 50
    delta: float = 0.05
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "trainer", Trainer(self.trainer))
        object.__setattr__(self, "label_mode", LabelMode(self.label_mode))
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")

    @property
    def spec(self):
        return ClassSpec("L2", self.weight_radius, self.input_radius)


# =============================================================================
# App Module: Trial Plumbing
# =============================================================================

def trial_seed(seed, sweep_index, trial):
    return int(np.random.SeedSequence([seed, sweep_index, trial]).generate_state(1)[0])


def draw_train_test(settings, m, n, seed):
    """n training queries plus a held-out set five times larger, one distribution"""
    config = SynthConfig(
        m=m,
        d=settings.d,
        n=n * (1 + TEST_MULTIPLIER),
        input_radius=settings.input_radius,
        label_mode=settings.label_mode,
        flip_prob=settings.flip_prob if settings.label_mode is LabelMode.NOISY else 0.0,
        y_max=settings.y_max,
        seed=seed,
    )
    data = generate(config)
    return data.subset(range(n)), data.subset(range(n, len(data)))


def fit(trainer, dataset, settings, step_policy=None, lam=None):
    config = TrainConfig(
        spec=settings.spec,
        loss=settings.loss,
        step_policy=step_policy or StepPolicy.theorem2(),
        epochs=settings.epochs,
        lam=lam,
        seed=settings.seed,
    )
    trainer = Trainer(trainer)
    if trainer is Trainer.RERM:
        return rerm_train(dataset, config)
    if trainer is Trainer.ERM:
        return erm_train(dataset, config)
    return ogd_train(dataset, config)


def _bounds_for(settings, m, n, L_star=None):
    constants = settings.loss.constants(settings.spec, m)
    inputs = BoundInputs.from_constants(constants, settings.spec, m, n, settings.d, settings.delta, L_star)
    return inputs, bound_report(inputs)


def _result(experiment, trainer, settings, variable, value, trial, seed, model, train, test):
    test_loss = empirical_loss(settings.loss, model.weights, test)
    return ExperimentResult(
        experiment=experiment,
        trainer=Trainer(trainer).value,
        loss=settings.loss.name,
        sweep_variable=variable,
        sweep_value=value,
        trial=trial,
        seed=seed,
        train_loss=model.train_loss,
        test_loss=test_loss,
        gap=test_loss - model.train_loss,
        ndcg_at_1=mean_ndcg_at_k(model.weights, test, k=1),
    )


def _fan_out(task, jobs, workers):
    """Run jobs in order; results come back in job order whatever the worker count"""
    if workers == 1:
        return [task(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: task(*job), jobs))


def bootstrap_ci(samples, statistic, rng, resamples=BOOTSTRAP_RESAMPLES):
    """Percentile interval of `statistic` over resampled trial indices"""
    values = []
    for _ in range(resamples):
        drawn = [group[rng.integers(0, len(group), size=len(group))] for group in samples]
        values.append(statistic(drawn))
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return math.nan, math.nan
    tail = (1.0 - CI_LEVEL) / 2.0
    return float(np.quantile(values, tail)), float(np.quantile(values, 1.0 - tail))


# =============================================================================
# App Module: Gap versus List Length
# =============================================================================

def _gap_ratio(groups):
    low, high = float(np.mean(groups[0])), float(np.mean(groups[-1]))
    return high / low if low > 0 else math.nan


def run_gap_vs_m(settings, m_values, n, trials, criteria=None):
    """Train at every list length in the sweep and record gaps with bound reports

    criteria thresholds the mean gap ratio of the last m over the first.
    """
    m_values = list(m_values)
    if not m_values or any(m < 1 for m in m_values) or trials < 1 or n < 1:
        raise ConfigError("gap-vs-m needs a nonempty list of positive m, n >= 1 and trials >= 1")

    def task(index, m, trial):
        seed = trial_seed(settings.seed, index, trial)
        train, test = draw_train_test(settings, m, n, seed)
        model = fit(settings.trainer, train, settings)
        result = _result("gap_vs_m", settings.trainer, settings, "m", m, trial, seed, model, train, test)
        result.bounds = _bounds_for(settings, m, n)[1]
        logger.info("m=%d trial=%d gap=%.4g", m, trial, result.gap)
        return result

    jobs = [(i, m, t) for i, m in enumerate(m_values) for t in range(trials)]
    results = _fan_out(task, jobs, settings.workers)

    groups = [np.array([r.gap for r in results if r.sweep_value == m]) for m in m_values]
    low, high = bootstrap_ci(groups, _gap_ratio, np.random.default_rng(settings.seed))
    ratio = _gap_ratio(groups)
    summary = ExperimentSummary(
        statistic=f"mean gap ratio m={m_values[-1]} / m={m_values[0]}",
        value=ratio,
        ci_low=low,
        ci_high=high,
        per_sweep={f"gap(m={m})": float(np.mean(g)) for m, g in zip(m_values, groups)},
    )
    summary.checks.update((criteria or Criteria()).evaluate("gap ratio", ratio, high))
    _chapelle_growth(settings, m_values, n, summary)
    return results, summary


def _chapelle_growth(settings, m_values, n, summary):
    """Growth of the baseline complexity term across the sweep; it must be
    exactly sqrt(m_last / m_first) when G_cw does not depend on m"""
    first, last = m_values[0], m_values[-1]
    if first == last:
        return
    growth = (_bounds_for(settings, last, n)[1].chapelle_complexity
              / _bounds_for(settings, first, n)[1].chapelle_complexity)
    summary.per_sweep["chapelle complexity growth"] = growth
    spec = settings.spec
    if settings.loss.constants(spec, first).lipschitz_l2 == settings.loss.constants(spec, last).lipschitz_l2:
        summary.checks["chapelle growth = sqrt(m ratio)"] = math.isclose(
            growth, math.sqrt(last / first), rel_tol=1e-9)


# =============================================================================
# App Module: Excess Risk versus Sample Size
# =============================================================================

def oracle_test_loss(settings, test):
    """Best achievable held-out loss, estimated by fitting on the held-out set itself"""
    if settings.loss.convex:
        model = fit(Trainer.RERM, test, settings, lam=0.0)
    else:
        model = fit(Trainer.ERM, test, settings)
    return model.train_loss


def _log_slope(n_values, groups):
    means = np.array([np.mean(g) for g in groups])
    keep = means > 0
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(np.asarray(n_values)[keep]), np.log(means[keep]), 1)[0])


def run_rate_vs_n(settings, n_values, m, trials, criteria=None):
    """Excess held-out loss over the oracle at each n and its fitted log-log slope

    RERM rows are checked against the regularized ERM bound; criteria
    thresholds the slope.
    """
    n_values = list(n_values)
    if len(n_values) < 3:
        raise ConfigError("rate-vs-n needs at least 3 values of n to fit a slope")
    if any(n < 1 for n in n_values) or trials < 1 or m < 1:
        raise ConfigError("rate-vs-n needs positive n, m and trials")

    def task(index, n, trial):
        seed = trial_seed(settings.seed, index, trial)
        train, test = draw_train_test(settings, m, n, seed)
        oracle = oracle_test_loss(settings, test)

        if settings.trainer is Trainer.OGD_SMOOTH:
            first = fit(Trainer.OGD, train, settings, step_policy=StepPolicy.smooth(0.0))
            phases = [("ogd-smooth-phase1", first)]
            estimate = empirical_loss(settings.loss, first.weights, test)
            phases.append(("ogd-smooth-phase2",
                           fit(Trainer.OGD, train, settings, step_policy=StepPolicy.smooth(estimate))))
        else:
            phases = [(settings.trainer.value, fit(settings.trainer, train, settings))]

        inputs, report = _bounds_for(settings, m, n, L_star=max(oracle, 0.0))
        rows = []
        for name, model in phases:
            result = _result("rate_vs_n", settings.trainer, settings, "n", n, trial, seed, model, train, test)
            result.trainer = name
            result.excess = result.test_loss - oracle
            result.bounds = report
            reference = _reference_bound(settings.trainer, inputs)
            if reference is not None:
                result.bound_dominates = result.excess <= reference
            rows.append(result)
        logger.info("n=%d trial=%d excess=%.4g", n, trial, rows[-1].excess)
        return rows

    jobs = [(i, n, t) for i, n in enumerate(n_values) for t in range(trials)]
    results = [row for rows in _fan_out(task, jobs, settings.workers) for row in rows]

    final = results if settings.trainer is not Trainer.OGD_SMOOTH else [
        r for r in results if r.trainer.endswith("phase2")
    ]
    groups = [np.array([r.excess for r in final if r.sweep_value == n]) for n in n_values]
    low, high = bootstrap_ci(groups, lambda g: _log_slope(n_values, g), np.random.default_rng(settings.seed))
    slope = _log_slope(n_values, groups)
    checked = [r for r in results if r.bound_dominates is not None]
    summary = ExperimentSummary(
        statistic="log-log slope of excess loss in n",
        value=slope,
        ci_low=low,
        ci_high=high,
        per_sweep={f"excess(n={n})": float(np.mean(g)) for n, g in zip(n_values, groups)},
        dominated=sum(r.bound_dominates for r in checked),
        domination_checked=len(checked),
    )
    if checked:
        summary.checks["excess <= rerm bound on every row"] = summary.dominated == len(checked)
    summary.checks.update((criteria or Criteria()).evaluate("slope", slope, high))
    return results, summary


def _reference_bound(trainer, inputs):
    if trainer is Trainer.RERM:
        return bound_rerm(inputs)
    return None
