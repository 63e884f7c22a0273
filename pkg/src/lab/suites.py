"""
Learning-to-Rank Generalization Workbench
Lab module - the verification suite manager that runs every constant and
inequality check for one loss and collects one row per check
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from src.core.losses import LossKind
from src.core.ranking import ClassSpec
from src.lab.oracles import (
    MAX_ENUMERATION_M,
    SamplerSpec,
    concentrated_lipschitz_inf,
    empirical_lipschitz_inf,
    finite_diff_gradient,
    op_norm_inf_to_1,
    self_bounding_check,
    vector_smoothness_check,
    verify_lemma1,
)

logger = logging.getLogger(__name__)

LEMMA1_SHAPES = ((2, 2), (3, 5), (8, 3))
KINK_ZONE = 1e-6
LISTNET_TIGHTNESS = 1.99


@dataclass
class CheckResult:
    check: str
    loss: str
    m: int
    observed: float
    bound: float
    margin: float
    passed: bool
    note: str = ""

    def to_row(self):
        return asdict(self)


def _result(check, loss, m, observed, bound, passed=None, note=""):
    observed, bound = float(observed), float(bound)
    if passed is None:
        passed = observed <= bound * (1.0 + 1e-9)
    return CheckResult(check, loss.name, m, observed, bound, bound - observed, bool(passed), note)


class VerificationSuite:
    """Manager for the numerical checks of one loss across a sweep of list lengths"""

    def __init__(self, loss, m_values=(2, 4, 8, 16), trials=10000, seed=0, score_scale=50.0, spec=None):
        self.loss = loss
        self.m_values = tuple(m_values)
        self.trials = trials
        self.seed = seed
        self.score_scale = score_scale
        self.spec = spec or ClassSpec()

        # Check registry; each entry maps a name to a callable returning rows
        self.checks = {
            'lipschitz_inf_sup': self.check_lipschitz,
            'gradient_fd': self.check_gradients,
            'hessian_op_norm': self.check_hessian,
            'lemma1': self.check_lemma1,
            'self_bounding': self.check_self_bounding,
            'vector_smoothness': self.check_vector_smoothness,
        }
        self.enabled = {name: True for name in self.checks}

    def _rng(self, *keys):
        return np.random.default_rng(np.random.SeedSequence([self.seed, *keys]))

    def set_check_enabled(self, name, enabled):
        if name not in self.checks:
            raise KeyError(f"unknown check {name!r}")
        self.enabled[name] = bool(enabled)

    def run(self):
        """Run every enabled check and return the collected rows"""
        results = []
        for name, check in self.checks.items():
            if not self.enabled[name]:
                continue
            rows = check()
            for row in rows:
                log = logger.info if row.passed else logger.warning
                log("%s m=%d observed=%.6g bound=%.6g %s", row.check, row.m, row.observed, row.bound,
                    "ok" if row.passed else "FAILED")
            results.extend(rows)
        return results

    # -------------------------------------------------------------------------
    # Individual checks
    # -------------------------------------------------------------------------

    def check_lipschitz(self):
        rows = []
        for m in self.m_values:
            constants = self.loss.constants(self.spec, m)
            if self.loss.kind is LossKind.RANKSVM:
                # All pairs active: first half graded 1, second half 0, equal scores
                half = m // 2
                y = np.concatenate([np.ones(half), np.zeros(m - half)])
                observed = np.abs(self.loss.gradient(np.zeros(m), y)).sum()
                witness = constants.lipschitz_inf_witness
                rows.append(_result("ranksvm_witness", self.loss, m, observed, witness,
                                    passed=abs(observed - witness) <= 1e-9,
                                    note=f"envelope {constants.lipschitz_inf:g}"))
                continue
            sampler = SamplerSpec(m=m, score_scale=self.score_scale, y_max=self.loss.y_max,
                                  trials=self.trials, seed=self.seed + m)
            estimate = empirical_lipschitz_inf(self.loss, sampler)
            rows.append(_result("lipschitz_inf_sup", self.loss, m, estimate.value, constants.lipschitz_inf))
            if self.loss.kind is LossKind.LISTNET and m >= 2:
                # the supremum of 2 is approached, not just respected
                tight = concentrated_lipschitz_inf(self.loss, m)
                rows.append(_result("lipschitz_inf_concentrated", self.loss, m, tight.value, constants.lipschitz_inf,
                                    passed=LISTNET_TIGHTNESS <= tight.value <= constants.lipschitz_inf * (1.0 + 1e-9)))
        return rows

    def check_gradients(self, points=200):
        rows = []
        for m in self.m_values:
            rng = self._rng(1, m)
            worst = 0.0
            checked = 0
            for _ in range(points):
                s = rng.uniform(-3.0, 3.0, size=m)
                y = rng.integers(0, self.loss.y_max + 1, size=m).astype(np.float64)
                if self.loss.kind is LossKind.RANKSVM:
                    margins = 1.0 + s[None, :] - s[:, None]
                    if np.any(np.abs(margins[y[:, None] > y[None, :]]) < KINK_ZONE):
                        continue
                analytic = self.loss.gradient(s, y)
                numeric = finite_diff_gradient(self.loss, s, y)
                scale = max(1.0, float(np.max(np.abs(analytic))))
                worst = max(worst, float(np.max(np.abs(analytic - numeric))) / scale)
                checked += 1
            rows.append(_result("gradient_fd", self.loss, m, worst, 1e-5, note=f"{checked} points"))
        return rows

    def check_hessian(self, points=50):
        if not self.loss.twice_differentiable or self.loss.constants(self.spec, 2).smoothness_inf is None:
            return []
        rows = []
        for m in self.m_values:
            if m > MAX_ENUMERATION_M:
                continue
            bound = self.loss.constants(self.spec, m).smoothness_inf
            rng = self._rng(2, m)
            worst = 0.0
            for _ in range(points):
                s = rng.uniform(-self.score_scale, self.score_scale, size=m) / 10.0
                y = rng.integers(0, self.loss.y_max + 1, size=m).astype(np.float64)
                worst = max(worst, op_norm_inf_to_1(self.loss.hessian(s, y)).value)
            rows.append(_result("hessian_op_norm", self.loss, m, worst, bound))
        return rows

    def check_lemma1(self, matrices=100):
        rows = []
        rng = self._rng(3)
        for shape in LEMMA1_SHAPES:
            failures = 0
            for _ in range(matrices):
                X = rng.normal(size=shape)
                for p in (1.0, 2.0, np.inf):
                    if not verify_lemma1(X, p, samples=200, seed=int(rng.integers(2 ** 31))).passed:
                        failures += 1
            rows.append(_result("lemma1", self.loss, shape[0], failures, 0,
                                passed=failures == 0, note=f"shape {shape[0]}x{shape[1]}"))
        return rows

    def _smooth(self):
        return self.loss.constants(self.spec, 2).smoothness_inf is not None

    def check_self_bounding(self, draws=500):
        if not self._smooth():
            return []
        rows = []
        for m in self.m_values:
            rng = self._rng(4, m)
            worst, failures = -np.inf, 0
            for _ in range(draws):
                d = int(rng.integers(1, 6))
                X = rng.normal(size=(m, d))
                X /= np.linalg.norm(X, axis=1, keepdims=True)
                y = rng.integers(0, self.loss.y_max + 1, size=m).astype(np.float64)
                w = self.spec.project(rng.normal(size=d) * 3.0)
                report = self_bounding_check(self.loss, self.spec, X, y, w)
                worst = max(worst, report.lhs - report.rhs)
                failures += not report.passed
            rows.append(_result("self_bounding", self.loss, m, failures, 0,
                                passed=failures == 0, note=f"max lhs-rhs {worst:.3g}"))
        return rows

    def check_vector_smoothness(self, draws=2000):
        if not self._smooth():
            return []
        rows = []
        for m in self.m_values:
            rng = self._rng(5, m)
            failures = 0
            for _ in range(draws):
                s1 = rng.uniform(-5.0, 5.0, size=m)
                s2 = rng.uniform(-5.0, 5.0, size=m)
                y = rng.integers(0, self.loss.y_max + 1, size=m).astype(np.float64)
                failures += not vector_smoothness_check(self.loss, s1, s2, y, self.spec).passed
            rows.append(_result("vector_smoothness", self.loss, m, failures, 0, passed=failures == 0))
        return rows
