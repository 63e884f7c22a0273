"""Tests for the gap-versus-m and excess-versus-n sweeps and their pass/fail checks."""

import sys
import os
import math
import numpy as np
import pytest

# Add project root so imports work
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.app.experiments import (
    Criteria,
    ExperimentSettings,
    ExperimentSummary,
    Trainer,
    _log_slope,
    run_gap_vs_m,
    run_rate_vs_n,
)
from src.core.losses import ListNetLoss, RankSVMLoss


def test_criteria_thresholds():
    """Each bound given adds one named check; nan fails every check."""
    criteria = Criteria(minimum=1.0, maximum=2.0, maximum_ci=3.0)
    assert criteria.evaluate("ratio", 1.5, 2.5) == {
        "ratio >= 1": True, "ratio <= 2": True, "ratio CI high <= 3": True,
    }
    assert not any(criteria.evaluate("ratio", math.nan, math.nan).values())
    assert criteria.evaluate("ratio", 2.5, 3.5) == {
        "ratio >= 1": True, "ratio <= 2": False, "ratio CI high <= 3": False,
    }
    assert Criteria().evaluate("ratio", 1.0, 1.0) == {}


def test_summary_passes_only_when_every_check_does():
    summary = ExperimentSummary("s", 1.0, 0.5, 1.5, dominated=3, domination_checked=4)
    assert summary.passed
    summary.checks["a"] = True
    summary.checks["b"] = False
    assert not summary.passed
    text = summary.to_text()
    assert "bound dominates: 3/4 rows" in text
    assert "check b: FAIL" in text


def test_log_slope_recovers_power_law():
    """Means following 3 n^(-1/2) fit slope -1/2; nonpositive means are dropped."""
    n_values = [10, 100, 1000, 10000]
    groups = [np.full(3, 3.0 * n ** -0.5) for n in n_values]
    assert _log_slope(n_values, groups) == pytest.approx(-0.5)
    groups[1] = np.zeros(3)
    assert _log_slope(n_values, groups) == pytest.approx(-0.5)
    assert math.isnan(_log_slope(n_values, [np.zeros(2)] * 4))


def test_listnet_gap_does_not_grow_with_m():
    """ListNet with regularized ERM: gap(125) / gap(5) stays at most 1.5."""
    settings = ExperimentSettings(ListNetLoss(), Trainer.RERM, d=5, seed=7)
    results, summary = run_gap_vs_m(settings, [5, 125], n=100, trials=8,
                                    criteria=Criteria(maximum=1.5, maximum_ci=2.0))
    assert len(results) == 16
    assert summary.per_sweep["gap(m=5)"] > 0
    assert summary.value <= 1.5
    assert summary.checks["chapelle growth = sqrt(m ratio)"]
    assert summary.per_sweep["chapelle complexity growth"] == pytest.approx(5.0)
    assert summary.passed


def test_chapelle_column_grows_as_sqrt_m():
    """The baseline complexity column grows exactly sqrt(m ratio) row for row."""
    settings = ExperimentSettings(ListNetLoss(), Trainer.OGD, d=3, seed=1)
    results, _ = run_gap_vs_m(settings, [5, 25, 125], n=10, trials=1)
    columns = {r.sweep_value: r.bounds.chapelle_complexity for r in results}
    assert columns[125] / columns[5] == pytest.approx(5.0, rel=1e-12)
    assert columns[25] / columns[5] == pytest.approx(math.sqrt(5.0), rel=1e-12)


def test_ranksvm_gap_grows_with_m():
    """RankSVM under the same protocol shows a gap ratio of at least 2."""
    settings = ExperimentSettings(RankSVMLoss(), Trainer.RERM, d=5, seed=3)
    _, summary = run_gap_vs_m(settings, [3, 12], n=20, trials=5, criteria=Criteria(minimum=2.0))
    assert summary.value >= 2.0
    assert "chapelle growth = sqrt(m ratio)" not in summary.checks
    assert summary.passed


def test_rerm_excess_dominated_by_bound():
    """Every regularized ERM row has excess loss below the regularized ERM bound."""
    settings = ExperimentSettings(ListNetLoss(), Trainer.RERM, d=3, seed=5)
    results, summary = run_rate_vs_n(settings, [20, 40, 80], m=4, trials=2)
    assert len(results) == 6
    assert all(r.bound_dominates for r in results)
    assert summary.domination_checked == 6
    assert summary.dominated == 6
    assert summary.checks == {"excess <= rerm bound on every row": True}


def test_rate_slope_criteria_can_fail():
    """An unreachable slope threshold fails the summary."""
    settings = ExperimentSettings(ListNetLoss(), Trainer.OGD, d=2, seed=2)
    results, summary = run_rate_vs_n(settings, [5, 10, 20], m=3, trials=1, criteria=Criteria(minimum=100.0))
    assert all(r.bound_dominates is None for r in results)
    assert summary.domination_checked == 0
    assert summary.checks == {"slope >= 100": False}
    assert not summary.passed
