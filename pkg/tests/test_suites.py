"""Tests for the verification suite manager."""

import sys
import os
import pytest

# Add project root so imports work
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.core.losses import ListNetLoss, RankSVMLoss, SmoothDCG1Loss
from src.lab.suites import VerificationSuite


def test_listnet_suite_passes():
    """Every ListNet check holds and each kind of check reports."""
    rows = VerificationSuite(ListNetLoss(), m_values=(2, 4), trials=2000).run()
    assert all(row.passed for row in rows)
    checks = {row.check for row in rows}
    assert checks == {"lipschitz_inf_sup", "lipschitz_inf_concentrated", "gradient_fd", "hessian_op_norm", "lemma1",
                      "self_bounding", "vector_smoothness"}
    lipschitz = [row for row in rows if row.check == "lipschitz_inf_sup"]
    assert [row.m for row in lipschitz] == [2, 4]
    assert all(row.bound == 2.0 and row.margin >= 0 for row in lipschitz)


def test_ranksvm_suite_reports_witness():
    """RankSVM gets the all-pairs witness instead of sampling and skips the smooth checks."""
    rows = VerificationSuite(RankSVMLoss(), m_values=(2, 3, 8), trials=100).run()
    assert all(row.passed for row in rows)
    witness = {row.m: row.observed for row in rows if row.check == "ranksvm_witness"}
    assert witness == {2: 2.0, 3: 4.0, 8: 32.0}
    assert not any(row.check in ("hessian_op_norm", "self_bounding", "vector_smoothness") for row in rows)


def test_sdcg_suite_uses_sigma_in_bound():
    """The Lipschitz bound of smoothed DCG is 2 G(y_max) / sigma."""
    suite = VerificationSuite(SmoothDCG1Loss(0.5), m_values=(4,), trials=500)
    suite.set_check_enabled("lemma1", False)
    rows = suite.run()
    assert all(row.passed for row in rows)
    assert [row.bound for row in rows if row.check == "lipschitz_inf_sup"] == [pytest.approx(60.0)]
    assert not any(row.check == "lemma1" for row in rows)


def test_check_registry():
    """Unknown checks are refused; rows flatten to dicts."""
    suite = VerificationSuite(ListNetLoss(), m_values=(2,), trials=10)
    with pytest.raises(KeyError):
        suite.set_check_enabled("nonexistent", False)
    for name in list(suite.checks):
        suite.set_check_enabled(name, name == "lipschitz_inf_sup")
    rows = suite.run()
    assert [row.check for row in rows] == ["lipschitz_inf_sup", "lipschitz_inf_concentrated"]
    assert set(rows[0].to_row()) == {"check", "loss", "m", "observed", "bound", "margin", "passed", "note"}
    assert rows[0].loss == "listnet"


@pytest.mark.parametrize("m", [2, 16, 128, 512])
def test_listnet_lipschitz_constant_is_attained(m):
    """Labels on one document and scores on another drive ||grad||_1 to at least 1.99."""
    suite = VerificationSuite(ListNetLoss(), m_values=(m,), trials=200)
    rows = [row for row in suite.check_lipschitz() if row.check == "lipschitz_inf_concentrated"]
    assert len(rows) == 1
    assert rows[0].passed
    assert 1.99 <= rows[0].observed <= 2.0
