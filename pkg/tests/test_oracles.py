"""Tests for the numerical oracles: finite differences, Lipschitz sampling,
operator norms and the smoothness inequalities."""

import sys
import os
import numpy as np
import pytest

# Add project root so imports work
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.core.errors import UnsupportedOperationError
from src.core.losses import ListNetLoss, RankSVMLoss, SmoothDCG1Loss, analytic_constants
from src.core.ranking import ClassSpec
from src.lab.oracles import (
    SamplerSpec,
    concentrated_lipschitz_inf,
    empirical_lipschitz_inf,
    finite_diff_gradient,
    op_norm_inf_to_1,
    self_bounding_check,
    sign_vectors,
    vector_smoothness_check,
    verify_lemma1,
)


class HalfSquare:
    def value(self, s, y):
        return 0.5 * float(np.dot(s, s))

    def gradient(self, s, y):
        return np.asarray(s, dtype=float)


class Constant:
    def value(self, s, y):
        return 1.0

    def gradient(self, s, y):
        return np.zeros(len(s))


def test_finite_diff_stationary_point():
    """ListNet has zero gradient at s = y."""
    y = np.array([2.0, 0.0, 1.0, 3.0])
    assert np.abs(finite_diff_gradient(ListNetLoss(), y, y)).max() <= 1e-8


def test_finite_diff_matches_listnet_example():
    """Central differences reproduce the two-item closed form."""
    numeric = finite_diff_gradient(ListNetLoss(), [0.0, 1.0], [1.0, 0.0])
    np.testing.assert_allclose(numeric, ListNetLoss().gradient([0.0, 1.0], [1.0, 0.0]), atol=1e-8)
    np.testing.assert_allclose(numeric, [-0.462117, 0.462117], atol=1e-6)


def test_finite_diff_quadratic_stub():
    """Exact for a quadratic, through the per-row fallback."""
    np.testing.assert_allclose(finite_diff_gradient(HalfSquare(), [1.0, 2.0], None, h=1e-4), [1.0, 2.0], atol=1e-9)
    with pytest.raises(ValueError):
        finite_diff_gradient(HalfSquare(), [1.0], None, h=0.0)


def test_closed_form_gradients_match_finite_differences():
    """ListNet and smoothed DCG agree with central differences on random points."""
    rng = np.random.default_rng(0)
    for loss in (ListNetLoss(), SmoothDCG1Loss(0.8)):
        for _ in range(200):
            m = int(rng.integers(2, 9))
            s = rng.uniform(-3.0, 3.0, size=m)
            y = rng.integers(0, 5, size=m).astype(float)
            np.testing.assert_allclose(loss.gradient(s, y), finite_diff_gradient(loss, s, y),
                                       rtol=1e-5, atol=1e-7)


def test_empirical_lipschitz_listnet_near_two():
    """Peaked scores against spread labels push the l1 norm close to 2."""
    estimate = empirical_lipschitz_inf(ListNetLoss(), SamplerSpec(m=16, score_scale=50.0, trials=10 ** 5))
    assert 1.9 < estimate.value <= 2.0
    assert np.abs(ListNetLoss().gradient(estimate.scores, estimate.labels)).sum() == pytest.approx(estimate.value)


def test_concentrated_family_reaches_two():
    """The concentrated family approaches the ListNet constant from below for every m."""
    for m in (2, 3, 16, 128, 512):
        estimate = concentrated_lipschitz_inf(ListNetLoss(), m)
        assert 1.99 <= estimate.value <= 2.0
        assert np.argmax(estimate.labels) != np.argmax(estimate.scores)
        assert np.abs(ListNetLoss().gradient(estimate.scores, estimate.labels)).sum() == pytest.approx(estimate.value)
    small_gap = concentrated_lipschitz_inf(ListNetLoss(), 2, gaps=(1.0,))
    assert small_gap.value < 1.0
    with pytest.raises(ValueError):
        concentrated_lipschitz_inf(ListNetLoss(), 1)


def test_empirical_lipschitz_below_analytic():
    """Sampled l1 gradient norms never exceed the analytic constants."""
    spec = ClassSpec()
    for loss in (ListNetLoss(), SmoothDCG1Loss(1.0, y_max=1), SmoothDCG1Loss(0.3)):
        for m in (2, 8, 64):
            estimate = empirical_lipschitz_inf(loss, SamplerSpec(m=m, score_scale=5.0, y_max=loss.y_max, trials=5000))
            assert estimate.value <= analytic_constants(loss, spec, m).lipschitz_inf * (1 + 1e-9)
    sdcg = empirical_lipschitz_inf(SmoothDCG1Loss(1.0, y_max=1), SamplerSpec(m=8, y_max=1, trials=5000))
    assert sdcg.value <= 2.0


def test_empirical_lipschitz_constant_stub():
    """A loss with zero gradient everywhere has estimate 0."""
    assert empirical_lipschitz_inf(Constant(), SamplerSpec(m=3, trials=50)).value == 0.0


def test_sampler_validation():
    """Nonpositive scale or trials are rejected."""
    with pytest.raises(ValueError):
        SamplerSpec(m=2, score_scale=0.0)
    with pytest.raises(ValueError):
        SamplerSpec(m=2, trials=0)


def test_op_norm_known_values():
    """Enumeration finds the alternating sign vector; zero maps to zero."""
    result = op_norm_inf_to_1([[1.0, -1.0], [-1.0, 1.0]])
    assert result.value == 4.0 and result.exact
    assert abs(result.argmax[0] - result.argmax[1]) == 2.0
    assert op_norm_inf_to_1(np.zeros((3, 3))).value == 0.0
    assert sign_vectors(3).shape == (8, 3)


def test_op_norm_listnet_hessian():
    """Exact value 1 at zero scores and at most 2 anywhere."""
    hessian = ListNetLoss().hessian([0.0, 0.0], [1.0, 0.0])
    result = op_norm_inf_to_1(hessian)
    assert result.value == pytest.approx(1.0)
    assert result.abs_sum_bound == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = int(rng.integers(2, 13))
        result = op_norm_inf_to_1(ListNetLoss().hessian(rng.normal(size=m) * 3.0, np.zeros(m)))
        assert result.value <= 2.0 + 1e-12
        assert result.value <= result.abs_sum_bound + 1e-12


def test_op_norm_large_matrix_is_flagged():
    """Above the enumeration limit only the absolute-sum bound is returned."""
    result = op_norm_inf_to_1(np.ones((13, 13)))
    assert not result.exact
    assert result.value == 169.0


def test_lemma1_examples():
    """Largest row norm is attained at a basis vector."""
    report = verify_lemma1(np.array([[3.0, 4.0], [0.0, 5.0]]), 2)
    assert report.closed_form == pytest.approx(5.0)
    assert report.basis_sup == pytest.approx(5.0)
    assert report.passed
    for p in (1, 2, 3.5, np.inf):
        assert verify_lemma1(np.eye(4), p).closed_form == pytest.approx(1.0)
    X = np.array([[0.5, -7.0], [2.0, 1.0]])
    assert verify_lemma1(X, np.inf).closed_form == 7.0


def test_lemma1_random_matrices():
    """Equality at basis vectors for several shapes."""
    rng = np.random.default_rng(2)
    for shape in ((2, 2), (3, 5), (8, 3)):
        for _ in range(100):
            assert verify_lemma1(rng.normal(size=shape), 2.0, samples=50, seed=int(rng.integers(1000))).passed


def test_self_bounding_random_points():
    """||grad_w|| <= sqrt(4 H R^2 f) for ListNet over random draws, also after rescaling X."""
    rng = np.random.default_rng(3)
    spec = ClassSpec()
    for _ in range(500):
        m = int(rng.integers(2, 33))
        X = rng.normal(size=(m, 3))
        y = rng.integers(0, 5, size=m).astype(float)
        w = rng.normal(size=3)
        assert self_bounding_check(ListNetLoss(), spec, X, y, w).passed
        assert self_bounding_check(ListNetLoss(), spec, 10.0 * X, y, w).passed


def test_self_bounding_needs_smoothness():
    """Losses without H are rejected."""
    with pytest.raises(UnsupportedOperationError):
        self_bounding_check(SmoothDCG1Loss(1.0), ClassSpec(), np.eye(2), [1.0, 0.0], [0.0, 0.0])
    with pytest.raises(UnsupportedOperationError):
        vector_smoothness_check(RankSVMLoss(), [0.0, 0.0], [1.0, 0.0], [1.0, 0.0])


def test_vector_smoothness_examples():
    """Equal points give 0 <= 0; a far pair still satisfies the inequality."""
    same = vector_smoothness_check(ListNetLoss(), [0.3, 0.1], [0.3, 0.1], [1.0, 0.0])
    assert same.lhs == 0.0 and same.rhs == 0.0 and same.passed
    far = vector_smoothness_check(ListNetLoss(), [0.0, 0.0], [5.0, -5.0], [1.0, 0.0])
    assert far.lhs <= far.rhs and far.passed


def test_vector_smoothness_random_points():
    """Random pairs up to m = 32 all pass."""
    rng = np.random.default_rng(4)
    for _ in range(2000):
        m = int(rng.integers(2, 33))
        y = rng.integers(0, 5, size=m).astype(float)
        s1, s2 = rng.uniform(-5.0, 5.0, size=(2, m))
        assert vector_smoothness_check(ListNetLoss(), s1, s2, y).passed
