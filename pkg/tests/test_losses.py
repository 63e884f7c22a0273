"""Tests for the ListNet, smoothed DCG@1 and RankSVM losses and their constants."""

import sys
import os
import math
import numpy as np
import pytest

# Add project root so imports work
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.core.errors import NonFiniteError, ShapeError, UnsupportedOperationError
from src.core.losses import (
    ListNetLoss,
    LossKind,
    RankSVMLoss,
    SmoothDCG1Loss,
    analytic_constants,
    loss_gradient,
    loss_hessian,
    loss_value,
    make_loss,
    ordered_pair_capacity,
)
from src.core.ranking import ClassSpec
from src.lab.oracles import op_norm_inf_to_1


def test_listnet_gradient_example():
    """Two items, y = (1, 0), s = (0, 1)."""
    grad = loss_gradient(ListNetLoss(), [0.0, 1.0], [1.0, 0.0])
    np.testing.assert_allclose(grad, [-0.462117, 0.462117], atol=1e-6)


def test_listnet_value_is_cross_entropy():
    """Value equals -sum P(y) log P(s) and is nonnegative."""
    s = np.array([0.3, -1.0, 2.0])
    y = np.array([2.0, 0.0, 1.0])
    p_s = np.exp(s) / np.exp(s).sum()
    p_y = np.exp(y) / np.exp(y).sum()
    assert loss_value(ListNetLoss(), s, y) == pytest.approx(-(p_y * np.log(p_s)).sum())
    assert loss_value(ListNetLoss(), [1e3, -1e3], [0.0, 4.0]) > 0.0


def test_listnet_hessian_at_zero():
    """diag(p) - pp' at equal scores."""
    np.testing.assert_allclose(loss_hessian(ListNetLoss(), [0.0, 0.0], [1.0, 0.0]),
                               [[0.25, -0.25], [-0.25, 0.25]])


def test_sdcg_value_and_translation_invariance():
    """Equal scores average the gains; gradients sum to zero."""
    loss = SmoothDCG1Loss(sigma=1.0, y_max=4)
    assert loss.value([0.0, 0.0], [1.0, 0.0]) == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    s = rng.normal(size=6)
    y = rng.integers(0, 5, size=6).astype(float)
    assert loss.gradient(s, y).sum() == pytest.approx(0.0, abs=1e-12)
    assert loss.value(s + 3.0, y) == pytest.approx(loss.value(s, y))


def test_sdcg_hessian_matches_gradient_differences():
    """Central differences of the gradient reproduce the Hessian."""
    loss = SmoothDCG1Loss(sigma=0.7, y_max=3)
    rng = np.random.default_rng(1)
    s = rng.normal(size=5)
    y = rng.integers(0, 4, size=5).astype(float)
    h = 1e-6
    numeric = np.array([(loss.gradient(s + h * e, y) - loss.gradient(s - h * e, y)) / (2 * h)
                        for e in np.eye(5)]).T
    np.testing.assert_allclose(loss.hessian(s, y), numeric, atol=1e-6)
    np.testing.assert_allclose(loss.hessian(s, y), loss.hessian(s, y).T, atol=1e-12)


def test_ranksvm_value_and_subgradient():
    """One ordered pair on the hinge counts as active."""
    loss = RankSVMLoss()
    assert loss.value([0.0, 0.0], [1.0, 0.0]) == 1.0
    np.testing.assert_array_equal(loss.gradient([0.0, 0.0], [1.0, 0.0]), [-1.0, 1.0])
    assert loss.value([2.0, 0.0], [1.0, 0.0]) == 0.0
    assert loss.value([0.0, 0.0], [1.0, 1.0]) == 0.0
    with pytest.raises(UnsupportedOperationError):
        loss.hessian([0.0, 0.0], [1.0, 0.0])


def test_batches_agree_with_single_evaluations():
    """value_batch and gradient_batch match row-by-row calls."""
    rng = np.random.default_rng(2)
    S = rng.normal(size=(7, 4)) * 2.0
    Y = rng.integers(0, 5, size=(7, 4)).astype(float)
    for loss in (ListNetLoss(), SmoothDCG1Loss(0.5), RankSVMLoss()):
        np.testing.assert_allclose(loss.value_batch(S, Y), [loss.value(s, y) for s, y in zip(S, Y)])
        np.testing.assert_allclose(loss.gradient_batch(S, Y), [loss.gradient(s, y) for s, y in zip(S, Y)])
        np.testing.assert_allclose(loss.value_batch(S, Y[0]), [loss.value(s, Y[0]) for s in S])


def test_input_checks():
    """Mismatched or non-finite inputs raise."""
    with pytest.raises(ShapeError):
        ListNetLoss().value([0.0, 1.0], [1.0])
    with pytest.raises(NonFiniteError):
        RankSVMLoss().gradient([np.nan, 1.0], [1.0, 0.0])


def test_listnet_constants():
    """G = H = 2 in l-inf and B = log m + 2WR."""
    spec = ClassSpec("L2", weight_radius=2.0, input_radius=0.5)
    c = analytic_constants(ListNetLoss(), spec, 10)
    assert (c.lipschitz_inf, c.smoothness_inf, c.lipschitz_l2) == (2.0, 2.0, 2.0)
    assert c.uniform_bound == pytest.approx(math.log(10) + 2.0)
    assert c.consistent(10)


def test_sdcg_constants():
    """2 D(1) G(y_max) / sigma with no smoothness constant."""
    c = analytic_constants(make_loss("sdcg", sigma=0.5, y_max=4), ClassSpec(), 8)
    assert c.lipschitz_inf == pytest.approx(60.0)
    assert c.uniform_bound == pytest.approx(15.0)
    assert c.smoothness_inf is None
    assert analytic_constants(make_loss("sdcg", sigma=1.0, y_max=1), ClassSpec(), 8).lipschitz_inf == 2.0


def test_ranksvm_constants():
    """m(m-1) envelope, m^2/2 witness and grade-aware uniform bound."""
    c = analytic_constants(RankSVMLoss(y_max=1), ClassSpec(), 4)
    assert c.lipschitz_inf == 12.0
    assert c.lipschitz_inf_witness == 8.0
    assert c.lipschitz_l2 == pytest.approx(3.0 * 2.0)
    assert c.uniform_bound == pytest.approx(4 * 3.0)
    assert c.consistent(4)


def test_ordered_pair_capacity():
    """Balanced grade partitions maximize strictly ordered pairs."""
    assert ordered_pair_capacity(4, 2) == 4
    assert ordered_pair_capacity(3, 5) == 3
    assert ordered_pair_capacity(6, 3) == 12
    assert ordered_pair_capacity(5, 1) == 0


def test_make_loss():
    """Kinds resolve by name; sigma only for sdcg."""
    assert make_loss("listnet").kind is LossKind.LISTNET
    assert make_loss("sdcg").sigma == 1.0
    with pytest.raises(ValueError):
        make_loss("listnet", sigma=0.5)
    with pytest.raises(ValueError):
        make_loss("sdcg", sigma=0.0)
    with pytest.raises(ValueError):
        make_loss("lambdarank")


def test_ranksvm_l2_gradient_norm_bound():
    """Each subgradient entry is a difference of pair counts, so ||g||_2 <= (m - 1) sqrt(m)."""
    rng = np.random.default_rng(9)
    loss = RankSVMLoss()
    for m in (2, 3, 5, 8, 20):
        bound = analytic_constants(loss, ClassSpec(), m).lipschitz_l2
        S = rng.normal(scale=0.3, size=(2000, m))
        Y = rng.integers(0, 5, size=(2000, m)).astype(float)
        G = loss.gradient_batch(S, Y)
        assert np.abs(G).max() <= m - 1
        assert np.linalg.norm(G, axis=1).max() <= bound * (1 + 1e-12)
    # two documents in the wrong order attain it
    g = loss.gradient([0.0, 0.0], [1.0, 0.0])
    assert np.linalg.norm(g) == pytest.approx(analytic_constants(loss, ClassSpec(), 2).lipschitz_l2)


def test_sdcg_step_smoothness_envelopes_hessian():
    """3 D(1) G(y_max) / sigma^2 bounds the inf->1 norm of the smoothed DCG Hessian."""
    rng = np.random.default_rng(4)
    for sigma in (0.5, 1.0, 2.0):
        loss = SmoothDCG1Loss(sigma)
        envelope = loss.step_smoothness(ClassSpec(), 8)
        assert envelope == pytest.approx(3.0 * 15.0 / sigma ** 2)
        for _ in range(300):
            m = int(rng.integers(2, 9))
            s = rng.normal(scale=3.0, size=m)
            y = rng.integers(0, 5, size=m).astype(float)
            assert op_norm_inf_to_1(loss.hessian(s, y)).value <= envelope * (1 + 1e-12)
    assert RankSVMLoss().step_smoothness(ClassSpec(), 4) is None
    assert ListNetLoss().step_smoothness(ClassSpec(), 4) == 2.0
