import numpy as np
import pytest

from segrobust.core.rng import BulkRng
from segrobust.errors import ShapeMismatchError, StepOutOfRangeError
from segrobust.losses import (
    LossSpec,
    PredictionField,
    attack_objective,
    composite_loss,
    dice_loss,
    focal_loss,
    mse_loss,
    pixelwise_loss_field,
    segpgd_lambda,
    segpgd_weighted_loss,
)

from .oracles import fd_gradient, fd_relative_error


def _field(seed, shape=(6, 6), away_from_half=True):
    p = 0.02 + 0.96 * BulkRng(seed).uniforms(shape)
    if away_from_half:
        p = np.where(np.abs(p - 0.5) < 0.01, p + 0.02, p)
    return p


def _truth(seed, shape=(6, 6)):
    return BulkRng(seed + 991).uniforms(shape) > 0.5


def test_prediction_field_validation():
    PredictionField(np.zeros((2, 2)))
    with pytest.raises(ShapeMismatchError):
        PredictionField(np.zeros(4))
    with pytest.raises(ValueError):
        PredictionField(np.full((2, 2), 1.2))


def test_loss_spec_validation():
    with pytest.raises(ValueError):
        LossSpec(kind="hinge")
    with pytest.raises(ValueError):
        LossSpec(focal_alpha=1.5)
    with pytest.raises(ValueError):
        LossSpec(dice_smooth=0.0)


def test_focal_scalar_hand_value():
    # single pixel, truth=1, p=0.5, gamma=2, alpha=0.25 -> 0.25 * 0.25 * ln 2
    loss, _ = focal_loss(np.array([[0.5]]), np.array([[True]]), gamma=2.0, alpha=0.25)
    assert loss == pytest.approx(0.25 * 0.25 * np.log(2.0), rel=1e-12)


def test_focal_perfect_prediction_is_negligible():
    t = _truth(1)
    loss, _ = focal_loss(t.astype(float), t)
    assert loss < 1e-12


def test_dice_trivial_and_closed_form():
    t = _truth(2)
    loss, _ = dice_loss(t.astype(float), t, smooth=1e-9)
    assert loss == pytest.approx(0.0, abs=1e-9)
    # all-ones prediction, truth half ones, smooth -> 0: 1 - N/(N + N/2) = 1/3
    n = 16
    truth = np.zeros((4, 4), bool)
    truth[:2] = True
    loss, _ = dice_loss(np.ones((4, 4)), truth, smooth=1e-12)
    assert loss == pytest.approx(1.0 / 3.0, abs=1e-9)
    # exact algebra with the default smooth
    s = 1.0
    expected = 1.0 - (2 * (n / 2) + s) / (n + n / 2 + s)
    loss, _ = dice_loss(np.ones((4, 4)), truth, smooth=s)
    assert loss == pytest.approx(expected, rel=1e-12)


def test_mse_examples():
    t = np.array([[True]])
    assert composite_loss(t.astype(float), t, LossSpec(kind="mse"))[0] == 0.0
    loss, _ = composite_loss(np.array([[0.3]]), t, LossSpec(kind="mse"))
    assert loss == pytest.approx(0.49, rel=1e-12)


def test_composite_recomposition():
    spec = LossSpec()
    for seed in range(10):
        p, t = _field(seed), _truth(seed)
        total, grad = composite_loss(p, t, spec)
        fl, fg = focal_loss(p, t, spec.focal_gamma, spec.focal_alpha)
        dl, dg = dice_loss(p, t, spec.dice_smooth)
        assert total == pytest.approx(20 * fl + dl, abs=1e-12)
        assert np.allclose(grad, 20 * fg + dg, atol=1e-12)


def test_segpgd_lambda_schedule():
    assert segpgd_lambda(1, 10) == 0.0
    assert segpgd_lambda(10, 10) == pytest.approx(9 / 20)
    assert segpgd_lambda(10, 10) < 0.5


def test_segpgd_single_group_cases():
    t = _truth(3)
    base, base_grad = pixelwise_loss_field(_field(3), t, LossSpec(kind="mse"))
    correct_pred = np.where(t, 0.9, 0.1)
    lam = segpgd_lambda(4, 10)
    loss, _ = segpgd_weighted_loss(correct_pred, t, 4, 10, base, base_grad)
    assert loss == pytest.approx((1 - lam) * base.mean(), rel=1e-12)
    wrong_pred = np.where(t, 0.1, 0.9)
    loss, _ = segpgd_weighted_loss(wrong_pred, t, 4, 10, base, base_grad)
    assert loss == pytest.approx(lam * base.mean(), rel=1e-12)


def test_segpgd_lambda_zero_ignores_misclassified():
    t = _truth(4)
    p = _field(4)
    base, base_grad = pixelwise_loss_field(p, t, LossSpec())
    loss, grad = segpgd_weighted_loss(p, t, 1, 10, base, base_grad)
    correct = (p > 0.5) == t
    assert loss == (np.where(correct, base, 0.0)).sum() / p.size
    assert (grad[~correct] == 0.0).all()


def test_segpgd_step_bounds():
    t = _truth(5)
    base = np.zeros_like(t, dtype=float)
    with pytest.raises(StepOutOfRangeError):
        segpgd_weighted_loss(_field(5), t, 0, 10, base, base)
    with pytest.raises(StepOutOfRangeError):
        segpgd_weighted_loss(_field(5), t, 11, 10, base, base)


def test_shape_mismatch_raises():
    with pytest.raises(ShapeMismatchError):
        focal_loss(np.zeros((2, 2)), np.zeros((3, 3), bool))
    with pytest.raises(ShapeMismatchError):
        dice_loss(np.zeros((2, 2)), np.zeros((2, 3), bool))


def test_losses_nonnegative():
    for seed in range(20):
        p, t = _field(seed), _truth(seed)
        assert focal_loss(p, t)[0] >= 0
        assert dice_loss(p, t)[0] >= 0
        assert mse_loss(p, t)[0] >= 0
        assert attack_objective(p, t, LossSpec(), (3, 10))[0] >= 0


@pytest.mark.parametrize("kind,step", [
    ("focal", None), ("dice", None), ("composite", None), ("mse", None),
    ("segpgd", (4, 10)), ("segpgd", (1, 10)), ("segpgd", (10, 10)),
])
def test_gradients_match_finite_differences(kind, step):
    for seed in range(10):
        p, t = _field(seed), _truth(seed)
        if kind == "focal":
            fn = lambda q: focal_loss(q, t)[0]
            analytic = focal_loss(p, t)[1]
        elif kind == "dice":
            fn = lambda q: dice_loss(q, t)[0]
            analytic = dice_loss(p, t)[1]
        elif kind == "composite":
            fn = lambda q: composite_loss(q, t, LossSpec())[0]
            analytic = composite_loss(p, t, LossSpec())[1]
        elif kind == "mse":
            fn = lambda q: mse_loss(q, t)[0]
            analytic = mse_loss(p, t)[1]
        else:
            spec = LossSpec()
            fn = lambda q: attack_objective(q, t, spec, step)[0]
            analytic = attack_objective(p, t, spec, step)[1]
        numeric = fd_gradient(fn, p)
        assert fd_relative_error(analytic, numeric) < 1e-6
