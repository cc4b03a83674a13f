"""Unit tests for toy/optim.py"""
import numpy as np
import pytest

from ssidepth.errors import InvalidArgumentError, NonFiniteGradientError
from ssidepth.toy.optim import OptimizerState, adam_step


def test_first_step_moves_by_learning_rate():
    """With bias correction the first update is lr * sign(g)."""
    params = {"w": np.array([1.0, -2.0])}
    adam_step(OptimizerState(learning_rate=0.1), params, {"w": np.array([0.5, -3.0])})
    np.testing.assert_allclose(params["w"], [0.9, -1.9], rtol=1e-6)


def test_zero_learning_rate_changes_nothing():
    """lr = 0 leaves parameters untouched but still counts the step."""
    params = {"w": np.array([1.0, 2.0])}
    state = OptimizerState(learning_rate=0.0)
    adam_step(state, params, {"w": np.array([1.0, 1.0])})
    np.testing.assert_array_equal(params["w"], [1.0, 2.0])
    assert state.step == 1


def test_moments_accumulate():
    """A second step with the same gradient keeps moving in the same direction."""
    params = {"w": np.array([0.0])}
    state = OptimizerState(learning_rate=0.01)
    for _ in range(2):
        adam_step(state, params, {"w": np.array([2.0])})
    assert params["w"][0] == pytest.approx(-0.02, rel=1e-6)
    assert state.step == 2


def test_non_finite_gradient_leaves_state_alone():
    """A NaN gradient raises before any parameter or moment changes."""
    params = {"a": np.array([1.0]), "b": np.array([1.0])}
    state = OptimizerState(learning_rate=0.1)
    with pytest.raises(NonFiniteGradientError) as exc:
        adam_step(state, params, {"a": np.array([1.0]), "b": np.array([np.nan])})
    assert exc.value.diagnostics["parameter"] == "b"
    assert params["a"][0] == 1.0
    assert state.step == 0
    assert not state.first


@pytest.mark.parametrize("grads", [{}, {"w": np.zeros(3)}])
def test_gradient_must_match(grads):
    """Missing or misshapen gradients are invalid."""
    with pytest.raises(InvalidArgumentError):
        adam_step(OptimizerState(), {"w": np.zeros(2)}, grads)


@pytest.mark.parametrize("kwargs", [{"learning_rate": -1.0}, {"betas": (1.0, 0.9)}, {"eps": 0.0}])
def test_state_validation(kwargs):
    """Hyperparameters are range-checked."""
    with pytest.raises(InvalidArgumentError):
        OptimizerState(**kwargs)
