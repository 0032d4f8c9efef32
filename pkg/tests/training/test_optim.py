"""Tests for the Adam optimizer."""

import numpy as np
import pytest

from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import Tensor
from odesr.training.optim import Adam, AdamState, adam_step


class TestAdamStep:
    """Tests for adam_step."""

    def test_first_step_moves_by_lr(self):
        """The bias-corrected first update has magnitude lr per coordinate."""
        param = Tensor(np.array([1.0, -2.0, 3.0]))
        state = AdamState.zeros([param])
        applied = adam_step([param], [np.array([0.5, -4.0, 1e-3])], state, lr=0.01)

        assert applied
        assert state.step == 1
        np.testing.assert_allclose(param.data, [0.99, -1.99, 2.99], atol=1e-6)

    def test_matches_reference_over_steps(self):
        """Three updates match a direct transcription of the update rule."""
        param = Tensor(np.array([0.3, -0.7]))
        state = AdamState.zeros([param])
        grads = [np.array([0.1, -0.2]), np.array([0.3, 0.05]), np.array([-0.4, 0.2])]

        expected = param.data.copy()
        m = np.zeros(2)
        v = np.zeros(2)
        for step, g in enumerate(grads, start=1):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            expected -= 0.05 * (m / (1 - 0.9**step)) / (np.sqrt(v / (1 - 0.999**step)) + 1e-8)
            adam_step([param], [g], state, lr=0.05)

        np.testing.assert_allclose(param.data, expected, rtol=1e-12)

    def test_updates_in_place(self):
        """The parameter array object is updated, not replaced."""
        param = Tensor(np.ones(4, dtype=np.float32))
        array = param.data
        adam_step([param], [np.ones(4)], AdamState.zeros([param]), lr=0.1)

        assert param.data is array
        assert param.data.dtype == np.float32
        assert np.all(array < 1.0)

    def test_non_finite_gradient_skips(self):
        """A NaN gradient leaves parameters and moments untouched."""
        a = Tensor(np.ones(2))
        b = Tensor(np.ones(2))
        state = AdamState.zeros([a, b])
        applied = adam_step([a, b], [np.ones(2), np.array([np.nan, 0.0])], state, lr=0.1)

        assert not applied
        assert state.skipped == 1
        assert state.step == 0
        np.testing.assert_array_equal(a.data, 1.0)
        np.testing.assert_array_equal(state.m[0], 0.0)

    def test_gradient_count_mismatch(self):
        """A missing gradient raises ShapeMismatchError."""
        param = Tensor(np.ones(2))
        with pytest.raises(ShapeMismatchError):
            adam_step([param], [], AdamState.zeros([param]), lr=0.1)

    def test_gradient_shape_mismatch(self):
        """A gradient of the wrong shape raises ShapeMismatchError."""
        param = Tensor(np.ones(2))
        with pytest.raises(ShapeMismatchError):
            adam_step([param], [np.ones(3)], AdamState.zeros([param]), lr=0.1)


class TestAdam:
    """Tests for the bound optimizer."""

    def test_minimizes_quadratic(self):
        """Repeated steps drive a quadratic towards its minimum."""
        param = Tensor(np.array([2.0, -3.0]))
        optimizer = Adam([param], lr=0.1)
        for _ in range(300):
            optimizer.step([2.0 * param.data])

        assert np.all(np.abs(param.data) < 0.1)

    def test_lr_is_read_each_step(self):
        """Changing lr between steps changes the update size."""
        param = Tensor(np.zeros(1))
        optimizer = Adam([param], lr=0.1)
        optimizer.lr = 0.0
        optimizer.step([np.ones(1)])

        assert param.data[0] == 0.0
