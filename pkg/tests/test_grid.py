"""Tests for image derivatives and the gradient/divergence pair."""

import numpy as np
import pytest

from tests.fixtures import AMBIGUITY_FRAME_1, AMBIGUITY_FRAME_2, random_image
from tvflow.exceptions import FlowShapeError
from tvflow.grid import (
    div_backward,
    divergence,
    grad_forward,
    gradient,
    gradient_norm_sq,
    image_derivatives,
)
from tvflow.types import GradientField, Image


class TestImageDerivatives:
    """Tests for image_derivatives()."""

    def test_identical_frames_have_zero_time_derivative(self):
        """Test that u_t vanishes for identical frames."""
        image = random_image((6, 7))
        derivs = image_derivatives(image, image)
        assert np.array_equal(derivs.ut, np.zeros((6, 7)))

    def test_time_derivative_of_ambiguity_example(self):
        """Test that u_t is the frame difference."""
        derivs = image_derivatives(Image(AMBIGUITY_FRAME_1), Image(AMBIGUITY_FRAME_2))
        assert derivs.ut[0, 0] == -1.0
        assert derivs.ut[1, 0] == 1.0
        assert np.array_equal(derivs.ut, AMBIGUITY_FRAME_2 - AMBIGUITY_FRAME_1)

    def test_central_stencil_on_ramp_is_unscaled(self):
        """Test that the full central stencil gives 2 on a unit ramp."""
        ramp = np.tile(np.arange(6, dtype=float), (5, 1)) / 10.0
        derivs = image_derivatives(Image(ramp), Image(ramp))
        assert np.allclose(derivs.ux[:, 1:-1], 0.2)
        assert np.all(derivs.ux[:, [0, -1]] == 0.0)
        assert np.all(derivs.uy == 0.0)

    def test_half_scale_halves_central_stencil(self):
        """Test the conventional central quotient."""
        ramp = np.tile(np.arange(6, dtype=float), (5, 1)) / 10.0
        derivs = image_derivatives(Image(ramp), Image(ramp), scale="half")
        assert np.allclose(derivs.ux[:, 1:-1], 0.1)

    def test_forward_scheme(self):
        """Test forward differences with zeroed boundaries."""
        data = np.array([[0.0, 0.1, 0.4, 0.9], [0.0, 0.1, 0.4, 0.9], [0.5, 0.5, 0.5, 0.5]])
        derivs = image_derivatives(Image(data), Image(data), scheme="forward")
        assert np.allclose(derivs.ux[0], [0.0, 0.3, 0.5, 0.0])
        assert np.allclose(derivs.uy[1], [0.5, 0.4, 0.1, -0.4])
        assert np.all(derivs.uy[[0, -1]] == 0.0)

    @pytest.mark.parametrize("scheme", ["central", "forward"])
    def test_boundary_zeros_hold_for_random_input(self, scheme):
        """Test that u_x and u_y vanish on their boundary columns and rows."""
        derivs = image_derivatives(random_image((9, 8), 1), random_image((9, 8), 2), scheme)
        assert np.all(derivs.ux[:, 0] == 0) and np.all(derivs.ux[:, -1] == 0)
        assert np.all(derivs.uy[0, :] == 0) and np.all(derivs.uy[-1, :] == 0)

    def test_size_mismatch_raises(self):
        """Test that frames of different size are rejected."""
        with pytest.raises(FlowShapeError) as exc_info:
            image_derivatives(random_image((4, 4)), random_image((4, 5)))
        assert "differ" in str(exc_info.value)


class TestGradForward:
    """Tests for grad_forward()."""

    def test_constant_grid(self):
        """Test that constants have zero gradient."""
        g = grad_forward(np.full((5, 4), 3.0))
        assert np.all(g.gx == 0) and np.all(g.gy == 0)

    def test_ramp(self):
        """Test a ramp along x."""
        g = grad_forward(np.tile(np.arange(5, dtype=float), (3, 1)))
        assert np.all(g.gx[:, :-1] == 1.0)
        assert np.all(g.gx[:, -1] == 0.0)
        assert np.all(g.gy == 0.0)

    def test_two_by_two(self):
        """Test the smallest grid."""
        g = grad_forward(np.array([[0.0, 1.0], [0.0, 1.0]]))
        assert np.array_equal(g.gx, [[1.0, 0.0], [1.0, 0.0]])
        assert np.array_equal(g.gy, np.zeros((2, 2)))

    def test_rejects_small_grid(self):
        """Test that grids below 2x2 are rejected."""
        with pytest.raises(FlowShapeError):
            grad_forward(np.zeros((1, 4)))


class TestDivBackward:
    """Tests for div_backward() and the adjoint relation."""

    def test_zero_field(self):
        """Test that the zero field has zero divergence."""
        assert np.all(div_backward(GradientField(np.zeros((3, 3)), np.zeros((3, 3)))) == 0)

    def test_two_column_case(self):
        """Test the boundary stencil with two columns."""
        gx = np.array([[2.0, 0.0], [5.0, 0.0]])
        div = div_backward(GradientField(gx, np.zeros((2, 2))))
        assert np.array_equal(div, [[2.0, -2.0], [5.0, -5.0]])

    def test_adjoint_on_random_grids(self):
        """Test <grad v, y> = -<v, div y> on random 16x16 grids."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            v = rng.standard_normal((16, 16))
            y = rng.standard_normal((2, 16, 16))
            y[0, :, -1] = 0.0
            y[1, -1, :] = 0.0
            lhs = np.vdot(gradient(v), y)
            rhs = -np.vdot(v, divergence(y))
            assert abs(lhs - rhs) <= 1e-8 * (np.linalg.norm(v) * np.linalg.norm(y) + 1)

    def test_adjoint_without_boundary_zeros(self):
        """Test that the pair stays adjoint for arbitrary dual fields."""
        rng = np.random.default_rng(1)
        v = rng.standard_normal((3, 8, 7))
        y = rng.standard_normal((3, 2, 8, 7))
        assert np.vdot(gradient(v), y) == pytest.approx(-np.vdot(v, divergence(y)), abs=1e-10)


class TestGradientNorm:
    """Tests for gradient_norm_sq()."""

    @pytest.mark.parametrize("shape", [(8, 8), (16, 12), (5, 20)])
    def test_bounded_by_eight(self, shape):
        """Test the standard bound of the stencil pair."""
        norm_sq = gradient_norm_sq(shape)
        assert 4.0 < norm_sq <= 8.0 + 1e-9
