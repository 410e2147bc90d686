import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framebridge.errors import InvalidParameterError, ShapeMismatchError
from framebridge.guidance import (
    GuidanceConfig,
    GuidanceMode,
    LastFrameSelector,
    cfg_combine,
    cg_least_squares,
    dds_guide,
)


class DenseOperator:
    """Arbitrary linear map video -> data vector, for CGLS exercises."""

    def __init__(self, matrix, frames, dims):
        self.matrix = matrix
        self.frames = frames
        self.dims = dims

    def matvec(self, v):
        return self.matrix @ v.reshape(-1)

    def rmatvec(self, y):
        return (self.matrix.T @ y).reshape(self.frames, self.dims)


# -- cfg_combine -----------------------------------------------------------


def test_cfg_combine_scale_one_returns_conditional_exactly():
    rng = np.random.default_rng(0)
    cond, uncond = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    np.testing.assert_allclose(cfg_combine(cond, uncond, 1.0), cond, atol=1e-12)


def test_cfg_combine_scale_zero_returns_unconditional_exactly():
    rng = np.random.default_rng(1)
    cond, uncond = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    np.testing.assert_array_equal(cfg_combine(cond, uncond, 0.0), uncond)


def test_cfg_combine_extrapolates_beyond_conditional():
    # hand evaluation: 0 + 2 * (1 - 0) = 2
    np.testing.assert_array_equal(cfg_combine([[1.0]], [[0.0]], 2.0), [[2.0]])


@given(st.floats(min_value=0.0, max_value=10.0))
@settings(max_examples=40, deadline=None)
def test_cfg_combine_of_equal_estimates_is_identity(scale):
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(cfg_combine(a, a, scale), a)


def test_cfg_combine_rejects_mismatched_shapes():
    with pytest.raises(ShapeMismatchError):
        cfg_combine(np.zeros((2, 2)), np.zeros((3, 2)), 1.0)


# -- generic CGLS ------------------------------------------------------------


def test_cgls_one_step_on_identity_operator_is_exact():
    op = DenseOperator(np.eye(1), frames=1, dims=1)
    out = cg_least_squares(op, np.array([5.0]), np.array([[2.0]]), 1)
    np.testing.assert_allclose(out, [[5.0]], atol=1e-12)


def test_cgls_residuals_are_non_increasing_on_random_operators():
    rng = np.random.default_rng(3)
    for _ in range(20):
        frames, dims, m = 4, 3, 5
        op = DenseOperator(rng.standard_normal((m, frames * dims)), frames, dims)
        y = rng.standard_normal(m)
        x_init = rng.standard_normal((frames, dims))
        residuals = [
            np.linalg.norm(y - op.matvec(cg_least_squares(op, y, x_init, iters)))
            for iters in range(7)
        ]
        for earlier, later in zip(residuals, residuals[1:]):
            assert later <= earlier + 1e-10


def test_cgls_converges_to_dense_least_squares_solution():
    rng = np.random.default_rng(4)
    frames, dims, m = 3, 2, 8
    matrix = rng.standard_normal((m, frames * dims))
    op = DenseOperator(matrix, frames, dims)
    y = rng.standard_normal(m)
    x_init = np.zeros((frames, dims))
    out = cg_least_squares(op, y, x_init, 50)
    direct = np.linalg.lstsq(matrix, y, rcond=None)[0].reshape(frames, dims)
    np.testing.assert_allclose(out, direct, atol=1e-8)


def test_cgls_single_iteration_is_exact_for_the_selection_operator():
    # A^T A has one distinct nonzero eigenvalue, so CG converges in one step;
    # the oracle is the dense normal-equations least-squares solve.
    rng = np.random.default_rng(5)
    frames, dims = 5, 3
    sel = LastFrameSelector(frames, dims)
    dense = np.zeros((dims, frames * dims))
    dense[:, -dims:] = np.eye(dims)
    y = rng.standard_normal(dims)
    x_init = rng.standard_normal((frames, dims))
    out = cg_least_squares(sel, y, x_init, 1)
    correction = np.linalg.lstsq(dense, y - dense @ x_init.reshape(-1), rcond=None)[0]
    oracle = x_init + correction.reshape(frames, dims)
    np.testing.assert_allclose(out, oracle, atol=1e-10)
    assert np.linalg.norm(y - out[-1]) <= 1e-10


def test_cgls_rejects_negative_iterations():
    with pytest.raises(InvalidParameterError):
        cg_least_squares(LastFrameSelector(2, 1), np.zeros(1), np.zeros((2, 1)), -1)


# -- dds_guide ----------------------------------------------------------------


def test_dds_zero_iterations_is_identity():
    rng = np.random.default_rng(6)
    x0 = rng.standard_normal((4, 2))
    np.testing.assert_array_equal(dds_guide(x0, np.ones(2), 0), x0)


def test_dds_zero_residual_short_circuits_for_any_iteration_count():
    x0 = np.array([[0.0, 1.0], [2.0, 3.0]])
    for iters in (1, 3, 10):
        np.testing.assert_array_equal(dds_guide(x0, x0[-1].copy(), iters), x0)


def test_dds_single_iteration_sets_last_frame_to_target():
    out = dds_guide(np.array([[0.0], [0.0], [0.3]]), np.array([1.0]), 1)
    np.testing.assert_array_equal(out, [[0.0], [0.0], [1.0]])


def test_dds_leaves_other_frames_bit_unchanged():
    rng = np.random.default_rng(7)
    x0 = rng.standard_normal((6, 4))
    out = dds_guide(x0, rng.standard_normal(4), 1)
    assert out[:-1].tobytes() == x0[:-1].tobytes()


def test_dds_matches_generic_cgls_for_every_iteration_count():
    rng = np.random.default_rng(8)
    frames, dims = 5, 3
    sel = LastFrameSelector(frames, dims)
    for iters in range(4):
        x0 = rng.standard_normal((frames, dims))
        target = rng.standard_normal(dims)
        np.testing.assert_allclose(
            dds_guide(x0, target, iters),
            cg_least_squares(sel, target, x0, iters),
            atol=1e-12,
        )


def test_dds_residual_never_increases_with_iterations():
    rng = np.random.default_rng(9)
    for _ in range(100):
        x0 = rng.standard_normal((4, 2))
        target = rng.standard_normal(2)
        base = np.linalg.norm(target - x0[-1])
        previous = base
        for iters in range(4):
            residual = np.linalg.norm(target - dds_guide(x0, target, iters)[-1])
            assert residual <= previous + 1e-12
            previous = residual
        assert np.linalg.norm(target - dds_guide(x0, target, 1)[-1]) <= 1e-10


def test_dds_validates_inputs():
    with pytest.raises(ShapeMismatchError):
        dds_guide(np.zeros((3, 2)), np.zeros(3), 1)
    with pytest.raises(InvalidParameterError):
        dds_guide(np.zeros((3, 2)), np.zeros(2), -1)


# -- GuidanceConfig -----------------------------------------------------------


def test_guidance_config_validation():
    GuidanceConfig(mode=GuidanceMode.CFG, scale=7.5)  # plain CFG allows omega > 1
    GuidanceConfig(mode="cfgpp", scale=0.8, dds_enabled=True, dds_iters=2)
    with pytest.raises(InvalidParameterError):
        GuidanceConfig(mode=GuidanceMode.CFGPP, scale=1.2)
    with pytest.raises(InvalidParameterError):
        GuidanceConfig(scale=-0.1)
    with pytest.raises(InvalidParameterError):
        GuidanceConfig(dds_iters=-1)
