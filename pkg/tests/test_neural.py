import math

import numpy as np
import pytest

from stencilnet.errors import InvalidArgumentError
from stencilnet.grid import stencil_patches
from stencilnet.neural import (
    AdamState,
    MlpParams,
    Tape,
    adam_step,
    elu,
    finite_difference_gradient,
    grad,
    infinity_norm_product,
    init_mlp,
    mlp_forward,
    mlp_forward_batch,
    mlp_forward_taped,
    relative_error,
    spike_fit_demo,
    spike_function,
    taped_params,
)
from stencilnet.operator import StencilNetModel, apply_operator, apply_operator_taped
from stencilnet.solvers import rk3_tvd_step


def _gradients_match(taped, numeric, rel=1e-4, abs_floor=1e-8):
    ok = (relative_error(taped, numeric) < rel) | (np.abs(taped - numeric) < abs_floor)
    return bool(np.all(ok))


def _replace(theta, q, array):
    arrays = [a.copy() for a in theta.arrays()]
    arrays[q] = array
    return MlpParams.from_arrays(arrays, theta.activation)


# 激活与前向
def test_elu_values():
    assert elu(0.0) == 0.0
    assert elu(1.0) == 1.0
    assert elu(-1.0) == pytest.approx(math.exp(-1.0) - 1.0)


def test_mlp_forward_zero_and_identity():
    zero = MlpParams([(np.zeros((4, 5)), np.zeros(4)), (np.zeros((1, 4)), np.zeros(1))])
    assert mlp_forward(zero, [1.0, -2.0, 3.0, 0.5, 9.0]) == 0.0
    center = MlpParams([(np.array([[0.0, 0.0, 1.0, 0.0, 0.0]]), np.zeros(1))])
    assert mlp_forward(center, [1.0, -2.0, 3.0, 0.5, 9.0]) == 3.0


def test_mlp_forward_matches_straight_line_reimplementation(rng):
    theta = init_mlp([7, 64, 64, 64, 1], seed=3)
    assert theta.widths == [7, 64, 64, 64, 1]
    patch = rng.standard_normal(7)
    h = patch
    for W, b in theta.layers[:-1]:
        z = W @ h + b
        h = np.array([v if v > 0 else math.exp(v) - 1.0 for v in z])
    W, b = theta.layers[-1]
    expected = float(W @ h + b)
    assert abs(mlp_forward(theta, patch) - expected) < 1e-12


def test_mlp_forward_dimension_mismatch():
    theta = init_mlp([7, 8, 1], seed=0)
    with pytest.raises(InvalidArgumentError):
        mlp_forward(theta, np.zeros(5))


def test_mlp_params_must_chain():
    with pytest.raises(InvalidArgumentError):
        MlpParams([(np.zeros((4, 3)), np.zeros(4)), (np.zeros((1, 5)), np.zeros(1))])


def test_mlp_lipschitz_bound(rng):
    theta = init_mlp([5, 16, 16, 1], seed=11)
    bound = infinity_norm_product(theta)
    for _ in range(50):
        a, b = rng.standard_normal(5), rng.standard_normal(5)
        assert abs(mlp_forward(theta, a) - mlp_forward(theta, b)) <= bound * np.max(np.abs(a - b)) + 1e-12


def test_init_mlp_is_deterministic():
    a = init_mlp([7, 16, 1], seed=42)
    b = init_mlp([7, 16, 1], seed=42)
    assert all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))
    assert np.all(a.layers[0][1] == 0)


# 反向模式
def test_grad_of_sum_of_squares(rng):
    theta = rng.standard_normal((3, 4))
    tape = Tape()
    v = tape.leaf(theta)
    (g,) = grad(tape.sum(tape.square(v)), [v])
    assert np.allclose(g, 2 * theta)


def test_tape_replay_reproduces_values(rng):
    theta = init_mlp([5, 8, 1], seed=1)
    tape = Tape()
    layer_vars = taped_params(tape, theta)
    out = tape.sum(mlp_forward_taped(tape, layer_vars, tape.constant(rng.standard_normal((10, 5)))))
    tape.replay()
    grads = tape.gradient(out, [layer_vars[0][0]], verify=True)
    assert grads[0].shape == (8, 5)


def test_mlp_params_vector_layout():
    theta = init_mlp([5, 8, 1], seed=4)
    vector = theta.to_vector()
    assert vector.size == theta.n_params == 5 * 8 + 8 + 8 + 1
    assert np.array_equal(vector[:40], theta.layers[0][0].reshape(-1))
    rebuilt = theta.with_vector(vector)
    assert all(np.array_equal(a, b) for a, b in zip(rebuilt.arrays(), theta.arrays()))
    with pytest.raises(InvalidArgumentError):
        theta.with_vector(vector[:-1])


def test_mlp_gradient_matches_finite_differences(rng, directional_gradient_check):
    theta = init_mlp([5, 8, 8, 1], seed=3)
    patch = rng.standard_normal(5)
    tape = Tape()
    layer_vars = taped_params(tape, theta)
    out = tape.sum(mlp_forward_taped(tape, layer_vars, tape.constant(patch[None, :])))
    taped = grad(out, [v for pair in layer_vars for v in pair])
    gradient = np.concatenate([g.reshape(-1) for g in taped])

    checked = directional_gradient_check(lambda z: mlp_forward(theta.with_vector(z), patch), theta.to_vector(), gradient)
    assert checked == 100
    # 逐分量校验一层偏置
    numeric = finite_difference_gradient(lambda a: mlp_forward(_replace(theta, 3, a), patch), theta.arrays()[3])
    assert _gradients_match(taped[3], numeric)


def test_gradient_through_rk3_step(rng, directional_gradient_check):
    m, n, dt = 2, 12, 0.05
    theta = init_mlp([2 * m + 1, 6, 1], seed=5)
    u0 = np.sin(2 * np.pi * np.arange(n) / n) + 0.1 * rng.standard_normal(n)

    def loss_value(params, u):
        model = StencilNetModel(params, m, 0.1, dt)
        out = rk3_tvd_step(u, lambda v, t: apply_operator(model, v), dt)
        return float(np.sum(out**2))

    tape = Tape()
    layer_vars = taped_params(tape, theta)
    u_var = tape.leaf(u0)
    stepped = rk3_tvd_step(u_var, lambda v, t: apply_operator_taped(tape, layer_vars, v, m), dt)
    loss = tape.sum(tape.square(stepped))
    assert float(loss.value) == pytest.approx(loss_value(theta, u0), rel=1e-12)

    flat = [v for pair in layer_vars for v in pair]
    taped = grad(loss, flat + [u_var])
    gradient = np.concatenate([g.reshape(-1) for g in taped])
    n_theta = theta.n_params

    def joint(z):
        return loss_value(theta.with_vector(z[:n_theta]), z[n_theta:])

    x = np.concatenate([theta.to_vector(), u0])
    assert directional_gradient_check(joint, x, gradient) == 100
    numeric_u = finite_difference_gradient(lambda u: loss_value(theta, u), u0)
    assert _gradients_match(taped[-1], numeric_u)


def test_taped_operator_matches_batched_forward(rng):
    theta = init_mlp([5, 8, 1], seed=2)
    u = rng.standard_normal((3, 16))
    tape = Tape()
    out = apply_operator_taped(tape, taped_params(tape, theta), tape.constant(u), 2)
    assert np.allclose(out.value, mlp_forward_batch(theta, stencil_patches(u, 2)), atol=1e-14)


# Adam
def test_adam_zero_gradient_keeps_parameters():
    params = [np.array([1.0, -2.0]), np.array([[0.5]])]
    state = AdamState.for_params(params)
    updated, _ = adam_step(params, [np.zeros(2), np.zeros((1, 1))], state)
    assert all(np.array_equal(a, b) for a, b in zip(params, updated))


def test_adam_first_step():
    g = np.array([0.3, -4.0, 1e-3])
    state = AdamState.for_params([np.zeros(3)])
    (updated,), state = adam_step([np.zeros(3)], [g], state)
    assert state.step == 1
    assert np.allclose(updated, -1e-3 * g / (np.abs(g) + 1e-8), rtol=1e-10)


def test_adam_constant_gradient_limit_and_scale_invariance():
    def run(g):
        params = [np.zeros(2)]
        state = AdamState.for_params(params)
        previous = params[0]
        for _ in range(1000):
            params, state = adam_step(params, [g], state)
            delta = params[0] - previous
            previous = params[0]
        return delta

    delta = run(np.array([0.2, -3.0]))
    assert np.allclose(np.abs(delta), 1e-3, rtol=0.01)
    scaled = run(np.array([20.0, -300.0]))
    assert np.allclose(delta, scaled, rtol=1e-3)


def test_adam_updates_mlp_params():
    theta = init_mlp([3, 4, 1], seed=0)
    state = AdamState.for_params(theta)
    grads = [np.ones_like(a) for a in theta.arrays()]
    updated, _ = adam_step(theta, grads, state)
    assert isinstance(updated, MlpParams)
    assert np.allclose(updated.layers[0][0], theta.layers[0][0] - 1e-3, atol=1e-10)


# 尖峰函数
def test_spike_function_branches():
    assert spike_function(0.5) == pytest.approx(1.0 / 0.36)
    assert spike_function(0.0) == 0.0
    with pytest.raises(InvalidArgumentError):
        spike_function(0.25)


@pytest.mark.slow
def test_spike_mlp_beats_polynomial():
    result = spike_fit_demo()
    assert result.mlp_error < result.polynomial_error
