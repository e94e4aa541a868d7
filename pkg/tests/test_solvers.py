import math
from fractions import Fraction

import numpy as np
import pytest

from stencilnet.errors import BlowUpError, InvalidArgumentError, NumericalError
from stencilnet.grid import make_grid
from stencilnet.schemas import PdeProblem, ProblemKind
from stencilnet.solvers import (
    EtdRk4Stepper,
    centered_offsets,
    cfl_dt,
    fd_weights,
    heat_rhs,
    rk3_tvd_step,
    simulate,
    smoothness_indicator_quadrature,
    spectral_linear_symbol,
    spectral_nonlinear,
    spectral_rhs,
    spectral_step_etdrk4,
    weno5_reconstruct,
    weno5_workspace,
    weno_flux_derivative,
    weno_rhs_burgers,
)
from stencilnet.datagen import advection_ic


def _as_fractions(weights):
    return [Fraction(w).limit_denominator(1000) for w in weights]


# 有限差分模板
def test_fd_weights_classical_values():
    assert _as_fractions(fd_weights(1, 2, (-1, 0, 1)).weights) == [Fraction(-1, 2), 0, Fraction(1, 2)]
    assert _as_fractions(fd_weights(2, 2, (-1, 0, 1)).weights) == [1, -2, 1]
    assert fd_weights(0, 1, (0,)).weights == (1.0,)


@pytest.mark.parametrize("l", [0, 1, 2, 3])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_fd_weights_moment_conditions(l, r):
    stencil = fd_weights(l, r, centered_offsets(l, r))
    assert stencil.moment_residuals().max() < 1e-10


def test_fd_weights_repeated_offsets():
    with pytest.raises(NumericalError):
        fd_weights(1, 2, (-1, 0, 0))


def test_fd_weights_too_few_offsets():
    with pytest.raises(InvalidArgumentError):
        fd_weights(2, 2, (0, 1))
    # 个数够，但对称三点模板达不到三阶
    with pytest.raises(InvalidArgumentError):
        fd_weights(1, 3, (-1, 0, 1))


def test_fd_stencil_apply_approximates_derivative(grid64):
    x = grid64.points()
    approx = fd_weights(1, 2, (-1, 0, 1)).apply(np.sin(x), grid64.dx)
    assert np.max(np.abs(approx - np.cos(x))) < 5e-3


# WENO
def test_weno_constant_and_linear_reproduction():
    assert weno5_reconstruct([2.5] * 5) == pytest.approx(2.5, abs=1e-14)
    a, b = 0.3, -1.7
    line = a + b * np.arange(-2, 3)
    assert abs(weno5_reconstruct(line) - (a + 0.5 * b)) < 1e-12


def test_weno_reproduces_quadratic_cell_averages():
    # p(x) = 1 + 2x + 3x² 的单元平均
    j = np.arange(-2, 3)
    averages = 1 + 2 * j + 3 * (j**2 + 1.0 / 12.0)
    assert abs(weno5_reconstruct(averages) - 2.75) < 1e-12


def test_weno_weights_form_partition_of_unity(rng):
    ws = weno5_workspace(rng.standard_normal((200, 5)) * 10.0)
    assert np.all(ws.weights >= 0)
    assert np.allclose(ws.weights.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(ws.indicators >= 0)


def test_weno_smooth_weights_approach_optimal():
    x = 0.01 * np.arange(-2, 3)
    ws = weno5_workspace(np.exp(x))
    assert np.allclose(ws.weights, ws.optimal, atol=1e-3)


def test_weno_rejects_non_finite():
    with pytest.raises(NumericalError):
        weno5_reconstruct([0.0, 1.0, np.nan, 1.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        weno5_reconstruct([0.0, 1.0, 2.0])


def test_weno_convergence_order():
    errors, steps = [], []
    for n in (64, 128, 256, 512):
        grid = make_grid(2 * math.pi, n)
        x = grid.points()
        deriv = weno_flux_derivative(np.sin(x), np.zeros(n), grid.dx)
        errors.append(np.max(np.abs(deriv - np.cos(x))))
        steps.append(grid.dx)
    order = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert order >= 4.5


def test_smoothness_indicators_match_quadrature(rng):
    for _ in range(20):
        f = rng.standard_normal(5)
        closed = weno5_workspace(f).indicators
        assert np.allclose(closed, smoothness_indicator_quadrature(f), rtol=1e-9, atol=1e-12)


def test_weno_rhs_burgers_trivial_fields():
    dx = 2 * math.pi / 32
    assert np.array_equal(weno_rhs_burgers(np.zeros(32), 0.02, np.zeros(32), dx), np.zeros(32))
    assert np.allclose(weno_rhs_burgers(np.full(32, 1.5), 0.02, None, dx), 0.0, atol=1e-12)


def test_weno_rhs_burgers_matches_spectral_derivative():
    grid = make_grid(2 * math.pi, 256)
    x = grid.points()
    # −∂x(sin²x) = −sin(2x)
    rhs = weno_rhs_burgers(np.sin(x), 0.0, None, grid.dx)
    assert np.max(np.abs(rhs + np.sin(2 * x))) < 1e-3


def test_weno_rhs_burgers_reuses_viscous_stencil(monkeypatch, rng):
    import stencilnet.solvers.weno as weno_module

    def no_rebuild(*args, **kwargs):
        raise AssertionError("viscous stencil rebuilt on a right-hand-side call")

    monkeypatch.setattr(weno_module, "fd_weights", no_rebuild)
    grid = make_grid(2 * math.pi, 64)
    u = np.sin(grid.points()) + 0.1 * rng.standard_normal(64)
    forcing = 0.05 * rng.standard_normal(64)
    with_viscosity = weno_rhs_burgers(u, 0.02, forcing, grid.dx)
    expected = weno_rhs_burgers(u, 0.0, None, grid.dx) + heat_rhs(u, 0.02, grid.dx) + forcing
    assert np.allclose(with_viscosity, expected, rtol=1e-12, atol=1e-12)
    assert np.allclose(weno_module._SECOND_DERIVATIVE.weights, [1.0, -2.0, 1.0], atol=1e-12)


# 时间推进
def test_rk3_trivial_right_hand_sides():
    u = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(rk3_tvd_step(u, lambda v, t: 0.0 * v, 0.1), u)
    stepped = rk3_tvd_step(u, lambda v, t: np.full_like(v, 1.5), 0.1)
    assert np.allclose(stepped, u + 0.15, atol=1e-15)


def test_rk3_exponential_decay():
    u = rk3_tvd_step(np.array([1.0]), lambda v, t: -v, 0.1)
    assert abs(u[0] - math.exp(-0.1)) < 2e-5


def test_rk3_order():
    errors = []
    dts = [0.1, 0.05, 0.025]
    for dt in dts:
        u = np.array([1.0])
        for _ in range(int(round(1.0 / dt))):
            u = rk3_tvd_step(u, lambda v, t: -v, dt)
        errors.append(abs(u[0] - math.exp(-1.0)))
    order = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    assert order >= 2.9


def test_rk3_negative_dt_reverses():
    u0 = np.array([0.5, 1.0])
    forward = rk3_tvd_step(u0, lambda v, t: -v, 0.01)
    back = rk3_tvd_step(forward, lambda v, t: -v, -0.01)
    assert np.allclose(back, u0, atol=1e-8)


def test_rk3_rejects_zero_dt_and_nan_stage():
    with pytest.raises(InvalidArgumentError):
        rk3_tvd_step(np.ones(3), lambda v, t: v, 0.0)
    with pytest.raises(NumericalError, match="stage 1"):
        rk3_tvd_step(np.ones(3), lambda v, t: np.full_like(v, np.nan), 0.1)


def test_cfl_dt_examples():
    assert cfl_dt(0.1, 0.02, 0.0, 1.0) == pytest.approx(0.25)
    assert cfl_dt(0.1, 0.0, 2.0, 1.0) == pytest.approx(0.05)
    assert cfl_dt(0.1, 0.02, 2.0, 0.5) == pytest.approx(0.025)
    with pytest.raises(InvalidArgumentError):
        cfl_dt(0.1, 0.0, 0.0, 1.0)


# 谱方法
def test_etdrk4_linear_decay_is_exact():
    lam = np.array([0.5, 1.0, 3.0])
    v = np.array([1.0 + 0.5j, -2.0, 0.25j])
    out = spectral_step_etdrk4(v, -lam, lambda w: np.zeros_like(w), 0.1)
    assert np.allclose(out, v * np.exp(-lam * 0.1), atol=1e-10, rtol=0)


def test_etdrk4_identity_for_zero_dynamics():
    v = np.array([1.0, 2.0 - 1.0j, 0.5j])
    out = spectral_step_etdrk4(v, np.zeros(3), lambda w: np.zeros_like(w), 0.05)
    assert np.allclose(out, v, atol=1e-14)


def test_etdrk4_ks_step_matches_fine_rk3():
    grid = make_grid(64.0, 64, -32.0)
    problem = PdeProblem(kind=ProblemKind.KS)
    u0 = np.cos(2 * np.pi * grid.points() / grid.length)
    dt = 0.05
    stepper = EtdRk4Stepper(spectral_linear_symbol(problem, grid), spectral_nonlinear(problem, grid), dt)
    spectral = np.fft.irfft(stepper.step(np.fft.rfft(u0)), n=grid.n_points)

    rhs = spectral_rhs(problem, grid)
    u = u0.copy()
    for _ in range(1000):
        u = rk3_tvd_step(u, rhs, dt / 1000)
    assert np.linalg.norm(spectral - u) / np.linalg.norm(u) < 1e-6


def test_etdrk4_ks_preserves_mean(rng):
    grid = make_grid(64.0, 128, -32.0)
    problem = PdeProblem(kind=ProblemKind.KS)
    stepper = EtdRk4Stepper(spectral_linear_symbol(problem, grid), spectral_nonlinear(problem, grid), 0.05)
    v = np.fft.rfft(0.1 * rng.standard_normal(grid.n_points) + 0.3)
    for _ in range(10):
        v_next = stepper.step(v)
        assert abs(v_next[0] - v[0]) / grid.n_points < 1e-10
        v = v_next


def test_etdrk4_accepts_batches(rng):
    grid = make_grid(64.0, 64, -32.0)
    problem = PdeProblem(kind=ProblemKind.KS)
    stepper = EtdRk4Stepper(spectral_linear_symbol(problem, grid), spectral_nonlinear(problem, grid), 0.05)
    batch = np.fft.rfft(rng.standard_normal((3, 64)), axis=-1)
    out = stepper.step(batch)
    assert np.allclose(out[1], stepper.step(batch[1]))


# 模拟
def test_simulate_advection_is_essentially_non_oscillatory():
    grid = make_grid(6.0, 200)
    problem = PdeProblem(kind=ProblemKind.ADVECTION, c=2.0)
    u0 = advection_ic(grid)
    traj = simulate(problem, grid, u0, 3.0, "weno_rk3", dt=0.0125)
    final = traj.data[-1]
    tv0 = np.sum(np.abs(np.diff(np.append(u0, u0[0]))))
    tv1 = np.sum(np.abs(np.diff(np.append(final, final[0]))))
    assert tv1 <= 1.01 * tv0
    assert final.max() < 1.02
    assert final.min() > -0.02
    # 一个周期后回到原位
    assert np.sum(np.abs(final - u0)) * grid.dx < 0.5


def test_simulate_burgers_dissipates_energy():
    grid = make_grid(2 * math.pi, 128)
    problem = PdeProblem(kind=ProblemKind.FORCED_BURGERS, D=0.02)
    traj = simulate(problem, grid, np.sin(grid.points()), 2.0)
    energy = np.sum(traj.data**2, axis=1) * grid.dx
    assert np.all(np.diff(energy) <= 1e-8 * energy[0])
    assert traj.times()[-1] >= 2.0 - 1e-12


def test_simulate_kdv_conserves_mass():
    grid = make_grid(2.0, 256, -1.0)
    problem = PdeProblem(kind=ProblemKind.KDV, delta=0.0025)
    traj = simulate(problem, grid, np.cos(np.pi * grid.points()), 1.0)
    assert traj.dt == pytest.approx(5e-4)
    mass = traj.data.sum(axis=1) * grid.dx
    assert np.max(np.abs(mass - mass[0])) < 1e-6


def test_simulate_reports_blow_up(rng):
    grid = make_grid(2 * math.pi, 64)
    problem = PdeProblem(kind=ProblemKind.HEAT, D=1.0)
    with pytest.raises(BlowUpError) as info:
        simulate(problem, grid, rng.standard_normal(64), 10.0, "weno_rk3", dt=0.1)
    assert info.value.time is not None and info.value.time > 0


def test_simulate_rejects_bad_input(grid64):
    problem = PdeProblem(kind=ProblemKind.HEAT, D=0.1)
    with pytest.raises(InvalidArgumentError):
        simulate(problem, grid64, np.zeros(10), 1.0)
    with pytest.raises(InvalidArgumentError):
        simulate(problem, grid64, np.zeros(64), 0.0)
