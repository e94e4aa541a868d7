import math

import numpy as np
import pytest

from stencilnet.datagen import (
    KnownForcing,
    add_noise,
    advection_ic,
    burgers_ic,
    FORCING_STREAM,
    IC_STREAM,
    NOISE_STREAM,
    coarse_time_factor,
    eval_forcing,
    forcing_wavenumbers,
    hyperdiffusive_time_factor,
    ks_ic,
    load_dataset,
    make_dataset,
    make_rng,
    make_variants,
    resolve_time_factor,
    sample_forcing,
    save_dataset,
    scaled_grid,
)
from stencilnet.errors import InvalidArgumentError
from stencilnet.grid import Trajectory, make_grid
from stencilnet.schemas import ForcingParams, NoiseSpec, Recipe


def _short_heat(**overrides):
    return Recipe.from_name("heat", T=0.5, T_train=0.5, **overrides)


def test_forcing_wavenumbers():
    assert forcing_wavenumbers(2 * math.pi) == [2, 3, 4, 5]
    assert forcing_wavenumbers(4 * math.pi) == list(range(4, 21))
    with pytest.raises(InvalidArgumentError):
        forcing_wavenumbers(1.0)


def test_sample_forcing_is_deterministic_and_bounded():
    a = sample_forcing(42, 2 * math.pi)
    b = sample_forcing(42, 2 * math.pi)
    assert a == b
    assert a.n_modes == 20
    assert all(abs(x) <= 0.1 for x in a.amplitudes)
    assert all(abs(w) <= 0.4 for w in a.frequencies)
    assert all(0 <= p <= 2 * math.pi for p in a.phases)
    assert set(a.wavenumbers) <= {2, 3, 4, 5}
    assert sample_forcing(43, 2 * math.pi) != a
    assert sample_forcing(1, 4 * math.pi).n_modes == 17
    with pytest.raises(InvalidArgumentError):
        sample_forcing(1, 2 * math.pi, wavenumbers=[])


def test_known_forcing_rows(grid64):
    params = sample_forcing(5, grid64.length)
    forcing = KnownForcing(params, grid64)
    rows = forcing(np.array([0.0, 0.5]))
    assert rows.shape == (2, 64)
    assert np.allclose(rows[1], params.evaluate(grid64.points(), 0.5))


def test_initial_conditions(grid64):
    u = ks_ic(3, grid64)
    assert np.array_equal(u, ks_ic(3, grid64))
    assert not np.array_equal(u, ks_ic(4, grid64))
    assert abs(u.mean()) < 1e-12

    pulse = advection_ic(make_grid(6.0, 200))
    assert pulse.sum() == 33
    assert set(np.unique(pulse)) == {0.0, 1.0}


def test_add_noise(rng):
    clean = Trajectory(make_grid(1.0, 64), 0.1, rng.standard_normal((40, 64)))
    noisy, noise = add_noise(clean, NoiseSpec(sigma=0.3, seed=9))
    assert np.array_equal(noisy.data - clean.data, noise)
    assert np.std(noise) / np.std(clean.data) == pytest.approx(0.3, rel=0.05)
    again, _ = add_noise(clean, NoiseSpec(sigma=0.3, seed=9))
    assert np.array_equal(again.data, noisy.data)

    same, zero = add_noise(clean, NoiseSpec(sigma=0.0))
    assert np.array_equal(same.data, clean.data)
    assert not zero.any()


def test_coarse_time_factor():
    assert coarse_time_factor(0.01, 0.1, 0.1) == 10
    assert coarse_time_factor(0.5, 0.1, 0.1) == 1
    with pytest.raises(InvalidArgumentError):
        coarse_time_factor(0.01, 0.1, 0.0)


def test_resolve_time_factor_precedence():
    base = dict(name="custom", kind="heat", L=1.0, n_points=32, D=0.1, scheme="weno_rk3", T=1.0, T_train=1.0)
    assert resolve_time_factor(Recipe(**base, C_time=3, train_dt=0.05), 0.01, 1, 0.1) == 3
    assert resolve_time_factor(Recipe(**base, train_dt=0.05), 0.01, 1, 0.1, C_time=7) == 7
    assert resolve_time_factor(Recipe(**base, train_dt=0.05), 0.01, 1, 0.1) == 5
    with pytest.raises(InvalidArgumentError, match="integer multiple"):
        resolve_time_factor(Recipe(**base, train_dt=0.055), 0.01, 1, 0.1)
    assert resolve_time_factor(Recipe(**base), 0.01, 2, 0.05) == 10
    assert resolve_time_factor(Recipe(**dict(base, D=0.0)), 0.01, 1, 0.1) == 1


def test_ks_coarse_step_follows_hyperdiffusive_bound():
    assert hyperdiffusive_time_factor(0.05, 1.0) == 2
    assert hyperdiffusive_time_factor(0.05, 0.5) == 1
    assert hyperdiffusive_time_factor(0.01, 1.0, kappa=0.5) == 25
    with pytest.raises(InvalidArgumentError):
        hyperdiffusive_time_factor(0.05, 1.0, kappa=0.0)

    recipe = Recipe.from_name("ks")
    dx = recipe.L / recipe.n_points
    factor = resolve_time_factor(recipe, recipe.dt, recipe.C_space, dx)
    assert factor == 2
    assert factor * recipe.dt == pytest.approx(0.1)
    assert resolve_time_factor(recipe, recipe.dt, 8, dx) == 40
    assert resolve_time_factor(Recipe.from_name("ks", train_dt=0.05), recipe.dt, recipe.C_space, dx) == 1


def test_scaled_grid_keeps_spacing():
    recipe = Recipe.from_name("burgers", domain_scale=4)
    grid = scaled_grid(recipe)
    assert grid.n_points == 4 * recipe.n_points
    assert grid.dx == pytest.approx(recipe.L / recipe.n_points)


def test_make_dataset_is_deterministic():
    first = make_dataset(_short_heat(), seed=7)
    second = make_dataset(_short_heat(), seed=7)
    assert np.array_equal(first.coarse.data, second.coarse.data)
    assert first.coarse.shape[1] == 64
    assert first.metadata.kind.value == "heat"
    assert first.metadata.coefficients == {"D": 0.1}
    assert first.clean is None and first.noise is None


def test_coarse_variants_subsample_one_fine_solution():
    c1, c2 = make_variants(_short_heat(), seed=7, factors=[1, 2])
    assert c2.coarse.grid.n_points == 32
    assert c2.coarse.grid.dx == pytest.approx(2 * c1.coarse.grid.dx)
    assert np.array_equal(c1.fine.data, c2.fine.data)
    step = c2.metadata.C_time
    assert np.array_equal(c2.coarse.data[1], c2.fine.data[step, ::2])


def test_dataset_round_trip(tmp_path):
    dataset = make_dataset(_short_heat(), seed=7, sigma=0.1)
    meta_path = save_dataset(dataset, tmp_path)
    assert meta_path == tmp_path / "heat_C1.json"
    loaded = load_dataset(meta_path)
    assert np.array_equal(loaded.coarse.data, dataset.coarse.data)
    assert np.array_equal(loaded.clean.data, dataset.clean.data)
    assert np.array_equal(loaded.noise, dataset.noise)
    assert np.array_equal(loaded.fine.data, dataset.fine.data)
    assert loaded.metadata.sigma == 0.1
    assert set(loaded.metadata.files) == {"fine", "coarse", "clean", "noise"}
    assert load_dataset(tmp_path / "heat_C1.stn1").metadata == loaded.metadata


def test_forcing_examples():
    assert forcing_wavenumbers(8 * math.pi) == list(range(8, 41))
    grid = make_grid(2 * math.pi, 32)
    single = ForcingParams(amplitudes=[1.0], frequencies=[0.0], wavenumbers=[1], phases=[0.0], L=2 * math.pi)
    assert np.allclose(eval_forcing(single, grid.points(), 0.3), np.sin(grid.points()), atol=1e-14)

    params = sample_forcing(11, 2 * math.pi)
    x = grid.points()
    values = eval_forcing(params, x, 1.7)
    assert np.allclose(values, eval_forcing(params, x + 2 * math.pi, 1.7), atol=1e-12)
    assert np.max(np.abs(values)) <= sum(abs(a) for a in params.amplitudes)


def test_burgers_and_ks_initial_conditions(grid64):
    grid = make_grid(10.0, 10)
    u = burgers_ic(grid)
    assert u[3] == 1.0
    assert u[1] == pytest.approx(math.exp(-4.0))
    assert u[5] == pytest.approx(u[1])
    assert np.max(np.abs(ks_ic(8, make_grid(64.0, 256, -32.0)))) <= 1.5


def test_seed_streams_are_disjoint_across_adjacent_seeds():
    # 7 + 2 == 9 + 0: plain seed offsets would make these the same sequence
    noise_7 = make_rng(7, NOISE_STREAM).standard_normal(64)
    forcing_9 = make_rng(9, FORCING_STREAM).standard_normal(64)
    assert not np.allclose(noise_7, forcing_9)

    heads = {
        tuple(make_rng(seed, stream).integers(0, 2**62, 4))
        for seed in range(10)
        for stream in (FORCING_STREAM, IC_STREAM, NOISE_STREAM)
    }
    assert len(heads) == 30
    assert np.array_equal(make_rng(7, NOISE_STREAM).standard_normal(8), noise_7[:8])
    with pytest.raises(InvalidArgumentError):
        make_rng(7, -1)


def test_dataset_draws_come_from_their_own_streams(grid64):
    params = sample_forcing(9, 2 * math.pi)
    assert params.amplitudes == pytest.approx(make_rng(9, FORCING_STREAM).uniform(-0.1, 0.1, 20).tolist())

    rng = make_rng(9, IC_STREAM)
    amplitudes = rng.uniform(-0.5, 0.5, 3)
    phases = rng.uniform(0.0, 2 * math.pi, 3)
    x = grid64.points()
    expected = sum(A * np.sin(2 * math.pi * l * x / grid64.length + phi)
                   for A, l, phi in zip(amplitudes, (1, 2, 3), phases))
    assert np.allclose(ks_ic(9, grid64), expected, atol=1e-14)

    clean = Trajectory(grid64, 0.1, np.outer(np.ones(4), np.sin(grid64.points())))
    _, noise = add_noise(clean, NoiseSpec(sigma=0.3, seed=7))
    scale = 0.3 * float(np.std(clean.data))
    assert np.allclose(noise, scale * make_rng(7, NOISE_STREAM).standard_normal(clean.shape), atol=1e-12)
