import math

import numpy as np
import pytest

from stencilnet.errors import InvalidArgumentError
from stencilnet.grid import Trajectory, crop_time, gather_stencil, make_grid, shift, stencil_patches, subsample


def _trajectory(n_t=9, n_x=16, dt=0.1):
    grid = make_grid(2 * math.pi, n_x)
    data = np.arange(n_t * n_x, dtype=float).reshape(n_t, n_x)
    return Trajectory(grid, dt, data)


def test_make_grid_spacing():
    assert make_grid(2 * math.pi, 256).dx == pytest.approx(0.02454, abs=1e-5)
    assert make_grid(64, 256).dx == 0.25
    assert make_grid(1, 3).dx == 1 / 3


@pytest.mark.parametrize("L, n", [(0.0, 8), (-1.0, 8), (1.0, 2)])
def test_make_grid_rejects_bad_arguments(L, n):
    with pytest.raises(InvalidArgumentError):
        make_grid(L, n)


def test_gather_stencil_wraps_periodically():
    field = np.array([0.0, 1.0, 2.0, 3.0])
    assert gather_stencil(field, 0, 1).tolist() == [3.0, 0.0, 1.0]
    assert gather_stencil(field, 2, 1).tolist() == [1.0, 2.0, 3.0]
    assert gather_stencil(np.full(5, 7.0), 3, 2).tolist() == [7.0] * 5


def test_gather_stencil_too_wide():
    with pytest.raises(InvalidArgumentError):
        gather_stencil(np.zeros(4), 0, 2)


def test_gather_stencil_mirror_and_center(rng):
    field = rng.standard_normal(11)
    n = field.size
    for i in range(n):
        patch = gather_stencil(field, i, 3)
        assert patch[3] == field[i]
        mirrored = gather_stencil(field[::-1], n - 1 - i, 3)
        assert np.array_equal(patch[::-1], mirrored)


def test_stencil_patches_matches_gather(rng):
    field = rng.standard_normal((2, 10))
    patches = stencil_patches(field, 2)
    assert patches.shape == (2, 10, 5)
    for i in range(10):
        assert np.array_equal(patches[1, i], gather_stencil(field[1], i, 2))


def test_subsample_keeps_even_indices():
    grid = make_grid(4.0, 4)
    traj = Trajectory(grid, 1.0, np.array([[1.0, 2.0, 3.0, 4.0]]))
    coarse = subsample(traj, 2)
    assert coarse.data.tolist() == [[1.0, 3.0]]
    assert coarse.grid.dx == 2 * grid.dx


def test_subsample_identity_and_composition():
    traj = _trajectory(n_t=9, n_x=16)
    same = subsample(traj, 1, 1)
    assert np.array_equal(same.data, traj.data)
    two_step = subsample(subsample(traj, 2, 2), 2, 2)
    one_step = subsample(traj, 4, 4)
    assert np.array_equal(two_step.data, one_step.data)
    assert two_step.dt == pytest.approx(one_step.dt)


def test_subsample_records_time_truncation():
    traj = _trajectory(n_t=10, n_x=16)
    coarse = subsample(traj, 4, 4)
    assert coarse.n_steps == 3
    assert coarse.meta["truncated_rows"] == 1


def test_subsample_rejects_non_divisor():
    with pytest.raises(InvalidArgumentError):
        subsample(_trajectory(n_x=16), 3)


def test_trajectory_is_read_only_and_finite():
    traj = _trajectory()
    with pytest.raises(ValueError):
        traj.data[0, 0] = 1.0
    with pytest.raises(InvalidArgumentError):
        Trajectory(traj.grid, 0.1, np.full((2, 16), np.nan))


def test_crop_time_keeps_window():
    traj = _trajectory(n_t=9, dt=0.5)
    cropped = crop_time(traj, 2.0)
    assert cropped.n_steps == 5
    assert cropped.meta["crop_window"] == (0.0, 2.0)


def test_shift_is_periodic_roll():
    field = np.arange(5.0)
    assert shift(field, 1).tolist() == [4.0, 0.0, 1.0, 2.0, 3.0]
