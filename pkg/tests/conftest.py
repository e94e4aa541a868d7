import math

import numpy as np
import pytest

from stencilnet.grid import make_grid
from stencilnet.solvers import fd_weights
from stencilnet.neural import finite_difference_directional, linear_stencil_params, relative_error

GRADIENT_DIRECTIONS = 100


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行长时间的复现测试")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def grid64():
    return make_grid(2 * math.pi, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def heat_stencil_params(grid64):
    """热方程 D·u_xx 的线性模板网络（m=1）"""
    D = 0.1
    weights = D * np.asarray(fd_weights(2, 2, (-1, 0, 1)).weights) / grid64.dx**2
    return linear_stencil_params(weights), D


@pytest.fixture
def directional_gradient_check():
    """沿 GRADIENT_DIRECTIONS 个随机单位方向比较解析方向导数与中心差分，方向来自同一个种子生成器"""

    def check(f, x, gradient, rel=1e-4, abs_floor=1e-8, seed=20210501):
        x = np.asarray(x, dtype=np.float64)
        gradient = np.asarray(gradient, dtype=np.float64).reshape(-1)
        assert gradient.size == x.size
        directions = np.random.default_rng(seed)
        failures = []
        for j in range(GRADIENT_DIRECTIONS):
            d = directions.standard_normal(x.size)
            d /= np.linalg.norm(d)
            numeric = finite_difference_directional(f, x, d.reshape(x.shape))
            analytic = float(gradient @ d)
            if not (relative_error(analytic, numeric) < rel or abs(analytic - numeric) < abs_floor):
                failures.append((j, analytic, numeric))
        assert not failures, f"{len(failures)}/{GRADIENT_DIRECTIONS} directions disagree, first: {failures[:3]}"
        return GRADIENT_DIRECTIONS

    return check
