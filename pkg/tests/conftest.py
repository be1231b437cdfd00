# Pytest fixtures 和共享配置
import tempfile
from pathlib import Path

import numpy as np
import pytest

from certmodel.benchmark.roll_plane import build_roll_plane
from certmodel.learning.dataset import LabeledDataset
from certmodel.models.basis import BasisLibrary
from certmodel.models.system import SystemModel


@pytest.fixture
def temp_dir():
    """创建临时目录"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(0)


def make_scalar_system(a: float = -1.0, l: int = 1) -> SystemModel:
    """ẋ = a x + u + η(x)，y = x，S_η = V_η = 1"""
    return SystemModel.create(
        a=[[a]],
        b_u=np.ones((1, l)),
        c=[[1.0]],
        s_eta=[[1.0]],
        v_eta=[[1.0]],
        name=f"scalar({a:g})",
    )


def make_scalar_dataset(gain: float, count: int = 200, seed: int = 0, l: int = 1) -> LabeledDataset:
    """η̂ = gain · x̂，x̂ 均匀分布在 [−1, 1]，输入很小且与标签无关"""
    gen = np.random.default_rng(seed)
    states = gen.uniform(-1.0, 1.0, size=(count, 1))
    inputs = 0.01 * gen.uniform(-1.0, 1.0, size=(count, l))
    return LabeledDataset(
        inputs=inputs,
        states=states,
        labels=gain * states,
        basis=BasisLibrary.empty(1),
        v_eta=np.array([[1.0]]),
    )


@pytest.fixture(scope='session')
def scalar_system():
    """标量系统工厂"""
    return make_scalar_system


@pytest.fixture(scope='session')
def scalar_dataset():
    """标量数据集工厂"""
    return make_scalar_dataset


@pytest.fixture(scope='session')
def roll_plane():
    """缺省参数的侧倾平面模型"""
    return build_roll_plane()
