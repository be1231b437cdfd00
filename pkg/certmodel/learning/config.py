"""
学习配置与学习结果
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import ConfigError
from certmodel.models.extended import StabilityCertificate, UncertaintyModel
from certmodel.sdp.problem import DEFAULT_STRICT_EPS, DEFAULT_TOL

MODEL_CLASSES = ('local', 'global')
METHODS = ('cost-mod', 'constraint-mod', 'scp', 'unconstrained')

# 对数网格缺省值
DEFAULT_GRIDS: Dict[str, Tuple[float, ...]] = {
    'l_hx_bar': tuple(np.logspace(-2, 2, 5)),
    'beta': tuple(np.logspace(-3, 1, 5)),
    'mu1': tuple(np.logspace(-2, 2, 5)),
    'mu2': tuple(np.logspace(-2, 2, 5)),
    'mu3': tuple(np.logspace(-2, 2, 5)),
    'gamma_bar': tuple(np.logspace(-1, 2, 4)),
}

# 每种 (方法, 模型类) 需要扫描的标量：稳定性相关的外层 + 其余内层
GRID_LAYOUT: Dict[Tuple[str, str], Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    ('cost-mod', 'local'): (('l_hx_bar', 'beta'), ('mu1', 'mu2')),
    ('cost-mod', 'global'): (('l_hx_bar',), ('mu1', 'mu2')),
    ('constraint-mod', 'local'): (('l_hx_bar', 'beta', 'gamma_bar'), ('mu3',)),
    ('constraint-mod', 'global'): (('l_hx_bar', 'gamma_bar'), ()),
}


@dataclass(frozen=True)
class LipschitzBundle:
    """(l_gx, l_gu, l_hx, l_hu)"""
    gx: float = 0.0
    gu: float = 0.0
    hx: float = 0.0
    hu: float = 0.0

    @property
    def has_h(self) -> bool:
        return self.hx > 0.0

    def bar_hu(self, l_hx_bar: float) -> float:
        """l̄_hu = l̄_hx · l_hu / l_hx"""
        if self.hx <= 0.0:
            return 0.0
        return l_hx_bar * self.hu / self.hx

    def effective_bar(self, l_hx_bar: float, n_h: int) -> float:
        """n_h = 0 或 l_hx = 0 时 Θ_n h 不贡献 Lipschitz 项"""
        if n_h == 0 or not self.has_h:
            return 0.0
        return float(l_hx_bar)

    def to_dict(self) -> Dict[str, float]:
        return {'l_gx': self.gx, 'l_gu': self.gu, 'l_hx': self.hx, 'l_hu': self.hu}


@dataclass
class LearnConfig:
    """
    学习配置

    Attributes:
        model_class: 'local'（不变集）或 'global'（ISS）
        method: 'cost-mod' | 'constraint-mod' | 'scp' | 'unconstrained'
        hyper: 固定的标量（给定后不再扫描该标量）
        grids: 各标量的扫描网格（缺省为 DEFAULT_GRIDS）
        f_set: 状态集合 E_sys（local 必需）
        u_set: 输入集合 E_u（local 必需）
        strict_eps: 严格 LMI 裕量 ε
        sdp_tol: 残差容差
        scp_rtol: SCP 收敛相对容差
        scp_max_iters: SCP 最大迭代数
        scp_init: SCP 初始化方法（'cost-mod' | 'constraint-mod' | 'unconstrained' | 'zero'）
        lipschitz_radius: 基函数 Lipschitz 估计半径（缺省由 E_sys 推出）
        workers: 网格扫描并发数
        solvers: 求解器优先级
    """
    model_class: str = 'local'
    method: str = 'cost-mod'
    hyper: Dict[str, float] = field(default_factory=dict)
    grids: Dict[str, Sequence[float]] = field(default_factory=dict)
    f_set: Optional[Ellipsoid] = None
    u_set: Optional[Ellipsoid] = None
    strict_eps: float = DEFAULT_STRICT_EPS
    sdp_tol: float = DEFAULT_TOL
    scp_rtol: float = 1e-6
    scp_max_iters: int = 20
    scp_init: str = 'cost-mod'
    lipschitz_radius: Optional[float] = None
    workers: int = 1
    solvers: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        self.validate()

    @property
    def label(self) -> str:
        if self.method == 'scp':
            return f"scp({self.scp_init})"
        return self.method

    def validate(self) -> None:
        """
        检查方法 / 模型类组合所需的字段

        Raises:
            ConfigError: 字段缺失或取值无效
        """
        if self.model_class not in MODEL_CLASSES:
            raise ConfigError(f"learn.class: 未知模型类 '{self.model_class}'")
        if self.method not in METHODS:
            raise ConfigError(f"learn.method: 未知方法 '{self.method}'")
        if self.method == 'scp' and self.scp_init not in ('cost-mod', 'constraint-mod', 'unconstrained', 'zero'):
            raise ConfigError(f"learn.scp_init: 未知初始化 '{self.scp_init}'")
        if self.method != 'unconstrained' and self.model_class == 'local':
            if self.f_set is None or self.u_set is None:
                raise ConfigError("learn: local 模型类需要 F 与 U 椭球")
        for name, value in self.hyper.items():
            if name not in DEFAULT_GRIDS:
                raise ConfigError(f"learn.hyper.{name}: 未知标量")
            if not value > 0:
                raise ConfigError(f"learn.hyper.{name}: 必须为正 ({value})")
        for name, grid in self.grids.items():
            if name not in DEFAULT_GRIDS:
                raise ConfigError(f"learn.grids.{name}: 未知标量")
            if len(grid) == 0 or any(not v > 0 for v in grid):
                raise ConfigError(f"learn.grids.{name}: 网格必须非空且全部为正")
        if self.strict_eps <= 0 or self.sdp_tol <= 0:
            raise ConfigError("tolerances: strict_eps 与 sdp_tol 必须为正")
        if self.scp_max_iters < 1:
            raise ConfigError(f"learn.scp_max_iters: 必须 ≥ 1 ({self.scp_max_iters})")
        if self.workers < 1:
            raise ConfigError(f"workers: 必须 ≥ 1 ({self.workers})")

    def grid(self, name: str) -> List[float]:
        """固定值优先，其次是配置网格，最后是缺省网格"""
        if name in self.hyper:
            return [float(self.hyper[name])]
        return [float(v) for v in self.grids.get(name, DEFAULT_GRIDS[name])]

    def first(self, name: str) -> float:
        return self.grid(name)[0]

    def replace(self, **kwargs) -> 'LearnConfig':
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(kwargs)
        return LearnConfig(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'class': self.model_class,
            'method': self.method,
            'hyper': dict(self.hyper),
            'grids': {k: list(v) for k, v in self.grids.items()},
            'F': self.f_set.to_dict() if self.f_set is not None else None,
            'U': self.u_set.to_dict() if self.u_set is not None else None,
            'strict_eps': self.strict_eps,
            'sdp_tol': self.sdp_tol,
            'scp_rtol': self.scp_rtol,
            'scp_max_iters': self.scp_max_iters,
            'scp_init': self.scp_init,
            'lipschitz_radius': self.lipschitz_radius,
            'workers': self.workers,
        }


def grid_points(names: Sequence[str], cfg: LearnConfig,
                overrides: Optional[Dict[str, List[float]]] = None) -> List[Dict[str, float]]:
    """按给定顺序展开笛卡尔积"""
    overrides = overrides or {}
    axes = [overrides.get(name, cfg.grid(name)) for name in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*axes)]


@dataclass(frozen=True, eq=False)
class LearnResult:
    """
    学习结果

    Attributes:
        model: 不确定性模型 θ*
        method: 学习方法标签
        model_class: 'local' | 'global' | None（无约束）
        certificate: 稳定性证书（无约束学习为 None）
        cost_bound: tr(W*)
        realized_cost: J(θ*)，残差所在的标签空间见 cost_labels
        hyper: 选中的标量
        diagnostics: 求解诊断（网格表、残差、SCP 轨迹）
    """
    model: UncertaintyModel
    method: str
    model_class: Optional[str]
    certificate: Optional[StabilityCertificate]
    cost_bound: Optional[float]
    realized_cost: float
    hyper: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.certificate is not None

    @property
    def cost_labels(self) -> str:
        """'lifted'：J 在 S_η η̂ 上计算（S_ηl = I）；'raw'：在 η̂ 上计算。两者的 J 不可直接比较"""
        return 'lifted' if self.model.lifted else 'raw'

    def bound_holds(self, rtol: float = 1e-6) -> bool:
        """J(θ*) ≤ tr(W*) + rtol·(1 + tr(W*))"""
        if self.cost_bound is None:
            return True
        return self.realized_cost <= self.cost_bound + rtol * (1.0 + self.cost_bound)

    def summary(self) -> Dict[str, Any]:
        return {
            'method': self.method,
            'class': self.model_class,
            'certificate': self.certificate.kind if self.certificate else None,
            'cost_bound': self.cost_bound,
            'realized_cost': self.realized_cost,
            'cost_labels': self.cost_labels,
            'hyper': dict(self.hyper),
        }
