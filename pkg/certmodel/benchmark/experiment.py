"""
侧倾平面基准实验
训练集：真实系统仿真 → 估计器 → 带标签数据集 → 各学习方法
测试集：真实系统与各扩展模型在同一输入下的输出误差 Σ_t ‖y_sys − y_model‖
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from certmodel.benchmark.histogram import Histogram, histogram_table
from certmodel.benchmark.roll_plane import RollPlaneParams, build_roll_plane
from certmodel.ellipsoids.ellipsoid import Ellipsoid, regularize
from certmodel.ellipsoids.fitting import DEFAULT_INFLATION, FIT_METHODS, fit_bounding
from certmodel.errors import CertModelError, ConfigError
from certmodel.estimator import (
    EstimatorConfig, EstimatorFilter, augment, design_filter, estimation_error,
    make_labeled_dataset, run_filter,
)
from certmodel.learning import LabeledDataset, LearnConfig, LearnResult, learn
from certmodel.models.basis import BASIS_CHOICES, BasisLibrary
from certmodel.models.extended import ExtendedModel, eval_extended_rhs
from certmodel.models.system import SystemModel, eval_system_rhs
from certmodel.simulation.integrator import DEFAULT_DT, Trajectory, integrate, integrate_batch
from certmodel.simulation.metrics import output_error
from certmodel.simulation.signals import Multisine, MultisineBank, MultisineSpec, band_limited_noise, generate_multisine
from certmodel.utils.seeding import substream

logger = logging.getLogger(__name__)

PRIOR_ONLY = 'prior-only'


def default_learn_configs(f_set: Ellipsoid, u_set: Ellipsoid) -> List[LearnConfig]:
    """无约束、代价修改法（local）与以其为初值的 SCP"""
    return [
        LearnConfig(method='unconstrained'),
        LearnConfig(method='cost-mod', model_class='local', f_set=f_set, u_set=u_set),
        LearnConfig(method='scp', model_class='local', scp_init='cost-mod',
                    f_set=f_set, u_set=u_set),
    ]


@dataclass
class ExperimentSpec:
    """
    实验设置

    Attributes:
        train_sets: 训练集个数
        test_sets: 测试集个数
        basis_choice: 'cubic' | 'quad+cubic' | 'quad+exp+cubic'
        seed: 全局种子
        t_f: 每条数据的时长
        dt: 积分步长
        multisine: 输入分布
        noise_level: 训练输出噪声 RMS（0 表示无噪声）
        noise_cutoff: 噪声截止频率 (Hz)
        estimator: 估计器配置
        transient_cut: 数据集丢弃的初始过渡段 (s)
        decimation: 数据集抽取步长
        pool: 是否合并训练集
        inflation: E_sys 拟合膨胀系数
        input_floor_radius: E_u 退化方向的半轴
        fit_method: 椭球拟合方法
        params: 侧倾平面参数
        bins: 直方图分箱数
        workers: 测试集并发数
        batch_size: 每批同时积分的测试集个数
    """
    train_sets: int = 5
    test_sets: int = 200
    basis_choice: str = 'cubic'
    seed: int = 0
    t_f: float = 20.0
    dt: float = DEFAULT_DT
    multisine: MultisineSpec = field(default_factory=MultisineSpec)
    noise_level: float = 0.0
    noise_cutoff: float = 5.0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    transient_cut: float = 1.0
    decimation: int = 10
    pool: bool = True
    inflation: float = DEFAULT_INFLATION
    input_floor_radius: float = 0.1
    fit_method: str = 'sdp'
    params: RollPlaneParams = field(default_factory=RollPlaneParams)
    bins: int = 30
    workers: int = 1
    batch_size: int = 25

    def __post_init__(self):
        if self.train_sets < 1 or self.test_sets < 1:
            raise ConfigError(f"experiment: 训练集与测试集个数必须为正 "
                              f"({self.train_sets}, {self.test_sets})")
        if self.basis_choice not in BASIS_CHOICES:
            raise ConfigError(f"experiment.basis: 未知基函数组合 '{self.basis_choice}'")
        if self.t_f <= 0 or self.dt <= 0:
            raise ConfigError("experiment: t_f 与 dt 必须为正")
        if self.noise_level < 0:
            raise ConfigError(f"simulation.noise_level: 必须非负 ({self.noise_level})")
        if self.decimation < 1:
            raise ConfigError(f"dataset.decimation: 必须 ≥ 1 ({self.decimation})")
        if self.fit_method not in FIT_METHODS:
            raise ConfigError(f"ellipsoids.method: 未知方法 '{self.fit_method}'")
        if self.input_floor_radius <= 0 or self.inflation < 1:
            raise ConfigError("ellipsoids: input_floor_radius 必须为正且 inflation ≥ 1")
        if self.bins < 1 or self.workers < 1 or self.batch_size < 1:
            raise ConfigError("experiment: bins、workers、batch_size 必须 ≥ 1")

    def replace(self, **kwargs) -> 'ExperimentSpec':
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(kwargs)
        return ExperimentSpec(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'train_sets': self.train_sets, 'test_sets': self.test_sets,
            'basis': self.basis_choice, 'seed': self.seed, 't_f': self.t_f, 'dt': self.dt,
            'multisine': self.multisine.to_dict(), 'noise_level': self.noise_level,
            'noise_cutoff': self.noise_cutoff, 'estimator': self.estimator.to_dict(),
            'transient_cut': self.transient_cut, 'decimation': self.decimation, 'pool': self.pool,
            'inflation': self.inflation, 'input_floor_radius': self.input_floor_radius,
            'fit_method': self.fit_method, 'params': self.params.to_dict(), 'bins': self.bins,
        }


@dataclass
class TrainingData:
    """训练阶段的中间结果"""
    inputs: List[Multisine]
    trajectories: List[Trajectory]
    filt: EstimatorFilter
    datasets: List[LabeledDataset]
    estimation_errors: List[float]
    f_set: Ellipsoid
    u_set: Ellipsoid


@dataclass
class ExperimentReport:
    """实验结果：每种方法在每个测试集上的输出误差"""
    spec: ExperimentSpec
    basis: str
    errors: Dict[str, List[float]] = field(default_factory=dict)
    learned: Dict[str, LearnResult] = field(default_factory=dict)
    estimator_bounds: Dict[str, float] = field(default_factory=dict)
    estimation_errors: List[float] = field(default_factory=list)
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues

    def summary(self) -> Dict[str, Dict[str, float]]:
        """每种方法的 median / mean / max（有限值）与相对 prior-only 的均值比"""
        prior = self.errors.get(PRIOR_ONLY)
        prior_mean = float(np.mean([e for e in prior if np.isfinite(e)])) if prior else float('nan')
        out = {}
        for name, errs in self.errors.items():
            arr = np.asarray(errs, dtype=float)
            finite = arr[np.isfinite(arr)]
            mean = float(np.mean(finite)) if finite.size else float('inf')
            out[name] = {
                'median': float(np.median(finite)) if finite.size else float('inf'),
                'mean': mean,
                'max': float(np.max(finite)) if finite.size else float('inf'),
                'diverged': int(arr.size - finite.size),
                'ratio_to_prior': mean / prior_mean if prior_mean > 0 else float('nan'),
            }
        return out

    def histogram(self, bins: Optional[int] = None) -> Histogram:
        return histogram_table(self.errors, bins or self.spec.bins)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'basis': self.basis,
            'spec': self.spec.to_dict(),
            'summary': self.summary(),
            'learned': {k: v.summary() for k, v in self.learned.items()},
            'estimator': dict(self.estimator_bounds),
            'estimation_errors': list(self.estimation_errors),
            'issues': list(self.issues),
            'passed': self.passed,
        }


def draw_inputs(spec: MultisineSpec, count: int, rng: np.random.Generator) -> List[Multisine]:
    return [generate_multisine(spec, rng) for _ in range(count)]


def simulate_system(sys: SystemModel, u: Multisine, t_f: float, dt: float = DEFAULT_DT,
                    noise_level: float = 0.0, noise_cutoff: float = 5.0,
                    rng: Optional[np.random.Generator] = None) -> Trajectory:
    """
    真实系统仿真（x(0) = 0），输出 y = C x + D_ν ν

    Raises:
        SimulationDivergenceError: 仿真发散
    """
    traj = integrate(lambda x, uu: eval_system_rhs(sys, x, uu), np.zeros(sys.n), u, t_f, dt,
                     meta={'kind': 'system'})
    nu = None
    if noise_level > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        nu = band_limited_noise(traj.times, sys.m_nu, noise_level, noise_cutoff, rng).sample(traj.times)
    y = sys.output(traj.states, nu)
    return Trajectory(traj.times, traj.states, traj.inputs, y, traj.meta)


def fit_sets(datasets: Sequence[LabeledDataset], inflation: float, input_floor_radius: float,
             method: str = 'sdp') -> Tuple[Ellipsoid, Ellipsoid]:
    """由估计状态与输入拟合 E_sys 与 E_u（E_u 的退化方向用 input_floor_radius 补齐）"""
    states = np.vstack([ds.states for ds in datasets])
    inputs = np.vstack([ds.inputs for ds in datasets])
    f_set = fit_bounding(states, inflation, method)
    if f_set.degenerate:
        f_set = regularize(f_set, f_set.max_radius())
    u_set = regularize(fit_bounding(inputs, inflation, method), input_floor_radius)
    return f_set, u_set


def prepare_training(spec: ExperimentSpec, sys: SystemModel, basis: BasisLibrary) -> TrainingData:
    """训练集仿真、估计器设计与数据集构造"""
    ms_spec = MultisineSpec.from_dict({**spec.multisine.to_dict(), 't_f': spec.t_f,
                                       'channels': sys.l})
    inputs = draw_inputs(ms_spec, spec.train_sets, substream(spec.seed, 'benchmark.train'))
    noise_rng = substream(spec.seed, 'benchmark.noise')
    trajectories = [simulate_system(sys, u, spec.t_f, spec.dt, spec.noise_level, spec.noise_cutoff,
                                    noise_rng) for u in inputs]
    logger.info(f"✓ {len(trajectories)} 条训练数据仿真完成")

    filt = design_filter(augment(sys, spec.estimator.r), sys.lipschitz_g[0], spec.estimator)
    datasets, est_errors = [], []
    for traj in trajectories:
        run = run_filter(filt, traj.times, traj.inputs, traj.outputs)
        datasets.append(make_labeled_dataset(run, traj.inputs, basis, sys.v_eta,
                                             spec.transient_cut, spec.decimation))
        eta_true = sys.eta_true(traj.states @ sys.v_eta.T, traj.inputs)
        est_errors.append(estimation_error(eta_true, run.eta_hat, traj.times, spec.transient_cut))
    logger.info(f"✓ 不确定性估计完成: 归一化误差 max = {max(est_errors):.4g}")

    f_set, u_set = fit_sets(datasets, spec.inflation, spec.input_floor_radius, spec.fit_method)
    return TrainingData(inputs, trajectories, filt, datasets, est_errors, f_set, u_set)


def _with_sets(cfg: LearnConfig, f_set: Ellipsoid, u_set: Ellipsoid) -> LearnConfig:
    if cfg.method == 'unconstrained' or cfg.model_class == 'global':
        return cfg
    if cfg.f_set is not None and cfg.f_set.dim == f_set.dim and cfg.u_set is not None \
            and cfg.u_set.dim == u_set.dim:
        return cfg
    return cfg.replace(f_set=f_set, u_set=u_set)


def learn_label(cfg: LearnConfig) -> str:
    return cfg.label if cfg.method == 'unconstrained' else f"{cfg.label}-{cfg.model_class}"


def train_models(sys: SystemModel, datasets: Sequence[LabeledDataset], cfgs: Sequence[LearnConfig],
                 pool: bool = True, inits: Optional[Mapping[str, LearnResult]] = None,
                 strict: bool = False) -> Tuple[Dict[str, LearnResult], List[str]]:
    """
    依次训练各方法；单个方法失败时记录并继续（strict 时直接抛出）

    Args:
        inits: 已有结果（标签 -> LearnResult），供 SCP 初始化查找

    Returns:
        (标签 -> LearnResult, 问题列表)
    """
    results: Dict[str, LearnResult] = {}
    issues: List[str] = []
    pooled = [LabeledDataset.pool(datasets)] if pool else list(datasets)
    for cfg in cfgs:
        label = learn_label(cfg)
        best = None
        for ds in pooled:
            init = None
            if cfg.method == 'scp' and len(pooled) == 1:
                known = {**(inits or {}), **results}
                init = known.get(f"{cfg.scp_init}-{cfg.model_class}") or known.get(cfg.scp_init)
            try:
                result = learn(sys, ds, cfg, init)
            except CertModelError as e:
                if strict:
                    raise
                logger.warning(f"✗ {label} 训练失败: {e}")
                issues.append(f"{label}: {e}")
                continue
            if best is None or result.realized_cost < best.realized_cost:
                best = result
        if best is not None:
            results[label] = best
            logger.info(f"✓ {label}: J = {best.realized_cost:.6g}")
    return results, issues


def _evaluate_chunk(model: ExtendedModel, sys: SystemModel, inputs: List[Multisine],
                    y_true: List[np.ndarray], t_f: float, dt: float) -> List[float]:
    trajs = integrate_batch(lambda x, u: eval_extended_rhs(model, x, u), np.zeros(sys.n), MultisineBank(inputs), t_f, dt,
                            output=lambda x, u: x @ sys.c.T)
    return [output_error(y, tr.outputs) for y, tr in zip(y_true, trajs)]


def evaluate_models(sys: SystemModel, models: Dict[str, ExtendedModel], inputs: List[Multisine],
                    t_f: float, dt: float = DEFAULT_DT, workers: int = 1,
                    batch_size: int = 25) -> Dict[str, List[float]]:
    """
    在测试输入上计算每个模型的输出误差（测试输出无噪声）

    Returns:
        方法名 -> 每个测试集的误差（发散为 inf）
    """
    chunks = [inputs[i:i + batch_size] for i in range(0, len(inputs), batch_size)]

    def true_outputs(chunk):
        trajs = integrate_batch(lambda x, u: eval_system_rhs(sys, x, u), np.zeros(sys.n),
                                MultisineBank(chunk), t_f, dt, output=lambda x, u: x @ sys.c.T)
        return [tr.outputs for tr in trajs]

    errors: Dict[str, List[float]] = {name: [] for name in models}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        y_chunks = list(pool.map(true_outputs, chunks))
        for name, model in models.items():
            parts = pool.map(lambda c: _evaluate_chunk(model, sys, c[0], c[1], t_f, dt),
                             list(zip(chunks, y_chunks)))
            for part in parts:
                errors[name].extend(part)
            logger.info(f"✓ {name}: {len(errors[name])} 个测试集, "
                        f"中位误差 {np.median(errors[name]):.4g}")
    return errors


def run_experiment(spec: ExperimentSpec, cfgs: Optional[Sequence[LearnConfig]] = None,
                   training: Optional[TrainingData] = None) -> ExperimentReport:
    """
    运行完整实验

    Args:
        spec: 实验设置
        cfgs: 学习配置（缺省为 default_learn_configs(F, U)）
        training: 复用的训练阶段结果（基函数不同时自动替换）

    Returns:
        ExperimentReport（同一种子结果完全相同）
    """
    sys = build_roll_plane(spec.params)
    basis = BasisLibrary.from_choice(spec.basis_choice, sys.n_veta)
    logger.info(f"侧倾平面实验: 基函数 {basis.tag()}, {spec.train_sets} 个训练集, "
                f"{spec.test_sets} 个测试集")
    if training is None:
        training = prepare_training(spec, sys, basis)
    datasets = [ds.with_basis(basis) for ds in training.datasets]

    if cfgs is None:
        cfgs = default_learn_configs(training.f_set, training.u_set)
    cfgs = [_with_sets(cfg, training.f_set, training.u_set) for cfg in cfgs]
    learned, issues = train_models(sys, datasets, cfgs, spec.pool)

    models: Dict[str, ExtendedModel] = {PRIOR_ONLY: ExtendedModel.prior_only(sys, basis)}
    for label, result in learned.items():
        models[label] = ExtendedModel(sys, result.model, result.certificate)

    ms_spec = MultisineSpec.from_dict({**spec.multisine.to_dict(), 't_f': spec.t_f,
                                       'channels': sys.l})
    test_inputs = draw_inputs(ms_spec, spec.test_sets, substream(spec.seed, 'benchmark.test'))
    errors = evaluate_models(sys, models, test_inputs, spec.t_f, spec.dt, spec.workers,
                             spec.batch_size)

    report = ExperimentReport(spec, basis.tag(), errors, learned, dict(training.filt.bounds),
                              list(training.estimation_errors), issues)
    for name, stats in report.summary().items():
        logger.info(f"  {name}: median {stats['median']:.4g}, mean {stats['mean']:.4g}, "
                    f"ratio {stats['ratio_to_prior']:.3g}")
    return report


def run_basis_sweep(spec: ExperimentSpec, cfgs: Optional[Sequence[LearnConfig]] = None,
                    choices: Sequence[str] = tuple(BASIS_CHOICES),
                    training: Optional[TrainingData] = None) -> Dict[str, ExperimentReport]:
    """对每种基函数组合重复实验（训练数据与估计器只计算一次）"""
    if training is None:
        sys = build_roll_plane(spec.params)
        training = prepare_training(spec, sys, BasisLibrary.from_choice(choices[0], sys.n_veta))
    return {choice: run_experiment(spec.replace(basis_choice=choice), cfgs, training)
            for choice in choices}
