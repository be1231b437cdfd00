"""
流水线配置
JSON 文件 → PipelineConfig；未知键一律拒绝，错误信息给出带点号的键路径
"""

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from certmodel.benchmark.experiment import ExperimentSpec
from certmodel.benchmark.roll_plane import RollPlaneParams
from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.ellipsoids.fitting import DEFAULT_INFLATION, FIT_METHODS
from certmodel.errors import ConfigError
from certmodel.estimator.design import EstimatorConfig
from certmodel.estimator.gains import GAIN_RTOL
from certmodel.learning.config import LearnConfig
from certmodel.models.basis import BASIS_CHOICES
from certmodel.sdp.problem import DEFAULT_STRICT_EPS, DEFAULT_TOL
from certmodel.simulation.integrator import DEFAULT_DT
from certmodel.simulation.signals import MultisineSpec

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SYSTEM_SOURCES = ('roll_plane', 'file')


def _check_keys(data: Any, allowed: Sequence[str], prefix: str) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix}: 必须是对象")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}: 未知配置项")
    return data


def _section(cls, data: Any, prefix: str):
    """按 dataclass 字段构造小节"""
    names = [f.name for f in fields(cls)]
    data = _check_keys(data, names, prefix)
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{prefix}: {e}") from e


@dataclass
class PathsConfig:
    """system: 系统模型文档路径（source = file 时使用）；output_dir: 产物目录"""
    system: Optional[str] = None
    output_dir: str = 'outputs'


@dataclass
class SystemConfig:
    source: str = 'roll_plane'
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.source not in SYSTEM_SOURCES:
            raise ConfigError(f"system.source: 未知来源 '{self.source}'（可选: {', '.join(SYSTEM_SOURCES)}）")
        self.roll_plane_params()

    def roll_plane_params(self) -> RollPlaneParams:
        return RollPlaneParams.from_dict(self.params)


@dataclass
class SimulationConfig:
    dt: float = DEFAULT_DT
    t_f: float = 20.0
    noise_level: float = 0.0
    noise_cutoff: float = 5.0


@dataclass
class DatasetConfig:
    transient_cut: float = 1.0
    decimation: int = 10
    pool: bool = True


@dataclass
class EllipsoidConfig:
    inflation: float = DEFAULT_INFLATION
    input_floor_radius: float = 0.1
    method: str = 'sdp'

    def __post_init__(self):
        if self.method not in FIT_METHODS:
            raise ConfigError(f"ellipsoids.method: 未知方法 '{self.method}'")


@dataclass
class ExperimentConfig:
    train_sets: int = 5
    test_sets: int = 200
    basis: str = 'cubic'
    bins: int = 30
    batch_size: int = 25
    sweep: bool = False

    def __post_init__(self):
        if self.basis not in BASIS_CHOICES:
            raise ConfigError(f"experiment.basis: 未知基函数组合 '{self.basis}'")


@dataclass
class VerifyConfig:
    """验证阶段的采样规模"""
    lyapunov_samples: int = 1000
    invariance_trials: int = 100
    iss_trials: int = 20
    gain_trials: int = 20
    gain_t_f: float = 5.0
    gain_rtol: float = GAIN_RTOL

    def __post_init__(self):
        if not self.gain_rtol >= 0:
            raise ConfigError(f"verify.gain_rtol: 必须 ≥ 0 ({self.gain_rtol})")


@dataclass
class ToleranceConfig:
    sdp_tol: float = DEFAULT_TOL
    strict_eps: float = DEFAULT_STRICT_EPS

    def __post_init__(self):
        if not self.sdp_tol > 0 or not self.strict_eps > 0:
            raise ConfigError("tolerances: sdp_tol 与 strict_eps 必须为正")


# learn 列表中每一项允许的键
LEARN_KEYS = ('method', 'class', 'hyper', 'grids', 'scp_init', 'scp_rtol', 'scp_max_iters',
              'lipschitz_radius', 'solvers')


@dataclass
class PipelineConfig:
    """
    完整配置

    Attributes:
        base_dir: 配置文件所在目录，相对路径据此解析
    """
    paths: PathsConfig = field(default_factory=PathsConfig)
    system: SystemConfig = field(default_factory=SystemConfig)
    multisine: MultisineSpec = field(default_factory=MultisineSpec)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    ellipsoids: EllipsoidConfig = field(default_factory=EllipsoidConfig)
    learn: List[Dict[str, Any]] = field(default_factory=list)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    seed: int = 0
    workers: int = 1
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError(f"seed: 必须非负 ({self.seed})")
        if self.workers < 1:
            raise ConfigError(f"workers: 必须 ≥ 1 ({self.workers})")
        for idx, item in enumerate(self.learn):
            _check_keys(item, LEARN_KEYS, f"learn[{idx}]")

    @property
    def output_dir(self) -> Path:
        return self.resolve(self.paths.output_dir)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def system_path(self) -> Path:
        """
        Raises:
            ConfigError: 未给出路径或文件不存在
        """
        if not self.paths.system:
            raise ConfigError("paths.system: system.source = file 时必须给出模型路径")
        path = self.resolve(self.paths.system)
        if not path.is_file():
            raise ConfigError(f"paths.system: 文件不存在 ({path})")
        return path

    def input_spec(self, channels: int) -> MultisineSpec:
        return MultisineSpec.from_dict({**self.multisine.to_dict(), 't_f': self.simulation.t_f,
                                        'channels': channels})

    def estimator_config(self) -> EstimatorConfig:
        data = self.estimator.to_dict()
        data.update(strict_eps=self.tolerances.strict_eps, sdp_tol=self.tolerances.sdp_tol)
        return EstimatorConfig(**data)

    def learn_configs(self, f_set: Optional[Ellipsoid] = None,
                      u_set: Optional[Ellipsoid] = None) -> List[LearnConfig]:
        """learn 列表 → LearnConfig；local 类使用拟合得到的 F / U"""
        return [self.learn_config(item, f_set, u_set, f"learn[{idx}]")
                for idx, item in enumerate(self.learn)]

    def learn_config(self, item: Dict[str, Any], f_set: Optional[Ellipsoid] = None,
                     u_set: Optional[Ellipsoid] = None, prefix: str = 'learn') -> LearnConfig:
        item = _check_keys(item, LEARN_KEYS, prefix)
        method = item.get('method', 'cost-mod')
        model_class = item.get('class', 'local')
        needs_sets = method != 'unconstrained' and model_class == 'local'
        solvers = item.get('solvers')
        try:
            return LearnConfig(
                model_class=model_class,
                method=method,
                hyper={k: float(v) for k, v in item.get('hyper', {}).items()},
                grids={k: tuple(float(x) for x in v) for k, v in item.get('grids', {}).items()},
                f_set=f_set if needs_sets else None,
                u_set=u_set if needs_sets else None,
                strict_eps=self.tolerances.strict_eps,
                sdp_tol=self.tolerances.sdp_tol,
                scp_rtol=float(item.get('scp_rtol', 1e-6)),
                scp_max_iters=int(item.get('scp_max_iters', 20)),
                scp_init=item.get('scp_init', 'cost-mod'),
                lipschitz_radius=item.get('lipschitz_radius'),
                workers=self.workers,
                solvers=tuple(solvers) if solvers else None,
            )
        except ConfigError as e:
            raise ConfigError(f"{prefix}: {e}") from e

    def experiment_spec(self) -> ExperimentSpec:
        return ExperimentSpec(
            train_sets=self.experiment.train_sets,
            test_sets=self.experiment.test_sets,
            basis_choice=self.experiment.basis,
            seed=self.seed,
            t_f=self.simulation.t_f,
            dt=self.simulation.dt,
            multisine=self.multisine,
            noise_level=self.simulation.noise_level,
            noise_cutoff=self.simulation.noise_cutoff,
            estimator=self.estimator_config(),
            transient_cut=self.dataset.transient_cut,
            decimation=self.dataset.decimation,
            pool=self.dataset.pool,
            inflation=self.ellipsoids.inflation,
            input_floor_radius=self.ellipsoids.input_floor_radius,
            fit_method=self.ellipsoids.method,
            params=self.system.roll_plane_params(),
            bins=self.experiment.bins,
            workers=self.workers,
            batch_size=self.experiment.batch_size,
        )

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> 'PipelineConfig':
        """命令行 --seed / --out 覆盖"""
        if seed is not None:
            if seed < 0:
                raise ConfigError(f"seed: 必须非负 ({seed})")
            self.seed = int(seed)
        if output_dir is not None:
            self.paths.output_dir = str(Path(output_dir).resolve())
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'paths': {'system': self.paths.system, 'output_dir': self.paths.output_dir},
            'system': {'source': self.system.source, 'params': dict(self.system.params)},
            'multisine': self.multisine.to_dict(),
            'simulation': vars(self.simulation).copy(),
            'estimator': self.estimator.to_dict(),
            'dataset': vars(self.dataset).copy(),
            'ellipsoids': vars(self.ellipsoids).copy(),
            'learn': [dict(item) for item in self.learn],
            'experiment': vars(self.experiment).copy(),
            'verify': vars(self.verify).copy(),
            'tolerances': vars(self.tolerances).copy(),
            'seed': self.seed,
            'workers': self.workers,
        }


TOP_LEVEL_KEYS = ('schema_version', 'paths', 'system', 'multisine', 'simulation', 'estimator',
                  'dataset', 'ellipsoids', 'learn', 'experiment', 'verify', 'tolerances', 'seed',
                  'workers')

MULTISINE_KEYS = ('amplitude_range', 'frequency_range', 'phase_range', 'component_range', 't_f',
                  'seed', 'channels', 'active_channel')


def config_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> PipelineConfig:
    """
    Raises:
        ConfigError: 未知键、版本不符或取值无效
    """
    data = _check_keys(data, TOP_LEVEL_KEYS, 'config')
    version = data.get('schema_version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: 不支持的版本 {version}（当前 {SCHEMA_VERSION}）")

    multisine = _check_keys(data.get('multisine'), MULTISINE_KEYS, 'multisine')
    try:
        multisine_spec = MultisineSpec.from_dict(multisine)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"multisine: {e}") from e

    learn = data.get('learn', [])
    if not isinstance(learn, list):
        raise ConfigError("learn: 必须是列表")

    return PipelineConfig(
        paths=_section(PathsConfig, data.get('paths'), 'paths'),
        system=_section(SystemConfig, data.get('system'), 'system'),
        multisine=multisine_spec,
        simulation=_section(SimulationConfig, data.get('simulation'), 'simulation'),
        estimator=_section(EstimatorConfig, data.get('estimator'), 'estimator'),
        dataset=_section(DatasetConfig, data.get('dataset'), 'dataset'),
        ellipsoids=_section(EllipsoidConfig, data.get('ellipsoids'), 'ellipsoids'),
        learn=learn,
        experiment=_section(ExperimentConfig, data.get('experiment'), 'experiment'),
        verify=_section(VerifyConfig, data.get('verify'), 'verify'),
        tolerances=_section(ToleranceConfig, data.get('tolerances'), 'tolerances'),
        seed=int(data.get('seed', 0)),
        workers=int(data.get('workers', 1)),
        base_dir=base_dir or Path.cwd(),
    )


def load_config(path: Optional[str] = None) -> PipelineConfig:
    """
    读取 JSON 配置；path 为 None 时返回缺省配置

    Raises:
        ConfigError: 文件不存在、JSON 格式错误或内容无效
    """
    if path is None:
        logger.info("未指定配置文件，使用缺省配置")
        return PipelineConfig()
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"配置文件不存在: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding='utf-8-sig'))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{config_path}: JSON 格式错误 ({e})") from e
    cfg = config_from_dict(data, config_path.resolve().parent)
    logger.info(f"✓ 已加载配置 {config_path}")
    return cfg
