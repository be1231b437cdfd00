"""
流水线各阶段
每个阶段只读取上一阶段写出的产物（ArtifactStore），不共享内存状态：
  simulate → design-estimator → estimate → learn → verify → evaluate
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from certmodel.benchmark.experiment import (
    PRIOR_ONLY, ExperimentReport, draw_inputs, evaluate_models, fit_sets, simulate_system,
    train_models,
)
from certmodel.benchmark.roll_plane import build_roll_plane
from certmodel.config import PipelineConfig
from certmodel.ellipsoids.invariance import empirical_invariance
from certmodel.errors import ArtifactMissingError, ConfigError, VerificationError
from certmodel.estimator import (
    augment, design_filter, estimation_error, make_labeled_dataset, run_filter, verify_gain_bounds,
)
from certmodel.exporter.csv_report import histogram_csv, summary_csv
from certmodel.exporter.gnuplot import GnuplotExporter
from certmodel.io import documents as docs
from certmodel.io.files import read_text
from certmodel.io.store import ArtifactStore
from certmodel.learning.config import LearnConfig, LearnResult
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import ExtendedModel
from certmodel.models.system import SystemModel
from certmodel.utils.seeding import substream
from certmodel.verify import iss_bound_simulation, sample_lyapunov_decrease, verify_result

logger = logging.getLogger(__name__)

STAGES = ('simulate', 'design-estimator', 'estimate', 'learn', 'verify', 'evaluate')


def resolve_system(cfg: PipelineConfig) -> SystemModel:
    """
    按 system.source 构造真实系统

    Raises:
        ConfigError: 模型文件缺失或不是 system 文档
    """
    if cfg.system.source == 'roll_plane':
        return build_roll_plane(cfg.system.roll_plane_params())
    path = cfg.system_path()
    try:
        doc = docs.load_document(read_text(path), 'system', str(path))
    except ArtifactMissingError as e:
        raise ConfigError(f"paths.system: {e}") from e
    sys = docs.system_from_doc(doc)
    if sys.eta_true is None:
        raise ConfigError(f"paths.system: {path} 没有真实不确定性 eta_true，无法生成数据")
    return sys


def _basis(cfg: PipelineConfig, sys: SystemModel) -> BasisLibrary:
    return BasisLibrary.from_choice(cfg.experiment.basis, sys.n_veta)


# ---- simulate ----

def stage_simulate(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    """
    生成训练 / 测试输入并仿真真实系统（训练输出可加噪声，测试输出无噪声）

    Raises:
        SimulationDivergenceError: 真实系统发散
    """
    sys = resolve_system(cfg)
    store.systems.save(sys)
    spec = cfg.input_spec(sys.l)
    sim = cfg.simulation
    train = draw_inputs(spec, cfg.experiment.train_sets, substream(cfg.seed, 'simulate.train'))
    test = draw_inputs(spec, cfg.experiment.test_sets, substream(cfg.seed, 'simulate.test'))
    store.signals.save('train', train)
    store.signals.save('test', test)

    noise_rng = substream(cfg.seed, 'simulate.noise')
    for k, u in enumerate(train):
        traj = simulate_system(sys, u, sim.t_f, sim.dt, sim.noise_level, sim.noise_cutoff, noise_rng)
        store.trajectories.save('train', k, traj)
    for k, u in enumerate(test):
        store.trajectories.save('test', k, simulate_system(sys, u, sim.t_f, sim.dt))
    logger.info(f"✓ 仿真完成: {len(train)} 条训练数据, {len(test)} 条测试数据")
    return {'train': len(train), 'test': len(test)}


# ---- design-estimator ----

def stage_design_estimator(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, float]:
    """
    Raises:
        ArtifactMissingError: 缺少 system.json
        SdpInfeasibleError: 设计 LMI 不可行
    """
    sys = store.systems.load()
    est_cfg = cfg.estimator_config()
    filt = design_filter(augment(sys, est_cfg.r), sys.lipschitz_g[0], est_cfg)
    store.estimators.save(filt, store.provenance([store.systems.path('system.json')]))
    return dict(filt.bounds)


# ---- estimate ----

def stage_estimate(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    """在训练数据上运行估计器，写出带标签数据集与拟合的 F / U"""
    sys = store.systems.load()
    filt = store.estimators.load()
    basis = _basis(cfg, sys)
    trajs = store.trajectories.load_all('train')
    datasets, est_errors = [], []
    for k, traj in enumerate(trajs):
        run = run_filter(filt, traj.times, traj.inputs, traj.outputs)
        ds = make_labeled_dataset(run, traj.inputs, basis, sys.v_eta,
                                  cfg.dataset.transient_cut, cfg.dataset.decimation)
        store.datasets.save(k, ds)
        datasets.append(ds)
        if sys.eta_true is not None:
            eta = sys.eta_true(traj.states @ sys.v_eta.T, traj.inputs)
            est_errors.append(estimation_error(eta, run.eta_hat, traj.times, cfg.dataset.transient_cut))
    f_set, u_set = fit_sets(datasets, cfg.ellipsoids.inflation, cfg.ellipsoids.input_floor_radius,
                            cfg.ellipsoids.method)
    store.datasets.save_sets(f_set, u_set)
    body = {'estimation_errors': est_errors, 'samples': [len(ds) for ds in datasets]}
    store.reports.save_json('estimation', body)
    if est_errors:
        logger.info(f"✓ 不确定性估计: 归一化误差 max = {max(est_errors):.4g}")
    return body


# ---- learn ----

def _upstream(store: ArtifactStore) -> List[Path]:
    return [store.systems.path('system.json'), store.estimators.path('estimator.json'),
            store.datasets.path('sets.json')] + store.datasets.paths()


def stage_learn(cfg: PipelineConfig, store: ArtifactStore, cfgs: Optional[List[LearnConfig]] = None,
                init_path: Optional[str] = None) -> Dict[str, LearnResult]:
    """
    训练并写出学习结果；任一方法失败即抛出

    Args:
        cfgs: 学习配置（缺省取配置文件中的 learn 列表）
        init_path: SCP 初值文档路径；缺省在已有结果中按 '<scp_init>-<class>' 查找

    Raises:
        ArtifactMissingError: 缺少上游产物或 SCP 初值
        SdpInfeasibleError: SDP 不可行（含 A 非 Hurwitz）
    """
    sys = store.systems.load()
    basis = _basis(cfg, sys)
    datasets = store.datasets.load_all(basis, sys.v_eta)
    f_set, u_set = store.datasets.load_sets()
    if cfgs is None:
        cfgs = cfg.learn_configs(f_set, u_set)
    if not cfgs:
        raise ConfigError("learn: 没有配置任何学习方法")

    upstream = _upstream(store)
    inits: Dict[str, LearnResult] = {}
    results: Dict[str, LearnResult] = {}
    for lc in cfgs:
        provenance_paths = list(upstream)
        if lc.method == 'scp' and lc.scp_init != 'zero':
            key = f"{lc.scp_init}-{lc.model_class}" if lc.scp_init != 'unconstrained' else 'unconstrained'
            if init_path is not None:
                inits[key] = store.learned.load_path(init_path)
                provenance_paths.append(Path(init_path))
            else:
                if key not in results and key not in inits:
                    if key not in store.learned.labels():
                        raise ArtifactMissingError(f"SCP 需要初值 {key}（--init 或先运行 {lc.scp_init}）")
                    inits[key] = store.learned.load(key)
                provenance_paths.append(store.learned.path(f"{key}.json"))
        learned, _ = train_models(sys, datasets, [lc], cfg.dataset.pool, {**inits, **results}, strict=True)
        for label, result in learned.items():
            results[label] = result
            store.learned.save(label, result, store.provenance(provenance_paths))
    return results


# ---- verify ----

def _check_provenance(store: ArtifactStore, label: str) -> List[str]:
    issues = []
    for rel, digest in store.learned.provenance(label).items():
        path = store.root / rel if not Path(rel).is_absolute() else Path(rel)
        if not path.is_file():
            issues.append(f"{label}: 上游产物 {rel} 已不存在")
        elif store.hash(path) != digest:
            issues.append(f"{label}: 上游产物 {rel} 已被修改")
    return issues


def stage_verify(cfg: PipelineConfig, store: ArtifactStore,
                 labels: Optional[List[str]] = None) -> Dict[str, Any]:
    """
    复核所有带证书的学习结果与估计器增益；报告写出后，任一失败即抛出

    Raises:
        VerificationError: 至少一项检验失败
    """
    sys = store.systems.load()
    f_set, u_set = store.datasets.load_sets()
    labels = labels or store.learned.labels()
    if not labels:
        raise ArtifactMissingError(f"没有学习结果: {store.learned.root}")
    eps = cfg.tolerances.strict_eps
    body: Dict[str, Any] = {'certificates': {}, 'issues': []}

    for label in labels:
        result = store.learned.load(label)
        body['issues'].extend(_check_provenance(store, label))
        if result.certificate is None:
            logger.info(f"⊘ {label}: 无证书，跳过复核")
            continue
        cert = verify_result(sys, result, f_set, u_set, eps)
        entry = {'certificate': cert.to_dict()}
        body['issues'].extend(f"{label}: {issue}" for issue in cert.issues)
        local = result.certificate.kind == 'invariant-set'
        sample = sample_lyapunov_decrease(sys, result.model, result.certificate.p, result.certificate.scalars,
                                          u_set if local else None, cfg.verify.lyapunov_samples,
                                          substream(cfg.seed, f"verify.lyapunov.{label}"), eps)
        entry['lyapunov'] = sample.to_dict()
        body['issues'].extend(f"{label}: {issue}" for issue in sample.issues)
        model = ExtendedModel(sys, result.model, result.certificate)
        if local:
            inv = empirical_invariance(model, u_set, cfg.verify.invariance_trials, cfg.simulation.t_f,
                                       cfg.simulation.dt, substream(cfg.seed, f"verify.invariance.{label}"),
                                       cfg.input_spec(sys.l))
            entry['invariance'] = inv.to_dict()
            if not inv.vacuous:
                body['issues'].extend(f"{label}: {issue}" for issue in inv.issues)
        else:
            iss = iss_bound_simulation(model, cfg.verify.iss_trials, cfg.simulation.t_f, cfg.simulation.dt,
                                       substream(cfg.seed, f"verify.iss.{label}"),
                                       input_set=u_set)
            entry['iss'] = iss.to_dict()
            if not iss.vacuous:
                body['issues'].extend(f"{label}: {issue}" for issue in iss.issues)
        body['certificates'][label] = entry

    filt = store.estimators.load()
    gains = verify_gain_bounds(filt, cfg.verify.gain_trials, cfg.verify.gain_t_f, cfg.simulation.dt,
                               substream(cfg.seed, 'verify.gains'), rtol=cfg.verify.gain_rtol)
    body['estimator'] = gains.to_dict()
    body['issues'].extend(f"estimator: {issue}" for issue in gains.issues)
    body['passed'] = not body['issues']
    store.reports.save_json('verify', body)

    if body['issues']:
        for issue in body['issues']:
            logger.warning(f"✗ {issue}")
        raise VerificationError(f"验证失败: {len(body['issues'])} 项问题（见 reports/verify.json）")
    logger.info(f"✓ 验证通过: {len(body['certificates'])} 个证书")
    return body


# ---- evaluate ----

def stage_evaluate(cfg: PipelineConfig, store: ArtifactStore) -> ExperimentReport:
    """测试集上比较真实系统与各扩展模型的输出，写出直方图、汇总与 gnuplot 脚本"""
    sys = store.systems.load()
    basis = _basis(cfg, sys)
    test = store.signals.load('test')
    learned = {label: store.learned.load(label) for label in store.learned.labels()}
    models: Dict[str, ExtendedModel] = {PRIOR_ONLY: ExtendedModel.prior_only(sys, basis)}
    for label, result in learned.items():
        models[label] = ExtendedModel(sys, result.model, result.certificate)

    errors = evaluate_models(sys, models, test, cfg.simulation.t_f, cfg.simulation.dt, cfg.workers,
                             cfg.experiment.batch_size)
    filt = store.estimators.load()
    estimation = store.reports.load_json('estimation')
    report = ExperimentReport(cfg.experiment_spec(), basis.tag(), errors, learned, dict(filt.bounds),
                              list(estimation.get('estimation_errors', [])))
    prior = np.asarray(errors[PRIOR_ONLY], dtype=float)
    if np.any(prior <= 0):
        report.issues.append("prior-only 在部分测试集上误差为 0（不确定性未被激励）")

    hist = report.histogram(cfg.experiment.bins)
    store.reports.save_json('experiment', report.to_dict())
    hist_path = store.reports.save_text('histogram.csv', histogram_csv(hist))
    store.reports.save_text('summary.csv', summary_csv(report.summary()))
    script = GnuplotExporter().export_histogram(hist, hist_path.name, 'histogram.png')
    store.reports.save_text('histogram.gp', script)
    for name, stats in report.summary().items():
        logger.info(f"  {name}: median {stats['median']:.4g}, mean {stats['mean']:.4g}, "
                    f"ratio {stats['ratio_to_prior']:.3g}")
    return report


# 阶段名 -> 阶段函数，按运行顺序
STAGE_FUNCS = dict(zip(STAGES, (stage_simulate, stage_design_estimator, stage_estimate, stage_learn,
                                stage_verify, stage_evaluate)))
