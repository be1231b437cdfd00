#!/usr/bin/env python3
"""
CLI 主入口
使用 Click 实现统一的命令行接口；异常按 exit_code 映射为退出码
"""
import logging
import sys
import time

import click

from certmodel.errors import CertModelError, ConfigError
from certmodel.utils.logging_config import get_default_log_file, setup_logging

logger = logging.getLogger(__name__)


def _fail(message: str, code: int):
    click.secho(f"✗ {message}", fg='red', err=True)
    sys.exit(code)


def _run_stage(ctx, name: str, func, *args, **kwargs):
    """在独立的 ArtifactStore 会话中运行一个阶段，异常映射为退出码"""
    from certmodel.io.store import ArtifactStore

    cfg = ctx.obj['config']
    start = time.time()
    try:
        with ArtifactStore(cfg.output_dir) as store:
            result = func(cfg, store, *args, **kwargs)
    except CertModelError as e:
        _fail(f"{name} 失败: {e}", e.exit_code)
    except (ValueError, OSError) as e:
        _fail(f"{name} 失败: {e}", 1)
    click.secho(f"✓ {name} 完成（{time.time() - start:.1f}s），产物目录: {cfg.output_dir}", fg='green')
    return result


@click.group()
@click.option('--log-level', default='INFO',
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help='日志级别')
@click.option('--log-file', default=None, help='日志文件路径（auto 表示 logs/certmodel_YYYYMMDD.log）')
@click.option('--config', '-c', 'config_path', default=None, help='配置文件路径（JSON）')
@click.option('--seed', type=int, default=None, help='覆盖配置中的全局种子')
@click.option('--out', '-o', default=None, help='覆盖产物目录 paths.output_dir')
@click.pass_context
def cli(ctx, log_level, log_file, config_path, seed, out):
    """带稳定性证书的模型更新工具"""
    from certmodel.config import load_config

    if log_file == 'auto':
        log_file = get_default_log_file()
    setup_logging(level=log_level, log_file=log_file)
    ctx.ensure_object(dict)
    try:
        ctx.obj['config'] = load_config(config_path).with_overrides(seed=seed, output_dir=out)
    except ConfigError as e:
        _fail(f"配置错误: {e}", e.exit_code)


@cli.command()
@click.pass_context
def simulate(ctx):
    """
    生成训练 / 测试输入并仿真真实系统

    示例:
        certmodel --config configs/roll_plane.json simulate
    """
    from certmodel.pipeline import stage_simulate

    counts = _run_stage(ctx, 'simulate', stage_simulate)
    click.echo(f"  训练数据: {counts['train']} 条")
    click.echo(f"  测试数据: {counts['test']} 条")


@cli.command('design-estimator')
@click.pass_context
def design_estimator(ctx):
    """设计不确定性估计器（增益 E, K, H）"""
    from certmodel.pipeline import stage_design_estimator

    bounds = _run_stage(ctx, 'design-estimator', stage_design_estimator)
    click.echo(f"  L2 增益上界: {bounds.get('l2_gain', float('nan')):.6g}")
    click.echo(f"  噪声增益上界: {bounds.get('noise_gain', float('nan')):.6g}")


@cli.command()
@click.pass_context
def estimate(ctx):
    """在训练数据上运行估计器，生成带标签数据集与 F / U 椭球"""
    from certmodel.pipeline import stage_estimate

    body = _run_stage(ctx, 'estimate', stage_estimate)
    click.echo(f"  数据集: {len(body['samples'])} 个，样本数 {sum(body['samples'])}")
    if body['estimation_errors']:
        click.echo(f"  归一化估计误差 max: {max(body['estimation_errors']):.4g}")


@cli.command()
@click.option('--method', '-m', type=click.Choice(['cost-mod', 'constraint-mod', 'scp', 'unconstrained']),
              default=None, help='学习方法（缺省运行配置中的 learn 列表）')
@click.option('--class', 'model_class', type=click.Choice(['local', 'global']), default='local',
              help='模型类')
@click.option('--init', 'init_path', type=click.Path(), default=None,
              help='SCP 初值（学习结果文档路径）')
@click.pass_context
def learn(ctx, method, model_class, init_path):
    """
    学习不确定性模型

    示例:
        certmodel learn --method cost-mod --class local
        certmodel learn --method scp --class local --init outputs/learned/cost-mod-local.json
    """
    from certmodel.pipeline import stage_learn

    cfg = ctx.obj['config']
    if method is not None:
        if method == 'scp' and init_path is None:
            _fail("--method scp 需要 --init <学习结果>", ConfigError.exit_code)
        item = next((dict(it) for it in cfg.learn
                     if it.get('method') == method and it.get('class', 'local') == model_class),
                    {'method': method, 'class': model_class})
        cfg.learn = [item]
    results = _run_stage(ctx, 'learn', stage_learn, init_path=init_path)
    for label, result in results.items():
        bound = f"{result.cost_bound:.6g}" if result.cost_bound is not None else '—'
        click.echo(f"  {label}: J = {result.realized_cost:.6g} ({result.cost_labels}), tr(W) = {bound}")


@cli.command()
@click.option('--label', '-l', multiple=True, help='只复核指定的学习结果（可重复）')
@click.pass_context
def verify(ctx, label):
    """复核稳定性证书与估计器增益"""
    from certmodel.pipeline import stage_verify

    body = _run_stage(ctx, 'verify', stage_verify, labels=list(label) or None)
    click.echo(f"  证书: {len(body['certificates'])} 个全部通过")


@cli.command()
@click.pass_context
def evaluate(ctx):
    """测试集输出误差、直方图与汇总"""
    from certmodel.pipeline import stage_evaluate

    report = _run_stage(ctx, 'evaluate', stage_evaluate)
    _echo_summary(report)


@cli.command()
@click.pass_context
def pipeline(ctx):
    """按顺序运行全部阶段，任一阶段失败即以其退出码结束"""
    from certmodel.pipeline import STAGE_FUNCS

    report = None
    for name, func in STAGE_FUNCS.items():
        click.echo(f"\n[{name}]")
        report = _run_stage(ctx, name, func)
    _echo_summary(report)


@cli.command()
@click.option('--sweep', is_flag=True, default=None, help='对三种基函数组合重复实验')
@click.pass_context
def experiment(ctx, sweep):
    """在内存中运行完整基准实验（不经过阶段产物）"""
    from certmodel.benchmark.experiment import prepare_training, run_basis_sweep, run_experiment
    from certmodel.benchmark.roll_plane import build_roll_plane
    from certmodel.exporter.csv_report import histogram_csv, summary_csv
    from certmodel.io.store import ArtifactStore
    from certmodel.models.basis import BasisLibrary

    cfg = ctx.obj['config']
    sweep = cfg.experiment.sweep if sweep is None else sweep
    try:
        spec = cfg.experiment_spec()
        sys_model = build_roll_plane(spec.params)
        training = prepare_training(spec, sys_model,
                                    BasisLibrary.from_choice(spec.basis_choice, sys_model.n_veta))
        cfgs = cfg.learn_configs(training.f_set, training.u_set) if cfg.learn else None
        if sweep:
            reports = run_basis_sweep(spec, cfgs, training=training)
        else:
            reports = {spec.basis_choice: run_experiment(spec, cfgs, training)}
        with ArtifactStore(cfg.output_dir) as store:
            for choice, report in reports.items():
                tag = choice.replace('+', '_')
                store.reports.save_json(f"experiment_{tag}", report.to_dict())
                store.reports.save_text(f"histogram_{tag}.csv", histogram_csv(report.histogram()))
                store.reports.save_text(f"summary_{tag}.csv", summary_csv(report.summary()))
    except CertModelError as e:
        _fail(f"experiment 失败: {e}", e.exit_code)
    for choice, report in reports.items():
        click.secho(f"\n基函数 {choice}", bold=True)
        _echo_summary(report)


def _echo_summary(report):
    for name, stats in report.summary().items():
        color = 'green' if name != 'prior-only' else None
        click.secho(f"  {name:<24} median {stats['median']:.4g}  mean {stats['mean']:.4g}  "
                    f"max {stats['max']:.4g}  ratio {stats['ratio_to_prior']:.3g}", fg=color)
    for issue in report.issues:
        click.secho(f"  ⚠ {issue}", fg='yellow')


if __name__ == '__main__':
    cli(obj={})
