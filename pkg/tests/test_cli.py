"""
测试命令行接口（退出码映射与阶段隔离）
"""
import json

import pytest
from click.testing import CliRunner

from certmodel.cli import cli


def write_config(path, **sections):
    path.write_text(json.dumps(sections), encoding='utf-8')
    return str(path)


def tiny_config(temp_dir):
    """一条训练数据、两条测试数据的短仿真"""
    return write_config(
        temp_dir / 'tiny.json',
        paths={'output_dir': str(temp_dir / 'out')},
        simulation={'dt': 0.002, 't_f': 2.0},
        dataset={'transient_cut': 0.5, 'decimation': 20},
        learn=[{'method': 'unconstrained'}],
        experiment={'train_sets': 1, 'test_sets': 2, 'bins': 3, 'batch_size': 2},
        verify={'lyapunov_samples': 10, 'invariance_trials': 2, 'iss_trials': 2, 'gain_trials': 2,
                'gain_t_f': 1.0},
        seed=3,
    )


@pytest.fixture
def runner():
    return CliRunner()


class TestCliBasics:
    """测试帮助与配置错误"""

    def test_help(self, runner):
        """列出全部子命令"""
        result = runner.invoke(cli, ['--help'])
        assert result.exit_code == 0
        for name in ('simulate', 'design-estimator', 'estimate', 'learn', 'verify', 'evaluate',
                     'pipeline', 'experiment'):
            assert name in result.output

    def test_missing_config(self, runner, temp_dir):
        """配置文件不存在 → 2"""
        result = runner.invoke(cli, ['--config', str(temp_dir / 'none.json'), 'simulate'])
        assert result.exit_code == 2

    def test_unknown_key(self, runner, temp_dir):
        """未知配置项 → 2"""
        path = write_config(temp_dir / 'bad.json', simulation={'step': 0.1})
        result = runner.invoke(cli, ['--config', path, 'simulate'])
        assert result.exit_code == 2
        assert 'simulation.step' in result.output

    def test_missing_system_file(self, runner, temp_dir):
        """system.source = file 但模型文件不存在 → 2"""
        path = write_config(temp_dir / 'file.json', system={'source': 'file'},
                            paths={'system': 'missing.json', 'output_dir': str(temp_dir / 'out')})
        result = runner.invoke(cli, ['--config', path, 'simulate'])
        assert result.exit_code == 2

    def test_scp_needs_init(self, runner, temp_dir):
        """scp 未给出 --init → 2"""
        result = runner.invoke(cli, ['--out', str(temp_dir), 'learn', '--method', 'scp'])
        assert result.exit_code == 2

    def test_missing_upstream(self, runner, temp_dir):
        """空产物目录上运行 verify → 6"""
        result = runner.invoke(cli, ['--out', str(temp_dir), 'verify'])
        assert result.exit_code == 6

    def test_negative_seed(self, runner, temp_dir):
        """--seed 必须非负"""
        result = runner.invoke(cli, ['--seed=-1', '--out', str(temp_dir), 'simulate'])
        assert result.exit_code == 2


@pytest.mark.slow
@pytest.mark.integration
class TestCliPipeline:
    """测试完整流水线"""

    def test_stages_and_tampering(self, runner, temp_dir):
        """逐阶段运行；训练数据被改动后 verify → 5"""
        config = tiny_config(temp_dir)
        out = temp_dir / 'out'
        for stage in ('simulate', 'design-estimator', 'estimate', 'learn', 'verify', 'evaluate'):
            result = runner.invoke(cli, ['--config', config, stage])
            assert result.exit_code == 0, f"{stage}: {result.output}"

        manifest = json.loads((out / 'manifest.json').read_text(encoding='utf-8'))
        assert 'learned/unconstrained.json' in manifest['files']
        assert (out / 'reports' / 'histogram.csv').is_file()
        assert (out / 'reports' / 'histogram.gp').is_file()

        dataset = out / 'datasets' / 'train_0000.csv'
        dataset.write_text(dataset.read_text(encoding='utf-8') + '\n', encoding='utf-8')
        result = runner.invoke(cli, ['--config', config, 'verify'])
        assert result.exit_code == 5
        report = json.loads((out / 'reports' / 'verify.json').read_text(encoding='utf-8'))
        assert not report['passed']

    def test_pipeline_command(self, runner, temp_dir):
        """pipeline 一次运行全部阶段"""
        config = tiny_config(temp_dir)
        result = runner.invoke(cli, ['--config', config, 'pipeline'])
        assert result.exit_code == 0, result.output
        assert 'prior-only' in result.output
