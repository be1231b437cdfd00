"""
测试配置加载
"""
import json
from pathlib import Path

import pytest

from certmodel.config import PipelineConfig, config_from_dict, load_config
from certmodel.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


class TestLoadConfig:
    """测试配置文件读取"""

    def test_default(self):
        """未给出文件时使用缺省配置"""
        cfg = load_config(None)
        assert isinstance(cfg, PipelineConfig)
        assert cfg.system.source == 'roll_plane'
        assert cfg.seed == 0

    def test_missing_file(self, temp_dir):
        """文件不存在"""
        with pytest.raises(ConfigError):
            load_config(str(temp_dir / 'none.json'))

    def test_bad_json(self, temp_dir):
        """JSON 格式错误"""
        path = temp_dir / 'bad.json'
        path.write_text('{"seed": ', encoding='utf-8')
        with pytest.raises(ConfigError):
            load_config(str(path))

    @pytest.mark.parametrize('name', ['roll_plane.json', 'quick.json'])
    def test_shipped_configs(self, name):
        """仓库自带的配置均可加载"""
        cfg = load_config(str(CONFIG_DIR / name))
        assert cfg.base_dir == CONFIG_DIR
        assert cfg.learn

    def test_relative_output_dir(self):
        """相对路径按配置文件目录解析"""
        cfg = load_config(str(CONFIG_DIR / 'quick.json'))
        assert cfg.output_dir == CONFIG_DIR / '../outputs/quick'
        assert cfg.seed == 7


class TestConfigFromDict:
    """测试字典校验"""

    def test_unknown_top_level(self):
        """未知顶层键"""
        with pytest.raises(ConfigError, match=r'config\.foo'):
            config_from_dict({'foo': 1})

    def test_unknown_nested(self):
        """未知嵌套键给出点号路径"""
        with pytest.raises(ConfigError, match=r'simulation\.step'):
            config_from_dict({'simulation': {'step': 0.1}})

    def test_unknown_learn_key(self):
        """learn 列表项"""
        with pytest.raises(ConfigError, match=r'learn\[1\]\.alpha'):
            config_from_dict({'learn': [{'method': 'unconstrained'}, {'alpha': 1.0}]})

    def test_bad_version(self):
        """不支持的版本"""
        with pytest.raises(ConfigError):
            config_from_dict({'schema_version': 2})

    def test_bad_source(self):
        """未知系统来源"""
        with pytest.raises(ConfigError):
            config_from_dict({'system': {'source': 'truck'}})

    def test_bad_roll_plane_param(self):
        """未知侧倾平面参数"""
        with pytest.raises(ConfigError):
            config_from_dict({'system': {'params': {'mass': 1.0}}})

    def test_negative_seed(self):
        """种子必须非负"""
        with pytest.raises(ConfigError):
            config_from_dict({'seed': -1})

    def test_bad_tolerances(self):
        """容差必须为正"""
        with pytest.raises(ConfigError):
            config_from_dict({'tolerances': {'sdp_tol': 0.0}})

    def test_gain_rtol(self):
        """增益校验余量缺省 1%，不能为负"""
        assert config_from_dict({}).verify.gain_rtol == pytest.approx(1e-2)
        assert config_from_dict({'verify': {'gain_rtol': 0.0}}).verify.gain_rtol == 0.0
        with pytest.raises(ConfigError):
            config_from_dict({'verify': {'gain_rtol': -0.1}})

    def test_learn_not_list(self):
        """learn 必须是列表"""
        with pytest.raises(ConfigError):
            config_from_dict({'learn': {'method': 'cost-mod'}})


class TestPipelineConfig:
    """测试派生配置"""

    def test_learn_configs_use_sets(self):
        """local 类带 F / U，无约束不带"""
        from certmodel.ellipsoids.ellipsoid import Ellipsoid

        cfg = config_from_dict({'learn': [{'method': 'unconstrained'},
                                          {'method': 'cost-mod', 'class': 'local'}]})
        f_set, u_set = Ellipsoid.ball(8, 1.0), Ellipsoid.ball(2, 0.1)
        unconstrained, cost_mod = cfg.learn_configs(f_set, u_set)
        assert unconstrained.f_set is None
        assert cost_mod.f_set is f_set
        assert cost_mod.label == 'cost-mod-local'

    def test_local_without_sets(self):
        """local 类缺少 F / U"""
        cfg = config_from_dict({'learn': [{'method': 'cost-mod', 'class': 'local'}]})
        with pytest.raises(ConfigError, match=r'learn\[0\]'):
            cfg.learn_configs()

    def test_tolerances_propagate(self):
        """容差传给估计器与学习配置"""
        cfg = config_from_dict({'tolerances': {'strict_eps': 1e-6},
                                'learn': [{'method': 'cost-mod', 'class': 'global'}]})
        assert cfg.estimator_config().strict_eps == 1e-6
        assert cfg.learn_configs()[0].strict_eps == 1e-6

    def test_input_spec_uses_horizon(self):
        """多正弦时长取 simulation.t_f"""
        cfg = config_from_dict({'simulation': {'t_f': 3.0}})
        spec = cfg.input_spec(2)
        assert spec.t_f == 3.0
        assert spec.channels == 2

    def test_experiment_spec(self):
        """实验设置沿用配置"""
        cfg = config_from_dict({'experiment': {'train_sets': 2, 'test_sets': 4}, 'seed': 3})
        spec = cfg.experiment_spec()
        assert (spec.train_sets, spec.test_sets, spec.seed) == (2, 4, 3)

    def test_overrides(self, temp_dir):
        """命令行覆盖种子与产物目录"""
        cfg = load_config(None).with_overrides(seed=5, output_dir=str(temp_dir))
        assert cfg.seed == 5
        assert cfg.output_dir == temp_dir.resolve()

    def test_negative_override(self):
        """覆盖的种子也必须非负"""
        with pytest.raises(ConfigError):
            load_config(None).with_overrides(seed=-2)

    def test_to_dict_reloads(self):
        """to_dict 的结果可再次加载"""
        cfg = config_from_dict({'seed': 4, 'learn': [{'method': 'unconstrained'}]})
        again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()
