"""
测试 benchmark 模块
"""
import numpy as np
import pytest

from certmodel.benchmark.experiment import (PRIOR_ONLY, ExperimentReport, ExperimentSpec, draw_inputs,
                                            evaluate_models, learn_label, run_experiment, simulate_system,
                                            train_models)
from certmodel.benchmark.histogram import histogram, histogram_table
from certmodel.benchmark.roll_plane import (RollPlaneParams, build_roll_plane, mechanical_matrices,
                                            true_uncertainty_model)
from certmodel.errors import ConfigError
from certmodel.learning.config import LearnConfig
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import ExtendedModel, eval_extended_rhs
from certmodel.models.system import eval_system_rhs
from certmodel.simulation.signals import MultisineSpec


class TestHistogram:
    """测试误差直方图"""

    def test_two_bins(self):
        """{0, 1, 2, 3} 分两箱 → (2, 2)"""
        hist = histogram([0.0, 1.0, 2.0, 3.0], 2)
        np.testing.assert_array_equal(hist.counts['errors'], [2, 2])
        np.testing.assert_allclose(hist.edges, [0.0, 1.5, 3.0])

    def test_non_finite_counted_separately(self):
        """发散误差不进入分箱"""
        hist = histogram_table({'a': [1.0, np.inf], 'b': [0.5, 2.0]}, 4)
        assert hist.non_finite == {'a': 1, 'b': 0}
        assert int(hist.counts['a'].sum()) == 1
        assert int(hist.counts['b'].sum()) == 2

    def test_shared_edges(self):
        """各方法共用分箱"""
        hist = histogram_table({'a': [1.0], 'b': [4.0]}, 4)
        assert hist.edges[-1] == pytest.approx(4.0)
        assert len(hist.rows()) == 4
        assert len(hist.rows()[0]) == 4

    def test_invalid_bins(self):
        """分箱数 < 1"""
        with pytest.raises(ValueError):
            histogram([1.0], 0)


class TestRollPlane:
    """测试侧倾平面模型"""

    def test_dimensions(self, roll_plane):
        """n = 8, m = 4, l = 2, n_η = 2"""
        assert (roll_plane.n, roll_plane.m, roll_plane.l, roll_plane.n_eta) == (8, 4, 2, 2)

    def test_output_selection(self, roll_plane):
        """x = e₁ → y = (1, 0, 0, 0)"""
        np.testing.assert_allclose(roll_plane.output(np.eye(8)[0]), [1.0, 0.0, 0.0, 0.0])

    def test_stiffness_block(self, roll_plane):
        """A 的左下块为 −M⁻¹K"""
        mats = mechanical_matrices(RollPlaneParams())
        np.testing.assert_allclose(roll_plane.a[4:, :4], -np.linalg.solve(mats['mass'], mats['stiffness']))

    def test_tire_input(self, roll_plane):
        """u = (0.01, 0) 只作用于第一个轮胎的加速度"""
        p = RollPlaneParams()
        rhs = roll_plane.b_u @ np.array([0.01, 0.0])
        expected = np.zeros(8)
        expected[6] = p.k_t1 * 0.01 / p.m_t1
        np.testing.assert_allclose(rhs, expected, rtol=1e-12, atol=1e-12)

    def test_true_model_reproduces_eta(self, roll_plane, rng):
        """真实参数的扩展模型与真实系统右端一致"""
        basis = BasisLibrary.from_choice('quad+cubic', 2)
        model = ExtendedModel(roll_plane, true_uncertainty_model(RollPlaneParams(), basis, roll_plane.s_eta))
        x = rng.normal(size=(5, 8)) * 0.01
        u = rng.normal(size=(5, 2)) * 0.01
        np.testing.assert_allclose(eval_extended_rhs(model, x, u), eval_system_rhs(roll_plane, x, u),
                                   rtol=1e-10, atol=1e-10)

    def test_true_model_needs_cubic(self, roll_plane):
        """基函数不含三次块"""
        with pytest.raises(ValueError):
            true_uncertainty_model(RollPlaneParams(), BasisLibrary(2, ('quad',)), roll_plane.s_eta)

    def test_unknown_param(self):
        """未知参数"""
        with pytest.raises(ConfigError):
            RollPlaneParams.from_dict({'mass': 500.0})

    def test_non_positive_param(self):
        """参数必须为正"""
        with pytest.raises(ConfigError):
            RollPlaneParams.from_dict({'m': -1.0})

    def test_asymmetric_uncertainty(self):
        """左右不确定性不对称"""
        with pytest.raises(ValueError):
            build_roll_plane(RollPlaneParams(dk2=1000.0))


class TestExperimentPieces:
    """测试实验的组成部分"""

    def test_spec_validation(self):
        """非法设置"""
        with pytest.raises(ConfigError):
            ExperimentSpec(train_sets=0)
        with pytest.raises(ConfigError):
            ExperimentSpec(basis_choice='sin')

    def test_learn_label(self):
        """方法标签"""
        assert learn_label(LearnConfig(method='unconstrained')) == 'unconstrained'
        assert learn_label(LearnConfig(model_class='global', method='cost-mod')) == 'cost-mod-global'

    def test_simulation_deterministic(self, roll_plane):
        """相同种子相同轨迹"""
        spec = MultisineSpec(t_f=0.5)
        runs = [simulate_system(roll_plane, draw_inputs(spec, 1, np.random.default_rng(4))[0], 0.5, 1e-3)
                for _ in range(2)]
        np.testing.assert_array_equal(runs[0].outputs, runs[1].outputs)

    def test_true_model_has_zero_error(self, roll_plane):
        """真实参数模型的输出误差约为 0，先验模型不为 0"""
        basis = BasisLibrary.from_choice('cubic', 2)
        models = {
            PRIOR_ONLY: ExtendedModel.prior_only(roll_plane, basis),
            'true': ExtendedModel(roll_plane, true_uncertainty_model(RollPlaneParams(), basis,
                                                                     roll_plane.s_eta)),
        }
        inputs = draw_inputs(MultisineSpec(t_f=0.5), 3, np.random.default_rng(1))
        errors = evaluate_models(roll_plane, models, inputs, 0.5, 1e-3, batch_size=2)
        assert len(errors['true']) == 3
        assert max(errors['true']) < 1e-8
        assert min(errors[PRIOR_ONLY]) > max(errors['true'])

    def test_train_unconstrained(self, roll_plane, rng):
        """合并训练集上的无约束学习"""
        from certmodel.learning.dataset import LabeledDataset

        basis = BasisLibrary.from_choice('cubic', 2)
        states = rng.normal(size=(300, 8)) * 0.01
        s = states @ roll_plane.v_eta.T
        labels = roll_plane.eta_true(s)
        ds = LabeledDataset(np.zeros((300, 2)), states, labels, basis, roll_plane.v_eta)
        results, issues = train_models(roll_plane, [ds], [LearnConfig(method='unconstrained')])
        assert not issues
        assert results['unconstrained'].realized_cost < 1e-8 * float(np.sum(labels ** 2))

    def test_report_summary(self):
        """相对 prior-only 的均值比"""
        report = ExperimentReport(ExperimentSpec(), 'cubic',
                                  errors={PRIOR_ONLY: [2.0, 4.0], 'm': [1.0, np.inf]})
        summary = report.summary()
        assert summary[PRIOR_ONLY]['ratio_to_prior'] == pytest.approx(1.0)
        assert summary['m']['ratio_to_prior'] == pytest.approx(1.0 / 3.0)
        assert summary['m']['diverged'] == 1
        assert report.to_dict()['passed']


@pytest.mark.slow
@pytest.mark.integration
class TestRunExperiment:
    """测试小规模完整实验"""

    def test_small_experiment(self):
        """先验模型与无约束模型都给出误差"""
        spec = ExperimentSpec(train_sets=1, test_sets=3, t_f=3.0, dt=2e-3, transient_cut=0.5,
                              decimation=10, bins=5, batch_size=3)
        report = run_experiment(spec, [LearnConfig(method='unconstrained')])
        assert set(report.errors) == {PRIOR_ONLY, 'unconstrained'}
        assert all(len(v) == 3 for v in report.errors.values())
        assert np.all(np.isfinite(report.errors[PRIOR_ONLY]))
        assert 'l2_gain' in report.estimator_bounds
