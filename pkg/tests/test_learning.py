"""
测试 learning 模块
"""
import numpy as np
import pytest

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import ConfigError, DimensionMismatchError, EmptyDatasetError, NotHurwitzError
from certmodel.learning import (LabeledDataset, LearnConfig, build_data_matrix, cost, learn,
                                learn_constraint_mod, learn_cost_mod, learn_scp, learn_unconstrained,
                                lift_uncertainty)
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import UncertaintyModel

SMALL_GRIDS = {
    'l_hx_bar': [1.0],
    'beta': [0.1],
    'mu1': [1.0],
    'mu2': [0.1, 1.0, 10.0],
    'mu3': [1.0],
    'gamma_bar': [1.0, 10.0],
}


def global_config(method: str, **kwargs) -> LearnConfig:
    return LearnConfig(model_class='global', method=method, grids=dict(SMALL_GRIDS), **kwargs)


class TestLearnConfig:
    """测试学习配置校验"""

    def test_local_requires_sets(self):
        """local 模型类需要 F 与 U"""
        with pytest.raises(ConfigError):
            LearnConfig(model_class='local', method='cost-mod')

    def test_unconstrained_needs_no_sets(self):
        """无约束学习不需要椭球"""
        assert LearnConfig(model_class='local', method='unconstrained').label == 'unconstrained'

    def test_scp_label(self):
        """SCP 标签包含初始化方法"""
        cfg = global_config('scp', scp_init='constraint-mod')
        assert cfg.label == 'scp(constraint-mod)'

    def test_unknown_method(self):
        """未知方法"""
        with pytest.raises(ConfigError):
            LearnConfig(model_class='global', method='ridge')

    def test_non_positive_grid(self):
        """网格必须为正"""
        with pytest.raises(ConfigError):
            LearnConfig(model_class='global', grids={'mu1': [0.0, 1.0]})

    def test_fixed_scalar_wins(self):
        """固定值优先于网格"""
        cfg = LearnConfig(model_class='global', hyper={'mu1': 2.0}, grids={'mu1': [1.0, 3.0]})
        assert cfg.grid('mu1') == [2.0]


class TestDataMatrix:
    """测试数据矩阵与代价"""

    def test_unit_samples(self):
        """两个单位样本 → D = I"""
        ds = LabeledDataset(inputs=np.zeros((2, 0)), states=np.array([[1.0], [0.0]]),
                            labels=np.array([[0.0], [1.0]]), basis=BasisLibrary.empty(1),
                            v_eta=np.array([[1.0]]))
        dm = build_data_matrix(ds)
        np.testing.assert_allclose(dm.d.array, np.eye(2))
        np.testing.assert_allclose(dm.factor.T @ dm.factor, np.eye(2), atol=1e-12)

    def test_zero_theta_cost(self, scalar_dataset):
        """θ = 0 时 J = Σ‖η̂‖²"""
        ds = scalar_dataset(0.7)
        theta = UncertaintyModel.zero(np.eye(1), ds.l, ds.basis)
        assert cost(theta, build_data_matrix(ds)) == pytest.approx(float(np.sum(ds.labels ** 2)))

    def test_empty(self):
        """空数据集"""
        ds = LabeledDataset(inputs=np.zeros((0, 1)), states=np.zeros((0, 1)), labels=np.zeros((0, 1)),
                            basis=BasisLibrary.empty(1), v_eta=np.array([[1.0]]))
        with pytest.raises(EmptyDatasetError):
            build_data_matrix(ds)

    def test_sample_count_mismatch(self):
        """样本数不一致"""
        with pytest.raises(DimensionMismatchError):
            LabeledDataset(inputs=np.zeros((3, 1)), states=np.zeros((2, 1)), labels=np.zeros((2, 1)),
                           basis=BasisLibrary.empty(1), v_eta=np.array([[1.0]]))

    def test_pool(self, scalar_dataset):
        """合并数据集"""
        pooled = LabeledDataset.pool([scalar_dataset(1.0, count=10), scalar_dataset(1.0, count=5, seed=1)])
        assert len(pooled) == 15

    def test_lift_keeps_rhs(self):
        """提升后 S_ηl Θ 不变"""
        s_eta = np.array([[0.0], [2.0]])
        model = UncertaintyModel([[0.5]], np.zeros((1, 0)), np.zeros((1, 0)), s_eta, BasisLibrary.empty(1))
        lifted = lift_uncertainty(model, s_eta)
        np.testing.assert_allclose(lifted.s_eta_l @ lifted.theta_l, s_eta @ model.theta_l)


class TestUnconstrained:
    """测试无约束最小二乘"""

    def test_recovers_linear(self, scalar_system, scalar_dataset):
        """η = −2x → Θ_l = −2"""
        result = learn_unconstrained(scalar_dataset(-2.0), scalar_system(1.0).s_eta)
        assert result.model.theta_l[0, 0] == pytest.approx(-2.0, abs=1e-8)
        assert result.model.b_l[0, 0] == pytest.approx(0.0, abs=1e-8)
        assert result.realized_cost == pytest.approx(0.0, abs=1e-10)
        assert not result.certified

    def test_with_basis(self, rng):
        """三次基函数精确拟合"""
        states = rng.uniform(-1.0, 1.0, size=(100, 1))
        ds = LabeledDataset(inputs=np.zeros((100, 0)), states=states,
                            labels=0.5 * states - 3.0 * states ** 3,
                            basis=BasisLibrary.from_choice('cubic', 1), v_eta=np.array([[1.0]]))
        result = learn_unconstrained(ds, np.eye(1))
        assert result.model.theta_l[0, 0] == pytest.approx(0.5, abs=1e-8)
        assert result.model.theta_n[0, 0] == pytest.approx(-3.0, abs=1e-8)

    def test_cost_labels(self, scalar_dataset):
        """提升标签上的 J 按 ‖S_η‖² 放大，结果记录所用标签空间"""
        s_eta = np.array([[0.0], [2.0]])
        ds = scalar_dataset(0.7)
        assert learn_unconstrained(ds, s_eta).cost_labels == 'raw'
        lifted = learn_unconstrained(ds, s_eta, lifted=True)
        assert lifted.cost_labels == 'lifted'
        assert lifted.summary()['cost_labels'] == 'lifted'
        j_raw = cost(UncertaintyModel.zero(s_eta, ds.l, ds.basis), build_data_matrix(ds))
        j_lifted = cost(UncertaintyModel.zero(np.eye(2), ds.l, ds.basis), build_data_matrix(ds, label_map=s_eta))
        assert j_lifted == pytest.approx(4.0 * j_raw)


@pytest.mark.slow
class TestCostMod:
    """测试代价修改法"""

    def test_non_binding_unstable_prior(self, scalar_system, scalar_dataset):
        """A = 1, η = −2x：真值可被证书接受"""
        result = learn_cost_mod(scalar_system(1.0), scalar_dataset(-2.0), global_config('cost-mod'))
        assert result.certified
        assert result.certificate.kind == 'iss'
        assert result.model.theta_l[0, 0] == pytest.approx(-2.0, abs=1e-2)
        assert result.bound_holds()

    def test_non_binding_stable_prior(self, scalar_system, scalar_dataset):
        """A = −1, η = 0.5x"""
        result = learn_cost_mod(scalar_system(-1.0), scalar_dataset(0.5), global_config('cost-mod'))
        assert result.model.theta_l[0, 0] == pytest.approx(0.5, abs=1e-2)

    def test_lifted_model(self, scalar_system, scalar_dataset):
        """结果使用 S_ηl = I"""
        result = learn_cost_mod(scalar_system(-1.0), scalar_dataset(0.5), global_config('cost-mod'))
        np.testing.assert_allclose(result.model.s_eta_l, np.eye(1))

    def test_local_class(self, scalar_system, scalar_dataset):
        """local 模型类给出不变集证书"""
        cfg = LearnConfig(model_class='local', method='cost-mod', grids=dict(SMALL_GRIDS),
                          f_set=Ellipsoid.ball(1, 1.2), u_set=Ellipsoid.ball(1, 0.02))
        result = learn_cost_mod(scalar_system(-1.0), scalar_dataset(0.5), cfg)
        assert result.certificate.kind == 'invariant-set'
        assert result.bound_holds()


@pytest.mark.slow
class TestConstraintMod:
    """测试约束修改法"""

    def test_unstable_prior_rejected(self, scalar_system, scalar_dataset):
        """A 不是 Hurwitz 的"""
        with pytest.raises(NotHurwitzError):
            learn_constraint_mod(scalar_system(1.0), scalar_dataset(-2.0), global_config('constraint-mod'))

    def test_binding_constraint(self, scalar_system, scalar_dataset):
        """A = −1, η = 2x：无约束解不稳定，证书约束起作用"""
        sys = scalar_system(-1.0)
        ds = scalar_dataset(2.0)
        result = learn_constraint_mod(sys, ds, global_config('constraint-mod'))
        oracle = learn_unconstrained(ds, sys.s_eta)
        assert result.model.theta_l[0, 0] < 1.0
        assert result.realized_cost > oracle.realized_cost
        assert result.certified

    def test_dispatch(self, scalar_system, scalar_dataset):
        """learn 按方法分派"""
        result = learn(scalar_system(-1.0), scalar_dataset(0.5), global_config('constraint-mod'))
        assert result.method == 'constraint-mod'


@pytest.mark.slow
class TestScp:
    """测试交替优化"""

    def test_from_cost_mod(self, scalar_system, scalar_dataset):
        """从代价修改法出发代价不增"""
        sys = scalar_system(-1.0)
        ds = scalar_dataset(0.5)
        init = learn_cost_mod(sys, ds, global_config('cost-mod'))
        result = learn_scp(sys, ds, global_config('scp', scp_max_iters=5), init)
        assert result.method == 'scp'
        assert result.certificate.kind == 'iss'
        assert result.realized_cost <= init.realized_cost + 1e-6 * (1.0 + init.realized_cost)
        assert result.diagnostics['init_method'] == 'cost-mod'
        assert not result.diagnostics['non_convex_init']

    def test_non_convex_init_flagged(self, scalar_system, scalar_dataset):
        """无约束初始化被标记"""
        sys = scalar_system(-1.0)
        ds = scalar_dataset(0.5)
        init = learn_unconstrained(ds, sys.s_eta, lifted=True)
        result = learn_scp(sys, ds, global_config('scp', scp_max_iters=3), init)
        assert result.diagnostics['non_convex_init']
