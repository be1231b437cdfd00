"""
测试 models 模块
"""
import numpy as np
import pytest

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import DimensionMismatchError
from certmodel.models.basis import BASIS_CHOICES, BasisLibrary
from certmodel.models.extended import ExtendedModel, StabilityCertificate, UncertaintyModel, eval_extended_rhs
from certmodel.models.lipschitz import estimate_lipschitz, validate_lipschitz
from certmodel.models.nonlinear import LinearMap, Polynomial, ScaledTanh, ZeroMap, nonlinearity_from_dict
from certmodel.models.system import SystemModel, eval_system_rhs, known_part


class TestSystemModel:
    """测试系统模型构造与右端"""

    def test_dimensions(self):
        """维度推断"""
        sys = SystemModel.create(a=np.eye(3), b_u=np.ones((3, 2)), c=np.ones((1, 3)),
                                 s_eta=np.ones((3, 1)), v_eta=np.ones((2, 3)),
                                 eta_true=ZeroMap(2, 1))
        assert (sys.n, sys.l, sys.m) == (3, 2, 1)
        assert (sys.n_eta, sys.n_veta, sys.n_g) == (1, 2, 0)

    def test_dimension_mismatch(self):
        """C 列数不等于 n"""
        with pytest.raises(DimensionMismatchError):
            SystemModel.create(a=np.eye(2), b_u=np.zeros((2, 1)), c=np.ones((1, 3)))

    def test_zero_state_zero_rhs(self, roll_plane):
        """原点是平衡点"""
        rhs = eval_system_rhs(roll_plane, np.zeros(8), np.zeros(2))
        np.testing.assert_allclose(rhs, np.zeros(8))

    def test_scalar_rhs(self):
        """A = −1, B = 1, x = 2, u = 3 → 1"""
        sys = SystemModel.create(a=[[-1.0]], b_u=[[1.0]], c=[[1.0]])
        assert eval_system_rhs(sys, np.array([2.0]), np.array([3.0]))[0] == pytest.approx(1.0)

    def test_missing_eta(self):
        """有不确定性通道但没有 η"""
        sys = SystemModel.create(a=[[-1.0]], b_u=[[1.0]], c=[[1.0]], s_eta=[[1.0]], v_eta=[[1.0]])
        with pytest.raises(ValueError):
            eval_system_rhs(sys, np.array([1.0]), np.array([0.0]))

    def test_batch(self, roll_plane, rng):
        """批量求值与逐点求值一致"""
        x = rng.normal(size=(5, 8)) * 0.01
        u = rng.normal(size=(5, 2)) * 0.01
        batch = eval_system_rhs(roll_plane, x, u)
        single = np.stack([eval_system_rhs(roll_plane, x[i], u[i]) for i in range(5)])
        np.testing.assert_allclose(batch, single)

    def test_output_with_noise(self):
        """y = C x + D_ν ν"""
        sys = SystemModel.create(a=[[-1.0]], b_u=[[1.0]], c=[[2.0]])
        assert sys.output(np.array([1.0]), np.array([0.5]))[0] == pytest.approx(2.5)


class TestExtendedModel:
    """测试扩展模型"""

    def test_scalar_rhs(self):
        """A = 1, Θ_l = −2, x = 1 → −1"""
        sys = SystemModel.create(a=[[1.0]], b_u=np.zeros((1, 0)), c=[[1.0]],
                                 s_eta=[[1.0]], v_eta=[[1.0]])
        unc = UncertaintyModel([[-2.0]], np.zeros((1, 0)), np.zeros((1, 0)), [[1.0]],
                               BasisLibrary.empty(1))
        model = ExtendedModel(sys, unc)
        assert eval_extended_rhs(model, np.array([1.0]), np.zeros(0))[0] == pytest.approx(-1.0)

    def test_zero_theta_is_known_part(self, roll_plane, rng):
        """θ = 0 时等于已知部分"""
        model = ExtendedModel.prior_only(roll_plane, BasisLibrary.from_choice('cubic', 2))
        x = rng.normal(size=(4, 8)) * 0.01
        u = rng.normal(size=(4, 2)) * 0.01
        np.testing.assert_allclose(eval_extended_rhs(model, x, u), known_part(roll_plane, x, u))

    def test_basis_dimension_mismatch(self, roll_plane):
        """基函数输入维度与 n_vη 不一致"""
        with pytest.raises(DimensionMismatchError):
            ExtendedModel.prior_only(roll_plane, BasisLibrary.from_choice('cubic', 3))

    def test_certificate_dimension(self, roll_plane):
        """证书维度与状态维度不一致"""
        cert = StabilityCertificate(np.eye(3), 'iss')
        unc = UncertaintyModel.zero(roll_plane.s_eta, roll_plane.l, BasisLibrary.empty(2))
        with pytest.raises(DimensionMismatchError):
            ExtendedModel(roll_plane, unc, cert)

    def test_unknown_certificate_kind(self):
        """未知证书类型"""
        with pytest.raises(ValueError):
            StabilityCertificate(np.eye(1), 'lyapunov')


class TestBasisLibrary:
    """测试基函数库"""

    def test_choices(self):
        """三种组合的维度"""
        assert [BasisLibrary.from_choice(c, 2).n_h for c in BASIS_CHOICES] == [2, 4, 6]

    def test_values(self):
        """quad + exp + cubic 求值"""
        basis = BasisLibrary.from_choice('quad+exp+cubic', 1)
        np.testing.assert_allclose(basis(np.array([1.0])), [1.0, np.e - 1.0, 1.0])

    def test_cubic_lipschitz(self):
        """三次块在半径 r 上为 3r²"""
        assert BasisLibrary.from_choice('cubic', 2).lipschitz_constants(2.0) == (pytest.approx(12.0), 0.0)

    def test_needs_radius(self):
        """非全局 Lipschitz 的块需要半径"""
        with pytest.raises(ValueError):
            BasisLibrary.from_choice('cubic', 2).lipschitz_constants()

    def test_user_constants_win(self):
        """用户常数优先"""
        basis = BasisLibrary(2, ('cubic',), lipschitz=(5.0, 1.0))
        assert basis.lipschitz_constants(10.0) == (5.0, 1.0)

    def test_unknown_block(self):
        """未知块"""
        with pytest.raises(ValueError):
            BasisLibrary(2, ('sin',))


class TestNonlinearities:
    """测试已知非线性"""

    def test_polynomial_zero_at_origin(self):
        """原点为零"""
        poly = Polynomial(2, {1: 0.5, 3: 2.0})
        np.testing.assert_allclose(poly(np.zeros(2)), np.zeros(2))

    def test_polynomial_rejects_constant(self):
        """幂次 0 被拒绝"""
        with pytest.raises(ValueError):
            Polynomial(1, {0: 1.0})

    def test_tanh_lipschitz(self):
        """c · tanh 的常数"""
        assert ScaledTanh(2, 3.0).lipschitz() == (3.0, 0.0)

    @pytest.mark.parametrize('nl', [ZeroMap(2, 3), ScaledTanh(2, 1.5), Polynomial(2, {1: 1.0, 3: -0.2}),
                                    LinearMap([[1.0, 2.0]])])
    def test_from_dict(self, nl):
        """按 kind 反序列化"""
        assert nonlinearity_from_dict(nl.to_dict()) == nl

    def test_unknown_kind(self):
        """未知类型"""
        with pytest.raises(ValueError):
            nonlinearity_from_dict({'kind': 'spline'})


class TestLipschitzEstimation:
    """测试 Lipschitz 常数估计"""

    def test_identity(self, rng):
        """f(s, u) = s → (1.2, 0)"""
        l_x, l_u = estimate_lipschitz(lambda s, u: s, Ellipsoid.ball(2), Ellipsoid.ball(1), rng=rng)
        assert l_x == pytest.approx(1.2, rel=1e-6)
        assert l_u == pytest.approx(0.0)

    def test_cubic(self, rng):
        """s³ 在 [−1, 1] 上约为 3.6"""
        l_x, _ = estimate_lipschitz(lambda s, u: s ** 3, Ellipsoid.ball(1), Ellipsoid.ball(1), rng=rng)
        assert 3.3 < l_x <= 3.6 + 1e-9

    def test_zero(self, rng):
        """f = 0 → (0, 0)"""
        assert estimate_lipschitz(lambda s, u: np.zeros_like(s), Ellipsoid.ball(2), Ellipsoid.ball(1),
                                  rng=rng) == (0.0, 0.0)

    def test_too_few_samples(self):
        """采样数不足"""
        with pytest.raises(ValueError):
            estimate_lipschitz(lambda s, u: s, Ellipsoid.ball(1), Ellipsoid.ball(1), samples=10)

    def test_validate(self, rng):
        """估计值通过独立验证"""
        f = lambda s, u: np.tanh(s)  # noqa: E731
        l_x, l_u = estimate_lipschitz(f, Ellipsoid.ball(2), Ellipsoid.ball(1), rng=rng)
        assert validate_lipschitz(f, l_x, l_u, Ellipsoid.ball(2), Ellipsoid.ball(1), rng=rng) <= 0.0
