"""
测试 verify 模块
"""
import numpy as np
import pytest

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.learning.config import LearnResult
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import ExtendedModel, StabilityCertificate, UncertaintyModel
from certmodel.verify.certificate import check_invariant_set, check_iss, verify_result
from certmodel.verify.simulation import iss_bound_simulation, sample_lyapunov_decrease


def zero_theta(sys) -> UncertaintyModel:
    return UncertaintyModel.zero(sys.s_eta, sys.l, BasisLibrary.empty(sys.n_veta))


class TestCheckIss:
    """测试 ISS 条件复核"""

    def test_stable(self, scalar_system):
        """A = −1, P = 1"""
        sys = scalar_system(-1.0)
        cert = check_iss(sys, zero_theta(sys), np.eye(1))
        assert cert.passed
        assert cert.kind == 'iss'

    def test_unstable(self, scalar_system):
        """A = 1 没有 ISS 证书"""
        sys = scalar_system(1.0)
        assert not check_iss(sys, zero_theta(sys), np.eye(1)).passed

    def test_learned_theta_stabilizes(self, scalar_system):
        """A = 1 加 Θ_l = −2 后可证"""
        sys = scalar_system(1.0)
        theta = zero_theta(sys).replace(theta_l=np.array([[-2.0]]))
        assert check_iss(sys, theta, np.eye(1)).passed

    def test_negative_p(self, scalar_system):
        """篡改后的 P 不是正定的"""
        sys = scalar_system(-1.0)
        cert = check_iss(sys, zero_theta(sys), -np.eye(1))
        assert not cert.passed
        assert 'P>0' in cert.residuals

    def test_recorded_margin_ignored(self, scalar_system):
        """证书里篡改的 stability_margin 不能放宽阈值"""
        sys = scalar_system(1.0)
        cert = check_iss(sys, zero_theta(sys), np.eye(1), {'stability_margin': -1e9})
        assert not cert.passed
        assert cert.residuals['delta'].value == pytest.approx(2.0)
        assert cert.residuals['delta'].tolerance < 0


class TestCheckInvariantSet:
    """测试不变集条件复核"""

    def test_stable(self, scalar_system):
        """|u| ≤ 0.1 时单位区间不变且在 F 内"""
        sys = scalar_system(-1.0)
        cert = check_invariant_set(sys, zero_theta(sys), np.eye(1), {}, Ellipsoid.ball(1, 2.0),
                                   Ellipsoid.ball(1, 0.1))
        assert cert.passed
        assert cert.scalars['gamma'] == pytest.approx(1.0)

    def test_not_inside_f(self, scalar_system):
        """不变集超出 F"""
        sys = scalar_system(-1.0)
        cert = check_invariant_set(sys, zero_theta(sys), np.eye(1), {}, Ellipsoid.ball(1, 0.5),
                                   Ellipsoid.ball(1, 0.1))
        assert not cert.passed
        assert not cert.residuals['subset'].ok


class TestVerifyResult:
    """测试按证书类型分派"""

    def test_no_certificate(self, scalar_system):
        """无约束结果没有证书"""
        sys = scalar_system(-1.0)
        result = LearnResult(zero_theta(sys), 'unconstrained', None, None, None, 0.0)
        with pytest.raises(ValueError):
            verify_result(sys, result)

    def test_invariant_needs_f(self, scalar_system):
        """不变集证书需要 F"""
        sys = scalar_system(-1.0)
        cert = StabilityCertificate(np.eye(1), 'invariant-set')
        result = LearnResult(zero_theta(sys), 'cost-mod', 'local', cert, 1.0, 0.5)
        with pytest.raises(ValueError):
            verify_result(sys, result)

    def test_iss_dispatch(self, scalar_system):
        """ISS 证书"""
        sys = scalar_system(-1.0)
        cert = StabilityCertificate(np.eye(1), 'iss')
        result = LearnResult(zero_theta(sys), 'cost-mod', 'global', cert, 1.0, 0.5)
        assert verify_result(sys, result).passed


class TestSampling:
    """测试采样与仿真检验"""

    def test_lyapunov_decrease(self, scalar_system, rng):
        """边界上 V̇ 的上界非正"""
        sys = scalar_system(-1.0)
        report = sample_lyapunov_decrease(sys, zero_theta(sys), np.eye(1), {}, Ellipsoid.ball(1, 0.1),
                                          samples=200, rng=rng)
        assert report.passed
        assert report.max_vdot <= 0.0

    def test_lyapunov_increase(self, scalar_system, rng):
        """A = 1 时上界为正"""
        sys = scalar_system(1.0)
        report = sample_lyapunov_decrease(sys, zero_theta(sys), np.eye(1), {}, None, samples=50, rng=rng)
        assert not report.passed

    def test_iss_simulation(self, scalar_system, rng):
        """零输入衰减、有界输入有界"""
        sys = scalar_system(-1.0)
        model = ExtendedModel(sys, zero_theta(sys), StabilityCertificate(np.eye(1), 'iss'))
        report = iss_bound_simulation(model, trials=3, t_f=2.0, dt=0.01, rng=rng)
        assert report.passed
        assert max(report.decay_ratios) < 0.5

    def test_iss_needs_iss_certificate(self, scalar_system):
        """不变集证书不能用于 ISS 检验"""
        sys = scalar_system(-1.0)
        model = ExtendedModel(sys, zero_theta(sys), StabilityCertificate(np.eye(1), 'invariant-set'))
        with pytest.raises(ValueError):
            iss_bound_simulation(model, trials=1)
