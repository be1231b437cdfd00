"""
测试 ellipsoids 模块
"""
import numpy as np
import pytest

from certmodel.ellipsoids.ellipsoid import Ellipsoid, check_subset, contains, regularize
from certmodel.ellipsoids.fitting import fit_bounding
from certmodel.ellipsoids.invariance import empirical_invariance
from certmodel.errors import NotPsdError
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import ExtendedModel, StabilityCertificate, UncertaintyModel
from certmodel.sdp.linalg import SymMatrix


class TestEllipsoid:
    """测试椭球基本操作"""

    def test_contains(self):
        """原点在内，边界点在内，外部点不在"""
        e = Ellipsoid.ball(2)
        assert contains(e, np.zeros(2))
        assert contains(e, np.array([1.0, 0.0]))
        assert not contains(e, np.array([2.0, 0.0]))

    def test_rejects_indefinite(self):
        """形状矩阵必须半正定"""
        with pytest.raises(NotPsdError):
            Ellipsoid(SymMatrix(np.diag([1.0, -1.0])))

    def test_samples_inside(self, rng):
        """内部 / 边界采样"""
        e = Ellipsoid(SymMatrix(np.diag([4.0, 0.25])))
        assert np.all(e.quadratic(e.sample_interior(500, rng)) <= 1.0 + 1e-9)
        np.testing.assert_allclose(e.quadratic(e.sample_boundary(50, rng)), 1.0, rtol=1e-9)

    def test_max_radius(self):
        """最长半轴"""
        assert Ellipsoid(SymMatrix(np.diag([4.0, 0.25]))).max_radius() == pytest.approx(2.0)

    def test_scaled(self):
        """缩放半轴"""
        assert Ellipsoid.ball(2).scaled(3.0).max_radius() == pytest.approx(3.0)

    def test_clip(self):
        """裁剪到椭球内"""
        e = Ellipsoid.ball(2)
        assert contains(e, e.clip(np.array([[3.0, 4.0]])))


class TestCheckSubset:
    """测试椭球包含关系"""

    def test_equal(self):
        """P = F = I"""
        result = check_subset(Ellipsoid.ball(2), Ellipsoid.ball(2))
        assert result['holds']
        assert result['gamma'] == pytest.approx(1.0)

    def test_smaller_inner(self):
        """P = 4I ⊂ F = I"""
        assert check_subset(Ellipsoid(SymMatrix(4.0 * np.eye(2))), Ellipsoid.ball(2))['holds']

    def test_larger_inner(self):
        """P = I/4 不在 F = I 内"""
        result = check_subset(Ellipsoid(SymMatrix(0.25 * np.eye(2))), Ellipsoid.ball(2))
        assert not result['holds']
        assert result['gamma_max'] == pytest.approx(0.25)

    def test_degenerate_outer(self):
        """退化外椭球在零方向上无界"""
        outer = Ellipsoid(SymMatrix(np.diag([1.0, 0.0])), degenerate=True)
        assert check_subset(Ellipsoid.ball(2), outer)['holds']


class TestFitBounding:
    """测试包络椭球拟合"""

    def test_unit_cross(self):
        """{±e₁, ±e₂} → F ≈ I"""
        pts = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        e = fit_bounding(pts, inflation=1.0)
        np.testing.assert_allclose(e.shape.array, np.eye(2), atol=1e-3)
        assert not e.degenerate

    def test_contains_all_points(self, rng):
        """所有点在内，且留出膨胀余量"""
        pts = rng.normal(size=(200, 3)) @ np.diag([1.0, 0.3, 2.0])
        e = fit_bounding(pts, inflation=1.05)
        assert np.all(e.quadratic(pts) <= 1.0 / 1.05 ** 2 + 1e-6)

    def test_covariance_method(self, rng):
        """协方差方法同样包含所有点"""
        pts = rng.normal(size=(100, 2))
        e = fit_bounding(pts, method='covariance')
        assert np.all(e.quadratic(pts) <= 1.0 + 1e-9)

    def test_sdp_not_larger_than_covariance(self, rng):
        """最小体积解不大于协方差解"""
        pts = rng.normal(size=(80, 2)) @ np.diag([1.0, 0.2])
        sdp = fit_bounding(pts, method='sdp')
        cov = fit_bounding(pts, method='covariance')
        assert sdp.volume_measure() <= cov.volume_measure() + 1e-4

    def test_scaling(self, rng):
        """点集放大 c 倍，形状缩小 c² 倍"""
        pts = rng.normal(size=(40, 2))
        base = fit_bounding(pts)
        scaled = fit_bounding(3.0 * pts)
        np.testing.assert_allclose(scaled.shape.array * 9.0, base.shape.array, rtol=1e-4, atol=1e-6)

    def test_all_zero(self):
        """全零点集给出球"""
        e = fit_bounding(np.zeros((5, 2)), fallback_radius=2.0)
        np.testing.assert_allclose(e.shape.array, np.eye(2) / 4.0)

    def test_line_is_degenerate(self):
        """点落在直线上"""
        t = np.linspace(-1.0, 1.0, 21)[:, None]
        e = fit_bounding(np.hstack([t, 2.0 * t]))
        assert e.degenerate
        assert e.rank == 1

    def test_regularize(self):
        """正则化后每个方向有界"""
        t = np.linspace(-1.0, 1.0, 21)[:, None]
        e = regularize(fit_bounding(np.hstack([t, np.zeros_like(t)])), radius=5.0)
        assert e.rank == 2
        assert e.max_radius() == pytest.approx(5.0)

    def test_bad_inflation(self):
        """膨胀系数 < 1"""
        with pytest.raises(ValueError):
            fit_bounding(np.eye(2), inflation=0.5)


def _certified(sys) -> ExtendedModel:
    unc = UncertaintyModel.zero(sys.s_eta, sys.l, BasisLibrary.empty(1))
    return ExtendedModel(sys, unc, StabilityCertificate(np.eye(1), 'invariant-set'))


class TestEmpiricalInvariance:
    """测试不变集仿真检验"""

    def test_stable_scalar(self, scalar_system, rng):
        """ẋ = −x + u，|u| ≤ 0.1，单位区间不变"""
        report = empirical_invariance(_certified(scalar_system(-1.0)), Ellipsoid.ball(1, 0.1), trials=6,
                                      t_f=1.0, dt=0.01, rng=rng)
        assert report.passed
        assert report.max_level <= 1.0 + 1e-6

    def test_unstable_scalar(self, scalar_system, rng):
        """ẋ = x + u 离开不变集"""
        report = empirical_invariance(_certified(scalar_system(1.0)), Ellipsoid.ball(1, 0.1), trials=4,
                                      t_f=1.0, dt=0.01, rng=rng)
        assert not report.passed
        assert report.max_level > 1.0

    def test_zero_trials(self, scalar_system):
        """trials = 0 为空检验"""
        report = empirical_invariance(_certified(scalar_system(-1.0)), Ellipsoid.ball(1), trials=0)
        assert report.vacuous
        assert report.passed

    def test_missing_certificate(self, scalar_system):
        """缺少证书"""
        model = _certified(scalar_system(-1.0))
        with pytest.raises(ValueError):
            empirical_invariance(ExtendedModel(model.system, model.uncertainty), Ellipsoid.ball(1))
