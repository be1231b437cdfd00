"""
测试 sdp 模块
"""
import numpy as np
import pytest

from certmodel.errors import DimensionMismatchError, NotPsdError, SingularBlockError
from certmodel.sdp.linalg import (SymMatrix, is_hurwitz, max_eig, min_eig, psd_factor, schur_reduce,
                                  solve_lyapunov)
from certmodel.sdp.problem import LmiProblem, solve


class TestSymMatrix:
    """测试对称矩阵包装"""

    def test_rejects_non_square(self):
        """非方阵"""
        with pytest.raises(DimensionMismatchError):
            SymMatrix(np.zeros((2, 3)))

    def test_rejects_asymmetric(self):
        """非对称"""
        with pytest.raises(ValueError):
            SymMatrix([[1.0, 2.0], [0.0, 1.0]])

    def test_rejects_nan(self):
        """NaN"""
        with pytest.raises(ValueError):
            SymMatrix([[np.nan, 0.0], [0.0, 1.0]])

    def test_identity(self):
        """单位阵"""
        eye = SymMatrix.identity(3)
        assert eye.dim == 3
        np.testing.assert_array_equal(eye.array, np.eye(3))


class TestEigenvalues:
    """测试特征值工具"""

    def test_min_eig_diagonal(self):
        """对角阵"""
        assert min_eig(np.diag([1.0, -2.0])) == pytest.approx(-2.0)

    def test_min_eig_identity(self):
        """单位阵"""
        assert min_eig(np.eye(3)) == pytest.approx(1.0)

    def test_min_eig_singular(self):
        """奇异半正定"""
        assert min_eig([[4.0, 2.0], [2.0, 1.0]]) == pytest.approx(0.0, abs=1e-12)

    def test_empty(self):
        """空矩阵"""
        assert min_eig(np.zeros((0, 0))) == float('inf')
        assert max_eig(np.zeros((0, 0))) == float('-inf')


class TestPsdFactor:
    """测试半正定因子分解"""

    def test_identity(self):
        """I 的因子是 I"""
        np.testing.assert_allclose(psd_factor(np.eye(2)), np.eye(2))

    def test_rank_one(self):
        """秩一矩阵给出 1×2 因子"""
        factor = psd_factor([[4.0, 2.0], [2.0, 1.0]])
        assert factor.shape == (1, 2)
        np.testing.assert_allclose(factor, [[2.0, 1.0]], atol=1e-10)

    def test_zero_matrix(self):
        """零矩阵没有行"""
        assert psd_factor(np.zeros((3, 3))).shape == (0, 3)

    def test_reconstructs(self, rng):
        """D̃ᵀD̃ = D"""
        x = rng.normal(size=(20, 4))
        d = x.T @ x
        factor = psd_factor(d)
        np.testing.assert_allclose(factor.T @ factor, d, rtol=1e-10, atol=1e-10)

    def test_indefinite(self):
        """不定矩阵报错"""
        with pytest.raises(NotPsdError):
            psd_factor(np.diag([1.0, -1.0]))


class TestSchurReduce:
    """测试 Schur 补"""

    def test_zero_coupling(self):
        """B = 0 时返回 A"""
        result = schur_reduce(np.eye(2), np.zeros((2, 2)), np.eye(2))
        np.testing.assert_allclose(result.array, np.eye(2))

    def test_scalar(self):
        """标量情形"""
        assert schur_reduce([[1.0]], [[1.0]], [[1.0]]).array[0, 0] == pytest.approx(0.0)
        assert schur_reduce([[2.0]], [[1.0]], [[2.0]]).array[0, 0] == pytest.approx(1.5)

    def test_singular_block(self):
        """C 不正定"""
        with pytest.raises(SingularBlockError):
            schur_reduce([[1.0]], [[1.0]], [[0.0]])

    def test_shape_mismatch(self):
        """维度不一致"""
        with pytest.raises(DimensionMismatchError):
            schur_reduce(np.eye(2), np.zeros((3, 2)), np.eye(2))


class TestLyapunov:
    """测试 Hurwitz 判定与 Lyapunov 方程"""

    def test_is_hurwitz(self):
        """稳定 / 不稳定"""
        assert is_hurwitz([[-1.0]])
        assert not is_hurwitz([[0.5, 0.0], [0.0, -1.0]])

    def test_solve_lyapunov(self):
        """AᵀP + PA = −I"""
        a = np.array([[-1.0, 2.0], [0.0, -3.0]])
        p = solve_lyapunov(a).array
        np.testing.assert_allclose(a.T @ p + p @ a, -np.eye(2), atol=1e-10)
        assert min_eig(p) > 0


class TestLmiProblem:
    """测试 LMI 问题求解"""

    def test_minimize_two_by_two(self):
        """min t s.t. [[t, 1], [1, t]] ⪰ 0 → t = 1"""
        prob = LmiProblem('two-by-two')
        t = prob.add_variable('t')
        prob.add_lmi('main', t * np.eye(2) + np.array([[0.0, 1.0], [1.0, 0.0]]), 'psd')
        prob.minimize(t)
        sol = solve(prob)
        assert sol.ok
        assert sol.value('t') == pytest.approx(1.0, abs=1e-5)

    def test_trace_bound(self):
        """min tr(W) s.t. W ⪰ diag(2, 3) → 5"""
        prob = LmiProblem('trace')
        w = prob.add_variable('W', (2, 2), symmetric=True)
        prob.add_lmi('lower', w - np.diag([2.0, 3.0]), 'psd')
        prob.minimize(w[0, 0] + w[1, 1])
        sol = solve(prob)
        assert sol.ok
        assert sol.objective == pytest.approx(5.0, abs=1e-5)

    def test_scalar_lyapunov_feasible(self):
        """A = −1 存在 P ≻ 0"""
        prob = LmiProblem('lyapunov')
        p = prob.add_variable('P', (1, 1), symmetric=True)
        prob.add_lmi('P>0', p, 'pd')
        prob.add_lmi('decrease', -2.0 * p, 'nd')
        prob.add_lmi('P<=1', p - np.eye(1), 'nsd')
        sol = solve(prob)
        assert sol.ok
        assert sol.value('P')[0, 0] > 0
        assert all(r.violation <= 1e-6 for r in sol.residuals.values())

    def test_unstable_lyapunov_infeasible(self):
        """A = 1 没有 Lyapunov 证书"""
        prob = LmiProblem('unstable')
        p = prob.add_variable('P', (1, 1), symmetric=True)
        prob.add_lmi('P>=I', p - np.eye(1), 'psd')
        prob.add_lmi('decrease', 2.0 * p, 'nd')
        sol = solve(prob)
        assert not sol.ok
        assert sol.status == 'infeasible'

    def test_duplicate_variable(self):
        """重复变量名"""
        prob = LmiProblem()
        prob.add_variable('x')
        with pytest.raises(ValueError):
            prob.add_variable('x')

    def test_unknown_sense(self):
        """未知约束方向"""
        prob = LmiProblem()
        x = prob.add_variable('x')
        with pytest.raises(ValueError):
            prob.add_lmi('c', x, 'lt')

    def test_non_square(self):
        """非方阵约束"""
        prob = LmiProblem()
        x = prob.add_variable('x', (2, 3))
        with pytest.raises(DimensionMismatchError):
            prob.add_lmi('c', x, 'psd')
