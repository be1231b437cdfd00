"""
增广系统：状态 x_a = (x, ζ_1, …, ζ_r)，ζ_1 = η，ζ̇_j = ζ_{j+1}，ζ̇_r = η^(r)
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from certmodel.models.system import SystemModel


@dataclass(frozen=True, eq=False)
class AugmentedSystem:
    """
    增广系统矩阵

    行块划分 [n | d_n | n_η]，列块划分 [n | n_η | d_n]，d_n = (r − 1)·n_η
    """
    system: SystemModel
    r: int
    a_a: np.ndarray
    b_ua: np.ndarray
    s_ga: np.ndarray
    v_ga: np.ndarray
    b_omega_a: np.ndarray
    c_a: np.ndarray
    v_eta_a: np.ndarray

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def n_eta(self) -> int:
        return self.system.n_eta

    @property
    def d_n(self) -> int:
        return (self.r - 1) * self.n_eta

    @property
    def n_z(self) -> int:
        return self.n + self.r * self.n_eta

    @property
    def c_bar_1(self) -> np.ndarray:
        """[0  I_nη  0]：取出 η"""
        return np.hstack([np.zeros((self.n_eta, self.n)), np.eye(self.n_eta),
                          np.zeros((self.n_eta, self.d_n))])

    @property
    def c_bar_2(self) -> np.ndarray:
        """[I_n  0]：取出 x"""
        return np.hstack([np.eye(self.n), np.zeros((self.n, self.r * self.n_eta))])

    @property
    def c_bar(self) -> np.ndarray:
        """C̄_a = [C̄_1; C̄_2]"""
        return np.vstack([self.c_bar_1, self.c_bar_2])

    def to_dict(self) -> Dict[str, Any]:
        return {'r': self.r, 'n_z': self.n_z}


def augment(sys: SystemModel, r: int) -> AugmentedSystem:
    """
    构造增广系统

    Args:
        sys: 已知系统
        r: Taylor 阶数（≥ 1）

    Returns:
        AugmentedSystem
    """
    if r < 1:
        raise ValueError(f"Taylor 阶数 r 必须 ≥ 1: {r}")
    n, n_eta = sys.n, sys.n_eta
    d_n = (r - 1) * n_eta
    n_chain = r * n_eta

    a_a = np.zeros((n + n_chain, n + n_chain))
    a_a[:n, :n] = sys.a
    a_a[:n, n:n + n_eta] = sys.s_eta
    # 链式积分器：中间行块 [0 0 I_dn]
    a_a[n:n + d_n, n + n_eta:] = np.eye(d_n)

    b_omega_a = np.zeros((n + n_chain, sys.n_omega + n_eta))
    b_omega_a[:n, :sys.n_omega] = sys.b_omega
    b_omega_a[n + d_n:, sys.n_omega:] = np.eye(n_eta)

    def pad_rows(m):
        return np.vstack([m, np.zeros((n_chain, m.shape[1]))])

    def pad_cols(m):
        return np.hstack([m, np.zeros((m.shape[0], n_chain))])

    return AugmentedSystem(
        system=sys,
        r=r,
        a_a=a_a,
        b_ua=pad_rows(sys.b_u),
        s_ga=pad_rows(sys.s_g),
        v_ga=pad_cols(sys.v_g),
        b_omega_a=b_omega_a,
        c_a=pad_cols(sys.c),
        v_eta_a=pad_cols(sys.v_eta),
    )
