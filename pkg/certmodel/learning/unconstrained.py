"""
无约束基线：最小二乘拟合，不提供稳定性证书
"""

import logging
from typing import Optional

import numpy as np

from certmodel.learning.config import LearnResult
from certmodel.learning.dataset import DataMatrix, LabeledDataset, build_data_matrix, cost
from certmodel.models.extended import UncertaintyModel

logger = logging.getLogger(__name__)


def solve_normal_equations(dm: DataMatrix) -> np.ndarray:
    """
    T = [Φ_a  −I  Φ_b] 下 tr(T D Tᵀ) 的全局最小点 Φ = D_LF D_FF⁺（最小范数解）

    Returns:
        Φ = [Θ_l  B_l  Θ_n]（n_label × (dim − n_label)）
    """
    n_veta, l, n_label, n_h = dm.sizes
    d = dm.d.array
    lab = np.arange(n_veta + l, n_veta + l + n_label)
    feat = np.setdiff1d(np.arange(dm.dim), lab)
    d_ff = d[np.ix_(feat, feat)]
    d_lf = d[np.ix_(lab, feat)]
    return d_lf @ np.linalg.pinv(d_ff, rcond=1e-12, hermitian=True)


def learn_unconstrained(ds: LabeledDataset, s_eta: np.ndarray, lifted: bool = False,
                        dm: Optional[DataMatrix] = None) -> LearnResult:
    """
    直接最小化 J（无稳定性约束）

    Args:
        ds: 数据集
        s_eta: 系统的 S_η
        lifted: True 时在提升标签 S_η η̂ 上拟合（S_ηl = I），否则 S_ηl = S_η
        dm: 已组装的数据矩阵（可选）

    Returns:
        LearnResult（certificate 为 None）
    """
    s_eta = np.atleast_2d(np.asarray(s_eta, dtype=float))
    if dm is None:
        dm = build_data_matrix(ds, label_map=s_eta if lifted else None)
    n_veta, l, n_label, n_h = dm.sizes
    phi = solve_normal_equations(dm)
    theta_l = phi[:, :n_veta]
    b_l = phi[:, n_veta:n_veta + l]
    theta_n = phi[:, n_veta + l:]

    s_eta_l = np.eye(s_eta.shape[0]) if lifted else s_eta
    model = UncertaintyModel(theta_l, b_l, theta_n, s_eta_l, ds.basis)
    realized = cost(model, dm)
    logger.info(f"✓ 无约束最小二乘: J = {realized:.6g} (N = {dm.n_samples}, rank D = {dm.factor.shape[0]})")
    return LearnResult(
        model=model,
        method='unconstrained',
        model_class=None,
        certificate=None,
        cost_bound=None,
        realized_cost=realized,
        diagnostics={'rank_d': int(dm.factor.shape[0]), 'n_samples': dm.n_samples, 'lifted': lifted},
    )
