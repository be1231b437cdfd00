"""
带稳定性证书的不确定性模型学习
"""

from typing import Optional

from .config import (
    LearnConfig, LearnResult, LipschitzBundle, DEFAULT_GRIDS, METHODS, MODEL_CLASSES,
)
from .dataset import LabeledDataset, DataMatrix, build_data_matrix, cost, lift_uncertainty
from .unconstrained import learn_unconstrained
from .cost_mod import (
    assemble_cost_mod, learn_cost_mod, learn_cost_mod_local, learn_cost_mod_global,
)
from .constraint_mod import (
    assemble_constraint_mod, learn_constraint_mod, learn_constraint_mod_local,
    learn_constraint_mod_global,
)
from .scp import learn_scp, assemble_step1, assemble_step2
from .search import GridPoint, GridOutcome, grid_search, resolve_lipschitz


def learn(sys, ds: LabeledDataset, cfg: LearnConfig, init: Optional[LearnResult] = None) -> LearnResult:
    """按 cfg.method 分派"""
    if cfg.method == 'unconstrained':
        return learn_unconstrained(ds, sys.s_eta)
    if cfg.method == 'cost-mod':
        return learn_cost_mod(sys, ds, cfg)
    if cfg.method == 'constraint-mod':
        return learn_constraint_mod(sys, ds, cfg)
    return learn_scp(sys, ds, cfg, init)


__all__ = [
    'LearnConfig', 'LearnResult', 'LipschitzBundle', 'DEFAULT_GRIDS', 'METHODS', 'MODEL_CLASSES',
    'LabeledDataset', 'DataMatrix', 'build_data_matrix', 'cost', 'lift_uncertainty',
    'learn_unconstrained',
    'assemble_cost_mod', 'learn_cost_mod', 'learn_cost_mod_local', 'learn_cost_mod_global',
    'assemble_constraint_mod', 'learn_constraint_mod', 'learn_constraint_mod_local',
    'learn_constraint_mod_global',
    'learn_scp', 'assemble_step1', 'assemble_step2',
    'GridPoint', 'GridOutcome', 'grid_search', 'resolve_lipschitz',
    'learn',
]
