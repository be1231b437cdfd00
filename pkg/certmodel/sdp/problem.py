"""
块结构 LMI 问题与求解契约
- sym_bmat：按上三角块描述拼装对称块矩阵（大小为 0 的块行 / 块列被删除）
- LmiProblem：命名决策变量 + 带标签的 LMI 约束 + 线性目标
- solve：调用 cvxpy 锥求解器（Clarabel 优先，SCS 备用），并重新代入计算残差
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np

from certmodel.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

# 约束方向：nsd ⪯ 0，psd ⪰ 0，nd ≺ 0，pd ≻ 0
SENSES = ('nsd', 'psd', 'nd', 'pd')

DEFAULT_STRICT_EPS = 1e-7
DEFAULT_TOL = 1e-6
SOLVER_PREFERENCE = ('CLARABEL', 'SCS')

Block = Union[None, float, np.ndarray, cp.Expression]


def _block_shape(block) -> Tuple[int, ...]:
    if isinstance(block, cp.Expression):
        return tuple(block.shape)
    return np.shape(block)


def _as_2d(block, rows: int, cols: int):
    """把块转换为 rows×cols 的 cvxpy 表达式，标量和向量按需 reshape"""
    if block is None:
        return np.zeros((rows, cols))
    shape = _block_shape(block)
    if len(shape) == 2:
        if shape != (rows, cols):
            raise DimensionMismatchError(f"块形状 {shape} 与期望 ({rows}, {cols}) 不一致")
        return block
    size = int(np.prod(shape)) if shape else 1
    if size != rows * cols:
        raise DimensionMismatchError(f"块形状 {shape} 与期望 ({rows}, {cols}) 不一致")
    if isinstance(block, cp.Expression):
        return cp.reshape(block, (rows, cols), order='C')
    return np.reshape(np.asarray(block, dtype=float), (rows, cols))


def _transpose(block):
    if isinstance(block, cp.Expression):
        return block.T
    return np.asarray(block).T


def sym_bmat(upper: Sequence[Sequence[Block]], sizes: Sequence[int]) -> cp.Expression:
    """
    由上三角块拼装对称块矩阵

    Args:
        upper: upper[i][j]（j ≥ i）为第 (i, j) 块，None 表示零块；
               upper[i] 的长度可以是 len(sizes) − i（只给 j ≥ i 部分）或 len(sizes)
        sizes: 各块行 / 块列的维度，为 0 的块整体删除

    Returns:
        对称化的 cvxpy 表达式 0.5·(M + Mᵀ)

    Raises:
        DimensionMismatchError: 块形状与 sizes 不一致
    """
    k = len(sizes)
    if len(upper) != k:
        raise DimensionMismatchError(f"块行数 {len(upper)} 与 sizes 长度 {k} 不一致")

    def entry(i, j):
        row = upper[i]
        if len(row) == k:
            return row[j]
        if len(row) == k - i:
            return row[j - i]
        raise DimensionMismatchError(f"第 {i} 块行长度 {len(row)} 无效")

    keep = [i for i in range(k) if sizes[i] > 0]
    if not keep:
        raise DimensionMismatchError("块矩阵为空")

    rows = []
    for i in keep:
        row = []
        for j in keep:
            if j >= i:
                row.append(_as_2d(entry(i, j), sizes[i], sizes[j]))
            else:
                row.append(_transpose(_as_2d(entry(j, i), sizes[j], sizes[i])))
        rows.append(row)

    mat = cp.bmat(rows)
    return 0.5 * (mat + mat.T)


@dataclass
class LmiConstraint:
    """带标签的 LMI 约束"""
    name: str
    expr: cp.Expression
    sense: str
    scale: float = 1.0
    strict_eps: float = 0.0

    @property
    def size(self) -> int:
        return self.expr.shape[0]

    @property
    def strict(self) -> bool:
        return self.sense in ('nd', 'pd')

    @property
    def sign(self) -> float:
        """把约束统一成 sign·M ⪯ 0"""
        return 1.0 if self.sense in ('nsd', 'nd') else -1.0

    @property
    def margin(self) -> float:
        """未缩放单位下的严格裕量 ε·scale"""
        return self.strict_eps * self.scale


@dataclass
class ConstraintResidual:
    """单个约束的残差"""
    name: str
    lambda_max: float     # sign·M 的最大特征值（未缩放）
    violation: float      # 缩放后 max(0, λ_max/scale + ε)
    margin: float         # 要求的严格裕量（未缩放）

    def to_dict(self) -> Dict[str, float]:
        return {
            'lambda_max': self.lambda_max,
            'violation': self.violation,
            'margin': self.margin,
        }


@dataclass
class SdpSolution:
    """SDP 求解结果"""
    status: str
    values: Dict[str, Any] = field(default_factory=dict)
    objective: float = float('nan')
    residuals: Dict[str, ConstraintResidual] = field(default_factory=dict)
    solver: Optional[str] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in ('optimal', 'feasible')

    @property
    def max_violation(self) -> float:
        if not self.residuals:
            return 0.0
        return max(r.violation for r in self.residuals.values())

    def value(self, name: str):
        return self.values[name]

    def margin(self, name: str) -> float:
        return self.residuals[name].margin


class LmiProblem:
    """
    块结构 LMI 问题

    变量通过 add_variable 声明，约束通过 add_lmi 添加；
    每个约束按其常数部分的 Frobenius 范数预缩放，严格不等式编码为 ⪯ −εI。
    """

    def __init__(self, name: str = "lmi", strict_eps: float = DEFAULT_STRICT_EPS):
        if strict_eps <= 0:
            raise ValueError(f"严格裕量 ε 必须为正: {strict_eps}")
        self.name = name
        self.strict_eps = strict_eps
        self.variables: Dict[str, cp.Variable] = {}
        self.symmetric: Dict[str, bool] = {}
        self.constraints: List[LmiConstraint] = []
        self.objective: Optional[cp.Expression] = None

    def add_variable(self, name: str, shape=(), symmetric: bool = False,
                     nonneg: bool = False) -> cp.Variable:
        """
        声明决策变量

        Args:
            name: 变量名
            shape: 形状，() 表示标量
            symmetric: 是否对称矩阵变量
            nonneg: 是否非负（标量乘子 α、γ 等）
        """
        if name in self.variables:
            raise ValueError(f"变量重复声明: {name}")
        shape = tuple(shape)
        if symmetric:
            if len(shape) != 2 or shape[0] != shape[1]:
                raise DimensionMismatchError(f"对称变量 {name} 必须是方阵: {shape}")
            var = cp.Variable(shape, symmetric=True, name=name)
        else:
            var = cp.Variable(shape, name=name)
        self.variables[name] = var
        self.symmetric[name] = symmetric
        if nonneg:
            # 非负性作为 1×1 约束，残差与其他约束统一报告
            if shape:
                raise ValueError(f"非负变量 {name} 必须是标量")
            self.add_lmi(f"{name}>=0", var, "psd")
        return var

    def __getitem__(self, name: str) -> cp.Variable:
        return self.variables[name]

    def add_lmi(self, name: str, expr, sense: str) -> LmiConstraint:
        """
        添加 LMI 约束

        Args:
            name: 约束标签（用于残差报告）
            expr: 对称仿射表达式（方阵；标量表达式视为 1×1）
            sense: 'nsd' | 'psd' | 'nd' | 'pd'

        Returns:
            LmiConstraint
        """
        if sense not in SENSES:
            raise ValueError(f"未知约束方向: {sense}")
        if any(c.name == name for c in self.constraints):
            raise ValueError(f"约束重复命名: {name}")
        if not isinstance(expr, cp.Expression):
            expr = cp.Constant(np.atleast_2d(np.asarray(expr, dtype=float)))
        if expr.ndim < 2:
            expr = cp.reshape(expr, (1, 1), order='C')
        if expr.shape[0] != expr.shape[1]:
            raise DimensionMismatchError(f"约束 {name} 不是方阵: {expr.shape}")
        if not expr.is_affine():
            raise ValueError(f"约束 {name} 不是决策变量的仿射函数")

        constant = self._constant_part(expr)
        scale = float(np.linalg.norm(constant, 'fro'))
        if not np.isfinite(scale) or scale <= 0.0:
            scale = 1.0
        strict_eps = self.strict_eps if sense in ('nd', 'pd') else 0.0
        constraint = LmiConstraint(name=name, expr=expr, sense=sense,
                                   scale=scale, strict_eps=strict_eps)
        self.constraints.append(constraint)
        return constraint

    def minimize(self, expr) -> None:
        """设置线性目标（不调用则为可行性问题）"""
        if isinstance(expr, cp.Expression) and not expr.is_affine():
            raise ValueError("目标函数必须是仿射的")
        self.objective = expr

    def constraint(self, name: str) -> LmiConstraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    @staticmethod
    def _constant_part(expr: cp.Expression) -> np.ndarray:
        """所有变量取 0 时表达式的值"""
        saved = [(v, v.value) for v in expr.variables()]
        try:
            for v, _ in saved:
                v.value = np.zeros(v.shape)
            return np.atleast_2d(np.asarray(expr.value, dtype=float))
        finally:
            for v, old in saved:
                v.value = old

    def _cvx_constraints(self) -> List[cp.Constraint]:
        cons = []
        for c in self.constraints:
            normalized = (c.sign / c.scale) * c.expr
            k = c.size
            if c.strict_eps > 0:
                cons.append(-normalized - c.strict_eps * np.eye(k) >> 0)
            else:
                cons.append(-normalized >> 0)
        return cons

    def residuals(self, values: Optional[Dict[str, Any]] = None) -> Dict[str, ConstraintResidual]:
        """
        计算各约束残差

        Args:
            values: 变量取值；None 表示使用变量当前值

        Returns:
            约束名 -> ConstraintResidual
        """
        if values is not None:
            for name, var in self.variables.items():
                var.value = np.reshape(np.asarray(values[name], dtype=float), var.shape)

        result = {}
        for c in self.constraints:
            mat = np.atleast_2d(np.asarray(c.expr.value, dtype=float))
            mat = c.sign * 0.5 * (mat + mat.T)
            lam = float(np.linalg.eigvalsh(mat)[-1])
            violation = max(0.0, lam / c.scale + c.strict_eps)
            result[c.name] = ConstraintResidual(c.name, lam, violation, c.margin)
        return result

    def _collect_values(self) -> Dict[str, Any]:
        values = {}
        for name, var in self.variables.items():
            val = var.value
            if val is None:
                continue
            val = np.asarray(val, dtype=float)
            if self.symmetric[name]:
                val = 0.5 * (val + val.T)
            values[name] = float(val) if val.ndim == 0 else val
        return values


def _available_solvers(preferred: Optional[Sequence[str]] = None) -> List[str]:
    installed = set(cp.installed_solvers())
    order = list(preferred) if preferred else list(SOLVER_PREFERENCE)
    return [s for s in order if s in installed]


def _solver_options(solver: str, tol: float) -> Dict[str, Any]:
    if solver == 'SCS':
        return {'eps_abs': min(tol, 1e-7), 'eps_rel': min(tol, 1e-7), 'max_iters': 200000}
    return {}


_STATUS_MAP = {
    cp.OPTIMAL: 'optimal',
    cp.OPTIMAL_INACCURATE: 'feasible',
    cp.INFEASIBLE: 'infeasible',
    cp.INFEASIBLE_INACCURATE: 'infeasible',
    cp.UNBOUNDED: 'numerical-failure',
    cp.UNBOUNDED_INACCURATE: 'numerical-failure',
}


def solve(problem: LmiProblem, tol: float = DEFAULT_TOL,
          solvers: Optional[Sequence[str]] = None) -> SdpSolution:
    """
    求解 LMI 问题

    Args:
        problem: LmiProblem
        tol: 残差容差（缩放单位）
        solvers: 求解器优先级列表，默认 Clarabel → SCS

    Returns:
        SdpSolution；status=optimal 时所有约束残差 ≤ tol
    """
    if tol <= 0:
        raise ValueError(f"容差必须为正: {tol}")
    if not problem.constraints:
        raise ValueError(f"问题 {problem.name} 没有约束")

    if problem.objective is None:
        objective = cp.Minimize(0)
    else:
        objective = cp.Minimize(problem.objective)
    cvx_problem = cp.Problem(objective, problem._cvx_constraints())

    candidates = _available_solvers(solvers)
    if not candidates:
        raise RuntimeError("没有可用的 SDP 求解器（需要 Clarabel 或 SCS）")

    diagnostics: Dict[str, Any] = {
        'problem': problem.name,
        'scales': {c.name: c.scale for c in problem.constraints},
        'attempts': [],
    }
    raw_status = None
    used = None
    for solver in candidates:
        start = time.perf_counter()
        try:
            cvx_problem.solve(solver=solver, **_solver_options(solver, tol))
        except cp.SolverError as e:
            logger.debug(f"{problem.name}: 求解器 {solver} 失败: {e}")
            diagnostics['attempts'].append({'solver': solver, 'status': 'solver-error', 'detail': str(e)})
            continue
        elapsed = time.perf_counter() - start
        raw_status = cvx_problem.status
        used = solver
        diagnostics['attempts'].append({'solver': solver, 'status': raw_status, 'time': elapsed})
        if raw_status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE, cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            break

    if raw_status is None:
        return SdpSolution(status='numerical-failure', diagnostics=diagnostics)

    status = _STATUS_MAP.get(raw_status, 'numerical-failure')
    if status == 'infeasible':
        logger.debug(f"{problem.name}: 不可行 ({used})")
        return SdpSolution(status=status, solver=used, diagnostics=diagnostics)
    if status == 'numerical-failure':
        return SdpSolution(status=status, solver=used, diagnostics=diagnostics)

    values = problem._collect_values()
    residuals = problem.residuals(values)
    max_violation = max(r.violation for r in residuals.values())
    diagnostics['max_violation'] = max_violation

    if max_violation > tol:
        worst = max(residuals.values(), key=lambda r: r.violation)
        logger.warning(
            f"⚠ {problem.name}: 求解器报告 {raw_status}，但约束 {worst.name} "
            f"残差 {worst.violation:.2e} > {tol:.1e}"
        )
        diagnostics['worst_constraint'] = worst.name
        status = 'numerical-failure'

    objective_value = float(cvx_problem.value) if problem.objective is not None else 0.0
    return SdpSolution(
        status=status,
        values=values,
        objective=objective_value,
        residuals=residuals,
        solver=used,
        diagnostics=diagnostics,
    )
