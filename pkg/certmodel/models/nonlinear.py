"""
已知非线性 g 与真实不确定性 η 的参数化表示
所有映射都按名称标签序列化，输入形状为 (..., dim)，支持批量求值
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np


class Nonlinearity:
    """
    非线性映射 (s, u) -> out

    子类需实现 __call__、to_dict，并给出可选的解析 Lipschitz 常数。
    """

    kind = 'base'

    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)

    def __call__(self, s: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
        raise NotImplementedError

    def lipschitz(self, radius: Optional[float] = None) -> Optional[Tuple[float, float]]:
        """
        解析 Lipschitz 常数 (l_x, l_u)

        Args:
            radius: 输入 s 的范数上界；None 表示全局

        Returns:
            (l_x, l_u)，无法给出时返回 None
        """
        return None

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError

    def _check(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape[-1] != self.in_dim:
            raise ValueError(f"{self.kind}: 输入维度 {s.shape[-1]} != {self.in_dim}")
        return s

    def __eq__(self, other):
        return isinstance(other, Nonlinearity) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class ZeroMap(Nonlinearity):
    """恒零映射"""

    kind = 'zero'

    def __call__(self, s, u=None):
        s = self._check(s)
        return np.zeros(s.shape[:-1] + (self.out_dim,))

    def lipschitz(self, radius=None):
        return (0.0, 0.0)

    def to_dict(self):
        return {'kind': self.kind, 'in_dim': self.in_dim, 'out_dim': self.out_dim}

    @classmethod
    def from_dict(cls, data):
        return cls(data['in_dim'], data['out_dim'])


class ScaledTanh(Nonlinearity):
    """逐元素 scale·tanh(s)"""

    kind = 'tanh'

    def __init__(self, dim: int, scale: float):
        super().__init__(dim, dim)
        self.scale = float(scale)

    def __call__(self, s, u=None):
        s = self._check(s)
        return self.scale * np.tanh(s)

    def lipschitz(self, radius=None):
        return (abs(self.scale), 0.0)

    def to_dict(self):
        return {'kind': self.kind, 'dim': self.in_dim, 'scale': self.scale}

    @classmethod
    def from_dict(cls, data):
        return cls(data['dim'], data['scale'])


class Polynomial(Nonlinearity):
    """
    逐元素多项式 Σ_p c_p · s^p（p ≥ 1，保证原点为零）
    """

    kind = 'polynomial'

    def __init__(self, dim: int, coefficients: Dict[int, float]):
        super().__init__(dim, dim)
        coeffs = {int(p): float(c) for p, c in coefficients.items()}
        if any(p < 1 for p in coeffs):
            raise ValueError("多项式幂次必须 ≥ 1（原点必须为零）")
        self.coefficients = dict(sorted(coeffs.items()))

    def __call__(self, s, u=None):
        s = self._check(s)
        out = np.zeros_like(s)
        for power, coef in self.coefficients.items():
            out = out + coef * s ** power
        return out

    def lipschitz(self, radius=None):
        max_power = max(self.coefficients, default=1)
        if radius is None:
            if max_power > 1:
                return None
            return (abs(self.coefficients.get(1, 0.0)), 0.0)
        l_x = sum(abs(c) * p * radius ** (p - 1) for p, c in self.coefficients.items())
        return (l_x, 0.0)

    def to_dict(self):
        return {
            'kind': self.kind,
            'dim': self.in_dim,
            'coefficients': {str(p): c for p, c in self.coefficients.items()},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['dim'], {int(p): c for p, c in data['coefficients'].items()})


class LinearMap(Nonlinearity):
    """线性映射 s -> M s（主要用于测试与线性不确定性）"""

    kind = 'linear'

    def __init__(self, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        super().__init__(matrix.shape[1], matrix.shape[0])
        self.matrix = matrix

    def __call__(self, s, u=None):
        s = self._check(s)
        return s @ self.matrix.T

    def lipschitz(self, radius=None):
        if self.matrix.size == 0:
            return (0.0, 0.0)
        return (float(np.linalg.norm(self.matrix, 2)), 0.0)

    def to_dict(self):
        return {'kind': self.kind, 'matrix': self.matrix.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data['matrix'], dtype=float))


NONLINEARITY_KINDS = {
    cls.kind: cls for cls in (ZeroMap, ScaledTanh, Polynomial, LinearMap)
}


def nonlinearity_from_dict(data: Optional[Dict[str, Any]]) -> Optional[Nonlinearity]:
    """按 kind 标签反序列化"""
    if data is None:
        return None
    kind = data.get('kind')
    if kind not in NONLINEARITY_KINDS:
        raise ValueError(f"未知非线性类型: {kind}")
    return NONLINEARITY_KINDS[kind].from_dict(data)
