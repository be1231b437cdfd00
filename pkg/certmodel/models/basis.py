"""
基函数库 h(V_η x, u)
每个块对 s = V_η x 逐元素作用：quad = s∘2，cubic = s∘3，exp = exp(s) − 1
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np


BLOCK_TAGS = ('quad', 'cubic', 'exp')

# 基准实验中的三种基函数组合
BASIS_CHOICES = {
    'cubic': ('cubic',),
    'quad+cubic': ('quad', 'cubic'),
    'quad+exp+cubic': ('quad', 'exp', 'cubic'),
}


def _block_value(tag: str, s: np.ndarray) -> np.ndarray:
    if tag == 'quad':
        return s ** 2
    if tag == 'cubic':
        return s ** 3
    if tag == 'exp':
        return np.expm1(s)
    raise ValueError(f"未知基函数块: {tag}")


def _block_lipschitz(tag: str, radius: float) -> float:
    """|s_i| ≤ radius 上逐元素导数上界"""
    if tag == 'quad':
        return 2.0 * radius
    if tag == 'cubic':
        return 3.0 * radius ** 2
    if tag == 'exp':
        return float(np.exp(radius))
    raise ValueError(f"未知基函数块: {tag}")


@dataclass(frozen=True)
class BasisLibrary:
    """
    基函数库

    Attributes:
        in_dim: s = V_η x 的维度 n_vη
        blocks: 块标签序列
        lipschitz: 用户给定的 (l_hx, l_hu)，优先于解析估计
    """
    in_dim: int
    blocks: Tuple[str, ...] = ()
    lipschitz: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, 'blocks', tuple(self.blocks))
        for tag in self.blocks:
            if tag not in BLOCK_TAGS:
                raise ValueError(f"未知基函数块: {tag}（可选: {', '.join(BLOCK_TAGS)}）")
        if self.lipschitz is not None:
            l_hx, l_hu = (float(v) for v in self.lipschitz)
            if l_hx < 0 or l_hu < 0:
                raise ValueError("Lipschitz 常数必须非负")
            object.__setattr__(self, 'lipschitz', (l_hx, l_hu))

    @classmethod
    def from_choice(cls, choice: str, in_dim: int,
                    lipschitz: Optional[Tuple[float, float]] = None) -> 'BasisLibrary':
        if choice not in BASIS_CHOICES:
            raise ValueError(f"未知基函数组合: {choice}")
        return cls(in_dim, BASIS_CHOICES[choice], lipschitz)

    @classmethod
    def empty(cls, in_dim: int) -> 'BasisLibrary':
        return cls(in_dim, ())

    @property
    def n_h(self) -> int:
        return self.in_dim * len(self.blocks)

    def __call__(self, s: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
        """
        求值 h(s, u)，s 形状 (..., n_vη)

        Returns:
            形状 (..., n_h)
        """
        s = np.asarray(s, dtype=float)
        if s.shape[-1] != self.in_dim:
            raise ValueError(f"基函数输入维度 {s.shape[-1]} != {self.in_dim}")
        if not self.blocks:
            return np.zeros(s.shape[:-1] + (0,))
        return np.concatenate([_block_value(tag, s) for tag in self.blocks], axis=-1)

    def lipschitz_constants(self, radius: Optional[float] = None) -> Tuple[float, float]:
        """
        (l_hx, l_hu)

        用户给定值优先；否则在 ‖s‖ ≤ radius 上解析计算。
        堆叠块的常数为各块常数的平方和开方。

        Raises:
            ValueError: 既无用户常数也无半径（多项式 / 指数块不是全局 Lipschitz）
        """
        if self.lipschitz is not None:
            return self.lipschitz
        if not self.blocks:
            return (0.0, 0.0)
        if radius is None:
            raise ValueError(
                f"基函数 {'+'.join(self.blocks)} 不是全局 Lipschitz，需要给定半径或显式常数"
            )
        l_hx = float(np.sqrt(sum(_block_lipschitz(tag, radius) ** 2 for tag in self.blocks)))
        return (l_hx, 0.0)

    def tag(self) -> str:
        return '+'.join(self.blocks) if self.blocks else 'none'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'in_dim': self.in_dim,
            'blocks': list(self.blocks),
            'lipschitz': list(self.lipschitz) if self.lipschitz is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BasisLibrary':
        lip = data.get('lipschitz')
        return cls(int(data['in_dim']), tuple(data.get('blocks', ())),
                   tuple(lip) if lip is not None else None)
