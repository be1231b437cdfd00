"""
随机数子流
所有随机性来自一个全局种子，按阶段名称派生独立子流
"""

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """
    派生命名子流

    同一 (seed, name) 总是得到相同的随机序列，不同名称之间互不影响。

    Args:
        seed: 全局种子（非负整数）
        name: 子流名称，例如 'simulate.train'

    Returns:
        numpy Generator
    """
    if seed < 0:
        raise ValueError(f"种子必须非负: {seed}")
    # crc32 跨进程稳定，不受 PYTHONHASHSEED 影响
    key = zlib.crc32(name.encode('utf-8'))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key]))
