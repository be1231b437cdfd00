"""
稳定性认证的模型更新工具包
在已知物理模型上学习不确定性模型，并保证不变集 / ISS 稳定性
"""

__version__ = "0.1.0"
