"""
异常定义
CLI 根据 exit_code 映射退出码
"""


class CertModelError(Exception):
    """工具包异常基类"""
    exit_code = 1


class ConfigError(CertModelError):
    """配置文件错误（未知键、缺失字段、路径不存在）"""
    exit_code = 2


class SimulationDivergenceError(CertModelError):
    """仿真发散（状态非有限或超过阈值）"""
    exit_code = 3

    def __init__(self, message: str, time: float = None):
        super().__init__(message)
        self.time = time


class SdpInfeasibleError(CertModelError):
    """SDP 不可行，或求解前置条件（如 A 非 Hurwitz）不满足"""
    exit_code = 4


class NotHurwitzError(SdpInfeasibleError):
    """A 矩阵不是 Hurwitz 稳定的"""


class ScpStepInfeasibleError(SdpInfeasibleError):
    """SCP 某一步不可行"""

    def __init__(self, step: int, iteration: int, status: str = 'infeasible'):
        super().__init__(f"SCP 第 {iteration} 轮 Step {step} 不可行 ({status})")
        self.step = step
        self.iteration = iteration
        self.status = status


class VerificationError(CertModelError):
    """证书验证失败"""
    exit_code = 5


class ArtifactMissingError(CertModelError):
    """上游产物缺失"""
    exit_code = 6


class DimensionMismatchError(ValueError):
    """矩阵维度不一致"""


class NotPsdError(ValueError):
    """矩阵不是半正定的"""


class SingularBlockError(ValueError):
    """Schur 补中的 C 块不正定"""


class GridMismatchError(ValueError):
    """时间网格不一致"""


class EmptyDatasetError(ValueError):
    """截断后数据集为空"""


class UnboundedLipschitzError(ValueError):
    """差商随细化层级发散，非线性在给定集合上无界"""
