"""通用工具：日志配置、随机数子流"""

from .logging_config import setup_logging, get_default_log_file
from .seeding import substream

__all__ = ['setup_logging', 'get_default_log_file', 'substream']
