"""
文件读写工具
- 带大小保护的文本读取
- SHA-256 哈希（用于产物溯源）
- 原子写入（临时文件 + os.replace）
"""

import hashlib
import logging
import os
import tempfile
from pathlib import Path
from typing import Union

from certmodel.errors import ArtifactMissingError

logger = logging.getLogger(__name__)

# 文件大小限制（默认 100MB）
MAX_FILE_SIZE = 100 * 1024 * 1024

PathLike = Union[str, Path]


def read_text(file_path: PathLike, max_size: int = MAX_FILE_SIZE) -> str:
    """
    读取 UTF-8 文本（兼容 BOM，带大小保护）

    Args:
        file_path: 文件路径
        max_size: 最大文件大小（字节），默认 100MB

    Returns:
        文件内容字符串

    Raises:
        ArtifactMissingError: 文件不存在
        ValueError: 文件过大
    """
    path = Path(file_path)
    if not path.is_file():
        raise ArtifactMissingError(f"文件不存在: {path}")
    file_size = path.stat().st_size
    if file_size > max_size:
        raise ValueError(
            f"文件过大: {file_size / 1024 / 1024:.2f}MB > {max_size / 1024 / 1024:.2f}MB 限制"
        )
    logger.debug(f"读取文件 {path}（大小: {file_size / 1024:.2f}KB）")
    return path.read_text(encoding='utf-8-sig')


def calculate_file_hash(file_path: PathLike) -> str:
    """
    计算文件 SHA256 哈希

    Returns:
        16 进制字符串

    Raises:
        ArtifactMissingError: 文件不存在
    """
    path = Path(file_path)
    if not path.is_file():
        raise ArtifactMissingError(f"文件不存在: {path}")
    sha256 = hashlib.sha256()
    with open(path, 'rb') as f:
        while chunk := f.read(8192):
            sha256.update(chunk)
    return sha256.hexdigest()


def atomic_write_text(file_path: PathLike, content: str) -> Path:
    """
    原子写入文本：先写同目录临时文件，再 os.replace 覆盖目标

    Returns:
        目标路径
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"已写入 {path}")
    return path
