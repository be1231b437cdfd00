"""产物读写：文件工具、JSON 文档、CSV 与 ArtifactStore"""

from .files import atomic_write_text, calculate_file_hash, read_text
from .documents import SCHEMA_VERSION, dump_document, load_document
from .csv_io import dataset_from_csv, dataset_to_csv, table_to_csv, trajectory_from_csv, trajectory_to_csv
from .store import ArtifactStore

__all__ = [
    'atomic_write_text', 'calculate_file_hash', 'read_text',
    'SCHEMA_VERSION', 'dump_document', 'load_document',
    'dataset_from_csv', 'dataset_to_csv', 'table_to_csv', 'trajectory_from_csv', 'trajectory_to_csv',
    'ArtifactStore',
]
