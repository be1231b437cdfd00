"""
产物存储
统一的 ArtifactStore 入口，按类型划分子存储；所有文件原子写入，
正常退出时写出 manifest.json（相对路径 -> SHA-256）
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import ArtifactMissingError
from certmodel.estimator.filter import EstimatorFilter
from certmodel.io import documents as docs
from certmodel.io.csv_io import dataset_from_csv, dataset_to_csv, trajectory_from_csv, trajectory_to_csv
from certmodel.io.files import atomic_write_text, calculate_file_hash, read_text
from certmodel.learning.config import LearnResult
from certmodel.learning.dataset import LabeledDataset
from certmodel.models.basis import BasisLibrary
from certmodel.models.system import SystemModel
from certmodel.simulation.integrator import Trajectory
from certmodel.simulation.signals import Multisine

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'


class _SubStore:
    """子存储基类：负责路径与写入记录"""

    folder = ''

    def __init__(self, store: 'ArtifactStore'):
        self.store = store
        self.root = store.root / self.folder if self.folder else store.root

    def path(self, name: str) -> Path:
        return self.root / name

    def _write(self, name: str, content: str) -> Path:
        return self.store.write(self.path(name), content)

    def _read(self, name: str) -> str:
        path = self.path(name)
        if not path.is_file():
            raise ArtifactMissingError(f"缺少上游产物: {path}")
        return read_text(path)

    def _list(self, pattern: str) -> List[Path]:
        return sorted(self.root.glob(pattern)) if self.root.is_dir() else []


class SystemStore(_SubStore):
    """先验 / 真实系统模型"""

    def save(self, sys: SystemModel, name: str = 'system') -> Path:
        return self._write(f"{name}.json", docs.dump_document('system', docs.system_to_doc(sys)))

    def load(self, name: str = 'system') -> SystemModel:
        text = self._read(f"{name}.json")
        return docs.system_from_doc(docs.load_document(text, 'system', str(self.path(f"{name}.json"))))


class SignalStore(_SubStore):
    """多正弦输入参数（按 train / test 划分）"""

    folder = 'signals'

    def save(self, split: str, signals: Sequence[Multisine]) -> Path:
        body = {'split': split, 'signals': [s.to_dict() for s in signals]}
        return self._write(f"{split}.json", docs.dump_document('signals', body))

    def load(self, split: str) -> List[Multisine]:
        text = self._read(f"{split}.json")
        doc = docs.load_document(text, 'signals', str(self.path(f"{split}.json")))
        return [Multisine.from_dict(d) for d in doc['signals']]


class TrajectoryStore(_SubStore):
    """仿真轨迹 CSV"""

    folder = 'trajectories'

    def save(self, split: str, index: int, traj: Trajectory) -> Path:
        return self._write(f"{split}_{index:04d}.csv", trajectory_to_csv(traj))

    def load(self, split: str, index: int) -> Trajectory:
        name = f"{split}_{index:04d}.csv"
        return trajectory_from_csv(self._read(name), str(self.path(name)))

    def count(self, split: str) -> int:
        return len(self._list(f"{split}_*.csv"))

    def load_all(self, split: str) -> List[Trajectory]:
        count = self.count(split)
        if count == 0:
            raise ArtifactMissingError(f"没有 {split} 轨迹: {self.root}")
        return [self.load(split, k) for k in range(count)]


class EstimatorStore(_SubStore):
    """估计器增益与证书"""

    def save(self, filt: EstimatorFilter, provenance: Optional[Dict[str, str]] = None) -> Path:
        return self._write('estimator.json',
                           docs.dump_document('estimator', docs.estimator_to_doc(filt), provenance))

    def load(self) -> EstimatorFilter:
        text = self._read('estimator.json')
        return docs.estimator_from_doc(docs.load_document(text, 'estimator', str(self.path('estimator.json'))))


class DatasetStore(_SubStore):
    """带标签训练数据 CSV 与拟合的 F / U 椭球"""

    folder = 'datasets'

    def save(self, index: int, ds: LabeledDataset) -> Path:
        return self._write(f"train_{index:04d}.csv", dataset_to_csv(ds))

    def load_all(self, basis: BasisLibrary, v_eta: np.ndarray) -> List[LabeledDataset]:
        paths = self._list('train_*.csv')
        if not paths:
            raise ArtifactMissingError(f"没有训练数据集: {self.root}")
        return [dataset_from_csv(read_text(p), basis, v_eta, str(p)) for p in paths]

    def paths(self) -> List[Path]:
        return self._list('train_*.csv')

    def save_sets(self, f_set: Ellipsoid, u_set: Ellipsoid) -> Path:
        return self._write('sets.json', docs.dump_document('sets', docs.sets_to_doc(f_set, u_set)))

    def load_sets(self) -> Tuple[Ellipsoid, Ellipsoid]:
        text = self._read('sets.json')
        return docs.sets_from_doc(docs.load_document(text, 'sets', str(self.path('sets.json'))))


class LearnedStore(_SubStore):
    """学习结果文档（记录上游产物哈希）"""

    folder = 'learned'

    def save(self, label: str, result: LearnResult,
             provenance: Optional[Dict[str, str]] = None) -> Path:
        return self._write(f"{label}.json",
                           docs.dump_document('learn_result', docs.learn_result_to_doc(result), provenance))

    def load(self, label: str) -> LearnResult:
        return self.load_path(self.path(f"{label}.json"))

    def load_path(self, path) -> LearnResult:
        path = Path(path)
        return docs.learn_result_from_doc(docs.load_document(read_text(path), 'learn_result', str(path)))

    def provenance(self, label: str) -> Dict[str, str]:
        text = self._read(f"{label}.json")
        return dict(json.loads(text).get('provenance', {}))

    def labels(self) -> List[str]:
        return [p.stem for p in self._list('*.json')]


class ReportStore(_SubStore):
    """验证与实验报告（JSON / CSV / gnuplot 脚本）"""

    folder = 'reports'

    def save_json(self, name: str, body: Dict) -> Path:
        return self._write(f"{name}.json", docs.dump_document('report', body))

    def load_json(self, name: str) -> Dict:
        text = self._read(f"{name}.json")
        return docs.load_document(text, 'report', str(self.path(f"{name}.json")))

    def save_text(self, name: str, content: str) -> Path:
        return self._write(name, content)


class ArtifactStore:
    """统一的产物存储入口，整合所有子存储"""

    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

        self.systems = SystemStore(self)
        self.signals = SignalStore(self)
        self.trajectories = TrajectoryStore(self)
        self.estimators = EstimatorStore(self)
        self.datasets = DatasetStore(self)
        self.learned = LearnedStore(self)
        self.reports = ReportStore(self)

    def write(self, path: Path, content: str) -> Path:
        atomic_write_text(path, content)
        if path not in self.written:
            self.written.append(path)
        return path

    def hash(self, path) -> str:
        """产物的 SHA-256（相对 root 或绝对路径）"""
        path = Path(path)
        return calculate_file_hash(path if path.is_absolute() else self.root / path)

    def provenance(self, paths: Sequence[Path]) -> Dict[str, str]:
        """相对路径 -> SHA-256"""
        return {self._relative(p): self.hash(p) for p in paths}

    def _relative(self, path: Path) -> str:
        path = Path(path)
        try:
            return path.relative_to(self.root).as_posix()
        except ValueError:
            return path.as_posix()

    def commit(self) -> Optional[Path]:
        """更新 manifest.json；没有新写入时不改动"""
        if not self.written:
            return None
        manifest_path = self.root / MANIFEST
        manifest = {}
        if manifest_path.is_file():
            manifest = json.loads(read_text(manifest_path)).get('files', {})
        manifest.update(self.provenance(self.written))
        content = json.dumps({'schema_version': docs.SCHEMA_VERSION,
                              'files': dict(sorted(manifest.items()))}, indent=2) + '\n'
        atomic_write_text(manifest_path, content)
        logger.info(f"✓ 已写入 {len(self.written)} 个产物到 {self.root}")
        self.written = []
        return manifest_path

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            self.commit()
        else:
            logger.warning(f"⚠ 阶段失败，manifest 未更新（已写入 {len(self.written)} 个文件）")
