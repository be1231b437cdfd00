"""
测试 io 模块（文档、CSV、产物存储）
"""
import json

import numpy as np
import pytest

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import ArtifactMissingError, ConfigError
from certmodel.io import documents as docs
from certmodel.io.csv_io import (dataset_from_csv, dataset_to_csv, format_value, trajectory_from_csv,
                                 trajectory_to_csv)
from certmodel.io.files import atomic_write_text, calculate_file_hash, read_text
from certmodel.io.store import MANIFEST, ArtifactStore
from certmodel.learning.config import LearnResult
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import (ExtendedModel, StabilityCertificate, UncertaintyModel,
                                       eval_extended_rhs)
from certmodel.simulation.integrator import Trajectory
from certmodel.simulation.signals import Multisine


class TestFiles:
    """测试文件读写"""

    def test_atomic_write(self, temp_dir):
        """写入后可读回，不留临时文件"""
        path = atomic_write_text(temp_dir / 'sub' / 'a.txt', '测试\n')
        assert read_text(path) == '测试\n'
        assert [p.name for p in path.parent.iterdir()] == ['a.txt']

    def test_read_bom(self, temp_dir):
        """兼容 UTF-8 BOM"""
        path = temp_dir / 'bom.txt'
        path.write_bytes(b'\xef\xbb\xbf{}')
        assert read_text(path) == '{}'

    def test_missing_file(self, temp_dir):
        """文件不存在"""
        with pytest.raises(ArtifactMissingError):
            read_text(temp_dir / 'none.txt')

    def test_too_large(self, temp_dir):
        """超过大小限制"""
        path = atomic_write_text(temp_dir / 'big.txt', 'x' * 100)
        with pytest.raises(ValueError):
            read_text(path, max_size=10)

    def test_hash_changes(self, temp_dir):
        """内容变化则哈希变化"""
        path = atomic_write_text(temp_dir / 'h.txt', 'a')
        first = calculate_file_hash(path)
        atomic_write_text(path, 'b')
        assert calculate_file_hash(path) != first
        assert len(first) == 64


class TestDocuments:
    """测试 JSON 文档头与编解码"""

    def test_header(self):
        """schema_version 与 kind"""
        doc = json.loads(docs.dump_document('report', {'x': 1}, {'b': '2', 'a': '1'}))
        assert doc['schema_version'] == docs.SCHEMA_VERSION
        assert doc['kind'] == 'report'
        assert list(doc['provenance']) == ['a', 'b']

    def test_unknown_kind(self):
        """未知文档类型"""
        with pytest.raises(ValueError):
            docs.dump_document('picture', {})

    def test_wrong_kind(self):
        """读取时类型不符"""
        text = docs.dump_document('report', {})
        with pytest.raises(ArtifactMissingError):
            docs.load_document(text, 'system')

    def test_bad_version(self):
        """不支持的版本"""
        with pytest.raises(ConfigError):
            docs.load_document(json.dumps({'schema_version': 99, 'kind': 'report'}), 'report')

    def test_bad_json(self):
        """JSON 格式错误"""
        with pytest.raises(ConfigError):
            docs.load_document('{not json', 'report')

    def test_bad_matrix(self):
        """形状与数据不一致"""
        with pytest.raises(ConfigError):
            docs.matrix_from_doc({'shape': [2, 2], 'data': [1.0, 2.0, 3.0]})

    def test_matrix_exact(self):
        """浮点数原样保存"""
        arr = np.array([[0.1, 1.0 / 3.0], [np.pi, -2e-300]])
        doc = json.loads(json.dumps(docs.matrix_to_doc(arr)))
        np.testing.assert_array_equal(docs.matrix_from_doc(doc), arr)

    def test_system(self, roll_plane, rng):
        """侧倾平面模型文档"""
        text = docs.dump_document('system', docs.system_to_doc(roll_plane))
        loaded = docs.system_from_doc(docs.load_document(text, 'system'))
        np.testing.assert_array_equal(loaded.a, roll_plane.a)
        x = rng.normal(size=(3, 8)) * 0.01
        s = x @ roll_plane.v_eta.T
        np.testing.assert_allclose(loaded.eta_true(s), roll_plane.eta_true(s))

    def test_system_missing_field(self, roll_plane):
        """缺失矩阵"""
        body = docs.system_to_doc(roll_plane)
        del body['c']
        with pytest.raises(ConfigError):
            docs.system_from_doc(body)

    def test_learn_result(self):
        """学习结果（含证书）"""
        basis = BasisLibrary.from_choice('cubic', 1)
        model = UncertaintyModel([[-2.0]], [[0.5]], [[0.25]], np.eye(1), basis)
        cert = StabilityCertificate(np.eye(1) * 3.0, 'invariant-set', {'beta': 0.1})
        result = LearnResult(model, 'cost-mod', 'local', cert, 1.5, 1.25, {'mu1': 1.0}, {'status': 'optimal'})
        text = docs.dump_document('learn_result', docs.learn_result_to_doc(result))
        loaded = docs.learn_result_from_doc(docs.load_document(text, 'learn_result'))
        np.testing.assert_array_equal(loaded.model.theta_n, [[0.25]])
        assert loaded.certificate.kind == 'invariant-set'
        assert loaded.certificate.scalars == {'beta': 0.1}
        assert loaded.cost_bound == 1.5
        assert loaded.model_class == 'local'

    def test_extended(self, scalar_system):
        """扩展模型文档包含系统、不确定性与证书"""
        sys = scalar_system(1.0)
        model = ExtendedModel(sys, UncertaintyModel([[-2.0]], [[0.0]], np.zeros((1, 0)), np.eye(1),
                                                    BasisLibrary.empty(1)),
                              StabilityCertificate(np.eye(1), 'iss'))
        text = docs.dump_document('extended', docs.extended_to_doc(model))
        loaded = docs.extended_from_doc(docs.load_document(text, 'extended'))
        x = np.array([[0.5]])
        u = np.array([[0.1]])
        np.testing.assert_array_equal(eval_extended_rhs(loaded, x, u), eval_extended_rhs(model, x, u))
        assert loaded.certificate.kind == 'iss'

    def test_no_certificate(self):
        """无约束结果没有证书"""
        model = UncertaintyModel.zero(np.eye(1), 0, BasisLibrary.empty(1))
        result = LearnResult(model, 'unconstrained', None, None, None, 0.0)
        loaded = docs.learn_result_from_doc(json.loads(json.dumps(docs.learn_result_to_doc(result))))
        assert loaded.certificate is None
        assert loaded.cost_bound is None

    def test_sets(self):
        """退化椭球保留标记"""
        f_set = Ellipsoid(np.diag([1.0, 0.0]))
        u_set = Ellipsoid.ball(2, 0.1)
        f2, u2 = docs.sets_from_doc(json.loads(json.dumps(docs.sets_to_doc(f_set, u_set))))
        assert f2.degenerate
        assert not u2.degenerate
        np.testing.assert_array_equal(u2.shape.array, u_set.shape.array)


class TestCsv:
    """测试 CSV 格式"""

    def test_format_value(self):
        """整数原样，浮点 17 位有效数字"""
        assert format_value(3) == '3'
        assert format_value(0.1) == '0.10000000000000001'
        assert float(format_value(1.0 / 3.0)) == 1.0 / 3.0

    def test_trajectory_header(self):
        """列名 t, x1.., u1.., y1.."""
        traj = Trajectory(np.array([0.0, 0.1]), np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((2, 1)))
        header = trajectory_to_csv(traj).splitlines()[0]
        assert header == 't,x1,x2,u1,y1'

    def test_trajectory_exact(self, rng):
        """数值无损"""
        traj = Trajectory(np.linspace(0, 1, 4), rng.normal(size=(4, 3)), rng.normal(size=(4, 2)),
                          rng.normal(size=(4, 1)))
        loaded = trajectory_from_csv(trajectory_to_csv(traj))
        np.testing.assert_array_equal(loaded.states, traj.states)
        np.testing.assert_array_equal(loaded.times, traj.times)

    def test_missing_time(self):
        """缺少时间列"""
        with pytest.raises(ConfigError):
            trajectory_from_csv('x1,y1\n0,0\n')

    def test_bad_column(self):
        """无法识别的列名"""
        with pytest.raises(ConfigError):
            trajectory_from_csv('t,speed\n0,0\n')

    def test_dataset(self, scalar_dataset):
        """数据集列名 t, u1, xhat1, etahat1"""
        ds = scalar_dataset(1.5, count=5)
        text = dataset_to_csv(ds)
        assert text.splitlines()[0] == 't,u1,xhat1,etahat1'
        loaded = dataset_from_csv(text, ds.basis, ds.v_eta)
        np.testing.assert_array_equal(loaded.labels, ds.labels)

    def test_dataset_missing_labels(self):
        """缺少 etahat 列"""
        with pytest.raises(ConfigError):
            dataset_from_csv('t,xhat1\n0,1\n', BasisLibrary.empty(1), np.eye(1))


class TestArtifactStore:
    """测试产物存储与 manifest"""

    def test_manifest_after_commit(self, temp_dir, roll_plane):
        """退出上下文时写 manifest，记录 SHA-256"""
        with ArtifactStore(temp_dir) as store:
            path = store.systems.save(roll_plane)
        manifest = json.loads((temp_dir / MANIFEST).read_text(encoding='utf-8'))
        assert manifest['files'] == {'system.json': calculate_file_hash(path)}

    def test_no_manifest_on_failure(self, temp_dir, roll_plane):
        """阶段失败时不更新 manifest"""
        with pytest.raises(RuntimeError):
            with ArtifactStore(temp_dir) as store:
                store.systems.save(roll_plane)
                raise RuntimeError('boom')
        assert not (temp_dir / MANIFEST).exists()

    def test_manifest_merges(self, temp_dir, roll_plane):
        """后续阶段追加而不覆盖"""
        with ArtifactStore(temp_dir) as store:
            store.systems.save(roll_plane)
        with ArtifactStore(temp_dir) as store:
            store.reports.save_json('note', {'ok': True})
        files = json.loads((temp_dir / MANIFEST).read_text(encoding='utf-8'))['files']
        assert set(files) == {'system.json', 'reports/note.json'}

    def test_missing_upstream(self, temp_dir):
        """缺少上游产物"""
        store = ArtifactStore(temp_dir)
        with pytest.raises(ArtifactMissingError):
            store.systems.load()
        with pytest.raises(ArtifactMissingError):
            store.trajectories.load_all('train')

    def test_trajectories(self, temp_dir):
        """按编号保存与计数"""
        store = ArtifactStore(temp_dir)
        traj = Trajectory(np.array([0.0, 0.5]), np.ones((2, 1)), np.zeros((2, 1)), np.ones((2, 1)))
        for k in range(3):
            store.trajectories.save('test', k, traj)
        assert store.trajectories.count('test') == 3
        assert store.trajectories.count('train') == 0
        assert len(store.trajectories.load_all('test')) == 3

    def test_signals(self, temp_dir):
        """多正弦参数"""
        store = ArtifactStore(temp_dir)
        sig = Multisine([1.0], [3.0], [0.0], channels=1)
        store.signals.save('train', [sig])
        loaded = store.signals.load('train')
        t = np.linspace(0, 1, 7)
        np.testing.assert_allclose(loaded[0].sample(t), sig.sample(t))

    def test_learned_provenance(self, temp_dir, roll_plane):
        """学习结果记录上游哈希"""
        store = ArtifactStore(temp_dir)
        upstream = store.systems.save(roll_plane)
        model = UncertaintyModel.zero(np.eye(1), 0, BasisLibrary.empty(1))
        store.learned.save('unconstrained', LearnResult(model, 'unconstrained', None, None, None, 0.0),
                           store.provenance([upstream]))
        assert store.learned.labels() == ['unconstrained']
        assert store.learned.provenance('unconstrained') == {'system.json': store.hash(upstream)}

    def test_report_kind(self, temp_dir):
        """报告文档"""
        store = ArtifactStore(temp_dir)
        store.reports.save_json('verify', {'passed': True})
        assert store.reports.load_json('verify')['passed'] is True
