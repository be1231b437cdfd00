"""
JSON 模型文档
每个文档带 schema_version 与 kind；矩阵存为 {"shape": [r, c], "data": [行优先]}，
非线性与基函数按标签存储。浮点数使用 repr 往返，读回后逐位一致。
"""

import json
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import ArtifactMissingError, ConfigError
from certmodel.estimator.augment import augment
from certmodel.estimator.filter import EstimatorFilter
from certmodel.learning.config import LearnResult
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import ExtendedModel, StabilityCertificate, UncertaintyModel
from certmodel.models.nonlinear import nonlinearity_from_dict
from certmodel.models.system import SystemModel
from certmodel.sdp.linalg import SymMatrix

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DOCUMENT_KINDS = ('system', 'extended', 'estimator', 'learn_result', 'certificate', 'sets', 'signals',
                  'report')

SYSTEM_MATRICES = ('a', 'b_u', 'c', 's_g', 'v_g', 's_eta', 'v_eta', 'b_omega', 'd_nu')


def matrix_to_doc(arr) -> Dict[str, Any]:
    arr = np.atleast_2d(np.asarray(getattr(arr, 'array', arr), dtype=float))
    return {'shape': list(arr.shape), 'data': [float(v) for v in arr.reshape(-1)]}


def matrix_from_doc(doc: Dict[str, Any], name: str = 'matrix') -> np.ndarray:
    try:
        shape = tuple(int(v) for v in doc['shape'])
        return np.asarray(doc['data'], dtype=float).reshape(shape)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{name}: 矩阵格式错误 ({e})") from e


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, SymMatrix):
        return obj.array.tolist()
    if hasattr(obj, 'to_dict'):
        return obj.to_dict()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"无法序列化类型 {type(obj).__name__}")


def dump_document(kind: str, body: Dict[str, Any],
                  provenance: Optional[Dict[str, str]] = None) -> str:
    """
    生成带版本与类型头的 JSON 文本

    Args:
        kind: 文档类型
        body: 文档主体
        provenance: 上游产物名 -> SHA-256
    """
    if kind not in DOCUMENT_KINDS:
        raise ValueError(f"未知文档类型: {kind}")
    doc = {'schema_version': SCHEMA_VERSION, 'kind': kind}
    if provenance:
        doc['provenance'] = dict(sorted(provenance.items()))
    doc.update(body)
    return json.dumps(doc, indent=2, ensure_ascii=False, default=_json_default) + '\n'


def load_document(text: str, kind: str, source: str = '<document>') -> Dict[str, Any]:
    """
    解析并检查文档头

    Raises:
        ConfigError: JSON 格式错误或 schema_version 不支持
        ArtifactMissingError: 文档类型不符
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: JSON 格式错误 ({e})") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: 顶层必须是对象")
    version = doc.get('schema_version')
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{source}: 不支持的 schema_version {version}")
    if doc.get('kind') != kind:
        raise ArtifactMissingError(f"{source}: 需要 {kind} 文档，实际为 {doc.get('kind')}")
    return doc


# ---- system ----

def system_to_doc(sys: SystemModel) -> Dict[str, Any]:
    body = {'name': sys.name}
    for key in SYSTEM_MATRICES:
        body[key] = matrix_to_doc(getattr(sys, key))
    body['g'] = sys.g.to_dict()
    body['eta_true'] = sys.eta_true.to_dict() if sys.eta_true is not None else None
    body['lipschitz_g'] = list(sys.lipschitz_g)
    return body


def system_from_doc(doc: Dict[str, Any]) -> SystemModel:
    try:
        mats = {key: matrix_from_doc(doc[key], f"system.{key}") for key in SYSTEM_MATRICES}
        return SystemModel(g=nonlinearity_from_dict(doc['g']),
                           eta_true=nonlinearity_from_dict(doc.get('eta_true')),
                           lipschitz_g=tuple(float(v) for v in doc['lipschitz_g']),
                           name=doc.get('name', 'system'), **mats)
    except KeyError as e:
        raise ConfigError(f"system.{e.args[0]}: 缺失字段") from e


# ---- uncertainty / certificate / extended ----

def uncertainty_to_doc(theta: UncertaintyModel) -> Dict[str, Any]:
    return {
        'theta_l': matrix_to_doc(theta.theta_l),
        'b_l': matrix_to_doc(theta.b_l),
        'theta_n': matrix_to_doc(theta.theta_n),
        's_eta_l': matrix_to_doc(theta.s_eta_l),
        'basis': theta.basis.to_dict(),
    }


def uncertainty_from_doc(doc: Dict[str, Any]) -> UncertaintyModel:
    return UncertaintyModel(
        matrix_from_doc(doc['theta_l'], 'theta_l'),
        matrix_from_doc(doc['b_l'], 'b_l'),
        matrix_from_doc(doc['theta_n'], 'theta_n'),
        matrix_from_doc(doc['s_eta_l'], 's_eta_l'),
        BasisLibrary.from_dict(doc['basis']),
    )


def certificate_to_doc(cert: StabilityCertificate) -> Dict[str, Any]:
    return {'type': cert.kind, 'p': matrix_to_doc(cert.p), 'scalars': dict(cert.scalars)}


def certificate_from_doc(doc: Optional[Dict[str, Any]]) -> Optional[StabilityCertificate]:
    if doc is None:
        return None
    p = matrix_from_doc(doc['p'], 'certificate.p')
    return StabilityCertificate(SymMatrix(p), doc['type'],
                                {k: float(v) for k, v in doc.get('scalars', {}).items()})


def extended_to_doc(model: ExtendedModel) -> Dict[str, Any]:
    return {
        'system': system_to_doc(model.system),
        'uncertainty': uncertainty_to_doc(model.uncertainty),
        'certificate': certificate_to_doc(model.certificate) if model.certificate else None,
    }


def extended_from_doc(doc: Dict[str, Any]) -> ExtendedModel:
    return ExtendedModel(system_from_doc(doc['system']),
                         uncertainty_from_doc(doc['uncertainty']),
                         certificate_from_doc(doc.get('certificate')))


# ---- learn result ----

def learn_result_to_doc(result: LearnResult) -> Dict[str, Any]:
    return {
        'method': result.method,
        'class': result.model_class,
        'uncertainty': uncertainty_to_doc(result.model),
        'certificate': certificate_to_doc(result.certificate) if result.certificate else None,
        'cost_bound': result.cost_bound,
        'realized_cost': result.realized_cost,
        'hyper': dict(result.hyper),
        'diagnostics': dict(result.diagnostics),
    }


def learn_result_from_doc(doc: Dict[str, Any]) -> LearnResult:
    bound = doc.get('cost_bound')
    return LearnResult(
        model=uncertainty_from_doc(doc['uncertainty']),
        method=doc['method'],
        model_class=doc.get('class'),
        certificate=certificate_from_doc(doc.get('certificate')),
        cost_bound=float(bound) if bound is not None else None,
        realized_cost=float(doc['realized_cost']),
        hyper={k: float(v) for k, v in doc.get('hyper', {}).items()},
        diagnostics=dict(doc.get('diagnostics', {})),
    )


# ---- estimator ----

def estimator_to_doc(filt: EstimatorFilter) -> Dict[str, Any]:
    return {
        'system': system_to_doc(filt.aug.system),
        'r': filt.aug.r,
        'e': matrix_to_doc(filt.e),
        'k': matrix_to_doc(filt.k),
        'h': matrix_to_doc(filt.h),
        'l_gx': filt.l_gx,
        'bounds': dict(filt.bounds),
    }


def estimator_from_doc(doc: Dict[str, Any]) -> EstimatorFilter:
    aug = augment(system_from_doc(doc['system']), int(doc['r']))
    return EstimatorFilter(aug, matrix_from_doc(doc['e'], 'e'), matrix_from_doc(doc['k'], 'k'),
                           matrix_from_doc(doc['h'], 'h'), float(doc.get('l_gx', 0.0)),
                           {k: float(v) for k, v in doc.get('bounds', {}).items()})


# ---- ellipsoid sets ----

def sets_to_doc(f_set: Ellipsoid, u_set: Ellipsoid) -> Dict[str, Any]:
    return {
        'F': {'shape': matrix_to_doc(f_set.shape), 'degenerate': f_set.degenerate},
        'U': {'shape': matrix_to_doc(u_set.shape), 'degenerate': u_set.degenerate},
    }


def sets_from_doc(doc: Dict[str, Any]) -> Tuple[Ellipsoid, Ellipsoid]:
    def one(key):
        part = doc[key]
        return Ellipsoid(SymMatrix(matrix_from_doc(part['shape'], key)), bool(part.get('degenerate', False)))
    return one('F'), one('U')
