"""
输入与噪声信号
所有信号都实现 sample(times) -> (T, dim)，积分器在半步网格上预采样
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.signal

logger = logging.getLogger(__name__)

DEFAULT_AMPLITUDE_RANGE = (0.01, 0.1)
DEFAULT_FREQUENCY_RANGE = (0.6 * np.pi, 3.0 * np.pi)
DEFAULT_PHASE_RANGE = (0.0, 0.94 * np.pi)
DEFAULT_COMPONENT_RANGE = (2, 10)
DEFAULT_T_F = 20.0


class Signal:
    """时间信号基类"""

    dim: int = 0

    def sample(self, times) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t: float) -> np.ndarray:
        return self.sample(np.atleast_1d(float(t)))[0]


class ZeroSignal(Signal):
    """恒为零"""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def sample(self, times) -> np.ndarray:
        return np.zeros((np.size(times), self.dim))


class ConstantSignal(Signal):
    def __init__(self, value):
        self.value = np.atleast_1d(np.asarray(value, dtype=float))
        self.dim = self.value.size

    def sample(self, times) -> np.ndarray:
        return np.tile(self.value, (np.size(times), 1))


class SampledSignal(Signal):
    """
    网格采样信号，网格之间线性插值，网格外保持端点值
    """

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != times.size:
            raise ValueError(f"采样点数 {values.shape[0]} 与时间点数 {times.size} 不一致")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("时间网格必须严格递增")
        self.times = times
        self.values = values
        self.dim = values.shape[1]

    def sample(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float).reshape(-1)
        if self.times.size == 1:
            return np.tile(self.values[0], (t.size, 1))
        return np.column_stack([np.interp(t, self.times, self.values[:, j]) for j in range(self.dim)])


@dataclass(frozen=True)
class MultisineSpec:
    """
    多正弦输入的随机分布

    Attributes:
        amplitude_range: 幅值范围 (m)
        frequency_range: 角频率范围 (rad/s)
        phase_range: 相位范围 (rad)
        component_range: 分量个数范围（闭区间整数）
        t_f: 仿真时长 (s)
        seed: 随机种子
        channels: 输入维度 l
        active_channel: 激励通道，其余通道恒为 0
    """
    amplitude_range: Tuple[float, float] = DEFAULT_AMPLITUDE_RANGE
    frequency_range: Tuple[float, float] = DEFAULT_FREQUENCY_RANGE
    phase_range: Tuple[float, float] = DEFAULT_PHASE_RANGE
    component_range: Tuple[int, int] = DEFAULT_COMPONENT_RANGE
    t_f: float = DEFAULT_T_F
    seed: int = 0
    channels: int = 2
    active_channel: int = 0

    def __post_init__(self):
        for name in ('amplitude_range', 'frequency_range', 'phase_range', 'component_range'):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} 区间为空: [{lo}, {hi}]")
        if self.amplitude_range[0] < 0:
            raise ValueError("幅值必须非负")
        if int(self.component_range[0]) < 1:
            raise ValueError("分量个数至少为 1")
        if self.t_f <= 0:
            raise ValueError(f"t_f 必须为正: {self.t_f}")
        if not 0 <= self.active_channel < self.channels:
            raise ValueError(f"激励通道 {self.active_channel} 超出范围 [0, {self.channels})")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'amplitude_range': list(self.amplitude_range),
            'frequency_range': list(self.frequency_range),
            'phase_range': list(self.phase_range),
            'component_range': [int(v) for v in self.component_range],
            't_f': self.t_f,
            'seed': self.seed,
            'channels': self.channels,
            'active_channel': self.active_channel,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MultisineSpec':
        return cls(
            amplitude_range=tuple(float(v) for v in data.get('amplitude_range', DEFAULT_AMPLITUDE_RANGE)),
            frequency_range=tuple(float(v) for v in data.get('frequency_range', DEFAULT_FREQUENCY_RANGE)),
            phase_range=tuple(float(v) for v in data.get('phase_range', DEFAULT_PHASE_RANGE)),
            component_range=tuple(int(v) for v in data.get('component_range', DEFAULT_COMPONENT_RANGE)),
            t_f=float(data.get('t_f', DEFAULT_T_F)),
            seed=int(data.get('seed', 0)),
            channels=int(data.get('channels', 2)),
            active_channel=int(data.get('active_channel', 0)),
        )


class Multisine(Signal):
    """
    u_k(t) = (max αᵢ / Σαᵢ)·Σ αᵢ sin(ωᵢ t + φᵢ)，k 为激励通道，其余通道为 0
    """

    def __init__(self, amplitudes, frequencies, phases, channels: int = 2, active_channel: int = 0):
        self.amplitudes = np.asarray(amplitudes, dtype=float).reshape(-1)
        self.frequencies = np.asarray(frequencies, dtype=float).reshape(-1)
        self.phases = np.asarray(phases, dtype=float).reshape(-1)
        if not (self.amplitudes.size == self.frequencies.size == self.phases.size):
            raise ValueError("幅值、频率、相位个数不一致")
        self.dim = int(channels)
        self.active_channel = int(active_channel)

    @property
    def gain(self) -> float:
        total = float(np.sum(self.amplitudes))
        if total == 0.0:
            return 0.0
        return float(np.max(self.amplitudes)) / total

    def sample(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float).reshape(-1)
        out = np.zeros((t.size, self.dim))
        phase = np.outer(t, self.frequencies) + self.phases
        out[:, self.active_channel] = self.gain * (np.sin(phase) @ self.amplitudes)
        return out

    def derivative(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float).reshape(-1)
        out = np.zeros((t.size, self.dim))
        phase = np.outer(t, self.frequencies) + self.phases
        out[:, self.active_channel] = self.gain * (np.cos(phase) @ (self.amplitudes * self.frequencies))
        return out

    def scaled(self, factor: float) -> 'Multisine':
        return Multisine(self.amplitudes * factor, self.frequencies, self.phases,
                         self.dim, self.active_channel)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'amplitudes': self.amplitudes.tolist(),
            'frequencies': self.frequencies.tolist(),
            'phases': self.phases.tolist(),
            'channels': self.dim,
            'active_channel': self.active_channel,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Multisine':
        return cls(data['amplitudes'], data['frequencies'], data['phases'],
                   int(data.get('channels', 2)), int(data.get('active_channel', 0)))


def generate_multisine(spec: MultisineSpec, rng: Optional[np.random.Generator] = None) -> Multisine:
    """
    按分布随机生成多正弦输入

    Args:
        spec: 分布参数
        rng: 随机数发生器，缺省由 spec.seed 构造

    Returns:
        Multisine（同一种子结果相同）
    """
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    lo, hi = spec.component_range
    count = int(rng.integers(int(lo), int(hi) + 1))
    amplitudes = rng.uniform(*spec.amplitude_range, size=count)
    frequencies = rng.uniform(*spec.frequency_range, size=count)
    phases = rng.uniform(*spec.phase_range, size=count)
    return Multisine(amplitudes, frequencies, phases, spec.channels, spec.active_channel)


class MultisineBank:
    """
    一组多正弦信号的向量化采样（分量个数不同的补零幅值）
    """

    def __init__(self, signals: Sequence[Multisine]):
        if not signals:
            raise ValueError("信号组为空")
        self.signals: List[Multisine] = list(signals)
        dims = {s.dim for s in self.signals}
        if len(dims) != 1:
            raise ValueError(f"信号维度不一致: {sorted(dims)}")
        self.dim = dims.pop()
        width = max(s.amplitudes.size for s in self.signals)
        count = len(self.signals)
        self._amp = np.zeros((count, width))
        self._freq = np.zeros((count, width))
        self._phase = np.zeros((count, width))
        for i, s in enumerate(self.signals):
            k = s.amplitudes.size
            self._amp[i, :k] = s.amplitudes * s.gain
            self._freq[i, :k] = s.frequencies
            self._phase[i, :k] = s.phases
        self._active = np.array([s.active_channel for s in self.signals])

    def __len__(self) -> int:
        return len(self.signals)

    def sample(self, times) -> np.ndarray:
        """
        Returns:
            (B, T, dim)
        """
        t = np.asarray(times, dtype=float).reshape(-1)
        phase = t[None, :, None] * self._freq[:, None, :] + self._phase[:, None, :]
        active = np.einsum('btk,bk->bt', np.sin(phase), self._amp)
        out = np.zeros((len(self.signals), t.size, self.dim))
        out[np.arange(len(self.signals)), :, self._active] = active
        return out


class SinusoidalNoise(Signal):
    """
    可微合成噪声 ν(t) = Σ aᵢ sin(ωᵢ t + φᵢ)（逐通道），提供解析导数
    """

    def __init__(self, amplitudes, frequencies, phases):
        self.amplitudes = np.atleast_2d(np.asarray(amplitudes, dtype=float))
        self.frequencies = np.atleast_2d(np.asarray(frequencies, dtype=float))
        self.phases = np.atleast_2d(np.asarray(phases, dtype=float))
        if not (self.amplitudes.shape == self.frequencies.shape == self.phases.shape):
            raise ValueError("噪声参数形状不一致")
        self.dim = self.amplitudes.shape[0]

    @classmethod
    def random(cls, dim: int, level: float, rng: np.random.Generator,
               components: int = 4, max_frequency: float = 20.0) -> 'SinusoidalNoise':
        amp = rng.uniform(0.0, 1.0, size=(dim, components))
        amp *= level / np.maximum(amp.sum(axis=1, keepdims=True), 1e-300)
        freq = rng.uniform(0.1, max_frequency, size=(dim, components))
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(dim, components))
        return cls(amp, freq, phase)

    def sample(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float).reshape(-1)
        phase = t[:, None, None] * self.frequencies[None] + self.phases[None]
        return np.sum(self.amplitudes[None] * np.sin(phase), axis=2)

    def derivative(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float).reshape(-1)
        phase = t[:, None, None] * self.frequencies[None] + self.phases[None]
        return np.sum(self.amplitudes[None] * self.frequencies[None] * np.cos(phase), axis=2)


def band_limited_noise(times, dim: int, level: float, cutoff: float,
                       rng: np.random.Generator, order: int = 4) -> SampledSignal:
    """
    Butterworth 低通滤波的白噪声，按 RMS 归一到 level

    Args:
        times: 均匀时间网格
        dim: 通道数
        level: 目标 RMS
        cutoff: 截止频率 (Hz)
        rng: 随机数发生器
        order: 滤波器阶数
    """
    t = np.asarray(times, dtype=float).reshape(-1)
    if level == 0.0 or dim == 0:
        return SampledSignal(t, np.zeros((t.size, dim)))
    if t.size < 3 * (order + 1) * 2:
        raise ValueError("时间网格过短，无法滤波")
    dt = float(t[1] - t[0])
    nyquist = 0.5 / dt
    if not 0 < cutoff < nyquist:
        raise ValueError(f"截止频率 {cutoff} Hz 必须在 (0, {nyquist:.3g}) 内")
    b, a = scipy.signal.butter(order, cutoff / nyquist)
    white = rng.standard_normal((t.size, dim))
    filtered = scipy.signal.filtfilt(b, a, white, axis=0)
    rms = np.sqrt(np.mean(filtered ** 2, axis=0))
    rms[rms == 0] = 1.0
    return SampledSignal(t, filtered * (level / rms))
