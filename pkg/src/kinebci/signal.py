"""Frames, causal acquisition filtering and the decoder's lag window.

The acquisition chain is a first-order high-pass followed by a second-order
Butterworth low-pass, both obtained by the prewarped bilinear transform so the
digital -3 dB points land exactly on the configured cutoffs.  Both stages run in
transposed direct form II, which lets the streaming path (`filter_step`) and
the block path (`filter_block`) share one state layout.

Coefficients at the defaults (fs=128, hp=0.16 Hz, lp=30 Hz)::

    high-pass  b = [0.996088, -0.996088]          a = [1, -0.992177]
    low-pass   b = [0.264713, 0.529425, 0.264713] a = [1, -0.115064, 0.173914]
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError, NotWarmError, SequencingError

DEFAULT_FS = 128.0
DEFAULT_HP_CUTOFF = 0.16
DEFAULT_LP_CUTOFF = 30.0
DEFAULT_N_CHANNELS = 14
DEFAULT_N_LAGS = 5


@dataclass(frozen=True)
class EegFrame:
    """One sample of channel voltages (microvolts) at integer index ``t``."""

    t: int
    channels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "channels", np.asarray(self.channels, dtype=float))


@dataclass(frozen=True)
class AcquisitionConfig:
    fs: float = DEFAULT_FS
    hp_cutoff: float = DEFAULT_HP_CUTOFF
    lp_cutoff: float = DEFAULT_LP_CUTOFF
    n_channels: int = DEFAULT_N_CHANNELS

    def __post_init__(self):
        if not 0 < self.hp_cutoff < self.lp_cutoff < self.fs / 2:
            raise ConfigurationError(
                f"need 0 < hp_cutoff < lp_cutoff < fs/2, got hp={self.hp_cutoff}, "
                f"lp={self.lp_cutoff}, fs={self.fs}"
            )
        if self.n_channels < 1:
            raise ConfigurationError(f"n_channels must be >= 1, got {self.n_channels}")


@lru_cache(maxsize=32)
def highpass_coefficients(cutoff, fs):
    """First-order high-pass ``(b, a)`` via prewarped bilinear transform."""
    w = math.tan(math.pi * cutoff / fs)
    b0 = 1.0 / (1.0 + w)
    return (b0, -b0), (1.0, (w - 1.0) / (w + 1.0))


@lru_cache(maxsize=32)
def lowpass_coefficients(cutoff, fs):
    """Second-order Butterworth low-pass ``(b, a)`` via prewarped bilinear transform."""
    w = math.tan(math.pi * cutoff / fs)
    w2 = w * w
    norm = 1.0 / (1.0 + math.sqrt(2.0) * w + w2)
    b0 = w2 * norm
    a1 = 2.0 * (w2 - 1.0) * norm
    a2 = (1.0 - math.sqrt(2.0) * w + w2) * norm
    return (b0, 2.0 * b0, b0), (1.0, a1, a2)


@dataclass
class CausalFilterState:
    """Per-channel delay registers of the two filter stages.

    ``hp`` has shape ``(n_channels, 1)`` and ``lp`` has shape ``(n_channels, 2)``.
    """

    n_channels: int
    hp: np.ndarray = field(init=False)
    lp: np.ndarray = field(init=False)

    def __post_init__(self):
        self.reset()

    def reset(self):
        self.hp = np.zeros((self.n_channels, 1))
        self.lp = np.zeros((self.n_channels, 2))

    @classmethod
    def for_config(cls, cfg: AcquisitionConfig) -> "CausalFilterState":
        return cls(cfg.n_channels)


def filter_step(state: CausalFilterState, frame: EegFrame, cfg: AcquisitionConfig) -> EegFrame:
    """Filter one frame causally, advancing ``state`` in place."""
    x = frame.channels
    if x.shape != (cfg.n_channels,) or state.n_channels != cfg.n_channels:
        raise ConfigurationError(
            f"frame has {x.shape[0] if x.ndim == 1 else x.shape} channels, "
            f"config expects {cfg.n_channels}"
        )
    (hb0, hb1), (_, ha1) = highpass_coefficients(cfg.hp_cutoff, cfg.fs)
    (lb0, lb1, lb2), (_, la1, la2) = lowpass_coefficients(cfg.lp_cutoff, cfg.fs)

    hp_z = state.hp[:, 0]
    h = hb0 * x + hp_z
    state.hp[:, 0] = hb1 * x - ha1 * h

    z1 = state.lp[:, 0]
    z2 = state.lp[:, 1]
    y = lb0 * h + z1
    state.lp[:, 0] = lb1 * h - la1 * y + z2
    state.lp[:, 1] = lb2 * h - la2 * y
    return EegFrame(frame.t, y)


def filter_block(data, cfg: AcquisitionConfig, state: CausalFilterState | None = None):
    """Filter a ``(T, n_channels)`` block; equivalent to repeated `filter_step`.

    If ``state`` is given it is used as the initial condition and advanced.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != cfg.n_channels:
        raise ConfigurationError(
            f"block must have shape (T, {cfg.n_channels}), got {data.shape}"
        )
    if state is None:
        state = CausalFilterState.for_config(cfg)
    hb, ha = highpass_coefficients(cfg.hp_cutoff, cfg.fs)
    lb, la = lowpass_coefficients(cfg.lp_cutoff, cfg.fs)
    h, hp_zf = lfilter(hb, ha, data, axis=0, zi=state.hp.T)
    y, lp_zf = lfilter(lb, la, h, axis=0, zi=state.lp.T)
    state.hp = np.ascontiguousarray(hp_zf.T)
    state.lp = np.ascontiguousarray(lp_zf.T)
    return y


class LagWindow:
    """Sliding window over the newest ``n_lags + 1`` frames.

    Index ``k`` of the window is the frame ``k`` samples before the newest one,
    so ``window[0]`` is ``e[t]`` and ``window[n_lags]`` is ``e[t - n_lags]``.
    """

    def __init__(self, n_lags: int = DEFAULT_N_LAGS):
        if n_lags < 0:
            raise ConfigurationError(f"n_lags must be >= 0, got {n_lags}")
        self.n_lags = int(n_lags)
        self._frames: deque[EegFrame] = deque(maxlen=self.n_lags + 1)

    def push(self, frame: EegFrame) -> "LagWindow":
        if self._frames:
            last = self._frames[0].t
            if frame.t != last + 1:
                raise SequencingError(f"expected frame t={last + 1}, got t={frame.t}")
            if frame.channels.shape != self._frames[0].channels.shape:
                raise ConfigurationError("frame channel count changed mid-stream")
        self._frames.appendleft(frame)
        return self

    @property
    def warm(self) -> bool:
        return len(self._frames) == self.n_lags + 1

    @property
    def t(self) -> int:
        if not self._frames:
            raise NotWarmError("window is empty")
        return self._frames[0].t

    def __len__(self):
        return len(self._frames)

    def __getitem__(self, k) -> EegFrame:
        return self._frames[k]

    def frames(self) -> list[EegFrame]:
        """Frames ordered newest to oldest."""
        return list(self._frames)

    def as_array(self) -> np.ndarray:
        """Window contents as a ``(n_lags + 1, n_channels)`` array, row ``k`` = lag ``k``."""
        if not self.warm:
            raise NotWarmError(
                f"window holds {len(self._frames)} of {self.n_lags + 1} frames"
            )
        return np.stack([f.channels for f in self._frames])

    def clear(self):
        self._frames.clear()


def push(window: LagWindow, frame: EegFrame) -> LagWindow:
    return window.push(frame)
