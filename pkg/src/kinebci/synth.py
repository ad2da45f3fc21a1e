"""Synthetic subject used as ground truth for the decoding pipeline.

Two oracle directions are available:

* forward -- intended velocity is encoded into channel voltages through lag
  weights ``g[n, k]`` plus i.i.d. Gaussian background noise (`encode_eeg`);
* reverse -- arbitrary EEG is labelled with the output of a known decoder
  (`reverse_label`), so an exact least-squares solution exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfilt

from .decoder import AXES, DecoderModel, predict_series
from .errors import ConfigurationError, ValidationError
from .recording import Recording
from .signal import DEFAULT_N_CHANNELS, DEFAULT_N_LAGS, AcquisitionConfig, CausalFilterState, filter_block

PURSUIT_CUTOFF_HZ = 0.5
PURSUIT_SPEED = 0.3

_AXIS_ALIASES = {"x": "x", "y": "y", "horizontal": "x", "vertical": "y"}


def canonical_axis(axis: str) -> str:
    try:
        return _AXIS_ALIASES[axis]
    except KeyError:
        raise ConfigurationError(f"unknown axis {axis!r}") from None


def make_rng(seed):
    """``numpy`` generator from an int seed, a `SeedSequence` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SyntheticSubject:
    """Forward model from intended velocity to EEG.

    ``encoding[axis]`` has shape ``(n_channels, n_lags + 1)`` in microvolts per
    screen-unit/s; ``sigma`` is the background noise std in microvolts.
    """

    encoding: dict
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        enc = {a: np.array(self.encoding.get(a, 0.0), dtype=float) for a in AXES}
        shapes = {w.shape for w in enc.values() if w.ndim == 2}
        if len(shapes) != 1:
            raise ConfigurationError("encoding weights must be 2-D with matching shapes")
        (shape,) = shapes
        for a in AXES:
            if enc[a].ndim != 2:
                enc[a] = np.zeros(shape)
            enc[a].setflags(write=False)
        object.__setattr__(self, "encoding", enc)

    @property
    def n_channels(self) -> int:
        return self.encoding["x"].shape[0]

    @property
    def n_lags(self) -> int:
        return self.encoding["x"].shape[1] - 1

    @classmethod
    def random(cls, n_channels=DEFAULT_N_CHANNELS, n_lags=DEFAULT_N_LAGS, sigma=0.0, seed=0, scale=10.0):
        """Subject with standard-normal encoding weights times ``scale``, drawn from ``seed``."""
        rng = np.random.default_rng(seed)
        enc = {a: scale * rng.standard_normal((n_channels, n_lags + 1)) for a in AXES}
        return cls(enc, sigma, seed)

    @classmethod
    def silent(cls, n_channels=DEFAULT_N_CHANNELS, n_lags=DEFAULT_N_LAGS, sigma=1.0, seed=0):
        """Subject whose EEG carries no kinematic information."""
        return cls({a: np.zeros((n_channels, n_lags + 1)) for a in AXES}, sigma, seed)

    def with_sigma(self, sigma) -> "SyntheticSubject":
        return SyntheticSubject(self.encoding, sigma, self.seed)

    def signal(self, u, v=None) -> np.ndarray:
        """Noiseless channel voltages ``(T, N)``; history before sample 0 is zero."""
        u = np.asarray(u, dtype=float)
        v = np.zeros_like(u) if v is None else np.asarray(v, dtype=float)
        if u.ndim != 1 or v.shape != u.shape:
            raise ConfigurationError("u and v must be 1-D series of equal length")
        T = u.size
        out = np.zeros((T, self.n_channels))
        for k in range(min(self.n_lags + 1, T)):
            out[k:] += np.outer(u[:T - k], self.encoding["x"][:, k])
            out[k:] += np.outer(v[:T - k], self.encoding["y"][:, k])
        return out

    def sigma_for_snr(self, u, v=None, snr=10.0) -> float:
        """Noise std giving mean channel signal power / noise power equal to ``snr``."""
        power = float(np.mean(self.signal(u, v) ** 2))
        return float(np.sqrt(power / snr))


@dataclass(frozen=True)
class IntentPolicy:
    """Proportional intent toward the target, saturated at ``cap``."""

    gain: float = 2.0
    cap: float = 0.5

    def __post_init__(self):
        if not (self.gain > 0 and self.cap > 0):
            raise ValidationError(f"gain and cap must be > 0, got {self.gain}, {self.cap}")


@dataclass
class Trajectory:
    u: np.ndarray
    v: np.ndarray
    x: np.ndarray
    y: np.ndarray


def _reflect_integrate(vel, dt):
    """Integrate ``vel`` inside [-1, 1], mirroring position and velocity at the walls."""
    pos = np.empty_like(vel)
    out_vel = np.empty_like(vel)
    p = 0.0
    sign = 1.0
    for i, raw in enumerate(vel.tolist()):
        step = sign * raw
        p += step * dt
        while p > 1.0 or p < -1.0:
            p = (2.0 if p > 1.0 else -2.0) - p
            sign = -sign
            step = -step
        pos[i] = p
        out_vel[i] = step
    return out_vel, pos


def gen_pursuit_trajectory(duration, fs, axis="x", seed=None, cutoff=PURSUIT_CUTOFF_HZ, speed=PURSUIT_SPEED):
    """Random practitioner-style pursuit movement along one axis.

    Velocity is white noise through a 2nd-order Butterworth low-pass at
    ``cutoff`` Hz, scaled to RMS ``speed``; position starts at the origin and is
    reflected at the screen edges, which also reverses the velocity label.
    """
    if not duration > 0:
        raise ValidationError(f"duration must be > 0, got {duration}")
    if not fs > 0:
        raise ValidationError(f"fs must be > 0, got {fs}")
    axis = canonical_axis(axis)
    n = int(round(duration * fs))
    rng = make_rng(seed)
    burn = int(round(4 * fs / cutoff))
    noise = rng.standard_normal(n + burn)
    sos = butter(2, cutoff, btype="low", fs=fs, output="sos")
    raw = sosfilt(sos, noise)[burn:]
    rms = float(np.sqrt(np.mean(raw ** 2)))
    if rms > 0:
        raw = raw * (speed / rms)
    vel, pos = _reflect_integrate(raw, 1.0 / fs)
    zeros = np.zeros(n)
    if axis == "x":
        return Trajectory(vel, zeros, pos, zeros.copy())
    return Trajectory(zeros, vel, zeros.copy(), pos)


def encode_eeg(
    subject: SyntheticSubject,
    u,
    v=None,
    *,
    x=None,
    y=None,
    cfg: AcquisitionConfig | None = None,
    rng=None,
    phase="training",
    target="none",
    filtered=False,
) -> Recording:
    """Forward-encode velocity into a labelled recording.

    Parameters
    ----------
    u, v : array_like
        Intended velocity per axis; ``v`` defaults to zeros.
    x, y : array_like, optional
        Position labels to carry along (zeros if omitted).
    rng : seed or Generator, optional
        Noise source; defaults to a generator seeded with ``subject.seed``.
    filtered : bool
        Pass the synthesized channels through the acquisition filter chain.
    """
    cfg = cfg or AcquisitionConfig(n_channels=subject.n_channels)
    if cfg.n_channels != subject.n_channels:
        raise ConfigurationError(
            f"subject has {subject.n_channels} channels, config expects {cfg.n_channels}"
        )
    u = np.asarray(u, dtype=float)
    v = np.zeros_like(u) if v is None else np.asarray(v, dtype=float)
    T = u.size
    if T < subject.n_lags + 1:
        raise ValidationError(f"need at least {subject.n_lags + 1} samples, got {T}")
    eeg = subject.signal(u, v)
    if subject.sigma > 0:
        rng = make_rng(subject.seed if rng is None else rng)
        eeg += subject.sigma * rng.standard_normal(eeg.shape)
    if filtered:
        eeg = filter_block(eeg, cfg)
    zeros = np.zeros(T)
    return Recording(
        cfg, eeg, u, v,
        zeros if x is None else x,
        zeros.copy() if y is None else y,
        np.full(T, phase, dtype=object),
        np.full(T, target, dtype=object),
    )


class SubjectStream:
    """Sample-by-sample counterpart of `encode_eeg` for closed-loop use."""

    def __init__(self, subject: SyntheticSubject, rng=None, cfg: AcquisitionConfig | None = None, filtered=False):
        self.subject = subject
        self.rng = make_rng(subject.seed if rng is None else rng)
        self.cfg = cfg or AcquisitionConfig(n_channels=subject.n_channels)
        self.filtered = filtered
        self._filter = CausalFilterState.for_config(self.cfg)
        self._hist = np.zeros((subject.n_lags + 1, 2))

    def step(self, u, v=0.0) -> np.ndarray:
        self._hist[1:] = self._hist[:-1]
        self._hist[0] = (u, v)
        enc = self.subject.encoding
        e = enc["x"] @ self._hist[:, 0] + enc["y"] @ self._hist[:, 1]
        if self.subject.sigma > 0:
            e = e + self.subject.sigma * self.rng.standard_normal(e.shape)
        if self.filtered:
            e = filter_block(e[None, :], self.cfg, self._filter)[0]
        return e


def white_noise_recording(n_channels=DEFAULT_N_CHANNELS, n_samples=7680, fs=128.0, seed=None, scale=10.0):
    """Unlabelled recording of i.i.d. Gaussian channels (labels all zero)."""
    rng = make_rng(seed)
    cfg = AcquisitionConfig(fs=fs, n_channels=n_channels)
    eeg = scale * rng.standard_normal((n_samples, n_channels))
    zeros = np.zeros(n_samples)
    return Recording(cfg, eeg, zeros, zeros, zeros, zeros,
                     np.full(n_samples, "training", dtype=object),
                     np.full(n_samples, "none", dtype=object))


def random_model(n_channels=DEFAULT_N_CHANNELS, n_lags=DEFAULT_N_LAGS, axes=AXES, seed=None, scale=0.01):
    """Decoder with Gaussian coefficients, used as a ground-truth labeller."""
    rng = make_rng(seed)
    intercept = {a: float(rng.standard_normal()) * 0.1 for a in axes}
    weights = {a: scale * rng.standard_normal((n_channels, n_lags + 1)) for a in axes}
    return DecoderModel(n_channels, n_lags, tuple(axes), intercept, weights)


def reverse_label(subject_eeg: Recording, truth_model: DecoderModel) -> Recording:
    """Replace velocity labels with ``truth_model``'s decode of the EEG.

    The first ``n_lags`` samples cannot be decoded and are labelled zero, as is
    any axis the truth model does not cover.
    """
    decoded = predict_series(truth_model, subject_eeg.eeg)
    k = truth_model.n_lags
    labels = {}
    for a in AXES:
        lab = np.zeros(len(subject_eeg))
        if a in decoded:
            lab[k:] = decoded[a]
        labels[a] = lab
    return Recording(subject_eeg.config, subject_eeg.eeg.copy(), labels["x"], labels["y"],
                     subject_eeg.x.copy(), subject_eeg.y.copy(),
                     subject_eeg.phase.copy(), subject_eeg.target.copy())


def intend(policy: IntentPolicy, cursor_pos, target_pos, axis="x") -> tuple[float, float]:
    """Intended ``(u, v)``: clamped proportional pursuit on ``axis``, zero on the other."""
    vel = policy.gain * (float(target_pos) - float(cursor_pos))
    vel = min(policy.cap, max(-policy.cap, vel))
    return (vel, 0.0) if canonical_axis(axis) == "x" else (0.0, vel)
