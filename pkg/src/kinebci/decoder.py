"""Time-lagged linear velocity decoder.

For each axis the decoded velocity at sample ``t`` is::

    u[t] = a0 + sum_{n=0}^{N-1} sum_{k=0}^{K} b[n, k] * e_n[t - k]

The design row for sample ``t`` is ``[1, e[t], e[t-1], ..., e[t-K]]`` where each
``e[.]`` is the full channel vector, so the weight for channel ``n`` at lag ``k``
sits in column ``1 + k * N + n``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, InsufficientDataError, NotWarmError, RankDeficiencyError, ValidationError
from .recording import Recording
from .signal import DEFAULT_N_LAGS, LagWindow

AXES = ("x", "y")
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DecoderModel:
    """Intercepts and lag weights per decoded axis.

    ``weights[axis]`` has shape ``(n_channels, n_lags + 1)`` with
    ``weights[axis][n, k]`` multiplying channel ``n`` at lag ``k``.
    """

    n_channels: int
    n_lags: int
    axes: tuple
    intercept: dict
    weights: dict
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes or any(a not in AXES for a in axes) or len(set(axes)) != len(axes):
            raise ConfigurationError(f"axes must be a nonempty subset of {AXES}, got {axes}")
        object.__setattr__(self, "axes", axes)
        shape = (self.n_channels, self.n_lags + 1)
        weights = {}
        for a in axes:
            w = np.array(self.weights[a], dtype=float).reshape(shape)
            w.setflags(write=False)
            weights[a] = w
            if not (np.all(np.isfinite(w)) and math.isfinite(self.intercept[a])):
                raise ValidationError(f"non-finite coefficients on axis {a}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "intercept", {a: float(self.intercept[a]) for a in axes})

    @property
    def width(self) -> int:
        return 1 + self.n_channels * (self.n_lags + 1)

    def coefficients(self, axis: str) -> np.ndarray:
        """Coefficient vector for ``axis`` in design-column order (intercept first)."""
        return np.concatenate([[self.intercept[axis]], self.weights[axis].T.ravel()])

    @classmethod
    def from_coefficients(cls, n_channels, n_lags, coefs: dict, provenance=None) -> "DecoderModel":
        """Inverse of `coefficients`: build a model from design-ordered vectors."""
        axes = tuple(a for a in AXES if a in coefs)
        intercept, weights = {}, {}
        for a in axes:
            c = np.asarray(coefs[a], dtype=float)
            intercept[a] = c[0]
            weights[a] = c[1:].reshape(n_lags + 1, n_channels).T
        return cls(n_channels, n_lags, axes, intercept, weights, dict(provenance or {}))

    @classmethod
    def zeros(cls, n_channels, n_lags=DEFAULT_N_LAGS, axes=AXES, intercept=0.0) -> "DecoderModel":
        return cls(n_channels, n_lags, tuple(axes),
                   {a: intercept for a in axes},
                   {a: np.zeros((n_channels, n_lags + 1)) for a in axes})

    def allclose(self, other: "DecoderModel", rtol=0.0, atol=0.0) -> bool:
        return (
            (self.n_channels, self.n_lags, self.axes) == (other.n_channels, other.n_lags, other.axes)
            and all(np.allclose(self.coefficients(a), other.coefficients(a), rtol=rtol, atol=atol)
                    for a in self.axes)
        )


@dataclass
class DesignMatrix:
    """Lag-embedded rows and aligned per-axis velocity targets.

    Row ``i`` corresponds to sample ``t[i] = i + n_lags``.
    """

    X: np.ndarray
    targets: dict
    n_channels: int
    n_lags: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_lags, self.n_lags + self.X.shape[0])

    @property
    def width(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FitOptions:
    ridge: float = 0.0
    standardize: bool = False

    def __post_init__(self):
        if not self.ridge >= 0:
            raise ValidationError(f"ridge must be >= 0, got {self.ridge}")


@dataclass
class EvalReport:
    """Decoded-vs-observed agreement per axis.

    ``r[axis]`` is ``None`` when either series has zero variance.
    """

    r: dict
    rmse: dict
    n_samples: int
    t: np.ndarray
    observed: dict
    decoded: dict

    def r_undefined(self, axis: str) -> bool:
        return self.r[axis] is None


def lag_embed(eeg, n_lags: int) -> np.ndarray:
    """Lag-embedded design rows (with leading ones column) for a ``(T, N)`` array."""
    eeg = np.asarray(eeg, dtype=float)
    T, N = eeg.shape
    if T < n_lags + 1:
        raise InsufficientDataError(f"need at least {n_lags + 1} samples, got {T}")
    rows = T - n_lags
    X = np.empty((rows, 1 + N * (n_lags + 1)))
    X[:, 0] = 1.0
    for k in range(n_lags + 1):
        X[:, 1 + k * N:1 + (k + 1) * N] = eeg[n_lags - k:T - k]
    return X


def build_design(recording: Recording, n_lags: int = DEFAULT_N_LAGS, axes=AXES) -> DesignMatrix:
    X = lag_embed(recording.eeg, n_lags)
    targets = {a: recording.velocity(a)[n_lags:].copy() for a in axes}
    return DesignMatrix(X, targets, recording.n_channels, n_lags)


def _solve_least_squares(X, Y, ridge):
    """Minimize ``|Y - X B|^2 + ridge * |B[1:]|^2`` column-wise via pivoted QR."""
    n, p = X.shape
    if ridge > 0:
        penalty = np.sqrt(ridge) * np.eye(p)[1:]
        X = np.vstack([X, penalty])
        Y = np.vstack([Y, np.zeros((p - 1, Y.shape[1]))])
    elif n < p:
        raise RankDeficiencyError(p - n, p)
    Q, R, perm = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * diag[0] if diag.size else 0.0
    rank = int(np.count_nonzero(diag > tol))
    if rank < p:
        raise RankDeficiencyError(p - rank, p)
    B = np.empty((p, Y.shape[1]))
    B[perm] = scipy.linalg.solve_triangular(R, Q.T @ Y)
    return B


def fit(design: DesignMatrix, opts: FitOptions | None = None, provenance=None) -> DecoderModel:
    """Least-squares fit of intercept and lag weights for every target axis.

    Parameters
    ----------
    design : DesignMatrix
        Output of `build_design`.
    opts : FitOptions, optional
        ``ridge`` penalizes the squared norm of the non-intercept coefficients;
        ``standardize`` z-scores the non-intercept columns before solving and
        maps the solution back to raw units.

    Raises
    ------
    RankDeficiencyError
        If ``ridge == 0`` and the design does not have full column rank.
    """
    opts = opts or FitOptions()
    axes = tuple(a for a in AXES if a in design.targets)
    if not axes:
        raise ConfigurationError("design has no target axes")
    X = design.X
    Y = np.column_stack([design.targets[a] for a in axes])

    if opts.standardize:
        mean = X[:, 1:].mean(axis=0)
        scale = X[:, 1:].std(axis=0)
        if opts.ridge > 0:
            scale = np.where(scale > 0, scale, 1.0)
        elif np.any(scale == 0):
            raise RankDeficiencyError(int(np.count_nonzero(scale == 0)), X.shape[1])
        Z = np.empty_like(X)
        Z[:, 0] = 1.0
        Z[:, 1:] = (X[:, 1:] - mean) / scale
        B = _solve_least_squares(Z, Y, opts.ridge)
        B[1:] /= scale[:, None]
        B[0] -= mean @ B[1:]
    else:
        B = _solve_least_squares(X, Y, opts.ridge)

    prov = {"ridge": opts.ridge, "standardize": opts.standardize, "rows": X.shape[0]}
    prov.update(provenance or {})
    return DecoderModel.from_coefficients(
        design.n_channels, design.n_lags, {a: B[:, i] for i, a in enumerate(axes)}, prov
    )


def _check_window(model, window: LagWindow):
    if window.n_lags != model.n_lags:
        raise ConfigurationError(f"window has {window.n_lags} lags, model has {model.n_lags}")
    if not window.warm:
        raise NotWarmError(f"window holds {len(window)} of {model.n_lags + 1} frames")
    if window[0].channels.shape != (model.n_channels,):
        raise ConfigurationError(
            f"frames have {window[0].channels.shape} channels, model expects {model.n_channels}"
        )


def predict(model: DecoderModel, window: LagWindow) -> tuple[float, float]:
    """Decoded ``(u, v)`` for the newest sample in ``window``.

    An axis the model does not decode is returned as ``0.0``.
    """
    _check_window(model, window)
    lags = window.as_array()
    out = []
    for a in AXES:
        if a in model.axes:
            out.append(model.intercept[a] + float(np.sum(model.weights[a].T * lags)))
        else:
            out.append(0.0)
    return out[0], out[1]


def predict_series(model: DecoderModel, eeg) -> dict:
    """Vectorized decode over a ``(T, N)`` array; outputs start at ``t = n_lags``."""
    eeg = np.asarray(eeg, dtype=float)
    if eeg.ndim != 2 or eeg.shape[1] != model.n_channels:
        raise ConfigurationError(f"eeg must be (T, {model.n_channels}), got {eeg.shape}")
    X = lag_embed(eeg, model.n_lags)
    return {a: X @ model.coefficients(a) for a in model.axes}


def pearson_r(a, b):
    """Pearson correlation, or ``None`` if either series is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    da = a - a.mean()
    db = b - b.mean()
    r = float(da @ db / math.sqrt(float(da @ da) * float(db @ db)))
    return min(1.0, max(-1.0, r))


def evaluate(model: DecoderModel, recording: Recording) -> EvalReport:
    if recording.n_channels != model.n_channels:
        raise ConfigurationError(
            f"recording has {recording.n_channels} channels, model expects {model.n_channels}"
        )
    decoded = predict_series(model, recording.eeg)
    t = np.arange(model.n_lags, len(recording))
    observed = {a: recording.velocity(a)[model.n_lags:] for a in model.axes}
    r = {a: pearson_r(decoded[a], observed[a]) for a in model.axes}
    rmse = {a: float(np.sqrt(np.mean((decoded[a] - observed[a]) ** 2))) for a in model.axes}
    return EvalReport(r, rmse, len(t), t, observed, decoded)


# -- model file -----------------------------------------------------------------

_MODEL_MAGIC = "# kinebci-model"


def _fmt(x) -> str:
    return format(float(x), ".17e")


def dumps_model(model: DecoderModel) -> str:
    """Serialize as ``key = value`` lines; floats carry 18 significant digits."""
    lines = [
        f"{_MODEL_MAGIC} v{MODEL_FORMAT_VERSION}",
        f"version = {MODEL_FORMAT_VERSION}",
        f"n_channels = {model.n_channels}",
        f"n_lags = {model.n_lags}",
        f"axes = {','.join(model.axes)}",
    ]
    for a in model.axes:
        lines.append(f"intercept.{a} = {_fmt(model.intercept[a])}")
        lines.append(f"weights.{a} = {' '.join(_fmt(w) for w in model.weights[a].ravel())}")
    for key in sorted(model.provenance):
        value = str(model.provenance[key])
        if "\n" in value:
            raise ValidationError(f"provenance value for {key!r} spans lines")
        lines.append(f"provenance.{key} = {value}")
    return "\n".join(lines) + "\n"


_KEY = re.compile(r"^(?P<key>[A-Za-z0-9_.\-]+) = (?P<value>.*)$")


def loads_model(text: str) -> DecoderModel:
    """Parse `dumps_model` output. Provenance values come back as strings."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_MODEL_MAGIC):
        raise ValidationError("not a kinebci model file")
    fields = {}
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        m = _KEY.match(line)
        if not m:
            raise ValidationError(f"model line {i} is malformed: {line[:40]!r}")
        fields[m["key"]] = m["value"]
    try:
        version = int(fields["version"])
        if version != MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model version {version}")
        n = int(fields["n_channels"])
        k = int(fields["n_lags"])
        axes = tuple(fields["axes"].split(","))
        intercept = {a: float(fields[f"intercept.{a}"]) for a in axes}
        weights = {}
        for a in axes:
            w = np.array([float(s) for s in fields[f"weights.{a}"].split()])
            if w.size != n * (k + 1):
                raise ValidationError(f"weights.{a} has {w.size} values, expected {n * (k + 1)}")
            weights[a] = w.reshape(n, k + 1)
    except KeyError as exc:
        raise ValidationError(f"model file is missing field {exc.args[0]}") from None
    provenance = {key[len("provenance."):]: v for key, v in fields.items() if key.startswith("provenance.")}
    return DecoderModel(n, k, axes, intercept, weights, provenance)
