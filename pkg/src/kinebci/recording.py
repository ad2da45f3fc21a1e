"""Aligned EEG / kinematics / annotation series and their CSV file format.

File layout::

    # kinebci-recording v1 fs=128 n=14
    t,ch0,...,ch13,u,v,x,y,phase,target
    0,...

Floats are written with ``repr`` so a read after a write is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ValidationError
from .signal import AcquisitionConfig, EegFrame

PHASES = ("training", "test", "prerun")
TARGETS = ("none", "RT", "LT", "UT", "DT")

_MAGIC = re.compile(r"^# kinebci-recording v1 fs=(?P<fs>\S+) n=(?P<n>\d+)\s*$")


@dataclass
class Recording:
    """Sample-aligned EEG and kinematics.

    ``eeg`` has shape ``(T, n_channels)``; every other series has length ``T``.
    Sample ``i`` has time index ``t = i``.
    """

    config: AcquisitionConfig
    eeg: np.ndarray
    u: np.ndarray
    v: np.ndarray
    x: np.ndarray
    y: np.ndarray
    phase: np.ndarray
    target: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.eeg = np.asarray(self.eeg, dtype=float)
        if self.eeg.ndim != 2 or self.eeg.shape[1] != self.config.n_channels:
            raise ConfigurationError(
                f"eeg must be (T, {self.config.n_channels}), got {self.eeg.shape}"
            )
        n = self.eeg.shape[0]
        for name in ("u", "v", "x", "y"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValidationError(f"{name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        for name, vocab in (("phase", PHASES), ("target", TARGETS)):
            arr = np.asarray(getattr(self, name), dtype=object)
            if arr.shape != (n,):
                raise ValidationError(f"{name} has shape {arr.shape}, expected ({n},)")
            bad = set(arr.tolist()) - set(vocab)
            if bad:
                raise ValidationError(f"unknown {name} labels {sorted(bad)}")
            setattr(self, name, arr)

    def __len__(self):
        return self.eeg.shape[0]

    @property
    def n_channels(self) -> int:
        return self.config.n_channels

    def velocity(self, axis: str) -> np.ndarray:
        return {"x": self.u, "y": self.v}[axis]

    def position(self, axis: str) -> np.ndarray:
        return {"x": self.x, "y": self.y}[axis]

    def frames(self):
        for t, row in enumerate(self.eeg):
            yield EegFrame(t, row)

    def segments(self):
        """Contiguous runs of equal ``(phase, target)`` as ``(phase, target, start, stop)``."""
        out = []
        begin = 0
        for i in range(1, len(self) + 1):
            if i == len(self) or self.phase[i] != self.phase[begin] or self.target[i] != self.target[begin]:
                out.append((self.phase[begin], self.target[begin], begin, i))
                begin = i
        return out

    @classmethod
    def concatenate(cls, parts: list["Recording"]) -> "Recording":
        if not parts:
            raise ValidationError("nothing to concatenate")
        cfg = parts[0].config
        if any(p.config != cfg for p in parts):
            raise ConfigurationError("recordings have different acquisition configs")
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
        return cls(cfg, cat("eeg"), cat("u"), cat("v"), cat("x"), cat("y"),
                   cat("phase"), cat("target"))

    def equals(self, other: "Recording") -> bool:
        """Bit-exact comparison of config and every series."""
        return (
            self.config == other.config
            and all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("eeg", "u", "v", "x", "y"))
            and list(self.phase) == list(other.phase)
            and list(self.target) == list(other.target)
        )


def _fmt_float(value) -> str:
    return repr(float(value))


def _fmt_fs(fs) -> str:
    return str(int(fs)) if float(fs).is_integer() else repr(float(fs))


def dumps_recording(rec: Recording) -> str:
    buf = io.StringIO()
    n = rec.n_channels
    buf.write(f"# kinebci-recording v1 fs={_fmt_fs(rec.config.fs)} n={n}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *(f"ch{i}" for i in range(n)), "u", "v", "x", "y", "phase", "target"])
    for t in range(len(rec)):
        writer.writerow([
            t,
            *map(_fmt_float, rec.eeg[t]),
            _fmt_float(rec.u[t]), _fmt_float(rec.v[t]),
            _fmt_float(rec.x[t]), _fmt_float(rec.y[t]),
            rec.phase[t], rec.target[t],
        ])
    return buf.getvalue()


def loads_recording(text: str, hp_cutoff=None, lp_cutoff=None) -> Recording:
    """Parse recording CSV text.

    The file header carries only ``fs`` and ``n``; filter cutoffs fall back to
    the acquisition defaults unless given.
    """
    lines = text.splitlines()
    if not lines:
        raise ValidationError("empty recording file")
    m = _MAGIC.match(lines[0])
    if not m:
        raise ValidationError(f"bad recording header line: {lines[0]!r}")
    fs = float(m["fs"])
    n = int(m["n"])
    kwargs = {"fs": fs, "n_channels": n}
    if hp_cutoff is not None:
        kwargs["hp_cutoff"] = hp_cutoff
    if lp_cutoff is not None:
        kwargs["lp_cutoff"] = lp_cutoff
    cfg = AcquisitionConfig(**kwargs)

    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("recording has no column header") from None
    expected = ["t", *(f"ch{i}" for i in range(n)), "u", "v", "x", "y", "phase", "target"]
    if header != expected:
        raise ValidationError(f"unexpected columns {header[:4]}..., expected {n + 7} columns")
    rows = list(reader)
    if not rows:
        raise ValidationError("recording has no samples")
    eeg = np.empty((len(rows), n))
    kin = np.empty((len(rows), 4))
    phase, target = [], []
    for i, row in enumerate(rows):
        if len(row) != n + 7:
            raise ValidationError(f"row {i} has {len(row)} fields, expected {n + 7}")
        if int(row[0]) != i:
            raise ValidationError(f"row {i} has t={row[0]}; t must be contiguous from 0")
        eeg[i] = [float(s) for s in row[1:n + 1]]
        kin[i] = [float(s) for s in row[n + 1:n + 5]]
        phase.append(row[n + 5])
        target.append(row[n + 6])
    return Recording(cfg, eeg, kin[:, 0], kin[:, 1], kin[:, 2], kin[:, 3], phase, target)


def write_recording(rec: Recording, path) -> str:
    """Write ``rec`` to ``path`` and return the SHA-256 of the file bytes."""
    data = dumps_recording(rec).encode("ascii")
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_recording(path, **kwargs) -> Recording:
    return loads_recording(Path(path).read_text(encoding="ascii"), **kwargs)
