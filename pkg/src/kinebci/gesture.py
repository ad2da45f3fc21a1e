"""Cursor position -> robot hand gestures, replayed offline as a line protocol.

Wire grammar (ASCII, one command per line)::

    stream  := "HELLO kinebci/1\\n" command* "BYE\\n"
    command := "CMD " kind " " timestamp_ms "\\n"
    kind    := "R" | "L" | "N"

A command repeating the kind of its predecessor is a keepalive.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ProtocolError, ValidationError
from .recording import Recording
from .synth import canonical_axis

HELLO = b"HELLO kinebci/1\n"
BYE = b"BYE\n"
KEEPALIVE_MS = 1000


class GestureKind(enum.Enum):
    RIGHT_HAND = "R"
    LEFT_HAND = "L"
    NEUTRAL = "N"


@dataclass(frozen=True)
class GestureCommand:
    kind: GestureKind
    timestamp_ms: int


@dataclass(frozen=True)
class ReplayConfig:
    command_rate: float = 8.0
    dead_zone: float = 0.0
    axis: str = "x"

    def __post_init__(self):
        if not self.command_rate > 0:
            raise ValidationError(f"command_rate must be > 0, got {self.command_rate}")
        if not self.dead_zone >= 0:
            raise ValidationError(f"dead_zone must be >= 0, got {self.dead_zone}")
        canonical_axis(self.axis)


def map_position(x, dead_zone=0.0, prev: GestureKind | None = None) -> GestureKind:
    """Sign rule: right hand above ``dead_zone``, left hand below ``-dead_zone``.

    Inside the dead zone (including exactly zero) the previous gesture is held,
    or NEUTRAL if there is none.
    """
    if x > dead_zone:
        return GestureKind.RIGHT_HAND
    if x < -dead_zone:
        return GestureKind.LEFT_HAND
    return prev if prev is not None else GestureKind.NEUTRAL


def tick_samples(n_samples, fs, rate):
    """``(timestamp_ms, sample_index)`` for each command tick.

    The sample used at a tick is the latest one whose time does not exceed the
    tick time.
    """
    duration = (n_samples - 1) / fs
    n_ticks = int(np.floor(duration * rate + 1e-9)) + 1
    out = []
    for i in range(n_ticks):
        t_sec = i / rate
        idx = min(n_samples - 1, int(np.floor(t_sec * fs + 1e-9)))
        out.append((int(round(1000 * i / rate)), idx))
    return out


def replay_positions(positions, fs, cfg: ReplayConfig | None = None):
    """Change-driven command stream with a keepalive after each second of silence.

    Returns the list of commands and, aligned with it, the source sample index
    each command was derived from.
    """
    cfg = cfg or ReplayConfig()
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise ValidationError("cannot replay an empty position trace")
    commands, sources = [], []
    kind = None
    last_ms = None
    for ms, idx in tick_samples(positions.size, fs, cfg.command_rate):
        new = map_position(positions[idx], cfg.dead_zone, kind)
        if new != kind or ms - last_ms >= KEEPALIVE_MS:
            commands.append(GestureCommand(new, ms))
            sources.append(idx)
            last_ms = ms
        kind = new
    return commands, sources


def replay(recording: Recording, cfg: ReplayConfig | None = None) -> list[GestureCommand]:
    """Replay the recorded cursor position along ``cfg.axis`` as gesture commands."""
    cfg = cfg or ReplayConfig()
    if len(recording) == 0:
        raise ValidationError("cannot replay an empty recording")
    pos = recording.position(canonical_axis(cfg.axis))
    return replay_positions(pos, recording.config.fs, cfg)[0]


def is_keepalive(commands, i) -> bool:
    return i > 0 and commands[i].kind == commands[i - 1].kind


def encode(cmd: GestureCommand) -> bytes:
    return f"CMD {cmd.kind.value} {int(cmd.timestamp_ms)}\n".encode("ascii")


def encode_stream(commands) -> bytes:
    return HELLO + b"".join(encode(c) for c in commands) + BYE


_CMD = re.compile(rb"^CMD ([RLN]) (0|[1-9][0-9]*)$")


def decode_stream(data: bytes) -> list[GestureCommand]:
    """Parse a complete framed stream; raises `ProtocolError` on any deviation."""
    if not data.endswith(b"\n"):
        raise ProtocolError("stream must end with a newline")
    lines = data[:-1].split(b"\n")
    if len(lines) < 2 or lines[0] + b"\n" != HELLO or lines[-1] + b"\n" != BYE:
        raise ProtocolError("stream is not framed by HELLO kinebci/1 ... BYE")
    out = []
    prev_ms = -1
    for n, line in enumerate(lines[1:-1], start=2):
        m = _CMD.match(line)
        if not m:
            raise ProtocolError(f"line {n} is not a command: {line[:40]!r}")
        ms = int(m[2])
        if ms < prev_ms:
            raise ProtocolError(f"line {n}: timestamp {ms} goes backwards")
        prev_ms = ms
        out.append(GestureCommand(GestureKind(m[1].decode()), ms))
    return out


def write_stream(commands, sink) -> int:
    """Write the framed stream to a path or binary file-like; returns bytes written."""
    data = encode_stream(commands)
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)
    return len(data)
