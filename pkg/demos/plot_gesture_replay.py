"""
Replaying cursor positions as robot gestures
============================================

Positions recorded during a horizontal test run are replayed offline: a
cursor right of centre raises the robot's right hand, left of centre the
left hand. Commands go out at 8 Hz, only on change, with a keepalive each
second.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kinebci.gesture import ReplayConfig, encode_stream, replay
from kinebci.protocol import SessionConfig, calibrate, run_test_phase, run_training_phase
from kinebci.synth import IntentPolicy, SyntheticSubject

OUT = Path(__file__).parent / "_output"
OUT.mkdir(exist_ok=True)

cfg = SessionConfig(axis="horizontal")
subject = SyntheticSubject.random(seed=41, sigma=1e-3)
model = calibrate(run_training_phase(cfg, subject, seed=42))
# noisier EEG at test time produces the early wrong-way excursions
trials, rec = run_test_phase(model, subject.with_sigma(150.0), IntentPolicy(), cfg, seed=44)
for t in trials:
    print(f"{t.side}: {t.outcome} after {t.time_to_hit:.2f} s" if t.hit else f"{t.side}: timeout")

commands = replay(rec, ReplayConfig(command_rate=8, dead_zone=0.0))
wire = encode_stream(commands)
print(wire.decode()[:200], "...")
(OUT / "run.wire").write_bytes(wire)

###############################################################################
# Cursor trace with the gesture in effect shaded underneath.

time = np.arange(len(rec)) / cfg.fs
fig, ax = plt.subplots(figsize=(8, 3))
ax.plot(time, rec.x, lw=1)
for c, nxt in zip(commands, commands[1:] + [None]):
    end = time[-1] if nxt is None else nxt.timestamp_ms / 1000
    colour = {"R": "tab:green", "L": "tab:red", "N": "white"}[c.kind.value]
    ax.axvspan(c.timestamp_ms / 1000, end, color=colour, alpha=0.15, lw=0)
for t in trials:
    ax.text(time[t.start], 1.05, t.side, fontsize=8)
ax.set_ylim(-1.1, 1.2)
ax.set_xlabel("time (s)")
ax.set_ylabel("cursor x")
fig.tight_layout()
fig.savefig(OUT / "gesture_replay.png", dpi=120)
