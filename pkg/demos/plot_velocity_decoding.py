"""
Decoded versus observed pursuit velocity
========================================

A synthetic subject tracks a randomly moving cursor for five one-minute
trials while imagining the same movement. Its EEG is the velocity history
pushed through lag weights plus noise at a 10:1 power ratio. The decoder
is fit on those trials and compared against a fresh trial.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kinebci.decoder import evaluate
from kinebci.protocol import SessionConfig, calibrate, run_training_phase
from kinebci.synth import SyntheticSubject

OUT = Path(__file__).parent / "_output"
OUT.mkdir(exist_ok=True)

cfg = SessionConfig(axis="horizontal")
subject = SyntheticSubject.random(seed=3)
clean = run_training_phase(cfg, subject, seed=1)
sigma = subject.sigma_for_snr(clean.u, clean.v, snr=10.0)
subject = subject.with_sigma(sigma)
print(f"noise std for SNR 10: {sigma:.2f} uV")

training = run_training_phase(cfg, subject, seed=1)
model = calibrate(training, provenance={"seed": 1})
print(f"{len(training)} training samples, {model.width} coefficients")

held_out = run_training_phase(SessionConfig(n_training_trials=1), subject, seed=99)
rep = evaluate(model, held_out)
print(f"held-out r = {rep.r['x']:.3f}, RMSE = {rep.rmse['x']:.4f} units/s")

###############################################################################
# First twenty seconds of the held-out trial.

n = 20 * 128
t = rep.t[:n] / 128
fig, ax = plt.subplots(figsize=(7, 3))
ax.plot(t, rep.observed["x"][:n], label="observed", lw=1.5)
ax.plot(t, rep.decoded["x"][:n], label="decoded", lw=0.8)
ax.set_xlabel("time (s)")
ax.set_ylabel("velocity (units/s)")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "velocity_decoding.png", dpi=120)

###############################################################################
# Correlation over twenty independent subjects.

rs = []
for seed in range(20):
    s = SyntheticSubject.random(seed=100 + seed)
    s = s.with_sigma(s.sigma_for_snr(run_training_phase(cfg, s, seed=seed).u, snr=10.0))
    m = calibrate(run_training_phase(cfg, s, seed=seed))
    rs.append(evaluate(m, run_training_phase(SessionConfig(n_training_trials=1), s, seed=500 + seed)).r["x"])
print(f"r over 20 subjects: 5th percentile {np.percentile(rs, 5):.3f}, median {np.median(rs):.3f}")
