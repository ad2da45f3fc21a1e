"""
Acquisition filter chain
========================

The headset pipeline band-limits each channel between 0.16 Hz and 30 Hz.
Here the causal chain (first-order high-pass, second-order Butterworth
low-pass) is probed with a constant and with sinusoids.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy.signal import freqz

from kinebci.signal import AcquisitionConfig, filter_block, highpass_coefficients, lowpass_coefficients

OUT = Path(__file__).parent / "_output"
OUT.mkdir(exist_ok=True)

cfg = AcquisitionConfig()
print(cfg)

###############################################################################
# Analytic magnitude response of the cascade.

hb, ha = highpass_coefficients(cfg.hp_cutoff, cfg.fs)
lb, la = lowpass_coefficients(cfg.lp_cutoff, cfg.fs)
freqs = np.logspace(-2, np.log10(cfg.fs / 2 * 0.999), 400)
_, h1 = freqz(hb, ha, worN=freqs, fs=cfg.fs)
_, h2 = freqz(lb, la, worN=freqs, fs=cfg.fs)
gain_db = 20 * np.log10(np.abs(h1 * h2))

###############################################################################
# A constant input decays away; a 30 Hz sinusoid comes out about 3 dB down.

dc = filter_block(np.full((int(10 / cfg.hp_cutoff * cfg.fs), cfg.n_channels), 1.0), cfg)
print(f"DC residual after {10 / cfg.hp_cutoff:.1f} s: {abs(dc[-1, 0]):.2e}")

t = np.arange(int(10 * cfg.fs)) / cfg.fs
y = filter_block(np.tile(np.sin(2 * np.pi * 30 * t)[:, None], (1, cfg.n_channels)), cfg)[:, 0]
tail = y[-int(cfg.fs):]
print(f"steady-state gain at 30 Hz: {20 * np.log10(np.sqrt(2) * tail.std()):.2f} dB")

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.semilogx(freqs, gain_db)
ax.axhline(-3, color="grey", lw=0.8, ls="--")
for f in (cfg.hp_cutoff, cfg.lp_cutoff):
    ax.axvline(f, color="grey", lw=0.8)
ax.set_ylim(-40, 3)
ax.set_xlabel("frequency (Hz)")
ax.set_ylabel("gain (dB)")
fig.tight_layout()
fig.savefig(OUT / "filter_response.png", dpi=120)
