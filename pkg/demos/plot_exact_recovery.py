"""
Exact recovery on reverse-labelled data
=======================================

White-noise EEG is labelled by a known decoder, so the least-squares fit has
a zero-residual solution. Recovering it to round-off checks the solver.
"""

import numpy as np

from kinebci.decoder import build_design, fit, predict_series
from kinebci.synth import random_model, reverse_label, white_noise_recording

truth = random_model(n_channels=14, n_lags=5, seed=1)
rec = reverse_label(white_noise_recording(14, 60 * 128, seed=0), truth)

design = build_design(rec, n_lags=5)
print("design matrix", design.X.shape)  # (7675, 85)

model = fit(design)
for axis in model.axes:
    err = np.max(np.abs(model.coefficients(axis) - truth.coefficients(axis)))
    print(f"axis {axis}: max coefficient error {err:.2e}")

###############################################################################
# The normal equations give the same answer on this well-conditioned design.

X = design.X
oracle = np.linalg.solve(X.T @ X, X.T @ design.targets["x"])
print("QR vs normal equations:", np.max(np.abs(oracle - model.coefficients("x"))))

decoded = predict_series(model, rec.eeg)
print("max prediction error:", np.max(np.abs(decoded["x"] - rec.u[5:])))

###############################################################################
# A duplicated channel makes the design rank deficient. The fit refuses
# unless a ridge penalty is given.

from kinebci.decoder import FitOptions  # noqa: E402
from kinebci.errors import RankDeficiencyError  # noqa: E402

rec.eeg[:, 3] = rec.eeg[:, 2]
try:
    fit(build_design(rec))
except RankDeficiencyError as exc:
    print(exc)
ridge = fit(build_design(rec), FitOptions(ridge=1e-6))
print("ridge fit weights for the duplicated pair at lag 0:", ridge.weights["x"][2:4, 0])
