"""Three-phase cursor-control session: training, calibration, test.

Screen coordinates are normalized to [-1, 1] per axis with the origin at the
screen centre.  Test targets sit at the edges (centre +/-1) and count as hit
once the cursor is within ``target_halfwidth`` of the centre.
"""

from __future__ import annotations

import hashlib
import json
import statistics
from dataclasses import asdict, dataclass, field

import numpy as np

from .decoder import AXES, DecoderModel, FitOptions, build_design, fit, predict
from .errors import ConfigurationError, ValidationError
from .recording import Recording
from .signal import DEFAULT_N_LAGS, AcquisitionConfig, EegFrame, LagWindow
from .synth import (
    IntentPolicy,
    SubjectStream,
    SyntheticSubject,
    canonical_axis,
    encode_eeg,
    gen_pursuit_trajectory,
    intend,
)

SIDES = {"x": ("RT", "LT"), "y": ("UT", "DT")}
SIDE_SIGN = {"RT": 1.0, "UT": 1.0, "LT": -1.0, "DT": -1.0}


@dataclass(frozen=True)
class SessionConfig:
    n_training_trials: int = 5
    trial_duration: float = 60.0
    test_timeout: float = 15.0
    trials_per_run: int = 6
    axis: str = "horizontal"
    target_halfwidth: float = 0.1
    target_distance: float = 1.0
    prerun: float = 2.0
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)

    def __post_init__(self):
        canonical_axis(self.axis)
        for name in ("n_training_trials", "trial_duration", "test_timeout", "trials_per_run",
                     "target_halfwidth", "target_distance"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.target_halfwidth < 1:
            raise ValidationError(f"target_halfwidth must be < 1, got {self.target_halfwidth}")
        if self.prerun < 0:
            raise ValidationError(f"prerun must be >= 0, got {self.prerun}")

    @property
    def axis_key(self) -> str:
        return canonical_axis(self.axis)

    @property
    def fs(self) -> float:
        return self.acquisition.fs


@dataclass
class Trial:
    """One target-acquisition attempt.

    ``start``/``stop`` index the trial's samples in the test-phase recording;
    ``trace`` is the cursor position along the active axis over those samples.
    """

    side: str
    trace: np.ndarray
    outcome: str
    time_to_hit: float | None
    start: int
    stop: int

    @property
    def hit(self) -> bool:
        return self.outcome == "hit"


@dataclass(frozen=True)
class RunStats:
    """Success statistics across runs.

    ``rates`` are the per-run success fractions in ascending order; ``std`` is
    the sample standard deviation (n-1 denominator), or 0 with
    ``std_defined=False`` for a single run.
    """

    rates: tuple
    mean: float
    std: float
    n_trials: int
    n_runs: int
    std_defined: bool = True


def _seed_children(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


def run_training_phase(cfg: SessionConfig, subject: SyntheticSubject, seed=None, filtered=False) -> Recording:
    """Pursuit trials encoded to EEG, labelled with the pursued velocity."""
    if subject.n_channels != cfg.acquisition.n_channels:
        raise ConfigurationError(
            f"subject has {subject.n_channels} channels, config expects {cfg.acquisition.n_channels}"
        )
    children = _seed_children(seed, cfg.n_training_trials + 1)
    trajs = [
        gen_pursuit_trajectory(cfg.trial_duration, cfg.fs, cfg.axis_key, np.random.default_rng(c))
        for c in children[:-1]
    ]
    cat = lambda name: np.concatenate([getattr(tr, name) for tr in trajs])  # noqa: E731
    return encode_eeg(subject, cat("u"), cat("v"), x=cat("x"), y=cat("y"), cfg=cfg.acquisition,
                      rng=np.random.default_rng(children[-1]), filtered=filtered)


def config_hash(*parts) -> str:
    payload = json.dumps(
        [asdict(p) if hasattr(p, "__dataclass_fields__") else p for p in parts],
        sort_keys=True, default=str,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def active_axes(rec: Recording):
    axes = tuple(a for a in AXES if np.any(rec.velocity(a) != 0))
    return axes or AXES


def calibrate(rec: Recording, opts: FitOptions | None = None, n_lags=DEFAULT_N_LAGS, axes=None,
              provenance=None) -> DecoderModel:
    """Fit a decoder on a training recording.

    ``axes`` defaults to the axes with any nonzero velocity label.  The model's
    provenance records a hash of the acquisition config and fit options plus
    whatever ``provenance`` supplies (typically the session seed).
    """
    opts = opts or FitOptions()
    axes = active_axes(rec) if axes is None else tuple(canonical_axis(a) for a in axes)
    design = build_design(rec, n_lags, axes)
    prov = {"config_hash": config_hash(rec.config, opts, {"n_lags": n_lags, "axes": axes})}
    prov.update(provenance or {})
    return fit(design, opts, prov)


def run_test_phase(model: DecoderModel, subject: SyntheticSubject, policy: IntentPolicy,
                   cfg: SessionConfig, seed=None, filtered=False):
    """Closed-loop simulation of one run of test trials.

    Each sample the subject intends toward the target, the EEG is synthesized,
    the decoder output is integrated into the cursor position (clamped to
    [-1, 1]).  A pre-run idle segment precedes the first trial; the cursor
    restarts at the origin for every trial.

    Returns
    -------
    trials : list of Trial
    recording : Recording
        Every simulated sample; ``u``/``v`` hold the decoded cursor velocity.
    """
    axis = cfg.axis_key
    if axis not in model.axes:
        raise ConfigurationError(f"model decodes {model.axes}, session needs axis {axis!r}")
    if model.n_channels != subject.n_channels or model.n_channels != cfg.acquisition.n_channels:
        raise ConfigurationError("model, subject and acquisition channel counts differ")

    target_seq, noise_seq = _seed_children(seed, 2)
    target_rng = np.random.default_rng(target_seq)
    stream = SubjectStream(subject, np.random.default_rng(noise_seq), cfg.acquisition, filtered)
    window = LagWindow(model.n_lags)
    fs = cfg.fs
    dt = 1.0 / fs
    ai = 0 if axis == "x" else 1

    eeg, vel, pos_log, phase, target = [], [], [], [], []
    state = {"t": 0, "pos": 0.0}

    def step(goal, phase_label, side):
        iu, iv = intend(policy, state["pos"], goal, axis) if goal is not None else (0.0, 0.0)
        e = stream.step(iu, iv)
        window.push(EegFrame(state["t"], e))
        decoded = predict(model, window)[ai] if window.warm else 0.0
        state["pos"] = min(1.0, max(-1.0, state["pos"] + decoded * dt))
        eeg.append(e)
        vel.append(decoded)
        pos_log.append(state["pos"])
        phase.append(phase_label)
        target.append(side)
        state["t"] += 1

    for _ in range(int(round(cfg.prerun * fs))):
        step(None, "prerun", "none")

    trials = []
    n_timeout = int(round(cfg.test_timeout * fs))
    for _ in range(cfg.trials_per_run):
        side = SIDES[axis][int(target_rng.integers(2))]
        centre = SIDE_SIGN[side] * cfg.target_distance
        state["pos"] = 0.0
        start = state["t"]
        time_to_hit = None
        for j in range(n_timeout):
            step(centre, "test", side)
            if abs(state["pos"] - centre) <= cfg.target_halfwidth:
                time_to_hit = (j + 1) / fs
                break
        stop = state["t"]
        trials.append(Trial(side, np.array(pos_log[start:stop]),
                            "hit" if time_to_hit is not None else "timeout",
                            time_to_hit, start, stop))

    n = len(vel)
    vel = np.array(vel)
    pos_arr = np.array(pos_log)
    zeros = np.zeros(n)
    u, v = (vel, zeros) if axis == "x" else (zeros, vel)
    x, y = (pos_arr, zeros.copy()) if axis == "x" else (zeros.copy(), pos_arr)
    eeg_arr = np.array(eeg).reshape(n, cfg.acquisition.n_channels)
    rec = Recording(cfg.acquisition, eeg_arr, u, v, x, y,
                    np.array(phase, dtype=object), np.array(target, dtype=object))
    return trials, rec


def compute_stats(runs) -> RunStats:
    """Per-run success rates, their mean and sample standard deviation."""
    runs = [list(r) for r in runs]
    if not runs or any(len(r) == 0 for r in runs):
        raise ValidationError("compute_stats needs at least one nonempty run")
    rates = sorted(sum(t.hit for t in r) / len(r) for r in runs)
    mean = float(statistics.fmean(rates))
    if len(rates) > 1:
        std = float(statistics.stdev(rates))
        defined = True
    else:
        std, defined = 0.0, False
    return RunStats(tuple(rates), mean, std, sum(len(r) for r in runs), len(runs), defined)


_AXIS_TITLE = {"y": "Vertical Direction", "x": "Horizontal Direction"}


def format_report(stats_by_axis: dict) -> str:
    """Table-style text report of `RunStats` keyed by axis (``x``/``y`` or names)."""
    cols = []
    for key in ("y", "x"):
        for given, st in stats_by_axis.items():
            if canonical_axis(given) == key:
                cols.append((_AXIS_TITLE[key], st))
    label_w = len("Success Rate (standard deviation)") + 2
    rows = [("", [c[0] for c in cols])]
    rows.append(("Number of Trials", [str(st.n_trials) for _, st in cols]))
    rows.append(("Number of Runs", [str(st.n_runs) for _, st in cols]))
    rows.append((
        "Success Rate (standard deviation)",
        [f"{100 * st.mean:.1f}% (+/- {100 * st.std:.1f}%)" if st.std_defined
         else f"{100 * st.mean:.1f}% (+/- n/a)" for _, st in cols],
    ))
    col_w = max([len(c) for _, cells in rows for c in cells] + [1]) + 2
    lines = ["# kinebci-report v1"]
    for label, cells in rows:
        lines.append((label.ljust(label_w) + "".join(c.ljust(col_w) for c in cells)).rstrip())
    return "\n".join(lines) + "\n"
