"""Offline decoding of imagined cursor kinematics from lag-embedded EEG."""

from .decoder import (
    DecoderModel,
    DesignMatrix,
    EvalReport,
    FitOptions,
    build_design,
    dumps_model,
    evaluate,
    fit,
    loads_model,
    predict,
    predict_series,
)
from .errors import (
    ConfigurationError,
    InsufficientDataError,
    KinebciError,
    NotWarmError,
    ProtocolError,
    RankDeficiencyError,
    SequencingError,
    ValidationError,
)
from .gesture import GestureCommand, GestureKind, ReplayConfig, decode_stream, encode, encode_stream, map_position, replay
from .protocol import RunStats, SessionConfig, Trial, calibrate, compute_stats, format_report, run_test_phase, run_training_phase
from .recording import Recording, read_recording, write_recording
from .signal import AcquisitionConfig, CausalFilterState, EegFrame, LagWindow, filter_block, filter_step, push
from .synth import (
    IntentPolicy,
    SyntheticSubject,
    encode_eeg,
    gen_pursuit_trajectory,
    intend,
    reverse_label,
)

__version__ = "0.1.0"
