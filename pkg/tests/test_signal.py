import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import butter, freqz

from kinebci.errors import ConfigurationError, NotWarmError, SequencingError
from kinebci.signal import (
    AcquisitionConfig,
    CausalFilterState,
    EegFrame,
    LagWindow,
    filter_block,
    filter_step,
    highpass_coefficients,
    lowpass_coefficients,
    push,
)

CFG = AcquisitionConfig()


def run_stream(data, cfg=CFG):
    state = CausalFilterState.for_config(cfg)
    return np.array([filter_step(state, EegFrame(t, row), cfg).channels for t, row in enumerate(data)])


def steady_amplitude(y, freq, fs):
    # least-squares fit of a sinusoid at a known frequency
    t = np.arange(y.size) / fs
    basis = np.column_stack([np.sin(2 * np.pi * freq * t), np.cos(2 * np.pi * freq * t)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return float(np.hypot(*coef))


def test_defaults():
    assert (CFG.fs, CFG.hp_cutoff, CFG.lp_cutoff, CFG.n_channels) == (128.0, 0.16, 30.0, 14)


@pytest.mark.parametrize("kwargs", [
    {"hp_cutoff": 0.0}, {"hp_cutoff": 40.0}, {"lp_cutoff": 64.0}, {"n_channels": 0},
])
def test_config_invariants(kwargs):
    with pytest.raises(ConfigurationError):
        AcquisitionConfig(**kwargs)


def test_coefficients_match_scipy_butter():
    b, a = highpass_coefficients(0.16, 128.0)
    sb, sa = butter(1, 0.16, btype="high", fs=128.0)
    np.testing.assert_allclose(b, sb, rtol=1e-12)
    np.testing.assert_allclose(a, sa, rtol=1e-12)
    b, a = lowpass_coefficients(30.0, 128.0)
    sb, sa = butter(2, 30.0, btype="low", fs=128.0)
    np.testing.assert_allclose(b, sb, rtol=1e-12)
    np.testing.assert_allclose(a, sa, rtol=1e-12)


def test_dc_rejected():
    c = 37.5
    n = int(10 / CFG.hp_cutoff * CFG.fs)
    y = run_stream(np.full((n, CFG.n_channels), c))
    assert np.all(np.abs(y[-1]) < 0.01 * abs(c))


def test_minus_3db_at_lowpass_cutoff():
    fs = CFG.fs
    t = np.arange(int(10 * fs)) / fs
    x = np.sin(2 * np.pi * CFG.lp_cutoff * t)
    y = filter_block(np.tile(x[:, None], (1, CFG.n_channels)), CFG)[:, 0]
    amp = steady_amplitude(y[-int(fs):], CFG.lp_cutoff, fs)
    gain_db = 20 * np.log10(amp)
    assert abs(gain_db - (-3.0)) <= 0.5
    # analytic response of the cascade at the same frequency
    hb, ha = highpass_coefficients(CFG.hp_cutoff, fs)
    lb, la = lowpass_coefficients(CFG.lp_cutoff, fs)
    _, h1 = freqz(hb, ha, worN=[CFG.lp_cutoff], fs=fs)
    _, h2 = freqz(lb, la, worN=[CFG.lp_cutoff], fs=fs)
    assert amp == pytest.approx(abs(h1[0] * h2[0]), rel=1e-6)


def test_zero_in_zero_out():
    y = run_stream(np.zeros((200, CFG.n_channels)))
    assert np.all(y == 0.0)


def test_reset_zeroes_state(rng):
    state = CausalFilterState.for_config(CFG)
    filter_step(state, EegFrame(0, rng.standard_normal(14)), CFG)
    assert np.any(state.hp != 0)
    state.reset()
    assert np.all(state.hp == 0) and np.all(state.lp == 0)


def test_channel_mismatch():
    state = CausalFilterState.for_config(CFG)
    with pytest.raises(ConfigurationError):
        filter_step(state, EegFrame(0, np.zeros(13)), CFG)
    with pytest.raises(ConfigurationError):
        filter_block(np.zeros((10, 13)), CFG)


def test_stream_equals_block_and_state_carries(rng):
    data = rng.standard_normal((300, CFG.n_channels))
    streamed = run_stream(data)
    state = CausalFilterState.for_config(CFG)
    first = filter_block(data[:120], CFG, state)
    second = filter_block(data[120:], CFG, state)
    np.testing.assert_allclose(np.vstack([first, second]), streamed, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    r = np.random.default_rng(seed)
    x = r.standard_normal((64, CFG.n_channels))
    y = r.standard_normal((64, CFG.n_channels))
    lhs = filter_block(a * x + b * y, CFG)
    rhs = a * filter_block(x, CFG) + b * filter_block(y, CFG)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 99))
def test_causality(seed, cut):
    x = np.random.default_rng(seed).standard_normal((100, CFG.n_channels))
    full = run_stream(x)
    truncated = run_stream(x[:cut])
    np.testing.assert_array_equal(full[:cut], truncated)


def frames(n, start=0, channels=3):
    return [EegFrame(t, np.full(channels, float(t))) for t in range(start, start + n)]


def test_window_warm_after_k_plus_one():
    w = LagWindow(5)
    for f in frames(5):
        push(w, f)
    assert not w.warm
    with pytest.raises(NotWarmError):
        w.as_array()
    push(w, frames(1, start=5)[0])
    assert w.warm
    assert w[0].t == 5 and w[5].t == 0


def test_window_slides():
    w = LagWindow(5)
    for f in frames(10):
        w.push(f)
    assert [f.t for f in w.frames()] == [9, 8, 7, 6, 5, 4]
    np.testing.assert_array_equal(w.as_array()[:, 0], [9, 8, 7, 6, 5, 4])


def test_window_rejects_out_of_order():
    w = LagWindow(2)
    w.push(EegFrame(3, np.zeros(2)))
    with pytest.raises(SequencingError):
        w.push(EegFrame(3, np.zeros(2)))
    with pytest.raises(SequencingError):
        w.push(EegFrame(5, np.zeros(2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 8), st.integers(1, 40), st.integers(0, 1000))
def test_window_is_last_k_plus_one(k, n, start):
    pushed = [EegFrame(start + i, np.array([float(i)])) for i in range(n)]
    w = LagWindow(k)
    for f in pushed:
        w.push(f)
    expected = list(reversed(pushed))[:k + 1]
    assert [f.t for f in w.frames()] == [f.t for f in expected]
    assert w.warm == (n >= k + 1)
