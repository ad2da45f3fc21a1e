import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinebci.decoder import (
    DecoderModel,
    DesignMatrix,
    FitOptions,
    build_design,
    dumps_model,
    evaluate,
    fit,
    lag_embed,
    loads_model,
    predict,
    predict_series,
)
from kinebci.errors import ConfigurationError, InsufficientDataError, NotWarmError, RankDeficiencyError, ValidationError
from kinebci.signal import EegFrame, LagWindow
from kinebci.synth import random_model, reverse_label, white_noise_recording

N, K = 14, 5


def naive_design_row(eeg, t, k_max):
    row = [1.0]
    for k in range(k_max + 1):
        for n in range(eeg.shape[1]):
            row.append(eeg[t - k, n])
    return row


def naive_predict(model, lags, axis):
    # lags[k, n] = e_n[t - k]
    total = model.intercept[axis]
    for n in range(model.n_channels):
        for k in range(model.n_lags + 1):
            total += model.weights[axis][n, k] * lags[k, n]
    return total


def normal_equations(X, y, ridge=0.0):
    D = np.eye(X.shape[1])
    D[0, 0] = 0.0
    return np.linalg.solve(X.T @ X + ridge * D, X.T @ y)


def window_of(arr):
    """LagWindow whose lag-k frame is arr[k]."""
    w = LagWindow(arr.shape[0] - 1)
    for t, row in enumerate(arr[::-1]):
        w.push(EegFrame(t, row))
    return w


def design_from(X, y):
    return DesignMatrix(X, {"x": y}, N, K)


def test_design_shape_defaults():
    rec = white_noise_recording(N, 360 * 128, seed=1)
    d = build_design(rec, K)
    assert d.X.shape == (360 * 128 - K, 85)
    assert d.t[0] == K and d.t[-1] == len(rec) - 1


def test_design_single_row_at_boundary():
    rec = white_noise_recording(N, K + 1, seed=2)
    assert build_design(rec, K).X.shape == (1, 85)
    with pytest.raises(InsufficientDataError):
        build_design(white_noise_recording(N, K, seed=2), K)


def test_design_rows_match_naive_loop():
    rec = white_noise_recording(4, 30, seed=3)
    X = build_design(rec, 3).X
    for i, t in enumerate(range(3, 30)):
        np.testing.assert_array_equal(X[i], naive_design_row(rec.eeg, t, 3))


def test_constant_channels_make_constant_columns():
    rec = white_noise_recording(N, 50, seed=4)
    rec.eeg[:] = np.arange(N) + 1.0
    X = build_design(rec, K).X
    assert np.all(X == X[0])
    design = DesignMatrix(X, {"x": np.linspace(0, 1, X.shape[0])}, N, K)
    with pytest.raises(RankDeficiencyError):
        fit(design)
    fit(design, FitOptions(ridge=1e-3))


def test_fit_recovers_known_coefficients(rng):
    X = lag_embed(rng.standard_normal((2000, N)), K)
    beta = rng.standard_normal(X.shape[1])
    y = X @ beta
    model = fit(design_from(X, y))
    oracle = normal_equations(X, y)
    got = model.coefficients("x")
    assert np.max(np.abs(got - oracle)) / np.max(np.abs(oracle)) < 1e-8
    assert np.max(np.abs(got - beta)) / np.max(np.abs(beta)) < 1e-8


def test_fit_zero_targets(rng):
    X = lag_embed(rng.standard_normal((500, N)), K)
    model = fit(design_from(X, np.zeros(X.shape[0])))
    assert np.all(model.coefficients("x") == 0.0)


def test_fit_constant_target_standardized(rng):
    X = lag_embed(rng.standard_normal((1000, N)), K)
    X[:, 1:] = (X[:, 1:] - X[:, 1:].mean(axis=0)) / X[:, 1:].std(axis=0)
    y = np.full(X.shape[0], 3.0)
    model = fit(design_from(X, y))
    oracle = normal_equations(X, y)
    assert model.intercept["x"] == pytest.approx(3.0, abs=1e-10)
    assert np.max(np.abs(model.weights["x"])) < 1e-10
    np.testing.assert_allclose(model.coefficients("x"), oracle, atol=1e-10)


def test_standardize_flag_same_solution_without_ridge(rng):
    X = lag_embed(5 + 3 * rng.standard_normal((800, N)), K)
    y = X @ rng.standard_normal(X.shape[1]) + rng.standard_normal(X.shape[0])
    a = fit(design_from(X, y)).coefficients("x")
    b = fit(design_from(X, y), FitOptions(standardize=True)).coefficients("x")
    np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-10)


def test_residual_orthogonality(rng):
    X = lag_embed(rng.standard_normal((3000, N)), K)
    y = rng.standard_normal(X.shape[0]) + X[:, 5]
    beta = fit(design_from(X, y)).coefficients("x")
    lhs = np.max(np.abs(X.T @ (y - X @ beta)))
    assert lhs <= 1e-6 * np.max(np.abs(X.T @ y))


def test_ridge_matches_closed_form(rng):
    X = lag_embed(rng.standard_normal((400, N)), K)
    y = rng.standard_normal(X.shape[0])
    for lam in (0.1, 10.0, 1000.0):
        got = fit(design_from(X, y), FitOptions(ridge=lam)).coefficients("x")
        np.testing.assert_allclose(got, normal_equations(X, y, lam), rtol=1e-8, atol=1e-12)


def test_ridge_monotone_weight_norm(rng):
    X = lag_embed(rng.standard_normal((300, N)), K)
    y = X @ rng.standard_normal(X.shape[1]) + rng.standard_normal(X.shape[0])
    norms = [np.linalg.norm(fit(design_from(X, y), FitOptions(ridge=lam)).weights["x"])
             for lam in (0.0, 1e-3, 1e-1, 1.0, 10.0, 1e3, 1e5)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_negative_ridge_rejected():
    with pytest.raises(ValidationError):
        FitOptions(ridge=-1.0)


def test_rank_deficiency_names_column_count(rng):
    rec = white_noise_recording(N, 2000, seed=5)
    rec.eeg[:, 2] = rec.eeg[:, 1]
    rec = reverse_label(rec, random_model(seed=6))
    with pytest.raises(RankDeficiencyError) as info:
        fit(build_design(rec, K))
    assert info.value.n_deficient == K + 1
    assert info.value.width == 85


def test_too_few_rows_is_rank_deficient(rng):
    X = lag_embed(rng.standard_normal((40, N)), K)
    with pytest.raises(RankDeficiencyError):
        fit(design_from(X, np.ones(X.shape[0])))
    fit(design_from(X, np.ones(X.shape[0])), FitOptions(ridge=1.0))


def test_parameter_count():
    rec = reverse_label(white_noise_recording(N, 1000, seed=7), random_model(seed=8))
    model = fit(build_design(rec, K))
    for a in model.axes:
        assert model.coefficients(a).size == 85
        assert model.weights[a].shape == (14, 6)


def test_predict_zero_window_gives_intercept():
    m = random_model(seed=1)
    u, v = predict(m, window_of(np.zeros((K + 1, N))))
    assert (u, v) == (m.intercept["x"], m.intercept["y"])


def test_predict_single_term():
    m = DecoderModel.zeros(N, K)
    w = {a: m.weights[a].copy() for a in m.axes}
    w["x"][3, 2] = 2.0
    m = DecoderModel(N, K, ("x", "y"), {"x": 0.25, "y": 0.0}, w)
    lags = np.zeros((K + 1, N))
    lags[2, 3] = 1.5
    u, _ = predict(m, window_of(lags))
    assert u == 0.25 + 3.0


def test_predict_matches_double_loop(rng):
    for seed in range(10):
        m = random_model(seed=seed, scale=1.0)
        lags = rng.standard_normal((K + 1, N))
        u, v = predict(m, window_of(lags))
        assert u == pytest.approx(naive_predict(m, lags, "x"), abs=1e-12)
        assert v == pytest.approx(naive_predict(m, lags, "y"), abs=1e-12)


def test_predict_cold_window_and_mismatch():
    m = random_model(seed=2)
    w = LagWindow(K)
    w.push(EegFrame(0, np.zeros(N)))
    with pytest.raises(NotWarmError):
        predict(m, w)
    with pytest.raises(ConfigurationError):
        predict(m, window_of(np.zeros((K + 1, N - 1))))
    with pytest.raises(ConfigurationError):
        predict(m, window_of(np.zeros((K, N))))


def test_single_axis_model_predicts_zero_on_other_axis():
    m = random_model(seed=3, axes=("x",))
    _, v = predict(m, window_of(np.ones((K + 1, N))))
    assert v == 0.0


def test_stream_and_batch_predictions_agree(rng):
    m = random_model(seed=4, scale=1.0)
    eeg = rng.standard_normal((60, N))
    batch = predict_series(m, eeg)
    w = LagWindow(K)
    for t, row in enumerate(eeg):
        w.push(EegFrame(t, row))
        if w.warm:
            u, v = predict(m, w)
            assert u == pytest.approx(batch["x"][t - K], abs=1e-12)
            assert v == pytest.approx(batch["y"][t - K], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_prediction_linear_in_window(seed, a, b):
    r = np.random.default_rng(seed)
    m = random_model(seed=seed, scale=1.0)
    p = r.standard_normal((K + 1, N))
    q = r.standard_normal((K + 1, N))
    f = lambda arr: np.array(predict(m, window_of(arr))) - np.array([m.intercept["x"], m.intercept["y"]])  # noqa: E731
    np.testing.assert_allclose(f(a * p + b * q), a * f(p) + b * f(q), atol=1e-9)


def test_evaluate_self_fit_noiseless():
    rec = reverse_label(white_noise_recording(N, 7680, seed=9), random_model(seed=10))
    model = fit(build_design(rec, K))
    rep = evaluate(model, rec)
    for a in ("x", "y"):
        assert rep.r[a] == pytest.approx(1.0, abs=1e-9)
        assert rep.rmse[a] < 1e-8
    assert rep.n_samples == 7680 - K
    assert rep.observed["x"].shape == rep.decoded["x"].shape == (7680 - K,)


def test_evaluate_zero_model_r_undefined():
    rec = reverse_label(white_noise_recording(N, 500, seed=11), random_model(seed=12))
    rep = evaluate(DecoderModel.zeros(N, K), rec)
    assert rep.r_undefined("x") and rep.r["x"] is None
    assert rep.rmse["x"] == pytest.approx(np.sqrt(np.mean(rec.u[K:] ** 2)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fit_predict_round_trip(seed):
    rec = reverse_label(white_noise_recording(6, 300, seed=seed), random_model(6, 2, seed=seed, scale=3.0))
    model = fit(build_design(rec, 2))
    rep = evaluate(model, rec)
    for a in ("x", "y"):
        assert np.max(np.abs(rep.decoded[a] - rep.observed[a])) < 1e-8


def test_model_file_round_trip_exact():
    m = random_model(seed=13)
    m = DecoderModel(m.n_channels, m.n_lags, m.axes, m.intercept, m.weights, {"seed": 4, "config_hash": "abc"})
    text = dumps_model(m)
    back = loads_model(text)
    assert back.allclose(m)
    assert back.provenance == {"seed": "4", "config_hash": "abc"}
    assert dumps_model(back) == text


def test_model_file_layout():
    m = random_model(seed=14, axes=("x",))
    lines = dumps_model(m).splitlines()
    assert lines[0] == "# kinebci-model v1"
    assert "version = 1" in lines and "n_channels = 14" in lines and "n_lags = 5" in lines
    assert "axes = x" in lines
    weights = next(line for line in lines if line.startswith("weights.x = ")).split(" = ")[1].split()
    assert len(weights) == 14 * 6
    # row-major over (channel, lag)
    assert float(weights[1 * 6 + 2]) == m.weights["x"][1, 2]
    mantissa = weights[0].lstrip("-").split("e")[0].replace(".", "")
    assert len(mantissa) >= 15


@pytest.mark.parametrize("text", [
    "", "garbage\n", "# kinebci-model v1\nversion = 2\n",
    "# kinebci-model v1\nversion = 1\nn_channels = 2\nn_lags = 0\naxes = x\nintercept.x = 0\nweights.x = 1\n",
])
def test_model_file_rejects_malformed(text):
    with pytest.raises(ValidationError):
        loads_model(text)


def test_model_rejects_non_finite():
    with pytest.raises(ValidationError):
        DecoderModel(2, 0, ("x",), {"x": np.nan}, {"x": np.zeros((2, 1))})
