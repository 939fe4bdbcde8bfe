import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from casecast import TrainConfig, forecast_recursive, train, train_schema_model
from casecast.data import make_windows, WindowedDataset
from casecast.lstm import (
    ACTIVATIONS,
    AdamState,
    GateActivations,
    LstmParams,
    LstmState,
    adam_update,
    bptt_gradient,
    elu,
    forward,
    lstm_step,
    run_schema,
    sigmoid,
)

TRAIN_START = dt.date(2020, 3, 24)
TRAIN_END = dt.date(2020, 4, 23)


class TestElu:
    def test_zero(self):
        assert elu(0.0) == 0.0

    def test_identity_on_positives(self):
        assert elu(2.5) == 2.5

    def test_negative_branch(self):
        assert math.isclose(float(elu(-1.0)), math.exp(-1.0) - 1.0, rel_tol=1e-12)


class TestLstmStep:
    def test_all_zero_params(self):
        params = LstmParams.zeros(hidden=3, input_dim=1)
        for g in ("elu", "tanh"):
            state, gates = lstm_step(params, np.array([0.7]), LstmState.zero(3), g)
            np.testing.assert_allclose(gates.i, 0.5)
            np.testing.assert_allclose(gates.f, 0.5)
            np.testing.assert_allclose(gates.o, 0.5)
            np.testing.assert_allclose(state.c, 0.0)
            np.testing.assert_allclose(state.h, 0.0)

    def test_saturated_forget_gate(self):
        params = LstmParams.zeros(hidden=2, input_dim=1)
        params.b[2:4] = 10.0  # forget-gate bias rows
        c0 = np.array([1.5, -0.25])
        state, _ = lstm_step(params, np.array([0.0]), LstmState(np.zeros(2), c0))
        np.testing.assert_allclose(state.c, sigmoid(10.0) * c0, rtol=1e-12)
        assert abs(state.c[0] / c0[0] - 0.99995) < 1e-4

    @pytest.mark.parametrize("g", ["elu", "tanh"])
    def test_scalar_hand_trace(self, g):
        # single hidden unit; the whole recurrence is scalar arithmetic
        w_ix, w_fx, w_ox, w_cx = 0.3, -0.2, 0.5, 0.8
        w_ih, w_fh, w_oh, w_ch = 0.1, 0.4, -0.3, 0.6
        b_i, b_f, b_o, b_c = 0.05, -0.1, 0.2, 0.0
        params = LstmParams(
            wx=np.array([[w_ix], [w_fx], [w_ox], [w_cx]]),
            wh=np.array([[w_ih], [w_fh], [w_oh], [w_ch]]),
            b=np.array([b_i, b_f, b_o, b_c]),
            dense_w=np.array([[1.0]]),
            dense_b=np.array([0.0]),
        )
        sig = lambda v: 1.0 / (1.0 + math.exp(-v))
        act = (lambda v: v if v > 0 else math.exp(v) - 1.0) if g == "elu" else math.tanh

        h, c = 0.0, 0.0
        state = LstmState.zero(1)
        for x in (0.4, -1.2, 0.9):
            i = sig(w_ix * x + w_ih * h + b_i)
            f = sig(w_fx * x + w_fh * h + b_f)
            o = sig(w_ox * x + w_oh * h + b_o)
            c = f * c + i * act(w_cx * x + w_ch * h + b_c)
            h = o * act(c)
            state, _ = lstm_step(params, np.array([x]), state, g)
            assert abs(state.c[0] - c) < 1e-12
            assert abs(state.h[0] - h) < 1e-12

    def test_dimension_mismatch(self):
        params = LstmParams.zeros(hidden=2, input_dim=1)
        with pytest.raises(ValueError):
            lstm_step(params, np.array([1.0, 2.0]), LstmState.zero(2))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_gates_stay_in_open_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        params = LstmParams.glorot(4, 2, rng)
        state = LstmState(rng.standard_normal(4), rng.standard_normal(4))
        _, gates = lstm_step(params, 10.0 * rng.standard_normal(2), state)
        for gate in (gates.i, gates.f, gates.o):
            assert np.all(gate > 0.0) and np.all(gate < 1.0)

    def test_identity_activation_exposes_affine_structure(self):
        # with g = identity the cell is c' = f c + i * a_c and h = o * c'
        ACTIVATIONS["identity"] = (
            lambda x: np.asarray(x, dtype=float),
            lambda x, fx: np.ones_like(np.asarray(fx, dtype=float)),
        )
        try:
            rng = np.random.default_rng(7)
            params = LstmParams.glorot(3, 1, rng)
            x = np.array([0.6])
            state0 = LstmState(rng.standard_normal(3), rng.standard_normal(3))
            state, gates = lstm_step(params, x, state0, "identity")
            a_c = params.w_cx @ x + params.w_ch @ state0.h + params.b_c
            np.testing.assert_allclose(
                state.c, gates.f * state0.c + gates.i * a_c, rtol=1e-12
            )
            np.testing.assert_allclose(state.h, gates.o * state.c, rtol=1e-12)
        finally:
            del ACTIVATIONS["identity"]


class TestForward:
    def test_zero_params_returns_dense_bias(self):
        params = LstmParams.zeros(hidden=3, input_dim=1)
        params.dense_b[:] = 4.25
        y, _ = forward(params, np.array([[0.1], [0.9]]))
        np.testing.assert_allclose(y, 4.25)

    def test_length_one_equals_single_step(self):
        rng = np.random.default_rng(3)
        params = LstmParams.glorot(4, 1, rng)
        x = np.array([0.3])
        state, _ = lstm_step(params, x, LstmState.zero(4))
        y, _ = forward(params, x[None, :])
        np.testing.assert_array_equal(y, params.dense_w @ state.h + params.dense_b)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        params = LstmParams.glorot(4, 2, rng)
        seq = rng.random((5, 2))
        y1, _ = forward(params, seq)
        y2, _ = forward(params, seq)
        np.testing.assert_array_equal(y1, y2)


def finite_difference_grads(params, inputs, target, g, step=1e-5):
    """Central differences of the squared-error loss over every coordinate."""
    grads = {}
    for name, arr in params.arrays().items():
        out = np.zeros_like(arr)
        flat = arr.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            lp, _ = bptt_gradient(params, inputs, target, g)
            flat[j] = orig - step
            lm, _ = bptt_gradient(params, inputs, target, g)
            flat[j] = orig
            out.ravel()[j] = (lp - lm) / (2 * step)
        grads[name] = out
    return grads


def max_relative_gradient_error(seed, hidden, lookback, g):
    rng = np.random.default_rng(seed)
    params = LstmParams.glorot(hidden, 1, rng)
    inputs = rng.random((lookback, 1))
    target = rng.random(1)
    _, analytic = bptt_gradient(params, inputs, target, g)
    numeric = finite_difference_grads(params, inputs, target, g)
    worst = 0.0
    for name in analytic:
        denom = np.maximum(np.abs(numeric[name]), 1e-4)
        worst = max(worst, float(np.max(np.abs(analytic[name] - numeric[name]) / denom)))
    return worst


class TestBptt:
    def test_zero_loss_gives_zero_gradient(self):
        params = LstmParams.zeros(hidden=3, input_dim=1)
        loss, grads = bptt_gradient(params, np.array([[0.5]]), np.array([0.0]))
        assert loss == 0.0
        for g in grads.values():
            np.testing.assert_array_equal(g, 0.0)

    def test_dense_bias_gradient_is_twice_the_error(self):
        rng = np.random.default_rng(11)
        params = LstmParams.glorot(4, 1, rng)
        inputs, target = rng.random((3, 1)), rng.random(1)
        y, _ = forward(params, inputs)
        _, grads = bptt_gradient(params, inputs, target)
        np.testing.assert_allclose(grads["dense_b"], 2.0 * (y - target), rtol=1e-12)

    @pytest.mark.parametrize("g", ["elu", "tanh"])
    def test_matches_finite_differences(self, g):
        assert max_relative_gradient_error(42, hidden=4, lookback=3, g=g) < 1e-4


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        params = LstmParams.zeros(hidden=2, input_dim=1)
        params.dense_b[:] = 3.0
        grads = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        adam_update(params, grads, AdamState.like(params))
        np.testing.assert_array_equal(params.dense_b, 3.0)

    def test_first_step_with_unit_gradient(self):
        params = LstmParams.zeros(hidden=1, input_dim=1)
        grads = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        grads["dense_b"] = np.array([1.0])
        adam_update(params, grads, AdamState.like(params), lr=1e-3)
        # bias-corrected first step: -lr * 1 / (1 + eps)
        assert abs(params.dense_b[0] + 1e-3) < 1e-10

    def test_deterministic(self):
        results = []
        for _ in range(2):
            params = LstmParams.zeros(hidden=2, input_dim=1)
            grads = {k: np.full_like(v, 0.3) for k, v in params.arrays().items()}
            state = AdamState.like(params)
            for _ in range(3):
                adam_update(params, grads, state)
            results.append(params.dense_w.copy())
        np.testing.assert_array_equal(results[0], results[1])


class TestTrain:
    def test_reachable_targets_drive_loss_to_zero(self):
        inputs = np.full((5, 1, 1), 0.5)
        targets = np.full((5, 1), 0.5)
        ds = WindowedDataset(1, inputs, targets)
        model = train(ds, TrainConfig(epochs=400, hidden=8, seed=0))
        assert model.epoch_losses[-1] < 1e-6

    def test_same_seed_is_bitwise_identical(self):
        values = np.linspace(0.0, 1.0, 12)
        ds = make_windows(values, lookback=2)
        cfg = TrainConfig(epochs=5, hidden=4, seed=9)
        m1, m2 = train(ds, cfg), train(ds, cfg)
        for k, a in m1.params.arrays().items():
            np.testing.assert_array_equal(a, m2.params.arrays()[k])


class _StubLast:
    def predict(self, window):
        return window[-1]


class _StubIncrement:
    def __init__(self, delta):
        self.delta = np.asarray(delta)

    def predict(self, window):
        return window[-1] + self.delta


class TestForecastRecursive:
    def test_identity_stub_is_a_fixed_point(self):
        out = forecast_recursive(_StubLast(), np.array([[0.2], [0.4]]), 15)
        np.testing.assert_array_equal(out.ravel(), np.full(15, 0.4))

    def test_horizon_one_equals_single_forward(self):
        rng = np.random.default_rng(21)
        params = LstmParams.glorot(4, 1, rng)
        from casecast.lstm import LstmModel

        model = LstmModel(params, TrainConfig(epochs=1, hidden=4), [])
        window = rng.random((3, 1))
        out = forecast_recursive(model, window, 1)
        y, _ = forward(params, window)
        np.testing.assert_array_equal(out[0], y)

    def test_bivariate_stub_gives_arithmetic_progressions(self):
        stub = _StubIncrement([0.01, 0.001])
        seed = np.array([[0.5, 0.1]])
        out = forecast_recursive(stub, seed, 15)
        np.testing.assert_allclose(out[:, 0], 0.5 + 0.01 * np.arange(1, 16), rtol=1e-12)
        np.testing.assert_allclose(out[:, 1], 0.1 + 0.001 * np.arange(1, 16), rtol=1e-12)

    def test_recursion_is_consistent_under_splitting(self):
        rng = np.random.default_rng(13)
        params = LstmParams.glorot(4, 1, rng)
        from casecast.lstm import LstmModel

        model = LstmModel(params, TrainConfig(epochs=1, hidden=4), [])
        window = rng.random((2, 1))
        full = forecast_recursive(model, window, 6)
        part1 = forecast_recursive(model, window, 4)
        appended = np.vstack([window, part1])[-2:]
        part2 = forecast_recursive(model, appended, 2)
        np.testing.assert_array_equal(np.vstack([part1, part2]), full)


class TestRunSchema:
    def test_u1_u2_share_training_path(self, series):
        cfg = TrainConfig(epochs=3, hidden=4, seed=2)
        m1 = train_schema_model(series, "u1", cfg, TRAIN_START, TRAIN_END)
        m2 = train_schema_model(series, "u2", cfg, TRAIN_START, TRAIN_END)
        for k, a in m1.params.arrays().items():
            np.testing.assert_array_equal(a, m2.params.arrays()[k])

    def test_perfect_oracle_stub_scores_zero(self, series, test_actuals):
        from casecast.data import fit_normalizer, slice_window

        spec = fit_normalizer(slice_window(series, TRAIN_START, TRAIN_END))

        class Oracle:
            def __init__(self):
                self.k = 0

            def predict(self, window):
                y = spec.normalize(test_actuals[self.k : self.k + 1, None])[0]
                self.k += 1
                return y

        run = run_schema(
            series, "u2", TrainConfig(epochs=1, hidden=4), TRAIN_START, TRAIN_END,
            model=Oracle(),
        )
        np.testing.assert_allclose(run.forecasts, test_actuals, rtol=1e-12)

    def test_u3_requires_deaths_channel(self, series):
        import casecast.data as data_mod

        univariate = data_mod.TimeSeries(series.dates, series.cases)
        with pytest.raises(data_mod.DataError):
            run_schema(
                univariate, "u3", TrainConfig(epochs=1, hidden=2), TRAIN_START, TRAIN_END
            )
