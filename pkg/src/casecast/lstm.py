"""LSTM forecaster built from scratch: forward pass, exact
backpropagation through time, Adam, and the three forecasting schemas
(u1 one-step teacher-forced, u2 recursive, u3 recursive bivariate).

Gate layout: the four gate blocks are stacked row-wise in the order
input, forget, output, candidate, so one matvec per source covers all
gates. Per-gate views are exposed as properties.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .data import (
    DAY,
    TimeSeries,
    WindowedDataset,
    WindowError,
    fit_normalizer,
    make_windows,
    slice_window,
)

SCHEMAS = ("u1", "u2", "u3")


class TrainingDivergedError(Exception):
    def __init__(self, epoch: int):
        super().__init__(f"non-finite training loss at epoch {epoch}")
        self.epoch = epoch


def elu(x):
    """x for x > 0, exp(x) - 1 otherwise (alpha = 1)."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, x, np.expm1(x))


def _elu_grad(x, fx):
    return np.where(np.asarray(x) > 0, 1.0, fx + 1.0)


def _tanh_grad(x, fx):
    return 1.0 - fx * fx


# name -> (g, dg); dg takes the pre-activation and the activation value
ACTIVATIONS = {
    "elu": (elu, _elu_grad),
    "tanh": (np.tanh, _tanh_grad),
}


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


@dataclass
class LstmParams:
    """All weights of one LSTM layer plus the linear dense head."""

    wx: np.ndarray  # (4H, D) input-to-gate, rows stacked i|f|o|c
    wh: np.ndarray  # (4H, H) hidden-to-gate
    b: np.ndarray  # (4H,)
    dense_w: np.ndarray  # (D_out, H)
    dense_b: np.ndarray  # (D_out,)

    @property
    def hidden(self) -> int:
        return self.wh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.wx.shape[1]

    @property
    def output_dim(self) -> int:
        return self.dense_w.shape[0]

    def _gate(self, mat, k):
        h = self.hidden
        return mat[k * h : (k + 1) * h]

    # per-gate views onto the stacked storage
    @property
    def w_ix(self):
        return self._gate(self.wx, 0)

    @property
    def w_fx(self):
        return self._gate(self.wx, 1)

    @property
    def w_ox(self):
        return self._gate(self.wx, 2)

    @property
    def w_cx(self):
        return self._gate(self.wx, 3)

    @property
    def w_ih(self):
        return self._gate(self.wh, 0)

    @property
    def w_fh(self):
        return self._gate(self.wh, 1)

    @property
    def w_oh(self):
        return self._gate(self.wh, 2)

    @property
    def w_ch(self):
        return self._gate(self.wh, 3)

    @property
    def b_i(self):
        return self._gate(self.b, 0)

    @property
    def b_f(self):
        return self._gate(self.b, 1)

    @property
    def b_o(self):
        return self._gate(self.b, 2)

    @property
    def b_c(self):
        return self._gate(self.b, 3)

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "wx": self.wx,
            "wh": self.wh,
            "b": self.b,
            "dense_w": self.dense_w,
            "dense_b": self.dense_b,
        }

    def copy(self) -> "LstmParams":
        return LstmParams(**{k: v.copy() for k, v in self.arrays().items()})

    @classmethod
    def zeros(cls, hidden: int, input_dim: int, output_dim: int | None = None):
        out = input_dim if output_dim is None else output_dim
        return cls(
            wx=np.zeros((4 * hidden, input_dim)),
            wh=np.zeros((4 * hidden, hidden)),
            b=np.zeros(4 * hidden),
            dense_w=np.zeros((out, hidden)),
            dense_b=np.zeros(out),
        )

    @classmethod
    def glorot(cls, hidden: int, input_dim: int, rng: np.random.Generator):
        """Glorot-uniform weights per matrix, all biases zero."""

        def uni(rows, cols):
            limit = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-limit, limit, size=(rows, cols))

        return cls(
            wx=np.vstack([uni(hidden, input_dim) for _ in range(4)]),
            wh=np.vstack([uni(hidden, hidden) for _ in range(4)]),
            b=np.zeros(4 * hidden),
            dense_w=uni(input_dim, hidden),
            dense_b=np.zeros(input_dim),
        )


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zero(cls, hidden: int):
        return cls(np.zeros(hidden), np.zeros(hidden))


@dataclass
class GateActivations:
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g_in: np.ndarray


def lstm_step(params: LstmParams, x, state: LstmState, g: str = "elu"):
    """One recurrence step.

    i = sigma(Wix x + Wih h + bi), f and o alike;
    c' = f*c + i*g(Wcx x + Wch h + bc); h' = o*g(c').
    The activation g is applied both to the candidate and to the cell output.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ValueError(f"input shape {x.shape}, expected ({params.input_dim},)")
    gfun, _ = ACTIVATIONS[g]
    hdim = params.hidden
    a = params.wx @ x + params.wh @ state.h + params.b
    i = sigmoid(a[:hdim])
    f = sigmoid(a[hdim : 2 * hdim])
    o = sigmoid(a[2 * hdim : 3 * hdim])
    g_in = gfun(a[3 * hdim :])
    c = f * state.c + i * g_in
    h = o * gfun(c)
    return LstmState(h, c), GateActivations(i, f, o, g_in)


def forward(params: LstmParams, inputs, g: str = "elu"):
    """Run the sequence from zero state and apply the linear head to the
    final hidden vector. Returns (y, cache); the cache holds everything
    bptt_gradient needs for an exact reverse pass."""
    gfun, dgfun = ACTIVATIONS[g]
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != params.input_dim:
        raise ValueError(
            f"input dim {inputs.shape[1]}, expected {params.input_dim}"
        )
    hdim = params.hidden
    h = np.zeros(hdim)
    c = np.zeros(hdim)
    steps = []
    for x in inputs:
        a = params.wx @ x + params.wh @ h + params.b
        i = sigmoid(a[:hdim])
        f = sigmoid(a[hdim : 2 * hdim])
        o = sigmoid(a[2 * hdim : 3 * hdim])
        a_c = a[3 * hdim :]
        g_in = gfun(a_c)
        c_new = f * c + i * g_in
        gc = gfun(c_new)
        steps.append((x, h, c, i, f, o, a_c, g_in, c_new, gc))
        c = c_new
        h = o * gc
    y = params.dense_w @ h + params.dense_b
    return y, {"steps": steps, "h_final": h, "g": g}


def bptt_gradient(params: LstmParams, inputs, target, g: str = "elu"):
    """Exact gradient of the squared error ||y - target||^2 with respect to
    every parameter array, by reverse-mode differentiation through the
    unrolled recurrence. Returns (loss, grads dict keyed like arrays())."""
    _, dgfun = ACTIVATIONS[g]
    y, cache = forward(params, inputs, g)
    target = np.asarray(target, dtype=float)
    err = y - target
    loss = float(err @ err)

    hdim = params.hidden
    grads = {k: np.zeros_like(v) for k, v in params.arrays().items()}
    grads["dense_w"] += np.outer(2.0 * err, cache["h_final"])
    grads["dense_b"] += 2.0 * err

    dh = params.dense_w.T @ (2.0 * err)
    dc = np.zeros(hdim)
    for x, h_prev, c_prev, i, f, o, a_c, g_in, c_new, gc in reversed(cache["steps"]):
        do = dh * gc
        dc = dc + dh * o * dgfun(c_new, gc)
        di = dc * g_in
        dg_in = dc * i
        df = dc * c_prev
        da = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg_in * dgfun(a_c, g_in),
            ]
        )
        grads["wx"] += np.outer(da, x)
        grads["wh"] += np.outer(da, h_prev)
        grads["b"] += da
        dh = params.wh.T @ da
        dc = dc * f
    return loss, grads


@dataclass
class AdamState:
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def like(cls, params: LstmParams | dict):
        arrays = params.arrays() if hasattr(params, "arrays") else params
        return cls(
            t=0,
            m={k: np.zeros_like(a) for k, a in arrays.items()},
            v={k: np.zeros_like(a) for k, a in arrays.items()},
        )


def adam_update(
    params: LstmParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """Standard Adam with bias correction; updates params/state in place and
    returns them."""
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, arr in params.arrays().items():
        grad = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        arr -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    hidden: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    activation: str = "elu"
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("betas must lie in (0, 1)")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class LstmModel:
    params: LstmParams
    config: TrainConfig
    epoch_losses: list[float]


def train(dataset: WindowedDataset, cfg: TrainConfig) -> LstmModel:
    """Batch-size-1 training: one Adam step per sample, sample order
    reshuffled every epoch from the run's single seeded RNG (so the whole
    run stays deterministic given the seed)."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    input_dim = dataset.inputs.shape[2]
    params = LstmParams.glorot(cfg.hidden, input_dim, rng)
    state = AdamState.like(params)
    losses = []
    n = len(dataset)
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for k in rng.permutation(n):
            loss, grads = bptt_gradient(
                params, dataset.inputs[k], dataset.targets[k], cfg.activation
            )
            total += loss
            adam_update(
                params, grads, state, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon
            )
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            raise TrainingDivergedError(epoch)
        losses.append(mean_loss)
    return LstmModel(params, cfg, losses)


def forecast_recursive(model, seed_window: np.ndarray, horizon: int = 15):
    """Predict `horizon` steps by feeding each output back into the window:
    predict, append, drop the oldest, repeat. All channels are fed back.

    `model` is an LstmModel, or any object with a `predict(window) -> vector`
    method (handy for stub models in tests)."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if hasattr(model, "predict"):
        predict = model.predict
    else:
        predict = lambda w: forward(model.params, w, model.config.activation)[0]
    window = np.atleast_2d(np.asarray(seed_window, dtype=float)).copy()
    outputs = []
    for _ in range(horizon):
        y = np.atleast_1d(np.asarray(predict(window), dtype=float))
        outputs.append(y)
        window = np.vstack([window[1:], y])
    return np.array(outputs).reshape(horizon, -1) if horizon else np.empty((0, window.shape[1]))


@dataclass(frozen=True)
class ForecastRun:
    schema: str
    train_start: dt.date
    train_end: dt.date
    dates: tuple[dt.date, ...]
    forecasts: np.ndarray  # predicted total cases, original units
    actuals: np.ndarray | None  # observed total cases where available


def train_schema_model(
    ts: TimeSeries,
    schema: str,
    cfg: TrainConfig,
    train_start: dt.date,
    train_end: dt.date,
    lookback: int = 1,
) -> LstmModel:
    """Fit a model on the schema's training window. u1 and u2 share the same
    (univariate) training path; u3 is bivariate."""
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    bivariate = schema == "u3"
    train_ts = slice_window(ts, train_start, train_end)
    spec = fit_normalizer(train_ts, bivariate)
    dataset = make_windows(spec.normalize(train_ts.channels(bivariate)), lookback)
    return train(dataset, cfg)


def run_schema(
    ts: TimeSeries,
    schema: str,
    cfg: TrainConfig,
    train_start: dt.date,
    train_end: dt.date,
    horizon: int = 15,
    lookback: int = 1,
    model: LstmModel | None = None,
) -> ForecastRun:
    """Execute one of the forecasting protocols over the test horizon.

    u1: one step ahead per test day from the most recent observed values.
    u2: recursive 15-day forecast, cases only, no access to test actuals.
    u3: like u2 with (cases, deaths) as input and output; cases are scored.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    bivariate = schema == "u3"
    train_ts = slice_window(ts, train_start, train_end)
    spec = fit_normalizer(train_ts, bivariate)
    train_vals = spec.normalize(train_ts.channels(bivariate))
    if model is None:
        model = train(make_windows(train_vals, lookback), cfg)

    forecast_dates = tuple(train_end + (k + 1) * DAY for k in range(horizon))
    if schema == "u1":
        if forecast_dates[-1] > ts.end:
            raise WindowError("u1 needs observed values over the whole horizon")
        all_vals = spec.normalize(ts.channels(bivariate))
        preds = []
        for date in forecast_dates:
            j = (date - ts.start).days
            if j < lookback:
                raise WindowError("not enough history before the first test day")
            y, _ = forward(model.params, all_vals[j - lookback : j], cfg.activation)
            preds.append(y)
        preds = np.array(preds)
    else:
        preds = forecast_recursive(model, train_vals[-lookback:], horizon)

    denorm = spec.denormalize(preds)
    forecasts = denorm[:, 0]
    if not np.all(np.isfinite(forecasts)):
        raise TrainingDivergedError(model.config.epochs)

    actuals = None
    if forecast_dates[-1] <= ts.end:
        i = (forecast_dates[0] - ts.start).days
        actuals = ts.cases[i : i + horizon].astype(float)
    return ForecastRun(schema, train_start, train_end, forecast_dates, forecasts, actuals)
