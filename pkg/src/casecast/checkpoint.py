"""Versioned JSON checkpoint container shared by all model kinds.

Floats are stored as shortest-round-trip decimal strings (Python repr),
so save -> load is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .classical import ArimaFit, HwFit, ProphetLiteFit
from .lstm import LstmModel, LstmParams, TrainConfig

FORMAT_VERSION = 1


def _encode_array(a: np.ndarray) -> dict:
    return {
        "shape": list(a.shape),
        "data": [repr(float(v)) for v in np.asarray(a, dtype=float).ravel()],
    }


def _decode_array(obj: dict) -> np.ndarray:
    return np.array([float(s) for s in obj["data"]]).reshape(obj["shape"])


def save_lstm(model: LstmModel, path: str) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "lstm",
        "config": asdict(model.config),
        "params": {k: _encode_array(v) for k, v in model.params.arrays().items()},
        "epoch_losses": [repr(float(x)) for x in model.epoch_losses],
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=1)


def save_classical(fit: ArimaFit | HwFit | ProphetLiteFit, path: str) -> None:
    kinds = {ArimaFit: "arima", HwFit: "hwaas", ProphetLiteFit: "prophet-lite"}
    fields = {}
    for key, value in asdict(fit).items():
        if isinstance(value, np.ndarray):
            fields[key] = _encode_array(value)
        elif isinstance(value, float):
            fields[key] = repr(value)
        else:
            fields[key] = value if not hasattr(value, "isoformat") else value.isoformat()
    doc = {"format_version": FORMAT_VERSION, "kind": kinds[type(fit)], "fields": fields}
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=1)


def load(path: str):
    """Load any checkpoint; returns an LstmModel or a raw field dict for the
    classical kinds (enough to rebuild forecasts)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc['format_version']}")
    if doc["kind"] == "lstm":
        params = LstmParams(**{k: _decode_array(v) for k, v in doc["params"].items()})
        cfg = TrainConfig(**doc["config"])
        losses = [float(s) for s in doc["epoch_losses"]]
        return LstmModel(params, cfg, losses)
    fields = {}
    for key, value in doc["fields"].items():
        if isinstance(value, dict) and "shape" in value:
            fields[key] = _decode_array(value)
        elif isinstance(value, str):
            try:
                fields[key] = float(value)
            except ValueError:
                fields[key] = value
        else:
            fields[key] = value
    return {"kind": doc["kind"], **fields}
