"""Physical and numerical defaults, stored as flat ``key = value`` text.

A config file may set any subset of :data:`DEFAULTS`; ``#`` starts a
comment.  The path in ``$FLEXENT_CONFIG`` is read when no ``--config`` is
given on the command line.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from .errors import SchemaError

ENV_VAR = "FLEXENT_CONFIG"

DEFAULTS = {
    # channel plan (THz unless noted)
    "pump_thz": 383.0,
    "width_ghz": 25.0,
    "count": 150,
    "c_band_low_thz": 191.325,
    "c_band_high_thz": 196.150,
    "c_ports": 9,
    "l_band_low_thz": 186.075,
    "l_band_high_thz": 191.075,
    "l_ports": 20,
    # three-level WSS leakage model
    "adjacent_leakage": 0.012,
    "extinction_floor": 0.0,
    "window_s": 1e-9,
    # JSI scan: unidirectional pumping, pair/accidental ratio 99
    "jsi_pair_rate": 4500.0,
    "jsi_singles_rate_s": 213201.0,
    "jsi_singles_rate_i": 213201.0,
    "jsi_integration_s": 1.0,
    # tomography: singles after the polarization analyzers
    "tomo_pair_rate": 1450.0,
    "tomo_singles_rate_s": 60515.0,
    "tomo_singles_rate_i": 60515.0,
    "tomo_integration_s": 10.0,
    "alpha": 0.7071067811865476,
    "beta": 0.7071067811865476,
    "target_fidelity": 0.98,
    "fidelity_spread": 0.005,
    "rate_tilt": 0.1,
    # Bayesian tomography
    "mcmc_samples": 20000,
    "mcmc_burn_in": 5000,
    "mcmc_thinning": 1,
    "mcmc_beta": 0.1,
    "seed": 1,
}


def _coerce(key: str, text: str, lineno: Optional[int] = None):
    default = DEFAULTS[key]
    try:
        if isinstance(default, int) and not isinstance(default, bool):
            return int(text)
        return float(text)
    except ValueError:
        raise SchemaError(f"bad value {text!r} for {key}", row=lineno, column=key) from None


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError("expected key = value", row=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise SchemaError(f"unknown config key {key!r}", row=lineno, column=key)
        out[key] = _coerce(key, value, lineno)
    return out


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]!r}\n" for k in DEFAULTS if k in cfg)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> dict:
    cfg = dict(DEFAULTS)
    path = path or os.environ.get(ENV_VAR)
    if path:
        cfg.update(parse_config(Path(path).read_text()))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in DEFAULTS:
            raise SchemaError(f"unknown config key {key!r}", column=key)
        cfg[key] = _coerce(key, str(value))
    return cfg
