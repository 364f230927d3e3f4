"""Synthetic counting data for the broadband polarization-entangled source."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qcore
from .errors import UsageError, ValidationError
from .flexgrid import C_BAND_WSS, L_BAND_WSS, ChannelPair, WssSpec, filter_weight

LABELS = "HVDARL"
SETTINGS = [(a, b) for a in LABELS for b in LABELS]


@dataclass(frozen=True)
class SourceModel:
    """Entangled-source parameters; all rates are detected counts per second."""

    alpha: complex = np.sqrt(0.5)
    beta: complex = np.sqrt(0.5)
    visibility: float = 1.0
    pair_rate: float = 1400.0
    singles_rate_s: float = 0.0
    singles_rate_i: float = 0.0
    window_s: float = 1e-9
    rotation_seed: Optional[int] = None
    local_unitaries: Optional[tuple] = None
    pump_power_mw: Optional[float] = None

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValidationError(f"|alpha|^2 + |beta|^2 = {norm:.15g}, expected 1")
        if not 0 <= self.visibility <= 1:
            raise ValidationError("visibility must lie in [0, 1]")
        if min(self.pair_rate, self.singles_rate_s, self.singles_rate_i) < 0:
            raise ValidationError("rates must be nonnegative")
        if self.window_s <= 0:
            raise ValidationError("coincidence window must be positive")

    @property
    def accidental_rate(self) -> float:
        return self.singles_rate_s * self.singles_rate_i * self.window_s

    @property
    def pure_state(self) -> np.ndarray:
        return self.alpha * qcore.HH + self.beta * qcore.VV


@dataclass(frozen=True)
class CountRecord:
    channel: int
    setting: tuple
    counts: int
    integration_s: float

    def __post_init__(self):
        if self.counts < 0:
            raise ValidationError(f"negative counts in channel {self.channel}")
        if not self.integration_s > 0:
            raise ValidationError("integration time must be positive")
        if len(self.setting) != 2 or any(s not in LABELS for s in self.setting):
            raise UsageError(f"unknown analyzer setting {self.setting!r}")


@dataclass(frozen=True)
class JsiPoint:
    sig_ch: int
    idl_ch: int
    coinc: int
    singles_s: int
    singles_i: int
    integration_s: float


@dataclass(frozen=True)
class JsiScan:
    entries: list
    pattern: str
    window_s: float = 1e-9
    meta: dict = field(default_factory=dict)


def channel_rng(seed: int, k: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for channel ``k`` derived from a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(k), int(stream)]))


def channel_unitaries(model: SourceModel, k: int) -> tuple:
    if model.local_unitaries is not None:
        return model.local_unitaries
    if model.rotation_seed is None:
        return np.eye(2, dtype=complex), np.eye(2, dtype=complex)
    rng = channel_rng(model.rotation_seed, k, stream=1)
    return qcore.sample_haar_unitary(rng, 2), qcore.sample_haar_unitary(rng, 2)


def channel_state(model: SourceModel, k: int = 1) -> qcore.DensityMatrix:
    """Werner-mixed ``alpha|HH> + beta|VV>`` after the channel's local rotations."""
    psi = model.pure_state
    v = model.visibility
    rho = v * np.outer(psi, psi.conj()) + (1 - v) * np.eye(4) / 4
    u_a, u_b = channel_unitaries(model, k)
    rho = qcore.local_unitary(u_a, u_b, rho)
    return qcore.DensityMatrix.from_array(0.5 * (rho + rho.conj().T))


def visibility_for_fidelity(fidelity: float, pair_rate: float = 1.0, accidental_rate: float = 0.0) -> float:
    """Werner visibility whose accidental-diluted Bell fidelity equals ``fidelity``.

    Accidentals land uniformly on the four outcomes of any complete basis
    pair, which mixes ``4*acc/(pair + 4*acc)`` of white noise into the
    observed state.
    """
    q = 4 * accidental_rate / (pair_rate + 4 * accidental_rate) if pair_rate + accidental_rate > 0 else 0.0
    f_state = (fidelity - q / 4) / (1 - q)
    v = (4 * f_state - 1) / 3
    if not 0 <= v <= 1:
        raise ValidationError(f"fidelity {fidelity} unreachable with accidental fraction {q:.4f}")
    return v


def expected_counts(model: SourceModel, k: int, settings: Sequence = SETTINGS, integration_s: float = 1.0) -> np.ndarray:
    from .tomography import projector

    rho = channel_state(model, k).matrix
    probs = np.array([np.real(np.trace(projector(s) @ rho)) for s in settings])
    return integration_s * (model.pair_rate * np.clip(probs, 0, None) + model.accidental_rate)


def simulate_counts(
    model: SourceModel,
    k: int,
    settings: Sequence = SETTINGS,
    integration_s: float = 10.0,
    rng: Optional[np.random.Generator] = None,
) -> list[CountRecord]:
    settings = [tuple(s) for s in settings]
    if len(set(settings)) != len(settings):
        raise UsageError("settings must be distinct")
    rng = np.random.default_rng() if rng is None else rng
    mu = expected_counts(model, k, settings, integration_s)
    n = rng.poisson(mu)
    return [CountRecord(k, s, int(c), integration_s) for s, c in zip(settings, n)]


def car(coincidences: float, singles_s: float, singles_i: float, window_s: float, integration_s: float) -> float:
    """Coincidences over the accidental estimate ``S_s * S_i * tau / T``."""
    if singles_s <= 0 or singles_i <= 0:
        raise ValidationError("CAR is undefined with zero singles")
    if integration_s <= 0 or window_s <= 0:
        raise ValidationError("window and integration time must be positive")
    return coincidences / (singles_s * singles_i * window_s / integration_s)


def jsi_weights(n: int, c_wss: WssSpec, l_wss: WssSpec) -> np.ndarray:
    """Relative true-coincidence weight for every (signal, idler) channel index pair."""
    idx = np.arange(n)
    off = idx[:, None] - idx[None, :]
    ws = np.vectorize(lambda d: filter_weight(c_wss, d))(off)
    wi = np.vectorize(lambda d: filter_weight(l_wss, d))(off)
    return ws @ wi.T


def jsi_points(n: int, pattern: str, rng: np.random.Generator, sidebands: int = 2) -> list[tuple[int, int]]:
    if pattern == "full":
        return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    if pattern != "diagonal":
        raise UsageError(f"unknown JSI scan pattern {pattern!r}; use 'diagonal' or 'full'")
    pts = []
    for i in range(1, n + 1):
        band = [j for j in range(i - sidebands, i + sidebands + 1) if 1 <= j <= n]
        pts.extend((i, j) for j in band)
        others = [j for j in range(1, n + 1) if abs(j - i) > sidebands]
        if others:
            pts.append((i, int(rng.choice(others))))
    return pts


def simulate_jsi(
    model: SourceModel,
    plan: list[ChannelPair],
    pattern: str = "diagonal",
    integration_s: float = 1.0,
    rng: Optional[np.random.Generator] = None,
    c_wss: WssSpec = C_BAND_WSS,
    l_wss: WssSpec = L_BAND_WSS,
) -> JsiScan:
    """Raster-scan coincidences and singles over the signal x idler channel grid."""
    rng = np.random.default_rng() if rng is None else rng
    n = len(plan)
    pts = jsi_points(n, pattern, rng)
    w = jsi_weights(n, c_wss, l_wss)
    acc = model.accidental_rate
    entries = []
    for i, j in pts:
        mu = integration_s * (model.pair_rate * w[i - 1, j - 1] + acc)
        entries.append(
            JsiPoint(
                plan[i - 1].k,
                plan[j - 1].k,
                int(rng.poisson(mu)),
                int(rng.poisson(model.singles_rate_s * integration_s)),
                int(rng.poisson(model.singles_rate_i * integration_s)),
                integration_s,
            )
        )
    return JsiScan(entries, pattern, model.window_s)


def jsi_car_classes(scan: JsiScan) -> dict:
    """Mean and standard deviation of CAR for diagonal, first-sideband and remaining points."""
    groups = {"diagonal": [], "first_sideband": [], "other": []}
    for e in scan.entries:
        d = abs(e.sig_ch - e.idl_ch)
        key = "diagonal" if d == 0 else "first_sideband" if d == 1 else "other"
        groups[key].append(car(e.coinc, e.singles_s, e.singles_i, scan.window_s, e.integration_s))
    return {
        k: {"mean": float(np.mean(v)), "std": float(np.std(v)), "n": len(v)}
        for k, v in groups.items()
        if v
    }
