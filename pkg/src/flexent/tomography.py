"""Bayesian two-qubit polarization tomography from 36-setting count data.

The state is parameterized by 64 standard-normal reals: 32 build a Ginibre
matrix ``G`` and 32 a second Ginibre matrix whose phase-corrected QR factor
is a Haar unitary ``U``.  ``rho = (I+U) G G^dag (I+U)^dag / Tr(...)`` then
carries the Bures measure, so a preconditioned Crank-Nicolson chain on ``x``
samples the Bures-prior posterior without an explicit prior term.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import qcore
from .errors import UsageError, ValidationError
from .source import LABELS, SETTINGS, CountRecord

log = logging.getLogger(__name__)

N_PARAMS = 64

_S = math.sqrt(0.5)
KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}


@dataclass(frozen=True)
class MeasurementSetting:
    analyzer_a: str
    analyzer_b: str

    def __post_init__(self):
        for s in (self.analyzer_a, self.analyzer_b):
            if s not in KETS:
                raise UsageError(f"unknown analyzer label {s!r}; expected one of {LABELS}")

    def __iter__(self):
        return iter((self.analyzer_a, self.analyzer_b))


def all_settings() -> list[MeasurementSetting]:
    return [MeasurementSetting(a, b) for a, b in SETTINGS]


def projector(setting) -> np.ndarray:
    a, b = setting
    if a not in KETS or b not in KETS:
        raise UsageError(f"unknown analyzer setting {(a, b)!r}; labels are {LABELS}")
    v = np.kron(KETS[a], KETS[b])
    return np.outer(v, v.conj())


def projector_rows(settings: Sequence) -> np.ndarray:
    """Rows ``r_j`` such that ``Tr(Pi_j rho) = Re(r_j . rho.ravel())``."""
    return np.array([projector(s).T.ravel() for s in settings])


@dataclass(frozen=True)
class McmcConfig:
    n_samples: int = 20_000
    burn_in: int = 5_000
    thinning: int = 1
    beta: float = 0.1
    seed: int = 0
    tune: bool = True

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValidationError("n_samples must be positive")
        if self.burn_in < 0 or self.thinning < 1:
            raise ValidationError("burn_in must be >= 0 and thinning >= 1")
        if not 0 < self.beta <= 1:
            raise ValidationError("pCN step beta must lie in (0, 1]")


@dataclass
class PosteriorSummary:
    mean_state: qcore.DensityMatrix
    fidelity_mean: float
    fidelity_std: float
    acceptance_rate: float
    n_effective: float
    beta: float = float("nan")
    n_samples: int = 0
    channel: Optional[int] = None
    warnings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "channel": self.channel,
            "mean_state": self.mean_state.to_json(),
            "fidelity_mean": self.fidelity_mean,
            "fidelity_std": self.fidelity_std,
            "acceptance_rate": self.acceptance_rate,
            "n_effective": self.n_effective,
            "beta": self.beta,
            "n_samples": self.n_samples,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PosteriorSummary":
        try:
            return cls(
                mean_state=qcore.DensityMatrix.from_json(obj["mean_state"]),
                fidelity_mean=float(obj["fidelity_mean"]),
                fidelity_std=float(obj["fidelity_std"]),
                acceptance_rate=float(obj["acceptance_rate"]),
                n_effective=float(obj["n_effective"]),
                beta=float(obj.get("beta", "nan")),
                n_samples=int(obj.get("n_samples", 0)),
                channel=obj.get("channel"),
                warnings=list(obj.get("warnings", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed posterior JSON: {exc}") from exc


def _check_counts(counts: Sequence[CountRecord]) -> tuple[list, np.ndarray]:
    if not counts:
        raise ValidationError("no count records given")
    settings = [tuple(c.setting) for c in counts]
    n = np.array([c.counts for c in counts], dtype=float)
    if np.any(n < 0):
        raise ValidationError("negative counts")
    return settings, n


def _log_likelihood(n: np.ndarray, p: np.ndarray, scale: Optional[float]) -> float:
    p = np.clip(p, 0.0, None)
    if scale is None:
        total = p.sum()
        scale = n.sum() / total if total > 0 else 1.0
        if scale <= 0:
            scale = 1.0
    mu = scale * p + 1e-12 * scale
    return float(np.dot(n, np.log(mu)) - mu.sum())


def log_likelihood(counts: Sequence[CountRecord], rho, scale: Optional[float] = None) -> float:
    """Poisson log-likelihood ``sum n ln mu - mu`` with ``mu = N0 Tr(Pi rho)``.

    With ``scale=None`` the flux ``N0`` is replaced by its conditional
    maximizer ``sum(n) / sum(Tr(Pi rho))``.
    """
    settings, n = _check_counts(counts)
    if scale is not None and not scale > 0:
        raise ValidationError("scale N0 must be positive")
    a = rho.matrix if isinstance(rho, qcore.DensityMatrix) else np.asarray(rho, dtype=complex)
    p = np.real(projector_rows(settings) @ a.ravel())
    return _log_likelihood(n, p, scale)


def _params_to_array(x: np.ndarray) -> np.ndarray:
    g = (x[:16] + 1j * x[16:32]).reshape(4, 4)
    u = qcore.haar_from_ginibre((x[32:48] + 1j * x[48:64]).reshape(4, 4))
    return qcore.bures_from_factors(g, u)


def params_to_state(x) -> qcore.DensityMatrix:
    x = np.asarray(x, dtype=float)
    if x.shape != (N_PARAMS,):
        raise ValidationError(f"expected {N_PARAMS} parameters, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("parameters must be finite")
    r = _params_to_array(x)
    return qcore.DensityMatrix(0.5 * (r + r.conj().T))


def state_to_params(rho, floor: float = 1e-3) -> np.ndarray:
    """A parameter vector mapping onto (a floored copy of) ``rho``.

    Uses ``U = I`` and ``G`` proportional to ``sqrt(rho)``; the result is a
    chain starting point, not an inverse of :func:`params_to_state`.
    """
    a = rho.matrix if isinstance(rho, qcore.DensityMatrix) else np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    w = np.clip(w, floor, None)
    w /= w.sum()
    g = (v * np.sqrt(w)) @ v.conj().T * math.sqrt(8.0)
    h = np.eye(4) * 2.0
    return np.concatenate([g.real.ravel(), g.imag.ravel(), h.ravel(), np.zeros(16)])


def linear_inversion(settings: Sequence, n: np.ndarray) -> np.ndarray:
    """Least-squares state estimate from frequencies, projected onto the state set."""
    rows = projector_rows(settings)
    freq = n / max(n.sum(), 1.0) * np.real(rows @ (np.eye(4) / 4).ravel()).sum()
    sol = np.linalg.lstsq(rows, freq.astype(complex), rcond=None)[0].reshape(4, 4)
    return qcore.DensityMatrix.from_array(sol, clip=True).matrix


@dataclass
class ChainStats:
    acceptance_rate: float
    beta: float
    n_retained: int


def run_pcn(
    log_lik: Callable[[np.ndarray], tuple],
    x0: np.ndarray,
    config: McmcConfig,
    on_sample: Callable,
    rng: Optional[np.random.Generator] = None,
) -> ChainStats:
    """Preconditioned Crank-Nicolson chain for a standard-normal prior.

    ``log_lik(x)`` returns ``(loglik, payload)``; ``on_sample(payload)`` is
    called for every retained post-burn-in sample.  During burn-in the step
    ``beta`` is adapted toward an acceptance rate of 0.3.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    x = np.array(x0, dtype=float)
    ll, payload = log_lik(x)
    beta = config.beta
    window, win_acc = 100, 0
    accepted = 0
    kept = 0
    total = config.burn_in + config.n_samples * config.thinning
    for it in range(total):
        xp = math.sqrt(1.0 - beta * beta) * x + beta * rng.standard_normal(x.shape[0])
        llp, pp = log_lik(xp)
        ok = math.isfinite(llp) and math.log(rng.random()) < llp - ll
        if ok:
            x, ll, payload = xp, llp, pp
        if it < config.burn_in:
            win_acc += ok
            if config.tune and (it + 1) % window == 0:
                beta = min(1.0, max(1e-6, beta * math.exp(2.0 * (win_acc / window - 0.3))))
                win_acc = 0
            continue
        accepted += ok
        if (it - config.burn_in + 1) % config.thinning == 0:
            on_sample(payload)
            kept += 1
    n_post = total - config.burn_in
    return ChainStats(accepted / n_post, beta, kept)


def effective_sample_size(trace: np.ndarray) -> float:
    """ESS from the autocorrelation sum truncated at the first negative pair."""
    x = np.asarray(trace, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    x = x - x.mean()
    var = np.dot(x, x) / n
    if var <= 0:
        return float(n)
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair < 0:
            break
        tau += 2 * pair
    return float(n / max(tau, 1.0))


def infer_posterior(
    counts: Sequence[CountRecord],
    config: McmcConfig = McmcConfig(),
    target=None,
    rng: Optional[np.random.Generator] = None,
) -> PosteriorSummary:
    """Posterior mean state and Bell-fidelity statistics for one channel.

    ``target`` is the pure state fidelity is measured against (default
    ``|Phi+>``).
    """
    settings, n = _check_counts(counts)
    channels = {c.channel for c in counts}
    if len(channels) != 1:
        raise ValidationError(f"counts span several channels: {sorted(channels)}")
    missing = set(SETTINGS) - set(settings)
    if missing:
        raise ValidationError(f"missing {len(missing)} of 36 settings, e.g. {sorted(missing)[0]}")
    if len(settings) != len(set(settings)):
        raise ValidationError("duplicate settings in count records")

    tgt = qcore.PHI_PLUS if target is None else np.asarray(target, dtype=complex)
    rows = projector_rows(settings)

    def log_lik(x):
        r = _params_to_array(x)
        return _log_likelihood(n, np.real(rows @ r.ravel()), None), r

    x0 = state_to_params(linear_inversion(settings, n))
    mean = np.zeros((4, 4), dtype=complex)
    fids = []

    def on_sample(r):
        nonlocal mean
        mean += r
        fids.append(np.real(tgt.conj() @ r @ tgt))

    stats = run_pcn(log_lik, x0, config, on_sample, rng)
    mean /= stats.n_retained
    mean = 0.5 * (mean + mean.conj().T)
    mean /= np.trace(mean).real
    fids = np.array(fids)
    warnings = []
    if not 0.05 <= stats.acceptance_rate <= 0.9:
        msg = f"acceptance rate {stats.acceptance_rate:.3f} outside [0.05, 0.9]"
        log.warning(msg)
        warnings.append(msg)
    return PosteriorSummary(
        mean_state=qcore.DensityMatrix.from_array(mean),
        fidelity_mean=float(fids.mean()),
        fidelity_std=float(fids.std(ddof=1)) if fids.size > 1 else 0.0,
        acceptance_rate=stats.acceptance_rate,
        n_effective=effective_sample_size(fids),
        beta=stats.beta,
        n_samples=stats.n_retained,
        channel=channels.pop(),
        warnings=warnings,
    )
