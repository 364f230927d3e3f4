"""Energy-matched C+L-band channel plan on the 25 GHz ITU grid.

Frequencies are held internally as integer MHz so that energy matching
(signal + idler == pump) is exact; THz floats are derived for output.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import InfeasiblePlanError, ValidationError

ITU_ORIGIN_THZ = 193.1
ITU_SPACING_THZ = 0.025

_MHZ_PER_THZ = 1_000_000
_ITU_ORIGIN_MHZ = 193_100_000
_ITU_SPACING_MHZ = 25_000


def thz_to_mhz(f_thz: float) -> int:
    return int(round(f_thz * _MHZ_PER_THZ))


def mhz_to_thz(f_mhz: int) -> float:
    return f_mhz / _MHZ_PER_THZ


def itu_aligned(f_thz: float) -> bool:
    """True when ``f`` sits on the 25 GHz grid anchored at 193.1 THz."""
    n = (f_thz - ITU_ORIGIN_THZ) / ITU_SPACING_THZ
    return abs(n - round(n)) <= 1e-9


@dataclass(frozen=True)
class WssSpec:
    band_low: float
    band_high: float
    port_count: int
    adjacent_leakage: float = 0.012
    extinction_floor: float = 0.0

    def __post_init__(self):
        if not self.band_low < self.band_high:
            raise ValidationError(f"WSS band_low {self.band_low} must be below band_high {self.band_high}")
        if not 0 <= self.extinction_floor < self.adjacent_leakage < 1:
            raise ValidationError("WSS leakage must satisfy 0 <= extinction_floor < adjacent_leakage < 1")
        if self.port_count < 1:
            raise ValidationError("WSS needs at least one output port")

    def contains(self, f_mhz: int) -> bool:
        return thz_to_mhz(self.band_low) <= f_mhz <= thz_to_mhz(self.band_high)


C_BAND_WSS = WssSpec(191.325, 196.150, port_count=9)
L_BAND_WSS = WssSpec(186.075, 191.075, port_count=20)


def filter_weight(spec: WssSpec, channel_offset: int) -> float:
    """Transmission of a WSS slot for light ``channel_offset`` slots away."""
    k = abs(int(channel_offset))
    if k == 0:
        return 1.0
    if k == 1:
        return spec.adjacent_leakage
    return spec.extinction_floor


@dataclass(frozen=True)
class ChannelPair:
    k: int
    signal_mhz: int
    idler_mhz: int
    width_mhz: int

    @property
    def signal_thz(self) -> float:
        return mhz_to_thz(self.signal_mhz)

    @property
    def idler_thz(self) -> float:
        return mhz_to_thz(self.idler_mhz)

    @property
    def width_ghz(self) -> float:
        return self.width_mhz / 1000


def build_channel_plan(
    pump: float = 383.0,
    width: float = 0.025,
    count: int = 150,
    c_wss: WssSpec = C_BAND_WSS,
    l_wss: WssSpec = L_BAND_WSS,
) -> list[ChannelPair]:
    """Build ``count`` energy-matched pairs, pair 1 nearest degeneracy.

    ``pump`` and ``width`` are in THz.  Signal centers rise with ``k`` inside
    the C-band switch; idler centers are ``pump - signal`` inside the L-band
    switch.  Passband membership is tested on channel centers.
    """
    if count < 1:
        raise ValidationError("channel count must be positive")
    pump_mhz = thz_to_mhz(pump)
    width_mhz = thz_to_mhz(width)
    if width_mhz <= 0 or width_mhz % _ITU_SPACING_MHZ:
        raise ValidationError(f"width {width} THz is not a multiple of the 25 GHz grid")
    # signal and idler can both sit on the grid only if pump - 2*origin is a grid multiple
    if (pump_mhz - 2 * _ITU_ORIGIN_MHZ) % _ITU_SPACING_MHZ:
        raise InfeasiblePlanError(
            f"pump {pump} THz does not map grid-aligned signals onto grid-aligned idlers"
        )

    c_lo, c_hi = thz_to_mhz(c_wss.band_low), thz_to_mhz(c_wss.band_high)
    l_lo, l_hi = thz_to_mhz(l_wss.band_low), thz_to_mhz(l_wss.band_high)

    # lowest signal center allowed by: C passband, L passband upper edge, signal above degeneracy
    lowest = max(c_lo, pump_mhz - l_hi, pump_mhz // 2 + 1)
    first = _ITU_ORIGIN_MHZ + math.ceil((lowest - _ITU_ORIGIN_MHZ) / _ITU_SPACING_MHZ) * _ITU_SPACING_MHZ
    last = first + (count - 1) * width_mhz
    if last > c_hi:
        raise InfeasiblePlanError(
            f"last signal center {mhz_to_thz(last):.6f} THz exceeds C-band WSS upper bound {c_wss.band_high} THz"
        )
    if pump_mhz - last < l_lo:
        raise InfeasiblePlanError(
            f"last idler center {mhz_to_thz(pump_mhz - last):.6f} THz is below L-band WSS lower bound {l_wss.band_low} THz"
        )

    plan = []
    for k in range(1, count + 1):
        s = first + (k - 1) * width_mhz
        plan.append(ChannelPair(k, s, pump_mhz - s, width_mhz))
    return plan


def plan_to_csv(plan: list[ChannelPair]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "signal_thz", "idler_thz", "width_ghz"])
    for p in plan:
        w.writerow([p.k, f"{p.signal_thz:.6f}", f"{p.idler_thz:.6f}", f"{p.width_ghz:g}"])
    return buf.getvalue()
