"""Greedy port-constrained assignment of contiguous channel blocks to user requests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ValidationError
from .metrics import EBR_CAVEAT


@dataclass(frozen=True)
class AllocationRequest:
    id: str
    target_ebr: float
    priority: int = 0

    def __post_init__(self):
        if not self.target_ebr >= 0:
            raise ValidationError(f"request {self.id!r} has negative target_ebr")


@dataclass
class AllocationPlan:
    assignments: dict  # request id -> (first_k, last_k), inclusive
    ports_used_c: int
    ports_used_l: int
    unmet: list
    estimated_ebr: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "assignments": [
                {"id": rid, "first": lo, "last": hi, "estimated_ebr": self.estimated_ebr.get(rid)}
                for rid, (lo, hi) in self.assignments.items()
            ],
            "ports_used_c": self.ports_used_c,
            "ports_used_l": self.ports_used_l,
            "unmet": list(self.unmet),
            "ebr_note": EBR_CAVEAT,
        }


def _channel_rates(channel_reports) -> list[tuple[int, float]]:
    rates = []
    for r in channel_reports:
        if isinstance(r, tuple):
            rates.append((int(r[0]), float(r[1])))
        else:
            rates.append((int(r.k), float(r.r_i)))
    rates.sort()
    return rates


def allocate(
    requests: Sequence[AllocationRequest],
    channel_reports,
    c_ports: int = 9,
    l_ports: int = 20,
) -> AllocationPlan:
    """Serve requests by priority (ties by id) with the shortest free contiguous block.

    A block qualifies when its summed lower-bound rate ``r_i`` meets the
    request's target; among equally short blocks the lowest channel index
    wins.  Each served request uses one output port on each switch.
    ``channel_reports`` may hold :class:`EntanglementReport` objects or
    ``(k, r_i)`` pairs.
    """
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(f"duplicate request ids: {dup}")
    if c_ports < 0 or l_ports < 0:
        raise ValidationError("port counts must be nonnegative")

    rates = _channel_rates(channel_reports)
    ks = [k for k, _ in rates]
    ri = [max(0.0, v) for _, v in rates]
    n = len(rates)
    free = [True] * n

    assignments, estimated, unmet = {}, {}, []
    used = 0
    for req in sorted(requests, key=lambda r: (-r.priority, r.id)):
        if used >= min(c_ports, l_ports):
            unmet.append(req.id)
            continue
        block = _shortest_block(ri, ks, free, req.target_ebr)
        if block is None:
            unmet.append(req.id)
            continue
        lo, hi = block
        for i in range(lo, hi + 1):
            free[i] = False
        assignments[req.id] = (ks[lo], ks[hi])
        estimated[req.id] = sum(ri[lo : hi + 1])
        used += 1
    return AllocationPlan(assignments, used, used, unmet, estimated)


def _shortest_block(ri, ks, free, target):
    n = len(ri)
    best = None
    for lo in range(n):
        total = 0.0
        for hi in range(lo, n):
            # contiguity: free, and adjacent in channel numbering
            if not free[hi] or (hi > lo and ks[hi] != ks[hi - 1] + 1):
                break
            if best is not None and hi - lo + 1 >= best[1] - best[0] + 1:
                break
            total += ri[hi]
            if total >= target:
                best = (lo, hi)
                break
    return best
