import numpy as np
import pytest

from flexent.allocator import AllocationRequest, allocate
from flexent.errors import ValidationError


def uniform(n=150, r_i=1158.0):
    return [(k, r_i) for k in range(1, n + 1)]


def no_overlap(plan):
    used = set()
    for lo, hi in plan.assignments.values():
        block = set(range(lo, hi + 1))
        if used & block:
            return False
        used |= block
    return True


def test_single_channel_suffices():
    plan = allocate([AllocationRequest("a", 1000)], uniform())
    assert plan.assignments == {"a": (1, 1)}
    assert (plan.ports_used_c, plan.ports_used_l) == (1, 1)


def test_pigeonhole_on_c_ports():
    reqs = [AllocationRequest(f"u{i}", 1000) for i in range(10)]
    plan = allocate(reqs, uniform(), c_ports=9, l_ports=20)
    assert len(plan.unmet) == 1 and len(plan.assignments) == 9


def test_aggregation_length():
    # summation oracle: 4 * 1158 = 4632 < 5000 <= 5 * 1158 = 5790
    assert 4 * 1158 < 5000 <= 5 * 1158
    plan = allocate([AllocationRequest("big", 5000)], uniform())
    lo, hi = plan.assignments["big"]
    assert hi - lo + 1 == 5
    assert plan.estimated_ebr["big"] == pytest.approx(5790)


def test_priority_and_ties():
    reqs = [AllocationRequest("b", 1000, 1), AllocationRequest("a", 1000, 1), AllocationRequest("z", 1000, 5)]
    plan = allocate(reqs, uniform(5))
    assert plan.assignments == {"z": (1, 1), "a": (2, 2), "b": (3, 3)}


def test_shortest_block_skips_weak_channels():
    rates = [(1, 100.0), (2, 100.0), (3, 900.0), (4, 900.0), (5, 50.0)]
    plan = allocate([AllocationRequest("x", 1500)], rates)
    assert plan.assignments["x"] == (3, 4)


def test_unsatisfiable_request_uses_no_port():
    plan = allocate([AllocationRequest("huge", 1e9), AllocationRequest("ok", 10)], uniform(5))
    assert plan.unmet == ["huge"] and plan.ports_used_c == 1


def test_negative_information_not_counted():
    plan = allocate([AllocationRequest("x", 100)], [(1, -50.0), (2, 60.0), (3, 60.0)])
    assert plan.assignments["x"] == (2, 3)


def test_duplicate_ids():
    with pytest.raises(ValidationError):
        allocate([AllocationRequest("a", 1), AllocationRequest("a", 2)], uniform())


def test_negative_target():
    with pytest.raises(ValidationError):
        AllocationRequest("a", -1)


def random_instance(rng):
    n = int(rng.integers(5, 60))
    rates = [(k, float(rng.uniform(0, 1500))) for k in range(1, n + 1)]
    reqs = [
        AllocationRequest(f"r{i:02d}", float(rng.uniform(0, 5000)), int(rng.integers(0, 3)))
        for i in range(int(rng.integers(1, 25)))
    ]
    return reqs, rates


def test_randomized_properties():
    rng = np.random.default_rng(7)
    for _ in range(100):
        reqs, rates = random_instance(rng)
        c, l = int(rng.integers(0, 10)), int(rng.integers(0, 21))
        plan = allocate(reqs, rates, c, l)
        assert no_overlap(plan)
        assert plan.ports_used_c <= c and plan.ports_used_l <= l
        r = dict(rates)
        for rid, (lo, hi) in plan.assignments.items():
            target = next(q.target_ebr for q in reqs if q.id == rid)
            assert sum(max(0, r[k]) for k in range(lo, hi + 1)) >= target
        more = allocate(reqs, rates, c + int(rng.integers(1, 5)), l + int(rng.integers(1, 5)))
        assert set(more.unmet) <= set(plan.unmet)
        shuffled = list(reqs)
        rng.shuffle(shuffled)
        assert allocate(shuffled, rates, c, l).assignments == plan.assignments
