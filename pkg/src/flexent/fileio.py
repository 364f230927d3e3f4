"""CSV readers and writers for plans, counts, JSI scans, reports and requests.

Readers raise :class:`SchemaError` naming the offending row (1-based,
header excluded) and column.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .allocator import AllocationRequest
from .errors import SchemaError
from .flexgrid import ChannelPair, plan_to_csv, thz_to_mhz
from .source import LABELS, CountRecord, JsiPoint, JsiScan

COUNT_COLUMNS = ["channel", "setting_a", "setting_b", "counts", "integration_s"]
JSI_COLUMNS = ["sig_ch", "idl_ch", "coinc", "singles_s", "singles_i", "integration_s"]
PLAN_COLUMNS = ["k", "signal_thz", "idler_thz", "width_ghz"]
REPORT_COLUMNS = ["k", "fidelity", "e_n", "i_ab", "i_ba", "car", "r_coinc", "r_n", "r_i"]
REQUEST_COLUMNS = ["id", "target_ebr", "priority"]


def _rows(path, columns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}", row=0, column=missing[0])
        for i, row in enumerate(reader, start=1):
            yield i, row


def _field(row, i, col, kind):
    text = row.get(col)
    try:
        value = kind(text)
    except (TypeError, ValueError):
        raise SchemaError(f"cannot parse {text!r} as {kind.__name__}", row=i, column=col) from None
    if kind is float and not math.isfinite(value):
        raise SchemaError(f"non-finite value {text!r}", row=i, column=col)
    return value


def _nonneg_int(row, i, col):
    v = _field(row, i, col, int)
    if v < 0:
        raise SchemaError(f"negative value {v}", row=i, column=col)
    return v


def _write(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_plan_csv(plan, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(plan_to_csv(plan))


def read_plan_csv(path) -> list[ChannelPair]:
    plan = []
    for i, row in _rows(path, PLAN_COLUMNS):
        plan.append(
            ChannelPair(
                _field(row, i, "k", int),
                thz_to_mhz(_field(row, i, "signal_thz", float)),
                thz_to_mhz(_field(row, i, "idler_thz", float)),
                int(round(_field(row, i, "width_ghz", float) * 1000)),
            )
        )
    return plan


def write_counts_csv(records, path):
    _write(
        path,
        COUNT_COLUMNS,
        ([r.channel, r.setting[0], r.setting[1], r.counts, repr(float(r.integration_s))] for r in records),
    )


def read_counts_csv(path) -> list[CountRecord]:
    out = []
    for i, row in _rows(path, COUNT_COLUMNS):
        setting = []
        for col in ("setting_a", "setting_b"):
            lab = (row.get(col) or "").strip()
            if lab not in LABELS or len(lab) != 1:
                raise SchemaError(f"setting label {lab!r} not in {list(LABELS)}", row=i, column=col)
            setting.append(lab)
        t = _field(row, i, "integration_s", float)
        if t <= 0:
            raise SchemaError("integration time must be positive", row=i, column="integration_s")
        out.append(CountRecord(_field(row, i, "channel", int), tuple(setting), _nonneg_int(row, i, "counts"), t))
    return out


def write_jsi_csv(scan: JsiScan, path):
    _write(
        path,
        JSI_COLUMNS,
        ([e.sig_ch, e.idl_ch, e.coinc, e.singles_s, e.singles_i, repr(float(e.integration_s))] for e in scan.entries),
    )


def read_jsi_csv(path, window_s: float = 1e-9, pattern: str = "file") -> JsiScan:
    entries = []
    for i, row in _rows(path, JSI_COLUMNS):
        t = _field(row, i, "integration_s", float)
        if t <= 0:
            raise SchemaError("integration time must be positive", row=i, column="integration_s")
        entries.append(
            JsiPoint(
                _field(row, i, "sig_ch", int),
                _field(row, i, "idl_ch", int),
                _nonneg_int(row, i, "coinc"),
                _nonneg_int(row, i, "singles_s"),
                _nonneg_int(row, i, "singles_i"),
                t,
            )
        )
    return JsiScan(entries, pattern, window_s)


def write_report_csv(reports, path):
    _write(
        path,
        REPORT_COLUMNS,
        (
            [r.k] + [repr(float(v)) for v in (r.fidelity, r.log_negativity, r.coherent_info_ab, r.coherent_info_ba, r.car, r.r_coinc, r.r_n, r.r_i)]
            for r in reports
        ),
    )


def read_report_rates(path) -> list[tuple[int, float]]:
    """``(k, r_i)`` pairs from a report CSV."""
    return [(_field(row, i, "k", int), _field(row, i, "r_i", float)) for i, row in _rows(path, REPORT_COLUMNS)]


def read_requests_csv(path) -> list[AllocationRequest]:
    out = []
    for i, row in _rows(path, REQUEST_COLUMNS):
        rid = (row.get("id") or "").strip()
        if not rid:
            raise SchemaError("empty request id", row=i, column="id")
        target = _field(row, i, "target_ebr", float)
        if target < 0:
            raise SchemaError("negative target_ebr", row=i, column="target_ebr")
        out.append(AllocationRequest(rid, target, _field(row, i, "priority", int)))
    return out


def write_json(obj, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
