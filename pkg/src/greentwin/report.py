"""Run reports and the measured-table validation analysis.

``report`` writes three files:

``summary.txt``
    tracking error statistics per controlled channel (over ticks with a
    setpoint), in-band fraction after warm-up, resource totals (compensated
    sums of the log columns, printed with ``repr``), alert and switch counts,
    and strategy counts per actuator.
``timeseries.csv``
    ``tick`` followed by truth, cleaned value and setpoint per channel.
``decisions.csv``
    ``tick,actuator,strategy,command,rationale``, one row per tick and actuator.

``validate_tables`` compares two row-aligned CSV files channel by channel
with exact decimal arithmetic, so a discrepancy such as 1.1 prints as 1.1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Mapping

from .core import CHANNELS
from .plant import ACTUATORS
from .sim import CONTROLLED, RunLog

RESOURCE_COLUMNS = ("energy", "water", "fertilizer")


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelDiscrepancy:
    channel: str
    max_abs: Decimal
    mean_abs: Decimal
    max_row: int  # 1-based row of the (first) maximum
    n: int


@dataclass(frozen=True)
class ValidationReport:
    system: str
    reference: str
    channels: Mapping[str, ChannelDiscrepancy]

    def max_abs(self, channel: str) -> Decimal:
        return self.channels[channel].max_abs

    def format(self) -> str:
        lines = [f"system:    {self.system}", f"reference: {self.reference}", "channel,max_abs,max_row,mean_abs,n"]
        for ch, d in self.channels.items():
            lines.append(f"{ch},{d.max_abs},{d.max_row},{d.mean_abs},{d.n}")
        return "\n".join(lines) + "\n"


def _read_table(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.DictReader(fh)
        rows = list(r)
        cols = [c for c in (r.fieldnames or []) if c != "row"]
    return cols, rows


def _dec(text: str, where: str) -> Decimal:
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise ValidationError(f"{where}: not a number: {text!r}") from None
    if not d.is_finite():
        raise ValidationError(f"{where}: not finite: {text!r}")
    return d


def validate_tables(system_csv: str | Path, reference_csv: str | Path) -> ValidationReport:
    """Per-channel max and mean absolute discrepancy between two tables."""
    sys_cols, sys_rows = _read_table(Path(system_csv))
    ref_cols, ref_rows = _read_table(Path(reference_csv))
    if len(sys_rows) != len(ref_rows):
        raise ValidationError(f"row-count mismatch: {len(sys_rows)} vs {len(ref_rows)}")
    if not sys_rows:
        raise ValidationError("tables are empty")
    if sys_cols != ref_cols:
        raise ValidationError(f"channel mismatch: {sys_cols} vs {ref_cols}")
    out = {}
    for ch in sys_cols:
        diffs = [
            abs(_dec(a[ch], f"{system_csv}:{i + 1}:{ch}") - _dec(b[ch], f"{reference_csv}:{i + 1}:{ch}"))
            for i, (a, b) in enumerate(zip(sys_rows, ref_rows))
        ]
        mx = max(diffs)
        out[ch] = ChannelDiscrepancy(ch, mx, sum(diffs) / len(diffs), diffs.index(mx) + 1, len(diffs))
    return ValidationReport(str(system_csv), str(reference_csv), out)


# ---------------------------------------------------------------------------
# run report


def _stats(errors: list[float]) -> str:
    n = len(errors)
    if n == 0:
        return "n=0"
    mean = math.fsum(errors) / n
    mean_abs = math.fsum(abs(e) for e in errors) / n
    rms = math.sqrt(math.fsum(e * e for e in errors) / n)
    sd = math.sqrt(math.fsum((e - mean) ** 2 for e in errors) / n)
    max_abs = max(abs(e) for e in errors)
    return f"n={n} mean={mean!r} mean_abs={mean_abs!r} rms={rms!r} sd={sd!r} max_abs={max_abs!r}"


def resource_totals(log: RunLog) -> dict[str, float]:
    return {c: math.fsum(v for v in log.floats(c) if v is not None) for c in RESOURCE_COLUMNS}


def summary_text(log: RunLog) -> str:
    if len(log) == 0:
        raise ValueError("cannot report on an empty log")
    warm = log.column("warmup")
    lines = [f"ticks: {len(log)}", f"warmup_ticks: {warm.count('1')}", ""]
    lines.append("[tracking] error = truth - setpoint")
    for ch in CONTROLLED:
        truth, sp = log.floats(f"truth.{ch}"), log.floats(f"sp.{ch}")
        errs = [t - s for t, s in zip(truth, sp) if s is not None]
        inband = [v for v, w in zip(log.column(f"inband.{ch}"), warm) if v != "" and w == "0"]
        frac = f"{sum(v == '1' for v in inband)}/{len(inband)}" if inband else "n/a"
        lines.append(f"{ch}: {_stats(errs)} in_band_after_warmup={frac}")
    lines.append("")
    lines.append("[resources] totals")
    for k, v in resource_totals(log).items():
        lines.append(f"{k}_total: {v!r}")
    lines.append("")
    lines.append("[reliability]")
    alerts = sum(int(v) for v in log.column("alerts"))
    switches = sum(1 for e in log.column("events") for part in e.split("; ") if "->" in part)
    lines.append(f"alerts: {alerts}")
    lines.append(f"switch_events: {switches}")
    lines.append("")
    lines.append("[strategies] ticks per strategy")
    for a in ACTUATORS:
        col = log.column(f"strategy.{a}")
        counts = " ".join(f"{s}={col.count(s)}" for s in ("pid", "mpc", "fuzzy"))
        lines.append(f"{a}: {counts}")
    return "\n".join(lines) + "\n"


def report(log: RunLog, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(log) == 0:
        raise ValueError("cannot report on an empty log")
    paths = [out / "summary.txt", out / "timeseries.csv", out / "decisions.csv"]
    paths[0].write_text(summary_text(log), encoding="utf-8")

    cols = ["tick"]
    for ch in CHANNELS:
        cols += [f"truth.{ch}", f"clean.{ch}"]
        if ch in CONTROLLED:
            cols.append(f"sp.{ch}")
    idx = [log.columns.index(c) for c in cols]
    with open(paths[1], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in log.rows:
            w.writerow([row[i] for i in idx])

    ticks = log.column("tick")
    with open(paths[2], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tick", "actuator", "strategy", "command", "rationale"])
        per_act = {a: (log.column(f"strategy.{a}"), log.column(f"cmd.{a}"), log.column(f"why.{a}")) for a in ACTUATORS}
        for i, t in enumerate(ticks):
            for a in ACTUATORS:
                s, c, r = per_act[a]
                w.writerow([t, a, s[i], c[i], r[i]])
    return paths


__all__ = [
    "ChannelDiscrepancy",
    "RESOURCE_COLUMNS",
    "ValidationError",
    "ValidationReport",
    "report",
    "resource_totals",
    "summary_text",
    "validate_tables",
]
