"""Component health monitoring and redundancy failover.

Health status of a component at tick ``now``:

* ``failed``   if an explicit fault report is outstanding, or
  ``now - last_heartbeat_tick > failed_after``;
* ``degraded`` if ``now - last_heartbeat_tick > degraded_after``;
* ``healthy``  otherwise.

Every status change emits exactly one alert, recoveries included.

Failover per group, evaluated after the health check of the same tick:

1. If the active member is failed, the first non-failed member in
   ``primary, backup_ids...`` order (skipping the active one) becomes active
   in that same tick.
2. If a backup is active and the primary is healthy, the group notes
   ``pending_failback``; if the primary is still healthy at the next tick,
   the primary becomes active again (1-tick hysteresis).
3. If every member is failed, the group is exhausted: the active id is kept,
   one ``exhausted`` alert is emitted and callers treat the function as
   unavailable until a member recovers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

KINDS = ("sensor", "actuator", "comms")
STATUSES = ("healthy", "degraded", "failed")


@dataclass(frozen=True)
class HealthThresholds:
    degraded_after: int = 3
    failed_after: int = 5

    def __post_init__(self):
        if not 0 <= self.degraded_after < self.failed_after:
            raise ValueError("thresholds must satisfy 0 <= degraded_after < failed_after")


@dataclass(frozen=True)
class ComponentHealth:
    component_id: str
    kind: str = "actuator"
    last_heartbeat_tick: int = 0
    status: str = "healthy"
    fault_reported: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown component kind {self.kind!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    def heartbeat(self, tick: int) -> "ComponentHealth":
        return replace(self, last_heartbeat_tick=max(self.last_heartbeat_tick, tick))

    def report_fault(self) -> "ComponentHealth":
        return replace(self, fault_reported=True)

    def clear_fault(self) -> "ComponentHealth":
        return replace(self, fault_reported=False)


@dataclass(frozen=True)
class Alert:
    tick: int
    component: str
    old_status: str
    new_status: str
    message: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "tick": self.tick,
                "component": self.component,
                "old_status": self.old_status,
                "new_status": self.new_status,
                "message": self.message,
            }
        )


def classify(h: ComponentHealth, now: int, th: HealthThresholds) -> str:
    if h.fault_reported:
        return "failed"
    silent = now - h.last_heartbeat_tick
    if silent > th.failed_after:
        return "failed"
    if silent > th.degraded_after:
        return "degraded"
    return "healthy"


def heartbeat_check(
    registry: Sequence[ComponentHealth], now: int, thresholds: HealthThresholds = HealthThresholds()
) -> tuple[list[ComponentHealth], list[Alert]]:
    out, alerts = [], []
    for h in registry:
        status = classify(h, now, thresholds)
        if status != h.status:
            if h.fault_reported:
                why = "fault reported"
            elif status == "healthy":
                why = "heartbeat resumed"
            else:
                why = f"no heartbeat for {now - h.last_heartbeat_tick} ticks"
            alerts.append(Alert(now, h.component_id, h.status, status, why))
            h = replace(h, status=status)
        out.append(h)
    return out, alerts


@dataclass(frozen=True)
class SwitchEvent:
    tick: int
    role: str
    from_id: str
    to_id: str | None
    reason: str


@dataclass(frozen=True)
class RedundancyGroup:
    role: str
    primary_id: str
    backup_ids: tuple[str, ...] = ()
    active_id: str | None = None
    pending_failback: bool = False
    exhausted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "backup_ids", tuple(self.backup_ids))
        if self.active_id is None:
            object.__setattr__(self, "active_id", self.primary_id)
        if self.active_id not in self.members:
            raise ValueError(f"{self.role}: active id {self.active_id!r} is not a member")
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"{self.role}: duplicate member ids")

    @property
    def members(self) -> tuple[str, ...]:
        return (self.primary_id,) + self.backup_ids

    @property
    def available(self) -> bool:
        return not self.exhausted


def failover(
    group: RedundancyGroup, registry: Mapping[str, ComponentHealth] | Iterable[ComponentHealth], tick: int = 0
) -> tuple[RedundancyGroup, SwitchEvent | Alert | None]:
    if not isinstance(registry, Mapping):
        registry = {h.component_id: h for h in registry}

    def status(cid: str) -> str:
        h = registry.get(cid)
        return "failed" if h is None else h.status

    g = group
    if status(g.active_id) == "failed":
        for cid in g.members:
            if cid != g.active_id and status(cid) != "failed":
                ev = SwitchEvent(tick, g.role, g.active_id, cid, f"{g.active_id} failed")
                return replace(g, active_id=cid, pending_failback=False, exhausted=False), ev
        if g.exhausted:
            return g, None
        alert = Alert(tick, g.role, "active", "exhausted", "all redundant members failed")
        return replace(g, pending_failback=False, exhausted=True), alert

    if g.exhausted:
        g = replace(g, exhausted=False)
    if g.active_id != g.primary_id:
        if status(g.primary_id) == "healthy":
            if g.pending_failback:
                ev = SwitchEvent(tick, g.role, g.active_id, g.primary_id, "primary recovered")
                return replace(g, active_id=g.primary_id, pending_failback=False), ev
            return replace(g, pending_failback=True), None
        return replace(g, pending_failback=False), None
    return g, None


class AlertLog:
    """Append-only ``alerts.jsonl`` writer (keys: tick, component, old_status, new_status, message)."""

    def __init__(self, path: str | Path | None = None):
        self.alerts: list[Alert] = []
        self._fh = open(path, "w", encoding="ascii", newline="\n") if path is not None else None

    def extend(self, alerts: Iterable[Alert]) -> None:
        for a in alerts:
            self.alerts.append(a)
            if self._fh is not None:
                self._fh.write(a.to_json() + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


__all__ = [
    "Alert",
    "AlertLog",
    "ComponentHealth",
    "HealthThresholds",
    "KINDS",
    "RedundancyGroup",
    "STATUSES",
    "SwitchEvent",
    "classify",
    "failover",
    "heartbeat_check",
]
