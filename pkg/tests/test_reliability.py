import json

import numpy as np
import pytest

from greentwin.reliability import (
    Alert,
    AlertLog,
    ComponentHealth,
    HealthThresholds,
    RedundancyGroup,
    SwitchEvent,
    classify,
    failover,
    heartbeat_check,
)

from helpers import failover_trial, random_alive_schedule

TH = HealthThresholds(3, 5)


def test_all_current_no_alerts():
    reg = [ComponentHealth(c, last_heartbeat_tick=10) for c in "abc"]
    out, alerts = heartbeat_check(reg, 10, TH)
    assert alerts == [] and {h.status for h in out} == {"healthy"}


def test_silence_beyond_failed_after():
    reg = [ComponentHealth("a", last_heartbeat_tick=0, status="degraded")]
    out, alerts = heartbeat_check(reg, TH.failed_after + 1, TH)
    assert out[0].status == "failed" and len(alerts) == 1
    assert alerts[0].old_status == "degraded" and alerts[0].new_status == "failed"


def test_degraded_then_recovery_walk():
    h = ComponentHealth("a", last_heartbeat_tick=0)
    statuses, alerts = [], []
    for t in range(1, 8):
        if t == 6:
            h = h.heartbeat(t)
        (h,), new = heartbeat_check([h], t, TH)
        statuses.append(h.status)
        alerts += new
    assert statuses == ["healthy", "healthy", "healthy", "degraded", "degraded", "healthy", "healthy"]
    assert [(a.old_status, a.new_status) for a in alerts] == [("healthy", "degraded"), ("degraded", "healthy")]


def test_fault_report_fails_immediately_and_clears():
    h = ComponentHealth("a").report_fault()
    assert classify(h, 0, TH) == "failed"
    assert classify(h.clear_fault(), 0, TH) == "healthy"


def _reg(**status):
    return {cid: ComponentHealth(cid, status=s) for cid, s in status.items()}


def test_failover_examples():
    g = RedundancyGroup("heater", "p", ("b1", "b2"))
    same, ev = failover(g, _reg(p="healthy", b1="healthy", b2="healthy"))
    assert same == g and ev is None
    g1, ev = failover(g, _reg(p="failed", b1="healthy", b2="healthy"), 4)
    assert g1.active_id == "b1" and isinstance(ev, SwitchEvent) and ev.tick == 4
    g2, ev = failover(g, _reg(p="failed", b1="failed", b2="healthy"))
    assert g2.active_id == "b2" and ev.from_id == "p"


def test_exhaustion_alerts_once_and_recovers():
    g = RedundancyGroup("lamp", "p", ("b",))
    dead = _reg(p="failed", b="failed")
    g, ev = failover(g, dead, 1)
    assert isinstance(ev, Alert) and g.exhausted and not g.available
    g, ev = failover(g, dead, 2)
    assert ev is None
    g, ev = failover(g, _reg(p="failed", b="healthy"), 3)
    assert g.active_id == "b" and g.available


def test_failback_hysteresis():
    g = RedundancyGroup("heater", "p", ("b",), active_id="b")
    g, ev = failover(g, _reg(p="healthy", b="healthy"), 10)
    assert g.active_id == "b" and g.pending_failback and ev is None
    g, ev = failover(g, _reg(p="healthy", b="healthy"), 11)
    assert g.active_id == "p" and ev.reason == "primary recovered"


def test_random_schedules_continuity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        alive = random_alive_schedule(rng, int(rng.integers(2, 5)), 150)
        gap, latency, alerts, transitions, _ = failover_trial(alive)
        assert gap == 0 and latency == 0
        assert alerts == transitions


def test_alert_log_jsonl(tmp_path):
    log = AlertLog(tmp_path / "alerts.jsonl")
    log.extend([Alert(3, "heater_a", "healthy", "failed", "fault reported")])
    log.close()
    rec = json.loads((tmp_path / "alerts.jsonl").read_text())
    assert rec == {"tick": 3, "component": "heater_a", "old_status": "healthy", "new_status": "failed",
                   "message": "fault reported"}


def test_validation():
    with pytest.raises(ValueError):
        HealthThresholds(5, 3)
    with pytest.raises(ValueError):
        RedundancyGroup("x", "a", ("a",))
    with pytest.raises(ValueError):
        ComponentHealth("a", kind="robot")
