"""Platform service: ingestion, idempotency, rules, risk map, queries."""

import pytest

from ovinet.errors import (
    DuplicateDeviceError,
    InvalidRangeError,
    UnknownDeviceError,
)
from ovinet.service import (
    AlarmRule,
    Condition,
    DeviceRecord,
    PlatformConfig,
    PlatformService,
    grid_cell_id,
)
from ovinet.telemetry import (
    LinkKind,
    Reading,
    TelemetryEvent,
    TiltState,
)

from conftest import alarms_oracle

T0 = 1767225600.0   # 2026-01-01T00:00:00Z
DAY = 86400.0


def record(device_id="ovi-01", gps=(-37.3217, -59.1332), link="wifi_mqtt"):
    return DeviceRecord(
        device_id=device_id, site={"address": "a", "province": "p", "country": "c"},
        responsible={"name": "n", "contact": "c"}, place_type="home",
        installer="i", species="Aedes aegypti", gps=gps, link=link)


def event(device_id="ovi-01", ts=T0 + 10.0, egg_count=0, **over):
    fields = dict(
        device_id=device_id,
        ts=ts,
        readings=(Reading(ts=ts - 5.0, egg_count=egg_count),),
        temperature_c=24.0,
        humidity_pct=60.0,
        water_present=True,
        tilt_state=TiltState.WELL_POSITIONED,
        lid_open=False,
        battery_pct=99.0,
        link=LinkKind.WIFI_MQTT,
        signal_dbm=-55.0,
        gps=(-37.3217, -59.1332),
        fw_version="1.0.0",
    )
    fields.update(over)
    return TelemetryEvent(**fields)


def service_with_device(**kw):
    svc = PlatformService(**kw)
    svc.register_device(record())
    return svc


# --- ingestion -----------------------------------------------------------------


def test_ingest_stores_queryable_egg_count():
    svc = service_with_device()
    out = svc.ingest(event(ts=T0 + 14 * DAY, egg_count=9), T0 + 14 * DAY + 0.2)
    assert out.accepted and out.points_added > 0
    points = svc.query_series("ovi-01", "egg_count", T0, T0 + 20 * DAY)
    assert [(ts, v) for ts, v in points] == [(T0 + 14 * DAY - 5.0, 9)]


def test_duplicate_event_is_idempotent():
    svc = service_with_device()
    ev = event(egg_count=3)
    svc.ingest(ev, ev.ts + 0.1)
    out = svc.ingest(ev, ev.ts + 5.0)       # at-least-once redelivery
    assert out.accepted and out.reason == "duplicate"
    points = svc.query_series("ovi-01", "egg_count", T0, T0 + DAY)
    assert len(points) == 1
    assert svc.ingest_count == 1


def test_replaying_log_reproduces_store_exactly():
    events = [event(ts=T0 + 10.0 + k * 3600.0, egg_count=k) for k in range(6)]

    def build():
        svc = service_with_device()
        for ev in events:
            svc.ingest(ev, ev.ts + 0.05)
        for ev in events:                    # full replay
            svc.ingest(ev, ev.ts + 0.9)
        return "\n".join(svc.export_lines())

    assert build() == build()


def test_unknown_device_quarantined():
    svc = PlatformService()
    out = svc.ingest(event(device_id="ghost"), T0)
    assert not out.accepted and out.reason == "unknown_device"
    assert svc.quarantine
    assert svc.ingest_count == 0


def test_ingest_lag_recorded():
    svc = service_with_device()
    svc.ingest(event(ts=T0 + 10.0), T0 + 10.4)
    lag = svc.query_series("ovi-01", "ingest_lag_s", T0, T0 + DAY)
    assert lag[0][1] == pytest.approx(0.4)
    assert svc.max_lag_s == pytest.approx(0.4)


def test_last_seen_monotone():
    svc = service_with_device()
    svc.ingest(event(ts=T0 + 100.0), T0 + 100.2)
    svc.ingest(event(ts=T0 + 50.0), T0 + 50.1)    # late duplicate epoch
    assert svc.get_device("ovi-01").last_seen == pytest.approx(T0 + 100.2)


# --- rules ---------------------------------------------------------------------


def test_over_temperature_alarm_in_same_ingest():
    svc = service_with_device()
    out = svc.ingest(event(temperature_c=44.0), T0 + 11.0)
    assert [a.rule_id for a in out.alarms] == ["temp_high"]


def test_in_range_point_no_alarm():
    svc = service_with_device()
    out = svc.ingest(event(temperature_c=25.0), T0 + 11.0)
    assert out.alarms == []


def test_tilt_overturned_fires_alarm():
    svc = service_with_device()
    out = svc.ingest(event(tilt_state=TiltState.OVERTURNED), T0 + 11.0)
    assert "tilt_overturned" in [a.rule_id for a in out.alarms]


def test_water_absent_fires_alarm():
    svc = service_with_device()
    out = svc.ingest(event(water_present=False), T0 + 11.0)
    assert "water_absent" in [a.rule_id for a in out.alarms]


def test_edge_triggered_dedup_matches_oracle():
    svc = service_with_device()
    values = [25.0, 44.0, 45.0, 44.5, 25.0, 43.0, 41.0, 20.0]
    for k, v in enumerate(values):
        svc.ingest(event(ts=T0 + 10 + k * 3600.0, temperature_c=v),
                   T0 + 10.5 + k * 3600.0)
    fired = [a for a in svc.alarms if a.rule_id == "temp_high"]
    expected = alarms_oracle(values, lambda v: v > 40.0)
    assert len(fired) == len(expected) == 2
    # alarm timestamps line up with the oracle's edge indices
    got_ts = [a.ts for a in fired]
    want_ts = [T0 + 10 + i * 3600.0 for i in expected]
    assert got_ts == want_ts


def test_alarm_soundness_and_completeness_bruteforce():
    svc = service_with_device()
    temps = [25, 41, 42, 30, 43, 9, 8, 30]
    for k, v in enumerate(temps):
        svc.ingest(event(ts=T0 + 10 + k * 3600.0, temperature_c=float(v)),
                   T0 + 11 + k * 3600.0)
    high = alarms_oracle(temps, lambda v: v > 40.0)
    low = alarms_oracle(temps, lambda v: v < 10.0)
    fired = [a.rule_id for a in svc.alarms if a.metric == "temperature_c"]
    assert fired.count("temp_high") == len(high)
    assert fired.count("temp_low") == len(low)


def test_custom_rule_and_webhook_action():
    hits = []
    cfg = PlatformConfig()
    cfg.webhook = hits.append
    svc = PlatformService(cfg)
    svc.register_device(record())
    svc.rules.append(AlarmRule("egg_surge", "egg_count",
                               Condition("above", 8), "info", "webhook"))
    svc.ingest(event(egg_count=9), T0 + 11.0)
    assert [h["rule_id"] for h in hits] == ["egg_surge"]


# --- risk map ------------------------------------------------------------------


def test_single_trap_zero_eggs_cell():
    svc = service_with_device()
    for day in range(7):
        svc.ingest(event(ts=T0 + day * DAY + 10.0, egg_count=0),
                   T0 + day * DAY + 10.2)
    cells = svc.risk_map(T0 + 7 * DAY)
    assert len(cells) == 1
    assert cells[0].positive_trap_fraction == 0.0
    assert cells[0].eggs_per_trap == 0.0
    assert cells[0].trap_count == 1


def test_pa_period_eggs_per_trap_matches_window_oracle():
    svc = service_with_device()
    pa = [2, 3, 5, 7, 8, 8, 9]
    for day, count in enumerate(pa):
        for m in range(4):                      # four same-scene readings a day
            ts = T0 + day * DAY + m * 21600.0 + 10.0
            svc.ingest(event(ts=ts, egg_count=count), ts + 0.2)
    cells = svc.risk_map(T0 + 7 * DAY, grid_size_m=500)
    # oracle: trailing-7-day sum of daily maxima over the stored points
    stored = svc.points[("ovi-01", "egg_count")]
    daily = {}
    for ts, v in stored:
        if T0 <= ts <= T0 + 7 * DAY:
            daily.setdefault(int((ts - T0) // DAY), []).append(v)
    expected = sum(max(vs) for vs in daily.values())
    assert expected == sum(pa) == 42
    assert cells[0].eggs_per_trap == pytest.approx(expected)
    assert cells[0].positive_trap_fraction == 1.0


def test_two_traps_one_positive_fraction_half():
    svc = service_with_device()
    svc.register_device(record(device_id="ovi-02", gps=(-37.3218, -59.1331)))
    svc.ingest(event(device_id="ovi-01", egg_count=4), T0 + 10.2)
    svc.ingest(event(device_id="ovi-02", egg_count=0), T0 + 10.3)
    cells = svc.risk_map(T0 + DAY)
    assert len(cells) == 1
    assert cells[0].trap_count == 2
    assert cells[0].positive_trap_fraction == 0.5
    assert cells[0].eggs_per_trap == pytest.approx(2.0)


def test_risk_map_empty_without_reports():
    svc = service_with_device()
    assert svc.risk_map(T0) == []


def test_grid_cell_id_stable_and_distinct():
    a = grid_cell_id(-37.3217, -59.1332, 500)
    assert a == grid_cell_id(-37.3217, -59.1332, 500)
    assert a == grid_cell_id(-37.3219, -59.1335, 500)      # ~30 m away
    assert a != grid_cell_id(-37.4100, -59.2000, 500)      # ~10 km away


# --- queries ----------------------------------------------------------------------


def test_query_requires_known_device():
    svc = PlatformService()
    with pytest.raises(UnknownDeviceError):
        svc.query_series("ghost", "egg_count", T0, T0 + 1)


def test_reversed_range_rejected():
    svc = service_with_device()
    with pytest.raises(InvalidRangeError):
        svc.query_series("ovi-01", "egg_count", T0 + 10, T0)


def test_empty_range_is_empty():
    svc = service_with_device()
    svc.ingest(event(), T0 + 11.0)
    assert svc.query_series("ovi-01", "egg_count", T0 + 5000, T0 + 6000) == []


# --- registry ----------------------------------------------------------------------


def test_registration_idempotent_for_identical_record():
    svc = PlatformService()
    svc.register_device(record())
    svc.register_device(record())
    assert len(svc.devices) == 1


def test_registration_conflict_for_different_record():
    svc = PlatformService()
    svc.register_device(record())
    with pytest.raises(DuplicateDeviceError):
        svc.register_device(record(gps=(0.0, 0.0)))


def test_rpc_unknown_device():
    svc = PlatformService()
    with pytest.raises(UnknownDeviceError):
        svc.dispatch_rpc("ghost", "read_on_demand")
