"""Scenario loading, validation, small replays, report determinism, tables."""

import pytest

from ovinet.device import (
    DeviceConfig,
    LorawanSettings,
    Responsible,
    Site,
    WifiSettings,
)
from ovinet.errors import ScenarioValidationError
from ovinet.scenario import (
    DeviceScript,
    ExperimentReport,
    Scenario,
    ScriptEvent,
    load_scenario,
    poc28_scenario,
    run,
    run_validation,
)
from ovinet.simclock import parse_instant
from ovinet.tables import daily_ledger_table, validation_table
from ovinet.telemetry import LinkKind

START = "2026-03-01T00:00:00Z"


def small_scenario(days=1, eggs=None, link=LinkKind.WIFI_MQTT, tx_per_day=None,
                   events=(), miss=None, seed=5):
    cfg = DeviceConfig(
        device_id="ovi-s",
        site=Site("a", "p", "c"),
        responsible=Responsible("r", "r@x"),
        place_type="home",
        installer="i",
        gps=(-37.32, -59.13),
        link=link,
        wifi=WifiSettings("n", "s") if link is LinkKind.WIFI_MQTT else None,
        lorawan=None if link is LinkKind.WIFI_MQTT
        else LorawanSettings("00" * 16),
        tx_per_day=tx_per_day,
    )
    script = DeviceScript(config=cfg, eggs=eggs or [0] * days,
                          miss=miss or {}, events=list(events))
    return Scenario(name="small", start_ts=parse_instant(START),
                    duration_days=days, seed=seed, devices=[script])


def test_poc28_toml_matches_builder():
    loaded = load_scenario("scenarios/poc28.toml")
    built = poc28_scenario()
    assert loaded.duration_days == built.duration_days == 28
    assert loaded.seed == built.seed
    assert loaded.devices[0].eggs == built.devices[0].eggs
    assert loaded.devices[0].miss == built.devices[0].miss
    assert loaded.periods == built.periods
    assert loaded.devices[0].config.tx_per_day == 4


def test_one_day_zero_egg_scenario():
    report = run(small_scenario())
    assert report.accuracy_pct == 100.0
    assert report.readings_total == 4
    assert report.communications == 1          # default WiFi: one daily event
    assert report.max_lag_s < 1.0
    assert report.devices[0].rows[0].measurements == [0, 0, 0, 0]


def test_report_determinism_byte_identical():
    a = run(small_scenario(days=2, eggs=[3, 5], seed=9))
    b = run(small_scenario(days=2, eggs=[3, 5], seed=9))
    assert a.to_json() == b.to_json()


def test_seed_changes_report():
    a = run(small_scenario(days=1, eggs=[4], seed=1))
    b = run(small_scenario(days=1, eggs=[4], seed=2))
    assert a.measured_total == b.measured_total == 4
    assert a.to_json() != b.to_json()          # lag samples differ


def test_miss_override_undercounts():
    report = run(small_scenario(days=2, eggs=[5, 5], miss={2: 2}))
    rows = report.devices[0].rows
    assert rows[0].measured == 5
    assert rows[1].measured == 3
    assert report.accuracy_pct == pytest.approx(100.0 * 8 / 10)


def test_sensor_event_produces_alarm():
    events = [ScriptEvent(day=1, hour=3.0, kind="water_lost"),
              ScriptEvent(day=1, hour=9.0, kind="water_restored")]
    report = run(small_scenario(events=events, tx_per_day=4))
    assert any(a["rule_id"] == "water_absent" for a in report.alarms)


def test_script_must_cover_every_day():
    scn = small_scenario(days=3, eggs=[1, 2])
    with pytest.raises(ScenarioValidationError):
        scn.validate()


def test_unknown_event_kind_rejected():
    scn = small_scenario(events=[ScriptEvent(day=1, hour=1.0, kind="alien")])
    with pytest.raises(ScenarioValidationError):
        scn.validate()


def test_miss_day_out_of_range_rejected():
    scn = small_scenario(miss={9: 1})
    with pytest.raises(ScenarioValidationError):
        scn.validate()


def test_duplicate_device_ids_rejected():
    scn = small_scenario()
    scn.devices.append(scn.devices[0])
    with pytest.raises(ScenarioValidationError):
        scn.validate()


def test_fleet_demo_loads_and_validates():
    scn = load_scenario("scenarios/fleet-demo.toml")
    assert len(scn.devices) == 3
    assert {d.config.link for d in scn.devices} == \
        {LinkKind.WIFI_MQTT, LinkKind.LORAWAN}


# --- validation corpus ---------------------------------------------------------


def test_validation_corpus_counts_and_confidences():
    report = run_validation(seed=42)
    assert [r.existing for r in report.rows] == [3, 10, 2, 8, 10, 7, 9, 4, 5, 9]
    assert report.existing_total == 67
    assert report.all_match()
    assert report.read_total == 67
    assert report.min_confidence() >= 0.80
    egg_ids = [i for r in report.rows for i, _c in r.eggs]
    assert egg_ids[:3] == ["1.1", "1.2", "1.3"]


# --- tables ------------------------------------------------------------------------


def test_daily_ledger_table_shape():
    report = run(small_scenario(days=2, eggs=[2, 3], tx_per_day=4))
    text = daily_ledger_table(report)
    assert "M1" in text and "M4" in text
    assert "Period" in text and "Lab" in text
    assert "accuracy:       100.00 %" in text
    assert "communications: 8" in text


def test_validation_table_shape():
    report = run_validation(seed=42)
    text = validation_table(report)
    lines = text.splitlines()
    assert "Sample" in lines[0] and "Confidence" in lines[0]
    assert len([l for l in lines if " ok" in l]) == 67
    assert lines[-1].strip().startswith("Totals")
    assert "67" in lines[-1]


def test_empty_report_headers_only():
    report = ExperimentReport(
        scenario="empty", seed=0, start="2026-01-01T00:00:00Z",
        duration_days=0, devices=[], communications=0, readings_total=0,
        max_lag_s=0.0, alarms=[], accuracy_pct=100.0,
        ground_truth_total=0, measured_total=0)
    text = daily_ledger_table(report)
    assert "communications: 0" in text
