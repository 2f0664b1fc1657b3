"""REST surface and the server-push stream."""

import json
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from ovinet.rest import build_app
from ovinet.service import PlatformService

from test_service import T0, event, record


@pytest.fixture
def client():
    svc = PlatformService()
    app = build_app(svc)
    return TestClient(app), svc


REG_DOC = {
    "device_id": "ovi-01",
    "site": {"address": "a", "province": "p", "country": "c"},
    "responsible": {"name": "n", "contact": "c"},
    "place_type": "home",
    "installer": "i",
    "species": "Aedes aegypti",
    "gps": {"lat": -37.3217, "lon": -59.1332},
    "link": "wifi_mqtt",
    "fw_version": "1.0.0",
}


def test_register_and_fetch_device(client):
    c, _svc = client
    r = c.post("/devices", json=REG_DOC)
    assert r.status_code == 201
    assert c.get("/devices/ovi-01").json()["device_id"] == "ovi-01"
    assert [d["device_id"] for d in c.get("/devices").json()] == ["ovi-01"]


def test_duplicate_registration_conflict(client):
    c, _svc = client
    c.post("/devices", json=REG_DOC)
    assert c.post("/devices", json=REG_DOC).status_code == 201   # idempotent
    other = dict(REG_DOC, place_type="field")
    r = c.post("/devices", json=other)
    assert r.status_code == 409
    assert r.json()["error"] == "conflict"


def test_bad_registration_document(client):
    c, _svc = client
    r = c.post("/devices", json={"device_id": "x"})
    assert r.status_code == 422


def test_unknown_device_404(client):
    c, _svc = client
    r = c.get("/devices/ghost")
    assert r.status_code == 404
    assert r.json()["error"] == "not_found"


def test_series_query_and_range_errors(client):
    c, svc = client
    c.post("/devices", json=REG_DOC)
    svc.ingest(event(egg_count=5), T0 + 10.3)
    r = c.get("/devices/ovi-01/series", params={
        "key": "egg_count",
        "from": "2026-01-01T00:00:00Z",
        "to": "2026-01-02T00:00:00Z",
    })
    assert r.status_code == 200
    points = r.json()["points"]
    assert len(points) == 1 and points[0]["value"] == 5
    r = c.get("/devices/ovi-01/series", params={
        "key": "egg_count",
        "from": "2026-01-03T00:00:00Z",
        "to": "2026-01-01T00:00:00Z",
    })
    assert r.status_code == 400


def test_alarms_endpoint(client):
    c, svc = client
    c.post("/devices", json=REG_DOC)
    svc.ingest(event(temperature_c=44.0), T0 + 10.5)
    alarms = c.get("/alarms").json()
    assert [a["rule_id"] for a in alarms] == ["temp_high"]
    none = c.get("/alarms", params={"from": "2027-01-01T00:00:00Z"}).json()
    assert none == []


def test_riskmap_endpoint(client):
    c, svc = client
    c.post("/devices", json=REG_DOC)
    svc.ingest(event(egg_count=4), T0 + 10.2)
    doc = c.get("/riskmap", params={"at": "2026-01-02T00:00:00Z"}).json()
    assert len(doc["cells"]) == 1
    cell = doc["cells"][0]
    assert cell["trap_count"] == 1
    assert cell["eggs_per_trap"] == 4
    assert cell["traps"][0]["device_id"] == "ovi-01"


def test_rpc_endpoints_without_transport(client):
    c, svc = client
    c.post("/devices", json=REG_DOC)
    r = c.post("/devices/ovi-01/rpc", json={"kind": "read_on_demand"})
    assert r.status_code == 202
    rid = r.json()["request_id"]
    st = c.get(f"/rpc/{rid}").json()
    assert st["status"] == "pending"
    assert st["device_id"] == "ovi-01"
    assert c.get("/rpc/nope").status_code == 404
    assert c.post("/devices/ghost/rpc", json={"kind": "read_on_demand"}).status_code == 404


def test_export_ndjson(client):
    c, svc = client
    c.post("/devices", json=REG_DOC)
    svc.ingest(event(egg_count=2), T0 + 10.2)
    lines = [json.loads(l) for l in c.get("/export").text.splitlines()]
    kinds = {l["record"] for l in lines}
    assert kinds == {"device", "point"}
    assert any(l["record"] == "point" and l["key"] == "egg_count" for l in lines)


def test_stream_pushes_ingest_and_alarm(client):
    c, svc = client
    c.post("/devices", json=REG_DOC)
    with c.stream("GET", "/stream", params={"limit": 2}) as resp:
        body = "".join(resp.iter_text())
    assert ": connected" in body

    # events arriving while the stream is open
    import threading

    def later():
        svc.ingest(event(ts=T0 + 7200.0, temperature_c=44.5, egg_count=2),
                   T0 + 7200.4)

    timer = threading.Timer(0.2, later)
    timer.start()
    got_events = []
    with c.stream("GET", "/stream", params={"limit": 6}) as resp:
        for line in resp.iter_lines():
            if line.startswith("event: "):
                got_events.append(line.split("event: ")[1].strip())
    timer.join()
    assert "ingest" in got_events


def test_health(client):
    c, _svc = client
    doc = c.get("/health").json()
    assert doc["status"] == "ok"
