"""ovinet command line: provision, test-read, status, run, validate, bench, serve.

Exit codes: 0 ok, 2 validation failure, 3 unreachable device/platform,
4 timeout.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .bench import format_benchmark, run_benchmark
from .errors import (
    DeviceFaultError,
    DuplicateDeviceError,
    OvinetError,
    ProvisioningValidationError,
    RpcTimeoutError,
    ScenarioValidationError,
    UnreachableDeviceError,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNREACHABLE = 3
EXIT_TIMEOUT = 4


def _platform_client(args, bench):
    """Remote httpx client when --platform is given, else an embedded app."""
    import httpx

    if getattr(args, "platform", None):
        return httpx.Client(base_url=args.platform, timeout=10.0)

    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .rest import _record_from_doc, build_app
    from .service import PlatformService

    service = PlatformService()
    for doc in bench.load_registry().values():
        service.register_device(_record_from_doc(doc))
    return TestClient(build_app(service))


def cmd_provision(args) -> int:
    from .provision import Bench, form_from_toml, provision, validate_form

    bench = Bench(args.bench)
    try:
        form = form_from_toml(args.file)
    except (OSError, ValueError) as exc:
        print(f"cannot read form: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.device and form.config.device_id != args.device:
        print(f"form is for {form.config.device_id!r}, not {args.device!r}",
              file=sys.stderr)
        return EXIT_VALIDATION
    bad = validate_form(form)
    if bad:
        print(f"invalid form fields: {', '.join(bad)}", file=sys.stderr)
        return EXIT_VALIDATION
    client = _platform_client(args, bench)
    try:
        outcome = provision(form, bench, client)
    except ProvisioningValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except DuplicateDeviceError as exc:
        print(f"registry conflict: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConnectionError:
        print("platform unreachable", file=sys.stderr)
        return EXIT_UNREACHABLE
    verb = "re-provisioned" if outcome.reprovisioned else "provisioned"
    print(f"{outcome.device_id} {verb}; registered with platform")
    return EXIT_OK


def cmd_test_read(args) -> int:
    from .provision import Bench, test_reading

    bench = Bench(args.bench)
    try:
        outcome = test_reading(args.device, bench, archive_dir=args.snapshots)
    except UnreachableDeviceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNREACHABLE
    except DeviceFaultError as exc:
        print(f"device fault: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"eggs read:   {outcome.egg_count}")
    print(f"timestamp:   {outcome.timestamp}")
    print(f"assay id:    {outcome.assay_id}")
    print(f"transmitted: {'yes' if outcome.transmitted else 'NO'}")
    for w in outcome.warnings:
        print(f"warning:     {w}")
    return EXIT_OK


def cmd_status(args) -> int:
    from .provision import Bench, device_status

    bench = Bench(args.bench)
    try:
        status = device_status(args.device, bench)
    except UnreachableDeviceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNREACHABLE
    print(json.dumps(status, indent=1))
    return EXIT_OK


def cmd_run(args) -> int:
    from .scenario import load_scenario, poc28_scenario, run
    from .tables import daily_ledger_table

    try:
        scn = load_scenario(args.scenario) if args.scenario else poc28_scenario()
        if args.seed is not None:
            scn.seed = args.seed
        t0 = time.perf_counter()
        report = run(scn, snapshots_dir=args.snapshots, artifacts_dir=args.out)
        wall = time.perf_counter() - t0
    except ScenarioValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    table = daily_ledger_table(report)
    print(table)
    print(f"wall time:      {wall:.2f} s")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json() + "\n")
        (out / "tables.txt").write_text(table + "\n")
        print(f"report written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .scenario import run_validation
    from .tables import validation_table

    report = run_validation(seed=args.seed)
    table = validation_table(report)
    print(table)
    ok = report.all_match() and report.min_confidence() >= 0.80
    print(f"all samples match: {'yes' if report.all_match() else 'NO'}; "
          f"min confidence: {report.min_confidence():.2f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "validation.txt").write_text(table + "\n")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_bench(args) -> int:
    print(format_benchmark(run_benchmark(repeats=args.repeats)))
    return EXIT_OK


def cmd_serve(args) -> int:
    import threading

    import uvicorn

    from .rest import build_app
    from .scenario import build_world, load_scenario, poc28_scenario

    scn = load_scenario(args.scenario) if args.scenario else poc28_scenario()
    world, _devices = build_world(scn)
    if args.replay_days:
        days = min(args.replay_days, scn.duration_days)
        world.run_until(scn.start_ts + days * 86400.0 - 1e-3)
        print(f"replayed {days} day(s); sim time now {world.now_iso()}")
    app = build_app(world.service, world)

    if args.dashboard:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.dashboard, html=True),
                  name="dashboard")

    stop = threading.Event()

    def pace():
        real0 = time.monotonic()
        sim0 = world.scheduler.now
        while not stop.is_set():
            time.sleep(0.05)
            target = sim0 + (time.monotonic() - real0) * args.speed
            with world.lock:
                world.scheduler.run_until(target)

    pacer = threading.Thread(target=pace, daemon=True)
    pacer.start()
    print(f"simulated world paced at {args.speed}x; REST on port {args.port}")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        stop.set()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovinet",
        description="Digital twin of an ovitrap egg-counting IoT network.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("provision", help="push a provisioning form to a bench device")
    p.add_argument("--file", required=True, help="form TOML")
    p.add_argument("--device", help="expected device id (cross-check)")
    p.add_argument("--bench", default="bench", help="bench directory")
    p.add_argument("--platform", help="platform base URL (default: embedded)")
    p.set_defaults(fn=cmd_provision)

    p = sub.add_parser("test-read", help="on-demand calibration reading")
    p.add_argument("--device", required=True)
    p.add_argument("--bench", default="bench")
    p.add_argument("--snapshots", help="archive snapshots to this directory")
    p.set_defaults(fn=cmd_test_read)

    p = sub.add_parser("status", help="bench device status")
    p.add_argument("--device", required=True)
    p.add_argument("--bench", default="bench")
    p.set_defaults(fn=cmd_status)

    p = sub.add_parser("run", help="replay a fleet scenario on the virtual clock")
    p.add_argument("--scenario", help="scenario TOML (default: built-in 28-day PoC)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write report.json/tables.txt here")
    p.add_argument("--snapshots", help="archive reading snapshots here")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("validate", help="run the 10-sample detection corpus")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("bench", help="compare blob-kernel backends")
    p.add_argument("--repeats", type=int, default=40)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="serve the REST API over a live paced world")
    p.add_argument("--scenario")
    p.add_argument("--replay-days", type=int, default=0)
    p.add_argument("--speed", type=float, default=60.0,
                   help="virtual seconds per wall second")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--dashboard", help="static dashboard dist/ to mount at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RpcTimeoutError as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except OvinetError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
