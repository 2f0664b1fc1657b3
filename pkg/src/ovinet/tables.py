"""Text result tables mirroring the daily-ledger and validation layouts."""

from __future__ import annotations

from .scenario import ExperimentReport, ValidationReport

CHECK = "ok"
CROSS = "MISS"


def daily_ledger_table(report: ExperimentReport) -> str:
    """Per-day ground truth vs the four automatic measurements (M1..M4)."""
    out = []
    for dev in report.devices:
        n_m = max((len(r.measurements) for r in dev.rows), default=4)
        m_heads = " ".join(f"{('M' + str(i + 1)):>4}" for i in range(n_m))
        out.append(f"Device {dev.device_id} ({dev.link})")
        out.append(f"{'Sample':>6} {'Day':>4} {'Period':>6} {'Lab':>4} {m_heads} {'Result':>7}")
        for r in dev.rows:
            ms = " ".join(f"{m:>4}" for m in r.measurements).ljust(5 * n_m - 1)
            flag = CHECK if r.ok() else CROSS
            out.append(f"{r.day:>6} {r.day:>4} {r.period:>6} {r.ground_truth:>4} "
                       f"{ms} {flag:>7}")
        out.append(f"{'Totals':>6} {'':>4} {'':>6} {dev.ground_truth_total:>4} "
                   f"{str(dev.measured_total):>{5 * n_m - 1}} "
                   f"{_accuracy_str(dev.measured_total, dev.ground_truth_total):>7}")
        out.append("")
    out.append(f"communications: {report.communications}")
    out.append(f"readings:       {report.readings_total}")
    out.append(f"max lag:        {report.max_lag_s:.3f} s")
    out.append(f"alarms:         {len(report.alarms)}")
    out.append(f"eggs existing:  {report.ground_truth_total}")
    out.append(f"eggs measured:  {report.measured_total}")
    out.append(f"accuracy:       {report.accuracy_pct:.2f} %")
    return "\n".join(out)


def _accuracy_str(measured: int, existing: int) -> str:
    if existing == 0:
        return "100.00%" if measured == 0 else "n/a"
    return f"{100.0 * measured / existing:.2f}%"


def validation_table(report: ValidationReport) -> str:
    """Per-sample egg reads with one confidence row per egg."""
    out = [f"{'Sample':>6} {'Existing':>8} {'Read':>5} {'Egg ID':>8} {'Confidence':>11}"]
    for row in report.rows:
        if not row.eggs:
            out.append(f"{row.sample_id:>6} {row.existing:>8} {row.read:>5} "
                       f"{'-':>8} {'-':>11}")
            continue
        for i, (egg_id, conf) in enumerate(row.eggs):
            sample = row.sample_id if i == 0 else ""
            existing = str(row.existing) if i == 0 else ""
            read = str(row.read) if i == 0 else ""
            mark = CHECK if conf >= 0.80 else CROSS
            out.append(f"{sample:>6} {existing:>8} {read:>5} {egg_id:>8} "
                       f"{conf:>8.2f} {mark}")
    out.append(f"{'Totals':>6} {report.existing_total:>8} {report.read_total:>5}")
    return "\n".join(out)
