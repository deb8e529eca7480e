from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from vibfuzz.storage.artifacts import BENCH_SCHEMA, EXPERIMENT_SCHEMA, fmt
from vibfuzz.tools.fuzzcore import render_decomposition

if TYPE_CHECKING:
    from vibfuzz.harness.diagharness import AuditLogEntry, BenchStats, DiagnosisReport, ExperimentResult

REPORT_COLUMNS = ["#", "Probe", "x_v", "x_g", "ExpS", "Score", "State", "Accuracy"]


@dataclass
class FamilySummary:
    headline: str
    grade_counts: Dict[str, int]
    weak_probes: List[str]


def report_rows(reports: Iterable["DiagnosisReport"]) -> List[Dict[str, str]]:
    rows = []
    for index, report in enumerate(reports, start=1):
        rows.append(
            {
                "#": str(index),
                "Probe": report.probe_id,
                "x_v": f"{report.x_v:.4g}",
                "x_g": f"{report.x_g:.4g}",
                "ExpS": report.expected_state.code,
                "Score": "NaN" if report.score is None else f"{report.score:.2f}",
                "State": render_decomposition(report.decomposition),
                "Accuracy": report.grade.title,
            }
        )
    return rows


def markdown_table(rows: Sequence[Dict[str, str]], columns: Sequence[str]) -> str:
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(str(row[col]) for col in columns) + " |")
    return "\n".join(lines)


def build_markdown(result: "ExperimentResult") -> str:
    summary = _build_summary(result)
    rates = result.summary
    lines = [
        f"## {result.kind.capitalize()} membership functions",
        "",
        summary.headline,
        "",
        markdown_table(report_rows(result.reports), REPORT_COLUMNS),
        "",
        f"- detection rate (Excellent + Good): {_pct(rates['detection_rate'])}",
        f"- usable rate (Excellent + Good + Average): {_pct(rates['usable_rate'])}",
        f"- excellent rate: {_pct(rates['excellent_rate'])}",
        f"- undefined scores: {rates['undefined']}",
    ]
    if summary.weak_probes:
        lines.append(f"- weak probes: {', '.join(summary.weak_probes)}")
    return "\n".join(lines) + "\n"


def comparison_frame(results: Sequence["ExperimentResult"]) -> pd.DataFrame:
    """One row per family, in ranking order."""
    records = []
    for rank, result in enumerate(results, start=1):
        summary = result.summary
        record = {"Rank": rank, "Family": result.kind}
        record.update(summary["grades"])
        record.update(
            {
                "Undefined": summary["undefined"],
                "Detection": _pct(summary["detection_rate"]),
                "Usable": _pct(summary["usable_rate"]),
            }
        )
        records.append(record)
    return pd.DataFrame.from_records(records)


def build_comparison_markdown(results: Sequence["ExperimentResult"]) -> str:
    frame = comparison_frame(results)
    table = markdown_table(frame.astype(str).to_dict(orient="records"), list(frame.columns))
    sections = ["# Membership family comparison", "", table, ""]
    for result in results:
        sections.append(build_markdown(result))
    return "\n".join(sections)


def build_experiment_payload(
    results: Sequence["ExperimentResult"],
    audit: Optional[Iterable["AuditLogEntry"]] = None,
) -> Dict:
    # latency and timestamps stay out so repeated runs serialize identically
    payload = {
        "schema": EXPERIMENT_SCHEMA,
        "ranking": [result.kind for result in results],
        "families": [
            {
                "kind": result.kind,
                "summary": {
                    "probes": result.summary["probes"],
                    "grades": result.summary["grades"],
                    "undefined": result.summary["undefined"],
                    "excellent_rate": fmt(result.summary["excellent_rate"]),
                    "detection_rate": fmt(result.summary["detection_rate"]),
                    "usable_rate": fmt(result.summary["usable_rate"]),
                },
                "reports": [_report_to_dict(report) for report in result.reports],
            }
            for result in results
        ],
    }
    if audit is not None:
        payload["audit"] = [{"step": entry.step, "detail": entry.detail} for entry in audit]
    return payload


def build_bench_payload(stats: "BenchStats", kind: str) -> Dict:
    return {
        "schema": BENCH_SCHEMA,
        "kind": kind,
        "median_us": fmt(stats.median_us),
        "p99_us": fmt(stats.p99_us),
        "mean_us": fmt(stats.mean_us),
        "iterations": stats.iterations,
        "rules": stats.rules,
    }


def build_bench_markdown(stats: "BenchStats", kind: str) -> str:
    row = {
        "Family": kind,
        "Rules": str(stats.rules),
        "Iterations": str(stats.iterations),
        "Median (us)": f"{stats.median_us:.1f}",
        "p99 (us)": f"{stats.p99_us:.1f}",
        "Mean (us)": f"{stats.mean_us:.1f}",
    }
    return "\n".join(["# Diagnosis latency", "", markdown_table([row], list(row)), ""])


def _report_to_dict(report: "DiagnosisReport") -> Dict:
    return {
        "probe": report.probe_id,
        "expected": report.expected_state.code,
        "x_v": fmt(report.x_v),
        "x_g": fmt(report.x_g),
        "score": None if report.score is None else fmt(report.score),
        "decomposition": {state.code: pct for state, pct in sorted(report.decomposition.items(), key=lambda i: i[0].severity)},
        "grade": report.grade.title,
    }


def _build_summary(result: "ExperimentResult") -> FamilySummary:
    counts = result.summary["grades"]
    weak = [
        f"{report.probe_id} → {report.grade.title}"
        for report in result.reports
        if report.grade.title in {"Poor", "Bad"}
    ]
    headline = (
        f"{counts['Excellent'] + counts['Good']} of {result.summary['probes']} probes detected "
        f"({counts['Excellent']} excellent, {counts['Good']} good)."
    )
    return FamilySummary(headline=headline, grade_counts=dict(counts), weak_probes=weak)


def _pct(rate: float) -> str:
    return f"{100.0 * rate:.2f}%"
