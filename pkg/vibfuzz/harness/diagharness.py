from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vibfuzz.harness.config import PipelineConfig
from vibfuzz.tools import fuzzcore
from vibfuzz.tools.fuzzcore import Families, OutputUniverse
from vibfuzz.tools.intervalgebra import RuleBase, compile_rules
from vibfuzz.tools.vibdata import MachineState, StateIntervalTable

logger = logging.getLogger(__name__)

FAMILY_ORDER = (fuzzcore.TRAPEZOIDAL, fuzzcore.TRIANGULAR, fuzzcore.GAUSSIAN)


class Grade(Enum):
    EXCELLENT = ("Excellent", "Exc", 4)
    GOOD = ("Good", "Good", 3)
    AVERAGE = ("Average", "Ave", 2)
    POOR = ("Poor", "Poor", 1)
    BAD = ("Bad", "Bad", 0)

    def __init__(self, title: str, short: str, rank: int) -> None:
        self.title = title
        self.short = short
        self.rank = rank


@dataclass(frozen=True)
class Probe:
    probe_id: str
    state: MachineState
    x_v: float
    x_g: float


@dataclass(frozen=True)
class Diagnosis:
    score: Optional[float]
    decomposition: Dict[MachineState, int]
    latency_us: float

    @property
    def fired(self) -> bool:
        return self.score is not None


@dataclass(frozen=True)
class DiagnosisReport:
    probe_id: str
    expected_state: MachineState
    x_v: float
    x_g: float
    score: Optional[float]
    decomposition: Dict[MachineState, int]
    grade: Grade
    latency_us: float


@dataclass
class AuditLogEntry:
    step: str
    detail: str
    timestamp: float = field(default_factory=time.time)


@dataclass
class ExperimentResult:
    kind: str
    reports: List[DiagnosisReport]
    summary: Dict[str, object]


@dataclass(frozen=True)
class BenchStats:
    median_us: float
    p99_us: float
    mean_us: float
    iterations: int
    rules: int


class Diagnoser:
    """
    A compiled rule base with its membership families and output universe, ready to classify readings.
    """

    def __init__(self, rulebase: RuleBase, families: Families, universe: OutputUniverse) -> None:
        self.rulebase = rulebase
        self.families = families
        self.universe = universe

    @classmethod
    def from_table(cls, table: StateIntervalTable, config: PipelineConfig, kind: Optional[str] = None) -> "Diagnoser":
        rulebase = compile_rules(table)
        return cls.from_rulebase(rulebase, config, kind)

    @classmethod
    def from_rulebase(cls, rulebase: RuleBase, config: PipelineConfig, kind: Optional[str] = None) -> "Diagnoser":
        families = fuzzcore.build_families(
            rulebase,
            kind or config.kind,
            sigma_divisor=config.sigma_divisor,
            shoulder_fraction=config.shoulder_fraction,
            gauss_floor=config.gauss_floor,
        )
        return cls(rulebase, families, fuzzcore.build_output_universe(config.grid_points))

    def diagnose(self, x_v: float, x_g: float) -> Diagnosis:
        start = time.perf_counter_ns()
        aggregated = fuzzcore.infer(x_v, x_g, self.rulebase, self.families, self.universe)
        score = fuzzcore.defuzzify(aggregated)
        decomposition = fuzzcore.decompose_score(score, self.universe)
        latency_us = (time.perf_counter_ns() - start) / 1000.0
        return Diagnosis(score=score, decomposition=decomposition, latency_us=latency_us)


def build_probes(table: StateIntervalTable, offset: float = 0.01) -> List[Probe]:
    """Two probes per state: just inside the lower ends and just inside the upper ends."""
    probes: List[Probe] = []
    for row in table.rows:
        dv = offset * row.iv.width
        dg = offset * row.ig.width
        probes.append(Probe(f"{row.state.code}-min", row.state, row.iv.lo + dv, row.ig.lo + dg))
        probes.append(Probe(f"{row.state.code}-max", row.state, row.iv.hi - dv, row.ig.hi - dg))
    return probes


def grade_accuracy(expected: MachineState, decomposition: Dict[MachineState, int]) -> Grade:
    if not decomposition:
        return Grade.BAD
    share = decomposition.get(expected, 0)
    if share >= 90:
        return Grade.EXCELLENT
    if share >= 50:
        return Grade.GOOD
    if share >= 10:
        return Grade.AVERAGE
    return Grade.POOR


def summarize(reports: Sequence[DiagnosisReport]) -> Dict[str, object]:
    total = len(reports)
    counts = {grade.title: 0 for grade in Grade}
    for report in reports:
        counts[report.grade.title] += 1

    def rate(*grades: Grade) -> float:
        return sum(counts[g.title] for g in grades) / total if total else 0.0

    return {
        "probes": total,
        "grades": counts,
        "undefined": sum(1 for r in reports if r.score is None),
        "excellent_rate": rate(Grade.EXCELLENT),
        "detection_rate": rate(Grade.EXCELLENT, Grade.GOOD),
        "usable_rate": rate(Grade.EXCELLENT, Grade.GOOD, Grade.AVERAGE),
    }


def run_experiment(
    table: StateIntervalTable,
    kind: str,
    config: Optional[PipelineConfig] = None,
    diagnoser: Optional[Diagnoser] = None,
) -> ExperimentResult:
    config = config or PipelineConfig()
    diagnoser = diagnoser or Diagnoser.from_table(table, config, kind)
    reports: List[DiagnosisReport] = []
    for probe in build_probes(table, config.probe_offset):
        result = diagnoser.diagnose(probe.x_v, probe.x_g)
        reports.append(
            DiagnosisReport(
                probe_id=probe.probe_id,
                expected_state=probe.state,
                x_v=probe.x_v,
                x_g=probe.x_g,
                score=result.score,
                decomposition=result.decomposition,
                grade=grade_accuracy(probe.state, result.decomposition),
                latency_us=result.latency_us,
            )
        )
    summary = summarize(reports)
    logger.info("%s experiment: detection %.1f%%", kind, 100.0 * summary["detection_rate"])
    return ExperimentResult(kind=kind, reports=reports, summary=summary)


def rank_key(result: ExperimentResult) -> Tuple:
    summary = result.summary
    return (
        -summary["detection_rate"],
        -summary["usable_rate"],
        -summary["grades"][Grade.EXCELLENT.title],
        FAMILY_ORDER.index(result.kind),
    )


def compare_families(
    table: StateIntervalTable,
    config: Optional[PipelineConfig] = None,
    kinds: Optional[Sequence[str]] = None,
) -> List[ExperimentResult]:
    config = config or PipelineConfig()
    rulebase = compile_rules(table)
    results = [
        run_experiment(table, kind, config, Diagnoser.from_rulebase(rulebase, config, kind))
        for kind in (kinds or FAMILY_ORDER)
    ]
    return sorted(results, key=rank_key)


def bench_diagnose(diagnoser: Diagnoser, n_iterations: int = 10_000, warmup: int = 100) -> BenchStats:
    """
    Wall time of one infer + defuzzify + decompose cycle, single-threaded, after a warmup.
    """
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    points = _bench_points(diagnoser.rulebase)
    for i in range(warmup):
        x_v, x_g = points[i % len(points)]
        diagnoser.diagnose(x_v, x_g)

    timings = np.empty(n_iterations)
    for i in range(n_iterations):
        x_v, x_g = points[i % len(points)]
        start = time.perf_counter_ns()
        aggregated = fuzzcore.infer(x_v, x_g, diagnoser.rulebase, diagnoser.families, diagnoser.universe)
        score = fuzzcore.defuzzify(aggregated)
        fuzzcore.decompose_score(score, diagnoser.universe)
        timings[i] = (time.perf_counter_ns() - start) / 1000.0
    return BenchStats(
        median_us=float(np.median(timings)),
        p99_us=float(np.percentile(timings, 99)),
        mean_us=float(np.mean(timings)),
        iterations=n_iterations,
        rules=len(diagnoser.rulebase.rules),
    )


def _bench_points(rulebase: RuleBase) -> List[Tuple[float, float]]:
    points = []
    for rule in rulebase.rules:
        points.append((rulebase.v_term(rule.antecedent_v).interval.mid, rulebase.g_term(rule.antecedent_g).interval.mid))
    return points


class DiagnosticHarness:
    """
    Extract → compile → experiment → bench driver that keeps an audit trail of every step.
    """

    def __init__(self, config: Optional[PipelineConfig] = None) -> None:
        self.config = config or PipelineConfig()
        self.logs: List[AuditLogEntry] = []

    def compile(self, table: StateIntervalTable) -> RuleBase:
        rulebase = compile_rules(table)
        self._log("compile", rulebase.summary())
        return rulebase

    def experiment(self, table: StateIntervalTable, kinds: Optional[Sequence[str]] = None) -> List[ExperimentResult]:
        results = compare_families(table, self.config, kinds)
        for result in results:
            self._log(
                "experiment",
                f"{result.kind}: detection {100.0 * result.summary['detection_rate']:.2f}%, "
                f"undefined {result.summary['undefined']}",
            )
        return results

    def bench(self, diagnoser: Diagnoser) -> BenchStats:
        stats = bench_diagnose(diagnoser, self.config.bench_iterations, self.config.bench_warmup)
        self._log("bench", f"median {stats.median_us:.1f}us p99 {stats.p99_us:.1f}us over {stats.iterations}")
        return stats

    def _log(self, step: str, detail: str) -> None:
        logger.info("%s: %s", step, detail)
        self.logs.append(AuditLogEntry(step=step, detail=detail))
