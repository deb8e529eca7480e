import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibfuzz.harness.config import PipelineConfig
from vibfuzz.harness.diagharness import (
    FAMILY_ORDER,
    Diagnoser,
    DiagnosticHarness,
    Grade,
    bench_diagnose,
    build_probes,
    compare_families,
    grade_accuracy,
    run_experiment,
)
from vibfuzz.tools.fixture_gen import (
    disjoint_table,
    generate_frames,
    seven_state_table,
    single_state_table,
    synthetic_rulebase,
)
from vibfuzz.tools.fuzzcore import render_decomposition, top_state
from vibfuzz.tools.vibdata import MachineState, rms

Nr, Im, St, Mi = MachineState.NORMAL, MachineState.IMBALANCE, MachineState.STRUCTURAL, MachineState.MISALIGNMENT
Bl = MachineState.LUBRICATION


def _by_probe(result):
    return {report.probe_id: report for report in result.reports}


def _detected(result):
    return result.summary["grades"]["Excellent"] + result.summary["grades"]["Good"]


def test_probes_sit_just_inside_each_interval(canonical_table):
    probes = build_probes(canonical_table, offset=0.01)
    assert len(probes) == 14
    assert [p.probe_id for p in probes[:4]] == ["Nr-min", "Nr-max", "Im-min", "Im-max"]
    fifth = probes[4]
    assert fifth.probe_id == "St-min" and fifth.state is St
    assert fifth.x_v == pytest.approx(6.02)
    assert fifth.x_g == pytest.approx(24.06)
    for probe in probes:
        row = canonical_table.row(probe.state)
        assert row.iv.lo < probe.x_v < row.iv.hi
        assert row.ig.lo < probe.x_g < row.ig.hi


@pytest.mark.parametrize(
    "decomposition, grade",
    [
        ({Nr: 100}, Grade.EXCELLENT),
        ({Nr: 90, Im: 10}, Grade.EXCELLENT),
        ({Nr: 50, Im: 50}, Grade.GOOD),
        ({Nr: 40, Im: 60}, Grade.AVERAGE),
        ({Nr: 10, Im: 90}, Grade.AVERAGE),
        ({Nr: 9, Im: 91}, Grade.POOR),
        ({Im: 100}, Grade.POOR),
        ({}, Grade.BAD),
    ],
)
def test_grade_thresholds(decomposition, grade):
    assert grade_accuracy(Nr, decomposition) is grade


def _split(share):
    return {state: pct for state, pct in ((Nr, share), (Im, 100 - share)) if pct > 0}


@given(st.integers(0, 100), st.integers(0, 100))
def test_grade_never_drops_as_the_expected_share_grows(a, b):
    low, high = sorted((a, b))
    assert grade_accuracy(Nr, _split(low)).rank <= grade_accuracy(Nr, _split(high)).rank


def test_diagnoser_splits_structural_and_misalignment(canonical_table, config):
    diagnoser = Diagnoser.from_table(canonical_table, config, "triangular")
    result = diagnoser.diagnose(6.02, 24.06)
    assert result.fired
    assert result.score == pytest.approx(2.5, abs=1e-6)
    assert render_decomposition(result.decomposition) == "St 50% & Mi 50%"
    assert result.latency_us > 0


def test_far_reading_is_not_an_error(canonical_table, config):
    result = Diagnoser.from_table(canonical_table, config).diagnose(500.0, 5000.0)
    assert not result.fired
    assert result.decomposition == {}


def test_triangular_protocol_on_canonical_fixture(canonical_table, config):
    result = run_experiment(canonical_table, "triangular", config)
    reports = _by_probe(result)
    assert reports["Nr-min"].grade is Grade.EXCELLENT
    assert reports["St-min"].grade is Grade.GOOD
    assert render_decomposition(reports["St-max"].decomposition) == "St 50% & Mi 50%"
    assert reports["Nr-max"].score == pytest.approx(0.5, abs=1e-6)
    assert render_decomposition(reports["Im-max"].decomposition) == "St 100%"
    assert reports["Im-max"].grade is Grade.POOR
    assert reports["Bl-min"].grade is Grade.AVERAGE
    assert 6 <= _detected(result) <= 8
    assert result.summary["detection_rate"] == pytest.approx(_detected(result) / 14)
    assert result.summary["undefined"] == 0


def test_trapezoidal_beats_triangular_on_lubrication(canonical_table, config):
    tri = _by_probe(run_experiment(canonical_table, "triangular", config))
    trap = _by_probe(run_experiment(canonical_table, "trapezoidal", config))
    assert trap["Bl-min"].decomposition[Bl] > tri["Bl-min"].decomposition[Bl]
    assert trap["Bl-min"].grade is Grade.GOOD


def test_every_probe_fires_under_trapezoids(canonical_table, config):
    result = run_experiment(canonical_table, "trapezoidal", config)
    assert all(report.score is not None for report in result.reports)


def test_gaussian_system_leaves_readings_undiagnosed(canonical_table, config):
    result = run_experiment(canonical_table, "gaussian", config)
    reports = _by_probe(result)
    # probes of included states at the shared upper g end fall under the activation floor
    for probe_id in ("Im-max", "St-max", "Mi-max", "Bl-max", "Gf-max"):
        assert reports[probe_id].score is None
        assert reports[probe_id].grade is Grade.BAD
    assert reports["Nr-min"].grade is Grade.EXCELLENT
    assert result.summary["undefined"] >= 4
    usable = sum(result.summary["grades"][g] for g in ("Excellent", "Good", "Average"))
    assert 3 <= usable <= 5


def test_gaussian_detects_less_than_triangular(canonical_table, config):
    tri = run_experiment(canonical_table, "triangular", config)
    gauss = run_experiment(canonical_table, "gaussian", config)
    assert _detected(gauss) < _detected(tri)


def test_gaussian_without_floor_always_fires(canonical_table):
    result = run_experiment(canonical_table, "gaussian", PipelineConfig(gauss_floor=0.0))
    assert result.summary["undefined"] == 0


def test_compare_families_ranks_trapezoidal_first(canonical_table, config):
    results = compare_families(canonical_table, config)
    assert [r.kind for r in results] == ["trapezoidal", "triangular", "gaussian"]
    by_kind = {r.kind: r.summary["detection_rate"] for r in results}
    assert by_kind["trapezoidal"] > by_kind["triangular"] > by_kind["gaussian"]


def test_family_ordering_holds_across_seeds(config):
    holds = 0
    for seed in range(10):
        results = {r.kind: r.summary["detection_rate"] for r in compare_families(seven_state_table(seed), config)}
        if results["trapezoidal"] >= results["triangular"] > results["gaussian"]:
            holds += 1
    assert holds >= 9


@pytest.mark.parametrize("kind", FAMILY_ORDER)
def test_single_state_fixture_is_all_excellent(kind, config):
    result = run_experiment(single_state_table(), kind, config)
    assert result.summary["grades"]["Excellent"] == 2
    assert result.summary["excellent_rate"] == 1.0


def test_single_state_comparison_rows_are_identical(config):
    results = compare_families(single_state_table(), config)
    assert [r.kind for r in results] == list(FAMILY_ORDER)
    assert all(r.summary == results[0].summary for r in results)
    assert results[0].summary["grades"]["Excellent"] == 2


@pytest.mark.parametrize("kind", FAMILY_ORDER)
def test_disjoint_fixture_is_all_excellent(kind, config):
    result = run_experiment(disjoint_table(), kind, config)
    assert all(report.grade is Grade.EXCELLENT for report in result.reports)
    assert result.summary["detection_rate"] == 1.0


def test_disjoint_fixture_matches_or_beats_canonical_triangular(canonical_table, config):
    baseline = run_experiment(canonical_table, "triangular", config).summary["detection_rate"]
    for result in compare_families(disjoint_table(), config):
        assert result.summary["detection_rate"] >= baseline


def test_harness_keeps_an_audit_trail(canonical_table, config):
    harness = DiagnosticHarness(config)
    rulebase = harness.compile(canonical_table)
    harness.experiment(canonical_table)
    steps = [entry.step for entry in harness.logs]
    assert steps[0] == "compile"
    assert steps.count("experiment") == 3
    assert harness.logs[0].detail == rulebase.summary()


def test_harness_can_run_a_single_family(canonical_table, config):
    harness = DiagnosticHarness(config)
    results = harness.experiment(canonical_table, kinds=["gaussian"])
    assert [r.kind for r in results] == ["gaussian"]
    assert [entry.step for entry in harness.logs] == ["experiment"]
    assert harness.logs[0].detail.startswith("gaussian:")


def test_bench_rejects_zero_iterations(canonical_table, config):
    with pytest.raises(ValueError):
        bench_diagnose(Diagnoser.from_table(canonical_table, config), n_iterations=0)


@pytest.mark.bench
def test_single_diagnosis_stays_under_five_ms(canonical_table, config):
    stats = bench_diagnose(Diagnoser.from_table(canonical_table, config), n_iterations=10_000, warmup=100)
    assert stats.rules == 7
    assert stats.iterations == 10_000
    assert stats.median_us < 5000.0
    assert stats.median_us <= stats.p99_us


@pytest.mark.bench
def test_latency_grows_with_rule_count(canonical_table, config):
    seven = bench_diagnose(Diagnoser.from_table(canonical_table, config), n_iterations=2000, warmup=100)
    one = bench_diagnose(Diagnoser.from_rulebase(synthetic_rulebase(1), config), n_iterations=2000, warmup=100)
    large = bench_diagnose(Diagnoser.from_rulebase(synthetic_rulebase(700, seed=1), config), n_iterations=1000, warmup=10)
    assert one.rules == 1 and large.rules == 700
    # 25% slack for timer noise between two separate runs
    assert one.median_us <= 1.25 * seven.median_us
    assert large.median_us <= 100 * seven.median_us


def test_training_points_diagnose_as_their_label(config):
    table = disjoint_table()
    diagnoser = Diagnoser.from_table(table, config, "trapezoidal")
    checked = 0
    for frame in generate_frames(seed=11, n_frames=140, table=table):
        x_v, x_g = rms(frame.fft_v), rms(frame.fft_g)
        row = table.row(frame.state_label)
        if not (row.iv.lo < x_v < row.iv.hi and row.ig.lo < x_g < row.ig.hi):
            continue
        assert top_state(diagnoser.diagnose(x_v, x_g).decomposition) is frame.state_label
        checked += 1
    assert checked > 100


@pytest.mark.parametrize("kind", FAMILY_ORDER)
def test_readings_on_interval_ends_fire_no_rule(kind, config):
    table = disjoint_table()
    diagnoser = Diagnoser.from_table(table, config, kind)
    for row in table.rows:
        assert not diagnoser.diagnose(row.iv.lo, row.ig.lo).fired
        assert not diagnoser.diagnose(row.iv.hi, row.ig.hi).fired
