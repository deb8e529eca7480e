import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibfuzz.tools.fixture_gen import disjoint_table, seven_state_table, single_state_table
from vibfuzz.tools.intervalgebra import (
    LabeledInterval,
    build_truth_table,
    compile_rules,
    diagnostics_report,
    find_relations,
    includes,
    intersects,
    reduce_iic,
)
from vibfuzz.tools.vibdata import Interval, MachineState


def _terms(pairs):
    return [LabeledInterval(f"I{i + 1}", Interval(lo, hi)) for i, (lo, hi) in enumerate(pairs)]


@st.composite
def interval_sets(draw, max_size=12):
    # small integer endpoints so duplicates and nestings show up often
    n = draw(st.integers(1, max_size))
    pairs = []
    for _ in range(n):
        a = draw(st.integers(0, 10))
        b = draw(st.integers(0, 10))
        pairs.append((float(min(a, b)), float(max(a, b))))
    return _terms(pairs)


def _oracle_survivors(terms):
    kept = []
    for i, a in enumerate(terms):
        removed = False
        for j, b in enumerate(terms):
            if i == j:
                continue
            inside = b.interval.lo <= a.interval.lo and a.interval.hi <= b.interval.hi
            same = a.interval == b.interval
            if inside and not (same and j > i):
                removed = True
        if not removed:
            kept.append(a.label)
    return kept


def test_includes_and_intersects():
    assert includes(Interval(2, 3), Interval(1, 4))
    assert includes(Interval(1, 4), Interval(1, 4))
    assert not includes(Interval(0, 3), Interval(1, 4))
    assert intersects(Interval(0, 2), Interval(2, 3))
    assert not intersects(Interval(0, 1), Interval(2, 3))


@given(interval_sets())
@settings(max_examples=1000)
def test_reduce_iic_matches_brute_force(terms):
    assert reduce_iic(terms).labels == _oracle_survivors(terms)


@given(interval_sets())
@settings(max_examples=300)
def test_reduce_iic_is_idempotent(terms):
    once = reduce_iic(terms)
    twice = reduce_iic(list(once.survivors))
    assert twice.survivors == once.survivors


@given(interval_sets())
@settings(max_examples=300)
def test_survivors_form_an_antichain(terms):
    survivors = reduce_iic(terms).survivors
    for i, a in enumerate(survivors):
        for j, b in enumerate(survivors):
            if i != j:
                assert not includes(a.interval, b.interval)


@given(interval_sets())
@settings(max_examples=300)
def test_every_removed_interval_maps_to_a_superset(terms):
    reduction = reduce_iic(terms)
    by_label = {t.label: t.interval for t in terms}
    survivors = set(reduction.labels)
    for term in terms:
        target = reduction.remap[term.label]
        assert target in survivors
        assert includes(term.interval, by_label[target])


@given(interval_sets())
@settings(max_examples=300)
def test_reduction_keeps_the_covered_set(terms):
    survivors = reduce_iic(terms).survivors
    for x in [k / 4 for k in range(-4, 45)]:
        assert any(x in t.interval for t in terms) == any(x in t.interval for t in survivors)


def test_duplicates_keep_the_first():
    reduction = reduce_iic(_terms([(1, 2), (1, 2), (0, 5), (0, 5)]))
    assert reduction.labels == ["I3"]
    assert reduction.remap == {"I1": "I3", "I2": "I3", "I3": "I3", "I4": "I3"}


def test_remap_prefers_the_narrowest_superset():
    reduction = reduce_iic(_terms([(3, 4), (0, 10), (2, 6), (9, 12)]))
    # I1 sits in both I2 and I3 but I3 itself is removed, so only I2 survives above it
    assert reduction.labels == ["I2", "I4"]
    assert reduction.remap["I1"] == "I2"
    reduction = reduce_iic(_terms([(3, 4), (0, 10), (2, 11)]))
    assert reduction.labels == ["I2", "I3"]
    assert reduction.remap["I1"] == "I3"
    reduction = reduce_iic(_terms([(3, 4), (0, 10), (2, 12)]))
    assert reduction.remap["I1"] == "I2"


def test_reduce_iic_rejects_empty_set():
    with pytest.raises(ValueError):
        reduce_iic([])


def test_canonical_reduction_signature():
    table = seven_state_table()
    v = reduce_iic([LabeledInterval(f"Iv{i + 1}", row.iv) for i, row in enumerate(table.rows)])
    g = reduce_iic([LabeledInterval(f"Ig{i + 1}", row.ig) for i, row in enumerate(table.rows)])
    assert v.labels == ["Iv1", "Iv2", "Iv4", "Iv5", "Iv7"]
    assert g.labels == ["Ig1", "Ig5"]
    assert v.remap["Iv3"] == "Iv4" and v.remap["Iv6"] == "Iv7"
    assert g.remap["Ig6"] == "Ig5"


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_truth_table_enumeration_matches_oracle(n):
    table = disjoint_table(n)
    truth = build_truth_table(table)
    assert truth.candidates == n ** 3
    expected = [(iv, ig, s) for iv in range(n) for ig in range(n) for s in range(n) if iv == ig == s]
    got = [(row.iv_index, row.ig_index, row.consequent_index) for row in truth.rows]
    assert got == expected
    assert all(sum(row.state_flags) == 1 for row in truth.rows)


def test_compile_canonical_rules():
    rulebase = compile_rules(seven_state_table())
    assert rulebase.summary() == "7 rules, 5 v-terms, 2 g-terms"
    got = [(r.antecedent_v, r.antecedent_g, r.consequent) for r in rulebase.rules]
    assert got == [
        ("Iv1", "Ig1", MachineState.NORMAL),
        ("Iv2", "Ig1", MachineState.IMBALANCE),
        ("Iv4", "Ig1", MachineState.STRUCTURAL),
        ("Iv4", "Ig1", MachineState.MISALIGNMENT),
        ("Iv5", "Ig5", MachineState.LOOSENESS),
        ("Iv7", "Ig5", MachineState.LUBRICATION),
        ("Iv7", "Ig5", MachineState.GEAR),
    ]
    assert all(rule.connective == "and" for rule in rulebase.rules)


@pytest.mark.parametrize("seed", range(5))
def test_jittered_tables_keep_the_reduction_signature(seed):
    assert compile_rules(seven_state_table(seed)).summary() == "7 rules, 5 v-terms, 2 g-terms"


def test_compile_single_state():
    rulebase = compile_rules(single_state_table())
    assert len(rulebase.rules) == 1
    assert rulebase.rules[0].consequent is MachineState.NORMAL


def test_relations_and_diagnostics():
    table = seven_state_table()
    relations = find_relations([LabeledInterval(f"Iv{i + 1}", row.iv) for i, row in enumerate(table.rows)])
    assert ("Iv3", "Iv4") in relations.inclusions
    assert ("Iv6", "Iv7") in relations.inclusions
    assert ("Iv1", "Iv2") in relations.intersections
    assert all(pair not in relations.intersections for pair in relations.inclusions)

    report = diagnostics_report(compile_rules(table))
    assert "fft_v: inclusions" in report
    assert "Iv3 ⊆ Iv4" in report

    disjoint = diagnostics_report(compile_rules(disjoint_table()))
    assert "fft_v: no inclusions detected" in disjoint
    assert "fft_g: no intersections detected" in disjoint
