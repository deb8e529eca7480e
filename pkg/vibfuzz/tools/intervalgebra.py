from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from vibfuzz.tools.vibdata import Interval, MachineState, StateIntervalTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledInterval:
    label: str
    interval: Interval


@dataclass(frozen=True)
class Reduction:
    survivors: Tuple[LabeledInterval, ...]
    remap: Dict[str, str]

    @property
    def labels(self) -> List[str]:
        return [term.label for term in self.survivors]


@dataclass(frozen=True)
class TruthTableRow:
    iv_index: int
    ig_index: int
    state_flags: Tuple[bool, ...]

    @property
    def consequent_index(self) -> int:
        return self.state_flags.index(True)


@dataclass(frozen=True)
class TruthTable:
    states: Tuple[MachineState, ...]
    rows: Tuple[TruthTableRow, ...]
    candidates: int


@dataclass(frozen=True)
class FuzzyRule:
    antecedent_v: str
    antecedent_g: str
    consequent: MachineState
    connective: str = "and"


@dataclass(frozen=True)
class IntervalRelations:
    inclusions: Tuple[Tuple[str, str], ...]
    intersections: Tuple[Tuple[str, str], ...]


@dataclass(frozen=True)
class RuleBase:
    rules: Tuple[FuzzyRule, ...]
    v_terms: Tuple[LabeledInterval, ...]
    g_terms: Tuple[LabeledInterval, ...]
    v_relations: IntervalRelations = field(default_factory=lambda: IntervalRelations((), ()))
    g_relations: IntervalRelations = field(default_factory=lambda: IntervalRelations((), ()))

    @property
    def states(self) -> List[MachineState]:
        return [rule.consequent for rule in self.rules]

    def v_term(self, label: str) -> LabeledInterval:
        return _find(self.v_terms, label)

    def g_term(self, label: str) -> LabeledInterval:
        return _find(self.g_terms, label)

    def summary(self) -> str:
        return f"{len(self.rules)} rules, {len(self.v_terms)} v-terms, {len(self.g_terms)} g-terms"


def includes(a: Interval, b: Interval) -> bool:
    """True when a lies inside b (a ⊆ b)."""
    return a.lo >= b.lo and a.hi <= b.hi


def intersects(a: Interval, b: Interval) -> bool:
    return max(a.lo, b.lo) <= min(a.hi, b.hi)


def reduce_iic(terms: Sequence[LabeledInterval]) -> Reduction:
    """
    Drop every interval contained in another one of the set. The removal set is computed against
    the original set, so iteration order cannot change the result. Of exact duplicates the first
    one is kept. Removed labels are remapped to their narrowest surviving superset (earliest on ties).
    """
    if not terms:
        raise ValueError("reduce_iic needs at least one interval")
    lo = np.array([term.interval.lo for term in terms])
    hi = np.array([term.interval.hi for term in terms])
    n = len(terms)

    # contained[i, j]: interval i lies inside interval j
    contained = (lo[:, None] >= lo[None, :]) & (hi[:, None] <= hi[None, :])
    np.fill_diagonal(contained, False)
    duplicate = (lo[:, None] == lo[None, :]) & (hi[:, None] == hi[None, :])
    later = np.arange(n)[None, :] > np.arange(n)[:, None]
    # a duplicate that comes later does not remove the earlier one
    removes = contained & ~(duplicate & later)
    removed = removes.any(axis=1)

    survivors = tuple(term for term, gone in zip(terms, removed) if not gone)
    remap: Dict[str, str] = {term.label: term.label for term in survivors}
    widths = hi - lo
    for i in np.flatnonzero(removed):
        candidates = [j for j in range(n) if not removed[j] and contained[i, j]]
        best = min(candidates, key=lambda j: (widths[j], j))
        remap[terms[i].label] = terms[best].label
    logger.debug("reduce_iic kept %d of %d intervals", len(survivors), n)
    return Reduction(survivors=survivors, remap=remap)


def find_relations(terms: Sequence[LabeledInterval]) -> IntervalRelations:
    inclusions: List[Tuple[str, str]] = []
    overlaps: List[Tuple[str, str]] = []
    for i, a in enumerate(terms):
        for j, b in enumerate(terms):
            if i == j:
                continue
            if includes(a.interval, b.interval):
                inclusions.append((a.label, b.label))
            elif i < j and intersects(a.interval, b.interval) and not includes(b.interval, a.interval):
                overlaps.append((a.label, b.label))
    return IntervalRelations(inclusions=tuple(inclusions), intersections=tuple(overlaps))


def build_truth_table(table: StateIntervalTable) -> TruthTable:
    """
    Enumerate every (I_v, I_g, state) candidate under logical conjunction and keep the rows whose
    antecedents are exactly the intervals extracted for that state.
    """
    states = tuple(table.states)
    if not states:
        raise ValueError("build_truth_table needs at least one state")
    n = len(states)
    rows: List[TruthTableRow] = []
    seen = set()
    for iv_index in range(n):
        for ig_index in range(n):
            flags = tuple(iv_index == s and ig_index == s for s in range(n))
            if sum(flags) != 1:
                continue
            key = (iv_index, ig_index, flags.index(True))
            if key in seen:
                continue
            seen.add(key)
            rows.append(TruthTableRow(iv_index=iv_index, ig_index=ig_index, state_flags=flags))
    return TruthTable(states=states, rows=tuple(rows), candidates=n * n * n)


def v_label(index: int) -> str:
    return f"Iv{index + 1}"


def g_label(index: int) -> str:
    return f"Ig{index + 1}"


def compile_rules(table: StateIntervalTable) -> RuleBase:
    truth = build_truth_table(table)
    v_set = [LabeledInterval(v_label(i), row.iv) for i, row in enumerate(table.rows)]
    g_set = [LabeledInterval(g_label(i), row.ig) for i, row in enumerate(table.rows)]
    v_reduced = reduce_iic(v_set)
    g_reduced = reduce_iic(g_set)

    rules: List[FuzzyRule] = []
    for row in sorted(truth.rows, key=lambda r: truth.states[r.consequent_index].severity):
        rules.append(
            FuzzyRule(
                antecedent_v=v_reduced.remap[v_label(row.iv_index)],
                antecedent_g=g_reduced.remap[g_label(row.ig_index)],
                consequent=truth.states[row.consequent_index],
            )
        )

    rulebase = RuleBase(
        rules=tuple(rules),
        v_terms=v_reduced.survivors,
        g_terms=g_reduced.survivors,
        v_relations=find_relations(v_set),
        g_relations=find_relations(g_set),
    )
    logger.info("compiled %s", rulebase.summary())
    return rulebase


def diagnostics_report(rulebase: RuleBase) -> str:
    lines: List[str] = []
    for axis, relations in (("fft_v", rulebase.v_relations), ("fft_g", rulebase.g_relations)):
        if relations.inclusions:
            pairs = ", ".join(f"{a} ⊆ {b}" for a, b in relations.inclusions)
            lines.append(f"{axis}: inclusions {pairs}")
        else:
            lines.append(f"{axis}: no inclusions detected")
        if relations.intersections:
            pairs = ", ".join(f"{a} ∩ {b}" for a, b in relations.intersections)
            lines.append(f"{axis}: intersections {pairs} (not merged)")
        else:
            lines.append(f"{axis}: no intersections detected")
    return "\n".join(lines)


def _find(terms: Sequence[LabeledInterval], label: str) -> LabeledInterval:
    for term in terms:
        if term.label == label:
            return term
    raise KeyError(label)
