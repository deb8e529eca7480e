"""
Versioned JSON persistence for interval tables, rule bases and reports.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from vibfuzz.tools.fuzzcore import Families, MembershipFamilySpec, MembershipTerm
from vibfuzz.tools.intervalgebra import FuzzyRule, LabeledInterval, RuleBase, find_relations
from vibfuzz.tools.vibdata import Interval, MachineState, StateIntervals, StateIntervalTable

logger = logging.getLogger(__name__)

TABLE_SCHEMA = "vibfuzz-intervals/1"
RULEBASE_SCHEMA = "vibfuzz-rulebase/1"
EXPERIMENT_SCHEMA = "vibfuzz-experiment/1"
BENCH_SCHEMA = "vibfuzz-bench/1"


class SchemaError(ValueError):
    pass


def fmt(value: float) -> float:
    """Six significant digits for reported numbers. Interval endpoints are stored at full precision."""
    return float(f"{value:.6g}")


def dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------- #
# Interval tables
# --------------------------------------------------------------------- #
def table_to_dict(table: StateIntervalTable) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "schema": TABLE_SCHEMA,
        "states": [
            {"state": row.state.code, "iv": row.iv.as_list(), "ig": row.ig.as_list()}
            for row in table.rows
        ],
    }
    if table.position is not None:
        payload["position"] = table.position
    return payload


def table_from_dict(payload: Dict[str, Any]) -> StateIntervalTable:
    _check_schema(payload, TABLE_SCHEMA)
    try:
        rows = [
            StateIntervals(
                state=MachineState.from_code(item["state"]),
                iv=Interval(float(item["iv"][0]), float(item["iv"][1])),
                ig=Interval(float(item["ig"][0]), float(item["ig"][1])),
            )
            for item in payload["states"]
        ]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed interval table: {exc}") from exc
    if not rows:
        raise SchemaError("interval table has no states")
    if len({row.state for row in rows}) != len(rows):
        raise SchemaError("interval table lists a state twice")
    rows.sort(key=lambda row: row.state.severity)
    return StateIntervalTable(rows=tuple(rows), position=payload.get("position"))


# --------------------------------------------------------------------- #
# Rule bases (+ membership families)
# --------------------------------------------------------------------- #
def rulebase_to_dict(rulebase: RuleBase, families: Optional[Families] = None) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "schema": RULEBASE_SCHEMA,
        "v_terms": [_term_to_dict(term) for term in rulebase.v_terms],
        "g_terms": [_term_to_dict(term) for term in rulebase.g_terms],
        "rules": [{"iv": r.antecedent_v, "ig": r.antecedent_g, "then": r.consequent.code} for r in rulebase.rules],
    }
    if families is not None:
        payload["families"] = {
            "kind": families.kind,
            "floor": fmt(families.v.floor),
            "terms": [
                {"id": term.label, "params": [float(p) for p in term.params]}
                for term in families.v.terms + families.g.terms
            ],
        }
    return payload


def rulebase_from_dict(payload: Dict[str, Any]) -> Tuple[RuleBase, Optional[Families]]:
    _check_schema(payload, RULEBASE_SCHEMA)
    try:
        v_terms = tuple(_term_from_dict(item) for item in payload["v_terms"])
        g_terms = tuple(_term_from_dict(item) for item in payload["g_terms"])
        rules = tuple(
            FuzzyRule(antecedent_v=item["iv"], antecedent_g=item["ig"], consequent=MachineState.from_code(item["then"]))
            for item in payload["rules"]
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed rule base: {exc}") from exc

    v_ids = {term.label for term in v_terms}
    g_ids = {term.label for term in g_terms}
    for rule in rules:
        if rule.antecedent_v not in v_ids or rule.antecedent_g not in g_ids:
            raise SchemaError(f"rule for {rule.consequent.code} references an unknown term")
    rulebase = RuleBase(
        rules=rules,
        v_terms=v_terms,
        g_terms=g_terms,
        v_relations=find_relations(v_terms),
        g_relations=find_relations(g_terms),
    )

    families = None
    if "families" in payload:
        try:
            spec = payload["families"]
            params = {item["id"]: tuple(float(p) for p in item["params"]) for item in spec["terms"]}
            floor = float(spec.get("floor", 0.0))
            families = Families(
                v=MembershipFamilySpec(
                    kind=spec["kind"], terms=tuple(MembershipTerm(t.label, params[t.label]) for t in v_terms), floor=floor
                ),
                g=MembershipFamilySpec(
                    kind=spec["kind"], terms=tuple(MembershipTerm(t.label, params[t.label]) for t in g_terms), floor=floor
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed membership families: {exc}") from exc
    return rulebase, families


class ArtifactStorage:
    """
    File-backed storage for pipeline artifacts. Every write goes through `dumps`, so identical
    inputs produce identical bytes.
    """

    def __init__(self, root: Optional[Path] = None) -> None:
        self.root = Path(root) if root else None

    def _resolve(self, path: Path) -> Path:
        path = Path(path).expanduser()
        if self.root and not path.is_absolute():
            path = self.root / path
        return path

    def save(self, path: Path, payload: Dict[str, Any]) -> Path:
        target = self._resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(dumps(payload), encoding="utf-8")
        logger.info("wrote %s", target)
        return target

    def load(self, path: Path) -> Dict[str, Any]:
        source = self._resolve(path)
        if not source.exists():
            raise FileNotFoundError(source)
        try:
            payload = json.loads(source.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{source} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise SchemaError(f"{source} does not hold a JSON object")
        return payload

    def save_table(self, path: Path, table: StateIntervalTable) -> Path:
        return self.save(path, table_to_dict(table))

    def load_table(self, path: Path) -> StateIntervalTable:
        return table_from_dict(self.load(path))

    def save_rulebase(self, path: Path, rulebase: RuleBase, families: Optional[Families] = None) -> Path:
        return self.save(path, rulebase_to_dict(rulebase, families))

    def load_rulebase(self, path: Path) -> Tuple[RuleBase, Optional[Families]]:
        return rulebase_from_dict(self.load(path))

    def save_text(self, path: Path, text: str) -> Path:
        target = self._resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        logger.info("wrote %s", target)
        return target


def _term_to_dict(term: LabeledInterval) -> Dict[str, Any]:
    return {"id": term.label, "lo": term.interval.lo, "hi": term.interval.hi}


def _term_from_dict(item: Dict[str, Any]) -> LabeledInterval:
    return LabeledInterval(str(item["id"]), Interval(float(item["lo"]), float(item["hi"])))


def _check_schema(payload: Dict[str, Any], expected: str) -> None:
    found = payload.get("schema")
    if found != expected:
        raise SchemaError(f"expected schema '{expected}', found '{found}'")
