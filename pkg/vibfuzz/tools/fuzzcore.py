from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import skfuzzy as fuzz

from vibfuzz.tools.intervalgebra import LabeledInterval, RuleBase
from vibfuzz.tools.vibdata import Interval, MachineState

logger = logging.getLogger(__name__)

TRIANGULAR = "triangular"
TRAPEZOIDAL = "trapezoidal"
GAUSSIAN = "gaussian"
FAMILY_KINDS = (TRIANGULAR, TRAPEZOIDAL, GAUSSIAN)

OUTPUT_DOMAIN = (-1.0, 7.0)


@dataclass(frozen=True)
class MembershipTerm:
    label: str
    params: Tuple[float, ...]


@dataclass(frozen=True)
class MembershipFamilySpec:
    """
    One membership function per linguistic term. Degrees below `floor` do not activate rules.
    """

    kind: str
    terms: Tuple[MembershipTerm, ...]
    floor: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"Unknown membership family '{self.kind}'")
        for term in self.terms:
            _check_params(self.kind, term)

    @property
    def labels(self) -> List[str]:
        return [term.label for term in self.terms]

    def term(self, label: str) -> MembershipTerm:
        for term in self.terms:
            if term.label == label:
                return term
        raise KeyError(label)

    def degrees(self, x: float) -> np.ndarray:
        """Membership of x in every term, in term order, with the activation floor applied."""
        point = np.array([float(x)])
        values = np.array([_evaluate(self.kind, term.params, point)[0] for term in self.terms])
        if self.floor > 0:
            values[values < self.floor] = 0.0
        return values

    def curve(self, label: str, x: np.ndarray) -> np.ndarray:
        return _evaluate(self.kind, self.term(label).params, np.asarray(x, dtype=float))

    def support(self) -> Tuple[float, float]:
        """Smallest range outside of which every term is (numerically) zero."""
        if self.kind == GAUSSIAN:
            ends = [(mean - 4.0 * sigma, mean + 4.0 * sigma) for mean, sigma in (t.params for t in self.terms)]
        else:
            ends = [(t.params[0], t.params[-1]) for t in self.terms]
        return min(lo for lo, _ in ends), max(hi for _, hi in ends)


@dataclass(frozen=True)
class Families:
    v: MembershipFamilySpec
    g: MembershipFamilySpec

    @property
    def kind(self) -> str:
        return self.v.kind


@dataclass(frozen=True)
class OutputUniverse:
    levels: Tuple[MachineState, ...]
    grid: np.ndarray
    terms: np.ndarray

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])


@dataclass(frozen=True)
class FuzzySet:
    grid: np.ndarray
    degrees: np.ndarray

    def __post_init__(self) -> None:
        if self.grid.shape != self.degrees.shape:
            raise ValueError("grid and degrees must have the same length")

    @property
    def is_empty(self) -> bool:
        return not bool(np.any(self.degrees > 0))


def build_output_universe(grid_points: int = 1201) -> OutputUniverse:
    grid = np.linspace(OUTPUT_DOMAIN[0], OUTPUT_DOMAIN[1], grid_points)
    levels = tuple(sorted(MachineState, key=lambda s: s.severity))
    terms = np.vstack(
        [fuzz.trimf(grid, [s.severity - 1.0, float(s.severity), s.severity + 1.0]) for s in levels]
    )
    return OutputUniverse(levels=levels, grid=grid, terms=terms)


def build_family(
    terms: Sequence[LabeledInterval],
    kind: str,
    sigma_divisor: float = 6.0,
    shoulder_fraction: float = 0.25,
    floor: float = 0.0,
) -> MembershipFamilySpec:
    if not terms:
        raise ValueError("build_family needs at least one term")
    if kind not in FAMILY_KINDS:
        raise ValueError(f"Unknown membership family '{kind}'")
    built: List[MembershipTerm] = []
    for term in terms:
        interval = term.interval
        if not isinstance(interval, Interval):
            raise ValueError(f"term {term.label} does not carry an Interval")
        built.append(MembershipTerm(term.label, _params_for(interval, kind, sigma_divisor, shoulder_fraction)))
    return MembershipFamilySpec(kind=kind, terms=tuple(built), floor=floor)


def build_families(
    rulebase: RuleBase,
    kind: str,
    sigma_divisor: float = 6.0,
    shoulder_fraction: float = 0.25,
    gauss_floor: float = 0.0125,
) -> Families:
    floor = gauss_floor if kind == GAUSSIAN else 0.0
    return Families(
        v=build_family(rulebase.v_terms, kind, sigma_divisor, shoulder_fraction, floor),
        g=build_family(rulebase.g_terms, kind, sigma_divisor, shoulder_fraction, floor),
    )


def membership(spec: MembershipFamilySpec, label: str, x: float) -> float:
    term = spec.term(label)
    return float(_evaluate(spec.kind, term.params, np.array([float(x)]))[0])


def firing_strengths(x_v: float, x_g: float, rulebase: RuleBase, families: Families) -> np.ndarray:
    mu_v = dict(zip(families.v.labels, families.v.degrees(x_v)))
    mu_g = dict(zip(families.g.labels, families.g.degrees(x_g)))
    return np.array([min(mu_v[rule.antecedent_v], mu_g[rule.antecedent_g]) for rule in rulebase.rules])


def infer(
    x_v: float,
    x_g: float,
    rulebase: RuleBase,
    families: Families,
    universe: OutputUniverse,
) -> FuzzySet:
    """
    Mamdani min-min-max: rule strength is min of the two antecedent degrees, each consequent term is
    clipped at its strength, clipped sets are aggregated by pointwise max.
    """
    strengths = firing_strengths(x_v, x_g, rulebase, families)
    return aggregate(strengths, [rule.consequent for rule in rulebase.rules], universe)


def aggregate(strengths: Sequence[float], consequents: Sequence[MachineState], universe: OutputUniverse) -> FuzzySet:
    # max over rules sharing a consequent commutes with clipping that consequent's term
    per_level = np.zeros(len(universe.levels))
    for strength, state in zip(strengths, consequents):
        idx = state.severity
        if strength > per_level[idx]:
            per_level[idx] = strength
    clipped = np.minimum(universe.terms, per_level[:, None])
    return FuzzySet(grid=universe.grid, degrees=clipped.max(axis=0))


def defuzzify(fuzzy_set: FuzzySet) -> Optional[float]:
    """Centroid of the sampled set; None when nothing fired."""
    total = float(np.sum(fuzzy_set.degrees))
    if total == 0.0:
        return None
    return float(np.sum(fuzzy_set.grid * fuzzy_set.degrees) / total)


def decompose_score(score: Optional[float], universe: OutputUniverse) -> Dict[MachineState, int]:
    if score is None or not math.isfinite(score):
        return {}
    point = np.array([score])
    degrees = np.array(
        [fuzz.trimf(point, [s.severity - 1.0, float(s.severity), s.severity + 1.0])[0] for s in universe.levels]
    )
    total = float(degrees.sum())
    if total == 0.0:
        return {}
    shares = {state: round(100.0 * deg / total) for state, deg in zip(universe.levels, degrees) if deg > 0}
    return {state: pct for state, pct in shares.items() if pct >= 1}


def render_decomposition(decomposition: Dict[MachineState, int]) -> str:
    if not decomposition:
        return "NaN"
    ordered = sorted(decomposition.items(), key=lambda item: (-item[1], item[0].severity))
    return " & ".join(f"{state.code} {pct}%" for state, pct in ordered)


def top_state(decomposition: Dict[MachineState, int]) -> Optional[MachineState]:
    if not decomposition:
        return None
    return min(decomposition.items(), key=lambda item: (-item[1], item[0].severity))[0]


def _params_for(interval: Interval, kind: str, sigma_divisor: float, shoulder_fraction: float) -> Tuple[float, ...]:
    lo, hi = interval.lo, interval.hi
    width = hi - lo
    if width == 0.0:
        eps = 1e-9 * max(1.0, abs(lo))
        if kind == TRIANGULAR:
            return (lo - eps, lo, lo + eps)
        if kind == TRAPEZOIDAL:
            return (lo - eps, lo, lo, lo + eps)
        return (lo, eps / 3.0)
    if kind == TRIANGULAR:
        return (lo, (lo + hi) / 2.0, hi)
    if kind == TRAPEZOIDAL:
        return (lo, lo + shoulder_fraction * width, hi - shoulder_fraction * width, hi)
    return ((lo + hi) / 2.0, width / sigma_divisor)


def _evaluate(kind: str, params: Tuple[float, ...], x: np.ndarray) -> np.ndarray:
    if kind == TRIANGULAR:
        return fuzz.trimf(x, list(params))
    if kind == TRAPEZOIDAL:
        return fuzz.trapmf(x, list(params))
    mean, sigma = params
    return fuzz.gaussmf(x, mean, sigma)


def _check_params(kind: str, term: MembershipTerm) -> None:
    params = term.params
    if kind == TRIANGULAR:
        ok = len(params) == 3 and params[0] <= params[1] <= params[2]
    elif kind == TRAPEZOIDAL:
        ok = len(params) == 4 and params[0] <= params[1] <= params[2] <= params[3]
    else:
        ok = len(params) == 2 and params[1] > 0
    if not ok or not all(math.isfinite(p) for p in params):
        raise ValueError(f"invalid {kind} parameters for {term.label}: {params}")
