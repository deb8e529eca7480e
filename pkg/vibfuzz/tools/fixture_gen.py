from __future__ import annotations

import datetime as dt
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from vibfuzz.tools.intervalgebra import FuzzyRule, LabeledInterval, RuleBase, g_label, v_label
from vibfuzz.tools.vibdata import (
    Interval,
    MachineState,
    SensorFrame,
    StateIntervals,
    StateIntervalTable,
    frame_to_record,
)

logger = logging.getLogger(__name__)

NORMAL_SHARE = 0.6374
POSITIONS = ("P1", "P2", "P3", "P4")
WINDOW_START = dt.datetime(2021, 1, 4, tzinfo=dt.timezone.utc)
WINDOW_STEP = dt.timedelta(hours=4)

# RMS envelopes per state (velocity spectrum, acceleration spectrum).
# v: St sits inside Mi and Bl inside Gf. g: the low-group faults share Normal's upper end and the
# high-group faults share Looseness's upper end, so they sit flush against it. Reduction leaves
# 5 v-terms and 2 g-terms.
SEVEN_STATE_ENVELOPES: Dict[MachineState, Tuple[Tuple[float, float], Tuple[float, float]]] = {
    MachineState.NORMAL: ((1.0, 3.0), (10.0, 30.0)),
    MachineState.IMBALANCE: ((2.5, 5.5), (23.0, 30.0)),
    MachineState.STRUCTURAL: ((6.0, 8.0), (24.0, 30.0)),
    MachineState.MISALIGNMENT: ((5.0, 9.0), (22.0, 30.0)),
    MachineState.LOOSENESS: ((10.0, 16.0), (50.0, 70.0)),
    MachineState.LUBRICATION: ((12.45, 17.45), (60.0, 70.0)),
    MachineState.GEAR: ((12.0, 20.0), (64.0, 70.0)),
}

ENDPOINT_JITTER = 0.005
SCALE_RANGE = (0.8, 1.25)


def seven_state_table(seed: Optional[int] = None) -> StateIntervalTable:
    """
    Seven-state interval table whose inclusions reduce 7 v-intervals to 5 and 7 g-intervals to 2.
    Without a seed the envelopes are returned verbatim; a seed rescales each axis and nudges every
    distinct endpoint by at most 0.5% of the narrowest interval ending there. Shared endpoints move
    together, so every inclusion and overlap survives.
    """
    envelopes = _jittered_envelopes(seed)
    rows = tuple(
        StateIntervals(state=state, iv=Interval(*iv), ig=Interval(*ig))
        for state, (iv, ig) in sorted(envelopes.items(), key=lambda item: item[0].severity)
    )
    return StateIntervalTable(rows=rows)


def disjoint_table(n_states: int = 7) -> StateIntervalTable:
    states = sorted(MachineState, key=lambda s: s.severity)[:n_states]
    rows = tuple(
        StateIntervals(
            state=state,
            iv=Interval(1.0 + 3.0 * i, 3.0 + 3.0 * i),
            ig=Interval(10.0 + 30.0 * i, 30.0 + 30.0 * i),
        )
        for i, state in enumerate(states)
    )
    return StateIntervalTable(rows=rows)


def single_state_table(state: MachineState = MachineState.NORMAL) -> StateIntervalTable:
    return StateIntervalTable(rows=(StateIntervals(state=state, iv=Interval(1.0, 3.0), ig=Interval(10.0, 30.0)),))


def class_counts(n_frames: int, states: Iterable[MachineState]) -> Dict[MachineState, int]:
    states = sorted(states, key=lambda s: s.severity)
    faults = [s for s in states if s is not MachineState.NORMAL]
    if n_frames < 2 * len(states):
        raise ValueError(f"need at least {2 * len(states)} frames to cover {len(states)} states")
    counts: Dict[MachineState, int] = {}
    if not faults:
        return {MachineState.NORMAL: n_frames}
    if MachineState.NORMAL in states:
        wanted = max(2, int(round(NORMAL_SHARE * n_frames)))
        counts[MachineState.NORMAL] = min(wanted, n_frames - 2 * len(faults))
    remaining = n_frames - sum(counts.values())
    for i, state in enumerate(faults):
        counts[state] = max(2, remaining // len(faults) + (1 if i < remaining % len(faults) else 0))
    return counts


def generate_frames(
    seed: int = 0,
    n_frames: int = 1000,
    table: Optional[StateIntervalTable] = None,
    spectrum_bins: int = 32,
    waveform_samples: int = 128,
) -> List[SensorFrame]:
    """
    Labeled frames whose spectra are rescaled to hit target RMS values. The first two frames of
    each state land on the interval ends, so extraction recovers the table. Those frames share one
    fixed spectral shape, so states with a common endpoint yield bit-identical RMS values there.
    """
    rng = np.random.default_rng(seed)
    table = table or seven_state_table(seed)
    counts = class_counts(n_frames, table.states)
    targets: List[Tuple[MachineState, float, float, bool]] = []
    for row in table.rows:
        n = counts[row.state]
        targets.append((row.state, row.iv.lo, row.ig.lo, True))
        targets.append((row.state, row.iv.hi, row.ig.hi, True))
        inner = rng.uniform(0.02, 0.98, size=(n - 2, 2))
        for fv, fg in inner:
            targets.append((row.state, row.iv.lo + fv * row.iv.width, row.ig.lo + fg * row.ig.width, False))

    order = rng.permutation(len(targets))
    frames: List[SensorFrame] = []
    for k, idx in enumerate(order):
        state, v_rms, g_rms, edge = targets[idx]
        frames.append(
            SensorFrame(
                position=POSITIONS[k % len(POSITIONS)],
                window_start=WINDOW_START + WINDOW_STEP * (k // len(POSITIONS)),
                g=_waveform(rng, waveform_samples, g_rms),
                fft_v=_spectrum(rng, spectrum_bins, v_rms, edge),
                fft_g=_spectrum(rng, spectrum_bins, g_rms, edge),
                state_label=state,
            )
        )
    logger.info("generated %d frames (seed=%d)", len(frames), seed)
    return frames


def write_ndjson(frames: Iterable[SensorFrame], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for frame in frames:
            handle.write(json.dumps(frame_to_record(frame), sort_keys=True) + "\n")
    return path


def write_csv(frames: Iterable[SensorFrame], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = []
    for frame in frames:
        record = frame_to_record(frame)
        for name in ("g", "fft_v", "fft_g"):
            record[name] = ";".join(repr(v) for v in record[name])
        records.append(record)
    pd.DataFrame.from_records(
        records, columns=["position", "window_start", "g", "fft_v", "fft_g", "state"]
    ).to_csv(path, index=False)
    return path


def synthetic_rulebase(n_rules: int, seed: int = 0) -> RuleBase:
    """
    Large rule base over disjoint terms for latency scaling checks. Every (v, g) pair is distinct.
    """
    if n_rules < 1:
        raise ValueError("n_rules must be >= 1")
    rng = np.random.default_rng(seed)
    states = sorted(MachineState, key=lambda s: s.severity)
    n_g = min(n_rules, len(states))
    n_v = -(-n_rules // n_g)
    v_widths = rng.uniform(0.5, 1.5, size=n_v)
    v_terms = tuple(
        LabeledInterval(v_label(i), Interval(2.0 * i, 2.0 * i + float(w))) for i, w in enumerate(v_widths)
    )
    g_terms = tuple(LabeledInterval(g_label(j), Interval(20.0 * j, 20.0 * j + 10.0)) for j in range(n_g))
    rules = tuple(
        FuzzyRule(
            antecedent_v=v_terms[i // n_g].label,
            antecedent_g=g_terms[i % n_g].label,
            consequent=states[i % len(states)],
        )
        for i in range(n_rules)
    )
    return RuleBase(rules=rules, v_terms=v_terms, g_terms=g_terms)


def _jittered_envelopes(seed: Optional[int]) -> Dict[MachineState, Tuple[Tuple[float, float], Tuple[float, float]]]:
    if seed is None:
        return dict(SEVEN_STATE_ENVELOPES)
    rng = np.random.default_rng(seed)
    scales = np.exp(rng.uniform(np.log(SCALE_RANGE[0]), np.log(SCALE_RANGE[1]), size=2))
    states = sorted(SEVEN_STATE_ENVELOPES, key=lambda s: s.severity)
    axes = []
    for axis, scale in enumerate(scales):
        bounds = [SEVEN_STATE_ENVELOPES[state][axis] for state in states]
        axes.append([(float(scale * lo), float(scale * hi)) for lo, hi in _nudge_endpoints(rng, bounds)])
    return {state: (axes[0][i], axes[1][i]) for i, state in enumerate(states)}


def _nudge_endpoints(rng: np.random.Generator, bounds: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    # an endpoint shared by several intervals moves once, so flush inclusions stay flush
    reach: Dict[float, float] = {}
    for lo, hi in bounds:
        for end in (lo, hi):
            reach[end] = min(reach.get(end, hi - lo), hi - lo)
    shift = {end: float(rng.uniform(-ENDPOINT_JITTER, ENDPOINT_JITTER)) * reach[end] for end in sorted(reach)}
    return [(lo + shift[lo], hi + shift[hi]) for lo, hi in bounds]


def _spectrum(rng: np.random.Generator, bins: int, target_rms: float, edge: bool = False) -> np.ndarray:
    if edge:
        shape = 1.0 / np.arange(1, bins + 1)
    else:
        shape = rng.gamma(2.0, 1.0, size=bins) + 1e-3
    return shape * (target_rms / np.sqrt(np.mean(np.square(shape))))


def _waveform(rng: np.random.Generator, samples: int, g_rms: float) -> np.ndarray:
    t = np.arange(samples) / samples
    wave = np.sin(2 * np.pi * 8 * t) + 0.3 * rng.standard_normal(samples)
    return wave * (0.01 * g_rms)
