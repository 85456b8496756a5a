# inference/inference_simulate.py
# Simulasi genotipe + tinggi puncak dari model (opsional bersyarat evidence O/D).

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from core.engine_settings import EngineSettings
from inference.inference_case import CaseData, Hypothesis, TraceData
from inference.inference_model import (
    KIND_OBSERVED,
    KIND_PRESENCE,
    LikelihoodModel,
    MarkerModel,
    ParamsByTrace,
)
from mixture.mixture_network import n_node
from peaks.peak_cpts import lambda_grid
from peaks.peak_model import sample_height, sample_height_above

CONDITION_NONE = "none"
CONDITION_HEIGHTS = "heights"
CONDITION_PRESENCE = "presence"
CONDITIONS = (CONDITION_NONE, CONDITION_HEIGHTS, CONDITION_PRESENCE)

# (kind, alel) atau (kind, alel, trace) -> nilai.
# O: tinggi (0 = tak teramati, >= C = teramati di tinggi itu). D: 0 / 1.
# alel = indeks ladder atau label.
EvidenceEvent = Mapping[tuple, float]
Condition = Union[str, EvidenceEvent]


@dataclass
class SimulatedTrace:
    marker: str
    # unknown -> jumlah alel per ladder
    genotypes: Dict[str, np.ndarray] = field(default_factory=dict)
    # trace -> tinggi per alel (0 = di bawah threshold)
    heights: Dict[str, np.ndarray] = field(default_factory=dict)


def _allele(model: MarkerModel, allele) -> int:
    if isinstance(allele, (int, np.integer)):
        a = int(allele)
        if not 0 <= a < model.ladder.size:
            raise ValueError(f"[{model.marker}] indeks alel {a} di luar ladder")
        return a
    return model.ladder.index(str(allele))


def event_entries(model: MarkerModel, params: ParamsByTrace, condition: Condition) -> Dict[Tuple[str, str, int], float]:
    """Normalisasi kondisi jadi {(kind, trace, alel): nilai}; string = shortcut atas data model."""
    if isinstance(condition, str):
        if condition == CONDITION_NONE:
            return {}
        if condition == CONDITION_HEIGHTS:
            return {(KIND_OBSERVED, t, a): float(z) for t in model.traces for a, z in enumerate(model.heights[t])}
        if condition == CONDITION_PRESENCE:
            return {(KIND_PRESENCE, t, a): float(z > 0) for t in model.traces for a, z in enumerate(model.heights[t])}
        raise ValueError(f"kondisi simulasi tidak dikenal: {condition!r}")

    out = {}
    for key, value in condition.items():
        if len(key) not in (2, 3):
            raise ValueError(f"[{model.marker}] kunci evidence harus (kind, alel[, trace]): {key!r}")
        kind, allele = key[0], key[1]
        traces = (key[2],) if len(key) == 3 else model.traces
        a = _allele(model, allele)
        for t in traces:
            if t not in model.traces:
                raise ValueError(f"[{model.marker}] trace {t!r} tidak ada di model")
            value = float(value)
            if kind == KIND_OBSERVED:
                C = params[t].threshold
                if value < 0 or 0 < value < C:
                    raise ValueError(f"[{model.marker}] tinggi evidence {value:g} di (0, C={C:g})")
            elif kind == KIND_PRESENCE:
                if value not in (0.0, 1.0):
                    raise ValueError(f"[{model.marker}] evidence D harus 0 atau 1, bukan {value:g}")
            else:
                raise ValueError(f"[{model.marker}] kind evidence tidak dikenal: {kind!r}")
            out[(kind, t, a)] = value
    return out


def condition_kinds(condition: Condition) -> Tuple[str, ...]:
    if isinstance(condition, str):
        return (KIND_PRESENCE,) if condition == CONDITION_PRESENCE else (KIND_OBSERVED,)
    kinds = sorted({key[0] for key in condition})
    return tuple(kinds) or (KIND_OBSERVED,)


def simulate_trace(
    model: MarkerModel,
    params: ParamsByTrace,
    condition: Condition = CONDITION_NONE,
    rng=None,
) -> SimulatedTrace:
    """
    Tarik genotipe dari p(n | B), lalu tinggi dari f(z | n, B):
    alel yang disebut B mengikuti evidence-nya, sisanya gamma bertreshold.
    Massa nol untuk B -> ImpossibleEvidenceError.
    """
    rng = np.random.default_rng(rng)
    A = model.ladder.size
    entries = event_entries(model, params, condition)

    override = {}
    for (kind, t, a), value in entries.items():
        if kind == KIND_OBSERVED:
            override.setdefault(t, np.array(model.heights[t], dtype=float))[a] = value

    charge, bundles = model.charge(params, heights=override)
    charge.propagate()
    if entries:
        for (kind, t, a), value in entries.items():
            node = model.aux_node(kind, t, a)
            if kind == KIND_OBSERVED:
                vec, log_k = bundles[t][a].o_evidence()
                charge.enter_evidence(node, vec, log_scale=log_k)
            else:
                charge.enter_evidence(node, np.array([1.0 - value, value]))
        charge.propagate()

    config = charge.sample_configuration(rng)
    genotypes = {
        tag: np.array([config[n_node(tag, a)] for a in range(A)], dtype=int)
        for tag in model.mnet.unknowns
    }

    heights = {}
    for t in model.traces:
        p = params[t]
        z = np.zeros(A)
        for a in range(A):
            if (KIND_OBSERVED, t, a) in entries:
                z[a] = entries[(KIND_OBSERVED, t, a)]
                continue
            lam = lambda_grid(model.mnet, a, p)
            idx = tuple(config[v] for v in model.mnet.attachment(a))
            present = entries.get((KIND_PRESENCE, t, a))
            if present is None:
                z[a] = sample_height(float(lam[idx]), p.eta, p.threshold, rng)
            elif present:
                z[a] = sample_height_above(float(lam[idx]), p.eta, p.threshold, rng)
        heights[t] = z
    return SimulatedTrace(model.marker, genotypes, heights)


def simulate_case(
    case: CaseData,
    hypothesis: Hypothesis,
    params: ParamsByTrace,
    condition: Union[str, Mapping[str, EvidenceEvent]] = CONDITION_NONE,
    seed=None,
    settings: Optional[EngineSettings] = None,
    model: Optional[LikelihoodModel] = None,
) -> Tuple[CaseData, Dict[str, SimulatedTrace]]:
    """
    Kasus sintetis lengkap (semua marker, semua trace) pada psi tertentu.
    `condition`: shortcut string, atau marker -> EvidenceEvent (marker lain tanpa syarat).
    """
    if isinstance(condition, str):
        kinds = condition_kinds(condition)
    else:
        kinds = tuple(sorted({k for event in condition.values() for k in condition_kinds(event)})) or (KIND_OBSERVED,)
    if model is None or model.hypothesis is not hypothesis or not _has_kinds(model, kinds):
        model = LikelihoodModel(case, hypothesis, kinds=kinds, settings=settings)
    rng = np.random.default_rng(seed)

    sims = {}
    traces = {t: TraceData(t, case.traces[t].threshold, {}) for t in case.traces}
    for marker, mm in model.markers.items():
        event = condition if isinstance(condition, str) else condition.get(marker, {})
        sim = simulate_trace(mm, params, event, rng)
        sims[marker] = sim
        for t, z in sim.heights.items():
            traces[t].heights[marker] = z
    for t in traces:
        for marker in case.markers:
            traces[t].heights.setdefault(marker, np.zeros(case.ladders[marker].size))
    return CaseData(dict(case.ladders), traces, dict(case.profiles)), sims


def _has_kinds(model: LikelihoodModel, kinds) -> bool:
    return all(set(kinds) <= set(mm.kinds) for mm in model.markers.values())
