# diagnostics/diag_prequential.py
# Monitor prequential: skor log presence alel, dinormalisasi kumulatif.

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from core.errors import ImpossibleEvidenceError
from inference.inference_model import KIND_OBSERVED, KIND_PRESENCE, LikelihoodModel, ParamsByTrace
from logs.log_setup import get_logger

log = get_logger("diagnostics.prequential")

PREQUENTIAL_KINDS = (KIND_OBSERVED, KIND_PRESENCE)
Z95 = float(stats.norm.ppf(0.95))
Z99 = float(stats.norm.ppf(0.99))

# (marker, trace, index alel)
Step = Tuple[str, str, int]


@dataclass
class MonitorRow:
    step: int
    marker: str
    trace: str
    allele: str
    p: float
    y: float
    expectation: float
    variance: float
    cumulative: float
    normalized: float
    limit95: float
    limit99: float


def log_score_moments(p: float) -> Tuple[float, float]:
    """E dan Var dari Y = -log P(hasil) saat hasil ~ Bernoulli(p)."""
    if not 0 < p < 1:
        raise ValueError(f"p = {p} harus di (0, 1)")
    lp, lq = math.log(p), math.log1p(-p)
    expectation = -p * lp - (1 - p) * lq
    variance = p * (1 - p) * (lp - lq) ** 2
    return expectation, variance


def default_ordering(model: LikelihoodModel) -> List[Step]:
    """Marker urut input, trace urut kasus, alel urut repeat naik."""
    return [
        (marker, trace, a)
        for marker, mm in model.markers.items()
        for trace in mm.traces
        for a in range(mm.ladder.size)
    ]


def prequential_monitor(
    model: LikelihoodModel,
    params: ParamsByTrace,
    ordering: Optional[Sequence[Step]] = None,
) -> List[MonitorRow]:
    """
    Tiap langkah: p = P(D_a = 1 | evidence O sebelumnya), lalu evidence O_a masuk.
    Langkah dengan p di {0, 1} tidak memberi baris (variansnya nol).
    """
    for mm in model.markers.values():
        missing = [k for k in PREQUENTIAL_KINDS if k not in mm.kinds]
        if missing:
            raise ValueError(f"[{mm.marker}] model butuh slot {missing} untuk monitor prequential")

    state: Dict[str, tuple] = {}
    for marker, mm in model.markers.items():
        charge, bundles = mm.charge(params)
        charge.propagate()
        state[marker] = (charge, bundles)

    rows: List[MonitorRow] = []
    cumulative = 0.0
    var_sum = 0.0
    for step, (marker, trace, a) in enumerate(ordering or default_ordering(model)):
        mm = model.markers[marker]
        charge, bundles = state[marker]
        p = float(charge.marginal((mm.aux_node(KIND_PRESENCE, trace, a),))[1])
        cpts = bundles[trace][a]

        node = mm.aux_node(KIND_OBSERVED, trace, a)
        vec, log_k = cpts.o_evidence()
        charge.enter_evidence(node, vec, log_scale=log_k)
        try:
            charge.propagate()
        except ImpossibleEvidenceError:
            log.warning("[%s] evidence %s mustahil, dilewati", marker, node)
            charge.retract_evidence(node)
            charge.propagate()

        if not 0 < p < 1:
            continue
        y = -math.log(p) if cpts.observed else -math.log1p(-p)
        expectation, variance = log_score_moments(p)
        cumulative += y - expectation
        var_sum += variance
        sd = math.sqrt(var_sum)
        rows.append(
            MonitorRow(
                step=step,
                marker=marker,
                trace=trace,
                allele=mm.ladder.labels[a],
                p=p,
                y=y,
                expectation=expectation,
                variance=variance,
                cumulative=cumulative,
                normalized=cumulative / sd if sd > 0 else math.nan,
                limit95=Z95 * sd,
                limit99=Z99 * sd,
            )
        )
    return rows


def flagged(rows: Sequence[MonitorRow], level: str = "99") -> List[MonitorRow]:
    """Baris di mana skor kumulatif melewati batas atas."""
    attr = "limit99" if level == "99" else "limit95"
    return [r for r in rows if r.cumulative > getattr(r, attr)]


def monitor_summary(rows: Sequence[MonitorRow]) -> Dict[str, float]:
    if not rows:
        return {"steps": 0, "final_normalized": math.nan, "max_normalized": math.nan}
    normalized = np.array([r.normalized for r in rows], dtype=float)
    return {
        "steps": len(rows),
        "final_normalized": float(normalized[-1]),
        "max_normalized": float(np.nanmax(normalized)) if np.any(np.isfinite(normalized)) else math.nan,
    }
