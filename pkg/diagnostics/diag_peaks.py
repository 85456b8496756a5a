# diagnostics/diag_peaks.py
# Transformasi probabilitas bersyarat tinggi puncak (QQ), interval prediksi, bar presence.

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from core.engine_settings import DeconvolutionSettings, deconvolution_settings
from core.errors import ImpossibleEvidenceError
from core.task_pool import resolve_threads, run_parallel
from inference.inference_model import (
    KIND_OBSERVED,
    KIND_PRESENCE,
    KIND_QUERY,
    LikelihoodModel,
    MarkerModel,
    ParamsByTrace,
)
from inference.inference_posterior import posterior_charge
from jtree.jtree_charge import Charge
from logs.log_setup import get_logger
from peaks.peak_cpts import lambda_grid, q_cpt
from peaks.peak_model import ModelParameters

log = get_logger("diagnostics.peaks")

MODE_MARGINAL = "marginal"
MODE_ALL_OTHERS = "all-others"
MODE_PRECEDING = "preceding"
MODES = (MODE_MARGINAL, MODE_ALL_OTHERS, MODE_PRECEDING)

DIAGNOSTIC_KINDS = (KIND_OBSERVED, KIND_PRESENCE, KIND_QUERY)
MAX_DOUBLINGS = 200


def conditioning_set(mode: str, a: int, n_alleles: int) -> Tuple[int, ...]:
    if mode == MODE_MARGINAL:
        return ()
    if mode == MODE_ALL_OTHERS:
        return tuple(b for b in range(n_alleles) if b != a)
    if mode == MODE_PRECEDING:
        return tuple(range(a))
    raise ValueError(f"mode conditioning tidak dikenal: {mode!r}")


def aux_probability(charge: Charge, node: str, cpt: np.ndarray) -> float:
    """
    P(Y=1 | evidence) untuk node aux barren dengan CPT baru: clique-nya daun tanpa
    evidence, jadi cukup marginal parent dikali CPT.
    """
    parents = charge.network.parents(node)
    post = charge.marginal(parents)
    return float(np.sum(post * cpt[..., 1]))


@dataclass
class ConditionalPeakDistribution:
    """P(Z_a <= z | conditioning, Z_a >= C) sebagai fungsi z (charge sudah bersyarat)."""

    charge: Charge
    q_node: str
    lam: np.ndarray
    params: ModelParameters
    presence: float

    @classmethod
    def from_charge(cls, model: MarkerModel, charge: Charge, trace: str, a: int, params: ModelParameters):
        lam = _lam(model, a, params)
        presence = float(charge.marginal((model.aux_node(KIND_PRESENCE, trace, a),))[1])
        return cls(charge, model.aux_node(KIND_QUERY, trace, a), lam, params, presence)

    def below(self, z: float) -> float:
        """P(Z_a <= z | cond) lewat node Q_a."""
        return aux_probability(self.charge, self.q_node, q_cpt(self.lam, z, self.params))

    def cdf(self, z: float) -> float:
        C = self.params.threshold
        if z < C:
            raise ValueError(f"z = {z} < C = {C}")
        if not self.presence > 0:
            raise ImpossibleEvidenceError("massa conditioning nol (P(Z_a >= C) = 0)")
        value = (self.below(z) - self.below(C)) / self.presence
        return min(max(value, 0.0), 1.0)

    def single_shape(self) -> Optional[float]:
        """lambda tunggal kalau semua massa posterior dengan lambda > 0 ada di satu nilai lambda."""
        parents = self.charge.network.parents(self.q_node)
        post = np.asarray(self.charge.marginal(parents))
        live = np.unique(self.lam[(post > 0) & (self.lam > 0)])
        if live.size == 1:
            return float(live[0])
        return None

    def quantile(self, level: float) -> float:
        lam = self.single_shape()
        if lam is None:
            return self.bisect_quantile(level)
        # Q(lambda, z/eta) = (1 - level) * Q(lambda, C/eta)
        p = self.params
        tail = float(special.gammaincc(lam, p.threshold / p.eta))
        if not tail > 0:
            raise ImpossibleEvidenceError("massa conditioning nol (P(Z_a >= C) = 0)")
        return max(float(special.gammainccinv(lam, (1.0 - level) * tail)) * p.eta, p.threshold)

    def bisect_quantile(self, level: float) -> float:
        """Invers cdf: bracket digandakan lalu root-finding Brent."""
        C = self.params.threshold
        lo = C
        hi = 2.0 * C
        for _ in range(MAX_DOUBLINGS):
            if self.cdf(hi) >= level:
                break
            lo, hi = hi, 2.0 * hi
        return float(optimize.brentq(lambda z: self.cdf(z) - level, lo, hi, xtol=1e-12 * hi, rtol=1e-12))


def _lam(model: MarkerModel, a: int, params: ModelParameters) -> np.ndarray:
    return lambda_grid(model.mnet, a, params)


def conditional_peak_cdf(
    model: MarkerModel,
    params: ParamsByTrace,
    trace: str,
    a: int,
    z: float,
    mode: str = MODE_ALL_OTHERS,
) -> float:
    """P(Z_a <= z | conditioning, Z_a >= C), charge dibangun ulang dari nol."""
    chosen = conditioning_set(mode, a, model.ladder.size)
    charge = posterior_charge(model, params, {trace: chosen})
    return ConditionalPeakDistribution.from_charge(model, charge, trace, a, params[trace]).cdf(z)


def _distributions(model: MarkerModel, params: ParamsByTrace, trace: str, mode: str) -> Iterator[Tuple[int, ConditionalPeakDistribution]]:
    """Distribusi bersyarat per alel; all-others via retract, preceding via evidence bertahap."""
    A = model.ladder.size
    p = params[trace]
    if mode == MODE_MARGINAL:
        charge = posterior_charge(model, params, {trace: ()})
        for a in range(A):
            yield a, ConditionalPeakDistribution.from_charge(model, charge, trace, a, p)
        return

    if mode == MODE_ALL_OTHERS:
        charge, bundles = model.charge(params)
        charge.propagate()
        model.enter_observations(charge, bundles, KIND_OBSERVED, {trace: range(A)})
        for a in range(A):
            work = charge.copy()
            work.retract_evidence(model.aux_node(KIND_OBSERVED, trace, a))
            work.propagate()
            yield a, ConditionalPeakDistribution.from_charge(model, work, trace, a, p)
        return

    if mode == MODE_PRECEDING:
        charge, bundles = model.charge(params)
        charge.propagate()
        for a in range(A):
            yield a, ConditionalPeakDistribution.from_charge(model, charge.copy(), trace, a, p)
            model.enter_observations(charge, bundles, KIND_OBSERVED, {trace: (a,)})
            charge.propagate()
        return

    raise ValueError(f"mode conditioning tidak dikenal: {mode!r}")


# ==============================
# QQ
# ==============================

@dataclass
class QqPoint:
    marker: str
    trace: str
    allele: str
    height: float
    u: float
    position: float = math.nan


def qq_points(model: LikelihoodModel, params: ParamsByTrace, mode: str = MODE_ALL_OTHERS) -> List[QqPoint]:
    """Satu transformasi u per puncak teramati; posisi plot (i - 0.5)/n terhadap u terurut."""
    points: List[QqPoint] = []
    for marker, mm in model.markers.items():
        for trace in mm.traces:
            heights = mm.heights[trace]
            if not np.any(heights > 0):
                continue
            for a, dist in _distributions(mm, params, trace, mode):
                if heights[a] > 0:
                    u = dist.cdf(float(heights[a]))
                    points.append(QqPoint(marker, trace, mm.ladder.labels[a], float(heights[a]), u))
    points.sort(key=lambda q: q.u)
    log.debug("QQ mode=%s: %d puncak", mode, len(points))
    n = len(points)
    for i, q in enumerate(points, start=1):
        q.position = (i - 0.5) / n
    return points


# ==============================
# Interval prediksi
# ==============================

@dataclass
class IntervalRow:
    marker: str
    trace: str
    allele: str
    observed_height: float
    presence: float
    absence: float
    # level -> kuantil (None kalau presence = 0)
    quantiles: Dict[float, Optional[float]] = field(default_factory=dict)


def prediction_intervals(
    model: MarkerModel,
    params: ParamsByTrace,
    trace: str,
    levels: Optional[Sequence[float]] = None,
    settings: Optional[DeconvolutionSettings] = None,
) -> List[IntervalRow]:
    """Kuantil P(Z_a <= z | Z_b = z_b, b != a, Z_a >= C) + P(D_a = 1 | lainnya)."""
    settings = settings or deconvolution_settings
    levels = tuple(levels if levels is not None else settings.interval_levels)
    for lv in levels:
        if not 0 < lv < 1:
            raise ValueError(f"level {lv} harus di (0, 1)")

    def _row(item: Tuple[int, ConditionalPeakDistribution]) -> IntervalRow:
        a, dist = item
        presence = min(max(dist.presence, 0.0), 1.0)
        row = IntervalRow(
            marker=model.marker,
            trace=trace,
            allele=model.ladder.labels[a],
            observed_height=float(model.heights[trace][a]),
            presence=presence,
            absence=1.0 - presence,
        )
        for lv in levels:
            row.quantiles[lv] = dist.quantile(lv) if presence > 0 else None
        return row

    # tiap alel punya salinan charge sendiri -> aman diparalelkan
    items = list(_distributions(model, params, trace, MODE_ALL_OTHERS))
    threads = resolve_threads(model.settings.threads, len(items))
    return run_parallel(_row, items, threads)
