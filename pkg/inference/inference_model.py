# inference/inference_model.py
# Model likelihood per marker (network + tree + support terkompres) dan total kasus.

import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.engine_settings import EngineSettings, engine_settings
from core.errors import ImpossibleEvidenceError, ValidationError
from core.task_pool import resolve_threads, run_parallel
from inference.inference_case import CaseData, Hypothesis
from jtree.jtree_charge import Charge, CompressionReport, initialize_charge
from jtree.jtree_network import DiscreteNetwork
from jtree.jtree_spec import validate_clique_tree
from logs.log_setup import get_logger
from mixture.mixture_network import MarkerNetwork, build_marker_network
from mixture.mixture_trees import build_tree
from peaks.peak_cpts import AuxCptBundle, build_aux_cpts
from peaks.peak_model import ModelParameters

log = get_logger("inference.model")

ParamsByTrace = Mapping[str, ModelParameters]

KIND_OBSERVED = "O"
KIND_PRESENCE = "D"
KIND_QUERY = "Q"


class MarkerModel:
    """
    Network + clique tree untuk satu marker di bawah satu hipotesis.
    Slot aux: satu per (trace, kind). Struktur dibangun sekali, CPT aux diikat ulang per psi.
    """

    def __init__(
        self,
        case: CaseData,
        hypothesis: Hypothesis,
        marker: str,
        kinds: Sequence[str] = (KIND_OBSERVED,),
        settings: Optional[EngineSettings] = None,
        method: Optional[str] = None,
    ):
        self.settings = settings or engine_settings
        self.marker = marker
        self.hypothesis = hypothesis
        self.kinds = tuple(kinds)
        self.traces = tuple(t for t in case.traces if t in hypothesis.traces)
        self.heights = {t: np.asarray(case.heights(t, marker), dtype=float) for t in self.traces}

        slots = [self.slot(kind, t) for t in self.traces for kind in self.kinds]
        known = {tag: case.profiles[tag][marker] for tag in hypothesis.knowns}
        self.mnet: MarkerNetwork = build_marker_network(case.ladders[marker], list(hypothesis.unknowns), known, slots)
        self.tree = build_tree(self.mnet, method or self.settings.tree_method)

        check = validate_clique_tree(self.mnet.network, self.tree)
        if not check.ok:
            raise ValidationError(f"[{marker}] clique tree tidak valid: {check.violation}")

        self.support: Optional[CompressionReport] = None
        if self.settings.compress:
            self.support = self._structural_support()

    # ==============================
    # Slot & node
    # ==============================

    @property
    def ladder(self):
        return self.mnet.ladder

    @property
    def network(self) -> DiscreteNetwork:
        return self.mnet.network

    def slot(self, kind: str, trace: str) -> str:
        return f"{kind}{self.traces.index(trace)}" if trace in self.traces else f"{kind}?{trace}"

    def aux_node(self, kind: str, trace: str, a: int) -> str:
        if kind not in self.kinds:
            raise ValueError(f"[{self.marker}] model tidak punya slot {kind}")
        return self.mnet.aux(self.slot(kind, trace), a)

    def _structural_support(self) -> CompressionReport:
        # CPT aux placeholder 0.5 -> support struktural (superset support untuk psi apa pun)
        charge = initialize_charge(self.network, self.tree, settings=self.settings, validate=False)
        charge.propagate()
        return charge.compress()

    # ==============================
    # Binding psi
    # ==============================

    def _check_params(self, trace: str, params: ModelParameters) -> None:
        members = set(self.hypothesis.included(trace))
        for tag, f in params.phi.items():
            if f > 0 and tag not in members:
                raise ValueError(f"[{self.marker}] {tag} punya phi > 0 tapi tidak ikut di trace {trace}")

    def bundles(self, params: ParamsByTrace, query_heights=None, heights=None) -> Dict[str, AuxCptBundle]:
        """`heights` (trace -> tinggi per alel) menimpa data untuk CPT O."""
        out = {}
        for t in self.traces:
            self._check_params(t, params[t])
            qh = (query_heights or {}).get(t)
            z = (heights or {}).get(t, self.heights[t])
            out[t] = build_aux_cpts(self.mnet, z, params[t], qh)
        return out

    def bind(self, params: ParamsByTrace, query_heights=None, heights=None) -> Tuple[DiscreteNetwork, Dict[str, AuxCptBundle]]:
        bundles = self.bundles(params, query_heights, heights)
        updates = {}
        for t, bundle in bundles.items():
            for cpts in bundle.alleles:
                a = cpts.allele
                if KIND_OBSERVED in self.kinds:
                    updates[self.aux_node(KIND_OBSERVED, t, a)] = cpts.o_cpt
                if KIND_PRESENCE in self.kinds:
                    updates[self.aux_node(KIND_PRESENCE, t, a)] = cpts.d_cpt
                if KIND_QUERY in self.kinds:
                    default_q = cpts.q_cpts[cpts.height if cpts.observed else bundle.params.threshold]
                    updates[self.aux_node(KIND_QUERY, t, a)] = default_q
        return self.network.with_cpts(updates), bundles

    def charge(self, params: ParamsByTrace, query_heights=None, heights=None) -> Tuple[Charge, Dict[str, AuxCptBundle]]:
        net, bundles = self.bind(params, query_heights, heights)
        return initialize_charge(net, self.tree, support=self.support, settings=self.settings, validate=False), bundles

    # ==============================
    # Evidence
    # ==============================

    def enter_observations(
        self,
        charge: Charge,
        bundles: Mapping[str, AuxCptBundle],
        kind: str = KIND_OBSERVED,
        alleles: Optional[Mapping[str, Iterable[int]]] = None,
    ) -> None:
        """Evidence O (tinggi) atau D (presence) untuk alel terpilih per trace (None = semua)."""
        for t in self.traces:
            chosen = range(self.ladder.size) if alleles is None else alleles.get(t, ())
            for a in chosen:
                cpts = bundles[t][a]
                node = self.aux_node(kind, t, a)
                if kind == KIND_OBSERVED:
                    vec, log_k = cpts.o_evidence()
                    charge.enter_evidence(node, vec, log_scale=log_k)
                else:
                    charge.enter_evidence(node, cpts.d_evidence())

    def log_likelihood(self, params: ParamsByTrace, kind: str = KIND_OBSERVED) -> float:
        """log E[prod faktor] = log N_2 - log N_1 (termasuk log k_a^psi)."""
        charge, bundles = self.charge(params)
        n1 = charge.propagate()
        self.enter_observations(charge, bundles, kind)
        try:
            n2 = charge.propagate()
        except ImpossibleEvidenceError:
            return -math.inf
        return n2.log() - n1.log()


# ==============================
# Level kasus
# ==============================

class LikelihoodModel:
    """Kumpulan MarkerModel untuk satu hipotesis; urutan marker tetap."""

    def __init__(
        self,
        case: CaseData,
        hypothesis: Hypothesis,
        kinds: Sequence[str] = (KIND_OBSERVED,),
        settings: Optional[EngineSettings] = None,
        method: Optional[str] = None,
    ):
        hypothesis.validate(case)
        self.case = case
        self.hypothesis = hypothesis
        self.settings = settings or engine_settings
        self.markers: Dict[str, MarkerModel] = {
            m: MarkerModel(case, hypothesis, m, kinds, self.settings, method) for m in case.markers
        }

    @property
    def traces(self) -> Tuple[str, ...]:
        return tuple(t for t in self.case.traces if t in self.hypothesis.traces)

    def per_marker(self, params: ParamsByTrace, kind: str = KIND_OBSERVED) -> Dict[str, float]:
        names = list(self.markers)
        threads = resolve_threads(self.settings.threads, len(names))
        values = run_parallel(lambda m: self.markers[m].log_likelihood(params, kind), names, threads)
        return dict(zip(names, values))

    def log_likelihood(self, params: ParamsByTrace, kind: str = KIND_OBSERVED) -> float:
        total = 0.0
        for value in self.per_marker(params, kind).values():
            total += value
        return total


def marker_log_likelihood(model: MarkerModel, params: ParamsByTrace) -> float:
    return model.log_likelihood(params, KIND_OBSERVED)


def total_log_likelihood(
    case: CaseData,
    params: ParamsByTrace,
    hypothesis: Hypothesis,
    settings: Optional[EngineSettings] = None,
) -> float:
    return LikelihoodModel(case, hypothesis, settings=settings).log_likelihood(params)


def presence_only_log_likelihood(
    case: CaseData,
    params: ParamsByTrace,
    hypothesis: Hypothesis,
    settings: Optional[EngineSettings] = None,
) -> float:
    """Evidence D_a = 1 untuk alel teramati, D_a = 0 untuk yang tidak."""
    model = LikelihoodModel(case, hypothesis, kinds=(KIND_PRESENCE,), settings=settings)
    return model.log_likelihood(params, KIND_PRESENCE)


def build_multi_trace_model(
    case: CaseData,
    hypothesis: Hypothesis,
    kinds: Sequence[str] = (KIND_OBSERVED,),
    settings: Optional[EngineSettings] = None,
) -> LikelihoodModel:
    """Rantai genotipe dibagi antar trace; slot aux per trace; psi per trace."""
    return LikelihoodModel(case, hypothesis, kinds, settings)
