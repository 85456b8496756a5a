# inference/inference_posterior.py
# Posterior genotipe diberi tinggi puncak + deconvolution (ranking genotipe unknown).

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.engine_settings import DeconvolutionSettings, deconvolution_settings
from core.errors import ImpossibleEvidenceError
from inference.inference_model import KIND_OBSERVED, MarkerModel, ParamsByTrace
from jtree.jtree_charge import Charge
from logs.log_setup import get_logger
from mixture.mixture_network import n_node

log = get_logger("inference.posterior")

DROPOUT_COLUMN = "D"
MASS_TOL = 1e-12

# kunci baris: per unknown, tuple jumlah alel (kolom terpilih)
RowKey = Tuple[Tuple[int, ...], ...]


def posterior_charge(
    model: MarkerModel,
    params: ParamsByTrace,
    alleles: Optional[Mapping[str, Iterable[int]]] = None,
    kind: str = KIND_OBSERVED,
) -> Charge:
    """
    Charge kanonik bersyarat evidence O_a untuk a di B (per trace). None = semua alel.
    Error ImpossibleEvidenceError kalau massa posterior nol.
    """
    charge, bundles = model.charge(params)
    charge.propagate()
    model.enter_observations(charge, bundles, kind, alleles)
    charge.propagate()
    return charge


def allele_count_marginal(charge: Charge, tag: str, a: int) -> np.ndarray:
    """P(n_ia = 0, 1, 2 | evidence)."""
    return charge.marginal((n_node(tag, a),))


def presence_probabilities(model: MarkerModel, charge: Charge) -> Dict[str, np.ndarray]:
    """P(unknown membawa alel a | evidence) per unknown, vektor atas ladder."""
    out = {}
    for tag in model.mnet.unknowns:
        out[tag] = np.array([1.0 - allele_count_marginal(charge, tag, a)[0] for a in range(model.ladder.size)])
    return out


def combination_probability(charge: Charge, assignment: Mapping[str, int]) -> float:
    """P(assignment | evidence) eksak lewat propagasi dengan hard evidence."""
    if not charge.canonical or charge.normalizing_constant is None:
        charge.propagate()
    base = charge.normalizing_constant
    work = charge.copy()
    for node, state in assignment.items():
        vec = np.zeros(work.network.card(node))
        vec[state] = 1.0
        work.enter_evidence(node, vec)
    try:
        value = work.propagate()
    except ImpossibleEvidenceError:
        return 0.0
    return math.exp(value.log() - base.log())


# ==============================
# Ranking
# ==============================

@dataclass
class GenotypeRanking:
    marker: str
    unknowns: Tuple[str, ...]
    columns: Tuple[str, ...]
    rows: List[Tuple[RowKey, float]]
    covered_mass: float
    target_mass: float
    complete: bool
    samples: int = 0
    dropout_column: bool = False

    @property
    def guarantee(self) -> float:
        """Tiap genotipe di luar ranking punya probabilitas <= 1 - covered."""
        return max(0.0, 1.0 - self.covered_mass)


def observed_alleles(model: MarkerModel) -> Tuple[int, ...]:
    seen = np.zeros(model.ladder.size, dtype=bool)
    for t in model.traces:
        seen |= model.heights[t] > 0
    return tuple(int(a) for a in np.flatnonzero(seen))


class _RowCodec:
    """Konfigurasi sampel <-> kunci baris (penuh atau alel teramati + kolom D)."""

    def __init__(self, model: MarkerModel, collapse: bool):
        self.unknowns = model.mnet.unknowns
        self.collapse = collapse
        self.alleles = observed_alleles(model) if collapse else tuple(range(model.ladder.size))
        labels = [model.ladder.labels[a] for a in self.alleles]
        self.columns = tuple(labels + ([DROPOUT_COLUMN] if collapse else []))

    def key(self, config: Mapping[str, int]) -> RowKey:
        rows = []
        for tag in self.unknowns:
            counts = [config[n_node(tag, a)] for a in self.alleles]
            if self.collapse:
                counts.append(2 - sum(counts))
            rows.append(tuple(counts))
        return tuple(rows)

    def assignment(self, key: RowKey) -> Dict[str, int]:
        out = {}
        for tag, counts in zip(self.unknowns, key):
            for a, c in zip(self.alleles, counts):
                out[n_node(tag, a)] = c
        return out


def _rank(found: Dict, target: float, covered: float, samples: int, **kw) -> GenotypeRanking:
    rows = sorted(found.items(), key=lambda kv: (-kv[1], kv[0]))
    return GenotypeRanking(rows=rows, covered_mass=covered, target_mass=target, complete=covered >= target - MASS_TOL, samples=samples, **kw)


def deconvolve(
    model: MarkerModel,
    params: ParamsByTrace,
    mass: Optional[float] = None,
    collapse_unobserved: bool = False,
    seed=None,
    settings: Optional[DeconvolutionSettings] = None,
) -> GenotypeRanking:
    """
    Sampling genotipe dari posterior sampai massa eksak >= p. Probabilitas tiap
    kombinasi baru dihitung eksak lewat propagasi, bukan frekuensi empiris.
    """
    settings = settings or deconvolution_settings
    target = settings.mass if mass is None else mass
    codec = _RowCodec(model, collapse_unobserved)
    meta = dict(marker=model.marker, unknowns=codec.unknowns, columns=codec.columns, dropout_column=collapse_unobserved)

    if not codec.unknowns:
        return _rank({(): 1.0}, target, 1.0, 0, **meta)

    charge = posterior_charge(model, params)
    rng = np.random.default_rng(seed)
    found: Dict[RowKey, float] = {}
    covered = 0.0
    samples = 0
    while covered < target - MASS_TOL and samples < settings.max_samples:
        config = charge.sample_configuration(rng)
        samples += 1
        key = codec.key(config)
        if key in found:
            continue
        prob = combination_probability(charge, codec.assignment(key))
        found[key] = prob
        covered += prob

    ranking = _rank(found, target, min(covered, 1.0), samples, **meta)
    if not ranking.complete:
        log.warning("[%s] sampler berhenti di massa %.6f < %.6f", model.marker, covered, target)
    return ranking


@dataclass
class JointRanking:
    markers: Tuple[str, ...]
    rows: List[Tuple[Tuple[RowKey, ...], float]]
    covered_mass: float
    target_mass: float
    complete: bool
    samples: int = 0
    columns: Dict[str, Tuple[str, ...]] = field(default_factory=dict)


def deconvolve_joint(
    models: Sequence[MarkerModel],
    params: ParamsByTrace,
    mass: Optional[float] = None,
    collapse_unobserved: bool = False,
    seed=None,
    settings: Optional[DeconvolutionSettings] = None,
) -> JointRanking:
    """Ranking gabungan lintas marker: probabilitas = produk probabilitas eksak per marker."""
    settings = settings or deconvolution_settings
    target = settings.mass if mass is None else mass
    codecs = [_RowCodec(m, collapse_unobserved) for m in models]
    charges = [posterior_charge(m, params) if c.unknowns else None for m, c in zip(models, codecs)]
    cache: List[Dict[RowKey, float]] = [dict() for _ in models]
    rng = np.random.default_rng(seed)

    found: Dict[Tuple[RowKey, ...], float] = {}
    covered = 0.0
    samples = 0
    while covered < target - MASS_TOL and samples < settings.max_samples:
        samples += 1
        key = []
        prob = 1.0
        for i, (codec, charge) in enumerate(zip(codecs, charges)):
            if charge is None:
                key.append(())
                continue
            part = codec.key(charge.sample_configuration(rng))
            if part not in cache[i]:
                cache[i][part] = combination_probability(charge, codec.assignment(part))
            prob *= cache[i][part]
            key.append(part)
        key = tuple(key)
        if key in found:
            continue
        found[key] = prob
        covered += prob

    rows = sorted(found.items(), key=lambda kv: (-kv[1], kv[0]))
    return JointRanking(
        markers=tuple(m.marker for m in models),
        rows=rows,
        covered_mass=min(covered, 1.0),
        target_mass=target,
        complete=covered >= target - MASS_TOL,
        samples=samples,
        columns={m.marker: c.columns for m, c in zip(models, codecs)},
    )
