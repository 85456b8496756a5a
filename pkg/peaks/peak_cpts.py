# peaks/peak_cpts.py
# CPT node auxiliary O_a / D_a / Q_a di atas konfigurasi jumlah alel kontributor tak dikenal.

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from mixture.mixture_network import COUNT_STATES, MarkerNetwork
from peaks.peak_model import ModelParameters, above_survival, below_cdf, log_peak_factor, shape


@dataclass(frozen=True)
class AlleleCpts:
    allele: int
    height: float
    lam: np.ndarray
    o_cpt: np.ndarray
    # log k_a^psi (0 untuk alel tak teramati)
    o_log_scale: float
    d_cpt: np.ndarray
    q_cpts: Dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def observed(self) -> bool:
        return self.height > 0

    def o_evidence(self) -> Tuple[np.ndarray, float]:
        """Teramati: (0, k) -> (0, 1) + log k. Tak teramati: (1, 0)."""
        if self.observed:
            return np.array([0.0, 1.0]), self.o_log_scale
        return np.array([1.0, 0.0]), 0.0

    def d_evidence(self) -> np.ndarray:
        return np.array([0.0, 1.0]) if self.observed else np.array([1.0, 0.0])


@dataclass(frozen=True)
class AuxCptBundle:
    marker: str
    params: ModelParameters
    alleles: Tuple[AlleleCpts, ...]

    def __getitem__(self, a: int) -> AlleleCpts:
        return self.alleles[a]

    @property
    def log_scale_total(self) -> float:
        return float(sum(c.o_log_scale for c in self.alleles if c.observed))


def _two_state(p1: np.ndarray, p0: Optional[np.ndarray] = None) -> np.ndarray:
    p1 = np.clip(p1, 0.0, 1.0)
    p0 = 1.0 - p1 if p0 is None else np.clip(p0, 0.0, 1.0)
    return np.stack([p0, p1], axis=-1)


def lambda_grid(mn: MarkerNetwork, a: int, params: ModelParameters) -> np.ndarray:
    """lambda_a untuk tiap konfigurasi parent slot aux (axis urut mn.attachment(a))."""
    k = mn.k
    last = a + 1 >= mn.n_alleles
    n_axes = k if last else 2 * k
    grid = np.indices((COUNT_STATES,) * n_axes).astype(float)
    cur = grid[:k]
    nxt = np.zeros_like(cur) if last else grid[k:]

    tags = list(mn.unknowns)
    phi_u = np.array([params.fraction(t) for t in tags])
    lam = shape(cur, nxt, phi_u, params.rho, params.xi)

    # kontributor dikenal: offset konstan
    for tag, counts in mn.known_counts.items():
        f = params.fraction(tag)
        if f <= 0:
            continue
        n_next = counts[a + 1] if not last else 0
        lam = lam + shape(np.array([counts[a]]), np.array([n_next]), np.array([f]), params.rho, params.xi)
    return np.asarray(lam, dtype=float)


def q_cpt(lam: np.ndarray, height: float, params: ModelParameters) -> np.ndarray:
    """P(Z_a <= z | counts) = G(z | lambda) untuk z >= C."""
    below = below_cdf(lam, height, params.eta)
    return _two_state(below)


def build_aux_cpts(
    mn: MarkerNetwork,
    heights: Sequence[float],
    params: ModelParameters,
    query_heights: Optional[Dict[int, Iterable[float]]] = None,
) -> AuxCptBundle:
    heights = np.asarray(heights, dtype=float)
    if heights.shape != (mn.n_alleles,):
        raise ValueError(f"[{mn.ladder.marker}] jumlah tinggi puncak != jumlah alel")

    C, eta = params.threshold, params.eta
    out = []
    for a in range(mn.n_alleles):
        z = float(heights[a])
        lam = lambda_grid(mn, a, params)
        logg = log_peak_factor(z, lam, eta, C)

        if z > 0:
            top = float(np.max(logg))
            if np.isfinite(top):
                o_cpt = _two_state(np.exp(logg - top))
                log_k = top
            else:
                # semua konfigurasi mustahil: P(O=1) = 0, evidence nanti nol
                o_cpt = _two_state(np.zeros(lam.shape))
                log_k = 0.0
        else:
            o_cpt = _two_state(above_survival(lam, C, eta), below_cdf(lam, C, eta))
            log_k = 0.0

        d_cpt = _two_state(above_survival(lam, C, eta), below_cdf(lam, C, eta))

        wanted = [z] if z > 0 else [C]
        if query_heights and a in query_heights:
            wanted += [float(h) for h in query_heights[a]]
        q = {h: q_cpt(lam, h, params) for h in wanted if h >= C}

        out.append(AlleleCpts(a, z, lam, o_cpt, log_k, d_cpt, q))
    return AuxCptBundle(mn.ladder.marker, params, tuple(out))
