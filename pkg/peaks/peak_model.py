# peaks/peak_model.py
# Model tinggi puncak gamma: shape lambda_a, faktor densitas/CDF dengan threshold C, sampling.

from dataclasses import dataclass, field, replace
from typing import Dict, Union

import numpy as np
from scipy import special, stats

PHI_SUM_TOL = 1e-9

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ModelParameters:
    """psi = (rho, xi, eta, phi) + threshold C untuk satu trace."""

    rho: float
    xi: float
    eta: float
    phi: Dict[str, float] = field(default_factory=dict)
    threshold: float = 50.0

    def __post_init__(self):
        if not self.rho > 0 or not self.eta > 0:
            raise ValueError("rho dan eta harus > 0")
        if not 0 <= self.xi < 1:
            raise ValueError("xi harus di [0, 1)")
        if not self.threshold > 0:
            raise ValueError("threshold C harus > 0")
        if any(v < 0 for v in self.phi.values()):
            raise ValueError("phi harus >= 0")
        if self.phi and abs(sum(self.phi.values()) - 1.0) > PHI_SUM_TOL:
            raise ValueError(f"jumlah phi {sum(self.phi.values()):.12g} != 1")

    def fraction(self, tag: str) -> float:
        return float(self.phi.get(tag, 0.0))

    def with_phi(self, phi: Dict[str, float]) -> "ModelParameters":
        return replace(self, phi=dict(phi))

    @property
    def mean_height_scale(self) -> float:
        return self.rho * self.eta


def shape(counts: np.ndarray, counts_next: np.ndarray, phi: np.ndarray, rho: float, xi: float) -> np.ndarray:
    """
    lambda_a = rho * sum_i {(1 - xi) n_ia + xi n_i,a+1} phi_i.
    Axis pertama `counts`/`counts_next` = kontributor (sejajar `phi`).
    """
    counts = np.asarray(counts, dtype=float)
    counts_next = np.asarray(counts_next, dtype=float)
    weighted = (1.0 - xi) * counts + xi * counts_next
    return rho * np.einsum("i,i...->...", np.asarray(phi, dtype=float), weighted)


def _check_height(z: float, threshold: float) -> None:
    if z < 0 or 0 < z < threshold:
        raise ValueError(f"tinggi puncak {z} di (0, C={threshold}) tidak valid")


def log_peak_factor(z: float, lam: ArrayLike, eta: float, threshold: float) -> np.ndarray:
    """log g(z | lambda) untuk z >= C, log G(C | lambda) untuk z = 0."""
    _check_height(z, threshold)
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.shape)
    pos = lam > 0
    if z >= threshold:
        out[~pos] = -np.inf
        out[pos] = stats.gamma.logpdf(z, lam[pos], scale=eta)
    else:
        out[~pos] = 0.0
        with np.errstate(divide="ignore"):
            out[pos] = np.log(special.gammainc(lam[pos], threshold / eta))
    return out


def peak_factor(z: float, lam: ArrayLike, eta: float, threshold: float) -> np.ndarray:
    return np.exp(log_peak_factor(z, lam, eta, threshold))


def below_cdf(lam: ArrayLike, height: float, eta: float) -> np.ndarray:
    """G(height | lambda) = P(H < height); lambda = 0 -> 1."""
    lam = np.asarray(lam, dtype=float)
    out = np.ones(lam.shape)
    pos = lam > 0
    out[pos] = special.gammainc(lam[pos], height / eta)
    return out


def above_survival(lam: ArrayLike, height: float, eta: float) -> np.ndarray:
    """1 - G(height | lambda), dihitung langsung agar ekor atas presisi."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape)
    pos = lam > 0
    out[pos] = special.gammaincc(lam[pos], height / eta)
    return out


def sample_height(lam: float, eta: float, threshold: float, rng: np.random.Generator) -> float:
    """H ~ Gamma(lambda, eta) (H = 0 kalau lambda = 0); return H * 1{H >= C}."""
    if lam <= 0:
        return 0.0
    h = float(rng.gamma(lam, eta))
    return h if h >= threshold else 0.0


def sample_height_above(lam: float, eta: float, threshold: float, rng: np.random.Generator) -> float:
    """H ~ Gamma(lambda, eta) bersyarat H >= C, via invers survival (presisi di ekor atas)."""
    if lam <= 0:
        raise ValueError("lambda = 0: puncak di atas threshold mustahil")
    tail = float(special.gammaincc(lam, threshold / eta))
    if tail <= 0.0:
        return float(threshold)
    u = tail * (1.0 - rng.random())
    return max(float(special.gammainccinv(lam, u)) * eta, float(threshold))
