# tests/conftest.py
# Fixture bersama + oracle enumerasi (joint network, genotipe multinomial).

import itertools
import math
from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pytest
from scipy import special, stats

from core.engine_settings import EngineSettings, engine_settings
from inference.inference_case import CaseData, Hypothesis, TraceData
from mixture.mixture_ladder import AlleleLadder
from peaks.peak_model import ModelParameters

THRESHOLD = 50.0


# ==============================
# Oracle genotipe
# ==============================

def genotype_vectors(A: int) -> List[np.ndarray]:
    """Semua vektor jumlah alel (n_1..n_A) dengan total 2, urutan leksikografis."""
    out = []
    for a in range(A):
        for b in range(a, A):
            n = np.zeros(A, dtype=int)
            n[a] += 1
            n[b] += 1
            out.append(n)
    return out


def genotype_prob(n: np.ndarray, q: np.ndarray) -> float:
    """Hardy-Weinberg: multinomial(2; q)."""
    return float(stats.multinomial.pmf(n, 2, q))


def _lam(counts: Mapping[str, np.ndarray], params: ModelParameters, a: int) -> float:
    lam = 0.0
    for tag, n in counts.items():
        nxt = n[a + 1] if a + 1 < len(n) else 0
        lam += params.fraction(tag) * ((1 - params.xi) * n[a] + params.xi * nxt)
    return params.rho * lam


def _factor(z: float, lam: float, params: ModelParameters, kind: str) -> float:
    C, eta = params.threshold, params.eta
    if kind == "D":
        below = 1.0 if lam <= 0 else float(special.gammainc(lam, C / eta))
        return 1.0 - below if z > 0 else below
    if z > 0:
        return 0.0 if lam <= 0 else float(stats.gamma.pdf(z, lam, scale=eta))
    return 1.0 if lam <= 0 else float(special.gammainc(lam, C / eta))


def enumerate_marker(
    ladder: AlleleLadder,
    unknowns: Sequence[str],
    known: Mapping[str, np.ndarray],
    heights: Mapping[str, np.ndarray],
    params: Mapping[str, ModelParameters],
    kind: str = "O",
) -> List[Tuple[Tuple[Tuple[int, ...], ...], float]]:
    """Bobot tak ternormalisasi P(g) * prod faktor untuk tiap kombinasi genotipe unknown."""
    vectors = genotype_vectors(ladder.size)
    q = ladder.frequencies
    rows = []
    for combo in itertools.product(vectors, repeat=len(unknowns)):
        prior = math.prod(genotype_prob(n, q) for n in combo)
        counts = dict(known)
        counts.update(dict(zip(unknowns, combo)))
        lik = 1.0
        for t, z in heights.items():
            p = params[t]
            for a in range(ladder.size):
                lik *= _factor(float(z[a]), _lam(counts, p, a), p, kind)
        rows.append((tuple(tuple(int(x) for x in n) for n in combo), prior * lik))
    return rows


def oracle_log_likelihood(*args, **kwargs) -> float:
    total = math.fsum(w for _, w in enumerate_marker(*args, **kwargs))
    return math.log(total) if total > 0 else -math.inf


def oracle_posterior(*args, **kwargs) -> Dict[Tuple[Tuple[int, ...], ...], float]:
    rows = enumerate_marker(*args, **kwargs)
    total = math.fsum(w for _, w in rows)
    return {key: w / total for key, w in rows}


# ==============================
# Kasus acak kecil
# ==============================

def random_ladder(rng: np.random.Generator, A: int, marker: str = "M") -> AlleleLadder:
    q = rng.dirichlet(np.full(A, 2.0))
    q = np.maximum(q, 1e-3)
    return AlleleLadder(marker, tuple(str(10 + i) for i in range(A)), q / q.sum())


def random_params(rng: np.random.Generator, tags: Sequence[str], threshold: float = THRESHOLD) -> ModelParameters:
    phi = rng.dirichlet(np.ones(len(tags))) if tags else np.zeros(0)
    return ModelParameters(
        rho=float(rng.uniform(5.0, 30.0)),
        xi=float(rng.uniform(0.0, 0.15)),
        eta=float(rng.uniform(15.0, 60.0)),
        phi={t: float(f) for t, f in zip(tags, phi)},
        threshold=threshold,
    )


def random_heights(rng: np.random.Generator, A: int, threshold: float = THRESHOLD) -> np.ndarray:
    observed = rng.random(A) < 0.5
    return np.where(observed, rng.uniform(threshold, 1200.0, size=A), 0.0)


def single_marker_case(
    ladder: AlleleLadder,
    heights: Mapping[str, np.ndarray],
    profiles: Optional[Dict[str, Dict[str, np.ndarray]]] = None,
    threshold: float = THRESHOLD,
) -> CaseData:
    traces = {t: TraceData(t, threshold, {ladder.marker: np.asarray(z, dtype=float)}) for t, z in heights.items()}
    return CaseData({ladder.marker: ladder}, traces, profiles or {})


class RandomInstance:
    def __init__(self, seed: int, A: int, k: int, n_traces: int = 1):
        rng = np.random.default_rng(seed)
        self.ladder = random_ladder(rng, A)
        self.unknowns = [f"U{i + 1}" for i in range(k)]
        self.heights = {f"T{j}": random_heights(rng, A) for j in range(n_traces)}
        self.params = {t: random_params(rng, self.unknowns) for t in self.heights}
        self.case = single_marker_case(self.ladder, self.heights)
        self.hypothesis = Hypothesis.build("H", [], self.unknowns, list(self.heights))

    @property
    def marker(self) -> str:
        return self.ladder.marker

    def oracle(self, kind: str = "O") -> float:
        return oracle_log_likelihood(self.ladder, self.unknowns, {}, self.heights, self.params, kind)

    def posterior(self, kind: str = "O"):
        return oracle_posterior(self.ladder, self.unknowns, {}, self.heights, self.params, kind)


def instance_grid(count: int) -> List[Tuple[int, int, int]]:
    """(seed, A, k) berulang atas k in {1, 2}, A in {2..5}."""
    grid = []
    for seed in range(count):
        k = 1 + seed % 2
        A = 2 + (seed // 2) % 4
        grid.append((seed, A, k))
    return grid


# ==============================
# Fixture
# ==============================

@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sparse_engine() -> EngineSettings:
    """Semua tabel disimpan sparse setelah kompres."""
    return replace(engine_settings, dense_cutoff=0, compress=True, threads=1)


@pytest.fixture
def dense_engine() -> EngineSettings:
    return replace(engine_settings, compress=False, threads=1)


D2_LABELS = ("15", "16", "17", "18", "19", "20", "22", "23", "24", "25")
D2_FREQS = (0.02, 0.05, 0.20, 0.08, 0.12, 0.14, 0.06, 0.12, 0.13, 0.08)
D2_PEAKS = {"16": 64.0, "17": 96.0, "23": 507.0, "24": 524.0}
D2_PROFILES = {"K1": ("23", "24"), "K2": ("24", "24"), "K3": ("16", "17")}


def write_d2_case(root, hp_unknowns: int = 0, hd_known=("K2", "K3"), hd_unknowns: int = 1, parameters: str = "") -> "Path":
    """File kasus lengkap (CSV + TOML) marker D2S1338 dengan tinggi puncak tabel kasus."""
    from pathlib import Path

    root = Path(root)
    lines = ["marker,allele,frequency"] + [f"D2S1338,{a},{q}" for a, q in zip(D2_LABELS, D2_FREQS)]
    (root / "frequencies.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = ["trace,marker,allele,height"] + [f"MC15,D2S1338,{a},{z:g}" for a, z in D2_PEAKS.items()]
    (root / "peaks.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = ["individual,marker,allele,count"]
    for ind, (a, b) in D2_PROFILES.items():
        if a == b:
            lines.append(f"{ind},D2S1338,{a},2")
        else:
            lines += [f"{ind},D2S1338,{a},1", f"{ind},D2S1338,{b},1"]
    (root / "profiles.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    hd_list = ", ".join(f'"{k}"' for k in hd_known)
    toml = f"""
[data]
frequencies = "frequencies.csv"
peaks = "peaks.csv"
profiles = "profiles.csv"

[traces.MC15]
threshold = 50

[hypotheses.Hp]
known = ["K1", "K2", "K3"]
unknowns = {hp_unknowns}

[hypotheses.Hd]
known = [{hd_list}]
unknowns = {hd_unknowns}

[optimizer]
restarts = 1
maxiter = 600
standard_errors = false

[engine]
threads = 1

[deconvolution]
max_samples = 2000

[output]
dir = "reports"
{parameters}
"""
    path = root / "case.toml"
    path.write_text(toml, encoding="utf-8")
    return path


D2_PARAMETERS = """
[parameters.Hp.MC15]
rho = 15.0
xi = 0.05
eta = 40.0
phi = { K1 = 0.5, K2 = 0.3, K3 = 0.2 }

[parameters.Hd.MC15]
rho = 15.0
xi = 0.05
eta = 40.0
phi = { K2 = 0.3, K3 = 0.2, U1 = 0.5 }
"""


@pytest.fixture
def d2_case_file(tmp_path):
    return write_d2_case(tmp_path, parameters=D2_PARAMETERS)
