# inference/inference_fit.py
# MLE psi per trace (Nelder-Mead di koordinat tak terbatas) + likelihood ratio.

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize, special

from core.engine_settings import EngineSettings, OptimizerSettings, optimizer_settings
from core.errors import FitFailedError
from inference.inference_case import CaseData, Hypothesis
from inference.inference_model import LikelihoodModel
from logs.log_setup import get_logger
from peaks.peak_model import ModelParameters

log = get_logger("inference.fit")

LOG10 = math.log(10.0)
# pengganti -inf untuk objective Nelder-Mead
PENALTY = 1e300


@dataclass
class FitResult:
    hypothesis: str
    params: Dict[str, ModelParameters]
    log_likelihood: float
    iterations: int = 0
    restarts: int = 0
    spread: float = math.nan
    converged: bool = False
    warnings: List[str] = field(default_factory=list)
    standard_errors: Optional[Dict[str, Dict[str, float]]] = None
    theta: Optional[np.ndarray] = None

    @property
    def log10_likelihood(self) -> float:
        return self.log_likelihood / LOG10


@dataclass
class LikelihoodRatio:
    log10_lr: float
    fit_p: FitResult
    fit_d: FitResult


# ==============================
# Koordinat transformasi
# ==============================

class ParameterCoder:
    """
    theta per trace: [log rho, log eta, logit xi, alr(phi) ...].
    alr memakai kontributor terakhir trace sebagai referensi.
    """

    def __init__(self, case: CaseData, hypothesis: Hypothesis):
        self.hypothesis = hypothesis
        self.traces = tuple(t for t in case.traces if t in hypothesis.traces)
        self.thresholds = {t: case.traces[t].threshold for t in self.traces}
        self.members = {t: tuple(hypothesis.included(t)) for t in self.traces}
        self.offsets = {}
        pos = 0
        for t in self.traces:
            self.offsets[t] = pos
            pos += 3 + len(self.members[t]) - 1
        self.dim = pos

        # label unknown bisa ditukar bebas hanya kalau semua unknown ikut di trace yang sama
        unknowns = hypothesis.unknowns
        self.sortable = len(unknowns) > 1 and all(
            all(u in self.members[t] for u in unknowns) or not any(u in self.members[t] for u in unknowns)
            for t in self.traces
        )

    def decode(self, theta: np.ndarray) -> Dict[str, ModelParameters]:
        out = {}
        for t in self.traces:
            o = self.offsets[t]
            members = self.members[t]
            logits = np.append(theta[o + 3:o + 3 + len(members) - 1], 0.0)
            phi = special.softmax(logits)
            out[t] = ModelParameters(
                rho=float(np.exp(theta[o])),
                eta=float(np.exp(theta[o + 1])),
                xi=float(special.expit(theta[o + 2])),
                phi={tag: float(f) for tag, f in zip(members, phi)},
                threshold=self.thresholds[t],
            )
        return self.canonical(out)

    def encode(self, params: Dict[str, ModelParameters]) -> np.ndarray:
        theta = np.zeros(self.dim)
        for t in self.traces:
            o = self.offsets[t]
            p = params[t]
            theta[o] = math.log(p.rho)
            theta[o + 1] = math.log(p.eta)
            theta[o + 2] = special.logit(min(max(p.xi, 1e-12), 1 - 1e-12))
            fr = np.array([max(p.fraction(tag), 1e-12) for tag in self.members[t]])
            theta[o + 3:o + 3 + len(fr) - 1] = np.log(fr[:-1]) - np.log(fr[-1])
        return theta

    def canonical(self, params: Dict[str, ModelParameters]) -> Dict[str, ModelParameters]:
        """Urutkan phi unknown menurun (menurut trace pertama) dengan permutasi yang sama di semua trace."""
        if not self.sortable:
            return params
        unknowns = list(self.hypothesis.unknowns)
        ref = next(t for t in self.traces if unknowns[0] in self.members[t])
        ranked = sorted(unknowns, key=lambda u: -params[ref].fraction(u))
        mapping = dict(zip(ranked, unknowns))
        out = {}
        for t, p in params.items():
            phi = {mapping.get(tag, tag): f for tag, f in p.phi.items()}
            out[t] = p.with_phi({tag: phi[tag] for tag in p.phi})
        return out

    def natural_vector(self, theta: np.ndarray) -> Tuple[List[Tuple[str, str]], np.ndarray]:
        params = self.decode(theta)
        names, values = [], []
        for t in self.traces:
            p = params[t]
            for key, val in (("rho", p.rho), ("eta", p.eta), ("xi", p.xi)):
                names.append((t, key))
                values.append(val)
            for tag in self.members[t]:
                names.append((t, f"phi[{tag}]"))
                values.append(p.fraction(tag))
        return names, np.array(values)


def initial_params(case: CaseData, coder: ParameterCoder) -> Dict[str, ModelParameters]:
    """Titik awal dari momen tinggi puncak teramati: eta ~ var/mean, rho*eta ~ mean."""
    out = {}
    for t in coder.traces:
        z = case.traces[t].observed_heights()
        C = coder.thresholds[t]
        if z.size >= 2:
            mean, var = float(z.mean()), float(z.var())
        elif z.size == 1:
            mean, var = float(z[0]), float(z[0]) ** 2 / 4
        else:
            mean, var = 2.0 * C, C ** 2
        eta = max(var / max(mean, 1e-9), 1.0)
        rho = max(mean / eta, 0.1)
        members = coder.members[t]
        unknowns = [m for m in members if m in coder.hypothesis.unknowns]
        weights = {tag: 1.0 for tag in members}
        # unknown diberi urutan menurun agar simetri label pecah sejak awal
        for i, tag in enumerate(unknowns):
            weights[tag] = 1.0 / (1.0 + 0.25 * i)
        total = sum(weights.values())
        out[t] = ModelParameters(rho, 0.05, eta, {tag: w / total for tag, w in weights.items()}, C)
    return out


# ==============================
# Optimizer
# ==============================

def _objective(model: LikelihoodModel, coder: ParameterCoder):
    def f(theta: np.ndarray) -> float:
        try:
            value = model.log_likelihood(coder.decode(theta))
        except (ValueError, FloatingPointError):
            return PENALTY
        return -value if math.isfinite(value) else PENALTY
    return f


def _hessian(f, theta: np.ndarray, step: float) -> np.ndarray:
    """Hessian central difference dari f (= -loglik)."""
    d = theta.size
    h = np.zeros((d, d))
    f0 = f(theta)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = step
        h[i, i] = (f(theta + ei) - 2 * f0 + f(theta - ei)) / step ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = step
            val = (
                f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4 * step ** 2)
            h[i, j] = h[j, i] = val
    return h


def standard_errors(f, coder: ParameterCoder, theta: np.ndarray, step: float) -> Optional[Dict[str, Dict[str, float]]]:
    """SE skala natural via delta method dari kovarians inv(Hessian(-loglik))."""
    hess = _hessian(f, theta, step)
    if not np.all(np.isfinite(hess)):
        return None
    try:
        np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    cov = np.linalg.inv(hess)

    names, base = coder.natural_vector(theta)
    jac = np.zeros((base.size, theta.size))
    for j in range(theta.size):
        e = np.zeros(theta.size)
        e[j] = step
        jac[:, j] = (coder.natural_vector(theta + e)[1] - coder.natural_vector(theta - e)[1]) / (2 * step)
    var = np.einsum("ij,jk,ik->i", jac, cov, jac)

    out: Dict[str, Dict[str, float]] = {}
    for (trace, key), v in zip(names, var):
        out.setdefault(trace, {})[key] = float(math.sqrt(max(v, 0.0)))
    return out


def maximize_likelihood(
    case: CaseData,
    hypothesis: Hypothesis,
    settings: Optional[OptimizerSettings] = None,
    engine: Optional[EngineSettings] = None,
    start: Optional[Dict[str, ModelParameters]] = None,
    model: Optional[LikelihoodModel] = None,
) -> FitResult:
    settings = settings or optimizer_settings
    model = model or LikelihoodModel(case, hypothesis, settings=engine)
    coder = ParameterCoder(case, hypothesis)
    f = _objective(model, coder)
    rng = np.random.default_rng(settings.seed)

    theta0 = coder.encode(start or initial_params(case, coder))
    warnings: List[str] = []
    if all(case.traces[t].observed_heights().size == 0 for t in coder.traces):
        warnings.append("tidak ada puncak teramati: maksimum di batas ruang parameter")

    best = None
    iterations = 0
    runs = max(1, settings.restarts)
    for r in range(runs):
        x0 = theta0 if r == 0 else theta0 + rng.normal(0.0, 0.5, size=theta0.size)
        res = optimize.minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": settings.xtol,
                "fatol": settings.ftol,
                "maxiter": settings.maxiter,
                "maxfev": settings.maxiter * 2,
                "adaptive": theta0.size > 4,
            },
        )
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
        log.debug("[%s] restart %d: -loglik=%.6f (%s)", hypothesis.name, r, res.fun, res.message)

    # konvergen = restart terbaik selesai normal dan sebaran -loglik di simplex <= ftol
    spread = float(np.ptp(best.final_simplex[1]))
    converged = bool(best.success) and spread <= settings.ftol
    if not converged:
        warnings.append("optimizer tidak konvergen setelah semua restart")
        log.warning("[%s] optimizer tidak konvergen, pakai hasil terbaik", hypothesis.name)

    loglik = -best.fun if best.fun < PENALTY else -math.inf
    result = FitResult(
        hypothesis=hypothesis.name,
        params=coder.decode(best.x),
        log_likelihood=loglik,
        iterations=iterations,
        restarts=runs,
        spread=spread,
        converged=converged,
        warnings=warnings,
        theta=np.asarray(best.x),
    )
    if settings.standard_errors and math.isfinite(loglik):
        result.standard_errors = standard_errors(f, coder, best.x, settings.hessian_step)
        if result.standard_errors is None:
            result.warnings.append("Hessian tidak definit: standard error tidak tersedia")
    return result


def likelihood_ratio(
    case: CaseData,
    hp: Hypothesis,
    hd: Hypothesis,
    settings: Optional[OptimizerSettings] = None,
    engine: Optional[EngineSettings] = None,
) -> LikelihoodRatio:
    fit_p = maximize_likelihood(case, hp, settings, engine)
    fit_d = maximize_likelihood(case, hd, settings, engine)
    failed = [f.hypothesis for f in (fit_p, fit_d) if not math.isfinite(f.log_likelihood)]
    if failed:
        raise FitFailedError(f"fit gagal untuk {', '.join(failed)}", partial={"Hp": fit_p, "Hd": fit_d})
    return LikelihoodRatio(fit_p.log10_likelihood - fit_d.log10_likelihood, fit_p, fit_d)
