# cli/cli_commands.py
# Handler tiap subcommand: bangun model dari CaseBundle, jalankan, kembalikan Report.

import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from cli.cli_io import CaseBundle, load_case_bundle, write_peaks
from core.errors import ValidationError
from core.report_store import Report, input_digests, report_dir
from diagnostics.diag_peaks import DIAGNOSTIC_KINDS, MODE_ALL_OTHERS, prediction_intervals, qq_points
from diagnostics.diag_prequential import PREQUENTIAL_KINDS, flagged, monitor_summary, prequential_monitor
from inference.inference_case import Hypothesis
from inference.inference_fit import LOG10, FitResult, likelihood_ratio, maximize_likelihood
from inference.inference_model import KIND_OBSERVED, KIND_PRESENCE, LikelihoodModel
from inference.inference_posterior import (
    DROPOUT_COLUMN,
    GenotypeRanking,
    deconvolve,
    deconvolve_joint,
    posterior_charge,
    presence_probabilities,
)
from inference.inference_simulate import condition_kinds, simulate_case
from logs.log_setup import get_logger
from mixture.mixture_sizes import SIZE_METHODS, tree_size_report
from peaks.peak_model import ModelParameters

log = get_logger("cli.commands")

# kompresi terhitung (propagasi penuh) hanya sampai k ini
MAX_COUNTED_COMPRESSED_K = 3

Params = Dict[str, ModelParameters]


# ==============================
# Helper umum
# ==============================

def parse_range(text: str, name: str) -> List[int]:
    """'3' -> [3], '1:6' -> [1..6], '2,4,8' -> [2, 4, 8]."""
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"--{name}: rentang tidak valid {text!r}") from None
    if not values:
        raise ValidationError(f"--{name}: rentang kosong")
    return values


def psi_dict(params: Params) -> Dict[str, Dict]:
    return {
        t: {"rho": p.rho, "xi": p.xi, "eta": p.eta, "phi": dict(p.phi), "threshold": p.threshold}
        for t, p in params.items()
    }


def fit_dict(fit: FitResult) -> Dict:
    return {
        "log_likelihood": fit.log_likelihood,
        "log10_likelihood": fit.log10_likelihood,
        "iterations": fit.iterations,
        "restarts": fit.restarts,
        "spread": fit.spread,
        "converged": fit.converged,
        "standard_errors": fit.standard_errors,
        "warnings": list(fit.warnings),
    }


def params_table(by_hypothesis: Dict[str, Params], fits: Optional[Dict[str, FitResult]] = None) -> pd.DataFrame:
    rows = []
    for hname, params in by_hypothesis.items():
        se = (fits or {}).get(hname)
        se = se.standard_errors if se is not None else None
        for t, p in params.items():
            values = [("rho", p.rho), ("eta", p.eta), ("xi", p.xi)]
            values += [(f"phi[{tag}]", f) for tag, f in p.phi.items()]
            for key, val in values:
                err = (se or {}).get(t, {}).get(key, math.nan)
                rows.append((hname, t, key, val, err))
    return pd.DataFrame(rows, columns=["hypothesis", "trace", "parameter", "value", "standard_error"])


def _base_report(command: str, bundle: Optional[CaseBundle], seed: Optional[int] = None) -> Report:
    inputs = input_digests(bundle.input_files) if bundle is not None else {}
    return Report(command=command, inputs=inputs, seed=seed)


def _params_for(bundle: CaseBundle, hyp: Hypothesis, fit: bool = True) -> Tuple[Params, Optional[FitResult]]:
    """psi tetap dari file kasus kalau lengkap, kalau tidak MLE."""
    fixed = bundle.parameters.get(hyp.name, {})
    if all(t in fixed for t in hyp.traces):
        return {t: fixed[t] for t in hyp.traces}, None
    if not fit:
        raise ValidationError(f"[parameters.{hyp.name}] tidak lengkap di file kasus; jalankan mle dulu")
    log.info("[%s] psi tidak tersedia, fit MLE", hyp.name)
    result = maximize_likelihood(bundle.case, hyp, bundle.optimizer, bundle.engine)
    return result.params, result


def _hypothesis_pair(bundle: CaseBundle, args) -> Tuple[Hypothesis, Hypothesis]:
    names = list(bundle.hypotheses)
    hp = args.hp or (names[0] if names else None)
    hd = args.hd or (names[1] if len(names) > 1 else None)
    if hp is None or hd is None:
        raise ValidationError("butuh dua hipotesis (--hp dan --hd)")
    return bundle.hypothesis(hp), bundle.hypothesis(hd)


def _with_unknowns(bundle: CaseBundle, name: Optional[str]) -> Hypothesis:
    if name:
        return bundle.hypothesis(name)
    for hyp in bundle.hypotheses.values():
        if hyp.unknowns:
            return hyp
    raise ValidationError("tidak ada hipotesis dengan kontributor unknown")


def apply_overrides(bundle: CaseBundle, args) -> CaseBundle:
    """Flag CLI menimpa file kasus."""
    engine = bundle.engine
    if getattr(args, "threads", None) is not None:
        engine = replace(engine, threads=args.threads)
    if getattr(args, "method", None):
        engine = replace(engine, tree_method=args.method)
    optimizer = bundle.optimizer
    if getattr(args, "seed", None) is not None:
        optimizer = replace(optimizer, seed=args.seed)
    if getattr(args, "restarts", None) is not None:
        optimizer = replace(optimizer, restarts=args.restarts)
    if getattr(args, "no_standard_errors", False):
        optimizer = replace(optimizer, standard_errors=False)
    deconv = bundle.deconvolution
    if getattr(args, "mass", None) is not None:
        deconv = replace(deconv, mass=args.mass)
    if getattr(args, "levels", None):
        deconv = replace(deconv, interval_levels=tuple(float(x) for x in args.levels.split(",")))
    return replace(bundle, engine=engine, optimizer=optimizer, deconvolution=deconv)


# ==============================
# Subcommand
# ==============================

def cmd_loglik(bundle: CaseBundle, args) -> Report:
    hyp = bundle.hypothesis(args.hypothesis)
    params, _ = _params_for(bundle, hyp, fit=False)
    model = LikelihoodModel(bundle.case, hyp, settings=bundle.engine)
    per = model.per_marker(params)
    total = math.fsum(per.values())

    report = _base_report("loglik", bundle)
    report.parameters = {hyp.name: psi_dict(params)}
    report.results = {"hypothesis": hyp.name, "log_likelihood": total, "log10_likelihood": total / LOG10}
    report.tables["markers"] = pd.DataFrame(
        [(m, v, v / LOG10) for m, v in per.items()], columns=["marker", "log_likelihood", "log10_likelihood"]
    )
    return report


def cmd_mle(bundle: CaseBundle, args) -> Report:
    names = [args.hypothesis] if args.hypothesis else list(bundle.hypotheses)
    fits: Dict[str, FitResult] = {}
    for name in names:
        hyp = bundle.hypothesis(name)
        fits[name] = maximize_likelihood(bundle.case, hyp, bundle.optimizer, bundle.engine)
        log.info("[%s] log10 L = %.6f", name, fits[name].log10_likelihood)

    report = _base_report("mle", bundle, bundle.optimizer.seed)
    report.parameters = {n: psi_dict(f.params) for n, f in fits.items()}
    report.results = {n: fit_dict(f) for n, f in fits.items()}
    report.warnings = [f"{n}: {w}" for n, f in fits.items() for w in f.warnings]
    report.tables["parameters"] = params_table({n: f.params for n, f in fits.items()}, fits)
    return report


def _per_marker_table(bundle: CaseBundle, hp: Hypothesis, hd: Hypothesis, pp: Params, pd_: Params, kind: str) -> pd.DataFrame:
    kinds = (kind,)
    lp = LikelihoodModel(bundle.case, hp, kinds=kinds, settings=bundle.engine).per_marker(pp, kind)
    ld = LikelihoodModel(bundle.case, hd, kinds=kinds, settings=bundle.engine).per_marker(pd_, kind)
    rows = [(m, lp[m] / LOG10, ld[m] / LOG10, (lp[m] - ld[m]) / LOG10) for m in lp]
    return pd.DataFrame(rows, columns=["marker", f"log10_L_{hp.name}", f"log10_L_{hd.name}", "log10_LR"])


def cmd_lr(bundle: CaseBundle, args) -> Report:
    hp, hd = _hypothesis_pair(bundle, args)
    report = _base_report("lr", bundle, bundle.optimizer.seed)
    fits: Dict[str, FitResult] = {}
    if args.fixed:
        pp, _ = _params_for(bundle, hp, fit=False)
        pd_, _ = _params_for(bundle, hd, fit=False)
    else:
        lr = likelihood_ratio(bundle.case, hp, hd, bundle.optimizer, bundle.engine)
        pp, pd_ = lr.fit_p.params, lr.fit_d.params
        fits = {hp.name: lr.fit_p, hd.name: lr.fit_d}
        report.warnings = [f"{n}: {w}" for n, f in fits.items() for w in f.warnings]

    table = _per_marker_table(bundle, hp, hd, pp, pd_, KIND_OBSERVED)
    lp = math.fsum(table[f"log10_L_{hp.name}"])
    ld = math.fsum(table[f"log10_L_{hd.name}"])
    report.parameters = {hp.name: psi_dict(pp), hd.name: psi_dict(pd_)}
    report.results = {
        "hp": hp.name,
        "hd": hd.name,
        "log10_likelihood_hp": lp,
        "log10_likelihood_hd": ld,
        "log10_lr": lp - ld,
        "fits": {n: fit_dict(f) for n, f in fits.items()},
    }
    report.tables["markers"] = table
    report.tables["parameters"] = params_table({hp.name: pp, hd.name: pd_}, fits)
    return report


def genotype_text(counts: Sequence[int], columns: Sequence[str]) -> str:
    alleles = [label for label, c in zip(columns, counts) for _ in range(int(c))]
    return "/".join(alleles)


def ranking_table(ranking: GenotypeRanking) -> pd.DataFrame:
    """Satu baris per kombinasi; kolom jumlah alel per unknown ala tabel deconvolution."""
    rows = []
    cumulative = 0.0
    for rank, (key, prob) in enumerate(ranking.rows, start=1):
        cumulative += prob
        row = {"rank": rank}
        for tag, counts in zip(ranking.unknowns, key):
            row[f"{tag}"] = genotype_text(counts, ranking.columns)
            for label, c in zip(ranking.columns, counts):
                row[f"{tag}:{label}"] = int(c)
        row["probability"] = prob
        row["cumulative"] = cumulative
        rows.append(row)
    return pd.DataFrame(rows)


def cmd_deconvolve(bundle: CaseBundle, args) -> Report:
    hyp = _with_unknowns(bundle, args.hypothesis)
    params, fit = _params_for(bundle, hyp)
    model = LikelihoodModel(bundle.case, hyp, settings=bundle.engine)
    mass = bundle.deconvolution.mass
    report = _base_report("deconvolve", bundle, args.seed)
    report.parameters = {hyp.name: psi_dict(params)}
    if fit is not None:
        report.results["fit"] = fit_dict(fit)

    if args.joint:
        joint = deconvolve_joint(
            list(model.markers.values()), params, mass, args.dropout_column, args.seed, bundle.deconvolution
        )
        rows = []
        for rank, (key, prob) in enumerate(joint.rows, start=1):
            row = {"rank": rank}
            for marker, part in zip(joint.markers, key):
                for tag, counts in zip(hyp.unknowns, part):
                    row[f"{marker}:{tag}"] = genotype_text(counts, joint.columns[marker])
            row["probability"] = prob
            rows.append(row)
        report.tables["joint"] = pd.DataFrame(rows)
        report.results.update(
            {"covered_mass": joint.covered_mass, "target_mass": joint.target_mass, "complete": joint.complete, "samples": joint.samples}
        )
        return report

    summary = {}
    presence_rows = []
    for i, (marker, mm) in enumerate(model.markers.items()):
        seed = None if args.seed is None else args.seed + i
        ranking = deconvolve(mm, params, mass, args.dropout_column, seed, bundle.deconvolution)
        report.tables[f"ranking_{marker}"] = ranking_table(ranking)
        summary[marker] = {
            "rows": len(ranking.rows),
            "covered_mass": ranking.covered_mass,
            "guarantee": ranking.guarantee,
            "complete": ranking.complete,
            "samples": ranking.samples,
        }
        if not ranking.complete:
            report.warnings.append(f"{marker}: massa {ranking.covered_mass:.6f} < {mass}")
        probs = presence_probabilities(mm, posterior_charge(mm, params))
        for tag, vec in probs.items():
            for label, p in zip(mm.ladder.labels, vec):
                presence_rows.append((marker, tag, label, p))
    report.results["markers"] = summary
    report.results["dropout_column"] = DROPOUT_COLUMN if args.dropout_column else None
    report.tables["presence"] = pd.DataFrame(presence_rows, columns=["marker", "unknown", "allele", "probability"])
    return report


def cmd_simulate(bundle: CaseBundle, args) -> Report:
    hyp = bundle.hypothesis(args.hypothesis)
    params, fit = _params_for(bundle, hyp)
    kinds = condition_kinds(args.condition)
    model = LikelihoodModel(bundle.case, hyp, kinds=kinds, settings=bundle.engine)
    out = report_dir(args.out or bundle.output_dir)
    rng = np.random.default_rng(args.seed)

    report = _base_report("simulate", bundle, args.seed)
    report.parameters = {hyp.name: psi_dict(params)}
    files = []
    genotype_rows = []
    for r in range(1, args.replicates + 1):
        sim_case, sims = simulate_case(bundle.case, hyp, params, args.condition, rng, bundle.engine, model)
        path = write_peaks(sim_case.traces, sim_case.ladders, out / f"simulate_peaks_{r}.csv")
        files.append(path.name)
        for marker, sim in sims.items():
            for tag, counts in sim.genotypes.items():
                labels = bundle.case.ladders[marker].labels
                genotype_rows.append((r, marker, tag, genotype_text(counts, labels)))
    report.results = {"condition": args.condition, "replicates": args.replicates, "files": files}
    if fit is not None:
        report.results["fit"] = fit_dict(fit)
    report.tables["genotypes"] = pd.DataFrame(genotype_rows, columns=["replicate", "marker", "unknown", "genotype"])
    return report


def cmd_diagnose(bundle: CaseBundle, args) -> Report:
    hyp = bundle.hypothesis(args.hypothesis)
    params, fit = _params_for(bundle, hyp)
    kind = args.kind
    report = _base_report(f"diagnose_{kind}", bundle)
    report.parameters = {hyp.name: psi_dict(params)}
    if fit is not None:
        report.results["fit"] = fit_dict(fit)

    if kind == "qq":
        model = LikelihoodModel(bundle.case, hyp, kinds=DIAGNOSTIC_KINDS, settings=bundle.engine)
        points = qq_points(model, params, args.mode or MODE_ALL_OTHERS)
        table = pd.DataFrame(
            [(q.marker, q.trace, q.allele, q.height, q.u, q.position) for q in points],
            columns=["marker", "trace", "allele", "height", "u", "position"],
        )
        report.tables["points"] = table
        report.results.update({"mode": args.mode or MODE_ALL_OTHERS, "points": len(points)})
        if points:
            ks = stats.kstest(table["u"].to_numpy(), "uniform")
            report.results.update({"ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue)})
        return report

    if kind == "intervals":
        model = LikelihoodModel(bundle.case, hyp, kinds=DIAGNOSTIC_KINDS, settings=bundle.engine)
        levels = bundle.deconvolution.interval_levels
        rows = []
        for mm in model.markers.values():
            for trace in mm.traces:
                for r in prediction_intervals(mm, params, trace, levels, bundle.deconvolution):
                    row = {
                        "marker": r.marker,
                        "trace": r.trace,
                        "allele": r.allele,
                        "observed_height": r.observed_height,
                        "presence": r.presence,
                        "absence": r.absence,
                    }
                    for lv, q in r.quantiles.items():
                        row[f"q{lv:g}"] = math.nan if q is None else q
                    rows.append(row)
        report.tables["intervals"] = pd.DataFrame(rows)
        report.results.update({"levels": list(levels), "rows": len(rows)})
        return report

    if kind == "preq":
        model = LikelihoodModel(bundle.case, hyp, kinds=PREQUENTIAL_KINDS, settings=bundle.engine)
        rows = prequential_monitor(model, params)
        report.tables["monitor"] = pd.DataFrame([vars(r) for r in rows])
        report.results.update(monitor_summary(rows))
        report.results["exceed95"] = len(flagged(rows, "95"))
        report.results["exceed99"] = len(flagged(rows, "99"))
        return report

    raise ValidationError(f"diagnose: jenis tidak dikenal {kind!r}")


def cmd_treesize(args) -> Report:
    methods = list(SIZE_METHODS) if args.method == "all" else [args.method]
    rows = []
    for method in methods:
        for A in parse_range(args.A, "A"):
            for k in parse_range(args.k, "k"):
                for N in parse_range(args.N, "N"):
                    rep = tree_size_report(
                        method, A, k, N, compressed=args.compressed, count=args.count, max_compressed_k=MAX_COUNTED_COMPRESSED_K
                    )
                    rows.append(vars(rep))
    table = pd.DataFrame(rows)
    table = table.dropna(axis=1, how="all")
    report = _base_report("treesize", None)
    report.parameters = {"method": args.method, "A": args.A, "k": args.k, "N": args.N}
    report.results = {"rows": len(rows)}
    if len(rows) == 1:
        report.results["total_size"] = int(rows[0]["total_size"])
    report.tables["sizes"] = table
    return report


def cmd_presence_lr(bundle: CaseBundle, args) -> Report:
    hp, hd = _hypothesis_pair(bundle, args)
    pp, fit_p = _params_for(bundle, hp)
    pd_, fit_d = _params_for(bundle, hd)
    heights = _per_marker_table(bundle, hp, hd, pp, pd_, KIND_OBSERVED)
    presence = _per_marker_table(bundle, hp, hd, pp, pd_, KIND_PRESENCE)

    report = _base_report("presence-lr", bundle, bundle.optimizer.seed)
    report.parameters = {hp.name: psi_dict(pp), hd.name: psi_dict(pd_)}
    report.results = {
        "hp": hp.name,
        "hd": hd.name,
        "log10_lr_heights": math.fsum(heights["log10_LR"]),
        "log10_lr_presence": math.fsum(presence["log10_LR"]),
        "fits": {f.hypothesis: fit_dict(f) for f in (fit_p, fit_d) if f is not None},
    }
    report.tables["heights"] = heights
    report.tables["presence"] = presence
    return report


def handle_command(cmd: str, args) -> Report:
    cmd = cmd.lower()

    if cmd == "treesize":
        return cmd_treesize(args)

    bundle = apply_overrides(load_case_bundle(args.case), args)
    if getattr(args, "out", None) is None and bundle.output_dir is not None:
        args.out = str(bundle.output_dir)

    if cmd == "loglik":
        return cmd_loglik(bundle, args)

    if cmd == "mle":
        return cmd_mle(bundle, args)

    if cmd == "lr":
        return cmd_lr(bundle, args)

    if cmd == "deconvolve":
        return cmd_deconvolve(bundle, args)

    if cmd == "simulate":
        return cmd_simulate(bundle, args)

    if cmd == "diagnose":
        return cmd_diagnose(bundle, args)

    if cmd == "presence-lr":
        return cmd_presence_lr(bundle, args)

    raise ValidationError(f"subcommand tidak dikenal: {cmd}")
