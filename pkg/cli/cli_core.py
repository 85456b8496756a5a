# cli/cli_core.py
# Parser argv + run_command: jalankan subcommand, simpan report, petakan exit code.

import argparse
from typing import Optional, Sequence

from cli.cli_commands import handle_command
from core.errors import DnaMixError
from core.report_store import save_report
from diagnostics.diag_peaks import MODES
from inference.inference_simulate import CONDITIONS
from logs.log_setup import get_logger
from mixture.mixture_sizes import SIZE_METHODS
from mixture.mixture_trees import TREE_METHODS

log = get_logger("cli.core")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _case_parser(sub, name: str, help_text: str) -> argparse.ArgumentParser:
    p = sub.add_parser(name, help=help_text)
    p.add_argument("case", help="file kasus TOML")
    p.add_argument("--out", default=None, help="folder report (default: [output] dir atau REPORT_DIR)")
    p.add_argument("--threads", type=int, default=None, help="paralelisme per marker (0 = otomatis)")
    p.add_argument("--method", choices=TREE_METHODS, default=None, help="konstruksi clique tree")
    p.add_argument("--seed", type=int, default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnamix", description="Analisis campuran DNA via junction tree eksak.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = _case_parser(sub, "loglik", "log-likelihood pada psi dari file kasus")
    p.add_argument("--hypothesis", default=None)

    p = _case_parser(sub, "mle", "estimasi psi maksimum likelihood")
    p.add_argument("--hypothesis", default=None, help="default: semua hipotesis")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--no-standard-errors", action="store_true")

    p = _case_parser(sub, "lr", "likelihood ratio Hp vs Hd")
    p.add_argument("--hp", default=None)
    p.add_argument("--hd", default=None)
    p.add_argument("--fixed", action="store_true", help="pakai psi dari file kasus, tanpa fit")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--no-standard-errors", action="store_true")

    p = _case_parser(sub, "deconvolve", "ranking genotipe unknown")
    p.add_argument("--hypothesis", default=None)
    p.add_argument("--mass", type=float, default=None, help="massa target p (default 0.99)")
    p.add_argument("--dropout-column", action="store_true", help="gabung alel tak teramati ke kolom D")
    p.add_argument("--joint", action="store_true", help="ranking gabungan lintas marker")

    p = _case_parser(sub, "simulate", "simulasi tinggi puncak dari model")
    p.add_argument("--hypothesis", default=None)
    p.add_argument("--condition", choices=CONDITIONS, default="none")
    p.add_argument("--replicates", type=int, default=1)

    p = _case_parser(sub, "diagnose", "diagnostik kecocokan model")
    p.add_argument("kind", choices=("qq", "intervals", "preq"))
    p.add_argument("--hypothesis", default=None)
    p.add_argument("--mode", choices=MODES, default=None, help="conditioning untuk qq")
    p.add_argument("--levels", default=None, help="level kuantil, dipisah koma")

    p = _case_parser(sub, "presence-lr", "LR presence-only dengan psi hasil fit tinggi puncak")
    p.add_argument("--hp", default=None)
    p.add_argument("--hd", default=None)

    p = sub.add_parser("treesize", help="ukuran total junction tree (rumus / terhitung)")
    p.add_argument("--method", choices=SIZE_METHODS + ("all",), default="slice")
    p.add_argument("--A", default="10", help="jumlah alel: n, a:b atau daftar koma")
    p.add_argument("--k", default="1", help="jumlah unknown: n, a:b atau daftar koma")
    p.add_argument("--N", default="1", help="jumlah variabel aux per alel")
    p.add_argument("--compressed", action="store_true")
    p.add_argument("--count", action="store_true", help="bangun tree dan hitung ukuran sebenarnya")
    p.add_argument("--out", default=None)
    return parser


def _print_summary(report, path) -> None:
    if "sizes" in report.tables and report.command == "treesize":
        print(report.tables["sizes"].to_csv(index=False, float_format="%.12g"), end="")
    for key, value in report.payload()["results"].items():
        if isinstance(value, (dict, list)):
            continue
        print(f"{key}: {value}")
    for w in report.warnings:
        print(f"peringatan: {w}")
    if path is not None:
        print(f"report: {path}")


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse: 0 untuk --help, 2 untuk argumen salah
        return int(e.code or 0)

    try:
        report = handle_command(args.command, args)
    except DnaMixError as e:
        log.error("%s: %s", args.command, e)
        return e.exit_code
    except ValueError as e:
        log.error("%s: input tidak valid: %s", args.command, e)
        return EXIT_VALIDATION
    except (FloatingPointError, ArithmeticError) as e:
        log.error("%s: gagal numerik: %s", args.command, e)
        return EXIT_NUMERICAL

    path = save_report(report, args.out)
    _print_summary(report, path)
    return EXIT_OK
