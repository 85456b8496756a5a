# cli/cli_io.py
# Baca/tulis frequencies.csv, peaks.csv, profiles.csv + file kasus TOML.

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from core.engine_settings import (
    DeconvolutionSettings,
    EngineSettings,
    OptimizerSettings,
    deconvolution_settings,
    engine_settings,
    optimizer_settings,
)
from core.errors import ValidationError
from inference.inference_case import CaseData, Hypothesis, TraceData
from logs.log_setup import get_logger
from mixture.mixture_ladder import AlleleLadder, allele_key
from peaks.peak_model import ModelParameters

log = get_logger("cli.io")

PathLike = Union[str, Path]

FREQUENCY_COLUMNS = ("marker", "allele", "frequency")
PEAK_COLUMNS = ("trace", "marker", "allele", "height")
PROFILE_COLUMNS = ("individual", "marker", "allele", "count")

# selisih jumlah frekuensi yang masih dinormalisasi ulang
RENORMALIZE_TOL = 1e-6
EXACT_SUM_TOL = 1e-12
NUMBER_FORMAT = "%.17g"

# baris data pertama ada di baris 2 file (setelah header)
HEADER_LINES = 1


def _line(row_index: int) -> int:
    return int(row_index) + HEADER_LINES + 1


def _read_table(path: PathLike, columns: Tuple[str, ...]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ValidationError("file tidak ditemukan", source=str(path))
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=list(columns))
    except (UnicodeDecodeError, pd.errors.ParserError) as e:
        raise ValidationError(f"CSV tidak bisa dibaca: {e}", source=str(path)) from e
    df.columns = [str(c).strip() for c in df.columns]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ValidationError(f"kolom hilang: {', '.join(missing)}", source=str(path), line=1)
    df = df.loc[:, list(columns)]
    if df.empty:
        return df.reset_index(drop=True)
    return df.apply(lambda s: s.str.strip())


def _number(value: str, what: str, path: PathLike, row: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"{what} bukan angka: {value!r}", source=str(path), line=_line(row)) from None


def _check_duplicates(df: pd.DataFrame, keys: List[str], path: PathLike) -> None:
    norm = df[keys].copy()
    if "allele" in keys:
        norm["allele"] = norm["allele"].map(_allele_norm)
    dup = norm.duplicated(keep="first")
    if dup.any():
        row = int(np.flatnonzero(dup.to_numpy())[0])
        label = "/".join(str(df.iloc[row][k]) for k in keys)
        raise ValidationError(f"baris ganda untuk {label}", source=str(path), line=_line(row))


def _allele_norm(label: str) -> str:
    try:
        return repr(allele_key(label))
    except ValueError:
        return label


def _allele_index(ladder: AlleleLadder, label: str, path: PathLike, row: int) -> int:
    try:
        return ladder.index(label)
    except (KeyError, ValueError):
        raise ValidationError(
            f"alel {label!r} tidak ada di ladder {ladder.marker}", source=str(path), line=_line(row)
        ) from None


# ==============================
# Parser
# ==============================

def parse_frequencies(path: PathLike) -> Dict[str, AlleleLadder]:
    """Ladder per marker (urutan marker = kemunculan pertama di file)."""
    df = _read_table(path, FREQUENCY_COLUMNS)
    _check_duplicates(df, ["marker", "allele"], path)

    ladders: Dict[str, AlleleLadder] = {}
    for marker in pd.unique(df["marker"]):
        part = df[df["marker"] == marker]
        labels, freqs = [], []
        for row, rec in part.iterrows():
            _number(rec["allele"], "label alel", path, row)
            q = _number(rec["frequency"], "frekuensi", path, row)
            if not q > 0:
                raise ValidationError(f"frekuensi {marker}/{rec['allele']} harus > 0", source=str(path), line=_line(row))
            labels.append(rec["allele"])
            freqs.append(q)
        total = math.fsum(freqs)
        # slack relatif: jumlah desimal tepat di batas (mis. 0.999999) tetap lolos
        if abs(total - 1.0) > RENORMALIZE_TOL * (1 + 1e-9):
            raise ValidationError(
                f"jumlah frekuensi {marker} = {total:.12g}, di luar toleransi {RENORMALIZE_TOL:g}",
                source=str(path),
                line=_line(part.index[0]),
            )
        if abs(total - 1.0) > EXACT_SUM_TOL:
            log.info("[%s] frekuensi dinormalisasi ulang (jumlah %.12g)", marker, total)
            freqs = list(np.asarray(freqs) / total)
        ladders[marker] = AlleleLadder.from_pairs(marker, labels, freqs)
    return ladders


def parse_peaks(
    path: PathLike,
    ladders: Mapping[str, AlleleLadder],
    thresholds: Mapping[str, float],
) -> Dict[str, TraceData]:
    """Tinggi per trace/marker; alel yang tidak tercantum (atau tinggi 0) = tidak teramati."""
    df = _read_table(path, PEAK_COLUMNS)
    _check_duplicates(df, ["trace", "marker", "allele"], path)

    traces = {
        t: TraceData(t, float(C), {m: np.zeros(ladder.size) for m, ladder in ladders.items()})
        for t, C in thresholds.items()
    }
    for row, rec in df.iterrows():
        trace, marker = rec["trace"], rec["marker"]
        if trace not in traces:
            raise ValidationError(f"trace {trace!r} tidak didefinisikan di file kasus", source=str(path), line=_line(row))
        if marker not in ladders:
            raise ValidationError(f"marker {marker!r} tidak ada di tabel frekuensi", source=str(path), line=_line(row))
        a = _allele_index(ladders[marker], rec["allele"], path, row)
        z = _number(rec["height"], "tinggi puncak", path, row)
        C = traces[trace].threshold
        if z < 0 or 0 < z < C:
            raise ValidationError(
                f"tinggi {z:g} untuk {marker}/{rec['allele']} di (0, C={C:g})", source=str(path), line=_line(row)
            )
        traces[trace].heights[marker][a] = z
    return traces


def parse_profiles(path: PathLike, ladders: Mapping[str, AlleleLadder]) -> Dict[str, Dict[str, np.ndarray]]:
    """Profil referensi: jumlah alel per marker, total 2."""
    df = _read_table(path, PROFILE_COLUMNS)
    _check_duplicates(df, ["individual", "marker", "allele"], path)

    profiles: Dict[str, Dict[str, np.ndarray]] = {}
    first_row: Dict[Tuple[str, str], int] = {}
    for row, rec in df.iterrows():
        ind, marker = rec["individual"], rec["marker"]
        if marker not in ladders:
            raise ValidationError(f"marker {marker!r} tidak ada di tabel frekuensi", source=str(path), line=_line(row))
        a = _allele_index(ladders[marker], rec["allele"], path, row)
        count = _number(rec["count"], "jumlah alel", path, row)
        if count not in (0.0, 1.0, 2.0):
            raise ValidationError(f"jumlah alel {count:g} harus 0, 1 atau 2", source=str(path), line=_line(row))
        counts = profiles.setdefault(ind, {}).setdefault(marker, np.zeros(ladders[marker].size, dtype=int))
        counts[a] = int(count)
        first_row.setdefault((ind, marker), row)

    for (ind, marker), row in first_row.items():
        total = int(profiles[ind][marker].sum())
        if total != 2:
            raise ValidationError(f"profil {ind}/{marker}: jumlah alel {total} != 2", source=str(path), line=_line(row))
    return profiles


# ==============================
# Writer
# ==============================

def _write_table(df: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=NUMBER_FORMAT, encoding="utf-8", lineterminator="\n")
    return path


def write_frequencies(ladders: Mapping[str, AlleleLadder], path: PathLike) -> Path:
    rows = [
        (m, label, float(q))
        for m, ladder in ladders.items()
        for label, q in zip(ladder.labels, ladder.frequencies)
    ]
    return _write_table(pd.DataFrame(rows, columns=list(FREQUENCY_COLUMNS)), path)


def write_peaks(traces: Mapping[str, TraceData], ladders: Mapping[str, AlleleLadder], path: PathLike) -> Path:
    """Hanya puncak teramati (z > 0) yang ditulis."""
    rows = []
    for t, trace in traces.items():
        for m, ladder in ladders.items():
            z = trace.heights.get(m)
            if z is None:
                continue
            for a in np.flatnonzero(z > 0):
                rows.append((t, m, ladder.labels[a], float(z[a])))
    return _write_table(pd.DataFrame(rows, columns=list(PEAK_COLUMNS)), path)


def write_profiles(
    profiles: Mapping[str, Mapping[str, np.ndarray]],
    ladders: Mapping[str, AlleleLadder],
    path: PathLike,
) -> Path:
    rows = []
    for ind, markers in profiles.items():
        for m, counts in markers.items():
            for a in np.flatnonzero(np.asarray(counts) > 0):
                rows.append((ind, m, ladders[m].labels[a], int(counts[a])))
    return _write_table(pd.DataFrame(rows, columns=list(PROFILE_COLUMNS)), path)


# ==============================
# File kasus (TOML)
# ==============================

@dataclass
class CaseBundle:
    case: CaseData
    hypotheses: Dict[str, Hypothesis]
    optimizer: OptimizerSettings = field(default_factory=lambda: replace(optimizer_settings))
    engine: EngineSettings = field(default_factory=lambda: replace(engine_settings))
    deconvolution: DeconvolutionSettings = field(default_factory=lambda: replace(deconvolution_settings))
    # hipotesis -> trace -> psi tetap (opsional)
    parameters: Dict[str, Dict[str, ModelParameters]] = field(default_factory=dict)
    output_dir: Optional[Path] = None
    source: Optional[Path] = None
    input_files: Dict[str, Path] = field(default_factory=dict)

    def hypothesis(self, name: Optional[str] = None) -> Hypothesis:
        if name is None:
            return next(iter(self.hypotheses.values()))
        if name not in self.hypotheses:
            raise ValidationError(f"hipotesis {name!r} tidak ada (tersedia: {', '.join(self.hypotheses)})")
        return self.hypotheses[name]


def _settings_section(base, section: Mapping, name: str, source: Path):
    known = {f.name for f in fields(base)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise ValidationError(f"[{name}] kunci tidak dikenal: {', '.join(unknown)}", source=str(source))
    values = dict(section)
    if "interval_levels" in values:
        values["interval_levels"] = tuple(float(x) for x in values["interval_levels"])
    return replace(base, **values)


def _parameters_section(raw: Mapping, hypotheses: Mapping[str, Hypothesis], thresholds: Mapping[str, float], source: Path):
    out: Dict[str, Dict[str, ModelParameters]] = {}
    for hname, per_trace in raw.items():
        if hname not in hypotheses:
            raise ValidationError(f"[parameters.{hname}] hipotesis tidak dikenal", source=str(source))
        for trace, p in per_trace.items():
            if trace not in thresholds:
                raise ValidationError(f"[parameters.{hname}.{trace}] trace tidak dikenal", source=str(source))
            try:
                out.setdefault(hname, {})[trace] = ModelParameters(
                    rho=float(p["rho"]),
                    xi=float(p["xi"]),
                    eta=float(p["eta"]),
                    phi={str(k): float(v) for k, v in p.get("phi", {}).items()},
                    threshold=thresholds[trace],
                )
            except (KeyError, ValueError) as e:
                raise ValidationError(f"[parameters.{hname}.{trace}] {e}", source=str(source)) from e
    return out


def load_case_bundle(path: PathLike) -> CaseBundle:
    """
    Baca file kasus TOML: [data] path CSV, [traces.<nama>] threshold,
    [hypotheses.<nama>] known/unknowns/include, [optimizer]/[engine]/[deconvolution],
    [parameters.<hipotesis>.<trace>] psi tetap, [output] dir.
    """
    source = Path(path)
    try:
        with open(source, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ValidationError("file kasus tidak ditemukan", source=str(source)) from None
    except tomllib.TOMLDecodeError as e:
        raise ValidationError(f"TOML tidak valid: {e}", source=str(source)) from e

    base = source.parent
    data = raw.get("data", {})
    for key in ("frequencies", "peaks"):
        if key not in data:
            raise ValidationError(f"[data] butuh kunci {key!r}", source=str(source))
    files = {key: base / data[key] for key in ("frequencies", "peaks", "profiles") if key in data}

    traces_cfg = raw.get("traces", {})
    if not traces_cfg:
        raise ValidationError("minimal satu [traces.<nama>] dengan threshold", source=str(source))
    thresholds = {}
    for t, cfg in traces_cfg.items():
        if "threshold" not in cfg:
            raise ValidationError(f"[traces.{t}] butuh threshold", source=str(source))
        thresholds[t] = float(cfg["threshold"])

    ladders = parse_frequencies(files["frequencies"])
    traces = parse_peaks(files["peaks"], ladders, thresholds)
    profiles = parse_profiles(files["profiles"], ladders) if "profiles" in files else {}
    case = CaseData(ladders, traces, profiles)
    case.validate()

    hyp_cfg = raw.get("hypotheses", {})
    if not hyp_cfg:
        raise ValidationError("minimal satu [hypotheses.<nama>]", source=str(source))
    hypotheses = {}
    for name, cfg in hyp_cfg.items():
        unknowns = cfg.get("unknowns", 0)
        if isinstance(unknowns, int) and unknowns < 0:
            raise ValidationError(f"[hypotheses.{name}] unknowns harus >= 0", source=str(source))
        hyp = Hypothesis.build(
            name,
            known=[str(x) for x in cfg.get("known", [])],
            unknowns=unknowns if isinstance(unknowns, int) else [str(x) for x in unknowns],
            traces=list(cfg.get("traces", thresholds)),
            inclusion=cfg.get("include"),
        )
        hyp.validate(case)
        hypotheses[name] = hyp

    bundle = CaseBundle(
        case=case,
        hypotheses=hypotheses,
        optimizer=_settings_section(optimizer_settings, raw.get("optimizer", {}), "optimizer", source),
        engine=_settings_section(engine_settings, raw.get("engine", {}), "engine", source),
        deconvolution=_settings_section(deconvolution_settings, raw.get("deconvolution", {}), "deconvolution", source),
        parameters=_parameters_section(raw.get("parameters", {}), hypotheses, thresholds, source),
        source=source,
        input_files={"case": source, **files},
    )
    out_dir = raw.get("output", {}).get("dir")
    if out_dir:
        bundle.output_dir = base / out_dir
    log.info("kasus %s: %d marker, %d trace, %d hipotesis", source.name, len(ladders), len(traces), len(hypotheses))
    return bundle
