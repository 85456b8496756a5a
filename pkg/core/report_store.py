# core/report_store.py
# Report JSON + tabel samping CSV, digest input, format angka 12 digit signifikan.

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import pandas as pd

from config import REPORT_DIR, TOOL_VERSION
from logs.log_setup import get_logger

log = get_logger("core.report")

SIGNIFICANT = 12
CSV_FLOAT_FORMAT = f"%.{SIGNIFICANT}g"


@dataclass
class Report:
    command: str
    inputs: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    # nama -> tabel, ditulis sebagai <command>_<nama>.csv
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    tool_version: str = TOOL_VERSION
    created: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S"))

    def payload(self) -> Dict[str, Any]:
        """Urutan field tetap; `created` satu-satunya yang berubah antar run."""
        return {
            "command": self.command,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "parameters": to_plain(self.parameters),
            "results": to_plain(self.results),
            "tables": sorted(self.tables),
            "warnings": list(self.warnings),
            "created": self.created,
        }


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def input_digests(files: Mapping[str, Any]) -> Dict[str, str]:
    out = {}
    for name, path in files.items():
        try:
            out[name] = file_digest(path)
        except OSError as e:
            log.warning("Gagal hitung digest %s: %s", path, e)
            out[name] = "unavailable"
    return out


def format_number(x: float) -> Any:
    """Float -> 12 digit signifikan; non-finite jadi string agar JSON tetap valid."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{SIGNIFICANT}g}")


def to_plain(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return format_number(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def report_dir(out_dir=None) -> Path:
    return Path(out_dir or REPORT_DIR)


def save_report(report: Report, out_dir=None) -> Optional[Path]:
    """Tulis <command>.json + CSV samping. Gagal tulis -> log, return None."""
    target = report_dir(out_dir)
    try:
        os.makedirs(target, exist_ok=True)
        stem = report.command.replace(" ", "_")
        for name, table in report.tables.items():
            table.to_csv(
                target / f"{stem}_{name}.csv",
                index=False,
                float_format=CSV_FLOAT_FORMAT,
                encoding="utf-8",
                lineterminator="\n",
            )
        path = target / f"{stem}.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report.payload(), f, indent=2, ensure_ascii=False)
            f.write("\n")
        return path
    except Exception as e:
        log.error("Gagal simpan report %s: %s", report.command, e)
        return None


def load_report(path) -> Dict[str, Any]:
    if not os.path.exists(path):
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except Exception as e:
        log.error("Gagal load report %s: %s", path, e)
        return {}
