from dataclasses import dataclass, field
from typing import Tuple

from config import (
    DENSE_TABLE_CUTOFF,
    RESCALE_LOW,
    RESCALE_HIGH,
    TREE_METHOD,
    COMPRESS_MARKER_TREES,
    THREADS,
    OPT_RESTARTS,
    OPT_FTOL,
    OPT_XTOL,
    OPT_MAXITER,
    OPT_SEED,
    OPT_STANDARD_ERRORS,
    HESSIAN_STEP,
    DECONV_MASS,
    DECONV_MAX_SAMPLES,
    INTERVAL_LEVELS,
)


def _float_list(raw: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in raw.split(",") if x.strip())


@dataclass
class EngineSettings:
    dense_cutoff: int = DENSE_TABLE_CUTOFF
    rescale_low: float = RESCALE_LOW
    rescale_high: float = RESCALE_HIGH
    tree_method: str = TREE_METHOD
    compress: bool = COMPRESS_MARKER_TREES

    # 0 = otomatis
    threads: int = THREADS


@dataclass
class OptimizerSettings:
    restarts: int = OPT_RESTARTS
    ftol: float = OPT_FTOL
    xtol: float = OPT_XTOL
    maxiter: int = OPT_MAXITER
    seed: int = OPT_SEED

    # STANDARD ERRORS
    standard_errors: bool = OPT_STANDARD_ERRORS
    hessian_step: float = HESSIAN_STEP


@dataclass
class DeconvolutionSettings:
    mass: float = DECONV_MASS
    max_samples: int = DECONV_MAX_SAMPLES
    interval_levels: Tuple[float, ...] = field(default_factory=lambda: _float_list(INTERVAL_LEVELS))


engine_settings = EngineSettings()
optimizer_settings = OptimizerSettings()
deconvolution_settings = DeconvolutionSettings()
