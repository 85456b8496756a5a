# core/errors.py
# Hirarki error: exit_code dipakai langsung oleh CLI.

from typing import Optional


class DnaMixError(Exception):
    exit_code = 3


class ValidationError(DnaMixError, ValueError):
    """Input tidak valid (file, baris, isi). Exit code 2."""

    exit_code = 2

    def __init__(self, message: str, source: Optional[str] = None, line: Optional[int] = None):
        self.source = source
        self.line = line
        if source and line is not None:
            message = f"{source}:{line}: {message}"
        elif source:
            message = f"{source}: {message}"
        super().__init__(message)


class ImpossibleEvidenceError(DnaMixError):
    """Konstanta normalisasi hasil propagasi = 0."""


class NonCanonicalChargeError(DnaMixError):
    pass


class CliqueCoverError(DnaMixError, ValueError):
    pass


class FitFailedError(DnaMixError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial or {}
