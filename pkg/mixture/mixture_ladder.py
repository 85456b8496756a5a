# mixture/mixture_ladder.py
# Tangga alel per marker + frekuensi populasi.

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

FREQ_SUM_TOL = 1e-9


def allele_key(label: str) -> float:
    """Urutan numerik label repeat (mis. '9.3' < '10')."""
    return float(label)


@dataclass(frozen=True)
class AlleleLadder:
    marker: str
    labels: Tuple[str, ...]
    frequencies: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.frequencies, dtype=float)
        object.__setattr__(self, "frequencies", q)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.labels) == 0:
            raise ValueError(f"[{self.marker}] ladder kosong")
        if q.shape != (len(self.labels),):
            raise ValueError(f"[{self.marker}] jumlah frekuensi != jumlah alel")
        if np.any(q <= 0):
            raise ValueError(f"[{self.marker}] frekuensi harus > 0")
        if abs(q.sum() - 1.0) > FREQ_SUM_TOL:
            raise ValueError(f"[{self.marker}] jumlah frekuensi {q.sum():.12g} != 1")
        keys = [allele_key(x) for x in self.labels]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ValueError(f"[{self.marker}] label alel harus naik tegas")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        label = str(label)
        if label in self.labels:
            return self.labels.index(label)
        # toleransi format angka: '16.0' == '16'
        key = allele_key(label)
        for i, lab in enumerate(self.labels):
            if allele_key(lab) == key:
                return i
        raise KeyError(f"[{self.marker}] alel {label!r} tidak ada di ladder")

    def tail_sums(self) -> np.ndarray:
        """sum_{b >= a} q_b untuk tiap a."""
        return np.cumsum(self.frequencies[::-1])[::-1]

    @classmethod
    def uniform(cls, marker: str, size: int) -> "AlleleLadder":
        return cls(marker, tuple(str(i + 1) for i in range(size)), np.full(size, 1.0 / size))

    @classmethod
    def from_pairs(cls, marker: str, labels: Sequence[str], freqs: Sequence[float]) -> "AlleleLadder":
        order = sorted(range(len(labels)), key=lambda i: allele_key(labels[i]))
        return cls(marker, tuple(str(labels[i]) for i in order), np.asarray([freqs[i] for i in order], dtype=float))
