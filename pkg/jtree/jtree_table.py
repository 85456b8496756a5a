# jtree/jtree_table.py
# Tabel potensial dense / sparse. Sparse: index konfigurasi mixed-radix (C order) + nilai.

from typing import Dict, Optional, Sequence, Tuple

import numpy as np


class PotentialTable:
    __slots__ = ("variables", "cards", "values", "support", "_coords")

    def __init__(
        self,
        variables: Sequence[str],
        cards: Sequence[int],
        values: Optional[np.ndarray] = None,
        support: Optional[np.ndarray] = None,
    ):
        self.variables: Tuple[str, ...] = tuple(variables)
        self.cards: Tuple[int, ...] = tuple(int(c) for c in cards)
        self.support = None if support is None else np.asarray(support, dtype=np.int64)
        if values is None:
            values = np.ones(self.cards) if self.support is None else np.ones(self.support.size)
        self.values = np.asarray(values, dtype=float)
        self._coords = None

    # ==============================
    # Ukuran
    # ==============================

    @property
    def full_size(self) -> int:
        return int(np.prod(self.cards, dtype=np.int64))

    @property
    def stored_size(self) -> int:
        return int(self.values.size)

    @property
    def is_sparse(self) -> bool:
        return self.support is not None

    def copy(self) -> "PotentialTable":
        other = PotentialTable.__new__(PotentialTable)
        other.variables = self.variables
        other.cards = self.cards
        other.support = self.support
        other.values = self.values.copy()
        other._coords = self._coords
        return other

    # ==============================
    # Index helper
    # ==============================

    def _positions(self, variables: Sequence[str]):
        return [self.variables.index(v) for v in variables]

    def coords(self):
        if self._coords is None:
            self._coords = np.unravel_index(self.support, self.cards)
        return self._coords

    def _sub_index(self, variables: Sequence[str], sub_cards: Sequence[int]) -> np.ndarray:
        if not variables:
            return np.zeros(self.values.size, dtype=np.int64)
        coords = self.coords()
        return np.ravel_multi_index([coords[p] for p in self._positions(variables)], tuple(sub_cards))

    def _broadcast(self, variables: Sequence[str], factor: np.ndarray) -> np.ndarray:
        pos = self._positions(variables)
        aligned = factor.transpose(np.argsort(pos))
        shape = [1] * len(self.cards)
        for p in pos:
            shape[p] = self.cards[p]
        return aligned.reshape(shape)

    # ==============================
    # Operasi potensial
    # ==============================

    def multiply(self, variables: Sequence[str], factor) -> None:
        """Kalikan faktor atas subset variabel (axis factor urut `variables`)."""
        factor = np.asarray(factor, dtype=float)
        if not variables:
            self.values = self.values * float(factor)
            return
        if self.support is None:
            self.values = self.values * self._broadcast(variables, factor)
        else:
            self.values = self.values * factor.ravel()[self._sub_index(variables, factor.shape)]

    def project(self, variables: Sequence[str]) -> np.ndarray:
        """Marginal (jumlah) ke subset variabel; hasil dense dengan axis urut `variables`."""
        pos = self._positions(variables)
        sub_cards = tuple(self.cards[p] for p in pos)
        if self.support is None:
            drop = tuple(i for i in range(len(self.cards)) if i not in pos)
            summed = np.asarray(self.values.sum(axis=drop))
            remaining = sorted(pos)
            return summed.transpose([remaining.index(p) for p in pos])
        flat = np.bincount(
            self._sub_index(variables, sub_cards),
            weights=self.values,
            minlength=int(np.prod(sub_cards, dtype=np.int64)),
        )
        return flat.reshape(sub_cards)

    def dense(self) -> np.ndarray:
        if self.support is None:
            return self.values
        flat = np.zeros(self.full_size)
        flat[self.support] = self.values
        return flat.reshape(self.cards)

    def assign_dense(self, table: np.ndarray) -> None:
        """Isi ulang nilai dari tabel dense dengan urutan axis sendiri."""
        table = np.asarray(table, dtype=float)
        if self.support is None:
            self.values = table.reshape(self.cards).copy()
        else:
            self.values = table.ravel()[self.support].copy()

    def total(self) -> float:
        return float(self.values.sum())

    def max(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def scale(self, factor: float) -> None:
        self.values = self.values * factor

    # ==============================
    # Kompresi
    # ==============================

    def nonzero_support(self) -> np.ndarray:
        if self.support is None:
            return np.flatnonzero(self.values.ravel())
        return self.support[self.values != 0]

    def restrict(self, support: np.ndarray) -> None:
        """Simpan sparse hanya di atas support (index flat terurut)."""
        support = np.asarray(support, dtype=np.int64)
        flat = self.dense().ravel()
        self.values = flat[support].copy()
        self.support = support
        self._coords = None

    # ==============================
    # Sampling
    # ==============================

    def draw(self, assignment: Dict[str, int], rng: np.random.Generator) -> Dict[str, int]:
        """Tarik konfigurasi sebanding nilai potensial, konsisten dengan `assignment`."""
        free = [v for v in self.variables if v not in assignment]
        if not free:
            return {}
        if self.support is None:
            sel = tuple(assignment[v] if v in assignment else slice(None) for v in self.variables)
            sub = np.asarray(self.values[sel])
            weights = sub.ravel()
            idx = _pick(weights, rng)
            state = np.unravel_index(idx, sub.shape)
            return {v: int(s) for v, s in zip(free, state)}

        coords = self.coords()
        mask = np.ones(self.values.size, dtype=bool)
        for v, s in assignment.items():
            if v in self.variables:
                mask &= coords[self.variables.index(v)] == s
        rows = np.flatnonzero(mask)
        idx = rows[_pick(self.values[rows], rng)]
        return {v: int(coords[self.variables.index(v)][idx]) for v in free}


def _pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    total = cum[-1] if cum.size else 0.0
    if not total > 0:
        raise ValueError("tidak ada konfigurasi dengan bobot positif")
    idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
    return min(idx, cum.size - 1)
