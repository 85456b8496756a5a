# jtree/jtree_network.py
# Bayesian network diskrit (node, parent, CPT) + variabel auxiliary biner.

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

CPT_ROW_TOL = 1e-12
AUX_TOL = 1e-12


class DiscreteNetwork:
    """
    Network diskrit dengan urutan node = urutan penambahan.
    Parent harus sudah ada saat node ditambahkan, jadi graf selalu asiklik.
    CPT node v ber-shape (card parent..., card v).
    """

    def __init__(self):
        self._cards: Dict[str, int] = {}
        self._parents: Dict[str, Tuple[str, ...]] = {}
        self._cpts: Dict[str, np.ndarray] = {}
        self._aux: set = set()

    # ==============================
    # Struktur
    # ==============================

    @property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(self._cards)

    def card(self, node: str) -> int:
        return self._cards[node]

    def parents(self, node: str) -> Tuple[str, ...]:
        return self._parents[node]

    def family(self, node: str) -> Tuple[str, ...]:
        return self._parents[node] + (node,)

    def cpt(self, node: str) -> np.ndarray:
        return self._cpts[node]

    def is_aux(self, node: str) -> bool:
        return node in self._aux

    @property
    def aux_nodes(self) -> Tuple[str, ...]:
        return tuple(v for v in self._cards if v in self._aux)

    def __contains__(self, node: str) -> bool:
        return node in self._cards

    def __len__(self) -> int:
        return len(self._cards)

    def add_node(
        self,
        node: str,
        card: int,
        parents: Sequence[str] = (),
        cpt: Optional[np.ndarray] = None,
        aux: bool = False,
    ) -> str:
        if node in self._cards:
            raise ValueError(f"node {node!r} sudah ada")
        if card < 1:
            raise ValueError(f"node {node!r}: jumlah state harus >= 1")
        parents = tuple(parents)
        for p in parents:
            if p not in self._cards:
                raise ValueError(f"node {node!r}: parent {p!r} belum ada")
            if p in self._aux:
                raise ValueError(f"node {node!r}: node auxiliary {p!r} tidak boleh punya anak")
        if aux and card != 2:
            raise ValueError(f"node auxiliary {node!r} harus biner")

        shape = tuple(self._cards[p] for p in parents) + (card,)
        if cpt is None:
            cpt = np.full(shape, 1.0 / card)
        cpt = np.asarray(cpt, dtype=float)
        if cpt.shape != shape:
            raise ValueError(f"node {node!r}: shape CPT {cpt.shape} != {shape}")
        _check_rows(node, cpt)

        self._cards[node] = int(card)
        self._parents[node] = parents
        self._cpts[node] = cpt
        if aux:
            self._aux.add(node)
        return node

    def copy(self) -> "DiscreteNetwork":
        other = DiscreteNetwork()
        other._cards = dict(self._cards)
        other._parents = dict(self._parents)
        other._cpts = dict(self._cpts)
        other._aux = set(self._aux)
        return other

    def with_cpts(self, updates: Mapping[str, np.ndarray]) -> "DiscreteNetwork":
        """Salinan dangkal dengan CPT diganti (struktur tetap)."""
        other = self.copy()
        for node, cpt in updates.items():
            if node not in self._cards:
                raise ValueError(f"node {node!r} tidak dikenal")
            cpt = np.asarray(cpt, dtype=float)
            if cpt.shape != self._cpts[node].shape:
                raise ValueError(f"node {node!r}: shape CPT {cpt.shape} != {self._cpts[node].shape}")
            _check_rows(node, cpt)
            other._cpts[node] = cpt
        return other

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self._cards)
        for node, parents in self._parents.items():
            g.add_edges_from((p, node) for p in parents)
        return g

    def validate(self) -> None:
        g = self.graph()
        if not nx.is_directed_acyclic_graph(g):
            raise ValueError("network mengandung siklus")
        for node in self._aux:
            if g.out_degree(node):
                raise ValueError(f"node auxiliary {node!r} punya anak")
        for node, cpt in self._cpts.items():
            _check_rows(node, cpt)

    def joint(self) -> Tuple[Tuple[str, ...], np.ndarray]:
        """Tabel joint penuh (hanya untuk network kecil / oracle)."""
        order = self.nodes
        table = np.ones(tuple(self._cards[v] for v in order))
        letters = {v: i for i, v in enumerate(order)}
        for node in order:
            fam = self.family(node)
            table = np.einsum(
                table, list(range(len(order))),
                self._cpts[node], [letters[v] for v in fam],
                list(range(len(order))),
            )
        return order, table


def _check_rows(node: str, cpt: np.ndarray) -> None:
    if not np.all(np.isfinite(cpt)) or np.any(cpt < 0):
        raise ValueError(f"node {node!r}: CPT harus non-negatif dan finite")
    rows = cpt.sum(axis=-1)
    if np.any(np.abs(rows - 1.0) > CPT_ROW_TOL):
        raise ValueError(f"node {node!r}: baris CPT tidak berjumlah 1")


# ==============================
# Auxiliary variable
# ==============================

@dataclass(frozen=True)
class AuxVariableSpec:
    """
    Faktor tak ternormalisasi h_B atas konfigurasi parent B.
    P(Y=1 | x_B) = h_B(x_B) / k_B ; default k_B = max h_B.
    """

    parents: Tuple[str, ...]
    h: np.ndarray
    k: Optional[float] = None

    @property
    def scale(self) -> float:
        if self.k is not None:
            return float(self.k)
        top = float(np.max(self.h)) if np.size(self.h) else 0.0
        # h identik nol: skala bebas, ambil 1
        return top if top > 0 else 1.0


def aux_cpt(spec: AuxVariableSpec, cards: Sequence[int]) -> np.ndarray:
    h = np.asarray(spec.h, dtype=float)
    if h.shape != tuple(cards):
        raise ValueError(f"dimensi h_B {h.shape} != state space parent {tuple(cards)}")
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise ValueError("h_B harus non-negatif dan finite")
    k = spec.scale
    if k <= 0:
        raise ValueError("k_B harus > 0")
    p1 = h / k
    if np.any(p1 > 1.0 + AUX_TOL):
        raise ValueError("h_B/k_B > 1 untuk sebagian konfigurasi (skala tidak valid)")
    p1 = np.minimum(p1, 1.0)
    return np.stack([1.0 - p1, p1], axis=-1)


def attach_aux_variable(net: DiscreteNetwork, spec: AuxVariableSpec, node_id: Optional[str] = None) -> str:
    """Tambah anak biner Y^B ke parent B; return node-id baru."""
    for p in spec.parents:
        if p not in net:
            raise ValueError(f"parent {p!r} tidak ada di network")
    cards = [net.card(p) for p in spec.parents]
    cpt = aux_cpt(spec, cards)
    if node_id is None:
        node_id = f"Y{len(net.aux_nodes)}"
        while node_id in net:
            node_id += "_"
    return net.add_node(node_id, 2, spec.parents, cpt, aux=True)


def attach_all(net: DiscreteNetwork, specs: Iterable[AuxVariableSpec]) -> List[str]:
    return [attach_aux_variable(net, s) for s in specs]
