# jtree/jtree_spec.py
# Spesifikasi clique tree eksplisit (tanpa pencarian triangulasi) + validator.

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from jtree.jtree_network import DiscreteNetwork


@dataclass(frozen=True)
class CliqueTreeSpec:
    cliques: Tuple[Tuple[str, ...], ...]
    edges: Tuple[Tuple[int, int], ...]
    # nama konstruksi ("slice", "triangle", "optimal", "star", ...)
    label: str = "custom"
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def separators(self) -> Tuple[Tuple[str, ...], ...]:
        out = []
        for i, j in self.edges:
            other = set(self.cliques[j])
            out.append(tuple(v for v in self.cliques[i] if v in other))
        return tuple(out)

    def total_size(self, net: DiscreteNetwork) -> int:
        """Jumlah ukuran state space semua clique + separator."""
        return sum(_space(net, c) for c in self.cliques) + sum(_space(net, s) for s in self.separators)

    def home_clique(self, variables: Sequence[str]) -> Optional[int]:
        """Clique terkecil (pertama kalau seri) yang memuat semua variabel."""
        need = set(variables)
        best = None
        for idx, clique in enumerate(self.cliques):
            if need.issubset(clique) and (best is None or len(clique) < len(self.cliques[best])):
                best = idx
        return best


def _space(net: DiscreteNetwork, variables: Sequence[str]) -> int:
    return int(np.prod([net.card(v) for v in variables], dtype=np.int64))


@dataclass(frozen=True)
class TreeValidation:
    ok: bool
    violation: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def validate_clique_tree(net: DiscreteNetwork, spec: CliqueTreeSpec) -> TreeValidation:
    """Cek tree-ness, running intersection, family coverage. Return pelanggaran pertama."""
    n = len(spec.cliques)
    if n == 0:
        return TreeValidation(False, "tidak ada clique")

    for idx, clique in enumerate(spec.cliques):
        if len(set(clique)) != len(clique):
            return TreeValidation(False, f"clique {idx} memuat node ganda")
        for v in clique:
            if v not in net:
                return TreeValidation(False, f"clique {idx}: node {v!r} tidak ada di network")

    g = nx.Graph()
    g.add_nodes_from(range(n))
    for i, j in spec.edges:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            return TreeValidation(False, f"edge ({i}, {j}) tidak valid")
        g.add_edge(i, j)
    if len(spec.edges) != n - 1 or not nx.is_tree(g):
        return TreeValidation(False, "edge tidak membentuk tree")

    holders: Dict[str, List[int]] = {}
    for idx, clique in enumerate(spec.cliques):
        for v in clique:
            holders.setdefault(v, []).append(idx)

    for node in net.nodes:
        if node not in holders:
            return TreeValidation(False, f"node {node!r} tidak ada di clique manapun")
        if not nx.is_connected(g.subgraph(holders[node])):
            return TreeValidation(False, f"running intersection gagal untuk node {node!r}")

    for node in net.nodes:
        if spec.home_clique(net.family(node)) is None:
            return TreeValidation(False, f"family {net.family(node)} tidak termuat di clique manapun")

    return TreeValidation(True)


def bfs_edges(spec: CliqueTreeSpec, root: int = 0) -> List[Tuple[int, int]]:
    """Pasangan (parent, child) urut BFS dari root."""
    g = nx.Graph()
    g.add_nodes_from(range(len(spec.cliques)))
    g.add_edges_from(spec.edges)
    return list(nx.bfs_edges(g, root))


# ==============================
# Konstruksi sederhana
# ==============================

def star_tree(net: DiscreteNetwork) -> CliqueTreeSpec:
    """Satu clique untuk semua node non-aux, tiap aux + parent jadi clique sendiri."""
    base = tuple(v for v in net.nodes if not net.is_aux(v))
    cliques = [base]
    edges = []
    for aux in net.aux_nodes:
        cliques.append((aux,) + net.parents(aux))
        edges.append((0, len(cliques) - 1))
    return CliqueTreeSpec(tuple(cliques), tuple(edges), label="star")


def extend_with_aux(spec: CliqueTreeSpec, aux: str, parents: Sequence[str]) -> CliqueTreeSpec:
    """Tempel clique {aux} ∪ parents ke clique yang memuat parents."""
    home = spec.home_clique(parents)
    if home is None:
        raise ValueError(f"parent {tuple(parents)} tidak termuat di satu clique")
    cliques = spec.cliques + ((aux,) + tuple(parents),)
    edges = spec.edges + ((home, len(cliques) - 1),)
    return CliqueTreeSpec(cliques, edges, label=spec.label, notes=spec.notes)
