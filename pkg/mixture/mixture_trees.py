# mixture/mixture_trees.py
# Konstruksi clique tree per marker: slice, triangle, optimal (split segitiga atas).
# Tiap variabel aux + parent-nya jadi clique sendiri.

from typing import List, Tuple

from jtree.jtree_spec import CliqueTreeSpec
from logs.log_setup import get_logger
from mixture.mixture_network import MarkerNetwork, aux_node, n_node, s_node

log = get_logger("mixture.trees")

TREE_METHODS = ("slice", "triangle", "optimal")


class _TreeBuilder:
    def __init__(self):
        self.cliques: List[Tuple[str, ...]] = []
        self.edges: List[Tuple[int, int]] = []

    def add(self, clique, link_to=None) -> int:
        self.cliques.append(tuple(clique))
        idx = len(self.cliques) - 1
        if link_to is not None:
            self.edges.append((link_to, idx))
        return idx

    def spec(self, label: str, notes=()) -> CliqueTreeSpec:
        return CliqueTreeSpec(tuple(self.cliques), tuple(self.edges), label=label, notes=tuple(notes))


def _attach_aux(b: _TreeBuilder, mn: MarkerNetwork, home: List[int]) -> None:
    """
    Clique aux alel a (a < A) menempel ke clique genotipe home[a] yang memuat n_a, n_{a+1}.
    Aux alel terakhir menempel ke clique aux pertama alel A-1.
    """
    A = mn.n_alleles
    first_aux = {}
    for a in range(A):
        parents = mn.attachment(a)
        for slot in mn.slots:
            if a < A - 1 or A == 1:
                link = home[a]
            else:
                link = first_aux.get(a - 1, home[a - 1])
            idx = b.add((aux_node(slot, a),) + parents, link_to=link)
            first_aux.setdefault(a, idx)


def _aux_only_tree(mn: MarkerNetwork, label: str) -> CliqueTreeSpec:
    # k = 0: tanpa node stokastik, clique aux tunggal berantai (separator kosong)
    b = _TreeBuilder()
    prev = None
    for a in range(mn.n_alleles):
        for slot in mn.slots:
            prev = b.add((aux_node(slot, a),), link_to=prev)
    if not b.cliques:
        b.add(())
    return b.spec(label)


def _single_allele_tree(mn: MarkerNetwork, label: str) -> CliqueTreeSpec:
    b = _TreeBuilder()
    root = b.add([v for t in mn.unknowns for v in (s_node(t, 0), n_node(t, 0))])
    _attach_aux(b, mn, [root])
    return b.spec(label)


def build_tree_slice(mn: MarkerNetwork) -> CliqueTreeSpec:
    """Slice a = {S_a, S_{a+1}, n_a, n_{a+1}} semua kontributor, berantai."""
    if mn.k == 0:
        return _aux_only_tree(mn, "slice")
    if mn.n_alleles == 1:
        return _single_allele_tree(mn, "slice")
    b = _TreeBuilder()
    home = []
    prev = None
    for a in range(mn.n_alleles - 1):
        clique = [v for t in mn.unknowns for v in (s_node(t, a), s_node(t, a + 1), n_node(t, a), n_node(t, a + 1))]
        prev = b.add(clique, link_to=prev)
        home.append(prev)
    _attach_aux(b, mn, home)
    return b.spec("slice")


def _lower(mn: MarkerNetwork, a: int):
    return [v for t in mn.unknowns for v in (s_node(t, a), n_node(t, a), n_node(t, a + 1))]


def _upper(mn: MarkerNetwork, a: int):
    return [v for t in mn.unknowns for v in (s_node(t, a), s_node(t, a + 1), n_node(t, a + 1))]


def build_tree_triangle(mn: MarkerNetwork) -> CliqueTreeSpec:
    """Tiap slice dipecah jadi segitiga bawah L_a dan atas U_a: L_1 - U_1 - L_2 - U_2 - ..."""
    if mn.k == 0:
        return _aux_only_tree(mn, "triangle")
    if mn.n_alleles == 1:
        return _single_allele_tree(mn, "triangle")
    b = _TreeBuilder()
    home = []
    prev = None
    for a in range(mn.n_alleles - 1):
        low = b.add(_lower(mn, a), link_to=prev)
        home.append(low)
        prev = b.add(_upper(mn, a), link_to=low)
    _attach_aux(b, mn, home)
    return b.spec("triangle")


def _upper_split(mn: MarkerNetwork, a: int, j: int):
    """Bagian ke-j segitiga atas: kontributor < j sudah maju ke a+1, > j masih di a."""
    out = []
    for i, t in enumerate(mn.unknowns):
        if i < j:
            out += [s_node(t, a + 1), n_node(t, a + 1)]
        elif i == j:
            out += [s_node(t, a), s_node(t, a + 1), n_node(t, a + 1)]
        else:
            out += [s_node(t, a), n_node(t, a + 1)]
    return out


def build_tree_optimal(mn: MarkerNetwork) -> CliqueTreeSpec:
    """
    Triangle tree dengan U_a dipecah k clique berukuran 2k+1 (urutan eliminasi
    S_A, S_{A-1}, S_1, n_1, {n_a, S_a}, n_{A-1}, n_A). A < 3 -> fallback triangle.
    """
    if mn.k == 0:
        return _aux_only_tree(mn, "optimal")
    if mn.n_alleles < 3:
        log.warning("[%s] optimal tree butuh A >= 3 (A=%d), fallback ke triangle", mn.ladder.marker, mn.n_alleles)
        spec = build_tree_triangle(mn)
        return CliqueTreeSpec(spec.cliques, spec.edges, label="triangle", notes=("fallback: optimal -> triangle (A < 3)",))
    b = _TreeBuilder()
    home = []
    prev = None
    for a in range(mn.n_alleles - 1):
        low = b.add(_lower(mn, a), link_to=prev)
        home.append(low)
        prev = low
        for j in range(mn.k):
            prev = b.add(_upper_split(mn, a, j), link_to=prev)
    _attach_aux(b, mn, home)
    return b.spec("optimal")


def build_tree(mn: MarkerNetwork, method: str) -> CliqueTreeSpec:
    if method == "slice":
        return build_tree_slice(mn)
    if method == "triangle":
        return build_tree_triangle(mn)
    if method == "optimal":
        return build_tree_optimal(mn)
    raise ValueError(f"metode tree tidak dikenal: {method!r}")
