# jtree/jtree_charge.py
# Charge (potensial clique/separator) + propagasi dua fase ala Hugin.
# Konstanta normalisasi dikembalikan sebagai (mantissa, log-scale).

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.engine_settings import EngineSettings, engine_settings
from core.errors import CliqueCoverError, ImpossibleEvidenceError, NonCanonicalChargeError, ValidationError
from jtree.jtree_network import DiscreteNetwork
from jtree.jtree_spec import CliqueTreeSpec, bfs_edges, validate_clique_tree
from jtree.jtree_table import PotentialTable
from logs.log_setup import get_logger

log = get_logger("jtree.charge")

SeedLike = Union[None, int, np.random.Generator]


@dataclass(frozen=True)
class ScaledValue:
    """Nilai = mantissa * exp(log_scale)."""

    mantissa: float
    log_scale: float

    def log(self) -> float:
        if self.mantissa <= 0:
            return -math.inf
        return math.log(self.mantissa) + self.log_scale

    def value(self) -> float:
        if self.mantissa <= 0:
            return 0.0
        return math.exp(self.log())


@dataclass
class _EvidenceEntry:
    vector: np.ndarray
    log_scale: float
    clique: int


@dataclass
class CompressionReport:
    total_size: int
    compressed_size: int
    clique_sizes: List[int]
    separator_sizes: List[int]
    clique_support: Dict[int, np.ndarray] = field(repr=False, default_factory=dict)
    separator_support: Dict[int, np.ndarray] = field(repr=False, default_factory=dict)


class Charge:
    """
    Representasi g(x) = prod zeta_C / prod zeta_S (dikali exp(log_scale)).
    Single-owner: pakai copy() untuk pemakaian paralel.
    """

    def __init__(
        self,
        network: DiscreteNetwork,
        tree: CliqueTreeSpec,
        cliques: List[PotentialTable],
        separators: List[PotentialTable],
        log_scale: float,
        settings: EngineSettings,
    ):
        self.network = network
        self.tree = tree
        self.cliques = cliques
        self.separators = separators
        self.log_scale = log_scale
        self.settings = settings
        self.canonical = False
        self.normalizing_constant: Optional[ScaledValue] = None
        self.evidence: Dict[str, _EvidenceEntry] = {}

        self._bfs = bfs_edges(tree)
        self._sep_index = {frozenset(e): i for i, e in enumerate(tree.edges)}
        self._base = ([c.copy() for c in cliques], [s.copy() for s in separators], log_scale)

    # ==============================
    # Util
    # ==============================

    def copy(self) -> "Charge":
        other = Charge.__new__(Charge)
        other.network = self.network
        other.tree = self.tree
        other.cliques = [c.copy() for c in self.cliques]
        other.separators = [s.copy() for s in self.separators]
        other.log_scale = self.log_scale
        other.settings = self.settings
        other.canonical = self.canonical
        other.normalizing_constant = self.normalizing_constant
        other.evidence = {k: _EvidenceEntry(v.vector.copy(), v.log_scale, v.clique) for k, v in self.evidence.items()}
        other._bfs = self._bfs
        other._sep_index = self._sep_index
        other._base = self._base
        return other

    @property
    def total_size(self) -> int:
        return sum(t.full_size for t in self.cliques) + sum(t.full_size for t in self.separators)

    @property
    def stored_size(self) -> int:
        return sum(t.stored_size for t in self.cliques) + sum(t.stored_size for t in self.separators)

    def _rescale(self, idx: int) -> None:
        table = self.cliques[idx]
        top = table.max()
        if top > 0 and (top < self.settings.rescale_low or top > self.settings.rescale_high):
            table.scale(1.0 / top)
            self.log_scale += math.log(top)

    def _pass(self, src: int, dst: int) -> None:
        sep = self.separators[self._sep_index[frozenset((src, dst))]]
        new = self.cliques[src].project(sep.variables)
        old = sep.dense()
        # 0/0 := 0
        ratio = np.divide(new, old, out=np.zeros_like(new), where=old != 0)
        self.cliques[dst].multiply(sep.variables, ratio)
        sep.assign_dense(new)

    def _read_constant(self) -> ScaledValue:
        # separator state space minimal, seri -> urutan edge pertama
        if self.separators:
            idx = min(range(len(self.separators)), key=lambda i: (self.separators[i].full_size, i))
            mantissa = self.separators[idx].total()
        else:
            mantissa = self.cliques[0].total()
        return ScaledValue(mantissa, self.log_scale)

    # ==============================
    # Propagasi
    # ==============================

    def propagate(self) -> ScaledValue:
        """Collect ke root lalu distribute; return N = sum_x g(x)."""
        for parent, child in reversed(self._bfs):
            self._pass(child, parent)
            self._rescale(parent)
        if not self._bfs:
            self._rescale(0)
        for parent, child in self._bfs:
            self._pass(parent, child)

        constant = self._read_constant()
        if not constant.mantissa > 0 or not math.isfinite(constant.mantissa):
            self.canonical = False
            self.normalizing_constant = None
            raise ImpossibleEvidenceError("konstanta normalisasi nol (evidence mustahil)")
        self.canonical = True
        self.normalizing_constant = constant
        return constant

    # ==============================
    # Evidence
    # ==============================

    def enter_evidence(self, node: str, vector: Sequence[float], log_scale: float = 0.0) -> None:
        """Kalikan likelihood evidence ke satu clique; vektor efektif = vector * exp(log_scale)."""
        if node not in self.network:
            raise ValueError(f"node {node!r} tidak dikenal")
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (self.network.card(node),):
            raise ValueError(f"node {node!r}: panjang evidence {vec.shape} != {self.network.card(node)}")
        if np.any(vec < 0) or not np.all(np.isfinite(vec)):
            raise ValueError(f"node {node!r}: evidence harus non-negatif dan finite")

        top = float(vec.max())
        if top > 0:
            vec = vec / top
            log_scale += math.log(top)

        home = self.tree.home_clique((node,))
        self.cliques[home].multiply((node,), vec)
        self.log_scale += log_scale
        self.canonical = False

        prev = self.evidence.get(node)
        if prev is not None:
            vec = vec * prev.vector
            log_scale += prev.log_scale
        self.evidence[node] = _EvidenceEntry(vec, log_scale, home)

    def retract_evidence(self, node: str) -> None:
        """Cabut evidence: bagi (vektor positif) atau inisialisasi ulang (ada nol)."""
        entry = self.evidence.pop(node, None)
        if entry is None:
            return
        self.canonical = False
        if np.all(entry.vector > 0):
            self.cliques[entry.clique].multiply((node,), 1.0 / entry.vector)
            self.log_scale -= entry.log_scale
            return
        log.debug("[%s] retract via inisialisasi ulang (evidence memuat nol)", node)
        self._reinitialize()

    def _reinitialize(self) -> None:
        cliques, separators, log_scale = self._base
        self.cliques = [c.copy() for c in cliques]
        self.separators = [s.copy() for s in separators]
        self.log_scale = log_scale
        remaining = self.evidence
        self.evidence = {}
        for node, entry in remaining.items():
            self.enter_evidence(node, entry.vector, entry.log_scale)

    # ==============================
    # Query
    # ==============================

    def _require_canonical(self) -> None:
        if not self.canonical:
            raise NonCanonicalChargeError("charge belum dipropagasi sejak modifikasi terakhir")

    def marginal(self, nodes: Sequence[str]) -> np.ndarray:
        """Marginal ternormalisasi atas node dalam satu clique (axis urut `nodes`)."""
        self._require_canonical()
        home = self.tree.home_clique(nodes)
        if home is None:
            raise CliqueCoverError(f"node {tuple(nodes)} tidak termuat dalam satu clique")
        table = self.cliques[home].project(tuple(nodes))
        return table / table.sum()

    def sample_configuration(self, seed: SeedLike = None) -> Dict[str, int]:
        """Forward sampling dari charge kanonik: root dulu, lalu tiap anak diberi separator."""
        self._require_canonical()
        rng = np.random.default_rng(seed)
        assignment: Dict[str, int] = {}
        assignment.update(self.cliques[0].draw(assignment, rng))
        for _, child in self._bfs:
            assignment.update(self.cliques[child].draw(assignment, rng))
        return {v: assignment[v] for v in self.network.nodes}

    # ==============================
    # Kompresi
    # ==============================

    def compress(self) -> CompressionReport:
        """Simpan hanya konfigurasi ber-probabilitas > 0 (butuh satu propagasi)."""
        if not self.canonical:
            self.propagate()
        if any(np.any(e.vector == 0) for e in self.evidence.values()):
            log.warning("kompres dengan evidence bernilai nol: retract setelah ini tidak eksak")

        cutoff = self.settings.dense_cutoff
        clique_support = {}
        separator_support = {}
        for idx, table in enumerate(self.cliques):
            clique_support[idx] = table.nonzero_support()
        for idx, table in enumerate(self.separators):
            separator_support[idx] = table.nonzero_support()

        report = CompressionReport(
            total_size=self.total_size,
            compressed_size=sum(s.size for s in clique_support.values()) + sum(s.size for s in separator_support.values()),
            clique_sizes=[int(s.size) for s in clique_support.values()],
            separator_sizes=[int(s.size) for s in separator_support.values()],
            clique_support=clique_support,
            separator_support=separator_support,
        )

        base_cliques, base_separators, _ = self._base
        for tables, base, support in (
            (self.cliques, base_cliques, clique_support),
            (self.separators, base_separators, separator_support),
        ):
            for idx, table in enumerate(tables):
                if table.variables and table.full_size > cutoff:
                    table.restrict(support[idx])
                    base[idx].restrict(support[idx])
        return report


# ==============================
# Konstruksi charge
# ==============================

def initialize_charge(
    net: DiscreteNetwork,
    tree: CliqueTreeSpec,
    support: Optional[CompressionReport] = None,
    settings: Optional[EngineSettings] = None,
    validate: bool = True,
) -> Charge:
    """
    Tiap CPT dikalikan ke tepat satu clique yang memuat family-nya.
    `support` (hasil compress sebelumnya) membatasi tabel besar ke support tersebut.
    """
    settings = settings or engine_settings
    if validate:
        check = validate_clique_tree(net, tree)
        if not check.ok:
            raise ValidationError(f"clique tree tidak valid: {check.violation}")

    cutoff = settings.dense_cutoff

    def _table(variables: Tuple[str, ...], sup: Optional[np.ndarray]) -> PotentialTable:
        cards = [net.card(v) for v in variables]
        table = PotentialTable(variables, cards)
        if sup is not None and variables and table.full_size > cutoff:
            table = PotentialTable(variables, cards, support=sup)
        return table

    cliques = [
        _table(c, support.clique_support.get(i) if support else None)
        for i, c in enumerate(tree.cliques)
    ]
    separators = [
        _table(s, support.separator_support.get(i) if support else None)
        for i, s in enumerate(tree.separators)
    ]

    for node in net.nodes:
        family = net.family(node)
        home = tree.home_clique(family)
        if home is None:
            raise ValidationError(f"family {family} tidak termuat di clique manapun")
        cliques[home].multiply(family, net.cpt(node))

    charge = Charge(net, tree, cliques, separators, 0.0, settings)
    for idx in range(len(cliques)):
        charge._rescale(idx)
    charge._base = ([c.copy() for c in charge.cliques], [s.copy() for s in charge.separators], charge.log_scale)
    return charge


def propagate(charge: Charge) -> ScaledValue:
    return charge.propagate()


def enter_evidence(charge: Charge, node: str, vector: Sequence[float], log_scale: float = 0.0) -> None:
    charge.enter_evidence(node, vector, log_scale)


def marginal(charge: Charge, nodes: Sequence[str]) -> np.ndarray:
    return charge.marginal(nodes)


def sample_configuration(charge: Charge, seed: SeedLike = None) -> Dict[str, int]:
    return charge.sample_configuration(seed)


def compress(charge: Charge) -> CompressionReport:
    return charge.compress()
