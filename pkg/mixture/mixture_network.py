# mixture/mixture_network.py
# Network per marker: rantai genotipe (n_ia, S_ia) per kontributor tak dikenal
# + slot variabel auxiliary per alel (O / D / Q per trace).

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binom

from jtree.jtree_network import AuxVariableSpec, DiscreteNetwork, attach_aux_variable
from mixture.mixture_ladder import AlleleLadder

COUNT_STATES = 3  # jumlah alel tipe a: 0, 1, 2


def n_node(tag: str, a: int) -> str:
    return f"n[{tag}]{a}"


def s_node(tag: str, a: int) -> str:
    return f"S[{tag}]{a}"


def aux_node(slot: str, a: int) -> str:
    return f"{slot}@{a}"


@dataclass(frozen=True)
class GenotypeChain:
    contributor: str
    n_nodes: Tuple[str, ...]
    s_nodes: Tuple[str, ...]


def build_genotype_chain(ladder: AlleleLadder, contributor: str, net: Optional[DiscreteNetwork] = None) -> Tuple[GenotypeChain, DiscreteNetwork]:
    """
    n_i1 ~ Bin(2, q_1); n_ia | S_i,a-1 ~ Bin(2 - S, q_a / sum_{b>=a} q_b);
    S_ia = S_i,a-1 + n_ia (deterministik). Joint (n_i1..n_iA) = multinomial(2; q).
    """
    net = net if net is not None else DiscreteNetwork()
    tails = ladder.tail_sums()
    if np.any(tails <= 0):
        raise ValueError(f"[{ladder.marker}] tail sum frekuensi = 0")
    states = np.arange(COUNT_STATES)

    n_ids, s_ids = [], []
    for a in range(ladder.size):
        p = min(1.0, ladder.frequencies[a] / tails[a])
        n_id, s_id = n_node(contributor, a), s_node(contributor, a)
        if a == 0:
            net.add_node(n_id, COUNT_STATES, (), binom.pmf(states, 2, p))
            net.add_node(s_id, COUNT_STATES, (n_id,), np.eye(COUNT_STATES))
        else:
            prev = s_ids[-1]
            cpt_n = np.stack([binom.pmf(states, 2 - s, p) for s in states])
            net.add_node(n_id, COUNT_STATES, (prev,), cpt_n)
            cpt_s = np.zeros((COUNT_STATES, COUNT_STATES, COUNT_STATES))
            for s in states:
                for n in states:
                    # konfigurasi mustahil (s + n > 2) tetap perlu baris valid
                    cpt_s[s, n, min(s + n, 2)] = 1.0
            net.add_node(s_id, COUNT_STATES, (prev, n_id), cpt_s)
        n_ids.append(n_id)
        s_ids.append(s_id)
    return GenotypeChain(contributor, tuple(n_ids), tuple(s_ids)), net


@dataclass
class MarkerNetwork:
    ladder: AlleleLadder
    network: DiscreteNetwork
    chains: Tuple[GenotypeChain, ...]
    slots: Tuple[str, ...]
    known_counts: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def unknowns(self) -> Tuple[str, ...]:
        return tuple(c.contributor for c in self.chains)

    @property
    def k(self) -> int:
        return len(self.chains)

    @property
    def n_alleles(self) -> int:
        return self.ladder.size

    def attachment(self, a: int) -> Tuple[str, ...]:
        """Parent slot aux alel a: n_a lalu n_{a+1} semua kontributor (alel terakhir: n_A)."""
        cur = tuple(n_node(t, a) for t in self.unknowns)
        if a + 1 < self.n_alleles:
            return cur + tuple(n_node(t, a + 1) for t in self.unknowns)
        return cur

    def aux(self, slot: str, a: int) -> str:
        return aux_node(slot, a)


def build_marker_network(
    ladder: AlleleLadder,
    unknowns: Union[int, Sequence[str]],
    known_profiles: Optional[Mapping[str, Sequence[int]]] = None,
    slots: Union[int, Sequence[str]] = 1,
) -> MarkerNetwork:
    """k rantai genotipe + N slot aux per alel (CPT placeholder 0.5, diikat ulang oleh peak model)."""
    if isinstance(unknowns, int):
        unknowns = [f"U{i + 1}" for i in range(unknowns)]
    unknowns = list(unknowns)
    if len(set(unknowns)) != len(unknowns):
        raise ValueError(f"[{ladder.marker}] tag kontributor tak dikenal harus unik")
    if isinstance(slots, int):
        slots = [f"O{j}" for j in range(slots)]
    slots = list(slots)

    known: Dict[str, np.ndarray] = {}
    for tag, counts in (known_profiles or {}).items():
        arr = np.asarray(counts, dtype=int)
        if arr.shape != (ladder.size,):
            raise ValueError(f"[{ladder.marker}] profil {tag}: alel di luar ladder / panjang salah")
        if np.any(arr < 0) or arr.sum() != 2:
            raise ValueError(f"[{ladder.marker}] profil {tag}: jumlah alel harus 2")
        known[tag] = arr

    net = DiscreteNetwork()
    chains = []
    for tag in unknowns:
        chain, _ = build_genotype_chain(ladder, tag, net)
        chains.append(chain)

    mn = MarkerNetwork(ladder, net, tuple(chains), tuple(slots), known)
    for a in range(ladder.size):
        parents = mn.attachment(a)
        shape = (COUNT_STATES,) * len(parents)
        for slot in slots:
            attach_aux_variable(net, AuxVariableSpec(parents, np.full(shape, 0.5), 1.0), aux_node(slot, a))
    return mn
