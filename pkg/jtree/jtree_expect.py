# jtree/jtree_expect.py
# Ekspektasi produk faktor h_B lewat variabel auxiliary: E{prod h_B} = N_2 / N_1.

import math
from typing import Iterable, Optional, Sequence

from core.engine_settings import EngineSettings
from core.errors import ImpossibleEvidenceError
from jtree.jtree_charge import initialize_charge
from jtree.jtree_network import AuxVariableSpec, DiscreteNetwork, attach_aux_variable
from jtree.jtree_spec import CliqueTreeSpec, extend_with_aux, star_tree


def log_expectation_of_product(
    net: DiscreteNetwork,
    specs: Sequence[AuxVariableSpec],
    subset: Optional[Iterable[int]] = None,
    tree: Optional[CliqueTreeSpec] = None,
    settings: Optional[EngineSettings] = None,
) -> float:
    """
    log E[prod_{B in subset} h_B(X_B)].
    `subset` = index ke `specs` (None = semua). `tree` = clique tree untuk `net`
    tanpa aux; default satu clique untuk semua node.
    """
    extended = net.copy()
    aux_nodes = [attach_aux_variable(extended, spec) for spec in specs]

    if tree is None:
        spec_tree = star_tree(extended)
    else:
        spec_tree = tree
        for node, spec in zip(aux_nodes, specs):
            spec_tree = extend_with_aux(spec_tree, node, spec.parents)

    charge = initialize_charge(extended, spec_tree, settings=settings)
    try:
        n1 = charge.propagate()
    except ImpossibleEvidenceError as e:
        raise ValueError("charge dasar tidak valid (N_1 = 0)") from e

    chosen = range(len(specs)) if subset is None else subset
    for idx in chosen:
        charge.enter_evidence(aux_nodes[idx], [0.0, 1.0], log_scale=math.log(specs[idx].scale))

    try:
        n2 = charge.propagate()
    except ImpossibleEvidenceError:
        return -math.inf
    return n2.log() - n1.log()


def expectation_of_product(
    net: DiscreteNetwork,
    specs: Sequence[AuxVariableSpec],
    subset: Optional[Iterable[int]] = None,
    tree: Optional[CliqueTreeSpec] = None,
    settings: Optional[EngineSettings] = None,
) -> float:
    value = log_expectation_of_product(net, specs, subset, tree, settings)
    return 0.0 if value == -math.inf else math.exp(value)
