# mixture/mixture_sizes.py
# Rumus total size (jumlah state space clique + separator) per metode triangulasi.

from dataclasses import dataclass
from typing import Optional

from core.engine_settings import EngineSettings
from jtree.jtree_charge import initialize_charge
from mixture.mixture_ladder import AlleleLadder
from mixture.mixture_network import build_marker_network
from mixture.mixture_trees import build_tree

SIZE_METHODS = ("slice", "triangle", "optimal", "allele-pair")


@dataclass(frozen=True)
class TreeSizeReport:
    method: str
    A: int
    k: int
    N: int
    total_size: int
    compressed_size: Optional[int] = None
    counted_size: Optional[int] = None
    counted_compressed_size: Optional[int] = None


def _check(A: int, k: int, N: int) -> None:
    if A < 2 or k < 1 or N < 1:
        raise ValueError(f"butuh A >= 2, k >= 1, N >= 1 (A={A}, k={k}, N={N})")


def aux_size(A: int, k: int, N: int) -> int:
    return 3 * N * ((A - 1) * 3 ** (2 * k) + 3 ** k)


def slice_size(A: int, k: int, N: int) -> int:
    return (A - 1) * 3 ** (4 * k) + (A - 2) * 3 ** (2 * k) + aux_size(A, k, N)


def triangle_size(A: int, k: int, N: int) -> int:
    return 2 * (A - 1) * 3 ** (3 * k) + (2 * (A - 1) - 1) * 3 ** (2 * k) + aux_size(A, k, N)


def optimal_size(A: int, k: int, N: int) -> int:
    return (A - 1) * 3 ** (3 * k) + ((4 * k + 1) * (A - 1) - 1) * 3 ** (2 * k) + aux_size(A, k, N)


def allele_pair_size(A: int, k: int, N: int) -> int:
    # node genotipe per kontributor punya A(A+1)/2 state
    return (3 * N * A - 1) * (A * (A + 1) // 2) ** k


def compressed_slice_size(A: int, k: int, N: int) -> int:
    if A < 3:
        raise ValueError("ukuran slice terkompres butuh A >= 3")
    return (A - 3) * 10 ** k + (3 * N * (A - 1) + A) * 6 ** k + 3 * N * 3 ** k


def total_size(method: str, A: int, k: int, N: int) -> int:
    _check(A, k, N)
    if method == "slice":
        return slice_size(A, k, N)
    if method == "triangle":
        return triangle_size(A, k, N)
    if method == "optimal":
        return optimal_size(A, k, N)
    if method == "allele-pair":
        return allele_pair_size(A, k, N)
    raise ValueError(f"metode tidak dikenal: {method!r}")


def _uniform_marker(A: int, k: int, N: int):
    return build_marker_network(AlleleLadder.uniform(f"A{A}", A), k, slots=N)


def counted_tree_size(method: str, A: int, k: int, N: int) -> int:
    """Hitung ukuran tree hasil konstruksi (bukan rumus)."""
    mn = _uniform_marker(A, k, N)
    return build_tree(mn, method).total_size(mn.network)


def counted_compressed_size(method: str, A: int, k: int, N: int, settings: Optional[EngineSettings] = None) -> int:
    """Propagasi sekali dengan CPT aux placeholder lalu hitung support."""
    mn = _uniform_marker(A, k, N)
    charge = initialize_charge(mn.network, build_tree(mn, method), settings=settings)
    charge.propagate()
    return charge.compress().compressed_size


def tree_size_report(
    method: str,
    A: int,
    k: int,
    N: int,
    compressed: bool = False,
    count: bool = False,
    max_compressed_k: Optional[int] = None,
) -> TreeSizeReport:
    """Rumus + (opsional) ukuran terhitung; kompresi terhitung dibatasi k <= max_compressed_k."""
    total = total_size(method, A, k, N)
    comp = compressed_slice_size(A, k, N) if compressed and method == "slice" and A >= 3 else None
    counted = counted_comp = None
    if count and method != "allele-pair":
        counted = counted_tree_size(method, A, k, N)
        if compressed and (max_compressed_k is None or k <= max_compressed_k):
            counted_comp = counted_compressed_size(method, A, k, N)
    return TreeSizeReport(method, A, k, N, total, comp, counted, counted_comp)
