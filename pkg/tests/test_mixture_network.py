# tests/test_mixture_network.py
# Rantai genotipe, ladder alel, konstruksi tree slice/triangle/optimal, rumus total size.

import itertools

import numpy as np
import pytest
from scipy import stats

from jtree.jtree_spec import validate_clique_tree
from mixture.mixture_ladder import AlleleLadder
from mixture.mixture_network import aux_node, build_genotype_chain, build_marker_network, n_node
from mixture.mixture_sizes import (
    SIZE_METHODS,
    compressed_slice_size,
    counted_compressed_size,
    counted_tree_size,
    total_size,
    tree_size_report,
)
from mixture.mixture_trees import TREE_METHODS, build_tree

TOL = 1e-12


def assert_valid_tree(mn, method):
    spec = build_tree(mn, method)
    result = validate_clique_tree(mn.network, spec)
    assert result.ok, result.violation
    return spec


# ═══════════════════════════════════════════════════════════════════
# LADDER
# ═══════════════════════════════════════════════════════════════════


class TestAlleleLadder:
    def test_frequencies_must_sum_to_one(self):
        with pytest.raises(ValueError):
            AlleleLadder("M", ("10", "11"), [0.5, 0.4])

    def test_frequencies_positive(self):
        with pytest.raises(ValueError):
            AlleleLadder("M", ("10", "11"), [1.0, 0.0])

    def test_labels_strictly_increasing(self):
        with pytest.raises(ValueError):
            AlleleLadder("M", ("11", "10"), [0.5, 0.5])

    def test_microvariant_order(self):
        ladder = AlleleLadder.from_pairs("TH01", ["10", "9.3", "9"], [0.2, 0.5, 0.3])
        assert ladder.labels == ("9", "9.3", "10")
        np.testing.assert_allclose(ladder.frequencies, [0.3, 0.5, 0.2])

    def test_index_tolerates_number_format(self):
        ladder = AlleleLadder("M", ("16", "17"), [0.4, 0.6])
        assert ladder.index("17.0") == 1
        with pytest.raises(KeyError):
            ladder.index("18")

    def test_tail_sums(self):
        ladder = AlleleLadder("M", ("1", "2", "3"), [0.2, 0.3, 0.5])
        np.testing.assert_allclose(ladder.tail_sums(), [1.0, 0.8, 0.5])


# ═══════════════════════════════════════════════════════════════════
# RANTAI GENOTIPE
# ═══════════════════════════════════════════════════════════════════


class TestGenotypeChain:
    @pytest.mark.parametrize("seed", range(50))
    def test_joint_is_multinomial(self, seed):
        rng = np.random.default_rng(seed)
        A = 1 + seed % 6
        q = rng.dirichlet(np.ones(A)) if A > 1 else np.array([1.0])
        q = np.maximum(q, 1e-3)
        ladder = AlleleLadder("M", tuple(str(i) for i in range(A)), q / q.sum())
        chain, net = build_genotype_chain(ladder, "U1")

        order, joint = net.joint()
        keep = [order.index(v) for v in chain.n_nodes]
        drop = tuple(i for i in range(len(order)) if i not in keep)
        marg = joint.sum(axis=drop)

        for counts in itertools.product(range(3), repeat=A):
            expected = stats.multinomial.pmf(counts, 2, ladder.frequencies) if sum(counts) == 2 else 0.0
            assert marg[counts] == pytest.approx(expected, abs=TOL)

    @pytest.mark.parametrize("seed", range(5))
    def test_count_independent_of_past_given_cumulative(self, seed):
        # n_a _|_ (n_<a, S_<a-1) | S_a-1, dicek langsung dari tabel joint
        rng = np.random.default_rng(100 + seed)
        A = 5
        q = np.maximum(rng.dirichlet(np.ones(A)), 1e-3)
        ladder = AlleleLadder("M", tuple(str(i) for i in range(A)), q / q.sum())
        chain, net = build_genotype_chain(ladder, "U1")
        order, joint = net.joint()

        for a in range(1, A):
            keep = [chain.n_nodes[a], chain.s_nodes[a - 1], *chain.n_nodes[:a], *chain.s_nodes[: a - 1]]
            axes = sorted(order.index(v) for v in keep)
            drop = tuple(i for i in range(len(order)) if i not in axes)
            marg = joint.sum(axis=drop).transpose([axes.index(order.index(v)) for v in keep])

            pair = marg.sum(axis=tuple(range(2, marg.ndim)))
            for idx in np.ndindex(*marg.shape[1:]):
                col = marg[(slice(None),) + idx]
                if col.sum() < 1e-14:
                    continue
                s = idx[0]
                np.testing.assert_allclose(col / col.sum(), pair[:, s] / pair[:, s].sum(), atol=1e-12)

    def test_cumulative_count_ends_at_two(self):
        chain, net = build_genotype_chain(AlleleLadder.uniform("M", 4), "U1")
        order, joint = net.joint()
        last = order.index(chain.s_nodes[-1])
        axes = tuple(i for i in range(len(order)) if i != last)
        np.testing.assert_allclose(joint.sum(axis=axes), [0.0, 0.0, 1.0], atol=TOL)


class TestMarkerNetwork:
    def test_node_naming(self):
        mn = build_marker_network(AlleleLadder.uniform("M", 3), 2, slots=["O0", "D0"])
        assert mn.unknowns == ("U1", "U2")
        assert n_node("U2", 1) in mn.network
        assert mn.network.is_aux(aux_node("D0", 2))

    def test_attachment_parents(self):
        mn = build_marker_network(AlleleLadder.uniform("M", 3), 2)
        assert mn.attachment(0) == (n_node("U1", 0), n_node("U2", 0), n_node("U1", 1), n_node("U2", 1))
        assert mn.attachment(2) == (n_node("U1", 2), n_node("U2", 2))

    def test_known_profile_validated(self):
        ladder = AlleleLadder.uniform("M", 3)
        with pytest.raises(ValueError):
            build_marker_network(ladder, 1, {"K1": [1, 0, 0]})
        mn = build_marker_network(ladder, 1, {"K1": [1, 1, 0]})
        np.testing.assert_array_equal(mn.known_counts["K1"], [1, 1, 0])

    def test_duplicate_unknown_tags(self):
        with pytest.raises(ValueError):
            build_marker_network(AlleleLadder.uniform("M", 3), ["U", "U"])


# ═══════════════════════════════════════════════════════════════════
# CLIQUE TREE
# ═══════════════════════════════════════════════════════════════════


class TestTreeConstruction:
    @pytest.mark.parametrize("method", TREE_METHODS)
    @pytest.mark.parametrize("A,k,N", [(1, 1, 1), (2, 1, 2), (3, 2, 1), (4, 1, 3), (5, 3, 1)])
    def test_trees_validate(self, method, A, k, N):
        mn = build_marker_network(AlleleLadder.uniform("M", A), k, slots=N)
        assert_valid_tree(mn, method)

    @pytest.mark.parametrize("method", TREE_METHODS)
    def test_no_unknowns_aux_only(self, method):
        mn = build_marker_network(AlleleLadder.uniform("M", 4), 0, slots=2)
        spec = assert_valid_tree(mn, method)
        assert all(len(c) == 1 for c in spec.cliques)

    def test_optimal_falls_back_for_two_alleles(self):
        mn = build_marker_network(AlleleLadder.uniform("M", 2), 2)
        spec = assert_valid_tree(mn, "optimal")
        assert spec.label == "triangle"
        assert spec.notes

    def test_unknown_method(self):
        mn = build_marker_network(AlleleLadder.uniform("M", 3), 1)
        with pytest.raises(ValueError):
            build_tree(mn, "bogus")


# ═══════════════════════════════════════════════════════════════════
# TOTAL SIZE
# ═══════════════════════════════════════════════════════════════════


class TestTreeSizes:
    def test_spot_values(self):
        assert total_size("slice", 2, 1, 1) == 117
        assert total_size("triangle", 2, 1, 1) == 99

    @pytest.mark.parametrize("method", ["slice", "triangle"])
    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("A", range(2, 11))
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_counted_matches_formula(self, method, A, k, N):
        assert counted_tree_size(method, A, k, N) == total_size(method, A, k, N)

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("A", range(3, 11))
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_counted_optimal_matches_formula(self, A, k, N):
        assert counted_tree_size("optimal", A, k, N) == total_size("optimal", A, k, N)

    def test_optimal_not_larger_than_triangle(self):
        for A in range(3, 11):
            for k in (1, 2, 3, 4):
                assert total_size("optimal", A, k, 1) <= total_size("triangle", A, k, 1)

    @pytest.mark.parametrize("k", [1, 2])
    @pytest.mark.parametrize("A", range(3, 9))
    def test_counted_compressed_matches_formula(self, A, k):
        assert counted_compressed_size("slice", A, k, 1) == compressed_slice_size(A, k, 1)

    def test_compressed_needs_three_alleles(self):
        with pytest.raises(ValueError):
            compressed_slice_size(2, 1, 1)

    def test_allele_pair_formula(self):
        # (3NA - 1) * (A(A+1)/2)^k
        assert total_size("allele-pair", 2, 1, 1) == 5 * 3

    @pytest.mark.parametrize("method", SIZE_METHODS)
    def test_invalid_dimensions(self, method):
        with pytest.raises(ValueError):
            total_size(method, 1, 1, 1)
        with pytest.raises(ValueError):
            total_size(method, 3, 0, 1)

    def test_report_limits_counted_compression(self):
        rep = tree_size_report("slice", 4, 2, 1, compressed=True, count=True, max_compressed_k=1)
        assert rep.counted_size == rep.total_size
        assert rep.compressed_size == compressed_slice_size(4, 2, 1)
        assert rep.counted_compressed_size is None

    def test_report_allele_pair_not_counted(self):
        rep = tree_size_report("allele-pair", 3, 1, 1, count=True)
        assert rep.counted_size is None
