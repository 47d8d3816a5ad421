from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import instance_and_partition, instances
from hedonic_fa.core import (
    ContractError,
    Instance,
    Model,
    Partition,
    StructureError,
    TwoPartition,
    UnsupportedModelError,
    Welfare,
    coalition_sw,
    cut_value,
    satisfies_npc,
    social_welfare,
    utility,
    weakly_connected_components,
)
from hedonic_fa.generators import gen_star


def pairwise_value(inst, i, j):
    """v_i(j) as a Fraction, straight from the valuation definition."""
    n = inst.n
    if inst.model is Model.FA:
        return Fraction(1) if j in inst.friends[i] else Fraction(-1, n)
    return Fraction(1, n) if j in inst.friends[i] else Fraction(-1)


class TestUtility:
    def test_example_grand_coalition(self, three_chain):
        gc = Partition.grand(3)
        for i in range(3):
            assert utility(three_chain, gc, i) == Welfare(2, 3)
        assert social_welfare(three_chain, gc).as_fraction() == 2

    def test_singleton_is_zero(self, three_chain):
        assert utility(three_chain, Partition.singletons(3), 1) == Welfare(0, 3)

    def test_ea_friend_and_enemy(self):
        inst = Instance(3, [{1}, set(), set()], Model.EA)
        assert utility(inst, Partition.grand(3), 0).as_fraction() == Fraction(1, 3) - 1

    def test_out_of_range(self, three_chain):
        with pytest.raises(ContractError):
            utility(three_chain, Partition.grand(3), 3)

    def test_partition_size_mismatch(self, three_chain):
        with pytest.raises(ContractError):
            utility(three_chain, Partition.grand(4), 0)


class TestCoalitionWelfare:
    def test_example(self, three_chain):
        assert coalition_sw(three_chain, [0, 1, 2]) == Welfare(6, 3)

    def test_singleton(self, three_chain):
        assert coalition_sw(three_chain, [2]) == Welfare.zero(3)

    def test_mutual_pair(self):
        inst = Instance(4, [{1}, {0}, set(), set()])
        assert coalition_sw(inst, [0, 1]).as_fraction() == 2

    def test_rejects_ea(self):
        with pytest.raises(UnsupportedModelError):
            coalition_sw(Instance(2, [{1}, set()], Model.EA), [0, 1])

    def test_rejects_bad_coalitions(self, three_chain):
        for bad in ([], [0, 0], [5]):
            with pytest.raises(ContractError):
                coalition_sw(three_chain, bad)

    def test_star_grand_coalition(self):
        assert social_welfare(gen_star(4), Partition.grand(4)) == Welfare(3, 4)

    @given(instance_and_partition(max_n=8))
    def test_closed_form_matches_definition(self, ip):
        inst, part = ip
        for c in part.coalitions():
            direct = sum(pairwise_value(inst, i, j) for i in c for j in c if i != j)
            assert coalition_sw(inst, c).as_fraction() == direct

    @given(instance_and_partition(max_n=7, model=Model.EA))
    def test_ea_welfare_is_sum_of_valuations(self, ip):
        inst, part = ip
        direct = sum(pairwise_value(inst, i, j) for c in part.coalitions() for i in c for j in c if i != j)
        assert social_welfare(inst, part).as_fraction() == direct


class TestCut:
    def test_mutual_pair(self):
        inst = Instance(3, [{1}, {0}, set()])
        assert cut_value(inst, [[0], [1]]) == Welfare(6, 3)

    def test_no_edges(self):
        assert cut_value(Instance(3, [set()] * 3), [[0], [1]]) == Welfare(-2, 3)

    def test_empty_remainder(self, three_chain):
        assert cut_value(three_chain, [[0, 1]]) == Welfare.zero(3)
        assert cut_value(three_chain, []) == Welfare.zero(3)

    def test_overlap(self, three_chain):
        with pytest.raises(ContractError):
            cut_value(three_chain, [[0, 1], [1, 2]])

    @given(instance_and_partition(min_n=2, max_n=7))
    def test_cut_identity(self, ip):
        inst, part = ip
        cs = part.coalitions()
        if len(cs) < 2:
            return
        a, b = cs[0], cs[1]
        lhs = cut_value(inst, [a, b]) + coalition_sw(inst, a) + coalition_sw(inst, b)
        assert lhs == coalition_sw(inst, a | b)


class TestWelfare:
    def test_mismatched_denominators(self):
        with pytest.raises(ContractError):
            Welfare(1, 3) + Welfare(1, 4)
        with pytest.raises(ContractError):
            Welfare(1, 3) < Welfare(1, 4)

    @given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 20))
    def test_exact_arithmetic(self, a, b, c, n):
        x, y, z = Welfare(a, n), Welfare(b, n), Welfare(c, n)
        assert (x + y) + z == x + (y + z)
        assert (x <= y) or (y <= x)
        assert (x - y).as_fraction() == Fraction(a - b, n)

    def test_json(self):
        assert Welfare(6, 3).to_json() == {"num": 6, "den": 3}
        assert str(Welfare(-2, 4)) == "-2/4"


class TestInstance:
    def test_validation(self):
        with pytest.raises(ContractError):
            Instance(2, [{0}, set()])
        with pytest.raises(ContractError):
            Instance(2, [{2}, set()])
        with pytest.raises(ContractError):
            Instance(2, [set()])

    def test_neighborhood_and_degree(self, three_chain):
        assert [three_chain.neighborhood_size(i) for i in range(3)] == [1, 2, 1]
        assert [three_chain.edge_degree(i) for i in range(3)] == [1, 3, 2]
        assert three_chain.num_friendships == 3

    def test_with_declaration(self, three_chain):
        d = three_chain.with_declaration(0, {2})
        assert d.friends[0] == frozenset({2}) and d.friends[1:] == three_chain.friends[1:]


class TestPartition:
    def test_rgs_validation(self):
        with pytest.raises(ContractError):
            Partition((1, 0))
        with pytest.raises(ContractError):
            Partition((0, 2))

    def test_from_coalitions_rejects_non_covers(self):
        with pytest.raises(ContractError):
            Partition.from_coalitions(3, [[0], [1]])
        with pytest.raises(ContractError):
            Partition.from_coalitions(3, [[0, 1], [1, 2]])

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=8))
    def test_canonicalization(self, labels):
        p = Partition.from_labels(labels)
        assert Partition.from_labels(p.assignment) == p
        assert Partition.from_coalitions(p.n, p.coalitions()) == p
        same = [labels.index(x) for x in labels]
        assert Partition.from_labels(same) == p

    def test_two_partition_sizes(self):
        with pytest.raises(ContractError):
            TwoPartition.from_sets(4, [0], [1, 2, 3])
        tp = TwoPartition.from_sets(5, [0, 1, 2], [3, 4])
        assert tp.to_json() == {"p1": [0, 1, 2], "p2": [3, 4]}


class TestComponents:
    def test_edgeless(self):
        inst = Instance(3, [set()] * 3)
        assert weakly_connected_components(inst, [0, 1, 2]) == [{0}, {1}, {2}]

    def test_example(self, three_chain):
        assert weakly_connected_components(three_chain) == [{0, 1, 2}]

    def test_octopus_tentacle_tips(self):
        from hedonic_fa.generators import gen_octopus

        inst = gen_octopus(7, 0, [1, 2, 3], [4, 5, 6])
        assert weakly_connected_components(inst, [4, 5, 6]) == [{4}, {5}, {6}]

    @given(instances(max_n=9), st.data())
    def test_components_cover_and_separate(self, inst, data):
        subset = data.draw(st.sets(st.integers(0, inst.n - 1)))
        comps = weakly_connected_components(inst, subset)
        assert set().union(*comps) == subset if comps else not subset
        assert sum(len(c) for c in comps) == len(subset)
        assert [min(c) for c in comps] == sorted(min(c) for c in comps)
        for k, a in enumerate(comps):
            for b in comps[k + 1 :]:
                assert inst.friendships_within(sum(1 << x for x in a | b)) == inst.friendships_within(
                    sum(1 << x for x in a)
                ) + inst.friendships_within(sum(1 << x for x in b))


class TestNPC:
    def test_edgeless_singletons(self):
        assert satisfies_npc(Instance(3, [set()] * 3), Partition.singletons(3))

    def test_split_mutual_pairs(self):
        inst = Instance(4, [{2}, {3}, {0}, {1}])
        res = satisfies_npc(inst, Partition.from_coalitions(4, [[0, 1], [2, 3]]))
        assert not res
        assert set(res.witness) == {frozenset({0, 1}), frozenset({2, 3})}

    def test_partial_flag(self):
        res = satisfies_npc(Instance(4, [set()] * 4), Partition.singletons(4), max_exhaustive=2)
        assert res.ok and res.partial

    def test_structure_error_type(self):
        assert issubclass(StructureError, ValueError)
