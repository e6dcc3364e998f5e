from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from introimmune.catalog import axiom_code, build_ce_set
from introimmune.ereduce import (EventuallyPeriodicSet, MalformedAxiom, apply_enum_operator,
                                 apply_sequence_axioms, apply_string_axioms, check_prefix_equivalence,
                                 decode_axiom, encode_axiom, hat_transform, is_increasing, tau_string)
from introimmune.pairing import encode_list, pair

from conftest import substrate

EVENS = EventuallyPeriodicSet("", "10")


class TestEnumerationOperator:
    def test_empty_premise_always_fires(self):
        for c in (set(), {1}, set(range(10))):
            assert 5 in apply_enum_operator([encode_axiom(5, ())], c)

    def test_subset_premise(self):
        axioms = [encode_axiom(3, {1, 2})]
        assert apply_enum_operator(axioms, {1}) == frozenset()
        assert apply_enum_operator(axioms, {1, 2}) == {3}

    def test_oracle_ignoring_operator_enumerates_b(self):
        b = {0, 4, 9, 16}
        sub = substrate(ce={0: {"script": "axioms", "axioms": [[x, []] for x in sorted(b)]}})
        for c in (set(), {2, 3}, EVENS):
            assert apply_enum_operator(0, c, budget=100, substrate=sub) == b

    def test_budget_limits_enumeration(self):
        sub = substrate(ce={0: {"script": "axioms", "axioms": [[1, []], [2, []], [3, []]], "rate": 2}})
        assert apply_enum_operator(0, set(), budget=4, substrate=sub) == {1, 2}

    def test_needs_budget_for_ce_sets(self):
        with pytest.raises(ValueError):
            apply_enum_operator(build_ce_set({"script": "empty"}), set())
        with pytest.raises(ValueError):
            apply_enum_operator(0, set(), budget=3)

    def test_catalog_and_module_codes_agree(self):
        assert axiom_code(4, [2, 7]) == encode_axiom(4, {7, 2})
        assert decode_axiom(encode_axiom(4, {7, 2})) == (4, {2, 7})

    def test_malformed_premise(self):
        with pytest.raises(MalformedAxiom):
            decode_axiom(pair(1, encode_list([5, 2])))

    @given(st.lists(st.tuples(st.integers(0, 9), st.frozensets(st.integers(0, 6), max_size=3)), max_size=8),
           st.frozensets(st.integers(0, 6)), st.frozensets(st.integers(0, 6)))
    def test_monotone_in_oracle(self, axioms, c, extra):
        codes = [encode_axiom(x, f) for x, f in axioms]
        small = apply_enum_operator(codes, c)
        assert small <= apply_enum_operator(codes, c | extra)
        assert small == {x for x, f in axioms if f <= c}


class TestHatTransform:
    def test_examples(self):
        assert tau_string((0, 2)) == "101"
        assert tau_string(()) == ""
        assert tau_string((1, 3, 4)) == "01011"

    def test_non_increasing_rejected_or_dropped(self):
        with pytest.raises(ValueError):
            tau_string((2, 2))
        assert hat_transform([((0, 1), 5), ((3, 1), 6)]) == [("11", 5)]

    @given(st.frozensets(st.integers(0, 30)))
    def test_positions_round_trip(self, members):
        seq = tuple(sorted(members))
        tau = tau_string(seq)
        assert tuple(i for i, bit in enumerate(tau) if bit == "1") == seq
        assert is_increasing(seq)


class TestPrefixEquivalence:
    def test_evens(self):
        assert check_prefix_equivalence((0, 2), EVENS) is True
        assert check_prefix_equivalence((1,), EVENS) is False

    def test_empty_sequence(self):
        for c in (EVENS, EventuallyPeriodicSet("0110", "1"), EventuallyPeriodicSet("", "001")):
            assert check_prefix_equivalence((), c) is True

    def test_exhaustive_small(self):
        seqs = [s for k in range(7) for s in combinations(range(6), k)]
        for bits in range(64):
            c = EventuallyPeriodicSet(format(bits, "06b"), "1")
            for seq in seqs:
                principal = []
                x = 0
                while len(principal) < len(seq):
                    if x in c:
                        principal.append(x)
                    x += 1
                assert check_prefix_equivalence(seq, c) == (tuple(principal) == seq)

    def test_finite_set_has_no_principal_function(self):
        with pytest.raises(ValueError):
            EventuallyPeriodicSet("11", "0").principal(3)

    def test_bad_descriptor(self):
        with pytest.raises(ValueError):
            EventuallyPeriodicSet("12", "1")
        with pytest.raises(ValueError):
            EventuallyPeriodicSet("1", "")

    @given(st.lists(st.tuples(st.frozensets(st.integers(0, 8), max_size=4), st.integers(0, 20)), max_size=10),
           st.text(alphabet="01", max_size=9), st.sampled_from(["1", "01", "110"]))
    def test_axiom_sets_agree(self, raw, prefix, period):
        axioms = [(tuple(sorted(s)), x) for s, x in raw]
        c = EventuallyPeriodicSet(prefix, period)
        assert apply_sequence_axioms(axioms, c) == apply_string_axioms(hat_transform(axioms), c)
