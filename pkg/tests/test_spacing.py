from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from introimmune.errors import CapExceeded
from introimmune.harness import pack_by_name
from introimmune.naive import naive_spacing_run
from introimmune.pairing import pair
from introimmune.spacing import (BS, D, SpacingEvent, SpacingState, bs_stage, d_stage,
                                 n_requires_attention, spacing_next, spacing_run, use_bound_bs,
                                 use_bound_d, verify_spacing, viable_strings)
from introimmune.substrate import HaltingOracle, ScriptedFunctional, Substrate

from conftest import substrate

K = HaltingOracle


def bs_index(a, b):
    return 2 * pair(a, b) + 1


def fixed_query(position):
    def ask_once(x):
        yield position
        return 1
    return ScriptedFunctional(ask_once, total=True, name=f"query{position}")


class TestUseBounds:
    def test_oracle_free_bs(self):
        sub = substrate(functions={0: {"script": "const", "value": 0}},
                        functionals={0: {"script": "const", "value": 1}})
        assert use_bound_bs(bs_index(0, 0), 5, K(), sub) == 0

    def test_single_query_bs_matches_sigma_enumeration(self):
        sub = substrate(functions={0: {"script": "const", "value": 1}},
                        functionals={0: {"script": "probe", "queries": ["x+9"]}})
        # answer strings of length <= 1: epsilon stalls, "0" and "1" halt after asking 9
        uses = []
        for sigma in ["", "0", "1"]:
            asked = []

            def ask(q):
                if len(asked) == len(sigma):
                    raise LookupError
                asked.append(q)
                return int(sigma[len(asked) - 1])
            try:
                sub.functional(0).run(0, ask, None)
                uses.extend(asked)
            except LookupError:
                pass
        assert max(uses) == 9
        bound = use_bound_bs(bs_index(0, 0), 0, K(), sub, detail=True)
        assert bound.value == 9 and not bound.disabled

    def test_divergent_bound_function(self):
        sub = substrate(functions={0: {"script": "diverge"}},
                        functionals={0: {"script": "probe", "queries": ["x+9"]}})
        assert use_bound_bs(bs_index(0, 0), 0, K(), sub) == 0

    def test_d_counts_every_subset(self):
        sub = substrate(functionals={0: {"script": "const", "value": 1}})
        bound = use_bound_d(1, 0, 1, K(), sub, exhaustive=True, detail=True)
        assert (bound.value, bound.disabled, bound.covered) == (0, False, 4)

    def test_d_fixed_query(self):
        sub = substrate(functionals={0: {"script": "probe", "queries": ["x+7"]}})
        # every one of the 8 subsets of {0,1,2} halts after asking 7
        assert use_bound_d(1, 0, 2, K(), sub) == (7, False)
        assert use_bound_d(1, 0, 2, K(), sub, exhaustive=True, detail=True).covered == 8

    def test_d_divergence_disables(self):
        sub = substrate(functionals={0: {"script": "diverge-on-zero", "query": "x"}})
        assert use_bound_d(1, 0, 3, K(), sub) == (0, True)

    @pytest.mark.parametrize("y", range(8))
    def test_pruned_and_exhaustive_agree(self, y):
        sub = substrate(functionals={0: {"script": "probe", "queries": ["x", "x+1", "x+3"], "result": "xor"}})
        fast = use_bound_d(1, 1, y, K(), sub, detail=True)
        slow = use_bound_d(1, 1, y, K(), sub, exhaustive=True, detail=True)
        assert (fast.value, fast.disabled) == (slow.value, slow.disabled)
        assert fast.covered == slow.covered == 2 ** (y + 1)


class TestSpacingFunction:
    def test_h0(self):
        assert SpacingState(BS).h == [0]

    def test_oracle_free_gives_identity(self):
        sub = substrate(functions={0: {"script": "const", "value": 1}},
                        functionals={0: {"script": "const", "value": 1}})
        for mode in (BS, D):
            state = SpacingState(mode)
            for s in range(8):
                state = spacing_next(state, s, mode, K(), sub)
            assert state.h == list(range(9))

    def test_recursion_with_a_use_of_nine(self):
        sub = Substrate(functions={0: substrate(functions={0: {"script": "const", "value": 1}}).function(0)},
                        functionals={0: fixed_query(9)})
        state = spacing_next(SpacingState(BS), 0, BS, K(), sub)
        assert state.h == [0, 1]          # only c <= s = 0 counts, and c = 0 is even
        state = spacing_next(state, 1, BS, K(), sub)
        assert state.bounds[(1, 0)].value == 9
        assert state.h == [0, 1, 10]

    def test_d_cap_refuses(self):
        sub = substrate(functionals={0: {"script": "probe", "queries": ["x+30"]}})
        with pytest.raises(CapExceeded):
            spacing_run(sub, 6, D, h_cap=20)


class TestStages:
    def test_default_p_action(self):
        sub = substrate()
        state = spacing_next(SpacingState(BS), 0, BS, K(), sub)
        # P_0 never needs attention (|X| < 0 is impossible); P_2 does
        assert bs_stage("", state, 0, K(), sub) == ("1", 2, "P", None)

    @pytest.mark.parametrize("mode", [BS, D])
    @pytest.mark.parametrize("s", range(3, 7))
    def test_const1_witness_is_least_zero_string(self, mode, s):
        sub = pack_by_name(f"{mode}-const1").substrate
        state = SpacingState(mode)
        for t in range(s):
            state = spacing_next(state, t, mode, K(), sub)
        state = spacing_next(state, s, mode, K(), sub)
        for tape in map("".join, product("01", repeat=s)):
            # brute force: C1 allows any alpha <= tape, C2 needs every tape bit to be 1
            want = None
            for cand in map("".join, product("01", repeat=s)):
                if all(x <= y for x, y in zip(cand, tape)) and tape == "1" * s:
                    want = cand
                    break
            assert n_requires_attention(3, tape, state, s, K(), sub) == want

    def test_requirement_beyond_horizon_not_scanned(self):
        sub = pack_by_name("bs-const1").substrate
        run = spacing_run(sub, 3, BS)
        assert all(ev.kind != "N" or ev.acted <= ev.stage - 1 for ev in run.events)

    def test_bs_const1_tape(self):
        run = spacing_run(pack_by_name("bs-const1").substrate, 8, BS)
        assert run.alpha == "11101111"
        assert [ev.kind for ev in run.events][3] == "N" and run.events[3].witness == "000"

    def test_d_const1_tape(self):
        run = spacing_run(pack_by_name("d-const1").substrate, 8, D)
        assert run.alpha == "11110111" and run.events[4].witness == "0000"

    def test_all_disabled_is_cofinite(self):
        sub = substrate(functionals={a: {"script": "diverge"} for a in range(6)})
        run = spacing_run(sub, 12, D)
        assert run.alpha == "1" * 12
        assert set(run.state.disabled) == {1, 3, 5, 7, 9, 11}

    def test_disabling_is_absorbing(self):
        run = spacing_run(pack_by_name("d-disable").substrate, 10, D)
        assert 1 in run.state.disabled
        at = run.state.disabled[1]
        assert all(ev.acted != 1 for ev in run.events if ev.stage >= at)
        assert verify_spacing(run, pack_by_name("d-disable").substrate) == []

    def test_d_stage_wrapper(self):
        sub = pack_by_name("d-const1").substrate
        state = spacing_next(SpacingState(D), 0, D, K(), sub)
        assert d_stage("", state, 0, K(), sub)[0] == "1"


class TestViable:
    def test_all_ones_tape(self):
        sub = pack_by_name("bs-const1").substrate
        h = list(range(10))
        assert len(viable_strings(2, "11", BS, h, sub, 3)) == 4
        assert viable_strings(3, "111", D, h, sub, 3) == {"".join(p) for p in product("01", repeat=3)}

    def test_all_zero_tape(self):
        sub = substrate(functions={0: {"script": "const", "value": 1}},
                        functionals={1: {"script": "const", "value": 0}})
        assert viable_strings(4, "0000", BS, list(range(10)), sub, 3) == {"0000"}

    def test_refusal(self):
        with pytest.raises(CapExceeded):
            viable_strings(20, "1" * 20, BS, list(range(25)), substrate(), 3)


@pytest.mark.parametrize("name", ["bs-const1", "bs-query", "bs-parity", "d-const1", "d-query",
                                  "d-parity", "d-disable"])
def test_packs_verify_and_agree_with_naive(name):
    pack = pack_by_name(name)
    run = spacing_run(pack.substrate, 10, pack.construction)
    assert verify_spacing(run, pack.substrate) == []
    rows = [(ev.h, ev.kind, ev.acted, ev.witness, ev.bit, ev.disabled) for ev in run.events]
    assert rows == naive_spacing_run(pack.substrate, 10, pack.construction)


def test_tampered_bit_is_caught():
    pack = pack_by_name("bs-const1")
    run = spacing_run(pack.substrate, 6, BS)
    bad = run.events[2]
    run.events[2] = SpacingEvent(bad.stage, bad.mode, bad.h, bad.acted, bad.kind, bad.witness, "0",
                                 bad.disabled, bad.bounds, bad.halting)
    assert verify_spacing(run, pack.substrate)


def test_event_round_trip():
    run = spacing_run(pack_by_name("d-query").substrate, 6, D)
    for ev in run.events:
        assert SpacingEvent.from_record(ev.to_record()) == ev


functionals = st.fixed_dictionaries({
    "script": st.just("probe"),
    "queries": st.lists(st.sampled_from(["x", "x+1", "x+2"]), min_size=0, max_size=2),
    "result": st.sampled_from(["one", "not-first", "or", "and"])})


@settings(max_examples=20)
@given(st.dictionaries(st.integers(0, 3), functionals, min_size=1, max_size=2),
       st.integers(1, 2), st.sampled_from([BS, D]))
def test_random_packs_keep_queries_below_next_gap(fs, cap, mode):
    sub = substrate(functions={b: {"script": "const", "value": cap} for b in range(3)}, functionals=fs)
    run = spacing_run(sub, 8, mode)
    assert verify_spacing(run, sub) == []
    assert all(b > a for a, b in zip(run.state.h, run.state.h[1:]))
    rows = [(ev.h, ev.kind, ev.acted, ev.witness, ev.bit, ev.disabled) for ev in run.events]
    assert rows == naive_spacing_run(sub, 8, mode)
