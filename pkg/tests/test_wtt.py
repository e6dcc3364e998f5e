import pytest
from hypothesis import given, settings, strategies as st

from introimmune.harness import pack_by_name
from introimmune.naive import naive_wtt_run
from introimmune.pairing import pair
from introimmune.wtt import (CofiniteSet, Verdict, WttEvent, WttState, apply_action, extraction_counts,
                             verify_wtt, wtt_requires_attention, wtt_run, wtt_stage,
                             wtt_verify_diagonalization)

from conftest import substrate

CONST1 = dict(functions={0: {"script": "identity"}}, functionals={0: {"script": "const", "value": 1}})


class TestCofiniteSet:
    def test_starts_as_omega(self):
        assert CofiniteSet().markers(6) == [0, 1, 2, 3, 4, 5]

    def test_remove_reports_only_fresh_parts(self):
        a = CofiniteSet()
        assert a.remove(3, 5) == [(3, 5)]
        assert a.remove(1, 8) == [(1, 2), (6, 8)]
        assert a.remove(2, 4) == []
        assert a.removed_intervals() == [(1, 8)]
        assert a.markers(3) == [0, 9, 10]
        assert 0 in a and 5 not in a and a.marker(1) == 9

    @given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 6)), max_size=12))
    def test_matches_plain_set(self, cuts):
        a, plain = CofiniteSet(), set()
        for lo, width in cuts:
            fresh = a.remove(lo, lo + width)
            newly = {y for y in range(lo, lo + width + 1)} - plain
            assert {y for f in fresh for y in range(f[0], f[1] + 1)} == newly
            plain |= newly
        expected = [y for y in range(200) if y not in plain][:20]
        assert a.markers(20) == expected
        assert a.removed_count == len(plain)


class TestRequiresAttention:
    def test_empty_guess_at_n0(self):
        sub = substrate(**CONST1)
        assert wtt_requires_attention((0, 0), WttState(), 3, sub) == Verdict("C2", 0, "")

    def test_interval_condition(self):
        sub = substrate(functions={0: {"script": "const", "value": 4}},
                        functionals={0: {"script": "const", "value": 1}})
        # m_1 = 1 on omega; u = m_1 + 3 and (1, 4] meets A_s
        assert wtt_requires_attention((1, 0), WttState(), 5, sub) == Verdict("C1", 4)

    def test_divergence_under_budget(self):
        sub = substrate(functions={0: {"script": "identity", "cost": 100}},
                        functionals={0: {"script": "const", "value": 1}})
        assert wtt_requires_attention((1, 0), WttState(), 10, sub).kind == "none"

    def test_defeated_guesses_are_skipped(self):
        sub = substrate(**CONST1)
        state = WttState(defeated={(1, 0): {"0"}})
        assert wtt_requires_attention((1, 0), state, 3, sub) == Verdict("C2", 1, "1")
        state = WttState(defeated={(1, 0): {"0", "1"}})
        assert wtt_requires_attention((1, 0), state, 3, sub).kind == "none"

    def test_pair_outside_horizon(self):
        with pytest.raises(ValueError):
            wtt_requires_attention((1, 2), WttState(), 5, substrate(**CONST1))


class TestActions:
    def test_action1_from_omega(self):
        markers = CofiniteSet().markers(10)
        new, fresh, y_min, x, reset = apply_action(WttState(), (0, 0), Verdict("C1", 5), markers)
        assert fresh == ((1, 5),) and y_min == 1 and x is None
        assert new.removed.markers(3) == [0, 6, 7]

    def test_reset_rule_against_hand_replay(self):
        state = WttState(CofiniteSet([(1, 5)]),
                         {(1, 0): {"0"}, (1, 1): {"1"}, (2, 1): {"01"}, (2, 2): {"11"}, (3, 0): {"000"}})
        markers = state.removed.markers(10)            # 0, 6, 7, 8, ...
        new, fresh, y_min, x, reset = apply_action(state, (1, 1), Verdict("C2", 6, "0"), markers)
        assert x == 6 == y_min and fresh == ((6, 6),)
        # hand-executed rule: clear D_{j,i} for j >= 1 with m_{j-1} >= 6, so j >= 2
        assert reset == ((2, 1), (2, 2), (3, 0))
        assert new.defeated == {(1, 0): {"0"}, (1, 1): {"1", "0"}}
        assert new.removed.markers(3) == [0, 7, 8]


def test_no_adversaries_is_vacuous():
    run = wtt_run(substrate(), 40)
    assert all(ev.kind == "no-action" for ev in run.events)
    assert run.state.removed.markers(10) == list(range(10))


def test_const1_adversary_extracts_within_bound():
    run = wtt_run(substrate(**CONST1), 300)
    assert run.state.removed.removed_count > 0
    for n, changes, bound in extraction_counts(run.marker_history(), 4):
        assert changes <= bound
    assert verify_wtt(run.events, run.state, substrate(**CONST1)) == []


def test_stage_zero_markers():
    state, ev = wtt_stage(WttState(), 0, substrate(), horizon=5)
    assert ev.markers == (0, 1, 2, 3, 4)


def test_c1_driver_order():
    pack = pack_by_name("wtt-c1-driver")
    run = wtt_run(pack.substrate, 50)
    kinds = [ev.kind for ev in run.events if ev.kind != "no-action"]
    assert kinds[0] == "action1" and "action2" in kinds
    assert [ev.to_record() for ev in run.events] == \
        [ev.to_record() for ev in naive_wtt_run(pack.substrate, 50)]


class TestDiagonalization:
    def test_empty_table(self):
        assert wtt_verify_diagonalization([], WttState(), substrate()) == []

    def test_const1_replays(self):
        sub = substrate(**CONST1)
        run = wtt_run(sub, 120)
        assert sum(map(len, run.state.defeated.values())) > 0
        assert wtt_verify_diagonalization(run.events, run.state, sub) == []

    def test_tampered_u_is_reported(self):
        sub = substrate(**CONST1)
        run = wtt_run(sub, 60)
        i = next(i for i, ev in enumerate(run.events) if ev.kind == "action2" and ev.pair[0] >= 1
                 and ev.alpha in run.state.defeated.get(ev.pair, ()))
        rec = run.events[i].to_record()
        rec["payload"]["u"] += 1
        events = run.events[:i] + [WttEvent.from_record(rec)] + run.events[i + 1:]
        assert wtt_verify_diagonalization(events, run.state, sub)
        assert verify_wtt(events, run.state, sub)


def test_event_record_round_trip():
    run = wtt_run(substrate(**CONST1), 20)
    for ev in run.events:
        assert WttEvent.from_record(ev.to_record()) == ev


small_functions = st.fixed_dictionaries({
    "script": st.just("affine"), "offset": st.integers(0, 4), "below": st.integers(3, 7)})
small_functionals = st.one_of(
    st.fixed_dictionaries({"script": st.just("const"), "value": st.integers(0, 1)}),
    st.fixed_dictionaries({"script": st.just("probe"),
                           "queries": st.lists(st.sampled_from(["x", "x+1", "x+2", "x+4"]),
                                               min_size=1, max_size=3),
                           "result": st.sampled_from(["one", "xor", "not-first", "or", "and"])}))


@settings(max_examples=25)
@given(st.dictionaries(st.integers(0, 2), small_functions, min_size=1, max_size=2),
       st.dictionaries(st.integers(0, 2), small_functionals, min_size=1, max_size=2))
def test_random_packs(functions, functionals):
    sub = substrate(functions=functions, functionals=functionals)
    run = wtt_run(sub, 14)
    previous = CofiniteSet()
    state = WttState()
    for s in range(14):
        state, _ = wtt_stage(state, s, sub)
        assert all(y not in state.removed for lo, hi in previous.removed_intervals()
                   for y in range(lo, hi + 1))
        previous = state.removed.copy()
    assert verify_wtt(run.events, run.state, sub) == []
    assert [ev.to_record() for ev in run.events] == [ev.to_record() for ev in naive_wtt_run(sub, 14)]
    for key, guesses in run.state.defeated.items():
        assert len(guesses) <= 2 ** key[0]


def test_pair_index_decodes_functional_and_bound():
    sub = substrate(functions={1: {"script": "identity"}}, functionals={2: {"script": "const", "value": 1}})
    run = wtt_run(sub, 40)
    acted = {ev.pair[1] for ev in run.events if ev.kind == "action2"}
    assert acted == {pair(2, 1)}
