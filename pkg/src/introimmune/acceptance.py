"""The acceptance suite: every finite-stage property, one named criterion each.

Criteria return ``(passed, detail)``. Details never include timings so two
runs print identical reports; runtime limits are enforced separately.
"""

import random
import time
from dataclasses import dataclass
from itertools import combinations

from .ereduce import (EventuallyPeriodicSet, apply_sequence_axioms, apply_string_axioms,
                      check_prefix_equivalence, hat_transform, EquivalenceViolation)
from .harness import (builtin_adversaries, builtin_manifest, cross_check, mutated_stage, run_pack)
from .qreduce import pi01_membership, q_check_reduction, q_run, q_verify, q_witness_pi01
from .spacing import BS, D, use_bound_d, verify_spacing, viable_strings
from .substrate import HaltingOracle
from .wtt import PhiCache, WttState, extraction_counts, wtt_run, wtt_stage, wtt_verify_diagonalization

SEED = 20240101


@dataclass
class Criterion:
    key: str
    title: str
    check: object
    limit: float | None = None         # seconds


@dataclass
class Outcome:
    key: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.key}: {self.detail}"


def _first(bad, k):
    return f"; e.g. {bad[:k]}" if bad else ""


def _wtt_packs():
    return builtin_adversaries("wtt")


def _wtt_runs(stages, fault):
    stage_fn = mutated_stage("wtt") if fault else None
    return [(p, wtt_run(p.substrate, stages, stage_fn=stage_fn)) for p in _wtt_packs()]


def _within(old, new):
    """Every interval of ``old`` lies inside one interval of ``new``."""
    j = 0
    targets = new.removed_intervals()
    for lo, hi in old.removed_intervals():
        while j < len(targets) and targets[j][1] < lo:
            j += 1
        if j == len(targets) or not targets[j][0] <= lo <= hi <= targets[j][1]:
            return False
    return True


def pi01_shape(fault=False, stages=1000):
    stage_fn = mutated_stage("wtt") if fault else wtt_stage
    bad, steps = [], 0
    for pack in _wtt_packs():
        state, phis = WttState(), PhiCache(pack.substrate)
        for s in range(stages):
            new, _ = stage_fn(state, s, pack.substrate, s, 32, phis)
            steps += 1
            if not _within(state.removed, new.removed):
                bad.append(f"{pack.name} stage {s + 1}")
            state = new
    return not bad, f"{steps} stage transitions, {len(bad)} violations{_first(bad, 3)}"


def extraction_bound(fault=False, stages=1000):
    bad, rows = [], []
    for pack, run in _wtt_runs(stages, fault):
        history = run.marker_history()
        for n, changes, bound in extraction_counts(history, 4):
            rows.append(changes)
            if changes > bound:
                bad.append(f"{pack.name} marker {n}: {changes} > {bound}")
    return not bad, f"{len(rows)} (pack, n) pairs, max changes {max(rows)}, {len(bad)} over bound{_first(bad, 3)}"


def defeated_replay(fault=False, stages=1000):
    bad, replayed = [], 0
    for pack, run in _wtt_runs(stages, fault):
        replayed += sum(len(v) for v in run.state.defeated.values())
        bad.extend(f"{pack.name}: {p}" for p in wtt_verify_diagonalization(run.events, run.state, pack.substrate))
    return not bad, f"{replayed} defeated guesses replayed, {len(bad)} failures{_first(bad, 2)}"


def spacing_containment(fault=False):
    bad, bounds = [], 0
    for pack in builtin_adversaries("bs") + builtin_adversaries("d"):
        stages = 25 if pack.construction == BS else 12
        result = run_pack(pack, stages, stage_fn=mutated_stage(pack.construction) if fault else None)
        bounds += sum(len(ev.bounds) for ev in result.run.events)
        bad.extend(f"{pack.name}: {p}" for p in verify_spacing(result.run, pack.substrate, result.oracle))
    return not bad, f"{bounds} use-bound simulations checked, {len(bad)} violations{_first(bad, 2)}"


VIABLE_C = 3
VIABLE_T = 10


def viable_counting(fault=False):
    """Exhaustive viable sets for the constant-1 adversary in both modes."""
    bad, summary = [], []
    for name, mode, start in (("bs-const1", BS, VIABLE_C), ("d-const1", D, VIABLE_C + 1)):
        pack = next(p for p in builtin_adversaries(mode) if p.name == name)
        result = run_pack(pack, VIABLE_T + 1, stage_fn=mutated_stage(mode) if fault else None)
        run = result.run
        sizes = {t: len(viable_strings(t, run.alpha[:t], mode, run.state.h, pack.substrate, VIABLE_C))
                 for t in range(start, VIABLE_T + 1)}
        acted_c = False
        for t in range(start, VIABLE_T):
            ev = run.events[t]              # the stage that writes alpha(t)
            if ev.kind == "N" and ev.acted == VIABLE_C:
                acted_c = True
                if not sizes[t + 1] < sizes[t]:
                    bad.append(f"{name}: N_{VIABLE_C} acts at stage {t + 1} but |V| goes {sizes[t]} -> {sizes[t + 1]}")
            elif ev.kind != "N" and sizes[t + 1] > sizes[t]:
                bad.append(f"{name}: |V| grows {sizes[t]} -> {sizes[t + 1]} at action-free stage {t + 1}")
        if not acted_c:
            bad.append(f"{name}: N_{VIABLE_C} never acted in the window")
        summary.append(f"{mode} {[sizes[t] for t in sorted(sizes)]}")
    return not bad, f"|V_t| for t from the window start to {VIABLE_T}: {'; '.join(summary)}{_first(bad, 2)}"


def subset_count(fault=False):
    pack = next(p for p in builtin_adversaries(D) if p.name == "d-query")
    oracle = HaltingOracle()
    bad = []
    for y in range(11):
        bound = use_bound_d(3, 0, y, oracle, pack.substrate, exhaustive=True, detail=True)
        if bound.covered != 2 ** (y + 1) or bound.simulations != 2 ** (y + 1):
            bad.append(f"y={y}: {bound.simulations} simulated, {bound.covered} covered")
    return not bad, f"y = 0..10 each enumerate exactly 2^(y+1) subsets{_first(bad, 2)}"


def q_machine(fault=False, stages=200):
    bad, checked = [], 0
    for pack in builtin_adversaries("q"):
        stage_fn = mutated_stage("q") if fault else None
        for prefix in range(1, stages + 1):
            oracle = HaltingOracle()
            run = q_run(pack.substrate, prefix, oracle, stage_fn=stage_fn)
            problems = q_verify(run.events, run.states, run.sigma, pack.substrate, HaltingOracle())
            checked += 1
            if problems:
                bad.append(f"{pack.name} S={prefix}: {problems[0]}")
                break
    return not bad, f"{checked} run prefixes verified, {len(bad)} failing packs{_first(bad, 2)}"


def q_positive(fault=False, horizon=200, samples=10):
    manifest = builtin_manifest("pi01-sets")
    sub = manifest.substrate
    rng = random.Random(SEED)
    bad, checked = [], 0
    for index in sorted(sub.ce_sets):
        a_prefix = pi01_membership(index, horizon, sub, HaltingOracle())
        for _ in range(samples):
            b_prefix = {x for x in sorted(a_prefix) if rng.random() < 0.5}
            try:
                report = q_check_reduction(a_prefix, b_prefix, lambda x: q_witness_pi01(index, x, sub),
                                           horizon, oracle=HaltingOracle())
            except ValueError as err:
                bad.append(f"W_{index}: {err}")
                continue
            checked += report.checked
            bad.extend(f"W_{index} x={x}" for x, *_ in report.discrepancies)
    return not bad, f"{checked} (set, subset, x) triples, {len(bad)} discrepancies{_first(bad, 3)}"


def hat_equivalence(fault=False, width=10):
    sequences = [seq for k in range(width + 1) for seq in combinations(range(width), k)]
    bad = 0
    checked = 0
    for bits in range(2 ** width):
        prefix = format(bits, f"0{width}b")
        c = EventuallyPeriodicSet(prefix, "1")
        for seq in sequences:
            checked += 1
            try:
                check_prefix_equivalence(seq, c)
            except EquivalenceViolation:
                bad += 1
    # axiom-level agreement on a few fixed axiom sets
    rng = random.Random(SEED)
    for _ in range(50):
        axioms = [(seq, rng.randrange(20)) for seq in rng.sample(sequences, 12)]
        c = EventuallyPeriodicSet(format(rng.randrange(2 ** width), f"0{width}b"), "1")
        if apply_sequence_axioms(axioms, c) != apply_string_axioms(hat_transform(axioms), c):
            bad += 1
    return not bad, f"{checked} (sequence, set) pairs and 50 axiom sets, {bad} discrepancies"


def oracle_equivalence(fault=False):
    bad, runs = [], 0
    for pack in builtin_adversaries():
        stages = 50 if pack.construction in ("wtt", "q") else 12
        report = cross_check(pack.construction, stages, pack, fault=fault)
        runs += 1
        bad.extend(line for line in report.lines() if line.startswith("FAIL"))
    return not bad, f"{runs} packs cross-checked, {len(bad)} failures{_first(bad, 1)}"


def determinism(fault=False):
    import tempfile
    from pathlib import Path

    from .cli import main
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for construction, pack, stages in (("wtt", "wtt-const1", 50), ("d", "d-const1", 10),
                                           ("bs", "bs-query", 12), ("q", "q-c1-driver", 50)):
            texts = []
            for i in range(2):
                out = Path(tmp) / f"{pack}-{i}.jsonl"
                code = main(["run", construction, "--manifest", pack, "--stages", str(stages),
                             "--output", str(out), "--quiet"])
                texts.append(out.read_bytes() if code == 0 else b"")
            outputs.append((pack, texts[0] == texts[1] and texts[0] != b""))
    bad = [pack for pack, same in outputs if not same]
    return not bad, f"{len(outputs)} config pairs, {len(bad)} differ{_first(bad, 4)}"


CRITERIA = [
    Criterion("pi01-shape", "removed sets only grow over every wtt pack at 1000 stages", pi01_shape, 60),
    Criterion("extraction-bound", "marker n changes at most n + (n+1)2^n times after n-1 settles",
              extraction_bound),
    Criterion("defeated-replay", "every defeated guess replays to 1 within its use", defeated_replay),
    Criterion("spacing-containment", "use-bound queries stay below h(s+1)", spacing_containment, 120),
    Criterion("viable-counting", "viable strings shrink under N_c and never grow otherwise",
              viable_counting, 60),
    Criterion("subset-count", "D-mode use bound enumerates 2^(y+1) subsets", subset_count),
    Criterion("q-state-machine", "Q transitions, Waiting parameters and witnesses", q_machine, 60),
    Criterion("q-positive", "x in A iff W_f(x) is inside B for co-c.e. A", q_positive),
    Criterion("hat-equivalence", "sequence prefixes match string prefixes", hat_equivalence, 30),
    Criterion("oracle-equivalence", "stage machines agree with the naive reimplementation",
              oracle_equivalence),
    Criterion("determinism", "identical run configs write identical trace bytes", determinism),
]


def run_criterion(criterion: Criterion, fault=False) -> Outcome:
    start = time.perf_counter()
    try:
        passed, detail = criterion.check(fault=fault)
    except Exception as err:          # a crashing check is a failing check
        passed, detail = False, f"raised {type(err).__name__}: {err}"
    seconds = time.perf_counter() - start
    if criterion.limit is not None and seconds > criterion.limit:
        passed, detail = False, f"{detail}; exceeded the {criterion.limit:.0f}s runtime limit"
    return Outcome(criterion.key, passed, detail, seconds)


def run_all(fault=False, only=None):
    return [run_criterion(c, fault) for c in CRITERIA if only is None or c.key in only]
