"""Subtractive stage construction of a Pi^0_1 wtt-introimmune set.

A_s is cofinite and kept as its complement, a list of removed intervals.
Requirement pairs (n, e) with e = <a, b> watch the first n+1 markers: if the
bound phi_b threatens the next marker the gap is cleared (Action 1),
otherwise a fresh oracle guess alpha on which Phi_a claims all markers is
defeated by extracting m_n (Action 2).
"""

from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import count

from .pairing import pair, unpair
from .substrate import NowhereDefined, Outcome


class CofiniteSet:
    """omega minus finitely many removed elements, stored as closed intervals."""

    def __init__(self, intervals=()):
        self.intervals: list[list[int]] = []
        for lo, hi in sorted(intervals):
            self.remove(lo, hi)

    def copy(self):
        out = CofiniteSet()
        out.intervals = [iv[:] for iv in self.intervals]
        return out

    def __contains__(self, y):
        i = bisect_right(self.intervals, [y, float("inf")]) - 1
        return not (i >= 0 and self.intervals[i][0] <= y <= self.intervals[i][1])

    def __eq__(self, other):
        return isinstance(other, CofiniteSet) and self.intervals == other.intervals

    def __repr__(self):
        return f"CofiniteSet(removed={self.removed_intervals()})"

    def removed_intervals(self):
        return [tuple(iv) for iv in self.intervals]

    @property
    def removed_count(self):
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    def remove(self, lo, hi):
        """Remove [lo, hi]; returns the newly removed sub-intervals."""
        if hi < lo:
            return []
        fresh = []
        cursor = lo
        for a, b in self.intervals:
            if b < cursor:
                continue
            if a > hi:
                break
            if a > cursor:
                fresh.append((cursor, a - 1))
            cursor = max(cursor, b + 1)
            if cursor > hi:
                break
        if cursor <= hi:
            fresh.append((cursor, hi))
        if not fresh:
            return []
        merged = []
        for a, b in sorted([iv[:] for iv in self.intervals] + [[lo, hi]]):
            if merged and a <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        self.intervals = merged
        return fresh

    def markers(self, k):
        """The first k elements of the set, in increasing order."""
        out = []
        y = 0
        ivs = self.intervals
        i = 0
        while len(out) < k:
            if i < len(ivs) and ivs[i][1] < y:
                i += 1
            elif i < len(ivs) and ivs[i][0] <= y:
                y = ivs[i][1] + 1
                i += 1
            else:
                out.append(y)
                y += 1
        return out

    def marker(self, n):
        return self.markers(n + 1)[n]


@dataclass
class WttState:
    removed: CofiniteSet = field(default_factory=CofiniteSet)
    defeated: dict = field(default_factory=dict)   # (n, e) -> set of length-n strings

    def copy(self):
        return WttState(self.removed.copy(), {k: set(v) for k, v in self.defeated.items()})

    def defeated_sorted(self):
        return {k: sorted(v) for k, v in sorted(self.defeated.items()) if v}


@dataclass(frozen=True)
class Verdict:
    kind: str                 # "none", "C1" or "C2"
    u: int | None = None
    alpha: str | None = None


NONE = Verdict("none")


@dataclass(frozen=True)
class WttEvent:
    stage: int
    kind: str                 # "no-action", "action1", "action2"
    pair: tuple | None = None
    u: int | None = None
    y_min: int | None = None
    removed: tuple = ()       # newly removed intervals
    alpha: str | None = None
    x: int | None = None      # the extracted marker of an Action 2
    positions: tuple = ()     # m_0 .. m_{n-1} at the acting stage (Action 2)
    budget: int = 0
    reset: tuple = ()         # pairs whose D was cleared
    markers: tuple = ()       # first M markers of A_{stage}

    def to_record(self):
        payload = {"pair": list(self.pair) if self.pair else None, "u": self.u, "y_min": self.y_min,
                   "removed": [list(iv) for iv in self.removed], "alpha": self.alpha, "x": self.x,
                   "positions": list(self.positions), "budget": self.budget,
                   "reset": [list(p) for p in self.reset], "markers": list(self.markers)}
        return {"stage": self.stage, "kind": self.kind, "payload": payload}

    @classmethod
    def from_record(cls, rec):
        p = rec["payload"]
        return cls(stage=rec["stage"], kind=rec["kind"],
                   pair=tuple(p["pair"]) if p.get("pair") is not None else None,
                   u=p.get("u"), y_min=p.get("y_min"),
                   removed=tuple(tuple(iv) for iv in p.get("removed", [])),
                   alpha=p.get("alpha"), x=p.get("x"), positions=tuple(p.get("positions", [])),
                   budget=p.get("budget", 0), reset=tuple(tuple(q) for q in p.get("reset", [])),
                   markers=tuple(p.get("markers", [])))


class PhiCache:
    """Memo of phi_b(x) runs; a halt at some budget stays a halt at larger ones."""

    def __init__(self, substrate):
        self.substrate = substrate
        self._runs: dict = {}

    def value(self, b, x, budget):
        behavior = self.substrate.functions.get(b)
        if behavior is None:
            return None
        out = self._runs.get((b, x))
        if out is None or (not out.halted and out.steps < budget):
            out = behavior.run(x, budget)
            if not out.halted:
                out = Outcome("running", steps=budget)
            self._runs[(b, x)] = out
        if out.halted and out.steps <= budget:
            return out.value
        return None


class _NeedBit(Exception):
    def __init__(self, k):
        self.k = k


class _TooFar(Exception):
    pass


def alpha_oracle(alpha: str, positions) -> dict:
    """X_alpha as a position -> bit map; every other position reads 0."""
    return {m: int(bit) for m, bit in zip(positions, alpha)}


def c2_search(substrate, a, markers, n, u, budget, defeated=frozenset()):
    """Lexicographically least alpha in {0,1}^n outside ``defeated`` for C2.

    Only oracle bits that the computations actually read are branched on;
    each surviving branch is a cylinder of alphas, searched in lex order.
    """
    if a not in substrate.functionals:
        return None
    behavior = substrate.functionals[a]
    slot = {markers[k]: k for k in range(n)}
    cylinders = []

    def ask_with(assign):
        def ask(q):
            if q > u:
                raise _TooFar
            k = slot.get(q)
            if k is None:
                return 0
            if k in assign:
                return assign[k]
            raise _NeedBit(k)
        return ask

    stack = [{}]
    while stack:
        assign = stack.pop()
        ask = ask_with(assign)
        ok = True
        for k in range(n + 1):
            try:
                out = behavior.run(markers[k], ask, budget)
            except _NeedBit as need:
                stack.append({**assign, need.k: 1})
                stack.append({**assign, need.k: 0})
                ok = False
                break
            except _TooFar:
                ok = False
                break
            if not out.halted or out.value != 1:
                ok = False
                break
        if ok:
            cylinders.append(assign)

    best = None
    for assign in cylinders:
        free = [k for k in range(n) if k not in assign]
        for i in count():
            if i >> len(free):
                break
            bits = [0] * n
            for k, bit in assign.items():
                bits[k] = bit
            for j, k in enumerate(free):
                bits[k] = (i >> (len(free) - 1 - j)) & 1
            alpha = "".join(map(str, bits))
            if best is not None and alpha >= best:
                break
            if alpha not in defeated:
                best = alpha
                break
    return best


def _eligibility(substrate, b, markers, n_max, budget, phis):
    """Prefix maxima u_n of phi_b over markers, up to the first divergence."""
    out = []
    u = -1
    for k in range(n_max + 1):
        v = phis.value(b, markers[k], budget)
        if v is None:
            break
        u = max(u, v)
        out.append(u)
    return out


def wtt_requires_attention(pair, state: WttState, s, substrate, budget=None, phis=None, markers=None):
    n, e = pair
    if not (e <= n <= s):
        raise ValueError(f"pair {pair} outside e <= n <= s={s}")
    budget = s if budget is None else budget
    phis = phis or PhiCache(substrate)
    markers = markers or state.removed.markers(n + 2)
    a, b = unpair(e)
    prefix = _eligibility(substrate, b, markers, n, budget, phis)
    if len(prefix) <= n:
        return NONE
    u = prefix[n]
    if markers[n + 1] <= u:
        return Verdict("C1", u)
    alpha = c2_search(substrate, a, markers, n, u, budget, state.defeated.get((n, e), ()))
    if alpha is not None:
        return Verdict("C2", u, alpha)
    return NONE


def _scan(state, s, substrate, budget, phis, markers):
    bs = sorted(substrate.functions)
    with_a = {}
    first_e = {}
    for b in bs:
        # least e = <a, b> over all a is <0, b>
        first_e[b] = pair(0, b)
    for e in range(s + 1):
        a, b = unpair(e)
        if b in substrate.functions and a in substrate.functionals:
            with_a.setdefault(b, []).append((e, a))
    prefixes = {b: _eligibility(substrate, b, markers, s, budget, phis) for b in bs}
    for n in range(s + 1):
        candidates = []
        for b in bs:
            prefix = prefixes[b]
            if len(prefix) <= n:
                continue
            u = prefix[n]
            if markers[n + 1] <= u:
                if first_e[b] <= n:
                    candidates.append((first_e[b], Verdict("C1", u)))
                continue
            for e, a in with_a.get(b, ()):
                if e > n:
                    break
                candidates.append((e, ("C2?", a, u)))
        for e, verdict in sorted(candidates, key=lambda c: c[0]):
            if isinstance(verdict, Verdict):
                return (n, e), verdict
            _, a, u = verdict
            alpha = c2_search(substrate, a, markers, n, u, budget, state.defeated.get((n, e), ()))
            if alpha is not None:
                return (n, e), Verdict("C2", u, alpha)
    return None, NONE


def apply_action(state: WttState, pair, verdict: Verdict, markers):
    """Perform Action 1/2 and the Reset Rule on a copy of ``state``."""
    n, e = pair
    new = state.copy()
    if verdict.kind == "C1":
        fresh = new.removed.remove(markers[n] + 1, verdict.u)
        y_min = markers[n + 1]
        x = None
    else:
        fresh = new.removed.remove(markers[n], markers[n])
        new.defeated.setdefault((n, e), set()).add(verdict.alpha)
        y_min = markers[n]
        x = markers[n]
    reset = []
    for (j, i) in sorted(new.defeated):
        if j >= 1 and markers[j - 1] >= y_min and new.defeated[(j, i)]:
            new.defeated[(j, i)] = set()
            reset.append((j, i))
    new.defeated = {k: v for k, v in new.defeated.items() if v}
    return new, tuple(fresh), y_min, x, tuple(reset)


def wtt_stage(state: WttState, s, substrate, budget=None, horizon=32, phis=None):
    """Stage s+1: from A_s to A_{s+1}. Returns (new state, event)."""
    budget = s if budget is None else budget
    phis = phis or PhiCache(substrate)
    markers = state.removed.markers(max(s + 2, horizon))
    pair, verdict = _scan(state, s, substrate, budget, phis, markers)
    if verdict.kind == "none":
        return state, WttEvent(s + 1, "no-action", budget=budget, markers=tuple(markers[:horizon]))
    new, fresh, y_min, x, reset = apply_action(state, pair, verdict, markers)
    n = pair[0]
    kind = "action1" if verdict.kind == "C1" else "action2"
    return new, WttEvent(
        s + 1, kind, pair=pair, u=verdict.u, y_min=y_min, removed=fresh, alpha=verdict.alpha, x=x,
        positions=tuple(markers[:n]) if kind == "action2" else (), budget=budget, reset=reset,
        markers=tuple(new.removed.markers(horizon)))


@dataclass
class WttRun:
    state: WttState
    events: list
    stages: int
    horizon: int = 32

    def marker_history(self):
        """Row s holds the snapshot of A_s (row 0 is A_0)."""
        rows = [tuple(range(self.horizon))]
        rows.extend(ev.markers for ev in self.events)
        return rows


def wtt_run(substrate, stages, budget=None, horizon=32, stage_fn=None):
    """Run stages 1..``stages``; ``budget(s)`` gives the step budget at stage s+1."""
    budget = budget or (lambda s: s)
    stage_fn = stage_fn or wtt_stage
    phis = PhiCache(substrate)
    state = WttState()
    events = []
    for s in range(stages):
        state, event = stage_fn(state, s, substrate, budget(s), horizon, phis)
        events.append(event)
    return WttRun(state, events, stages, horizon)


# -- verification ---------------------------------------------------------

def _functional(substrate, a):
    return substrate.functionals.get(a, NowhereDefined())


def wtt_verify_diagonalization(events, state: WttState, substrate):
    """Replay the Action 2 that put each surviving defeated guess into D.

    Returns a list of violation strings; empty means every guess is
    genuinely defeated at this finite scale.
    """
    problems = []
    removed = state.removed
    for (n, e), alphas in sorted(state.defeated.items()):
        a, b = unpair(e)
        for alpha in sorted(alphas):
            inserting = [ev for ev in events
                         if ev.kind == "action2" and ev.pair == (n, e) and ev.alpha == alpha]
            if not inserting:
                problems.append(f"D[{n},{e}] holds {alpha!r} but no Action 2 inserted it")
                continue
            ev = inserting[-1]
            where = f"stage {ev.stage} D[{n},{e}]={alpha!r}"
            if len(ev.positions) != n or len(alpha) != n:
                problems.append(f"{where}: guess/positions length mismatch")
                continue
            x = ev.x
            if x in removed:
                problems.append(f"{where}: extracted {x} is still in A")
            points = list(ev.positions) + [x]
            values = [PhiCache(substrate).value(b, m, ev.budget) for m in points]
            if None in values:
                problems.append(f"{where}: phi_{b} does not converge on the markers")
                continue
            if max(values) != ev.u:
                problems.append(f"{where}: recorded u={ev.u} but phi_{b} gives {max(values)}")
            oracle = alpha_oracle(alpha, ev.positions)
            out = substrate.run_functional(a, x, lambda q: oracle.get(q, 0), ev.budget,
                                           behavior=_functional(substrate, a))
            if not out.halted or out.value != 1:
                problems.append(f"{where}: Phi_{a}^X_alpha({x}) is {out.status}/{out.value}, not 1")
            elif out.log.queries and out.log.use > ev.u:
                problems.append(f"{where}: query {out.log.use} exceeds u={ev.u}")
    return problems


def extraction_counts(history, n_max=4):
    """For each n <= n_max: (n, changes of marker n after marker n-1 settles, bound).

    ``history`` is the list of marker snapshots, row s for A_s.
    """
    out = []
    for n in range(n_max + 1):
        settled = 0
        if n > 0:
            for s in range(1, len(history)):
                if history[s][n - 1] != history[s - 1][n - 1]:
                    settled = s
        changes = sum(1 for s in range(settled + 1, len(history))
                      if history[s][n] != history[s - 1][n])
        out.append((n, changes, n + (n + 1) * 2 ** n))
    return out


def verify_wtt(events, final_state: WttState, substrate, recheck=True, horizon=32):
    """Rebuild every stage from the trace deltas and check the stage invariants.

    Covers the subtractive shape, minimality of the acting pair (when
    ``recheck``), Action 1/2 bookkeeping, C1/C2 exclusivity, the Reset Rule,
    the size bound on defeated tables and the final replay of every defeated
    guess.
    """
    problems = []
    state = WttState()
    phis = PhiCache(substrate)
    gone: set = set()          # elements removed so far, up to the snapshot horizon
    for s, ev in enumerate(events):
        where = f"stage {ev.stage}"
        if ev.stage != s + 1:
            problems.append(f"{where}: expected stage {s + 1}")
            break
        markers = state.removed.markers(max(s + 2, horizon))
        if recheck:
            pair_, verdict = _scan(state, s, substrate, ev.budget, phis, markers)
            kind = {"none": "no-action", "C1": "action1", "C2": "action2"}[verdict.kind]
            if (kind, pair_, verdict.u, verdict.alpha) != (ev.kind, ev.pair, ev.u, ev.alpha):
                problems.append(f"{where}: recorded {ev.kind} {ev.pair} u={ev.u} alpha={ev.alpha!r}, "
                                f"recomputed {kind} {pair_} u={verdict.u} alpha={verdict.alpha!r}")
        new = state.copy()
        if ev.kind == "action1":
            n, e = ev.pair
            if ev.u is None or markers[n + 1] > ev.u:
                problems.append(f"{where}: Action 1 without the C1 interval condition")
            elif ev.y_min != markers[n + 1]:
                problems.append(f"{where}: y_min={ev.y_min}, expected m_{n + 1}={markers[n + 1]}")
            fresh = new.removed.remove(markers[n] + 1, ev.u if ev.u is not None else markers[n])
            if tuple(fresh) != tuple(ev.removed):
                problems.append(f"{where}: removed {ev.removed}, expected {tuple(fresh)}")
        elif ev.kind == "action2":
            n, e = ev.pair
            if ev.u is not None and markers[n + 1] <= ev.u:
                problems.append(f"{where}: C2 recorded while the C1 interval condition holds")
            if ev.x != markers[n] or ev.y_min != markers[n]:
                problems.append(f"{where}: extracted {ev.x} / y_min {ev.y_min}, expected m_{n}={markers[n]}")
            if tuple(ev.positions) != tuple(markers[:n]):
                problems.append(f"{where}: guess positions {ev.positions} differ from markers")
            if ev.alpha is None or len(ev.alpha) != n:
                problems.append(f"{where}: guess {ev.alpha!r} does not have length {n}")
            elif ev.alpha in new.defeated.get((n, e), ()):
                problems.append(f"{where}: guess {ev.alpha!r} was already defeated")
            new.removed.remove(markers[n], markers[n])
            new.defeated.setdefault((n, e), set()).add(ev.alpha)
            if len(new.defeated[(n, e)]) > 2 ** n:
                problems.append(f"{where}: D[{n},{e}] exceeds 2^{n} entries")
        elif ev.kind != "no-action":
            problems.append(f"{where}: unknown event kind {ev.kind!r}")
        if ev.kind != "no-action":
            expected = tuple((j, i) for (j, i) in sorted(new.defeated)
                             if j >= 1 and markers[j - 1] >= ev.y_min and new.defeated[(j, i)])
            if expected != tuple(ev.reset):
                problems.append(f"{where}: reset {ev.reset}, expected {expected}")
            for key in expected:
                new.defeated[key] = set()
            new.defeated = {k: v for k, v in new.defeated.items() if v}
        elif ev.reset or ev.removed:
            problems.append(f"{where}: no-action event changes the state")
        snapshot = tuple(new.removed.markers(len(ev.markers)))
        if snapshot != tuple(ev.markers):
            problems.append(f"{where}: marker snapshot disagrees with the removed-set deltas")
        if gone & set(ev.markers):
            problems.append(f"{where}: previously removed {sorted(gone & set(ev.markers))} is back in A")
        cut = max(ev.markers, default=0)
        for lo, hi in new.removed.removed_intervals():
            gone.update(range(lo, min(hi, cut) + 1))
        state = new
    if state.removed != final_state.removed:
        problems.append("final removed set disagrees with the trace")
    if state.defeated_sorted() != final_state.defeated_sorted():
        problems.append("final defeated table disagrees with the trace")
    problems.extend(wtt_verify_diagonalization(events, final_state, substrate))
    return problems
