"""Finite-extension constructions driven by a K-computable spacing function h.

Two modes share the machinery:

``bs``  bounds on the number of distinct oracle queries. U(c, x) explores
        every answer string of length at most phi_b(x) fed to the
        normalized functional.
``d``   functionals that must be total on every finite oracle. U(c, x, y)
        covers all 2^(y+1) subsets of {0..y}; any divergence disables the
        requirement for good.

The tape alpha_s codes A_s = {h(n) : alpha_s(n) = 1}.
"""

from dataclasses import dataclass, field, replace
from itertools import product

from .errors import CapExceeded
from .pairing import unpair
from .substrate import HaltingOracle, NowhereDefined

BS, D = "bs", "d"
MODES = (BS, D)
VIABLE_LIMIT = 14


@dataclass(frozen=True)
class UseBound:
    c: int
    x: int
    y: int | None            # spacing height for D mode, None for bs
    value: int
    disabled: bool = False
    simulations: int = 0     # simulations actually run
    covered: int = 0         # answer strings (bs) or subsets (d) accounted for
    uses: tuple = ()         # distinct uses of the halting simulations
    mode: str = "exact"

    def to_dict(self):
        return {"c": self.c, "x": self.x, "y": self.y, "value": self.value, "disabled": self.disabled,
                "simulations": self.simulations, "covered": self.covered, "uses": list(self.uses),
                "mode": self.mode}


def _mode_tag(oracle, *behaviors):
    return "exact" if all(oracle.budget_for(b) is None for b in behaviors) else "budgeted"


def _split_bs(c):
    return unpair((c - 1) // 2)


class _NeedBit(Exception):
    def __init__(self, key):
        self.key = key


def use_bound_bs(c, x, oracle: HaltingOracle, substrate, detail=False):
    """Largest query of any halting simulation of Phi_a(x) within phi_b(x) answers."""
    bound = _bs_bound(c, x, oracle, substrate)
    return bound if detail else bound.value


def _bs_bound(c, x, oracle, substrate):
    if c % 2 == 0:
        return UseBound(c, x, None, 0)
    a, b = _split_bs(c)
    tag = _mode_tag(oracle, substrate.functions.get(b, NowhereDefined()),
                    substrate.functionals.get(a, NowhereDefined()))
    k = oracle.phi(substrate, b, x)
    if k is None:
        return UseBound(c, x, None, 0, mode=tag)
    # Walk the answer tree: a node rho is a prefix of answers. Halting at rho
    # halts for every sigma extending rho with |sigma| <= k.
    uses, sims, covered = set(), 0, 0
    stack = [()]
    while stack:
        rho = stack.pop()
        answers = iter(rho)
        out = oracle.run_functional(substrate, a, x, lambda q: next(answers),
                                    max_queries=len(rho), normalized=True)
        sims += 1
        below = 2 ** (k - len(rho) + 1) - 1
        if out.halted:
            uses.add(out.log.use)
            covered += below
        elif out.status == "exhausted" and len(rho) < k:
            stack.append(rho + (1,))
            stack.append(rho + (0,))
            covered += 1          # rho itself: not halting within |rho| answers
        else:
            covered += below
    return UseBound(c, x, None, max(uses, default=0), simulations=sims, covered=covered,
                    uses=tuple(sorted(uses)), mode=tag)


def use_bound_d(c, x, y, oracle: HaltingOracle, substrate, exhaustive=False, detail=False):
    """(max use over all finite oracles F within {0..y}, disabled?).

    ``exhaustive`` literally runs all 2^(y+1) subsets; otherwise only the
    positions that are actually queried are branched on, and each leaf
    accounts for the subsets it stands for.
    """
    bound = _d_bound(c, x, y, oracle, substrate, exhaustive)
    return bound if detail else (bound.value, bound.disabled)


def _d_bound(c, x, y, oracle, substrate, exhaustive):
    if c % 2 == 0:
        return UseBound(c, x, y, 0)
    a = (c - 1) // 2
    tag = _mode_tag(oracle, substrate.functionals.get(a, NowhereDefined()))
    uses, sims, covered = set(), 0, 0

    def disabled():
        return UseBound(c, x, y, 0, True, sims, covered, tuple(sorted(uses)), tag)

    if exhaustive:
        for members in range(2 ** (y + 1)):
            out = oracle.run_functional(substrate, a, x, lambda q: (members >> q) & 1 if q <= y else 0)
            sims += 1
            covered += 1
            if not out.halted:
                return disabled()
            uses.add(out.log.use)
    else:
        stack = [{}]
        while stack:
            assign = stack.pop()

            def ask(q):
                if q > y:
                    return 0
                if q not in assign:
                    raise _NeedBit(q)
                return assign[q]

            try:
                out = oracle.run_functional(substrate, a, x, ask)
            except _NeedBit as need:
                stack.append({**assign, need.key: 1})
                stack.append({**assign, need.key: 0})
                continue
            sims += 1
            covered += 2 ** (y + 1 - len(assign))
            if not out.halted:
                return disabled()
            uses.add(out.log.use)
    return UseBound(c, x, y, max(uses, default=0), False, sims, covered, tuple(sorted(uses)), tag)


@dataclass
class SpacingState:
    mode: str
    h: list = field(default_factory=lambda: [0])
    bounds: dict = field(default_factory=dict)        # (c, m) or (c, m, s) -> UseBound
    disabled: dict = field(default_factory=dict)      # c -> stage at which it was disabled
    fresh: list = field(default_factory=list)         # keys computed by the last spacing_next

    def copy(self):
        return replace(self, h=list(self.h), bounds=dict(self.bounds), disabled=dict(self.disabled),
                       fresh=[])


def spacing_next(state: SpacingState, s, mode, oracle, substrate, h_cap=20, exhaustive=False):
    """Return a copy of ``state`` with h(s+1) appended."""
    if mode not in MODES:
        raise ValueError(f"unknown spacing mode {mode!r}")
    if len(state.h) != s + 1:
        raise ValueError(f"h is defined through {len(state.h) - 1}, expected {s}")
    new = state.copy()
    h = new.h
    top = h[s]
    for c in range(1, s + 1, 2):
        for m in range(s + 1):
            if mode == BS:
                key = (c, m)
                if key not in new.bounds:
                    new.bounds[key] = _bs_bound(c, h[m], oracle, substrate)
                    new.fresh.append(key)
            else:
                if h[s] > h_cap:
                    raise CapExceeded(f"h({s}) = {h[s]} exceeds the spacing cap {h_cap}")
                key = (c, m, s)
                bound = _d_bound(c, h[m], h[s], oracle, substrate, exhaustive)
                new.bounds[key] = bound
                new.fresh.append(key)
                if bound.disabled and c not in new.disabled:
                    new.disabled[c] = s + 1
            top = max(top, new.bounds[key].value)
    h.append(top + 1)
    return new


def x_alpha(alpha: str, h) -> frozenset:
    return frozenset(h[n] for n, bit in enumerate(alpha) if bit == "1")


def _least_witness(alpha_s, h, checks):
    """Least alpha <= alpha_s pointwise for which ``checks(ask)`` holds.

    Only bits the computations read are branched on; unread free bits are
    filled with 0, which gives the least member of each cylinder.
    """
    slot = {h[m]: m for m, bit in enumerate(alpha_s) if bit == "1"}
    best = None
    stack = [{}]
    while stack:
        assign = stack.pop()

        def ask(q):
            m = slot.get(q)
            if m is None:
                return 0
            if m not in assign:
                raise _NeedBit(m)
            return assign[m]

        try:
            ok = checks(ask)
        except _NeedBit as need:
            stack.append({**assign, need.key: 1})
            stack.append({**assign, need.key: 0})
            continue
        if ok:
            cand = "".join(str(assign.get(m, 0)) for m in range(len(alpha_s)))
            best = cand if best is None else min(best, cand)
    return best


def _bs_checks(c, alpha_s, h, s, oracle, substrate):
    a, b = _split_bs(c)
    caps = [oracle.phi(substrate, b, h[m]) for m in range(s + 1)]
    if None in caps:
        return None

    def checks(ask):
        for m in range(s + 1):
            want = int(alpha_s[m]) if m < s else 1
            out = oracle.run_functional(substrate, a, h[m], ask, max_queries=caps[m], normalized=True)
            if not out.halted or out.value != want:
                return False
        return True
    return checks


def _d_checks(c, alpha_s, h, s, oracle, substrate):
    a = (c - 1) // 2

    def checks(ask):
        for m in range(s + 1):
            want = int(alpha_s[m]) if m < s else 1
            out = oracle.run_functional(substrate, a, h[m], ask)
            if not out.halted or out.value != want:
                return False
        return True
    return checks


def n_requires_attention(c, alpha_s, state: SpacingState, s, oracle, substrate):
    """Least alpha via which N_c requires attention at stage s+1, or None."""
    make = _bs_checks if state.mode == BS else _d_checks
    checks = make(c, alpha_s, state.h, s, oracle, substrate)
    if checks is None:
        return None
    return _least_witness(alpha_s, state.h, checks)


@dataclass(frozen=True)
class SpacingEvent:
    stage: int
    mode: str
    h: int                    # h(stage)
    acted: int | None         # index of the acting requirement
    kind: str                 # "P", "N" or "default"
    witness: str | None
    bit: str
    disabled: tuple = ()      # requirements disabled while computing h(stage)
    bounds: tuple = ()        # (key, UseBound) pairs computed this stage
    halting: tuple = ()       # (mode, count) of K-queries answered this stage

    def to_record(self):
        payload = {"mode": self.mode, "h": self.h, "acted": self.acted, "witness": self.witness,
                   "bit": self.bit, "disabled": list(self.disabled),
                   "bounds": [{"key": list(k), **b.to_dict()} for k, b in self.bounds],
                   "halting": dict(self.halting)}
        return {"stage": self.stage, "kind": self.kind, "payload": payload}

    @classmethod
    def from_record(cls, rec):
        p = rec["payload"]
        bounds = tuple((tuple(b["key"]), UseBound(b["c"], b["x"], b["y"], b["value"], b["disabled"],
                                                  b["simulations"], b["covered"], tuple(b["uses"]),
                                                  b["mode"]))
                       for b in p.get("bounds", []))
        return cls(rec["stage"], p["mode"], p["h"], p.get("acted"), rec["kind"], p.get("witness"),
                   p["bit"], tuple(p.get("disabled", [])), bounds,
                   tuple(sorted(p.get("halting", {}).items())))


def _choose(alpha_s, state, s, oracle, substrate):
    size = len(x_alpha(alpha_s, state.h))
    if state.mode == BS:
        horizon = range(2 * (s + 1) + 1)
    else:
        horizon = range(2 * (size + 1) + 1)   # P_{2(|X|+1)} always requires attention
    for n in horizon:
        if n % 2 == 0:
            if size < n // 2:
                return n, "P", None
        elif (n <= s if state.mode == BS else n < s) and n not in state.disabled:
            witness = n_requires_attention(n, alpha_s, state, s, oracle, substrate)
            if witness is not None:
                return n, "N", witness
    return None, "default", None


def spacing_stage(alpha_s, state: SpacingState, s, oracle, substrate):
    """One stage with h(s+1) already in ``state``: returns (alpha_{s+1}, acted, kind, witness)."""
    if len(alpha_s) != s:
        raise ValueError(f"tape has length {len(alpha_s)} at stage {s}")
    n, kind, witness = _choose(alpha_s, state, s, oracle, substrate)
    bit = "0" if kind == "N" else "1"
    return alpha_s + bit, n, kind, witness


def bs_stage(alpha_s, state, s, oracle, substrate):
    assert state.mode == BS
    return spacing_stage(alpha_s, state, s, oracle, substrate)


def d_stage(alpha_s, state, s, oracle, substrate):
    assert state.mode == D
    return spacing_stage(alpha_s, state, s, oracle, substrate)


@dataclass
class SpacingRun:
    mode: str
    alpha: str
    state: SpacingState
    events: list

    @property
    def approximate(self):
        return any(dict(ev.halting).get("budgeted", 0) for ev in self.events)


def spacing_run(substrate, stages, mode, oracle=None, h_cap=20, exhaustive=False, stage_fn=None):
    oracle = oracle or HaltingOracle()
    stage_fn = stage_fn or spacing_stage
    state = SpacingState(mode)
    alpha = ""
    events = []
    for s in range(stages):
        before = dict(oracle.tally)
        state = spacing_next(state, s, mode, oracle, substrate, h_cap, exhaustive)
        alpha, n, kind, witness = stage_fn(alpha, state, s, oracle, substrate)
        newly = tuple(sorted(c for c, at in state.disabled.items() if at == s + 1))
        halting = tuple(sorted((k, v - before.get(k, 0)) for k, v in oracle.tally.items()
                               if v - before.get(k, 0)))
        events.append(SpacingEvent(s + 1, mode, state.h[s + 1], n, kind, witness, alpha[-1], newly,
                                   tuple((k, state.bounds[k]) for k in state.fresh), halting))
    return SpacingRun(mode, alpha, state, events)


def viable_strings(t, alpha_t, mode, h, substrate, c, oracle=None):
    """All beta in {0,1}^t with beta <= alpha_t pointwise and Phi_a^{X_beta}(h(m)) = alpha_t(m).

    Brute force; refuses t above the exhaustive limit.
    """
    if t > VIABLE_LIMIT:
        raise CapExceeded(f"viable-string enumeration refuses t={t} > {VIABLE_LIMIT}")
    if len(alpha_t) != t or len(h) < t:
        raise ValueError("alpha_t must have length t and h must be defined below t")
    oracle = oracle or HaltingOracle()
    if mode == BS:
        a, b = _split_bs(c)
        caps = [oracle.phi(substrate, b, h[m]) for m in range(t)]
        if None in caps:
            return set()
    else:
        a, caps = (c - 1) // 2, [None] * t
    out = set()
    for bits in product("01", repeat=t):
        beta = "".join(bits)
        if any(x > y for x, y in zip(beta, alpha_t)):
            continue
        members = x_alpha(beta, h)
        ask = members.__contains__
        ok = True
        for m in range(t):
            res = oracle.run_functional(substrate, a, h[m], lambda q: int(ask(q)),
                                        max_queries=caps[m], normalized=mode == BS)
            if not res.halted or res.value != int(alpha_t[m]):
                ok = False
                break
        if ok:
            out.add(beta)
    return out


# -- invariant checks over a finished run ---------------------------------

def verify_spacing(run: SpacingRun, substrate=None, oracle=None):
    """Return a list of violation strings for the finite-stage spacing invariants."""
    problems = []
    h = [0] + [ev.h for ev in run.events]
    if run.state.h != h:
        problems.append("h in the final state disagrees with the trace")
    for s in range(len(h) - 1):
        if h[s + 1] <= h[s]:
            problems.append(f"h not strictly increasing at {s + 1}: {h[s]} -> {h[s + 1]}")
    bounds = {}
    alpha = ""
    disabled = {}
    for ev in run.events:
        s = ev.stage - 1
        for key, bound in ev.bounds:
            bounds[key] = bound
            if bound.mode not in ("exact", "budgeted"):
                problems.append(f"stage {ev.stage}: bound {key} has no oracle-mode tag")
            if bound.uses and max(bound.uses) >= h[s + 1]:
                problems.append(f"stage {ev.stage}: U{key} logged query {max(bound.uses)} >= h({s + 1})={h[s + 1]}")
            if run.mode == D and bound.disabled:
                disabled.setdefault(bound.c, ev.stage)
        # the recursion for h(s+1)
        if run.mode == BS:
            terms = [bounds[(c, m)].value for c in range(1, s + 1, 2) for m in range(s + 1)
                     if (c, m) in bounds]
            expected = len([1 for c in range(1, s + 1, 2) for m in range(s + 1)])
        else:
            terms = [bounds[(c, m, s)].value for c in range(1, s + 1, 2) for m in range(s + 1)
                     if (c, m, s) in bounds]
            expected = len([1 for c in range(1, s + 1, 2) for m in range(s + 1)])
        if len(terms) != expected:
            problems.append(f"stage {ev.stage}: {expected - len(terms)} use bounds missing")
        if h[s + 1] != max([h[s], *terms]) + 1:
            problems.append(f"stage {ev.stage}: h({s + 1})={h[s + 1]} does not follow the recursion")
        if ev.kind == "N" and ev.acted in disabled and disabled[ev.acted] <= ev.stage:
            problems.append(f"stage {ev.stage}: disabled N_{ev.acted} acted")
        if ev.bit != ("0" if ev.kind == "N" else "1"):
            problems.append(f"stage {ev.stage}: bit {ev.bit} inconsistent with a {ev.kind} action")
        alpha += ev.bit
    if alpha != run.alpha:
        problems.append("tape is not the concatenation of the per-stage bits")
    if run.mode == D:
        for key, bound in bounds.items():
            if bound.c not in disabled and bound.covered != 2 ** (bound.y + 1):
                problems.append(f"U{key}: {bound.covered} subsets accounted for, expected {2 ** (bound.y + 1)}")
    else:
        for key, bound in bounds.items():
            if bound.simulations and bound.covered and bound.uses == () and bound.value:
                problems.append(f"U{key}: value without a halting simulation")
    if substrate is not None:
        problems.extend(_replay_actions(run, substrate, oracle or HaltingOracle()))
    return problems


def _replay_actions(run, substrate, oracle):
    """Re-check C1-C3 for the witness of every N action."""
    problems = []
    h = [0] + [ev.h for ev in run.events]
    state = SpacingState(run.mode, h=h)
    alpha = ""
    for ev in run.events:
        s = ev.stage - 1
        if ev.kind == "N":
            w = ev.witness or ""
            if len(w) != s or any(x > y for x, y in zip(w, alpha)):
                problems.append(f"stage {ev.stage}: witness {w!r} violates C1")
            else:
                make = _bs_checks if run.mode == BS else _d_checks
                checks = make(ev.acted, alpha, h, s, oracle, substrate)
                members = x_alpha(w, h)
                if checks is None or not checks(lambda q: int(q in members)):
                    problems.append(f"stage {ev.stage}: witness {w!r} fails C2/C3 on replay")
        alpha += ev.bit
    return problems
