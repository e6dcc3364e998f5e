"""Q-reducibility: the Pi^0_1 witness and the bit-by-bit Delta^0_2 construction.

Requirement R_e works against the uniformly c.e. family V_{e,x}. Each R_e
is Initial, Working (a target string tau), Waiting (a base set D and a
length bound L) or Satisfied. One bit of sigma is written per stage.
"""

from dataclasses import dataclass, field, replace

from .errors import CapExceeded
from .substrate import AffineFamily, HaltingOracle, UnregisteredIndex

INITIAL, WORKING, WAITING, SATISFIED = "Initial", "Working", "Waiting", "Satisfied"
LEGAL = {
    INITIAL: {WORKING, WAITING, SATISFIED},
    WORKING: {WORKING, SATISFIED},
    WAITING: {SATISFIED},
    SATISFIED: set(),
}
DEFAULT_HORIZON = 256


# -- co-c.e. sets reduce to every subset ----------------------------------

@dataclass(frozen=True)
class WaitForMember:
    """W_{f(x)}: enumerates x once x shows up in the c.e. complement, else nothing."""

    complement: object
    x: int

    def enumerate(self, s):
        return frozenset({self.x}) if self.x in self.complement.enumerate(s) else frozenset()

    def members(self, oracle=None, substrate=None, index=None):
        oracle = oracle or HaltingOracle()
        if oracle.budget_for(self.complement) is None:
            hit = self.complement.member_exact(self.x)
        else:
            hit = self.x in self.complement.enumerate(oracle.budget)
        oracle.tally["exact" if oracle.budget_for(self.complement) is None else "budgeted"] += 1
        return frozenset({self.x}) if hit else frozenset()


def q_witness_pi01(complement_index, x, substrate):
    """The c.e. set W_{f(x)} for A = complement of W_{complement_index}."""
    return WaitForMember(substrate.ce_set(complement_index), x)


def pi01_membership(complement_index, horizon, substrate, oracle=None):
    """A restricted to [0, horizon), read off the c.e. complement."""
    oracle = oracle or HaltingOracle()
    return frozenset(x for x in range(horizon)
                     if not oracle.ce_member(substrate, complement_index, x))


@dataclass
class ReductionReport:
    checked: int
    discrepancies: list

    @property
    def ok(self):
        return not self.discrepancies


def q_check_reduction(a_prefix, b_prefix, witnesses, horizon, budget=None, oracle=None):
    """Check x in A <=> W_{f(x)} subset of B for every x < horizon.

    ``witnesses(x)`` returns the W_{f(x)} descriptor. With ``budget`` set,
    W is enumerated for that many steps; otherwise exact members are used.
    """
    a_prefix = frozenset(a_prefix)
    b_prefix = frozenset(b_prefix)
    if not b_prefix <= a_prefix:
        raise ValueError(f"B is not a subset of A on the prefix: {sorted(b_prefix - a_prefix)[:5]}")
    bad = []
    for x in range(horizon):
        w = witnesses(x)
        members = w.enumerate(budget) if budget is not None else w.members(oracle)
        lhs = x in a_prefix
        rhs = members <= b_prefix
        if lhs != rhs:
            bad.append((x, lhs, sorted(members)))
    return ReductionReport(horizon, bad)


# -- the Delta^0_2 construction --------------------------------------------

@dataclass(frozen=True)
class QRequirement:
    state: str = INITIAL
    tau: str | None = None
    base: frozenset | None = None     # D_e
    bound: int | None = None          # L_e
    inits: int = 0
    via: str | None = None            # condition that satisfied it
    witness: tuple | None = None      # (x, y) for C1/C4, (x, x') for C3

    def to_dict(self):
        return {"state": self.state, "tau": self.tau,
                "base": sorted(self.base) if self.base is not None else None,
                "bound": self.bound, "inits": self.inits, "via": self.via,
                "witness": list(self.witness) if self.witness else None}

    @classmethod
    def from_dict(cls, d):
        return cls(d["state"], d.get("tau"), frozenset(d["base"]) if d.get("base") is not None else None,
                   d.get("bound"), d.get("inits", 0), d.get("via"),
                   tuple(d["witness"]) if d.get("witness") else None)


@dataclass(frozen=True)
class Verdict:
    kind: str                          # none, C1, C2, C3, C4
    witness: tuple | None = None
    approximate: bool = False
    violation: str | None = None       # containment failure detected in budgeted mode


class FamilyView:
    """Access to V_{e,x} through the halting oracle; unregistered e is the empty family."""

    def __init__(self, substrate, oracle: HaltingOracle, horizon=DEFAULT_HORIZON):
        self.substrate = substrate
        self.oracle = oracle
        self.horizon = horizon

    def behavior(self, e):
        return self.substrate.families.get(e)

    def exact(self, e):
        fam = self.behavior(e)
        return fam is None or self.oracle.budget_for(fam) is None

    def members(self, e, x):
        fam = self.behavior(e)
        if fam is None:
            return frozenset()
        tag = self.oracle.record(fam)
        if tag == "exact":
            return frozenset(fam.members(x))
        return frozenset(fam.enumerate(x, self.oracle.budget))

    def first_witness(self, e, x_min, avoid):
        """Least (x, y), x >= x_min, y in V_{e,x} outside avoid | {x}."""
        fam = self.behavior(e)
        if fam is None:
            return None
        if isinstance(fam, AffineFamily) and self.exact(e):
            self.oracle.record(fam)
            return fam.first_witness(x_min, avoid)
        for x in range(x_min, x_min + self.horizon):
            spare = self.members(e, x) - avoid - {x}
            if spare:
                return x, min(spare)
        return None


def _recorded(sigma, base, bound, target, view, e):
    """Least x in [bound, len(sigma)) with sigma(x)=1, x not in V_x, V_x & base == target."""
    for x in range(bound, len(sigma)):
        if sigma[x] == "1":
            vx = view.members(e, x)
            if x not in vx and (vx & base) == target:
                return x
    return None


def q_requires_attention(e, req: QRequirement, sigma, s, view: FamilyView) -> Verdict:
    xp = s
    approx = not view.exact(e)
    if req.state == INITIAL:
        a_s = frozenset(z for z in range(s) if sigma[z] == "1")
        found = view.first_witness(e, xp, a_s)
        if found is not None:
            return Verdict("C1", found, approx)
        return Verdict("C2", None, approx)
    if req.state == WAITING:
        v = view.members(e, xp)
        if not v <= req.base | {xp}:
            return Verdict("none", None, approx,
                           f"V_{{{e},{xp}}} = {sorted(v)} escapes D_e + {{x'}}")
        if xp in v:
            return Verdict("none", None, approx)
        target = v & req.base
        x = _recorded(sigma, req.base, req.bound, target, view, e)
        if x is not None:
            return Verdict("C3", (x, xp), approx)
        return Verdict("none", None, approx)
    if req.state == WORKING and xp < len(req.tau):
        return Verdict("C4", None, approx)
    return Verdict("none")


def build_target(sigma, x, y):
    xp = len(sigma)
    length = max(x, y) + 1
    bits = []
    for z in range(xp, length):
        bits.append("1" if z == x else "0")   # y, when >= x', and every other slot get 0
    return sigma + "".join(bits)


@dataclass(frozen=True)
class QEvent:
    stage: int
    acted: int | None
    condition: str                   # C1..C4 or default
    bit: str
    witness: tuple | None = None
    tau: str | None = None
    transitions: tuple = ()          # (e, from, to, cause)
    approximate: bool = False
    violations: tuple = ()

    def to_record(self):
        payload = {"acted": self.acted, "bit": self.bit,
                   "witness": list(self.witness) if self.witness else None, "tau": self.tau,
                   "transitions": [list(t) for t in self.transitions],
                   "approximate": self.approximate, "violations": list(self.violations)}
        return {"stage": self.stage, "kind": self.condition, "payload": payload}

    @classmethod
    def from_record(cls, rec):
        p = rec["payload"]
        return cls(rec["stage"], p.get("acted"), rec["kind"], p["bit"],
                   tuple(p["witness"]) if p.get("witness") else None, p.get("tau"),
                   tuple(tuple(t) for t in p.get("transitions", [])), p.get("approximate", False),
                   tuple(p.get("violations", [])))


def q_stage(states, sigma, s, view: FamilyView):
    """Stage s+1. Returns (new states, sigma_{s+1}, event)."""
    if len(sigma) != s:
        raise ValueError(f"tape has length {len(sigma)} at stage {s}")
    states = list(states) + [QRequirement()] * (s + 1 - len(states))
    violations = []
    approx = False
    for e in range(s + 1):
        req = states[e]
        if req.state == SATISFIED:
            continue
        verdict = q_requires_attention(e, req, sigma, s, view)
        approx |= verdict.approximate
        if verdict.violation:
            violations.append(verdict.violation)
        if verdict.kind == "none":
            continue
        return _act(states, sigma, s, e, verdict, approx, violations)
    event = QEvent(s + 1, None, "default", "1", approximate=approx, violations=tuple(violations))
    return states, sigma + "1", event


def _act(states, sigma, s, e, verdict, approx, violations):
    req = states[e]
    transitions = []
    tau = None
    witness = verdict.witness
    if verdict.kind == "C1":
        x, y = witness
        tau = build_target(sigma, x, y)
        bit = tau[s]
        done = len(tau) == s + 1
        new = replace(req, state=SATISFIED if done else WORKING, tau=tau,
                      via="C1" if done else None, witness=(x, y))
    elif verdict.kind == "C2":
        bit = "1"
        new = replace(req, state=WAITING, base=frozenset(z for z in range(s) if sigma[z] == "1"),
                      bound=s)
    elif verdict.kind == "C3":
        bit = "0"
        new = replace(req, state=SATISFIED, via="C3", witness=witness)
    else:
        tau = req.tau
        bit = tau[s]
        done = len(tau) == s + 1
        new = replace(req, state=SATISFIED if done else WORKING, via="C4" if done else None)
        witness = req.witness
    transitions.append((e, req.state, new.state, verdict.kind))
    states = list(states)
    states[e] = new
    for i in range(e + 1, len(states)):
        if states[i].state != INITIAL:
            transitions.append((i, states[i].state, INITIAL, "init"))
            states[i] = QRequirement(inits=states[i].inits + 1)
    event = QEvent(s + 1, e, verdict.kind, bit, witness, tau, tuple(transitions), approx,
                   tuple(violations))
    return states, sigma + bit, event


@dataclass
class QRun:
    sigma: str
    states: list
    events: list

    @property
    def init_counts(self):
        return [r.inits for r in self.states]


def q_run(substrate, stages, oracle=None, horizon=DEFAULT_HORIZON, stage_fn=None, max_horizon=10_000):
    if horizon > max_horizon:
        raise CapExceeded(f"search horizon {horizon} exceeds {max_horizon}")
    view = FamilyView(substrate, oracle or HaltingOracle(), horizon)
    stage_fn = stage_fn or q_stage
    states, sigma, events = [], "", []
    for s in range(stages):
        states, sigma, event = stage_fn(states, sigma, s, view)
        events.append(event)
    return QRun(sigma, states, events)


# -- verification ---------------------------------------------------------

def _family_members(substrate, e, x, oracle):
    fam = substrate.families.get(e)
    if fam is None:
        return frozenset()
    if oracle.budget_for(fam) is None:
        return frozenset(fam.members(x))
    return frozenset(fam.enumerate(x, oracle.budget))


def q_verify(events, states, sigma, substrate, oracle=None):
    """Finite-stage checks of the state machine and of every satisfied requirement."""
    oracle = oracle or HaltingOracle()
    problems = []
    if len(sigma) != len(events):
        problems.append(f"tape length {len(sigma)} differs from {len(events)} stages")
    tape = ""
    current = {}                      # e -> (state, base, bound)
    waiting_since = {}                # e -> (L, D, stage)
    episodes = []                     # (e, L, D, end) for every Waiting stretch
    for ev in events:
        s = ev.stage - 1
        tape += ev.bit
        if sigma[:len(tape)] != tape:
            problems.append(f"stage {ev.stage}: bit differs from the final tape")
        for e, old, new, cause in ev.transitions:
            before = current.get(e, (INITIAL,))[0]
            if before != old:
                problems.append(f"stage {ev.stage}: R_{e} recorded as {old} but was {before}")
            if cause == "init":
                if ev.acted is None or e <= ev.acted:
                    problems.append(f"stage {ev.stage}: R_{e} initialized without a stronger action")
                if new != INITIAL:
                    problems.append(f"stage {ev.stage}: initialization of R_{e} did not reset it")
            elif new not in LEGAL.get(old, ()):
                problems.append(f"stage {ev.stage}: illegal transition {old} -> {new} for R_{e}")
            if old == WAITING and e in waiting_since:
                bound, base, _ = waiting_since.pop(e)
                episodes.append((e, bound, base, s))
            if new == WAITING:
                base = frozenset(z for z in range(s) if tape[z] == "1")
                waiting_since[e] = (s, base, ev.stage)
            current[e] = (new,)
        if ev.condition == "C2":
            if ev.bit != "1":
                problems.append(f"stage {ev.stage}: C2 wrote {ev.bit}")
        if ev.condition == "C1" and ev.tau is not None and "1" not in ev.tau[s:]:
            problems.append(f"stage {ev.stage}: C1 target writes no 1")
    for e, (bound, base, _) in waiting_since.items():
        episodes.append((e, bound, base, len(sigma)))

    # Waiting parameters: the final state must carry what was fixed on entry
    for e, req in enumerate(states):
        if req.state == WAITING:
            entry = waiting_since.get(e)
            if entry is None or entry[0] != req.bound or entry[1] != req.base:
                problems.append(f"R_{e}: Waiting parameters changed after entry")
        if len(sigma) <= e:
            continue
        if req.state == SATISFIED and req.via in ("C1", "C4"):
            x, y = req.witness
            if not (x < len(sigma) and sigma[x] == "1"):
                problems.append(f"R_{e}: witness x={x} is not in A")
            if not (y < len(sigma) and sigma[y] == "0"):
                problems.append(f"R_{e}: witness y={y} is not outside A")
            if y not in _family_members(substrate, e, x, oracle):
                problems.append(f"R_{e}: y={y} not in V_({e},{x})")
        elif req.state == SATISFIED and req.via == "C3":
            x, xp = req.witness
            vx = _family_members(substrate, e, x, oracle)
            vxp = _family_members(substrate, e, xp, oracle)
            base = req.base or frozenset()
            if vx != vxp or not vx <= base:
                problems.append(f"R_{e}: recorded sets differ: V_x={sorted(vx)} V_x'={sorted(vxp)} "
                                f"D={sorted(base)}")
            if sigma[x] != "1" or sigma[xp] != "0":
                problems.append(f"R_{e}: recorded x={x} / x'={xp} have the wrong bits")
        elif req.state == SATISFIED:
            problems.append(f"R_{e}: Satisfied with no recorded reason")
    for e, bound, base, end in episodes:
        count = sum(1 for x in range(bound, end)
                    if sigma[x] == "1" and x not in _family_members(substrate, e, x, oracle))
        if count > 2 ** len(base) + 1:
            problems.append(f"R_{e}: {count} elements of A in [{bound}, {end}) avoid V_x, "
                            f"bound {2 ** len(base) + 1}")
    return problems

