"""Desk-scale model of computation: indexed functions, functionals and c.e. sets.

Two kinds of behavior live side by side. Interpreted behaviors wrap a
:class:`~introimmune.regmachine.Program` and are only ever run under a step
budget. Scripted behaviors declare what they do in Python; their halting
facts are known exactly, which is what exact unit checks need.

Scripted functionals are generator functions of the input. Each ``yield q``
asks the oracle about position ``q`` and receives the bit back; ``yield
Tick(k)`` burns ``k`` steps; ``yield DIVERGE`` declares that the computation
never halts. Returning a value halts. A query costs one step and halting
costs one step, the same accounting the register machine uses.
"""

from collections import Counter
from dataclasses import dataclass, field
from itertools import islice
import inspect
import threading

from .regmachine import Program


class UnregisteredIndex(KeyError):
    def __init__(self, kind, index):
        super().__init__(f"unregistered index: {kind} {index}")
        self.kind = kind
        self.index = index

    def __str__(self):
        return self.args[0]


class OutOfAnswers(Exception):
    """Raised by an answer source that refuses to answer another query."""


class ExactAnswerUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class Tick:
    steps: int = 1


class _Diverge:
    def __repr__(self):
        return "DIVERGE"


DIVERGE = _Diverge()


@dataclass(frozen=True)
class OracleAnswerLog:
    queries: tuple[int, ...] = ()
    answers: tuple[int, ...] = ()

    @property
    def use(self) -> int:
        return max(self.queries) if self.queries else 0

    @property
    def count(self) -> int:
        return len(set(self.queries))

    def to_dict(self):
        return {"queries": list(self.queries), "answers": list(self.answers)}


@dataclass(frozen=True)
class Outcome:
    # halted | running (budget spent) | diverged (declared) | exhausted (answers refused)
    status: str
    value: int | None = None
    log: OracleAnswerLog = field(default_factory=OracleAnswerLog)
    steps: int = 0

    @property
    def halted(self) -> bool:
        return self.status == "halted"


@dataclass(frozen=True)
class FiniteBinaryOracle:
    """Total oracle reading ``bits`` and answering 0 past its end."""

    bits: str = ""

    def __post_init__(self):
        if set(self.bits) - {"0", "1"}:
            raise ValueError(f"not a binary string: {self.bits!r}")

    def __call__(self, y: int) -> int:
        return int(self.bits[y]) if 0 <= y < len(self.bits) else 0

    @classmethod
    def from_set(cls, members, length=None):
        members = set(members)
        if length is None:
            length = max(members, default=-1) + 1
        return cls("".join("1" if y in members else "0" for y in range(length)))


@dataclass(frozen=True)
class SetOracle:
    members: frozenset = frozenset()

    def __call__(self, y: int) -> int:
        return 1 if y in self.members else 0


# -- functions -----------------------------------------------------------

class ScriptedFunction:
    """phi(x) = fn(x), with ``None`` meaning divergence; costs ``cost`` steps."""

    scripted = True

    def __init__(self, fn, cost=1, total=None, name=None):
        self.fn = fn
        self.cost = cost
        self.total = total
        self.name = name or getattr(fn, "__name__", "scripted")

    def run(self, x, budget):
        value = self.fn(x)
        if value is None:
            if budget is None:
                return Outcome("diverged")
            return Outcome("running", steps=budget)
        steps = self.cost(x) if callable(self.cost) else self.cost
        if budget is not None and steps > budget:
            return Outcome("running", steps=budget)
        return Outcome("halted", int(value), steps=steps)


class ProgramFunction:
    scripted = False
    total = None

    def __init__(self, program: Program, name=None):
        self.program = program
        self.name = name or "program"

    def run(self, x, budget):
        res = self.program.run(x, budget)
        return Outcome(res.status, res.value, steps=res.steps)


# -- functionals ----------------------------------------------------------

class ScriptedFunctional:
    scripted = True

    def __init__(self, fn, total=None, name=None):
        self.fn = fn
        self.total = total
        self.name = name or getattr(fn, "__name__", "scripted")

    def run(self, x, ask, budget):
        result = self.fn(x)
        if not inspect.isgenerator(result):
            if budget is not None and budget < 1:
                return Outcome("running", steps=budget)
            return Outcome("halted", int(result), steps=1)
        steps = 0
        reply = None
        try:
            while True:
                item = result.send(reply)
                reply = None
                if item is DIVERGE:
                    if budget is None:
                        return Outcome("diverged", steps=steps)
                    return Outcome("running", steps=budget)
                if isinstance(item, Tick):
                    steps += item.steps
                    if budget is not None and steps > budget:
                        return Outcome("running", steps=budget)
                    continue
                steps += 1
                if budget is not None and steps > budget:
                    return Outcome("running", steps=budget)
                reply = ask(int(item))
        except StopIteration as stop:
            steps += 1
            if budget is not None and steps > budget:
                return Outcome("running", steps=budget)
            return Outcome("halted", int(stop.value), steps=steps)
        finally:
            result.close()


class ProgramFunctional:
    scripted = False
    total = None

    def __init__(self, program: Program, name=None):
        self.program = program
        self.name = name or "program"

    def run(self, x, ask, budget):
        res = self.program.run(x, budget, ask=ask)
        return Outcome(res.status, res.value, steps=res.steps)


class Normalized:
    """Wrapper that remembers oracle answers so no query is ever asked twice."""

    def __init__(self, inner):
        self.inner = inner
        self.scripted = inner.scripted
        self.total = inner.total
        self.name = f"normalized({inner.name})"

    def run(self, x, ask, budget):
        cache = {}

        def cached(q):
            if q not in cache:
                cache[q] = ask(q)
            return cache[q]

        return self.inner.run(x, cached, budget)


class NowhereDefined:
    """The everywhere-divergent behavior; stands in for unregistered indices."""

    scripted = True
    total = False
    name = "nowhere-defined"

    def run(self, x, *args):
        budget = args[-1]
        if budget is None:
            return Outcome("diverged")
        return Outcome("running", steps=budget)


# -- c.e. sets and families -----------------------------------------------

class ScriptedCeSet:
    """A c.e. set listed by ``items()`` at ``rate`` steps per item.

    ``contains`` is the declared membership test used for exact answers;
    finite listings get one for free.
    """

    scripted = True

    def __init__(self, items, rate=1, contains=None, name=None):
        if isinstance(items, (list, tuple, set, frozenset)):
            listed = tuple(sorted(set(items))) if isinstance(items, (set, frozenset)) else tuple(items)
            self.items = lambda: iter(listed)
            finite = frozenset(listed)
            self.finite = finite
            contains = contains or finite.__contains__
        else:
            self.items = items
            self.finite = None
        self.rate = rate
        self.contains = contains
        self.name = name or "scripted-ce"

    def enumerate(self, s):
        return list(islice(self.items(), max(s, 0) // self.rate))

    def member_exact(self, x) -> bool:
        if self.contains is None:
            raise ExactAnswerUnavailable(f"{self.name} declares no membership test")
        return bool(self.contains(x))


class ProgramCeSet:
    scripted = False

    def __init__(self, program: Program, name=None):
        self.program = program
        self.name = name or "program"

    def enumerate(self, s, x=0):
        out = []
        self.program.run(x, s, on_emit=lambda v, _step: out.append(v))
        return out

    def member_exact(self, x):
        raise ExactAnswerUnavailable("interpreted c.e. sets have no exact membership")


class AffineFamily:
    """Uniform family V_x = explicit[x], or {x+d : d in offsets} | constants.

    Members of V_x are listed in increasing order at ``rate`` steps each.
    """

    scripted = True

    def __init__(self, offsets=(), constants=(), explicit=None, rate=1, name=None):
        self.offsets = tuple(sorted(set(offsets)))
        self.constants = frozenset(constants)
        self.explicit = {int(k): frozenset(v) for k, v in (explicit or {}).items()}
        self.rate = rate
        self.name = name or "affine-family"

    def members(self, x) -> frozenset:
        if x in self.explicit:
            return self.explicit[x]
        return frozenset(x + d for d in self.offsets if x + d >= 0) | self.constants

    def enumerate(self, x, s):
        return sorted(self.members(x))[: max(s, 0) // self.rate]

    def first_witness(self, x_min, avoid):
        """Least (x, y) with x >= x_min, y in V_x and y outside avoid | {x}.

        Past ``bound`` every x has the same answer (no explicit entries, every
        shifted member clears ``avoid``, constants sit below x), so a scan up
        to ``bound`` is exhaustive.
        """
        avoid = frozenset(avoid)
        spread = max((abs(d) for d in self.offsets), default=0)
        bound = max(x_min,
                    max(self.explicit, default=-1) + 1,
                    max(avoid, default=0) + spread + 1,
                    max(self.constants, default=0) + 1)
        for x in range(x_min, bound + 1):
            spare = self.members(x) - avoid - {x}
            if spare:
                return x, min(spare)
        return None


class ProgramFamily:
    scripted = False

    def __init__(self, program: Program, name=None):
        self.program = program
        self.name = name or "program"

    def enumerate(self, x, s):
        out = []
        self.program.run(x, s, on_emit=lambda v, _step: out.append(v))
        return sorted(set(out))

    def members(self, x):
        raise ExactAnswerUnavailable("interpreted families have no exact members")


# -- the substrate --------------------------------------------------------

class Substrate:
    """Registry of indexed behaviors.

    Registration happens in the constructor; afterwards only derived
    (normalized) wrappers are added, under fresh indices.
    """

    def __init__(self, functions=None, functionals=None, ce_sets=None, families=None):
        self.functions = dict(functions or {})
        self.functionals = dict(functionals or {})
        self.ce_sets = dict(ce_sets or {})
        self.families = dict(families or {})
        self._normalized: dict[int, int] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return (f"Substrate(functions={sorted(self.functions)}, functionals={sorted(self.functionals)}, "
                f"ce_sets={sorted(self.ce_sets)}, families={sorted(self.families)})")

    def function(self, b):
        try:
            return self.functions[b]
        except KeyError:
            raise UnregisteredIndex("function", b) from None

    def functional(self, a):
        try:
            return self.functionals[a]
        except KeyError:
            raise UnregisteredIndex("functional", a) from None

    def ce_set(self, e):
        try:
            return self.ce_sets[e]
        except KeyError:
            raise UnregisteredIndex("c.e. set", e) from None

    def family(self, e):
        try:
            return self.families[e]
        except KeyError:
            raise UnregisteredIndex("family", e) from None

    def eval_phi(self, e: int, x: int, s: int) -> Outcome:
        out = self.function(e).run(x, s)
        return out if out.halted else Outcome("running", steps=s)

    def run_functional(self, a, x, ask, budget, max_queries=None, behavior=None) -> Outcome:
        """Run Phi_a(x) answering queries with ``ask`` and log every query.

        ``budget=None`` runs a scripted behavior to its declared end. With
        ``max_queries`` set, the computation is cut off (status
        ``exhausted``) when it asks more than that many queries.
        """
        behavior = behavior or self.functional(a)
        queries, answers = [], []

        def logged(q):
            if max_queries is not None and len(queries) >= max_queries:
                raise OutOfAnswers(q)
            bit = ask(q)
            queries.append(q)
            answers.append(bit)
            return bit

        try:
            out = behavior.run(x, logged, budget)
        except OutOfAnswers:
            return Outcome("exhausted", log=OracleAnswerLog(tuple(queries), tuple(answers)))
        return Outcome(out.status, out.value, OracleAnswerLog(tuple(queries), tuple(answers)), out.steps)

    def eval_functional(self, a: int, oracle, x: int, s: int) -> Outcome:
        out = self.run_functional(a, x, oracle, s)
        return out if out.halted else Outcome("running", log=out.log, steps=s)

    def normalize_functional(self, a: int) -> int:
        inner = self.functional(a)
        with self._lock:
            if a not in self._normalized:
                fresh = max(self.functionals, default=-1) + 1
                self.functionals[fresh] = Normalized(inner)
                self._normalized[a] = fresh
            return self._normalized[a]

    def enumerate_ce(self, e: int, s: int) -> frozenset:
        return frozenset(self.ce_set(e).enumerate(s))

    def enumerate_family(self, e: int, x: int, s: int) -> frozenset:
        return frozenset(self.family(e).enumerate(x, s))


# -- the halting oracle ---------------------------------------------------

@dataclass(frozen=True)
class PhiConverges:
    b: int
    x: int


@dataclass(frozen=True)
class FunctionalConverges:
    a: int
    x: int
    oracle: object


@dataclass(frozen=True)
class CeContains:
    e: int
    x: int


@dataclass(frozen=True)
class HaltingAnswer:
    yes: bool
    mode: str               # "exact" or "budgeted"
    budget: int | None = None


@dataclass
class HaltingOracle:
    """Stand-in for K.

    In ``exact`` mode scripted behaviors are answered from their declarations
    and interpreted ones fall back to the step budget; in ``budgeted`` mode
    everything is run for ``budget`` steps. Every answer is tallied by the
    mode that actually produced it.
    """

    mode: str = "exact"
    budget: int = 10_000
    tally: Counter = field(default_factory=Counter, compare=False)

    def __post_init__(self):
        if self.mode not in ("exact", "budgeted"):
            raise ValueError(f"unknown halting-oracle mode {self.mode!r}")

    def budget_for(self, behavior) -> int | None:
        if self.mode == "exact" and behavior.scripted:
            return None
        return self.budget

    def record(self, behavior) -> str:
        tag = "exact" if self.budget_for(behavior) is None else "budgeted"
        self.tally[tag] += 1
        return tag

    @property
    def approximate(self) -> bool:
        return self.tally["budgeted"] > 0

    def phi(self, substrate, b, x):
        """Value of phi_b(x) if K says it converges, else None."""
        behavior = substrate.functions.get(b, NowhereDefined())
        self.record(behavior)
        out = behavior.run(x, self.budget_for(behavior))
        return out.value if out.halted else None

    def run_functional(self, substrate, a, x, ask, max_queries=None, normalized=False):
        behavior = substrate.functionals.get(a, NowhereDefined())
        if normalized and not isinstance(behavior, (Normalized, NowhereDefined)):
            behavior = Normalized(behavior)
        self.record(behavior)
        return substrate.run_functional(a, x, ask, self.budget_for(behavior),
                                        max_queries=max_queries, behavior=behavior)

    def ce_member(self, substrate, e, x) -> bool:
        behavior = substrate.ce_set(e)
        tag = self.record(behavior)
        if tag == "exact":
            return behavior.member_exact(x)
        return x in behavior.enumerate(self.budget)


def ask_halting(oracle: HaltingOracle, query, substrate: Substrate) -> HaltingAnswer:
    if isinstance(query, PhiConverges):
        behavior = substrate.function(query.b)
        yes = oracle.phi(substrate, query.b, query.x) is not None
    elif isinstance(query, FunctionalConverges):
        behavior = substrate.functional(query.a)
        yes = oracle.run_functional(substrate, query.a, query.x, query.oracle).halted
    elif isinstance(query, CeContains):
        behavior = substrate.ce_set(query.e)
        yes = oracle.ce_member(substrate, query.e, query.x)
    else:
        raise TypeError(f"not a halting query: {query!r}")
    budget = oracle.budget_for(behavior)
    return HaltingAnswer(yes, "exact" if budget is None else "budgeted", budget)
