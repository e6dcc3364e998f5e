"""Enumeration operators from c.e. axiom sets, and the sequence-to-string axiom transform.

An axiom <x, F> puts x into Psi(C) as soon as the finite premise F lies in C.
Axioms about strictly increasing sequences sigma (prefixes of the principal
function p_C) become axioms about binary strings tau_sigma (prefixes of the
characteristic function of C).
"""

from dataclasses import dataclass

from .pairing import decode_finite_set, encode_finite_set, pair, unpair


class MalformedAxiom(ValueError):
    pass


def decode_axiom(code: int) -> tuple[int, frozenset]:
    x, premise = unpair(code)
    try:
        return x, decode_finite_set(premise)
    except ValueError as err:
        raise MalformedAxiom(f"axiom code {code}: {err}") from None


def encode_axiom(x: int, premise) -> int:
    return pair(x, encode_finite_set(premise))


def _membership(c):
    if isinstance(c, (set, frozenset)):
        return c.__contains__
    if callable(c):
        return c
    if hasattr(c, "__contains__"):
        return c.__contains__
    raise TypeError(f"cannot read membership from {c!r}")


def apply_enum_operator(axioms, c, budget=None, substrate=None):
    """Psi_W(C): every x with an axiom <x, F> (enumerated within budget) and F within C.

    ``axioms`` is a substrate c.e.-set index (needs ``substrate``), a c.e.
    behavior, or an iterable of axiom codes.
    """
    if isinstance(axioms, int):
        if substrate is None:
            raise ValueError("an axiom-set index needs a substrate")
        axioms = substrate.ce_set(axioms)
    if hasattr(axioms, "enumerate"):
        if budget is None:
            raise ValueError("enumerating a c.e. axiom set needs a budget")
        codes = axioms.enumerate(budget)
    else:
        codes = axioms
    inside = _membership(c)
    out = set()
    for code in codes:
        x, premise = decode_axiom(code)
        if all(inside(y) for y in premise):
            out.add(x)
    return frozenset(out)


def is_increasing(seq) -> bool:
    return all(a < b for a, b in zip(seq, seq[1:]))


def tau_string(seq) -> str:
    """Binary string of length max(seq)+1 with 1s exactly at the entries of seq."""
    seq = tuple(seq)
    if not is_increasing(seq):
        raise ValueError(f"not strictly increasing: {seq}")
    if not seq:
        return ""
    marks = set(seq)
    return "".join("1" if i in marks else "0" for i in range(seq[-1] + 1))


def hat_transform(axioms):
    """[(sigma, x)] -> [(tau_sigma, x)], dropping sigma that are not strictly increasing."""
    return [(tau_string(seq), x) for seq, x in axioms if is_increasing(tuple(seq))]


@dataclass(frozen=True)
class EventuallyPeriodicSet:
    """Characteristic string ``prefix`` followed by ``period`` repeated forever."""

    prefix: str = ""
    period: str = "1"

    def __post_init__(self):
        if not self.period or set(self.prefix + self.period) - {"0", "1"}:
            raise ValueError("prefix/period must be binary and the period nonempty")

    @property
    def infinite(self):
        return "1" in self.period

    def __contains__(self, x):
        if x < len(self.prefix):
            return self.prefix[x] == "1"
        return self.period[(x - len(self.prefix)) % len(self.period)] == "1"

    def characteristic(self, length):
        return "".join("1" if x in self else "0" for x in range(length))

    def principal(self, count):
        """The first ``count`` elements, in increasing order."""
        if count and not self.infinite:
            raise ValueError("principal function of a finite set")
        out, x = [], 0
        while len(out) < count:
            if x in self:
                out.append(x)
            x += 1
        return tuple(out)


def sequence_prefix_of_principal(seq, c: EventuallyPeriodicSet) -> bool:
    return tuple(seq) == c.principal(len(seq))


def string_prefix_of_characteristic(tau, c: EventuallyPeriodicSet) -> bool:
    return tau == c.characteristic(len(tau))


class EquivalenceViolation(AssertionError):
    pass


def check_prefix_equivalence(seq, c: EventuallyPeriodicSet) -> bool:
    """Whether seq is a prefix of p_C, after confirming the string-side predicate agrees."""
    left = sequence_prefix_of_principal(seq, c)
    right = string_prefix_of_characteristic(tau_string(seq), c)
    if left != right:
        raise EquivalenceViolation(f"sigma={tuple(seq)} C={c}: principal says {left}, string says {right}")
    return left


def apply_sequence_axioms(axioms, c: EventuallyPeriodicSet):
    """Theta(p_C) for axioms (sigma, x): x whenever sigma is a prefix of p_C."""
    return frozenset(x for seq, x in axioms
                     if is_increasing(tuple(seq)) and sequence_prefix_of_principal(seq, c))


def apply_string_axioms(axioms, c: EventuallyPeriodicSet):
    """x whenever tau is a prefix of C's characteristic string."""
    return frozenset(x for tau, x in axioms if string_prefix_of_characteristic(tau, c))
