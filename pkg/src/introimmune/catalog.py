"""Closed-form scripted behaviors, built from small descriptor dicts.

Descriptors are what manifests carry, e.g. ``{"script": "affine", "offset":
10}`` for a function or ``{"script": "probe", "queries": ["x+10"], "result":
"one"}`` for a functional. Every catalog entry halts on each input unless it
says otherwise, so exact halting answers follow from the descriptor.
"""

import re
from math import isqrt
from functools import reduce
from operator import and_, or_, xor

from .pairing import encode_finite_set, pair
from .regmachine import Program
from .substrate import (DIVERGE, AffineFamily, ProgramCeSet, ProgramFamily, ProgramFunction,
                        ProgramFunctional, ScriptedCeSet, ScriptedFunction, ScriptedFunctional)


class CatalogError(ValueError):
    pass


_TERM = re.compile(r"^\s*x\s*(?:([+-])\s*(\d+))?\s*$")


def parse_term(term):
    """``7`` -> constant position, ``"x+3"`` -> input offset; returns a function of x."""
    if isinstance(term, int):
        if term < 0:
            raise CatalogError(f"negative query position {term}")
        return lambda x: term
    if isinstance(term, str) and term.strip().isdigit():
        value = int(term)
        return lambda x: value
    m = _TERM.match(str(term))
    if not m:
        raise CatalogError(f"bad query term {term!r}")
    shift = int(m.group(2) or 0) * (-1 if m.group(1) == "-" else 1)
    return lambda x: max(x + shift, 0)


def _program(desc):
    if "program" in desc:
        return Program.parse(desc["program"])
    if "godel" in desc:
        return Program.from_godel(int(desc["godel"]))
    return None


def _require(desc, *keys):
    for key in keys:
        if key not in desc:
            raise CatalogError(f"{desc.get('script', '?')}: missing field {key!r}")


def build_function(desc):
    program = _program(desc)
    if program is not None:
        return ProgramFunction(program, name=desc.get("name"))
    kind = desc.get("script")
    cost = int(desc.get("cost", 1))
    below = desc.get("below")

    def limited(fn):
        if below is None:
            return fn
        return lambda x: fn(x) if x < below else None

    if kind == "identity":
        return ScriptedFunction(limited(lambda x: x), cost, total=below is None, name="identity")
    if kind == "const":
        _require(desc, "value")
        value = int(desc["value"])
        return ScriptedFunction(limited(lambda x: value), cost, total=below is None, name=f"const{value}")
    if kind == "affine":
        scale, offset = int(desc.get("scale", 1)), int(desc.get("offset", 0))
        return ScriptedFunction(limited(lambda x: scale * x + offset), cost, total=below is None,
                                name=f"{scale}x+{offset}")
    if kind == "diverge":
        return ScriptedFunction(lambda x: None, cost, total=False, name="diverge")
    raise CatalogError(f"unknown function script {kind!r}")


_RESULTS = {
    "one": lambda bits: 1,
    "zero": lambda bits: 0,
    "first": lambda bits: bits[0] if bits else 0,
    "last": lambda bits: bits[-1] if bits else 0,
    "xor": lambda bits: reduce(xor, bits, 0),
    "and": lambda bits: reduce(and_, bits, 1),
    "or": lambda bits: reduce(or_, bits, 0),
    "not-first": lambda bits: 1 - bits[0] if bits else 1,
}


def build_functional(desc):
    program = _program(desc)
    if program is not None:
        return ProgramFunctional(program, name=desc.get("name"))
    kind = desc.get("script")
    if kind == "const":
        value = int(desc.get("value", 1))

        def const(x):
            return value
            yield  # noqa: unreachable; makes this a generator

        return ScriptedFunctional(const, total=True, name=f"const{value}")
    if kind in ("probe", "copy"):
        terms = [parse_term(t) for t in desc.get("queries", ["x"] if kind == "copy" else [])]
        result = desc.get("result", "first" if kind == "copy" else "one")
        if result not in _RESULTS:
            raise CatalogError(f"unknown probe result {result!r}")
        combine = _RESULTS[result]

        def probe(x):
            bits = []
            for term in terms:
                bits.append((yield term(x)))
            return combine(bits)

        return ScriptedFunctional(probe, total=True, name=f"probe{desc.get('queries')}->{result}")
    if kind == "diverge-on-zero":
        term = parse_term(desc.get("query", "x"))
        value = int(desc.get("value", 1))

        def partial(x):
            if (yield term(x)) == 0:
                yield DIVERGE
            return value

        return ScriptedFunctional(partial, total=False, name="diverge-on-zero")
    if kind == "diverge":
        def nowhere(x):
            yield DIVERGE
            return 0

        return ScriptedFunctional(nowhere, total=False, name="diverge")
    raise CatalogError(f"unknown functional script {kind!r}")


def _squares():
    n = 0
    while True:
        yield n * n
        n += 1


def _non_squares():
    n, root = 0, 0
    while True:
        while (root + 1) ** 2 <= n:
            root += 1
        if root * root != n:
            yield n
        n += 1


def _residues(modulus, residues):
    def items():
        n = 0
        while True:
            if n % modulus in residues:
                yield n
            n += 1
    return items


def axiom_code(x, premise) -> int:
    return pair(int(x), encode_finite_set(premise))


def build_ce_set(desc):
    program = _program(desc)
    if program is not None:
        return ProgramCeSet(program, name=desc.get("name"))
    kind = desc.get("script")
    rate = int(desc.get("rate", 1))
    if kind == "empty":
        return ScriptedCeSet([], rate, name="empty")
    if kind == "finite":
        _require(desc, "members")
        return ScriptedCeSet([int(v) for v in desc["members"]], rate, name="finite")
    if kind == "residues":
        _require(desc, "modulus", "residues")
        modulus = int(desc["modulus"])
        residues = frozenset(int(r) % modulus for r in desc["residues"])
        return ScriptedCeSet(_residues(modulus, residues), rate,
                             contains=lambda x: x % modulus in residues,
                             name=f"residues{sorted(residues)}mod{modulus}")
    if kind == "squares":
        return ScriptedCeSet(_squares, rate, contains=lambda x: isqrt(x) ** 2 == x,
                             name="squares")
    if kind == "non-squares":
        return ScriptedCeSet(_non_squares, rate, contains=lambda x: isqrt(x) ** 2 != x,
                             name="non-squares")
    if kind == "axioms":
        _require(desc, "axioms")
        codes = []
        for item in desc["axioms"]:
            try:
                x, premise = item
            except (TypeError, ValueError):
                raise CatalogError(f"axiom must be [x, [premise...]], got {item!r}") from None
            codes.append(axiom_code(x, premise))
        return ScriptedCeSet(codes, rate, name="axioms")
    raise CatalogError(f"unknown c.e. set script {kind!r}")


def build_family(desc):
    program = _program(desc)
    if program is not None:
        return ProgramFamily(program, name=desc.get("name"))
    kind = desc.get("script")
    if kind == "empty":
        return AffineFamily(name="empty")
    if kind == "affine":
        explicit = {int(k): [int(v) for v in vs] for k, vs in (desc.get("explicit") or {}).items()}
        return AffineFamily(desc.get("offsets", ()), desc.get("constants", ()), explicit,
                            rate=int(desc.get("rate", 1)), name=desc.get("name"))
    raise CatalogError(f"unknown family script {kind!r}")
