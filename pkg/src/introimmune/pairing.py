"""Cantor pairing and the list/finite-set codings built on it."""

from math import isqrt


def pair(a: int, b: int) -> int:
    if a < 0 or b < 0:
        raise ValueError("pairing is defined on naturals only")
    return (a + b) * (a + b + 1) // 2 + b


def unpair(z: int) -> tuple[int, int]:
    if z < 0:
        raise ValueError("pairing is defined on naturals only")
    w = (isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


def encode_list(items) -> int:
    """Code a finite sequence of naturals: [] -> 0, [h, *t] -> <h, code(t)> + 1."""
    code = 0
    for item in reversed(list(items)):
        code = pair(item, code) + 1
    return code


def decode_list(code: int) -> list[int]:
    out = []
    while code:
        head, code = unpair(code - 1)
        out.append(head)
    return out


def encode_finite_set(members) -> int:
    return encode_list(sorted(set(members)))


def decode_finite_set(code: int) -> frozenset[int]:
    """Inverse of :func:`encode_finite_set`; rejects non-canonical codes."""
    items = decode_list(code)
    if any(x >= y for x, y in zip(items, items[1:])):
        raise ValueError(f"code {code} is not a canonical finite-set encoding: {items}")
    return frozenset(items)
