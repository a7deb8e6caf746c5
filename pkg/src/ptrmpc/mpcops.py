"""Derived private primitives: select, equality, comparison, bit decomposition.

Comparisons use dealer-supplied random bits to mask the operand, open the
masked value, and finish with a bitwise comparison between public and shared
bits.  Costs for a ``k``-bit operand:

==============  ==================  ======================
primitive       interactive ops     rounds
==============  ==================  ======================
mux_value       1                   1
eq_test         1 + (k - 1)         1 + ceil(log2 k)
lt_test         1 + (k - 3) + 1     1 + (k - 3) + 1
bit_decompose   1 + (k - 1)         1 + (k - 1)
==============  ==================  ======================

The ``*_many`` forms run independent instances in lockstep so they share
rounds.
"""

from __future__ import annotations

from typing import Sequence

from .harness import Runtime, Value
from .shamir import SharedValue


class ComparisonRangeError(ValueError):
    pass


def _check_width(rt: Runtime, bitlen: int) -> None:
    field_bits = rt.p.bit_length() - 1
    if bitlen < 2:
        raise ComparisonRangeError("comparison width must be >= 2 bits")
    if bitlen + rt.config.kappa > field_bits - 1:
        raise ComparisonRangeError(
            f"{bitlen}-bit comparison with kappa={rt.config.kappa} needs a field of "
            f"more than {field_bits} bits")


def _bits(v: int, k: int) -> list[int]:
    return [(v >> i) & 1 for i in range(k)]


def mux_value(rt: Runtime, a: Value, a2: Value, c: Value) -> Value:
    """c ? a2 : a, as c*(a2 - a) + a."""
    return rt.mul(c, a2 - a) + a


def mux_many(rt: Runtime, items: Sequence[tuple[Value, Value, Value]]) -> list[Value]:
    prods = rt.mul_many([(c, a2 - a) for a, a2, c in items])
    return [pr + a for pr, (a, _, _) in zip(prods, items)]


def bit_and(rt: Runtime, a: Value, b: Value) -> Value:
    return rt.mul(a, b)


def bit_or(rt: Runtime, a: Value, b: Value) -> Value:
    return a + b - rt.mul(a, b)


def bit_not(a: Value) -> Value:
    return 1 - a


def _mask(rt: Runtime, values: Sequence[SharedValue], low_bits: int,
          hi_bits: int) -> tuple[list[list[SharedValue]], list[int], int]:
    """Open value + r for dealer randomness r = sum 2^i r_i + 2^low_bits * r_hi."""
    masks = []
    masked = []
    for v in values:
        rb = rt.dealer_rand_bits(low_bits)
        hi = rt.dealer_rand_int(hi_bits)
        r = hi.scale(1 << low_bits)
        for i, b in enumerate(rb):
            r = r + b.scale(1 << i)
        masks.append(rb)
        masked.append(v + r)
    opened, rnd = rt.open_many(masked)
    return masks, opened, rnd


def _product_tree(rt: Runtime, rows: list[list[Value]]) -> list[Value]:
    """Product of each row, log-depth, all rows level-synchronised."""
    rows = [list(r) for r in rows]
    while any(len(r) > 1 for r in rows):
        pairs, shape = [], []
        for r in rows:
            half = len(r) // 2
            shape.append((half, len(r) % 2 == 1))
            pairs.extend((r[2 * i], r[2 * i + 1]) for i in range(half))
        prods = rt.mul_many(pairs)
        pos, nxt = 0, []
        for r, (half, odd) in zip(rows, shape):
            row = prods[pos: pos + half]
            pos += half
            if odd:
                row.append(r[-1])
            nxt.append(row)
        rows = nxt
    return [r[0] for r in rows]


def eq_many(rt: Runtime, pairs: Sequence[tuple[Value, Value]], bitlen: int) -> list[Value]:
    """[x == y] for signed x - y in [-2^(bitlen-1), 2^(bitlen-1))."""
    _check_width(rt, bitlen)
    out: list[Value] = [0] * len(pairs)
    idx, diffs = [], []
    for pos, (x, y) in enumerate(pairs):
        z = x - y
        if isinstance(z, int):
            out[pos] = int(z % rt.p == 0)
        else:
            idx.append(pos)
            diffs.append(z)
    if not diffs:
        return out
    k = bitlen
    half = 1 << (k - 1)
    masks, opened, rnd = _mask(rt, [z + half for z in diffs], k, rt.config.kappa)
    rows = []
    for rb, c in zip(masks, opened):
        d = _bits((c - half) % (1 << k), k)
        rows.append([b.at_depth(rnd) if di else (1 - b).at_depth(rnd)
                     for b, di in zip(rb, d)])
    for pos, v in zip(idx, _product_tree(rt, rows)):
        out[pos] = v
    return out


def eq_test(rt: Runtime, x: Value, y: Value, bitlen: int) -> Value:
    return eq_many(rt, [(x, y)], bitlen)[0]


def _less_than_public(rt: Runtime, cbits: list[list[int]], rbits: list[list[SharedValue]],
                      rnd: int) -> list[Value]:
    """[c < r] per instance for public c bits and shared r bits (same width)."""
    m = len(cbits[0])
    # e_j = 1 - (c_j xor r_j); suffix products P_i = prod_{j > i} e_j
    es = [[b.at_depth(rnd) if cj else (1 - b).at_depth(rnd) for b, cj in zip(rb, cb)]
          for rb, cb in zip(rbits, cbits)]
    suffix: list[list[Value]] = [[0] * m for _ in es]
    for s in suffix:
        s[m - 1] = 1
    if m >= 2:
        for s, e in zip(suffix, es):
            s[m - 2] = e[m - 1]
    for i in range(m - 3, -1, -1):
        prods = rt.mul_many([(s[i + 1], e[i + 1]) for s, e in zip(suffix, es)])
        for s, pr in zip(suffix, prods):
            s[i] = pr
    vecs = []
    for cb, rb, s in zip(cbits, rbits, suffix):
        xs = [rb[i].at_depth(rnd) for i in range(m) if not cb[i]]
        ys = [s[i] for i in range(m) if not cb[i]]
        vecs.append((xs, ys))
    out: list[Value] = [0] * len(vecs)
    live = [i for i, (xs, _) in enumerate(vecs) if xs]
    for i, v in zip(live, rt.dot_many([vecs[i] for i in live])):
        out[i] = v
    return out


def lt_many(rt: Runtime, pairs: Sequence[tuple[Value, Value]], bitlen: int) -> list[Value]:
    """[x < y] for signed x - y in [-2^(bitlen-1), 2^(bitlen-1))."""
    _check_width(rt, bitlen)
    out: list[Value] = [0] * len(pairs)
    idx, diffs = [], []
    for pos, (x, y) in enumerate(pairs):
        z = x - y
        if isinstance(z, int):
            out[pos] = int(rt.signed(z % rt.p) < 0)
        else:
            idx.append(pos)
            diffs.append(z)
    if not diffs:
        return out
    m = bitlen - 1
    half = 1 << m
    shifted = [z + half for z in diffs]
    masks, opened, rnd = _mask(rt, shifted, m, rt.config.kappa + 1)
    clow = [c % half for c in opened]
    u = _less_than_public(rt, [_bits(c, m) for c in clow], masks, rnd)
    inv = pow(half, -1, rt.p)
    for pos, a, rb, c, uu in zip(idx, shifted, masks, clow, u):
        rlow = rb[0]
        for i in range(1, m):
            rlow = rlow + rb[i].scale(1 << i)
        amod = (c - rlow.at_depth(rnd)) + half * uu
        top = (a - amod).scale(inv)
        out[pos] = 1 - top
    return out


def lt_test(rt: Runtime, x: Value, y: Value, bitlen: int) -> Value:
    return lt_many(rt, [(x, y)], bitlen)[0]


def bit_decompose_many(rt: Runtime, values: Sequence[Value], bitlen: int) -> list[list[Value]]:
    """Little-endian bits of each x in [0, 2^bitlen)."""
    _check_width(rt, bitlen)
    k = bitlen
    out: list[list[Value]] = [[] for _ in values]
    idx, shared = [], []
    for pos, v in enumerate(values):
        if isinstance(v, int):
            out[pos] = _bits(v % (1 << k), k)
        else:
            if rt.debug:
                plain = rt.reveal(v)
                if plain >= 1 << k:
                    rt.diagnostic(f"bit_decompose: value out of {k}-bit range")
            idx.append(pos)
            shared.append(v)
    if not shared:
        return out
    masks, opened, rnd = _mask(rt, shared, k, rt.config.kappa)
    cbits = [_bits(c % (1 << k), k) for c in opened]
    rs = [[b.at_depth(rnd) for b in rb] for rb in masks]
    # x = c - r (mod 2^k) by ripple-borrow subtraction; one product per bit
    borrow: list[Value] = [0] * len(shared)
    bits: list[list[Value]] = [[] for _ in shared]
    for i in range(k):
        prods = rt.mul_many([(r[i], b) for r, b in zip(rs, borrow)])
        for j, (r, cb, b, q) in enumerate(zip(rs, cbits, borrow, prods)):
            ri = r[i]
            x = ri + b - 2 * q  # r_i xor b_i
            bits[j].append(1 - x if cb[i] else x)
            borrow[j] = q if cb[i] else ri + b - q
    for pos, bl in zip(idx, bits):
        out[pos] = bl
    return out


def bit_decompose(rt: Runtime, x: Value, bitlen: int) -> list[Value]:
    return bit_decompose_many(rt, [x], bitlen)[0]
