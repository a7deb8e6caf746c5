"""Pointers to private data.

A pointer is a list of candidate addresses ``locs`` (public) with one tag per
address (``tags``).  Exactly one tag is 1 for a well-formed pointer; a pointer
whose every candidate was freed has all tags 0.  A tag is either a
SharedValue or a public int; a single candidate with public tag 1 is a pointer
with a publicly known location and costs nothing to use.

Every operation that blends pointers reduces to a *weighted merge*: given a
base pointer ``o`` and weighted alternatives ``(w_j, q_j)``, each address gets
tag ``o(l) + sum_j w_j * (q_j(l) - o(l))``, i.e. one inner product per
address.  Conditional assignment is the single-alternative case.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Sequence

from .harness import Runtime, Value
from .heap import NULL, Heap, HeapError
from .mpcops import bit_decompose_many, eq_many
from .shamir import SharedValue
from .types import IntType, PtrType, Type, cell_types

log = logging.getLogger(__name__)


class PrivPtr:
    __slots__ = ("locs", "tags", "ptype", "cast_from")

    def __init__(self, locs: list[int], tags: list[Value], ptype: PtrType | None = None,
                 cast_from: Type | None = None):
        if len(locs) != len(tags) or not locs:
            raise ValueError("pointer needs one tag per location and at least one location")
        self.locs = locs
        self.tags = tags
        self.ptype = ptype
        self.cast_from = cast_from

    @classmethod
    def to(cls, addr: int, ptype: PtrType | None = None) -> "PrivPtr":
        return cls([addr], [1], ptype)

    @classmethod
    def null(cls, ptype: PtrType | None = None) -> "PrivPtr":
        return cls([NULL], [1], ptype)

    @property
    def alpha(self) -> int:
        return len(self.locs)

    @property
    def indirection(self) -> int:
        return self.ptype.indirection if self.ptype is not None else 1

    @property
    def is_public(self) -> bool:
        return len(self.locs) == 1 and isinstance(self.tags[0], int)

    @property
    def address(self) -> int:
        if not self.is_public:
            raise ValueError("pointer location is private")
        return self.locs[0]

    def copy(self) -> "PrivPtr":
        return PrivPtr(list(self.locs), list(self.tags), self.ptype, self.cast_from)

    def tag_of(self, loc: int) -> Value:
        try:
            return self.tags[self.locs.index(loc)]
        except ValueError:
            return 0

    def __repr__(self) -> str:
        tags = ["pub" if isinstance(t, int) else "priv" for t in self.tags]
        return f"PrivPtr(alpha={self.alpha}, L={self.locs}, T={tags})"


def copy_content(v: object) -> object:
    return v.copy() if isinstance(v, PrivPtr) else v


def _normalize(locs: list[int], tags: list[Value], p: int, ptype, cast_from) -> PrivPtr:
    keep = [(l, t) for l, t in zip(locs, tags) if not (isinstance(t, int) and t % p == 0)]
    if not keep:
        return PrivPtr.null(ptype)
    if len(keep) == 1 and isinstance(keep[0][1], int):
        return PrivPtr([keep[0][0]], [1], ptype, cast_from)
    return PrivPtr([l for l, _ in keep], [t for _, t in keep], ptype, cast_from)


class _Plan:
    """Collects inner products so independent ones share a round."""

    def __init__(self) -> None:
        self.vectors: list[tuple[list[Value], list[Value]]] = []
        self.res: list[Value] = []

    def dot(self, xs: list[Value], ys: list[Value]) -> int:
        self.vectors.append((xs, ys))
        return len(self.vectors) - 1

    def run(self, rt: Runtime) -> None:
        self.res = rt.dot_many(self.vectors) if self.vectors else []

    def __getitem__(self, i: int) -> Value:
        return self.res[i]


def _plan_merge(plan: _Plan, base: PrivPtr, alts: Sequence[tuple[Value, PrivPtr]],
                p: int, order: str = "first") -> Callable[[], PrivPtr]:
    tabs = [dict(zip(q.locs, q.tags)) for _, q in alts]
    obase = dict(zip(base.locs, base.tags))
    locs = list(base.locs)
    seen = set(locs)
    for q in (q for _, q in alts):
        for l in q.locs:
            if l not in seen:
                seen.add(l)
                locs.append(l)
    if order == "sorted":
        locs.sort()
    weights = [w for w, _ in alts]
    idx = []
    for l in locs:
        o = obase.get(l, 0)
        diffs = [tab.get(l, 0) - o for tab in tabs]
        if all(isinstance(d, int) and d == 0 for d in diffs):
            idx.append((None, o))  # same tag under every alternative
        else:
            idx.append((plan.dot(weights, diffs), o))

    def finish() -> PrivPtr:
        tags = [o if i is None else plan[i] + o for i, o in idx]
        return _normalize(locs, tags, p, base.ptype, base.cast_from)
    return finish


def weighted_merge(rt: Runtime, base: PrivPtr, alts: Sequence[tuple[Value, PrivPtr]]) -> PrivPtr:
    plan = _Plan()
    fin = _plan_merge(plan, base, alts, rt.p)
    plan.run(rt)
    return fin()


# -- read / update / conditional assignment ---------------------------------

def ptr_read(p: PrivPtr) -> PrivPtr:
    return p.copy()


def ptr_update(p: PrivPtr | None, v: PrivPtr | int) -> PrivPtr:
    """Assignment of an address or of another pointer's structure."""
    ptype = p.ptype if p is not None else None
    if isinstance(v, int):
        return PrivPtr.to(v, ptype)
    out = v.copy()
    if ptype is not None and out.ptype is None:
        out.ptype = ptype
    return out


def cond_assign(rt: Runtime, v1: PrivPtr, v2: PrivPtr, c: Value) -> PrivPtr:
    """c ? v2 : v1, merging the two location lists (one op per location)."""
    if isinstance(c, int):
        return (v2 if c % rt.p else v1).copy()
    return weighted_merge(rt, v1, [(c, v2)])


def cond_assign_many(rt: Runtime, items: Sequence[tuple[PrivPtr, PrivPtr, Value]]) -> list[PrivPtr]:
    plan = _Plan()
    fins = [_plan_merge(plan, v1, [(c, v2)], rt.p) for v1, v2, c in items]
    plan.run(rt)
    return [f() for f in fins]


def tag_sum(rt: Runtime, p: PrivPtr) -> int:
    """Reconstructed sum of tags (debug/oracle use; no accounting)."""
    return sum(rt.reveal(t) for t in p.tags) % rt.p


def true_location(rt: Runtime, p: PrivPtr) -> int | None:
    for l, t in zip(p.locs, p.tags):
        if rt.reveal(t) == 1:
            return l
    return None


# -- dereference -------------------------------------------------------------

def _cell_type(p: PrivPtr, offset: int) -> Type | None:
    if p.ptype is None:
        return None
    cells = cell_types(p.ptype.target)
    return cells[offset % len(cells)]


def _gather(rt: Runtime, heap: Heap, p: PrivPtr, offset: int) -> list[tuple[Value, object]]:
    """(tag, content) for every candidate location; missing cells are dropped."""
    out = []
    for l, t in zip(p.locs, p.tags):
        if l == NULL:
            continue
        a = l + offset
        if a in heap.cells:
            out.append((t, heap.cells[a]))
        elif l in heap.cells or heap.enclosing(l) is not None:
            raise HeapError(f"access outside block at address {a}")
        else:
            rt.diagnostic(f"read of released address {a} treated as zero")
    return out


def load(rt: Runtime, heap: Heap, p: PrivPtr, offset: int = 0) -> object:
    """Content of *(p + offset cells): a value or a pointer copy."""
    if p.is_public:
        return copy_content(heap.read(p.locs[0] + offset))
    items = _gather(rt, heap, p, offset)
    ct = _cell_type(p, offset)
    is_ptr = isinstance(ct, PtrType) or any(isinstance(c, PrivPtr) for _, c in items)
    if is_ptr:
        ptype = ct if isinstance(ct, PtrType) else None
        return merge_pointers(rt, [(t, c) for t, c in items], ptype)
    if not items:
        return rt.const(0)
    return rt.inner_product([t for t, _ in items], [c for _, c in items])


def merge_pointers(rt: Runtime, items: Sequence[tuple[Value, PrivPtr]], ptype: PtrType | None) -> PrivPtr:
    """Union of sub-pointer lists; each address tagged sum_i t_i * t_i(l)."""
    if not items:
        return PrivPtr.null(ptype)
    ptrs = [q if isinstance(q, PrivPtr) else PrivPtr.to(int(q), ptype) for _, q in items]
    base = PrivPtr([NULL], [0], ptype or ptrs[0].ptype, ptrs[0].cast_from)
    plan = _Plan()
    fin = _plan_merge(plan, base, [(t, q) for (t, _), q in zip(items, ptrs)], rt.p, order="sorted")
    plan.run(rt)
    return fin()


def deref_read(rt: Runtime, heap: Heap, p: PrivPtr) -> Value:
    return load(rt, heap, p)


def deref_read_ptr(rt: Runtime, heap: Heap, p: PrivPtr, levels: int = 1) -> PrivPtr:
    q = p
    for _ in range(levels):
        q = load(rt, heap, q)
        if not isinstance(q, PrivPtr):
            raise HeapError("dereference of a non-pointer cell as a pointer")
    return q


def store(rt: Runtime, heap: Heap, p: PrivPtr, value: object, offset: int = 0) -> None:
    """*(p + offset cells) = value, touching every candidate location."""
    if p.is_public:
        heap.write(p.locs[0] + offset, copy_content(value))
        return
    items = []
    for l, t in zip(p.locs, p.tags):
        if l == NULL:
            continue
        a = l + offset
        if a in heap.cells:
            items.append((a, t, heap.cells[a]))
        elif heap.enclosing(l) is not None:
            raise HeapError(f"access outside block at address {a}")
        else:
            rt.diagnostic(f"write to released address {a} skipped")
    plan = _Plan()
    fins = []
    for a, t, old in items:
        if isinstance(value, PrivPtr) or isinstance(old, PrivPtr):
            oldp = old if isinstance(old, PrivPtr) else PrivPtr.to(int(old))
            fins.append((a, _plan_merge(plan, oldp, [(t, value)], rt.p)))
        else:
            i = plan.dot([t], [value - old])
            fins.append((a, (lambda i=i, old=old: plan[i] + old)))
    plan.run(rt)
    for a, f in fins:
        heap.write(a, f())


def deref_write(rt: Runtime, heap: Heap, p: PrivPtr, v: Value) -> None:
    store(rt, heap, p, v)


def deref_write_ptr(rt: Runtime, heap: Heap, p: PrivPtr, v: PrivPtr) -> None:
    store(rt, heap, p, v)


def deref_field(rt: Runtime, heap: Heap, p: PrivPtr, field: str) -> object:
    off, _ = p.ptype.target.field(field)
    return load(rt, heap, p, off)


def deref_field_write(rt: Runtime, heap: Heap, p: PrivPtr, field: str, v: object) -> None:
    off, _ = p.ptype.target.field(field)
    store(rt, heap, p, v, off)


# -- oblivious free ----------------------------------------------------------

def dealloc(rt: Runtime, heap: Heap, p: PrivPtr) -> None:
    """Free one location of p, moving its data to p's true location.

    The first candidate is released.  Each other candidate l_i takes the freed
    block's content when its tag is set, and every pointer that mentions an
    address of the freed block is redirected to the matching address in the
    other candidates.  Everything runs in one round, except when a pointer
    stored in a relocated cell itself mentions the freed block: it then has
    to be merged before it can be redirected, which takes a second round.
    """
    if NULL in p.locs:
        return
    if p.is_public:
        heap.release(p.locs[0])
        return
    l1 = p.locs[0]
    blk1 = heap.blocks.get(l1)
    if blk1 is None:
        raise HeapError(f"free of non-block address {l1}")
    size = blk1.end - blk1.base
    others = []
    for l, t in zip(p.locs[1:], p.tags[1:]):
        b = heap.blocks.get(l)
        if b is None or b.end - b.base != size:
            rt.diagnostic(f"free: candidate {l} is not a matching block, skipped")
            continue
        others.append((l, t))

    freed = range(l1, l1 + size)
    plan = _Plan()
    relocs = []
    nested = False
    for l, t in others:
        for o in range(size):
            a1, ai = heap.cells[l1 + o], heap.cells[l + o]
            if isinstance(a1, PrivPtr) or isinstance(ai, PrivPtr):
                nested = nested or any(isinstance(c, PrivPtr) and any(x in freed for x in c.locs)
                                       for c in (a1, ai))
                pi = ai if isinstance(ai, PrivPtr) else PrivPtr.to(int(ai))
                p1 = a1 if isinstance(a1, PrivPtr) else PrivPtr.to(int(a1))
                relocs.append((l + o, _plan_merge(plan, pi, [(t, p1)], rt.p)))
            else:
                i = plan.dot([t], [a1 - ai])
                relocs.append((l + o, (lambda i=i, ai=ai: plan[i] + ai)))

    def redirect(plan2: _Plan):
        fins = []
        for addr, q in heap.pointers():
            if addr in freed or not any(l in freed for l in q.locs):
                continue
            base = PrivPtr([l for l in q.locs if l not in freed] or [NULL],
                           [t for l, t in zip(q.locs, q.tags) if l not in freed] or [0],
                           q.ptype, q.cast_from)
            alts = []
            for l, t in zip(q.locs, q.tags):
                if l in freed:
                    o = l - l1
                    for li, ti in others:
                        alts.append((t, li + o, ti))
            fins.append((q, _plan_redirect(plan2, base, alts, rt.p)))
        return fins

    if nested:
        plan.run(rt)
        for a, f in relocs:
            heap.raw_set(a, f())
        plan2 = _Plan()
        fins = redirect(plan2)
        plan2.run(rt)
    else:
        fins = redirect(plan)
        plan.run(rt)
        for a, f in relocs:
            heap.raw_set(a, f())
    for q, f in fins:
        r = f()
        q.locs, q.tags = r.locs, r.tags
    heap.release(l1)


def _plan_redirect(plan: _Plan, base: PrivPtr, alts: list[tuple[Value, int, Value]],
                   p: int) -> Callable[[], PrivPtr]:
    """Add t * t_i to address l_i for each (t, l_i, t_i)."""
    locs = list(base.locs)
    adds: dict[int, list[int]] = {}
    for t, l, ti in alts:
        if l not in locs:
            locs.append(l)
        adds.setdefault(l, []).append(plan.dot([t], [ti]))
    tab = dict(zip(base.locs, base.tags))

    def finish() -> PrivPtr:
        tags = []
        for l in locs:
            acc = tab.get(l, 0)
            for i in adds.get(l, ()):
                acc = plan[i] + acc
            tags.append(acc)
        return _normalize(locs, tags, p, base.ptype, base.cast_from)
    return finish


# -- indexing ----------------------------------------------------------------

def _elem_size(p: PrivPtr) -> int:
    return p.ptype.elem_size if p.ptype is not None else 1


def index_read(rt: Runtime, heap: Heap, p: PrivPtr, i: int, field_offset: int = 0) -> object:
    if p.cast_from is not None and p.ptype is not None:
        return deref_cast(rt, heap, p, i)
    return load(rt, heap, p, i * _elem_size(p) + field_offset)


def index_write(rt: Runtime, heap: Heap, p: PrivPtr, i: int, v: object, field_offset: int = 0) -> None:
    store(rt, heap, p, v, i * _elem_size(p) + field_offset)


def index_mux(rt: Runtime, heap: Heap, p: PrivPtr, i: int, v: Value, c: Value,
              field_offset: int = 0) -> None:
    """p[i] = c ? v : p[i]."""
    old = index_read(rt, heap, p, i, field_offset)
    store(rt, heap, p, rt.mul(c, v - old) + old, i * _elem_size(p) + field_offset)


def _private_selectors(rt: Runtime, heap: Heap, p: PrivPtr, i: Value, bitlen: int):
    """Per candidate: (tag, cell addresses of the block, one-hot selector).

    Returns None entries for candidates outside any live block.
    """
    es = _elem_size(p)
    found = []
    queries: dict[tuple[int, int], int] = {}
    pairs = []
    for l, t in zip(p.locs, p.tags):
        fb = heap.find_block(l) if l != NULL else None
        if fb is None:
            continue
        blk, off = fb
        key = (blk.length, off)
        if key not in queries:
            queries[key] = len(pairs)
            pairs.extend((i, j - off) for j in range(blk.length))
        found.append((t, blk, queries[key]))
    if not found:
        rt.diagnostic("private index through a pointer with no valid block; result is zero")
        return []
    sels = eq_many(rt, pairs, bitlen) if pairs else []
    out = []
    for t, blk, q in found:
        addrs = [blk.base + j * es for j in range(blk.length)]
        out.append((t, addrs, sels[q:q + blk.length]))
    return out


def index_read_private(rt: Runtime, heap: Heap, p: PrivPtr, i: Value, bitlen: int = 32,
                       field_offset: int = 0) -> Value:
    """p[i] with i private: a table lookup over each candidate's block."""
    if isinstance(i, int):
        return index_read(rt, heap, p, i, field_offset)
    cands = _private_selectors(rt, heap, p, i, bitlen)
    if not cands:
        return rt.const(0)
    per = rt.dot_many([(sel, [heap.cells[a + field_offset] for a in addrs])
                       for _, addrs, sel in cands])
    return rt.inner_product([t for t, _, _ in cands], per)


def index_update_private(rt: Runtime, heap: Heap, p: PrivPtr, i: Value, v: Value,
                         bitlen: int = 32, field_offset: int = 0, cond: Value = 1) -> None:
    """p[i] = v (or p[i] = cond ? v : p[i]) with i private."""
    if isinstance(i, int):
        if isinstance(cond, int) and cond == 1:
            index_write(rt, heap, p, i, v, field_offset)
        else:
            index_mux(rt, heap, p, i, v, cond, field_offset)
        return
    cands = _private_selectors(rt, heap, p, i, bitlen)
    if not cands:
        return
    # weight per cell: tag * cond * selector; the tag*cond factor is shared
    weights = rt.mul_many([(t, cond) for t, _, _ in cands])
    pairs = []
    for w, (_, addrs, sel) in zip(weights, cands):
        pairs.extend((w, s) for s in sel)
    ws = rt.mul_many(pairs)
    cells = [a + field_offset for _, addrs, _ in cands for a in addrs]
    prods = rt.mul_many([(w, v - heap.cells[a]) for w, a in zip(ws, cells)])
    for a, d in zip(cells, prods):
        heap.write(a, d + heap.cells[a])


def index_mux_private(rt: Runtime, heap: Heap, p: PrivPtr, i: Value, v: Value, c: Value,
                      bitlen: int = 32, field_offset: int = 0) -> None:
    index_update_private(rt, heap, p, i, v, bitlen, field_offset, cond=c)


# -- arithmetic, predicates, casts ---------------------------------------------

def ptr_offset(p: PrivPtr, k: int) -> PrivPtr:
    es = _elem_size(p)
    return PrivPtr([l + k * es if l != NULL else NULL for l in p.locs], list(p.tags),
                   p.ptype, p.cast_from)


def ptr_diff(rt: Runtime, p1: PrivPtr, p2: PrivPtr) -> Value:
    """Element distance between the true locations."""
    es = _elem_size(p1)
    if p1.is_public and p2.is_public:
        d = p1.locs[0] - p2.locs[0]
        if d % es:
            raise HeapError("pointer difference is not a whole number of elements")
        return d // es
    acc: Value = 0
    for l, t in zip(p1.locs, p1.tags):
        acc = acc + (t * l if isinstance(t, int) else t.scale(l))
    for l, t in zip(p2.locs, p2.tags):
        acc = acc - (t * l if isinstance(t, int) else t.scale(l))
    if es != 1:
        inv = pow(es, -1, rt.p)
        acc = acc * inv if isinstance(acc, int) else acc.scale(inv)
    return acc


def ptr_pred_equal(rt: Runtime, p1: PrivPtr, p2: PrivPtr) -> Value:
    """p1 == p2; a public int when the answer follows from public data."""
    if p1.is_public and p2.is_public:
        return int(p1.locs[0] == p2.locs[0])
    t2 = dict(zip(p2.locs, p2.tags))
    xs, ys = [], []
    for l, t in zip(p1.locs, p1.tags):
        if l in t2:
            xs.append(t)
            ys.append(t2[l])
    if not xs:
        return 0
    r = rt.inner_product(xs, ys)
    if isinstance(r, int):
        r = rt.const(r)  # status stays private when a private tag is involved
    return r


def cast_ptr(p: PrivPtr, to_type: PtrType) -> PrivPtr:
    src = p.cast_from if p.cast_from is not None else (p.ptype.target if p.ptype else None)
    if src is not None and not isinstance(src, IntType):
        raise TypeError("only integer pointer casts are supported")
    if not isinstance(to_type.target, IntType):
        raise TypeError("only integer pointer casts are supported")
    cast_from = None if src == to_type.target else src
    return PrivPtr(list(p.locs), list(p.tags), to_type, cast_from)


def _signed_bits_to_value(bits: Sequence[Value]) -> Value:
    w = len(bits)
    acc: Value = 0
    for k, b in enumerate(bits):
        coef = -(1 << k) if k == w - 1 else 1 << k
        acc = acc + (b * coef if isinstance(b, int) else b.scale(coef))
    return acc


def deref_cast(rt: Runtime, heap: Heap, p: PrivPtr, i: int) -> Value:
    """Element i of a cast pointer, assembled from the source bit layout."""
    src = p.cast_from
    dst = p.ptype.target
    if src is None or src.bits == dst.bits:
        return load(rt, heap, p, i * p.ptype.elem_size)
    s, w = src.bits, dst.bits
    lo, hi = i * w, (i + 1) * w  # bit range [lo, hi)
    e0, e1 = lo // s, (hi - 1) // s
    per_loc = []
    for l, t in zip(p.locs, p.tags):
        if l == NULL:
            continue
        fb = heap.find_block(l)
        if fb is None:
            rt.diagnostic(f"cast read through unallocated address {l}")
            continue
        blk, off = fb
        if lo < 0 or off + e1 >= blk.length:
            raise HeapError(f"cast element {i} extends past the source block")
        per_loc.append((t, [heap.cells[l + e] for e in range(e0, e1 + 1)]))
    if not per_loc:
        return rt.const(0)
    half = 1 << (s - 1)
    flat = [v for _, vs in per_loc for v in vs]
    bits = bit_decompose_many(rt, [v + half for v in flat], s)
    # adding 2^(s-1) flips the top bit relative to two's complement
    twos = [b[:-1] + [1 - b[-1]] for b in bits]
    results = []
    pos = 0
    for t, vs in per_loc:
        stream = [bit for j in range(len(vs)) for bit in twos[pos + j]]
        pos += len(vs)
        results.append(_signed_bits_to_value(stream[lo - e0 * s: hi - e0 * s]))
    return rt.inner_product([t for t, _ in per_loc], results)


# -- function pointers ---------------------------------------------------------

def finalize_values(rt: Runtime, orig: Value, alts: Sequence[tuple[Value, Value]]) -> Value:
    """orig + sum_j w_j * (a_j - orig): value after guarded alternatives."""
    return rt.inner_product([w for w, _ in alts], [a - orig for _, a in alts]) + orig


def plan_value_merge(plan: _Plan, orig: Value, alts: Sequence[tuple[Value, Value]]):
    i = plan.dot([w for w, _ in alts], [a - orig for _, a in alts])
    return lambda: plan[i] + orig


def merge_contents(rt: Runtime, items: Iterable[tuple[object, Sequence[tuple[Value, object]]]]) -> list[object]:
    """Batch-finalize several cells, each ``(orig, [(weight, alternative)])``.

    Values combine linearly, pointers by weighted merge; all products share
    one round.
    """
    plan = _Plan()
    fins = []
    for orig, alts in items:
        if isinstance(orig, PrivPtr) or any(isinstance(a, PrivPtr) for _, a in alts):
            o = orig if isinstance(orig, PrivPtr) else PrivPtr.to(int(orig))
            qs = [(w, a if isinstance(a, PrivPtr) else PrivPtr.to(int(a), o.ptype)) for w, a in alts]
            fins.append(_plan_merge(plan, o, qs, rt.p))
        else:
            fins.append(plan_value_merge(plan, orig, alts))
    plan.run(rt)
    return [f() for f in fins]


def fnptr_targets(heap: Heap, p: PrivPtr) -> list[tuple[Value, object]]:
    """(tag, function object) for each candidate code address."""
    out = []
    for l, t in zip(p.locs, p.tags):
        if l == NULL:
            continue
        blk = heap.blocks.get(l)
        if blk is None or blk.kind != "code":
            raise HeapError(f"call through non-function address {l}")
        out.append((t, heap.cells[l]))
    return out
