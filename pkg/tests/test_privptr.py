import itertools
import random

import pytest

from ptrmpc.heap import NULL, Heap, HeapError
from ptrmpc.privptr import (PrivPtr, cast_ptr, cond_assign, cond_assign_many, dealloc, deref_cast,
                            deref_field, deref_field_write, deref_read, deref_read_ptr, deref_write,
                            deref_write_ptr, finalize_values, index_read, index_read_private,
                            index_update_private, ptr_diff, ptr_offset, ptr_pred_equal, ptr_read,
                            ptr_update, tag_sum, true_location)
from ptrmpc.types import IntType, PtrType, StructType
from conftest import make_runtime

INT = IntType(32)
PINT = PtrType(INT)
PPINT = PtrType(PINT)


def make_heap(rt):
    def init(t):
        if isinstance(t, PtrType):
            return PrivPtr.null(t)
        return rt.const(0) if t.is_private else 0
    return Heap(init)


def tags(rt, p):
    return [rt.reveal(t) for t in p.tags]


def ops(rt):
    return rt.stats.interactive_ops, rt.stats.rounds


@pytest.fixture
def env():
    rt = make_runtime(seed=7)
    return rt, make_heap(rt)


# -- read / update ---------------------------------------------------------------

def test_read_is_a_free_copy(env):
    rt, _ = env
    p = PrivPtr.null(PINT)
    q = ptr_read(p)
    assert q.alpha == 1 and q.locs == [NULL]
    p.locs[0] = 5
    assert q.locs == [NULL]
    assert ops(rt) == (0, 0)


def test_update_by_address_and_pointer(env):
    rt, _ = env
    p = ptr_update(PrivPtr.null(PINT), 17)
    assert p.alpha == 1 and p.locs == [17] and p.is_public
    q = PrivPtr([3, 4, 5], [rt.dealer_share(0), rt.dealer_share(1), rt.dealer_share(0)], PINT)
    r = ptr_update(p, q)
    assert r.locs == q.locs and tags(rt, r) == [0, 1, 0]
    assert ptr_update(p, 0).locs == [NULL]


# -- CondAssign ------------------------------------------------------------------

def test_cond_assign_idempotent(env):
    rt, _ = env
    c = rt.dealer_share(1)
    r = cond_assign(rt, PrivPtr.to(9), PrivPtr.to(9), c)
    assert r.locs == [9] and tag_sum(rt, r) == 1


@pytest.mark.parametrize("c", [0, 1])
def test_cond_assign_two_singletons(env, c):
    rt, _ = env
    r = cond_assign(rt, PrivPtr.to(10), PrivPtr.to(20), rt.dealer_share(c))
    assert r.locs == [10, 20]
    assert tags(rt, r) == [1 - c, c]


def test_cond_assign_overlap_all_tag_settings(env):
    rt, _ = env
    for c, t in itertools.product((0, 1), repeat=2):
        v1 = PrivPtr([10, 20], [rt.dealer_share(t), rt.dealer_share(1 - t)])
        v2 = PrivPtr.to(20)
        r = cond_assign(rt, v1, v2, rt.dealer_share(c))
        assert r.locs == [10, 20]
        # hand-derived: ((1-c)t, c + (1-c)(1-t))
        assert tags(rt, r) == [(1 - c) * t, c + (1 - c) * (1 - t)]


def test_cond_assign_cost_one_round_at_most_union_ops(env):
    rt, _ = env
    v1 = PrivPtr([1, 2, 3], [rt.dealer_share(b) for b in (0, 1, 0)])
    v2 = PrivPtr([3, 4], [rt.dealer_share(b) for b in (1, 0)])
    before = ops(rt)
    r = cond_assign(rt, v1, v2, rt.dealer_share(1))
    assert rt.stats.rounds - before[1] == 1
    assert rt.stats.interactive_ops - before[0] <= len(r.locs) == 4
    assert true_location(rt, r) == 3


def test_cond_assign_public_condition_is_free(env):
    rt, _ = env
    r = cond_assign(rt, PrivPtr.to(1), PrivPtr.to(2), 1)
    assert r.locs == [2] and ops(rt) == (0, 0)


def test_cond_assign_many_batches(env):
    rt, _ = env
    items = [(PrivPtr.to(i), PrivPtr.to(i + 100), rt.dealer_share(i % 2)) for i in range(1, 9)]
    out = cond_assign_many(rt, items)
    # public-tag differences make every product local
    assert rt.stats.rounds == 0
    assert [true_location(rt, p) for p in out] == [i + 100 if i % 2 else i for i in range(1, 9)]


# -- dereference -----------------------------------------------------------------

@pytest.mark.parametrize("bits,expect", [((1, 0), 7), ((0, 1), 9)])
def test_deref_read_selects(env, bits, expect):
    rt, heap = env
    b = heap.alloc(2, INT)
    heap.write(b, rt.dealer_share(7))
    heap.write(b + 1, rt.dealer_share(9))
    p = PrivPtr([b, b + 1], [rt.dealer_share(x) for x in bits], PINT)
    assert rt.reveal(deref_read(rt, heap, p)) == expect


def test_deref_write_only_true_cell_changes(env):
    rt, heap = env
    b = heap.alloc(2, INT)
    heap.write(b, rt.dealer_share(3))
    heap.write(b + 1, rt.dealer_share(4))
    p = PrivPtr([b, b + 1], [rt.dealer_share(1), rt.dealer_share(0)], PINT)
    deref_write(rt, heap, p, rt.dealer_share(5))
    assert [rt.reveal(heap.cells[a]) for a in (b, b + 1)] == [5, 4]


def test_public_deref_is_free(env):
    rt, heap = env
    b = heap.alloc(1, INT)
    p = PrivPtr.to(b, PINT)
    deref_write(rt, heap, p, rt.dealer_share(8))
    assert rt.reveal(deref_read(rt, heap, p)) == 8
    assert ops(rt) == (0, 0)


def test_multi_level_worked_example(env):
    rt, heap = env
    heap.alloc(300, INT)  # cells 1..300 so the example's addresses exist
    pc = heap.alloc(3, PINT)
    s = rt.dealer_share
    heap.write(pc, PrivPtr([123], [1], PINT))
    heap.write(pc + 1, PrivPtr([189, 245], [s(0), s(1)], PINT))
    heap.write(pc + 2, PrivPtr([123, 176, 207], [s(0), s(1), s(0)], PINT))
    p = PrivPtr([pc, pc + 1, pc + 2], [s(0), s(0), s(1)], PPINT)
    before = ops(rt)
    q = deref_read_ptr(rt, heap, p)
    assert q.locs == [123, 176, 189, 207, 245]
    assert tags(rt, q) == [0, 1, 0, 0, 0]
    assert rt.stats.rounds - before[1] == 1


def test_multi_level_same_address_collapses(env):
    rt, heap = env
    pc = heap.alloc(2, PINT)
    heap.write(pc, PrivPtr.to(50, PINT))
    heap.write(pc + 1, PrivPtr.to(50, PINT))
    p = PrivPtr([pc, pc + 1], [rt.dealer_share(1), rt.dealer_share(0)], PPINT)
    q = deref_read_ptr(rt, heap, p)
    assert q.locs == [50] and tag_sum(rt, q) == 1


@pytest.mark.parametrize("t", [0, 1])
def test_deref_write_ptr(env, t):
    rt, heap = env
    pc = heap.alloc(2, PINT)
    heap.write(pc, PrivPtr.to(10, PINT))
    heap.write(pc + 1, PrivPtr.to(11, PINT))
    p = PrivPtr([pc, pc + 1], [rt.dealer_share(t), rt.dealer_share(1 - t)], PPINT)
    new = PrivPtr([30, 31], [rt.dealer_share(0), rt.dealer_share(1)], PINT)
    deref_write_ptr(rt, heap, p, new)
    true_cell, other = (pc, pc + 1) if t else (pc + 1, pc)
    assert true_location(rt, heap.cells[true_cell]) == 31
    assert true_location(rt, heap.cells[other]) == (10 if other == pc else 11)
    for a in (pc, pc + 1):
        assert tag_sum(rt, heap.cells[a]) == 1


def test_struct_field_access(env):
    rt, heap = env
    node = StructType("node", [("data", INT), ("next", None)], True)
    node.fields[1] = ("next", PtrType(node))
    pn = PtrType(node)
    a, b = heap.alloc(1, node), heap.alloc(1, node)
    heap.write(a + 1, PrivPtr.to(b, pn))
    p = PrivPtr([a, b], [rt.dealer_share(0), rt.dealer_share(1)], pn)
    deref_field_write(rt, heap, p, "data", rt.dealer_share(42))
    assert rt.reveal(heap.cells[a]) == 0 and rt.reveal(heap.cells[b]) == 42
    nxt = deref_field(rt, heap, PrivPtr.to(a, pn), "next")
    assert nxt.locs == [b] and nxt is not heap.cells[a + 1]


# -- pfree -----------------------------------------------------------------------

@pytest.mark.parametrize("t", [0, 1])
def test_pfree_swap_example(t):
    rt = make_runtime(seed=t)
    heap = make_heap(rt)
    a, b = heap.alloc(1, INT), heap.alloc(1, INT)
    heap.write(a, rt.dealer_share(111))
    heap.write(b, rt.dealer_share(222))
    pc = heap.alloc(2, PINT)
    s = rt.dealer_share
    heap.write(pc, PrivPtr([a, b], [s(t), s(1 - t)], PINT))      # p1
    heap.write(pc + 1, PrivPtr([b, a], [s(t), s(1 - t)], PINT))  # p2
    p1_true = a if t else b
    p2_true = b if t else a
    p2_val = rt.reveal(heap.cells[p2_true])
    before = ops(rt)
    dealloc(rt, heap, heap.cells[pc])
    assert rt.stats.rounds - before[1] == 1
    p2 = heap.cells[pc + 1]
    assert p2.locs == [b] and tags(rt, p2) == [1]
    assert rt.reveal(deref_read(rt, heap, p2)) == p2_val
    assert a not in heap.blocks
    assert p1_true in (a, b)


def test_pfree_public_pointer_costs_nothing(env):
    rt, heap = env
    b = heap.alloc(1, INT)
    dealloc(rt, heap, PrivPtr.to(b, PINT))
    assert b not in heap.blocks and ops(rt) == (0, 0)


def test_pfree_with_null_candidate_is_a_noop(env):
    rt, heap = env
    b = heap.alloc(1, INT)
    dealloc(rt, heap, PrivPtr([NULL, b], [rt.dealer_share(0), rt.dealer_share(1)], PINT))
    assert b in heap.blocks


def test_pfree_never_allocated_is_an_error(env):
    rt, heap = env
    with pytest.raises(HeapError):
        dealloc(rt, heap, PrivPtr.to(77, PINT))


# -- indexing --------------------------------------------------------------------

def test_public_and_private_index(env):
    rt, heap = env
    b = heap.alloc(8, INT)
    for i in range(8):
        heap.write(b + i, rt.dealer_share(10 + i))
    p = PrivPtr.to(b, PINT)
    assert rt.reveal(index_read(rt, heap, p, 3)) == 13
    assert rt.reveal(index_read(rt, heap, p, 0)) == rt.reveal(deref_read(rt, heap, p))
    assert rt.reveal(index_read_private(rt, heap, p, rt.dealer_share(5))) == 15
    mid = ptr_offset(p, 4)
    assert rt.reveal(index_read(rt, heap, mid, -2)) == 12
    assert rt.signed(rt.reveal(index_read_private(rt, heap, mid, rt.dealer_share(-3)))) == 11
    index_update_private(rt, heap, p, rt.dealer_share(6), rt.dealer_share(99))
    assert [rt.reveal(heap.cells[b + i]) for i in range(8)] == [10, 11, 12, 13, 14, 15, 99, 17]


def test_private_index_out_of_range_and_unallocated(env):
    rt, heap = env
    b = heap.alloc(4, INT)
    for i in range(4):
        heap.write(b + i, rt.dealer_share(1 + i))
    p = PrivPtr.to(b, PINT)
    assert rt.reveal(index_read_private(rt, heap, p, rt.dealer_share(9))) == 0
    q = PrivPtr.to(5000, PINT)
    assert rt.reveal(index_read_private(rt, heap, q, rt.dealer_share(1))) == 0
    assert any("no valid block" in d for d in rt.stats.diagnostics)


def test_private_index_multi_location(env):
    rt, heap = env
    b1, b2 = heap.alloc(3, INT), heap.alloc(3, INT)
    for i in range(3):
        heap.write(b1 + i, rt.dealer_share(i))
        heap.write(b2 + i, rt.dealer_share(10 * i))
    p = PrivPtr([b1, b2], [rt.dealer_share(0), rt.dealer_share(1)], PINT)
    assert rt.reveal(index_read_private(rt, heap, p, rt.dealer_share(2))) == 20


# -- arithmetic and predicates ----------------------------------------------------

def test_pointer_arithmetic(env):
    rt, heap = env
    heap.alloc(1, INT)
    b = heap.alloc(6, INT)
    heap.write(b + 2, rt.dealer_share(5))
    p = PrivPtr.to(b, PINT)
    assert ptr_offset(p, 0).locs == p.locs
    assert rt.reveal(deref_read(rt, heap, ptr_offset(p, 2))) == rt.reveal(index_read(rt, heap, p, 2))
    assert ptr_offset(ptr_offset(p, -1), 1).locs == p.locs
    assert ptr_diff(rt, PrivPtr.to(b + 5, PINT), PrivPtr.to(b + 2, PINT)) == 3
    assert ptr_diff(rt, p, p) == 0
    q = PrivPtr([b + 1, b + 4], [rt.dealer_share(0), rt.dealer_share(1)], PINT)
    assert rt.reveal(ptr_diff(rt, q, p)) == 4


def test_pointer_equality(env):
    rt, _ = env
    assert ptr_pred_equal(rt, PrivPtr.to(3), PrivPtr.to(3)) == 1
    s = rt.dealer_share
    a = PrivPtr([1, 2], [s(1), s(0)])
    b = PrivPtr([3, 4], [s(0), s(1)])
    assert ptr_pred_equal(rt, a, b) == 0 and ops(rt) == (0, 0)
    for x, y in itertools.product((0, 1), repeat=2):
        p = PrivPtr([1, 2], [s(x), s(1 - x)])
        q = PrivPtr([2, 1, 5], [s(y), s(0), s(1 - y)])
        before = ops(rt)
        r = ptr_pred_equal(rt, p, q)
        assert rt.stats.interactive_ops - before[0] == 1
        truth_p = 1 if x else 2
        truth_q = 2 if y else 5
        assert rt.reveal(r) == int(truth_p == truth_q)


# -- casts -----------------------------------------------------------------------

def test_cast_three_30_bit_as_20_bit():
    rt = make_runtime(seed=3)
    heap = make_heap(rt)
    i30 = IntType(30)
    vals = [-123456789, 456789012, -3]
    b = heap.alloc(3, i30)
    for k, v in enumerate(vals):
        heap.write(b + k, rt.dealer_share(v))
    p = cast_ptr(PrivPtr.to(b, PtrType(i30)), PtrType(IntType(20)))
    assert p.cast_from == i30 and ops(rt) == (0, 0)
    stream = sum((v & ((1 << 30) - 1)) << (30 * k) for k, v in enumerate(vals))

    def slice20(i):
        raw = (stream >> (20 * i)) & ((1 << 20) - 1)
        return raw - (1 << 20) if raw >> 19 else raw
    for i in range(4):
        assert rt.signed(rt.reveal(deref_cast(rt, heap, p, i))) == slice20(i)
    with pytest.raises(HeapError):
        deref_cast(rt, heap, p, 4)
    back = cast_ptr(p, PtrType(i30))
    assert back.cast_from is None
    assert rt.signed(rt.reveal(index_read(rt, heap, back, 1))) == vals[1]
    chained = cast_ptr(cast_ptr(p, PtrType(IntType(10))), PtrType(IntType(15)))
    assert chained.cast_from == i30


# -- function pointers -----------------------------------------------------------

def test_function_pointer_finalize(env):
    rt, _ = env
    orig = rt.dealer_share(5)
    t1, t2 = rt.dealer_share(1), rt.dealer_share(0)
    assert rt.reveal(finalize_values(rt, orig, [(t1, 10)])) == 10
    t1, t2 = rt.dealer_share(0), rt.dealer_share(1)
    assert rt.reveal(finalize_values(rt, orig, [(t1, 10)])) == 5


# -- randomized pointer machine ----------------------------------------------------

class PointerMachine:
    """Plaintext model: each pointer variable is a true address or None (dangling)."""

    def __init__(self, k):
        self.ptr = [NULL] * k
        self.val: dict[int, int] = {}


def run_machine(seed, n_ops=200, k=4, max_addrs=16):
    rng = random.Random(seed)
    rt = make_runtime(seed=seed)
    heap = make_heap(rt)
    pc = heap.alloc(k, PINT)
    model = PointerMachine(k)
    allocated = 0
    dangling_seen = 0
    for _ in range(n_ops):
        op = rng.choice(["new", "copy", "cond", "cond", "write", "read", "free"])
        j, m = rng.randrange(k), rng.randrange(k)
        pj, pm = heap.cells[pc + j], heap.cells[pc + m]
        if op == "new" and allocated < max_addrs:
            a = heap.alloc(1, INT)
            allocated += 1
            v = rng.randrange(1000)
            heap.write(a, rt.dealer_share(v))
            model.val[a] = v
            heap.write(pc + j, PrivPtr.to(a, PINT))
            model.ptr[j] = a
        elif op == "copy":
            heap.write(pc + j, ptr_update(pj, pm))
            model.ptr[j] = model.ptr[m]
        elif op == "cond":
            c = rng.randrange(2)
            heap.write(pc + j, cond_assign(rt, pj, pm, rt.dealer_share(c)))
            if c:
                model.ptr[j] = model.ptr[m]
        elif op == "write":
            if pj.is_public and pj.locs[0] == NULL:
                continue
            v = rng.randrange(1000)
            deref_write(rt, heap, pj, rt.dealer_share(v))
            if model.ptr[j] not in (None, NULL):
                model.val[model.ptr[j]] = v
        elif op == "read":
            if pj.is_public and pj.locs[0] == NULL:
                continue
            got = rt.reveal(deref_read(rt, heap, pj))
            want = model.val.get(model.ptr[j], 0) if model.ptr[j] not in (None, NULL) else 0
            assert got == want
        elif op == "free":
            if NULL in pj.locs:
                dealloc(rt, heap, pj)  # documented no-op
                continue
            l1 = pj.locs[0]
            if pj.is_public and any(l1 in heap.cells[pc + i].locs for i in range(k) if i != j):
                continue  # freeing memory still reachable through another pointer
            ptrue = model.ptr[j]
            was_public = pj.is_public
            dealloc(rt, heap, pj)
            if was_public:
                # free-then-null idiom; nothing else mentions the block
                heap.write(pc + j, PrivPtr.null(PINT))
                model.ptr[j] = NULL
                del model.val[l1]
                continue
            dest = ptrue if ptrue not in (None, l1) else None
            if dest is not None:
                model.val[dest] = model.val[l1]
            del model.val[l1]
            for i in range(k):
                if model.ptr[i] == l1:
                    model.ptr[i] = dest
                    dangling_seen += dest is None
                q = heap.cells[pc + i]
                if model.ptr[i] is None and q.is_public and q.locs == [NULL]:
                    model.ptr[i] = NULL  # no candidate left: publicly null
        # invariants after every operation
        for i in range(k):
            p = heap.cells[pc + i]
            s = tag_sum(rt, p)
            assert s in (0, 1)
            if model.ptr[i] is None:
                assert s == 0
            else:
                assert s == 1 and true_location(rt, p) == model.ptr[i]
            assert len(set(p.locs)) == len(p.locs)
        for a, v in model.val.items():
            assert rt.reveal(heap.cells[a]) == v
    return dangling_seen


@pytest.mark.parametrize("seed", range(40))
def test_random_pointer_machine_matches_oracle(seed):
    run_machine(seed)


def test_dangling_pointers_arise_only_from_free():
    # across seeds the generator does hit the deliberate dangling case
    assert sum(run_machine(s, n_ops=120) for s in range(40, 60)) > 0
