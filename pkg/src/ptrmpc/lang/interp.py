"""Interpreter that executes checked programs on secret-shared data.

One coordinator walks the tree on behalf of all parties; every value that
depends on private data is a SharedValue (or a PrivPtr whose tags are), and
each interactive step goes through the Runtime, which accounts for it.

Private branches run both bodies.  Writes are journaled per heap cell; after
both bodies ran, every touched cell is restored and then set to the merge of
its then/else/original contents under the condition bit.
"""

from __future__ import annotations

import logging
from contextlib import nullcontext
from dataclasses import dataclass, field

from ..harness import Runtime, Value
from ..heap import NULL, Heap, HeapError
from ..mpcops import eq_test, lt_test
from ..privptr import (PrivPtr, cast_ptr, copy_content, dealloc, deref_cast, fnptr_targets,
                       index_read_private, index_update_private, load, merge_contents,
                       ptr_diff, ptr_offset, ptr_pred_equal, store)
from ..shamir import SharedValue
from ..types import ArrayType, FuncType, IntType, PtrType, StructType, Type, cell_types
from . import ast as A
from .checker import CheckedProgram, decay, is_private_ptr

log = logging.getLogger(__name__)


class RuntimeAbort(RuntimeError):
    """Execution stopped: public side effect under a private condition, or a
    memory violation."""


class InputError(ValueError):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def parse_inputs(text: str) -> dict[str, list[int]]:
    """Lines ``name=v1,v2,...``; blank lines and ``#`` comments ignored."""
    out: dict[str, list[int]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {n}: expected name=values")
        name, vals = line.split("=", 1)
        try:
            out[name.strip()] = [int(v) for v in vals.split(",") if v.strip()]
        except ValueError as exc:
            raise InputError(f"line {n}: {exc}") from None
    return out


def format_outputs(outputs: dict[str, list[int]]) -> str:
    return "".join(f"{k}={','.join(str(v) for v in vs)}\n" for k, vs in outputs.items())


@dataclass
class Frame:
    scopes: list[dict[str, tuple[int, Type]]]
    blocks: list[list[int]] = field(default_factory=list)


def _init_cell(t: Type) -> object:
    if isinstance(t, PtrType) and is_private_ptr(t):
        return PrivPtr.null(t)
    return 0


class MpcInterpreter:
    def __init__(self, checked: CheckedProgram, rt: Runtime, inputs: dict[str, list[int]] | None = None,
                 defines: dict[str, int] | None = None):
        self.cp = checked
        self.rt = rt
        self.heap = Heap(_init_cell)
        self.inputs = inputs or {}
        self.defines = defines or {}
        self.outputs: dict[str, list[int]] = {}
        self.marks: list[tuple[str, dict]] = []
        self.globals: dict[str, tuple[int, Type]] = {}
        self.frame = Frame([self.globals])
        self.code_addr: dict[str, int] = {}
        self.code_name: dict[int, str] = {}
        self.priv_depth = 0
        self.priv_mark = 0  # heap watermark at entry of the outermost private branch
        self.branch_counter = 0  # bodies executed under private conditions
        self._expr = {t: getattr(self, "x_" + t.__name__) for t in (
            A.Num, A.Name, A.Unary, A.Postfix, A.Binary, A.Assign, A.Index, A.Field,
            A.Call, A.Cast, A.PMalloc, A.Cond)}
        self._stmt = {t: getattr(self, "s_" + t.__name__) for t in (
            A.Block, A.Batch, A.If, A.For, A.While, A.Return, A.ExprStmt, A.DeclStmt)}

    # -- driver ------------------------------------------------------------
    def run(self) -> dict[str, list[int]]:
        for name in self.cp.funcs:
            addr = self.heap.alloc(1, FuncType(name), kind="code")
            self.heap.cells[addr] = name
            self.code_addr[name] = addr
            self.code_name[addr] = name
        for item in self.cp.program.items:
            if isinstance(item, A.DeclStmt):
                self.s_DeclStmt(item, top=True)
        try:
            self.call_function("main", [])
        except HeapError as exc:
            raise RuntimeAbort(f"memory violation: {exc}") from None
        return self.outputs

    # -- memory helpers ------------------------------------------------------
    def lookup(self, name: str) -> tuple[int, Type]:
        for s in reversed(self.frame.scopes):
            if name in s:
                return s[name]
        raise RuntimeAbort(f"unbound name {name!r}")

    def declare(self, name: str, t: Type, count: int = 1) -> int:
        elem = t.elem if isinstance(t, ArrayType) else t
        addr = self.heap.alloc(count, elem, kind="static")
        self.frame.scopes[-1][name] = (addr, t)
        if self.frame.blocks:
            self.frame.blocks[-1].append(addr)
        return addr

    def write_cell(self, addr: int, t: Type, v: object) -> None:
        if self.priv_depth and addr < self.priv_mark and not _holds_private(t):
            raise RuntimeAbort(f"public side effect at address {addr} under a private condition")
        self.heap.write(addr, self.coerce(v, t))

    def coerce(self, v: object, t: Type) -> object:
        if isinstance(t, PtrType):
            if is_private_ptr(t):
                if isinstance(v, PrivPtr):
                    out = v.copy()
                    out.ptype = t if out.cast_from is None else out.ptype
                    return out
                return PrivPtr.to(int(v), t) if v else PrivPtr.null(t)
            if isinstance(v, PrivPtr):
                return v.address
            return v
        if isinstance(v, PrivPtr):
            raise RuntimeAbort("pointer stored into an integer")
        return v

    # -- lvalues -------------------------------------------------------------
    # ("cell", addr, type) | ("ptr", PrivPtr, offset, type)
    # | ("pidx", PrivPtr, index, field offset, type, bits) | ("cast", PrivPtr, i, type)
    def lvalue(self, e: A.Expr):
        if isinstance(e, A.Name):
            addr, t = self.lookup(e.id)
            return ("cell", addr, t)
        if isinstance(e, A.Unary) and e.op == "*":
            p = self.eval(e.operand)
            if isinstance(p, PrivPtr) and p.cast_from is not None:
                return ("cast", p, 0, e.ty)
            return self.through(p, 0, e.ty)
        if isinstance(e, A.Index):
            bt = e.base.ty
            idx = self.eval(e.index)
            elem = e.ty
            es = elem.size
            if isinstance(bt, ArrayType):
                base_lv = self.lvalue(e.base)
                if isinstance(idx, int):
                    return self.shift(base_lv, idx * es, elem)
                base = self.addr_of(base_lv, PtrType(elem))
            else:
                base = self.eval(e.base)
                if isinstance(idx, int):
                    if isinstance(base, PrivPtr) and base.cast_from is not None:
                        return ("cast", base, idx, elem)
                    return self.through(base, idx * es, elem)
            if isinstance(idx, int):
                return self.through(base, idx * es, elem)
            if not isinstance(base, PrivPtr):
                base = PrivPtr.to(base, PtrType(elem))
            bits = e.index.ty.bits if isinstance(e.index.ty, IntType) else 32
            return ("pidx", base, idx, 0, elem, max(bits, 2))
        if isinstance(e, A.Field):
            if e.arrow:
                p = self.eval(e.base)
                return self.through(p, e.offset, e.ty)
            return self.shift(self.lvalue(e.base), e.offset, e.ty)
        raise RuntimeAbort(f"not an lvalue at {e.line}:{e.col}")

    def through(self, p: object, offset: int, t: Type):
        if isinstance(p, PrivPtr):
            if p.is_public:
                if p.locs[0] == NULL:
                    raise RuntimeAbort("null pointer dereference")
                return ("cell", p.locs[0] + offset, t)
            return ("ptr", p, offset, t)
        if p == NULL:
            raise RuntimeAbort("null pointer dereference")
        return ("cell", p + offset, t)

    @staticmethod
    def shift(lv, off: int, t: Type):
        kind = lv[0]
        if kind == "cell":
            return ("cell", lv[1] + off, t)
        if kind == "ptr":
            return ("ptr", lv[1], lv[2] + off, t)
        if kind == "pidx":
            return ("pidx", lv[1], lv[2], lv[3] + off, t, lv[5])
        raise RuntimeAbort("member of a cast element")

    def addr_of(self, lv, ptype: PtrType) -> object:
        if lv[0] == "cell":
            addr = lv[1]
            if is_private_ptr(ptype):
                return PrivPtr.to(addr, ptype)
            return addr
        if lv[0] == "ptr":
            p = lv[1]
            q = PrivPtr([l + lv[2] if l != NULL else NULL for l in p.locs], list(p.tags), ptype)
            return q
        raise RuntimeAbort("address of a privately indexed element")

    def read(self, lv) -> object:
        kind = lv[0]
        if kind == "cell":
            t = lv[2]
            if isinstance(t, ArrayType):
                return self.addr_of(lv, PtrType(t.elem))
            return copy_content(self.heap.read(lv[1]))
        if kind == "ptr":
            if isinstance(lv[3], ArrayType):
                return self.addr_of(lv, PtrType(lv[3].elem))
            return load(self.rt, self.heap, lv[1], lv[2])
        if kind == "pidx":
            return index_read_private(self.rt, self.heap, lv[1], lv[2], lv[5], lv[3])
        return deref_cast(self.rt, self.heap, lv[1], lv[2])

    def write(self, lv, v: object) -> None:
        kind = lv[0]
        t = lv[-1] if kind != "pidx" else lv[4]
        if kind == "cell":
            self.write_cell(lv[1], lv[2], v)
        elif kind == "ptr":
            t = lv[3]
            store(self.rt, self.heap, lv[1], self.coerce(v, t), lv[2])
        elif kind == "pidx":
            if isinstance(v, PrivPtr):
                raise RuntimeAbort("pointer store through a private index")
            index_update_private(self.rt, self.heap, lv[1], lv[2], v, lv[5], lv[3])
        else:
            raise RuntimeAbort("write through a cast pointer")

    # -- statements ------------------------------------------------------------
    def exec(self, s: A.Stmt) -> None:
        self._stmt[type(s)](s)

    def exec_list(self, body: list[A.Stmt]) -> None:
        i = 0
        n = len(body)
        while i < n:
            s = body[i]
            if isinstance(s, A.Batch):
                # adjacent batch blocks run concurrently
                j = i
                while j < n and isinstance(body[j], A.Batch):
                    j += 1
                with self.rt.batch():
                    for b in body[i:j]:
                        self.scoped(b.body)
                i = j
                continue
            self._stmt[type(s)](s)
            i += 1

    def scoped(self, body: list[A.Stmt]) -> None:
        self.frame.scopes.append({})
        self.frame.blocks.append([])
        try:
            self.exec_list(body)
        finally:
            self.frame.scopes.pop()
            for base in self.frame.blocks.pop():
                if base in self.heap.blocks:
                    self.heap.release(base, kind="static")

    def s_Block(self, s: A.Block) -> None:
        self.scoped(s.body)

    def s_Batch(self, s: A.Batch) -> None:
        with self.rt.batch():
            self.scoped(s.body)

    def s_ExprStmt(self, s: A.ExprStmt) -> None:
        self.eval(s.expr)

    def s_DeclStmt(self, s: A.DeclStmt, top: bool = False) -> None:
        for d in s.decls:
            sym_t = self._decl_type(s, d)
            if isinstance(sym_t, ArrayType):
                n = self.eval(d.array_len)
                if not isinstance(n, int) or n < 1:
                    raise RuntimeAbort(f"array {d.name!r} needs a positive public length")
                sym_t = ArrayType(sym_t.elem, n)
                self.declare(d.name, sym_t, n)
            else:
                addr = self.declare(d.name, sym_t)
                init = d.init
                if top and d.name in self.defines:
                    self.heap.write(addr, self.defines[d.name])
                elif init is not None:
                    self.write_cell(addr, sym_t, self.eval_as(init, sym_t))

    def _decl_type(self, s: A.DeclStmt, d: A.Declarator) -> Type:
        t = getattr(d, "_ty", None)
        if t is None:
            t = _resolve(self.cp, s.spec, d.ptr_depth, d.fn_params is not None)
            if d.array_len is not None:
                t = ArrayType(t, -1)
            d._ty = t
        return t

    def eval_as(self, e: A.Expr, t: Type) -> object:
        v = self.eval(e)
        if isinstance(t, PtrType) and isinstance(v, str):
            v = self.code_addr[v]
        return v

    def s_If(self, s: A.If) -> None:
        c = self.truth(self.eval(s.test), s.test.ty)
        if isinstance(c, int):
            if c:
                self.exec(s.then)
            elif s.other is not None:
                self.exec(s.other)
            return
        self.private_branch(c, s.then, s.other, s.dead_after)

    def private_branch(self, c: SharedValue, then: A.Stmt, other: A.Stmt | None,
                       dead: frozenset[str] = frozenset()) -> None:
        heap = self.heap
        mark = heap._next
        outer = self.priv_depth == 0
        if outer:
            self.priv_mark = mark
        self.priv_depth += 1
        try:
            heap.push_journal()
            self.branch_counter += 1
            self.exec(then)
            jt = heap.pop_journal()
            then_vals = {a: heap.cells[a] for a in jt if a in heap.cells}
            for a, v in jt.items():
                if a in heap.cells:
                    heap.raw_set(a, v)
            je: dict[int, object] = {}
            else_vals: dict[int, object] = {}
            if other is not None:
                heap.push_journal()
                self.branch_counter += 1
                self.exec(other)
                je = heap.pop_journal()
                else_vals = {a: heap.cells[a] for a in je if a in heap.cells}
                for a, v in je.items():
                    if a in heap.cells:
                        heap.raw_set(a, v)
        finally:
            self.priv_depth -= 1
        skip = set()
        for name in dead:
            try:
                addr, t = self.lookup(name)
            except RuntimeAbort:
                continue
            skip.update(range(addr, addr + max(t.size, 1)))
        items = []
        addrs = []
        for a in sorted(set(then_vals) | set(else_vals)):
            if a >= mark or a in skip or a not in heap.cells:
                continue
            orig = jt[a] if a in jt else je[a]
            if a in then_vals and a in else_vals:
                tv, ev = then_vals[a], else_vals[a]
                if tv is ev:
                    continue
                items.append((ev, [(c, tv)]))
            elif a in then_vals:
                if then_vals[a] is orig:
                    continue
                items.append((orig, [(c, then_vals[a])]))
            else:
                if else_vals[a] is orig:
                    continue
                items.append((orig, [(1 - c, else_vals[a])]))
            addrs.append(a)
        if items:
            for a, v in zip(addrs, merge_contents(self.rt, items)):
                heap.write(a, v)

    def loop_test(self, e: A.Expr | None) -> bool:
        if e is None:
            return True
        v = self.truth(self.eval(e), e.ty)
        if not isinstance(v, int):
            raise RuntimeAbort("loop condition is private")
        return bool(v)

    def s_For(self, s: A.For) -> None:
        cm = self.rt.batch() if isinstance(s.body, A.Batch) else nullcontext()
        self.frame.scopes.append({})
        self.frame.blocks.append([])
        try:
            with cm:
                if s.init is not None:
                    self.exec(s.init)
                body = s.body.body if isinstance(s.body, A.Batch) else None
                while self.loop_test(s.test):
                    if body is not None:
                        self.scoped(body)
                    else:
                        self.exec(s.body)
                    if s.step is not None:
                        self.eval(s.step)
        finally:
            self.frame.scopes.pop()
            for base in self.frame.blocks.pop():
                if base in self.heap.blocks:
                    self.heap.release(base, kind="static")

    def s_While(self, s: A.While) -> None:
        cm = self.rt.batch() if isinstance(s.body, A.Batch) else nullcontext()
        with cm:
            while self.loop_test(s.test):
                self.exec(s.body)

    def s_Return(self, s: A.Return) -> None:
        if self.priv_depth:
            raise RuntimeAbort("return under a private condition")
        raise _Return(self.eval(s.value) if s.value is not None else None)

    # -- functions -------------------------------------------------------------
    def call_function(self, name: str, args: list[object]) -> object:
        info = self.cp.funcs[name]
        fd = info.node
        saved = self.frame
        self.frame = Frame([self.globals, {}], [[]])
        try:
            for p, t, v in zip(fd.params, info.params, args):
                if p.name is None:
                    continue
                addr = self.declare(p.name, t)
                self.heap.write(addr, self.coerce(v, t))
            try:
                self.exec_list(fd.body.body)
                result = None
            except _Return as r:
                result = r.value
        finally:
            for base in self.frame.blocks[0]:
                if base in self.heap.blocks:
                    self.heap.release(base, kind="static")
            self.frame = saved
        return result

    def call_pointer(self, p: object, args: list[object]) -> None:
        if isinstance(p, str):
            self.call_function(p, args)
            return
        if not isinstance(p, PrivPtr):
            p = PrivPtr.to(int(p))
        if p.is_public:
            name = self.code_name.get(p.locs[0])
            if name is None:
                raise RuntimeAbort("call through an invalid function pointer")
            self.call_function(name, args)
            return
        heap = self.heap
        mark = heap._next
        if self.priv_depth == 0:
            self.priv_mark = mark
        self.priv_depth += 1
        changes = []
        touched: dict[int, object] = {}
        try:
            for tag, fname in fnptr_targets(heap, p):
                heap.push_journal()
                self.branch_counter += 1
                self.call_function(fname, [copy_content(a) for a in args])
                j = heap.pop_journal()
                vals = {a: heap.cells[a] for a in j if a in heap.cells}
                for a, v in j.items():
                    if a in heap.cells:
                        heap.raw_set(a, v)
                    touched.setdefault(a, v)
                changes.append((tag, vals))
        finally:
            self.priv_depth -= 1
        items, addrs = [], []
        for a in sorted(touched):
            if a >= mark or a not in heap.cells:
                continue
            alts = [(tag, vals[a]) for tag, vals in changes if a in vals]
            items.append((touched[a], alts))
            addrs.append(a)
        if items:
            for a, v in zip(addrs, merge_contents(self.rt, items)):
                heap.write(a, v)

    # -- expressions --------------------------------------------------------------
    def eval(self, e: A.Expr) -> object:
        return self._expr[type(e)](e)

    def x_Num(self, e: A.Num) -> int:
        return e.value

    def x_Name(self, e: A.Name) -> object:
        sym = getattr(e, "sym", None)
        if sym is not None and sym.kind == "func":
            return PrivPtr.to(self.code_addr[e.id], PtrType(FuncType(e.id)))
        addr, t = self.lookup(e.id)
        if isinstance(t, ArrayType):
            return self.addr_of(("cell", addr, t), PtrType(t.elem))
        return copy_content(self.heap.read(addr))

    def x_Index(self, e: A.Index) -> object:
        return self.read(self.lvalue(e))

    def x_Field(self, e: A.Field) -> object:
        return self.read(self.lvalue(e))

    def x_Unary(self, e: A.Unary) -> object:
        op = e.op
        if op == "*":
            return self.read(self.lvalue(e))
        if op == "&":
            o = e.operand
            if isinstance(o, A.Name) and getattr(o, "sym", None) is not None and o.sym.kind == "func":
                return PrivPtr.to(self.code_addr[o.id], PtrType(FuncType(o.id)))
            return self.addr_of(self.lvalue(o), decay(e.ty))
        if op in ("++pre", "--pre"):
            return self.incdec(e.operand, 1 if op == "++pre" else -1, prefix=True)
        v = self.eval(e.operand)
        if op == "-":
            return -v
        if op == "~":
            return ~v
        if op == "!":
            c = self.truth(v, e.operand.ty)
            return 1 - c
        raise RuntimeAbort(f"unknown operator {op}")

    def x_Postfix(self, e: A.Postfix) -> object:
        return self.incdec(e.operand, 1 if e.op == "++" else -1, prefix=False)

    def incdec(self, target: A.Expr, d: int, prefix: bool) -> object:
        lv = self.lvalue(target)
        old = self.read(lv)
        if isinstance(old, PrivPtr):
            new = ptr_offset(old, d)
        elif isinstance(target.ty, PtrType):
            new = old + d * target.ty.elem_size
        else:
            new = old + d
        self.write(lv, new)
        return new if prefix else old

    def truth(self, v: object, t: Type | None) -> Value:
        if isinstance(v, int):
            return int(v != 0)
        if isinstance(v, PrivPtr):
            r = ptr_pred_equal(self.rt, v, PrivPtr.null(v.ptype))
            return 1 - r
        if isinstance(v, str):
            return 1
        if isinstance(t, IntType) and t.bits == 1:
            return v
        bits = t.bits if isinstance(t, IntType) else 32
        return 1 - eq_test(self.rt, v, 0, max(bits, 2))

    def x_Binary(self, e: A.Binary) -> object:
        op = e.op
        if op in ("&&", "||"):
            return self.logical(e)
        a = self.eval(e.left)
        b = self.eval(e.right)
        return self.binop(op, a, b, e)

    def logical(self, e: A.Binary) -> Value:
        a = self.truth(self.eval(e.left), e.left.ty)
        if isinstance(a, int):
            if (e.op == "&&" and not a) or (e.op == "||" and a):
                return a
            return self.truth(self.eval(e.right), e.right.ty)
        b = self.truth(self.eval(e.right), e.right.ty)
        if e.op == "&&":
            return self.rt.mul(a, b)
        return a + b - self.rt.mul(a, b)

    def binop(self, op: str, a: object, b: object, e: A.Expr) -> object:
        rt = self.rt
        if isinstance(a, (PrivPtr, str)) or isinstance(b, (PrivPtr, str)) or \
                isinstance(decay(e.left.ty), PtrType) or isinstance(decay(e.right.ty), PtrType):
            return self.ptr_binop(op, a, b, e)
        if isinstance(a, int) and isinstance(b, int):
            return _public_binop(op, a, b)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return rt.mul(a, b)
        bits = getattr(e, "cmp_bits", None) or max(_bits(e.left.ty), _bits(e.right.ty), 2)
        if op == "==":
            return eq_test(rt, a, b, bits)
        if op == "!=":
            return 1 - eq_test(rt, a, b, bits)
        if op == "<":
            return lt_test(rt, a, b, bits)
        if op == ">":
            return lt_test(rt, b, a, bits)
        if op == "<=":
            return 1 - lt_test(rt, b, a, bits)
        if op == ">=":
            return 1 - lt_test(rt, a, b, bits)
        raise RuntimeAbort(f"operator {op} on private data")

    def ptr_binop(self, op: str, a: object, b: object, e: A.Expr) -> object:
        lt, rtp = decay(e.left.ty), decay(e.right.ty)
        if op in ("==", "!="):
            pa = self.as_ptr(a, lt)
            pb = self.as_ptr(b, rtp)
            if isinstance(pa, int) and isinstance(pb, int):
                r = int(pa == pb)
            else:
                pa = pa if isinstance(pa, PrivPtr) else PrivPtr.to(pa)
                pb = pb if isinstance(pb, PrivPtr) else PrivPtr.to(pb)
                r = ptr_pred_equal(self.rt, pa, pb)
            return r if op == "==" else 1 - r
        if isinstance(a, PrivPtr) and isinstance(b, PrivPtr):
            return ptr_diff(self.rt, a, b)
        if isinstance(a, PrivPtr):
            return ptr_offset(a, b if op == "+" else -b)
        if isinstance(b, PrivPtr):
            return ptr_offset(b, a)
        # public pointers are plain addresses
        if isinstance(lt, PtrType) and isinstance(rtp, PtrType):
            return (a - b) // lt.elem_size
        if isinstance(lt, PtrType):
            return a + (b if op == "+" else -b) * lt.elem_size
        return b + a * rtp.elem_size

    def as_ptr(self, v: object, t: Type | None) -> object:
        if isinstance(v, str):
            return PrivPtr.to(self.code_addr[v])
        return v

    def x_Assign(self, e: A.Assign) -> object:
        lv = self.lvalue(e.target)
        if e.op == "=":
            v = self.eval_as(e.value, e.target.ty)
        else:
            old = self.read(lv)
            rhs = self.eval(e.value)
            v = self.binop(e.op[:-1], old, rhs, _fake_binary(e))
        self.write(lv, v)
        return v

    def x_Cond(self, e: A.Cond) -> object:
        c = self.truth(self.eval(e.test), e.test.ty)
        if isinstance(c, int):
            return self.eval(e.then if c else e.other)
        a = self.eval(e.then)
        b = self.eval(e.other)
        return merge_contents(self.rt, [(b, [(c, a)])])[0]

    def x_Cast(self, e: A.Cast) -> object:
        v = self.eval(e.operand)
        t = e.ty
        if isinstance(t, PtrType):
            if isinstance(v, PrivPtr):
                return cast_ptr(v, t)
            if is_private_ptr(t):
                return PrivPtr.to(v, t) if v else PrivPtr.null(t)
            return v
        if isinstance(v, int) and isinstance(t, IntType) and not t.private:
            return _wrap(v, t.bits)
        return v

    def x_PMalloc(self, e: A.PMalloc) -> object:
        if self.priv_depth:
            raise RuntimeAbort("pmalloc under a private condition")
        n = self.eval(e.count)
        if not isinstance(n, int) or n < 1:
            raise RuntimeAbort("pmalloc count must be a positive public integer")
        base = self.heap.alloc(n, e.elem)
        if is_private_ptr(e.ty):
            return PrivPtr.to(base, e.ty)
        return base

    def x_Call(self, e: A.Call) -> object:
        callee = getattr(e, "callee", "<ptr>")
        if callee in ("smcinput", "smcoutput", "pfree", "stats_mark") and \
                isinstance(e.func, A.Name) and e.func.id == callee:
            return getattr(self, "b_" + callee)(e)
        args = [self.eval_as(a, None) for a in e.args]
        if callee is not None and callee != "<ptr>":
            return self.call_function(callee, args)
        self.call_pointer(self.eval(e.func), args)
        return None

    # -- builtins -------------------------------------------------------------------
    def b_stats_mark(self, e: A.Call) -> None:
        label = str(self.eval(e.args[0])) if e.args else str(len(self.marks))
        self.marks.append((label, self.rt.stats.snapshot()))

    def b_pfree(self, e: A.Call) -> None:
        if self.priv_depth:
            raise RuntimeAbort("pfree under a private condition")
        p = self.eval(e.args[0])
        if isinstance(p, PrivPtr):
            dealloc(self.rt, self.heap, p)
        elif p != NULL:
            self.heap.release(p)

    def _io_target(self, e: A.Call):
        lv = self.lvalue(e.args[0])
        t = lv[-1] if lv[0] != "pidx" else lv[4]
        count = self.eval(e.args[2]) if len(e.args) == 3 else None
        if isinstance(t, ArrayType):
            n = t.length if count is None else count
            return lv, t.elem, n, True
        return lv, t, 1 if count is None else count, False

    def b_smcinput(self, e: A.Call) -> None:
        if self.priv_depth:
            raise RuntimeAbort("smcinput under a private condition")
        name = _root_name(e.args[0])
        if name not in self.inputs:
            raise InputError(f"no input values for {name!r}")
        vals = self.inputs[name]
        lv, elem, n, is_arr = self._io_target(e)
        if len(vals) < n:
            raise InputError(f"input {name!r} has {len(vals)} values, {n} needed")
        priv = isinstance(elem, IntType) and elem.private
        for k in range(n):
            v = vals[k]
            if isinstance(elem, IntType):
                lo, hi = _int_range(elem.bits)
                if not lo <= v <= hi:
                    raise InputError(f"input {name!r} value {v} does not fit in {elem.bits} bits")
            val = self.rt.dealer_share(v) if priv else v
            cell = self.shift(lv, k * elem.size, elem) if (is_arr or k) else lv
            self.write(cell, val)

    def b_smcoutput(self, e: A.Call) -> None:
        if self.priv_depth:
            raise RuntimeAbort("smcoutput under a private condition")
        name = _root_name(e.args[0])
        lv, elem, n, is_arr = self._io_target(e)
        vals = []
        for k in range(n):
            cell = self.shift(lv, k * elem.size, elem) if (is_arr or k) else lv
            vals.append(self.read(cell))
        shared = [v for v in vals if isinstance(v, SharedValue)]
        opened, _ = self.rt.open_many(shared) if shared else ([], 0)
        it = iter(opened)
        out = []
        for v in vals:
            if isinstance(v, SharedValue):
                out.append(self.rt.signed(next(it)))
            elif isinstance(v, PrivPtr):
                raise RuntimeAbort("output of a pointer")
            else:
                out.append(self.rt.signed(v % self.rt.p) if isinstance(elem, IntType) and elem.private else v)
        self.outputs[name] = out


# -- helpers -----------------------------------------------------------------------

def _holds_private(t: Type) -> bool:
    if isinstance(t, IntType):
        return t.private
    if isinstance(t, PtrType):
        return is_private_ptr(t)
    if isinstance(t, ArrayType):
        return _holds_private(t.elem)
    return True


def _int_range(bits: int) -> tuple[int, int]:
    """Accepted input range; one-bit ints are flags in {0, 1}."""
    if bits == 1:
        return 0, 1
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def _bits(t: Type | None) -> int:
    return t.bits if isinstance(t, IntType) else 32


def _wrap(v: int, bits: int) -> int:
    m = 1 << bits
    v &= m - 1
    return v - m if v >= m >> 1 else v


def _c_div(a: int, b: int) -> int:
    if b == 0:
        raise RuntimeAbort("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _public_binop(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return _c_div(a, b)
    if op == "%":
        return a - _c_div(a, b) * b
    if op == "<<":
        return a << b
    if op == ">>":
        return a >> b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == ">":
        return int(a > b)
    if op == "<=":
        return int(a <= b)
    if op == ">=":
        return int(a >= b)
    raise RuntimeAbort(f"unknown operator {op}")


def _fake_binary(e: A.Assign) -> A.Binary:
    b = getattr(e, "_bin", None)
    if b is None:
        b = A.Binary(e.op[:-1], e.target, e.value, line=e.line, col=e.col)
        e._bin = b
    return b


def _root_name(e: A.Expr) -> str:
    while not isinstance(e, A.Name):
        if isinstance(e, (A.Index, A.Field)):
            e = e.base
        elif isinstance(e, A.Unary):
            e = e.operand
        else:
            return "<expr>"
    return e.id


def _resolve(cp: CheckedProgram, spec: A.TypeSpec, depth: int, is_fn: bool) -> Type:
    if spec.base == "int":
        t: Type = IntType(spec.bits or 32, spec.qual != "public")
    elif spec.base == "void":
        from ..types import VoidType
        t = VoidType(spec.qual == "private")
    else:
        t = cp.structs[spec.struct_name]
    if is_fn:
        t = FuncType("fn", True)
        depth = max(depth, 1)
    for _ in range(depth):
        t = PtrType(t)
    return t
