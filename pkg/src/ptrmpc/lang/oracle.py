"""Plaintext reference interpreter.

Runs the same checked program on clear values with real branching.  Pointers
are plain addresses, private arithmetic is reduced into the centered range
of the field so results agree with the shared computation, and a read from a
freed or out-of-range location yields 0 (the shared runtime cannot fault on a
private address either).  Nothing here touches the MPC runtime; it is the
reference the mpc mode is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..types import ArrayType, FuncType, IntType, PtrType, StructType, Type, VoidType, cell_types
from . import ast as A
from .checker import CheckedProgram, decay, is_private_ptr
from .interp import InputError, RuntimeAbort
from .interp import _int_range as _lo_hi


class _Return(Exception):
    def __init__(self, value):
        self.value = value


@dataclass
class _Blk:
    base: int
    count: int
    elem: Type
    kind: str

    @property
    def esize(self) -> int:
        return len(cell_types(self.elem))

    @property
    def end(self) -> int:
        return self.base + self.count * self.esize


class PlainInterpreter:
    def __init__(self, checked: CheckedProgram, prime: int, inputs: dict[str, list[int]] | None = None,
                 defines: dict[str, int] | None = None):
        self.cp = checked
        self.p = prime
        self.inputs = inputs or {}
        self.defines = defines or {}
        self.outputs: dict[str, list[int]] = {}
        self.mem: dict[int, int] = {}
        self.blocks: dict[int, _Blk] = {}
        self.next = 1
        self.globals: dict[str, tuple[int, Type]] = {}
        self.scopes: list[dict] = [self.globals]
        self.owned: list[list[int]] = []
        self.code: dict[int, str] = {}
        self.code_addr: dict[str, int] = {}
        self.branch_counter = 0
        self.priv_depth = 0

    # -- memory -----------------------------------------------------------------
    def alloc(self, count: int, elem: Type, kind: str) -> int:
        base = self.next
        b = _Blk(base, count, elem, kind)
        for a in range(base, b.end):
            self.mem[a] = 0
        self.blocks[base] = b
        self.next = b.end
        return base

    def free(self, base: int, kind: str) -> None:
        b = self.blocks.pop(base, None)
        if b is None or b.kind != kind:
            raise RuntimeAbort(f"free of non-block address {base}")
        for a in range(b.base, b.end):
            del self.mem[a]

    def block_of(self, addr: int) -> _Blk | None:
        for b in self.blocks.values():
            if b.base <= addr < b.end:
                return b
        return None

    def load(self, addr: int) -> int:
        if addr == 0:
            raise RuntimeAbort("null pointer dereference")
        return self.mem.get(addr, 0)

    def store(self, addr: int, v: int) -> None:
        if addr == 0:
            raise RuntimeAbort("null pointer dereference")
        if addr in self.mem:
            self.mem[addr] = v

    def red(self, v: int) -> int:
        v %= self.p
        return v - self.p if v > self.p // 2 else v

    # -- scopes -------------------------------------------------------------------
    def lookup(self, name: str) -> tuple[int, Type]:
        for s in reversed(self.scopes):
            if name in s:
                return s[name]
        raise RuntimeAbort(f"unbound name {name!r}")

    def declare(self, name: str, t: Type, count: int = 1) -> int:
        elem = t.elem if isinstance(t, ArrayType) else t
        a = self.alloc(count, elem, "static")
        self.scopes[-1][name] = (a, t)
        if self.owned:
            self.owned[-1].append(a)
        return a

    def enter(self) -> None:
        self.scopes.append({})
        self.owned.append([])

    def leave(self) -> None:
        self.scopes.pop()
        for a in self.owned.pop():
            if a in self.blocks:
                self.free(a, "static")

    # -- driver -------------------------------------------------------------------
    def run(self) -> dict[str, list[int]]:
        for name in self.cp.funcs:
            a = self.alloc(1, FuncType(name), "code")
            self.code[a] = name
            self.code_addr[name] = a
        for item in self.cp.program.items:
            if isinstance(item, A.DeclStmt):
                self.decl(item, top=True)
        self.call("main", [])
        return self.outputs

    def call(self, name: str, args: list[int]) -> int | None:
        info = self.cp.funcs[name]
        saved_scopes, saved_owned = self.scopes, self.owned
        self.scopes, self.owned = [self.globals, {}], [[]]
        try:
            for prm, t, v in zip(info.node.params, info.params, args):
                if prm.name is not None:
                    self.mem[self.declare(prm.name, t)] = v
            try:
                self.block(info.node.body.body)
                return None
            except _Return as r:
                return r.value
        finally:
            for a in self.owned[0]:
                if a in self.blocks:
                    self.free(a, "static")
            self.scopes, self.owned = saved_scopes, saved_owned

    # -- statements -----------------------------------------------------------------
    def block(self, body: list[A.Stmt]) -> None:
        for s in body:
            self.stmt(s)

    def scoped(self, body: list[A.Stmt]) -> None:
        self.enter()
        try:
            self.block(body)
        finally:
            self.leave()

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, (A.Block, A.Batch)):
            self.scoped(s.body)
        elif isinstance(s, A.ExprStmt):
            self.ev(s.expr)
        elif isinstance(s, A.DeclStmt):
            self.decl(s)
        elif isinstance(s, A.If):
            private = s.test.sec != "public"
            c = self.truth(self.ev(s.test))
            if private:
                self.priv_depth += 1
                self.branch_counter += 1 if s.other is None else 2
            try:
                if c:
                    self.stmt(s.then)
                elif s.other is not None:
                    self.stmt(s.other)
            finally:
                if private:
                    self.priv_depth -= 1
        elif isinstance(s, A.For):
            self.enter()
            try:
                if s.init is not None:
                    self.stmt(s.init)
                while s.test is None or self.truth(self.ev(s.test)):
                    self.stmt(s.body)
                    if s.step is not None:
                        self.ev(s.step)
            finally:
                self.leave()
        elif isinstance(s, A.While):
            while self.truth(self.ev(s.test)):
                self.stmt(s.body)
        elif isinstance(s, A.Return):
            raise _Return(self.ev(s.value) if s.value is not None else None)
        else:
            raise RuntimeAbort(f"unsupported statement {type(s).__name__}")

    def decl(self, s: A.DeclStmt, top: bool = False) -> None:
        for d in s.decls:
            t = self.resolve(s.spec, d.ptr_depth, d.fn_params is not None)
            if d.array_len is not None:
                n = self.ev(d.array_len)
                if n < 1:
                    raise RuntimeAbort(f"array {d.name!r} needs a positive length")
                self.declare(d.name, ArrayType(t, n), n)
                continue
            a = self.declare(d.name, t)
            if top and d.name in self.defines:
                self.mem[a] = self.defines[d.name]
            elif d.init is not None:
                v = self.ev(d.init)
                self.mem[a] = self.red(v) if _is_priv_int(t) else v

    def resolve(self, spec: A.TypeSpec, depth: int, is_fn: bool) -> Type:
        if spec.base == "int":
            t: Type = IntType(spec.bits or 32, spec.qual != "public")
        elif spec.base == "void":
            t = VoidType(spec.qual == "private")
        else:
            t = self.cp.structs[spec.struct_name]
        if is_fn:
            t, depth = FuncType("fn"), max(depth, 1)
        for _ in range(depth):
            t = PtrType(t)
        return t

    # -- lvalues: ("mem", addr) | ("idx", base, i, field offset, elem size)
    #            | ("view", addr, i, source bits, view bits)
    def lval(self, e: A.Expr):
        if isinstance(e, A.Name):
            return ("mem", self.lookup(e.id)[0])
        if isinstance(e, A.Unary) and e.op == "*":
            a = self.ev(e.operand)
            v = self.view(a, e.operand.ty)
            if v is not None:
                return ("view", a, 0) + v
            return ("mem", a)
        if isinstance(e, A.Index):
            bt = e.base.ty
            base = self.lval(e.base)[1] if isinstance(bt, ArrayType) else self.ev(e.base)
            i = self.ev(e.index)
            if not isinstance(bt, ArrayType):
                v = self.view(base, bt)
                if v is not None:
                    return ("view", base, i) + v
            es = e.ty.size
            if e.index.sec == "private":
                return ("idx", base, self.red(i), 0, es)
            return ("mem", base + i * es)
        if isinstance(e, A.Field):
            if e.arrow:
                return ("mem", self.ev(e.base) + e.offset)
            lv = self.lval(e.base)
            if lv[0] == "idx":
                return lv[:3] + (lv[3] + e.offset, lv[4])
            return ("mem", lv[1] + e.offset)
        raise RuntimeAbort("not an lvalue")

    def view(self, addr: int, t: Type | None) -> tuple[int, int] | None:
        """(source bits, view bits) when a private int pointer reads a block
        of a different width."""
        t = decay(t)
        if not (isinstance(t, PtrType) and isinstance(t.target, IntType) and t.target.private):
            return None
        b = self.block_of(addr)
        if b is None or not isinstance(b.elem, IntType) or b.elem.bits == t.target.bits:
            return None
        return b.elem.bits, t.target.bits

    def idx_addr(self, lv) -> int | None:
        _, base, i, off, es = lv
        b = self.block_of(base)
        if b is None:
            return None
        j = (base - b.base) // es + i
        if not 0 <= j < b.count:
            return None
        return b.base + j * es + off

    def rd(self, lv, t: Type | None) -> int:
        if isinstance(t, ArrayType) and lv[0] == "mem":
            return lv[1]
        kind = lv[0]
        if kind == "mem":
            return self.load(lv[1])
        if kind == "idx":
            a = self.idx_addr(lv)
            return 0 if a is None else self.mem.get(a, 0)
        _, addr, i, s, w = lv
        lo, hi = i * w, (i + 1) * w
        b = self.block_of(addr)
        if lo < 0 or b is None or addr + (hi - 1) // s >= b.end:
            raise RuntimeAbort("cast element extends past the source block")
        acc = 0
        for k in range(lo // s, (hi - 1) // s + 1):
            acc |= (self.load(addr + k) & ((1 << s) - 1)) << (k * s)
        x = (acc >> lo) & ((1 << w) - 1)
        return x - (1 << w) if x >> (w - 1) else x

    def wr(self, lv, v: int) -> None:
        if lv[0] == "mem":
            self.store(lv[1], v)
        elif lv[0] == "idx":
            a = self.idx_addr(lv)
            if a is not None:
                self.mem[a] = v
        else:
            raise RuntimeAbort("write through a cast pointer")

    # -- expressions ------------------------------------------------------------------
    def truth(self, v) -> int:
        return int(self.red(v) != 0) if isinstance(v, int) else 1

    def ev(self, e: A.Expr):
        if isinstance(e, A.Num):
            return e.value
        if isinstance(e, A.Name):
            sym = getattr(e, "sym", None)
            if sym is not None and sym.kind == "func":
                return self.code_addr[e.id]
            a, t = self.lookup(e.id)
            return a if isinstance(t, ArrayType) else self.load(a)
        if isinstance(e, (A.Index, A.Field)):
            return self.rd(self.lval(e), e.ty)
        if isinstance(e, A.Unary):
            return self.unary(e)
        if isinstance(e, A.Postfix):
            return self.incdec(e.operand, 1 if e.op == "++" else -1, False)
        if isinstance(e, A.Binary):
            if e.op in ("&&", "||"):
                a = self.truth(self.ev(e.left))
                if e.left.sec == "public" and (a if e.op == "||" else not a):
                    return a
                b = self.truth(self.ev(e.right))
                return (a and b) if e.op == "&&" else int(a or b)
            return self.binop(e.op, self.ev(e.left), self.ev(e.right), e)
        if isinstance(e, A.Assign):
            lv = self.lval(e.target)
            if e.op == "=":
                v = self.ev(e.value)
            else:
                old = self.rd(lv, e.target.ty)
                v = self.binop(e.op[:-1], old, self.ev(e.value), e, e.target.ty, e.value.ty)
            if _is_priv_int(e.target.ty):
                v = self.red(v)
            self.wr(lv, v)
            return v
        if isinstance(e, A.Cond):
            c = self.truth(self.ev(e.test))
            if e.test.sec != "public":
                a, b = self.ev(e.then), self.ev(e.other)
                return a if c else b
            return self.ev(e.then if c else e.other)
        if isinstance(e, A.Cast):
            v = self.ev(e.operand)
            t = e.ty
            if isinstance(t, IntType) and not t.private and not isinstance(decay(e.operand.ty), PtrType):
                m = 1 << t.bits
                v &= m - 1
                return v - m if v >= m >> 1 else v
            return v
        if isinstance(e, A.PMalloc):
            n = self.ev(e.count)
            if n < 1:
                raise RuntimeAbort("pmalloc count must be positive")
            return self.alloc(n, e.elem, "heap")
        if isinstance(e, A.Call):
            return self.call_expr(e)
        raise RuntimeAbort(f"unsupported expression {type(e).__name__}")

    def unary(self, e: A.Unary):
        op = e.op
        if op == "*":
            return self.rd(self.lval(e), e.ty)
        if op == "&":
            o = e.operand
            if isinstance(o, A.Name) and getattr(o, "sym", None) is not None and o.sym.kind == "func":
                return self.code_addr[o.id]
            lv = self.lval(o)
            if lv[0] != "mem":
                raise RuntimeAbort("address of a privately indexed element")
            return lv[1]
        if op in ("++pre", "--pre"):
            return self.incdec(e.operand, 1 if op == "++pre" else -1, True)
        v = self.ev(e.operand)
        priv = e.operand.sec == "private"
        if op == "-":
            return self.red(-v) if priv else -v
        if op == "~":
            return ~v
        if op == "!":
            return 1 - self.truth(v)
        raise RuntimeAbort(f"unknown operator {op}")

    def incdec(self, target: A.Expr, d: int, prefix: bool):
        lv = self.lval(target)
        old = self.rd(lv, target.ty)
        t = decay(target.ty)
        step = d * t.elem_size if isinstance(t, PtrType) and not is_private_ptr(t) else d
        if isinstance(t, PtrType) and is_private_ptr(t):
            step = d * t.elem_size
        new = old + step
        if _is_priv_int(t):
            new = self.red(new)
        self.wr(lv, new)
        return new if prefix else old

    def binop(self, op: str, a: int, b: int, e: A.Expr, lt: Type | None = None,
              rtp: Type | None = None):
        lt = decay(lt if lt is not None else e.left.ty)
        rtp = decay(rtp if rtp is not None else e.right.ty)
        lp, rp = isinstance(lt, PtrType), isinstance(rtp, PtrType)
        if lp or rp:
            if op in ("==", "!="):
                return int((a == b) == (op == "=="))
            if lp and rp:
                return (a - b) // lt.elem_size
            if lp:
                return a + (b if op == "+" else -b) * lt.elem_size
            return b + a * rtp.elem_size
        priv = _is_priv_int(lt) or _is_priv_int(rtp)
        if priv:
            a, b = self.red(a), self.red(b)
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op in ("/", "%"):
            if b == 0:
                raise RuntimeAbort("division by zero")
            q = abs(a) // abs(b) * (1 if (a >= 0) == (b >= 0) else -1)
            r = q if op == "/" else a - q * b
        elif op == "<<":
            r = a << b
        elif op == ">>":
            r = a >> b
        elif op == "&":
            r = a & b
        elif op == "|":
            r = a | b
        elif op == "^":
            r = a ^ b
        elif op in _CMP:
            return int(_CMP[op](a, b))
        else:
            raise RuntimeAbort(f"unknown operator {op}")
        return self.red(r) if priv else r

    # -- calls --------------------------------------------------------------------------
    def call_expr(self, e: A.Call):
        callee = getattr(e, "callee", None)
        if isinstance(e.func, A.Name) and e.func.id == callee and callee in _BUILTINS:
            return getattr(self, "b_" + callee)(e)
        args = [self.ev(a) for a in e.args]
        if callee is not None:
            return self.call(callee, args)
        target = self.ev(e.func)
        name = self.code.get(target)
        if name is None:
            raise RuntimeAbort("call through an invalid function pointer")
        self.call(name, args)
        return None

    def b_stats_mark(self, e: A.Call) -> None:
        return None

    def b_pfree(self, e: A.Call) -> None:
        a = self.ev(e.args[0])
        if a != 0:
            self.free(a, "heap")

    def _io(self, e: A.Call):
        lv = self.lval(e.args[0])
        t = e.args[0].ty
        if isinstance(e.args[0], A.Name):
            t = self.lookup(e.args[0].id)[1]
        count = self.ev(e.args[2]) if len(e.args) == 3 else None
        if isinstance(t, ArrayType):
            return lv, t.elem, t.length if count is None else count
        return lv, t, 1 if count is None else count

    def _cell(self, lv, k: int, size: int):
        if k == 0:
            return lv
        if lv[0] == "mem":
            return ("mem", lv[1] + k * size)
        raise RuntimeAbort("multi-value i/o needs an addressable target")

    def b_smcinput(self, e: A.Call) -> None:
        name = _root(e.args[0])
        if name not in self.inputs:
            raise InputError(f"no input values for {name!r}")
        lv, elem, n = self._io(e)
        vals = self.inputs[name]
        if len(vals) < n:
            raise InputError(f"input {name!r} has {len(vals)} values, {n} needed")
        for k in range(n):
            v = vals[k]
            if isinstance(elem, IntType) and not _lo_hi(elem.bits)[0] <= v <= _lo_hi(elem.bits)[1]:
                raise InputError(f"input {name!r} value {v} does not fit in {elem.bits} bits")
            self.wr(self._cell(lv, k, elem.size), v)

    def b_smcoutput(self, e: A.Call) -> None:
        name = _root(e.args[0])
        lv, elem, n = self._io(e)
        if isinstance(elem, PtrType):
            raise RuntimeAbort("output of a pointer")
        out = []
        for k in range(n):
            v = self.rd(self._cell(lv, k, elem.size), elem)
            out.append(self.red(v) if _is_priv_int(elem) else v)
        self.outputs[name] = out


_BUILTINS = ("smcinput", "smcoutput", "pfree", "stats_mark")

_CMP = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b,
}


def _is_priv_int(t: Type | None) -> bool:
    return isinstance(t, IntType) and t.private


def _root(e: A.Expr) -> str:
    while not isinstance(e, A.Name):
        if isinstance(e, (A.Index, A.Field)):
            e = e.base
        elif isinstance(e, A.Unary):
            e = e.operand
        else:
            return "<expr>"
    return e.id
