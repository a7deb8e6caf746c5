"""Static checking: types, secrecy labels, and the public/private rules.

Rule ids reported in diagnostics:

a  address of public data assigned to a pointer to private data
b  pointer to public data updated under a private condition
c  pmalloc/pfree under a private condition
d  private qualifier on a struct type that has public fields
e  public side effect under a private condition
f  loop condition that is not public
g  pointer arithmetic while it is disabled
type / name  ordinary typing and scoping errors
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..types import (ArrayType, FuncType, IntType, PtrType, StructType, Type, VoidType,
                     all_fields_private, points_to_private)
from . import ast as A

BUILTINS = {"smcinput", "smcoutput", "pfree", "stats_mark"}
DEFAULT_BITS = 32


@dataclass
class Diagnostic:
    rule: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: [rule {self.rule}] {self.message}"


class CheckError(Exception):
    def __init__(self, diags: list[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diags))
        self.diagnostics = diags


@dataclass
class Sym:
    name: str
    ty: Type
    kind: str = "var"  # var / func
    level: int = 0  # scope depth of declaration
    is_global: bool = False
    node: object = None


@dataclass
class FuncInfo:
    node: A.FuncDef
    ret: Type
    params: list[Type]
    side_effects: bool = False
    calls: set[str] = field(default_factory=set)
    address_taken: bool = False


@dataclass
class CheckedProgram:
    program: A.Program
    structs: dict[str, StructType]
    funcs: dict[str, FuncInfo]
    max_bits: int
    uses_comparison: bool
    ptr_arith: bool
    diagnostics: list[Diagnostic] = field(default_factory=list)


def is_private_ptr(t: Type | None) -> bool:
    return isinstance(t, PtrType) and points_to_private(t.target)


def is_public_ptr(t: Type | None) -> bool:
    return isinstance(t, PtrType) and not points_to_private(t.target)


def decay(t: Type | None) -> Type | None:
    if isinstance(t, ArrayType):
        return PtrType(t.elem)
    return t


def same_type(a: Type | None, b: Type | None) -> bool:
    a, b = decay(a), decay(b)
    if isinstance(a, PtrType) and isinstance(b, PtrType):
        ta, tb = a.target, b.target
        if isinstance(ta, IntType) and isinstance(tb, IntType):
            return ta.private == tb.private and ta.bits == tb.bits
        if isinstance(ta, FuncType) and isinstance(tb, FuncType):
            return True
        if isinstance(ta, PtrType) and isinstance(tb, PtrType):
            return same_type(ta, tb)
        if isinstance(ta, VoidType) or isinstance(tb, VoidType):
            return True
        return ta == tb
    return a == b


class Checker:
    def __init__(self, prog: A.Program, ptr_arith: bool = False):
        self.prog = prog
        self.ptr_arith = ptr_arith
        self.diags: list[Diagnostic] = []
        self.structs: dict[str, StructType] = {}
        self.funcs: dict[str, FuncInfo] = {}
        self.scopes: list[dict[str, Sym]] = [{}]
        self.max_bits = 1
        self.uses_comparison = False
        # private-condition context: list of (kind, scope level at entry)
        self.ctx: list[tuple[str, int]] = []
        self.cur_func: FuncInfo | None = None
        self.deferred_calls: list[tuple[A.Call, str, str]] = []

    # -- diagnostics --------------------------------------------------------
    def err(self, rule: str, node: A.Node, msg: str) -> None:
        self.diags.append(Diagnostic(rule, node.line, node.col, msg))

    def in_private(self) -> str | None:
        """'private' if under a private condition, 'dynamic' if only under a
        condition whose status is decided at run time, else None."""
        kinds = {k for k, _ in self.ctx}
        if "private" in kinds:
            return "private"
        if "dynamic" in kinds:
            return "dynamic"
        return None

    def side_effect(self, rule: str, node: A.Node, msg: str) -> None:
        if self.cur_func is not None:
            self.cur_func.side_effects = True
        ctx = self.in_private()
        if ctx == "private":
            self.err(rule, node, msg)
        # under a dynamic condition the interpreter guards at run time

    # -- scopes ---------------------------------------------------------------
    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()

    def declare(self, sym: Sym, node: A.Node) -> None:
        sym.level = len(self.scopes) - 1
        sym.is_global = sym.level == 0
        if sym.name in self.scopes[-1]:
            self.err("name", node, f"redeclaration of {sym.name!r}")
        self.scopes[-1][sym.name] = sym

    def lookup(self, name: str) -> Sym | None:
        for s in reversed(self.scopes):
            if name in s:
                return s[name]
        return None

    # -- types ------------------------------------------------------------------
    def resolve(self, spec: A.TypeSpec, depth: int, node: A.Node,
                fn_params: list[A.Param] | None = None) -> Type:
        if spec.base == "int":
            bits = spec.bits or DEFAULT_BITS
            if bits < 1 or bits > 64:
                self.err("type", spec, f"unsupported integer width {bits}")
            t: Type = IntType(bits, spec.qual != "public")
            if spec.qual != "public":
                self.max_bits = max(self.max_bits, bits)
        elif spec.base == "void":
            t = VoidType(spec.qual == "private")
        else:
            st = self.structs.get(spec.struct_name)
            if st is None:
                st = StructType(spec.struct_name)
                self.structs[spec.struct_name] = st
            t = st
            if spec.qual == "private" and st.defined and not all_fields_private(st):
                self.err("d", spec, f"struct {st.name} has public fields and cannot be private")
        if fn_params is not None:
            t = FuncType("fn", True)
            depth = max(depth, 1)
        for _ in range(depth):
            t = PtrType(t)
        return t

    # -- program ------------------------------------------------------------------
    def check(self) -> CheckedProgram:
        # structs and function signatures first so order of definition is free
        for item in self.prog.items:
            if isinstance(item, A.StructDef):
                self.struct_def(item)
        for item in self.prog.items:
            if isinstance(item, A.FuncDef):
                self.func_sig(item)
        for item in self.prog.items:
            if isinstance(item, A.DeclStmt):
                self.decl_stmt(item)
            elif isinstance(item, A.FuncDef):
                self.func_body(item)
        self.propagate_side_effects()
        if "main" not in self.funcs:
            self.err("name", self.prog, "program has no main function")
        return CheckedProgram(self.prog, self.structs, self.funcs, self.max_bits,
                              self.uses_comparison, self.ptr_arith, self.diags)

    def struct_def(self, sd: A.StructDef) -> None:
        st = self.structs.get(sd.name)
        if st is None:
            st = StructType(sd.name)
            self.structs[sd.name] = st
        if st.defined:
            self.err("name", sd, f"struct {sd.name} defined twice")
        fields = []
        for ds in sd.fields:
            for d in ds.decls:
                t = self.resolve(ds.spec, d.ptr_depth, d, d.fn_params)
                if d.array_len is not None:
                    if not isinstance(d.array_len, A.Num):
                        self.err("type", d, "struct array fields need a constant length")
                        n = 1
                    else:
                        n = d.array_len.value
                    t = ArrayType(t, n)
                fields.append((d.name, t))
        st.fields = fields
        st.defined = True
        for ds in sd.fields:
            if ds.spec.qual == "private" and ds.spec.base == "struct":
                inner = self.structs.get(ds.spec.struct_name)
                if inner is not None and not all_fields_private(inner):
                    self.err("d", ds.spec, f"struct {inner.name} has public fields and cannot be private")

    def func_sig(self, fd: A.FuncDef) -> None:
        ret = self.resolve(fd.ret, fd.ret_ptr, fd)
        params = [self.param_type(p) for p in fd.params]
        if fd.name in self.funcs or fd.name in BUILTINS:
            self.err("name", fd, f"function {fd.name!r} defined twice")
        self.funcs[fd.name] = FuncInfo(fd, ret, params)
        self.declare(Sym(fd.name, FuncType(fd.name), "func", node=fd), fd)

    def param_type(self, p: A.Param) -> Type:
        t = self.resolve(p.spec, p.ptr_depth, p)
        if p.is_array:
            t = PtrType(t)
        return t

    def func_body(self, fd: A.FuncDef) -> None:
        info = self.funcs[fd.name]
        self.cur_func = info
        self.push()
        for p, t in zip(fd.params, info.params):
            if p.name:
                self.declare(Sym(p.name, t, node=p), p)
        self.block_items(fd.body.body)
        self.pop()
        self.cur_func = None
        annotate_liveness(fd)

    def propagate_side_effects(self) -> None:
        changed = True
        while changed:
            changed = False
            for f in self.funcs.values():
                if not f.side_effects and any(
                        self.funcs[c].side_effects for c in f.calls if c in self.funcs):
                    f.side_effects = True
                    changed = True
        for f in self.funcs.values():
            if f.address_taken and f.side_effects:
                self.err("e", f.node, f"function {f.node.name!r} is used through a pointer "
                                      "but has public side effects")
        for call, name, ctx in self.deferred_calls:
            if ctx == "private" and self.funcs[name].side_effects:
                self.err("e", call, f"call to {name!r}, which has public side effects, "
                                    "under a private condition")

    # -- statements --------------------------------------------------------------
    def block_items(self, stmts: list[A.Stmt]) -> None:
        for s in stmts:
            self.stmt(s)

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self.push()
            self.block_items(s.body)
            self.pop()
        elif isinstance(s, A.Batch):
            self.push()
            self.block_items(s.body)
            self.pop()
        elif isinstance(s, A.DeclStmt):
            self.decl_stmt(s)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.If):
            self.expr(s.test)
            self.cond_value(s.test)
            kind = {"private": "private", "dynamic": "dynamic"}.get(s.test.sec)
            if kind:
                self.ctx.append((kind, len(self.scopes)))
            for branch in (s.then, s.other):
                if branch is not None:
                    self.push()
                    self.stmt(branch)
                    self.pop()
            if kind:
                self.ctx.pop()
        elif isinstance(s, (A.For, A.While)):
            self.push()
            if isinstance(s, A.For) and s.init is not None:
                if isinstance(s.init, A.DeclStmt):
                    self.decl_stmt(s.init)
                else:
                    self.expr(s.init.expr)
            if s.test is not None:
                self.expr(s.test)
                if s.test.sec != "public":
                    self.err("f", s.test, "loop condition must be public")
            if isinstance(s, A.For) and s.step is not None:
                self.expr(s.step)
            self.stmt(s.body)
            self.pop()
        elif isinstance(s, A.Return):
            if self.in_private() == "private":
                self.err("e", s, "return under a private condition")
            if s.value is not None:
                self.expr(s.value)
                if self.cur_func is not None:
                    ret = self.cur_func.ret
                    if isinstance(ret, IntType) and not ret.private and s.value.sec == "private":
                        self.err("type", s, "private value returned from a public function")
        else:
            self.err("type", s, f"unsupported statement {type(s).__name__}")

    def cond_value(self, e: A.Expr) -> None:
        t = decay(e.ty)
        if isinstance(t, PtrType):
            e.sec = "dynamic" if is_private_ptr(t) else "public"
        elif not isinstance(t, IntType):
            self.err("type", e, "condition is not a scalar")

    def decl_stmt(self, ds: A.DeclStmt) -> None:
        for d in ds.decls:
            t = self.resolve(ds.spec, d.ptr_depth, d, d.fn_params)
            if isinstance(t, VoidType):
                self.err("type", d, f"variable {d.name!r} declared void")
            if isinstance(t, StructType) and not t.defined:
                self.err("type", d, f"struct {t.name} is not defined")
            if d.array_len is not None:
                self.expr(d.array_len)
                if d.array_len.sec != "public":
                    self.err("type", d.array_len, "array length must be public")
                t = ArrayType(t, -1)
            if d.init is not None:
                self.expr(d.init)
            sym = Sym(d.name, t, node=d)
            self.declare(sym, d)
            if d.init is not None:
                target = A.Name(d.name, line=d.line, col=d.col)
                target.ty, target.sec = t, "public"
                self.assign_check(target, d.init, d, is_init=True)

    # -- expressions ---------------------------------------------------------------
    def expr(self, e: A.Expr) -> None:
        m = getattr(self, "e_" + type(e).__name__)
        m(e)

    def e_Num(self, e: A.Num) -> None:
        e.ty, e.sec = IntType(DEFAULT_BITS, False), "public"

    def e_Name(self, e: A.Name) -> None:
        sym = self.lookup(e.id)
        if sym is None:
            if e.id in BUILTINS:
                e.ty = FuncType(e.id)
                return
            self.err("name", e, f"undeclared identifier {e.id!r}")
            e.ty = IntType(DEFAULT_BITS, False)
            return
        e.sym = sym
        e.ty = sym.ty
        e.sec = "private" if isinstance(sym.ty, IntType) and sym.ty.private else "public"
        if sym.kind == "func":
            e.sec = "public"

    def e_Unary(self, e: A.Unary) -> None:
        self.expr(e.operand)
        o = e.operand
        if e.op == "*":
            t = decay(o.ty)
            if not isinstance(t, PtrType):
                self.err("type", e, "dereference of a non-pointer")
                e.ty = IntType(DEFAULT_BITS, False)
                return
            e.ty = t.target
            e.sec = "private" if isinstance(t.target, IntType) and t.target.private else "public"
        elif e.op == "&":
            if isinstance(o, A.Name) and isinstance(o.ty, FuncType) and o.id in self.funcs:
                self.funcs[o.id].address_taken = True
                e.ty = PtrType(FuncType(o.id))
            elif not self.is_lvalue(o):
                self.err("type", e, "address of a non-lvalue")
                e.ty = PtrType(IntType())
            else:
                e.ty = PtrType(o.ty if not isinstance(o.ty, ArrayType) else o.ty.elem)
            e.sec = "public"
        elif e.op in ("++pre", "--pre"):
            self.incdec(e, o)
        else:
            if isinstance(decay(o.ty), PtrType) and e.op == "!":
                self.cond_value(o)
                e.ty, e.sec = IntType(1, o.sec == "private"), o.sec
                return
            if not isinstance(o.ty, IntType):
                self.err("type", e, f"operator {e.op} needs an integer")
            if e.op == "~" and o.sec == "private":
                self.err("type", e, "bitwise complement of private data is not supported")
            e.ty = o.ty if isinstance(o.ty, IntType) else IntType()
            e.sec = o.sec
            if e.op == "!":
                e.ty = IntType(1, o.sec == "private")

    def e_Postfix(self, e: A.Postfix) -> None:
        self.expr(e.operand)
        self.incdec(e, e.operand)

    def incdec(self, e: A.Expr, o: A.Expr) -> None:
        if isinstance(o.ty, PtrType):
            if not self.ptr_arith:
                self.err("g", e, "pointer arithmetic is disabled")
        elif not isinstance(o.ty, IntType):
            self.err("type", e, "increment of a non-integer")
        self.write_target(o, e)
        e.ty, e.sec = o.ty, o.sec

    def binop_type(self, e: A.Binary) -> None:
        l, r = e.left, e.right
        lt, rt = decay(l.ty), decay(r.ty)
        op = e.op
        if isinstance(lt, PtrType) or isinstance(rt, PtrType):
            if op in ("==", "!="):
                if isinstance(lt, PtrType) and isinstance(rt, PtrType) and not same_type(lt, rt):
                    self.err("type", e, "comparison of incompatible pointers")
                e.ty = IntType(1, False)
                priv = is_private_ptr(lt) or is_private_ptr(rt)
                e.sec = "dynamic" if priv else "public"
                return
            if op in ("+", "-"):
                if not self.ptr_arith:
                    self.err("g", e, "pointer arithmetic is disabled")
                if isinstance(lt, PtrType) and isinstance(rt, PtrType):
                    if op == "+":
                        self.err("type", e, "addition of two pointers")
                    e.ty = IntType(DEFAULT_BITS, is_private_ptr(lt) or is_private_ptr(rt))
                    e.sec = "private" if e.ty.private else "public"
                    e.ptr_diff = True
                    return
                if isinstance(rt, PtrType) and op == "-":
                    self.err("type", e, "integer minus pointer")
                other = r if isinstance(lt, PtrType) else l
                if other.sec != "public":
                    self.err("type", e, "pointer offset must be public")
                e.ty = lt if isinstance(lt, PtrType) else rt
                e.sec = "public"
                return
            if op in ("&&", "||"):
                for side in (l, r):
                    self.cond_value(side)
                e.ty = IntType(1, False)
                e.sec = self.join(l.sec, r.sec)
                return
            self.err("type", e, f"operator {op} is not defined on pointers")
            e.ty = IntType()
            return
        if not isinstance(lt, IntType) or not isinstance(rt, IntType):
            self.err("type", e, f"operator {op} needs integer operands")
            e.ty = IntType()
            return
        sec = self.join(l.sec, r.sec)
        e.sec = sec
        # public operands (literals included) do not widen private data
        widths = [t.bits for t, side in ((lt, l), (rt, r)) if side.sec == "private"]
        bits = max(widths) if sec == "private" and widths else max(lt.bits, rt.bits)
        if op in ("<", ">", "<=", ">=", "==", "!="):
            if sec == "private":
                self.uses_comparison = True
                e.cmp_bits = max(bits, 2)
            e.ty = IntType(1, sec == "private")
        elif op in ("&&", "||"):
            e.ty = IntType(1, sec == "private")
        elif op in ("+", "-", "*"):
            e.ty = IntType(bits, sec == "private")
        else:
            if sec == "private":
                self.err("type", e, f"operator {op} on private data is not supported")
            e.ty = IntType(bits, sec == "private")

    @staticmethod
    def join(a: str, b: str) -> str:
        if "private" in (a, b):
            return "private"
        if "dynamic" in (a, b):
            return "dynamic"
        return "public"

    def e_Binary(self, e: A.Binary) -> None:
        self.expr(e.left)
        self.expr(e.right)
        self.binop_type(e)

    def e_Cond(self, e: A.Cond) -> None:
        self.expr(e.test)
        self.expr(e.then)
        self.expr(e.other)
        self.cond_value(e.test)
        e.ty = e.then.ty
        e.sec = self.join(e.test.sec, self.join(e.then.sec, e.other.sec))
        if e.test.sec == "dynamic":
            e.sec = "private" if isinstance(e.ty, IntType) and e.ty.private else e.sec
        if isinstance(e.ty, IntType) and e.sec == "private":
            e.ty = IntType(e.ty.bits, True)

    def e_Index(self, e: A.Index) -> None:
        self.expr(e.base)
        self.expr(e.index)
        bt = e.base.ty
        if isinstance(bt, ArrayType):
            elem = bt.elem
        elif isinstance(bt, PtrType):
            elem = bt.target
        else:
            self.err("type", e, "subscript of a non-array")
            e.ty = IntType()
            return
        if not isinstance(e.index.ty, IntType):
            self.err("type", e.index, "array index must be an integer")
        if e.index.sec == "private":
            if not points_to_private(elem):
                self.err("type", e, "private index into public data")
            self.uses_comparison = True
            e.private_index = True
        e.ty = elem
        e.sec = "private" if isinstance(elem, IntType) and elem.private else "public"

    def e_Field(self, e: A.Field) -> None:
        self.expr(e.base)
        bt = e.base.ty
        st = None
        if e.arrow:
            if isinstance(decay(bt), PtrType) and isinstance(decay(bt).target, StructType):
                st = decay(bt).target
        elif isinstance(bt, StructType):
            st = bt
        if st is None:
            self.err("type", e, f"member access {'->' if e.arrow else '.'}{e.name} on a non-struct")
            e.ty = IntType()
            return
        try:
            off, ft = st.field(e.name)
        except KeyError:
            self.err("type", e, f"struct {st.name} has no field {e.name!r}")
            e.ty = IntType()
            return
        e.offset = off
        e.ty = ft
        e.sec = "private" if isinstance(ft, IntType) and ft.private else "public"

    def e_Cast(self, e: A.Cast) -> None:
        self.expr(e.operand)
        t = self.resolve(e.spec, e.ptr_depth, e)
        ot = decay(e.operand.ty)
        if isinstance(t, PtrType):
            if not isinstance(ot, PtrType):
                if not (isinstance(e.operand, A.Num) and e.operand.value == 0):
                    self.err("type", e, "cast of an integer to a pointer")
            elif not (isinstance(t.target, IntType) and isinstance(ot.target, IntType)):
                if not same_type(t, ot):
                    self.err("type", e, "only integer pointer casts are supported")
            elif t.target.private != ot.target.private:
                self.err("a", e, "cast between pointers to public and private data")
            else:
                self.uses_comparison = True  # casts are read through bit decomposition
            e.sec = "public"
        elif isinstance(t, IntType):
            if not isinstance(ot, IntType):
                self.err("type", e, "cast of a non-integer to an integer")
            if not t.private and e.operand.sec == "private":
                self.err("type", e, "cast of private data to public")
            e.sec = "private" if t.private and e.operand.sec != "public" else e.operand.sec
            if t.private and e.operand.sec == "public":
                e.sec = "public"
        else:
            self.err("type", e, "unsupported cast")
        e.ty = t

    def e_PMalloc(self, e: A.PMalloc) -> None:
        self.expr(e.count)
        if self.in_private():
            self.side_effect("c", e, "pmalloc under a private condition")
        elif self.cur_func is not None:
            self.cur_func.side_effects = True
        if e.count.sec != "public":
            self.err("type", e.count, "pmalloc count must be public")
        t = self.resolve(e.spec, e.ptr_depth, e)
        if isinstance(t, StructType) and not t.defined:
            self.err("type", e, f"struct {t.name} is not defined")
        e.elem = t
        e.ty = PtrType(t)
        e.sec = "public"

    def e_Assign(self, e: A.Assign) -> None:
        self.expr(e.target)
        self.expr(e.value)
        if not self.is_lvalue(e.target):
            self.err("type", e, "assignment to a non-lvalue")
        if e.op != "=":
            op = e.op[:-1]
            fake = A.Binary(op, e.target, e.value, line=e.line, col=e.col)
            self.binop_type(fake)
            if isinstance(fake.ty, PtrType):
                e.ty = fake.ty
            self.write_target(e.target, e)
            if isinstance(e.target.ty, IntType) and not e.target.ty.private and fake.sec == "private":
                self.err("type", e, "private value assigned to public data")
            e.ty, e.sec = e.target.ty, e.target.sec
            return
        self.assign_check(e.target, e.value, e)
        self.write_target(e.target, e)
        e.ty, e.sec = e.target.ty, e.target.sec

    def assign_check(self, target: A.Expr, value: A.Expr, node: A.Node, is_init: bool = False) -> None:
        tt = target.ty
        vt = decay(value.ty)
        if isinstance(tt, ArrayType):
            self.err("type", node, "assignment to an array")
            return
        if isinstance(tt, IntType):
            if not isinstance(vt, IntType):
                self.err("type", node, "non-integer assigned to an integer")
            elif not tt.private and value.sec != "public":
                self.err("type", node, "private value assigned to public data")
            return
        if isinstance(tt, PtrType):
            if isinstance(vt, IntType):
                if not (isinstance(value, A.Num) and value.value == 0):
                    self.err("type", node, "integer assigned to a pointer")
                return
            if isinstance(vt, FuncType) and isinstance(tt.target, FuncType):
                if isinstance(value, A.Name) and value.id in self.funcs:
                    self.funcs[value.id].address_taken = True
                    value.ty = PtrType(FuncType(value.id))
                return
            if not isinstance(vt, PtrType):
                self.err("type", node, "non-pointer assigned to a pointer")
                return
            if is_private_ptr(tt) and is_public_ptr(vt):
                self.err("a", node, "address of public data assigned to a pointer to private data")
                return
            if not same_type(tt, vt):
                self.err("type", node, f"incompatible pointer assignment ({vt} to {tt})")
            return
        if isinstance(tt, StructType):
            if tt != vt:
                self.err("type", node, "incompatible struct assignment")
            return
        self.err("type", node, f"cannot assign to {tt}")

    def write_target(self, target: A.Expr, node: A.Node) -> None:
        """Record side effects of writing through target."""
        t = target.ty
        root = target
        while True:
            if isinstance(root, A.Index) and isinstance(root.base.ty, ArrayType):
                root = root.base
            elif isinstance(root, A.Field) and not root.arrow:
                root = root.base
            else:
                break
        public_data = not (isinstance(t, IntType) and t.private) and not is_private_ptr(t) \
            and not (isinstance(t, StructType) and all_fields_private(t))
        if not public_data:
            return
        rule = "b" if is_public_ptr(t) else "e"
        if isinstance(root, A.Name) and hasattr(root, "sym"):
            sym = root.sym
            if self.cur_func is not None and sym.is_global:
                self.cur_func.side_effects = True
            if self.in_private() and not self._declared_inside_ctx(sym):
                self.side_effect(rule, node, f"update of public {root.id!r} under a private condition")
            return
        # write to public data through a pointer
        if self.cur_func is not None:
            self.cur_func.side_effects = True
        if self.in_private():
            self.side_effect(rule, node, "write to public data under a private condition")

    def _declared_inside_ctx(self, sym: Sym) -> bool:
        if not self.ctx:
            return True
        # innermost-relevant context: any private/dynamic frame
        entry = min(level for _, level in self.ctx)
        return sym.level >= entry and not sym.is_global

    def is_lvalue(self, e: A.Expr) -> bool:
        if isinstance(e, A.Name):
            return hasattr(e, "sym") and e.sym.kind == "var"
        if isinstance(e, (A.Index, A.Field)):
            return True
        return isinstance(e, A.Unary) and e.op == "*"

    def e_Call(self, e: A.Call) -> None:
        f = e.func
        if isinstance(f, A.Name) and f.id in BUILTINS and self.lookup(f.id) is None:
            for a in e.args:
                self.expr(a)
            self.builtin(e, f.id)
            return
        if isinstance(f, A.Name) and f.id in self.funcs and \
                (self.lookup(f.id) is None or self.lookup(f.id).kind == "func"):
            info = self.funcs[f.id]
            for a in e.args:
                self.expr(a)
            self.check_args(e, info.params, f.id)
            if self.cur_func is not None:
                self.cur_func.calls.add(f.id)
            ctx = self.in_private()
            if ctx:
                self.deferred_calls.append((e, f.id, ctx))
            e.callee = f.id
            e.ty = info.ret
            e.sec = "private" if isinstance(info.ret, IntType) and info.ret.private else "public"
            return
        # call through a function pointer
        self.expr(f)
        for a in e.args:
            self.expr(a)
        t = decay(f.ty)
        if isinstance(t, PtrType) and isinstance(t.target, FuncType):
            e.callee = None
            e.ty = VoidType()
            e.sec = "public"
            return
        self.err("type", e, "call of a non-function")
        e.ty = IntType()

    def check_args(self, e: A.Call, params: list[Type], name: str) -> None:
        if len(params) != len(e.args):
            self.err("type", e, f"{name} expects {len(params)} arguments, got {len(e.args)}")
            return
        for p, a in zip(params, e.args):
            fake = A.Name("<param>", line=a.line, col=a.col)
            fake.ty = p
            self.assign_check(fake, a, a)

    def builtin(self, e: A.Call, name: str) -> None:
        e.callee = name
        e.ty = VoidType()
        if name == "pfree":
            if len(e.args) != 1 or not isinstance(decay(e.args[0].ty), PtrType):
                self.err("type", e, "pfree takes one pointer")
            if self.in_private():
                self.side_effect("c", e, "pfree under a private condition")
            elif self.cur_func is not None:
                self.cur_func.side_effects = True
            return
        if name == "stats_mark":
            return
        # smcinput / smcoutput
        if len(e.args) not in (2, 3):
            self.err("type", e, f"{name} takes (variable, party[, count])")
            return
        if not self.is_lvalue(e.args[0]):
            self.err("type", e, f"{name} needs a variable")
        for extra in e.args[1:]:
            if extra.sec != "public":
                self.err("type", extra, f"{name} party and count must be public")
        if self.in_private():
            self.side_effect("e", e, f"{name} under a private condition")
        elif self.cur_func is not None:
            self.cur_func.side_effects = True


# -- liveness ------------------------------------------------------------------

def _names(node, out: set[str]) -> set[str]:
    if isinstance(node, A.Name):
        out.add(node.id)
    elif isinstance(node, A.Node):
        for v in vars(node).values():
            _names(v, out)
    elif isinstance(node, list):
        for v in node:
            _names(v, out)
    return out


def _addr_taken(node, out: set[str]) -> set[str]:
    if isinstance(node, A.Unary) and node.op == "&":
        base = node.operand
        while isinstance(base, (A.Index, A.Field)):
            base = base.base
        if isinstance(base, A.Name):
            out.add(base.id)
    if isinstance(node, A.Node):
        for v in vars(node).values():
            _addr_taken(v, out)
    elif isinstance(node, list):
        for v in node:
            _addr_taken(v, out)
    return out


def _exposed(stmt, written: set[str], exposed: set[str]) -> set[str]:
    """Update exposed (names read before written) and return names
    definitely written after stmt."""
    if stmt is None:
        return written
    if isinstance(stmt, (A.Block, A.Batch)):
        w = set(written)
        for s in stmt.body:
            w = _exposed(s, w, exposed)
        return w
    if isinstance(stmt, A.ExprStmt):
        e = stmt.expr
        if isinstance(e, A.Assign) and e.op == "=" and isinstance(e.target, A.Name):
            exposed |= _names(e.value, set()) - written
            return written | {e.target.id}
        exposed |= _names(e, set()) - written
        return written
    if isinstance(stmt, A.DeclStmt):
        w = set(written)
        for d in stmt.decls:
            exposed |= _names(d.array_len, set()) - w
            exposed |= _names(d.init, set()) - w
            w.add(d.name)
        return w
    if isinstance(stmt, A.If):
        exposed |= _names(stmt.test, set()) - written
        wt = _exposed(stmt.then, set(written), exposed)
        we = _exposed(stmt.other, set(written), exposed) if stmt.other else set(written)
        return wt & we
    exposed |= _names(stmt, set()) - written
    return written


def _local_names(fd: A.FuncDef) -> set[str]:
    out: set[str] = set()

    def walk(n):
        if isinstance(n, A.DeclStmt):
            for d in n.decls:
                if d.array_len is None and d.fn_params is None:
                    out.add(d.name)
        if isinstance(n, A.Node):
            for v in vars(n).values():
                walk(v)
        elif isinstance(n, list):
            for v in n:
                walk(v)
    walk(fd.body)
    return out


def _count_refs(node, name: str, skip=None) -> int:
    if node is skip:
        return 0
    if isinstance(node, A.Name):
        return int(node.id == name)
    n = 0
    if isinstance(node, A.Declarator) and node.name == name and node.init is not None:
        n += 1
    if isinstance(node, A.Node):
        for v in vars(node).values():
            n += _count_refs(v, name, skip)
    elif isinstance(node, list):
        for v in node:
            n += _count_refs(v, name, skip)
    return n


def annotate_liveness(fd: A.FuncDef) -> None:
    """Mark, for each If, the function locals that are dead afterwards.

    A local is dead after an If when nothing outside the If refers to it
    (apart from a plain declaration) and the If writes it before any read.
    """
    locals_ = _local_names(fd) - _addr_taken(fd.body, set())
    locals_ -= {p.name for p in fd.params}

    def visit(n):
        if isinstance(n, A.If):
            exposed: set[str] = set()
            _exposed(n, set(), exposed)
            n.dead_after = frozenset(
                v for v in locals_
                if v not in exposed and _count_refs(n, v) > 0
                and _count_refs(fd.body, v, skip=n) == 0)
        if isinstance(n, A.Node):
            for v in vars(n).values():
                visit(v)
        elif isinstance(n, list):
            for v in n:
                visit(v)
    visit(fd.body)


def check(prog: A.Program, ptr_arith: bool = False) -> CheckedProgram:
    c = Checker(prog, ptr_arith)
    res = c.check()
    if res.diagnostics:
        raise CheckError(res.diagnostics)
    return res


def check_source(src: str, ptr_arith: bool = False) -> CheckedProgram:
    from .parser import parse
    return check(parse(src), ptr_arith)
