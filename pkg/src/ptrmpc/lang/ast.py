"""Syntax tree for the source language.

Nodes carry their source position; the checker adds ``ty`` (a type
descriptor) and ``sec`` ("public", "private", or "dynamic" for pointer
predicates whose status is only known at run time) to expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Node:
    line: int = field(default=0, kw_only=True, compare=False)
    col: int = field(default=0, kw_only=True, compare=False)


# -- types as written -----------------------------------------------------

@dataclass
class TypeSpec(Node):
    base: str  # "int", "void", "struct"
    qual: Optional[str] = None  # "public" / "private" / None
    bits: Optional[int] = None
    struct_name: Optional[str] = None


@dataclass
class Declarator(Node):
    name: str
    ptr_depth: int = 0
    array_len: Optional["Expr"] = None
    init: Optional["Expr"] = None
    fn_params: Optional[list["Param"]] = None  # function-pointer declarator


@dataclass
class Param(Node):
    spec: TypeSpec
    ptr_depth: int = 0
    name: Optional[str] = None
    is_array: bool = False


# -- expressions ----------------------------------------------------------

@dataclass
class Expr(Node):
    def __post_init__(self) -> None:
        self.ty = None
        self.sec = "public"


@dataclass
class Num(Expr):
    value: int


@dataclass
class Name(Expr):
    id: str


@dataclass
class Unary(Expr):
    op: str  # - ! ~ * & ++pre --pre
    operand: Expr


@dataclass
class Postfix(Expr):
    op: str  # ++ --
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Assign(Expr):
    op: str  # = += -= *= ...
    target: Expr
    value: Expr


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Field(Expr):
    base: Expr
    name: str
    arrow: bool


@dataclass
class Call(Expr):
    func: Expr
    args: list[Expr]


@dataclass
class Cast(Expr):
    spec: TypeSpec
    ptr_depth: int
    operand: Expr


@dataclass
class PMalloc(Expr):
    count: Expr
    spec: TypeSpec
    ptr_depth: int = 0


@dataclass
class Cond(Expr):
    test: Expr
    then: Expr
    other: Expr


# -- statements -----------------------------------------------------------

@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Stmt):
    body: list[Stmt]


@dataclass
class Batch(Stmt):
    body: list[Stmt]


@dataclass
class If(Stmt):
    test: Expr
    then: Stmt
    other: Optional[Stmt] = None

    def __post_init__(self) -> None:
        self.dead_after: frozenset[str] = frozenset()


@dataclass
class For(Stmt):
    init: Optional[Node]
    test: Optional[Expr]
    step: Optional[Expr]
    body: Stmt


@dataclass
class While(Stmt):
    test: Expr
    body: Stmt


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class DeclStmt(Stmt):
    spec: TypeSpec
    decls: list[Declarator]


# -- top level ------------------------------------------------------------

@dataclass
class StructDef(Node):
    name: str
    fields: list[DeclStmt]


@dataclass
class FuncDef(Node):
    ret: TypeSpec
    ret_ptr: int
    name: str
    params: list[Param]
    body: Block


@dataclass
class Program(Node):
    items: list[Node]
    source: str = ""
