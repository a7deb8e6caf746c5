"""Lexer and recursive-descent parser."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # num, id, kw, op, eof
    text: str
    line: int
    col: int


KEYWORDS = {"int", "void", "struct", "public", "private", "if", "else", "for", "while",
            "return", "pmalloc"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<lc>//[^\n]*)
  | (?P<bc>/\*.*?\*/)
  | (?P<num>0[xX][0-9a-fA-F]+|\d+)
  | (?P<id>[A-Za-z_]\w*)
  | (?P<op><<=|>>=|\+\+|--|->|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=|&=|\|=|\^=|[-+*/%<>=!~&|^?:;,.(){}\[\]])
""", re.VERBOSE | re.DOTALL)


def tokenize(src: str) -> list[Token]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "bc":
            nls = text.count("\n")
            if nls:
                line += nls
                line_start = pos + text.rfind("\n") + 1
        elif kind not in ("ws", "lc"):
            if kind == "id" and text in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, text, line, col))
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


_BINARY_PREC = [
    ("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="),
    ("<", ">", "<=", ">="), ("<<", ">>"), ("+", "-"), ("*", "/", "%"),
]
_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="}


class Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.struct_names: set[str] = set()

    # -- token helpers ---------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            got = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {got!r}", self.tok.line, self.tok.col)
        return t

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "id":
            raise ParseError(f"expected identifier, found {t.text or 'end of input'!r}", t.line, t.col)
        self.i += 1
        return t

    def pos(self, t: Token | None = None) -> dict:
        t = t or self.tok
        return {"line": t.line, "col": t.col}

    # -- types -------------------------------------------------------------
    def starts_type(self, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "kw" and t.text in ("int", "void", "struct", "public", "private")

    def type_spec(self) -> A.TypeSpec:
        start = self.tok
        qual = None
        if self.at("public") or self.at("private"):
            qual = self.tok.text
            self.i += 1
        if self.accept("int"):
            bits = None
            if self.at("<") and self.peek().kind == "num" and self.peek(2).text == ">":
                self.i += 1
                bits = int(self.tok.text, 0)
                self.i += 2
            return A.TypeSpec("int", qual, bits, **self.pos(start))
        if self.accept("void"):
            return A.TypeSpec("void", qual, **self.pos(start))
        if self.accept("struct"):
            name = self.ident().text
            return A.TypeSpec("struct", qual, struct_name=name, **self.pos(start))
        raise ParseError(f"expected a type, found {self.tok.text!r}", self.tok.line, self.tok.col)

    def stars(self) -> int:
        n = 0
        while self.accept("*"):
            n += 1
        return n

    def param_list(self) -> list[A.Param]:
        self.expect("(")
        params: list[A.Param] = []
        if self.accept(")"):
            return params
        if self.at("void") and self.peek().text == ")":
            self.i += 2
            return params
        while True:
            start = self.tok
            spec = self.type_spec()
            depth = self.stars()
            name = None
            if self.tok.kind == "id":
                name = self.ident().text
            is_array = False
            if self.accept("["):
                self.expect("]")
                is_array = True
            params.append(A.Param(spec, depth, name, is_array, **self.pos(start)))
            if not self.accept(","):
                break
        self.expect(")")
        return params

    def declarator(self) -> A.Declarator:
        start = self.tok
        depth = self.stars()
        if self.at("(") and self.peek().text == "*":
            # function pointer: (*name)(params)
            self.expect("(")
            self.expect("*")
            name = self.ident().text
            self.expect(")")
            params = self.param_list()
            d = A.Declarator(name, depth, fn_params=params, **self.pos(start))
        else:
            name = self.ident().text
            d = A.Declarator(name, depth, **self.pos(start))
            if self.accept("["):
                d.array_len = self.expr()
                self.expect("]")
        if self.accept("="):
            d.init = self.assignment()
        return d

    # -- top level ---------------------------------------------------------
    def program(self) -> A.Program:
        items: list[A.Node] = []
        while self.tok.kind != "eof":
            items.append(self.top_item())
        return A.Program(items, self.src, line=1, col=1)

    def top_item(self) -> A.Node:
        start = self.tok
        if self.at("struct") and self.peek(2).text == "{":
            self.i += 1
            name = self.ident().text
            self.struct_names.add(name)
            self.expect("{")
            fields = []
            while not self.accept("}"):
                fstart = self.tok
                spec = self.type_spec()
                decls = [self.declarator()]
                while self.accept(","):
                    decls.append(self.declarator())
                self.expect(";")
                fields.append(A.DeclStmt(spec, decls, **self.pos(fstart)))
            self.expect(";")
            return A.StructDef(name, fields, **self.pos(start))
        spec = self.type_spec()
        save = self.i
        depth = self.stars()
        if self.tok.kind == "id" and self.peek().text == "(":
            name = self.ident().text
            params = self.param_list()
            body = self.block()
            return A.FuncDef(spec, depth, name, params, body, **self.pos(start))
        self.i = save
        decls = [self.declarator()]
        while self.accept(","):
            decls.append(self.declarator())
        self.expect(";")
        return A.DeclStmt(spec, decls, **self.pos(start))

    # -- statements ----------------------------------------------------------
    def block(self) -> A.Block:
        start = self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise ParseError("unbalanced '{': missing '}'", start.line, start.col)
            body.append(self.statement())
        self.expect("}")
        return A.Block(body, **self.pos(start))

    def statement(self) -> A.Stmt:
        t = self.tok
        if self.at("{"):
            return self.block()
        if self.at("["):
            self.i += 1
            body = []
            while not self.accept("]"):
                if self.tok.kind == "eof":
                    raise ParseError("unbalanced '[': missing ']'", t.line, t.col)
                body.append(self.statement())
            return A.Batch(body, **self.pos(t))
        if self.accept("if"):
            self.expect("(")
            test = self.expr()
            self.expect(")")
            then = self.statement()
            other = self.statement() if self.accept("else") else None
            return A.If(test, then, other, **self.pos(t))
        if self.accept("for"):
            self.expect("(")
            init: A.Node | None = None
            if not self.at(";"):
                if self.starts_type():
                    init = self.decl_stmt(consume_semi=False)
                else:
                    init = A.ExprStmt(self.expr(), **self.pos(t))
            self.expect(";")
            test = None if self.at(";") else self.expr()
            self.expect(";")
            step = None if self.at(")") else self.expr()
            self.expect(")")
            return A.For(init, test, step, self.statement(), **self.pos(t))
        if self.accept("while"):
            self.expect("(")
            test = self.expr()
            self.expect(")")
            return A.While(test, self.statement(), **self.pos(t))
        if self.accept("return"):
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, **self.pos(t))
        if self.accept(";"):
            return A.Block([], **self.pos(t))
        if self.starts_type() and not (self.at("struct") and self.peek(2).text == "{"):
            return self.decl_stmt()
        e = self.expr()
        self.expect(";")
        return A.ExprStmt(e, **self.pos(t))

    def decl_stmt(self, consume_semi: bool = True) -> A.DeclStmt:
        start = self.tok
        spec = self.type_spec()
        decls = [self.declarator()]
        while self.accept(","):
            decls.append(self.declarator())
        if consume_semi:
            self.expect(";")
        return A.DeclStmt(spec, decls, **self.pos(start))

    # -- expressions ---------------------------------------------------------
    def expr(self) -> A.Expr:
        return self.assignment()

    def assignment(self) -> A.Expr:
        left = self.conditional()
        t = self.tok
        if t.kind == "op" and t.text in _ASSIGN_OPS:
            self.i += 1
            value = self.assignment()
            return A.Assign(t.text, left, value, **self.pos(t))
        return left

    def conditional(self) -> A.Expr:
        test = self.binary(0)
        t = self.tok
        if self.accept("?"):
            then = self.expr()
            self.expect(":")
            other = self.conditional()
            return A.Cond(test, then, other, **self.pos(t))
        return test

    def binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_PREC):
            return self.unary()
        left = self.binary(level + 1)
        ops = _BINARY_PREC[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.tok
            self.i += 1
            right = self.binary(level + 1)
            left = A.Binary(t.text, left, right, **self.pos(t))
        return left

    def unary(self) -> A.Expr:
        t = self.tok
        if t.kind == "op" and t.text in ("-", "!", "~", "*", "&", "+"):
            self.i += 1
            operand = self.unary()
            if t.text == "+":
                return operand
            return A.Unary(t.text, operand, **self.pos(t))
        if t.kind == "op" and t.text in ("++", "--"):
            self.i += 1
            return A.Unary(t.text + "pre", self.unary(), **self.pos(t))
        if self.at("(") and self.starts_type(1):
            self.i += 1
            spec = self.type_spec()
            depth = self.stars()
            self.expect(")")
            return A.Cast(spec, depth, self.unary(), **self.pos(t))
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while True:
            t = self.tok
            if self.accept("["):
                idx = self.expr()
                self.expect("]")
                e = A.Index(e, idx, **self.pos(t))
            elif self.accept("->"):
                e = A.Field(e, self.ident().text, True, **self.pos(t))
            elif self.accept("."):
                e = A.Field(e, self.ident().text, False, **self.pos(t))
            elif self.at("("):
                self.i += 1
                args = []
                if not self.at(")"):
                    args.append(self.assignment())
                    while self.accept(","):
                        args.append(self.assignment())
                self.expect(")")
                e = A.Call(e, args, **self.pos(t))
            elif t.kind == "op" and t.text in ("++", "--"):
                self.i += 1
                e = A.Postfix(t.text, e, **self.pos(t))
            else:
                return e

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return A.Num(int(t.text, 0), **self.pos(t))
        if t.kind == "id":
            self.i += 1
            return A.Name(t.text, **self.pos(t))
        if self.accept("pmalloc"):
            self.expect("(")
            count = self.assignment()
            self.expect(",")
            spec = self.type_spec()
            depth = self.stars()
            self.expect(")")
            return A.PMalloc(count, spec, depth, **self.pos(t))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.line, t.col)


def parse(src: str) -> A.Program:
    return Parser(src).program()
