"""Random arithmetic formulas for the parser benchmark.

Formulas use the grammar

    statement -> statement + term | term
    term      -> term * factor | factor
    factor    -> var | ( statement )

with variables written ``x0, x1, ...``.  Token codes match parser.pc and
arith.pc: a variable index is itself, then ``+`` -1, ``*`` -2, ``(`` -3,
``)`` -4.
"""

from __future__ import annotations

import random
import re

PLUS, TIMES, LPAREN, RPAREN = -1, -2, -3, -4

_TOKEN = re.compile(r"\s*(?:(x\d+)|([a-z])|(\S))")


class FormulaError(ValueError):
    pass


def random_formula(n_ops: int, n_vars: int, rng: random.Random, mul_fraction: float = 0.9) -> str:
    """Formula with exactly n_ops binary operators, about mul_fraction of them '*'."""
    n_mul = round(n_ops * mul_fraction)
    ops = ["*"] * n_mul + ["+"] * (n_ops - n_mul)
    rng.shuffle(ops)

    def build(lo: int, hi: int) -> tuple[str, str]:
        # ops[lo:hi] are the operators inside this subtree; returns (text, top op)
        if lo == hi:
            return f"x{rng.randrange(n_vars)}", ""
        k = rng.randrange(lo, hi)
        op = ops[k]
        left, lop = build(lo, k)
        right, rop = build(k + 1, hi)
        if op == "*":
            if lop == "+":
                left = f"({left})"
            if rop:
                right = f"({right})"  # keep the tree's shape under left association
        elif rop == "+":
            right = f"({right})"
        return f"{left}{op}{right}", op

    return build(0, n_ops)[0]


def tokenize(text: str, names: list[str] | None = None) -> list[int]:
    """Infix token codes; single letters map through ``names`` when given."""
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        pos = m.end()
        var, letter, sym = m.groups()
        if var is not None:
            out.append(int(var[1:]))
        elif letter is not None:
            if names is None or letter not in names:
                raise FormulaError(f"unknown variable {letter!r}")
            out.append(names.index(letter))
        else:
            code = {"+": PLUS, "*": TIMES, "(": LPAREN, ")": RPAREN}.get(sym)
            if code is None:
                raise FormulaError(f"unexpected character {sym!r}")
            out.append(code)
    validate(out)
    return out


def validate(tokens: list[int]) -> None:
    """Reject token streams the grammar cannot derive."""
    depth = 0
    expect_operand = True
    for t in tokens:
        if expect_operand:
            if t >= 0:
                expect_operand = False
            elif t == LPAREN:
                depth += 1
            else:
                raise FormulaError("operand expected")
        else:
            if t in (PLUS, TIMES):
                expect_operand = True
            elif t == RPAREN:
                depth -= 1
                if depth < 0:
                    raise FormulaError("unbalanced ')'")
            else:
                raise FormulaError("operator expected")
    if expect_operand:
        raise FormulaError("formula ends without an operand")
    if depth:
        raise FormulaError("unbalanced '('")


def to_postfix(tokens: list[int]) -> list[int]:
    """Shunting-yard conversion; '*' binds tighter than '+', both left-assoc."""
    validate(tokens)
    prec = {PLUS: 1, TIMES: 2}
    out: list[int] = []
    ops: list[int] = []
    for t in tokens:
        if t >= 0:
            out.append(t)
        elif t == LPAREN:
            ops.append(t)
        elif t == RPAREN:
            while ops[-1] != LPAREN:
                out.append(ops.pop())
            ops.pop()
        else:
            while ops and ops[-1] != LPAREN and prec[ops[-1]] >= prec[t]:
                out.append(ops.pop())
            ops.append(t)
    while ops:
        out.append(ops.pop())
    return out


def eval_postfix(postfix: list[int], values: list[int]) -> int:
    stack: list[int] = []
    for t in postfix:
        if t >= 0:
            stack.append(values[t])
        else:
            b, a = stack.pop(), stack.pop()
            stack.append(a + b if t == PLUS else a * b)
    return stack[0]


def count_ops(tokens: list[int]) -> tuple[int, int]:
    """(multiplications, additions)."""
    return tokens.count(TIMES), tokens.count(PLUS)
