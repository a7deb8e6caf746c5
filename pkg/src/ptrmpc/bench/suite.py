"""Benchmark cases: committed programs, input generators and op-count metrics.

Every case runs in mpc mode and, unless disabled, in plaintext mode as well so
each row records whether the two outputs agree.  Phase costs come from the
``stats_mark`` calls inside the programs.
"""

from __future__ import annotations

import csv
import math
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, TextIO

from ..harness import PartyConfig
from ..lang import check_source, run_mpc, run_plain
from ..lang.checker import CheckedProgram
from .formula import random_formula, to_postfix, tokenize

PROGRAM_DIR = Path(__file__).parent / "programs"
CSV_COLUMNS = ("case", "size", "interactive_ops", "rounds", "bytes", "wall_ms")

Inputs = tuple[dict[str, list[int]], dict[str, int]]


def load_program(name: str, reference: bool = False) -> str:
    d = PROGRAM_DIR / "reference" if reference else PROGRAM_DIR
    return (d / f"{name}.pc").read_text()


def program_names(reference: bool = False) -> list[str]:
    d = PROGRAM_DIR / "reference" if reference else PROGRAM_DIR
    return sorted(p.stem for p in d.glob("*.pc"))


@dataclass
class BenchCase:
    name: str
    program: str
    make_inputs: Callable[[int, random.Random], Inputs]
    sizes: tuple[int, ...]
    phases: dict[str, tuple[int, int]] = field(default_factory=dict)  # metric -> (from mark, to mark)
    exponent: float | None = None  # expected growth of the main phase


@dataclass
class BenchRow:
    case: str
    size: int
    seed: int
    interactive_ops: int
    rounds: int
    bytes: int
    wall_ms: float
    phases: dict[str, dict[str, int]]
    outputs: dict[str, list[int]]
    oracle: dict[str, list[int]] | None = None

    @property
    def match(self) -> bool | None:
        return None if self.oracle is None else self.oracle == self.outputs


# -- input generators ----------------------------------------------------------

def _list_inputs(n: int, rng: random.Random) -> Inputs:
    # small range so the traversal value 10 shows up
    return {"array": [rng.randrange(0, 2 * n + 12) for _ in range(n)]}, {"count": n}


def _distinct_inputs(n: int, rng: random.Random) -> Inputs:
    return {"array": rng.sample(range(0, 4 * n + 12), n)}, {"count": n}


def _sort_inputs(n: int, rng: random.Random) -> Inputs:
    return {"A": [rng.randrange(-1000, 1000) for _ in range(n)]}, {"K": n}


def _array_inputs(n: int, rng: random.Random) -> Inputs:
    return {"input": [rng.randrange(0, 2 * n + 12) for _ in range(n)]}, {"count": n}


N_FORMULA_VARS = 8


def formula_for(n_ops: int, rng: random.Random) -> tuple[str, list[int]]:
    """A 90/10 mul/add formula with n_ops operators and its variable values."""
    text = random_formula(n_ops, N_FORMULA_VARS, rng)
    values = [rng.randrange(-3, 4) for _ in range(N_FORMULA_VARS)]
    return text, values


def _parser_inputs(n: int, rng: random.Random) -> Inputs:
    text, values = formula_for(n, rng)
    toks = tokenize(text)
    return {"tokens": toks, "vars": values}, {"ntok": len(toks), "nvar": N_FORMULA_VARS}


def _arith_inputs(n: int, rng: random.Random) -> Inputs:
    text, values = formula_for(n, rng)
    post = to_postfix(tokenize(text))
    return {"tokens": post, "vars": values}, {"ntok": len(post), "nvar": N_FORMULA_VARS}


STACK_POPS = 4


def _stack_inputs(n: int, rng: random.Random) -> Inputs:
    return ({"vals": [rng.randrange(1, 1000) for _ in range(n)],
             "pushc": [rng.randrange(2) for _ in range(n)],
             "popc": [rng.randrange(2) for _ in range(STACK_POPS)]},
            {"count": n, "npop": STACK_POPS})


_LIST_PHASES = {"build": (1, 2), "traversal": (2, 3)}

CASES: dict[str, BenchCase] = {c.name: c for c in [
    BenchCase("linked_list", "linked_list", _list_inputs, (32, 64, 128, 256, 512), _LIST_PHASES, 1.0),
    BenchCase("linked_list_opt", "linked_list_opt", _list_inputs, (32, 64, 128, 256, 512), _LIST_PHASES, 1.0),
    BenchCase("sorted_list_du", "sorted_list_du", _list_inputs, (16, 32, 64, 128, 256), _LIST_PHASES, 2.0),
    BenchCase("sorted_list_pu", "sorted_list_pu", _distinct_inputs, (4, 8, 16, 32),
              dict(_LIST_PHASES, head_removal=(3, 4)), None),
    BenchCase("mergesort_ptr", "mergesort_ptr", _sort_inputs, (16, 32, 64, 128, 256)),
    BenchCase("mergesort_noptr", "mergesort_noptr", _sort_inputs, (16, 32, 64, 128, 256)),
    BenchCase("sorted_array", "sorted_array", _array_inputs, (16, 32, 64, 128, 256), _LIST_PHASES, 2.0),
    BenchCase("parser", "parser", _parser_inputs, (64, 128, 256, 512, 1024), {"eval": (1, 2)}, 1.0),
    BenchCase("arith", "arith", _arith_inputs, (64, 128, 256, 512, 1024), {"eval": (1, 2)}, 1.0),
    BenchCase("stack_queue", "stack_queue", _stack_inputs, (32, 64, 128, 256, 512),
              {"push": (1, 2), "pop": (2, 3), "enqueue": (3, 4), "dequeue": (4, 5)}, 1.0),
]}

_CHECKED: dict[str, CheckedProgram] = {}


def checked_program(name: str) -> CheckedProgram:
    cp = _CHECKED.get(name)
    if cp is None:
        cp = _CHECKED[name] = check_source(load_program(name))
    return cp


def case_inputs(case: BenchCase, size: int, seed: int) -> Inputs:
    # string seeding is stable across processes, unlike hash()
    return case.make_inputs(size, random.Random(f"{case.name}:{size}:{seed}"))


def run_case(case: BenchCase | str, size: int, seed: int = 0, oracle: bool = True,
             config: PartyConfig | None = None) -> BenchRow:
    if isinstance(case, str):
        case = CASES[case]
    inputs, defines = case_inputs(case, size, seed)
    cp = checked_program(case.program)
    config = config or PartyConfig(seed=seed)
    t0 = time.perf_counter()
    res = run_mpc(cp, inputs, config, defines)
    wall = (time.perf_counter() - t0) * 1000.0
    marks = {label: snap for label, snap in res.marks}
    phases = {}
    for metric, (a, b) in case.phases.items():
        sa, sb = marks.get(str(a)), marks.get(str(b))
        if sa is None or sb is None:
            continue
        phases[metric] = {k: sb[k] - sa[k] for k in sb}
    st = res.stats
    row = BenchRow(case.name, size, seed, st.interactive_ops, st.rounds, sum(st.bytes_per_party),
                   round(wall, 3), phases, res.outputs)
    if oracle:
        row.oracle = run_plain(cp, inputs, defines).outputs
    return row


def run_cases(names: Iterable[str] | None = None, sizes: Iterable[int] | None = None,
              seed: int = 0, oracle: bool = True) -> list[BenchRow]:
    names = list(names) if names else list(CASES)
    unknown = [n for n in names if n not in CASES]
    if unknown:
        raise KeyError(f"unknown case(s): {', '.join(unknown)}")
    rows = []
    for name in names:
        case = CASES[name]
        for size in (list(sizes) if sizes else case.sizes):
            rows.append(run_case(case, size, seed, oracle))
    return rows


def write_csv(rows: Iterable[BenchRow], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.case, r.size, r.interactive_ops, r.rounds, r.bytes, f"{r.wall_ms:.3f}"])


# -- scaling ---------------------------------------------------------------------

def doubling_ratios(sizes: list[int], values: list[float]) -> list[float]:
    """values[i+1]/values[i] for consecutive sizes that double."""
    out = []
    for (s0, v0), (s1, v1) in zip(zip(sizes, values), zip(sizes[1:], values[1:])):
        if s1 != 2 * s0:
            raise ValueError("sizes must double")
        out.append(v1 / v0)
    return out


def loglog_exponent(sizes: list[int], values: list[float]) -> float:
    """Least-squares slope of log(value) against log(size)."""
    xs = [math.log(s) for s in sizes]
    ys = [math.log(v) for v in values]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = sum((x - mx) ** 2 for x in xs)
    return num / den


def phase_series(case: str, metric: str, sizes: Iterable[int], seed: int = 0,
                 key: str = "interactive_ops") -> tuple[list[int], list[int]]:
    sizes = list(sizes)
    vals = [run_case(case, s, seed, oracle=False).phases[metric][key] for s in sizes]
    return sizes, vals
