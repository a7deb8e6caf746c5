"""Entry points that run a program in mpc or plaintext mode."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..fieldcore import DEFAULT_KAPPA, select_field_params
from ..harness import PartyConfig, RoundStats, Runtime
from .checker import CheckedProgram, check_source
from .interp import MpcInterpreter
from .oracle import PlainInterpreter


@dataclass
class RunResult:
    outputs: dict[str, list[int]]
    stats: RoundStats | None = None
    marks: list[tuple[str, dict]] = field(default_factory=list)
    branch_bodies: int = 0
    field_bits: int = 0


def _checked(program: str | CheckedProgram, ptr_arith: bool) -> CheckedProgram:
    if isinstance(program, CheckedProgram):
        return program
    return check_source(program, ptr_arith=ptr_arith)


def run_mpc(program: str | CheckedProgram, inputs: dict[str, list[int]] | None = None,
            config: PartyConfig | None = None, defines: dict[str, int] | None = None,
            ptr_arith: bool = False, debug: bool = False) -> RunResult:
    cp = _checked(program, ptr_arith)
    config = config or PartyConfig()
    params = select_field_params(max(cp.max_bits, 2), cp.uses_comparison, config.kappa)
    with Runtime(params, config) as rt:
        rt.debug = debug
        interp = MpcInterpreter(cp, rt, inputs, defines)
        outputs = interp.run()
    return RunResult(outputs, rt.stats, interp.marks, interp.branch_counter, params.field_bitlen)


def run_plain(program: str | CheckedProgram, inputs: dict[str, list[int]] | None = None,
              defines: dict[str, int] | None = None, ptr_arith: bool = False,
              kappa: int = DEFAULT_KAPPA) -> RunResult:
    cp = _checked(program, ptr_arith)
    params = select_field_params(max(cp.max_bits, 2), cp.uses_comparison, kappa)
    interp = PlainInterpreter(cp, params.prime, inputs, defines)
    return RunResult(interp.run(), None, [], interp.branch_counter, params.field_bitlen)
