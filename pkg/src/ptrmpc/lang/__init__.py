"""Mini C-like language with private data and pointers."""

from .checker import CheckedProgram, CheckError, check, check_source
from .interp import InputError, RuntimeAbort, format_outputs, parse_inputs
from .parser import ParseError, parse
from .runner import RunResult, run_mpc, run_plain

__all__ = [
    "CheckedProgram", "CheckError", "InputError", "ParseError", "RunResult", "RuntimeAbort",
    "check", "check_source", "format_outputs", "parse", "parse_inputs", "run_mpc", "run_plain",
]
