"""Benchmark programs and scaling drivers."""

from .suite import (CASES, CSV_COLUMNS, BenchCase, BenchRow, doubling_ratios, load_program,
                    loglog_exponent, phase_series, program_names, run_case, run_cases, write_csv)

__all__ = [
    "CASES", "CSV_COLUMNS", "BenchCase", "BenchRow", "doubling_ratios", "load_program",
    "loglog_exponent", "phase_series", "program_names", "run_case", "run_cases", "write_csv",
]
