"""Computation over meadows: exact backends, terms and normal forms, PGA
instruction sequences, threads, and a compiler to straight-line programs."""

from .compile import (CompileReport, StraightLineProgram, compile_atom,
                      compile_binary, compile_term, compile_unary,
                      verify_equivalence)
from .meadow import (BackendMismatchError, MeadowError, MeadowValue,
                     ModularMeadow, RationalMeadow, SignedRationalMeadow,
                     UnsupportedOperationError, meadow_from_selector)
from .normalize import (signed_standard_form, smf_normalize, ssmf_normalize,
                        to_sum_of_quotients)
from .pga import InstrSeq, format_pga, parse_pga, second_canonical_form, unfold
from .poly import poly_to_monomials
from .term import Term, evaluate, format_term, parse_term, substitute
from .thread import (Assignment, Divergent, Terminated, apply, extract, project,
                     raise_thread, run, thread_to_term)

__all__ = [
    "CompileReport", "StraightLineProgram", "compile_atom", "compile_binary",
    "compile_term", "compile_unary", "verify_equivalence",
    "BackendMismatchError", "MeadowError", "MeadowValue", "ModularMeadow",
    "RationalMeadow", "SignedRationalMeadow", "UnsupportedOperationError",
    "meadow_from_selector", "signed_standard_form", "smf_normalize",
    "ssmf_normalize", "to_sum_of_quotients", "InstrSeq", "format_pga",
    "parse_pga", "second_canonical_form", "unfold", "poly_to_monomials",
    "Term", "evaluate", "format_term", "parse_term", "substitute",
    "Assignment", "Divergent", "Terminated", "apply", "extract", "project",
    "raise_thread", "run", "thread_to_term",
]
__version__ = "0.1.0"
