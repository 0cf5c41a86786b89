"""ctxgen: compile C function preconditions into calling-context drivers.

The pipeline parses an annotated C fragment (one function prototype,
optional typedefs and globals, requires clauses in a comment block),
infers a constraint map and dependency graph per disjunct, and emits a
standalone C driver whose every execution satisfies the precondition.
"""

from .inference import (
    FailKind,
    InferenceFailure,
    InferenceResult,
    simplify_clause,
)
from .normalize import MAX_DISJUNCTS, to_dnf
from .oracle import check_coverage, check_soundness
from .parser import parse_source
from .pipeline import CompileOutput, DisjunctReport, compile_spec
from .spec_ast import SpecError
from .target import DEFAULT_CONFIG, FRAMAC, GENERIC, TargetConfig
from .typecheck import typecheck

__version__ = "0.1.0"

__all__ = [
    "CompileOutput",
    "DEFAULT_CONFIG",
    "DisjunctReport",
    "FailKind",
    "InferenceFailure",
    "InferenceResult",
    "MAX_DISJUNCTS",
    "SpecError",
    "FRAMAC",
    "GENERIC",
    "TargetConfig",
    "check_coverage",
    "check_soundness",
    "compile_spec",
    "parse_source",
    "simplify_clause",
    "to_dnf",
    "typecheck",
    "__version__",
]
