"""End-to-end compilation: source text to driver text.

Each DNF disjunct is simplified independently; disjuncts that fail keep
their typed failure and the rest are compiled into the driver.  The
whole compilation fails only when no disjunct survives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .codegen import build_driver, emit_driver, plan_disjunct
from .driver_ir import DriverIR
from .inference import (
    FailKind,
    InferenceFailure,
    InferenceResult,
    simplify_clause,
)
from .normalize import MAX_DISJUNCTS, to_dnf
from .parser import parse_source
from .spec_ast import ClauseLits, render_literal
from .target import DEFAULT_CONFIG, TargetConfig
from .typecheck import TypedSpec, typecheck


@dataclass
class DisjunctReport:
    """Outcome of one disjunct: exactly one of result/failure is set."""

    index: int  # 1-based position in the DNF
    clause: ClauseLits
    result: Optional[InferenceResult] = None
    failure: Optional[InferenceFailure] = None

    @property
    def ok(self) -> bool:
        return self.result is not None

    def describe(self) -> str:
        lits = " && ".join(render_literal(l) for l in self.clause)
        if self.ok:
            return f"disjunct {self.index}: ok ({lits})"
        return f"disjunct {self.index}: {self.failure}"


@dataclass
class CompileOutput:
    typed: TypedSpec
    clauses: list[ClauseLits]
    reports: list[DisjunctReport]
    ir: Optional[DriverIR]
    driver_text: Optional[str]

    @property
    def ok_disjuncts(self) -> list[DisjunctReport]:
        return [r for r in self.reports if r.ok]

    @property
    def failed_disjuncts(self) -> list[DisjunctReport]:
        return [r for r in self.reports if not r.ok]

    @property
    def ok(self) -> bool:
        return self.ir is not None


def compile_spec(source: str, cfg: TargetConfig = DEFAULT_CONFIG,
                 max_disjuncts: int = MAX_DISJUNCTS) -> CompileOutput:
    """Compile annotated source into a driver.

    Raises SpecError (and subclasses) for malformed input; per-disjunct
    inference failures are reported, not raised.
    """
    spec = parse_source(source)
    typed = typecheck(spec, cfg)
    clauses = to_dnf(typed.precondition, max_disjuncts)
    if not clauses:
        fail = InferenceFailure(FailKind.INCONSISTENT, "false",
                                "the precondition simplifies to false")
        report = DisjunctReport(1, (), failure=fail)
        return CompileOutput(typed, clauses, [report], None, None)
    reports: list[DisjunctReport] = []
    for i, clause in enumerate(clauses, 1):
        try:
            result = simplify_clause(typed, clause)
            plan_disjunct(typed, result, cfg)
            reports.append(DisjunctReport(i, clause, result=result))
        except InferenceFailure as e:
            reports.append(DisjunctReport(i, clause, failure=e))
    ok = [(r.index, r.result) for r in reports if r.ok]
    if not ok:
        return CompileOutput(typed, clauses, reports, None, None)
    ir = build_driver(typed, ok, cfg)
    text = emit_driver(spec, ir, cfg)
    return CompileOutput(typed, clauses, reports, ir, text)
