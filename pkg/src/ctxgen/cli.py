"""Command line front end.

Exit codes: 0 success (possibly with skipped disjuncts), 1 no disjunct
could be compiled, 2 the input was rejected, 3 I/O trouble.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .codegen import runtime_header
from .driver_ir import render_ir
from .normalize import MAX_DISJUNCTS
from .oracle import check_soundness
from .pipeline import CompileOutput, compile_spec
from .spec_ast import SpecError
from .target import DEFAULT_CONFIG, GENERIC


def _build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ctxgen",
        description="Compile a C function precondition into a driver "
        "that builds a satisfying calling context.",
    )
    ap.add_argument("input", help="annotated C file ('-' for stdin)")
    ap.add_argument("-o", "--output", metavar="FILE",
                    help="write the driver here instead of stdout")
    ap.add_argument("--style", choices=["framac", "generic"], default="framac",
                    help="nondeterminism primitives to target "
                    "(default: framac)")
    ap.add_argument("--int-width", type=int, metavar="BYTES",
                    help="width of int (default 4)")
    ap.add_argument("--long-width", type=int, metavar="BYTES",
                    help="width of long (default 4)")
    ap.add_argument("--ptr-width", type=int, metavar="BYTES",
                    help="width of pointers (default 4)")
    ap.add_argument("--prefix", default=None, metavar="STR",
                    help="prefix for generated names (default cfp_)")
    ap.add_argument("--max-disjuncts", type=int, default=MAX_DISJUNCTS,
                    metavar="N", help="disjunction normalization budget "
                    f"(default {MAX_DISJUNCTS})")
    ap.add_argument("--dump-sigma", action="store_true",
                    help="print the inferred constraint map per disjunct")
    ap.add_argument("--dump-depgraph", action="store_true",
                    help="print the dependency graph per disjunct as DOT")
    ap.add_argument("--dump-derivation", action="store_true",
                    help="print the rule applications per disjunct")
    ap.add_argument("--emit-ir", action="store_true",
                    help="print the driver statement tree instead of C")
    ap.add_argument("--check", type=int, default=0, metavar="N",
                    help="interpret the driver N times and verify every "
                    "execution satisfies its disjunct")
    ap.add_argument("--seed", type=int, default=0, metavar="S",
                    help="seed for --check (default 0)")
    return ap


def _diag(fname: str, severity: str, err: SpecError) -> str:
    if err.loc is not None:
        text = str(err).split(": ", 1)[1]
        return f"{fname}:{err.loc.line}:{err.loc.col}: {severity}: {text}"
    return f"{fname}: {severity}: {err}"


def _dumps(args: argparse.Namespace, out: CompileOutput) -> list[str]:
    chunks: list[str] = []
    for r in out.reports:
        if not r.ok:
            continue
        if args.dump_sigma:
            chunks.append(f"-- sigma, disjunct {r.index}")
            chunks.append(r.result.sigma.render())
        if args.dump_depgraph:
            chunks.append(f"-- dependencies, disjunct {r.index}")
            chunks.append(r.result.graph.render_dot())
        if args.dump_derivation:
            chunks.append(f"-- derivation, disjunct {r.index}")
            for step in r.result.derivation:
                edges = ", ".join(f"{a} -> {b}" for a, b in step.edges)
                line = f"{step.rule}: {step.subject}"
                if edges:
                    line += f" [{edges}]"
                chunks.append(line)
    return chunks


def main(argv: list[str] | None = None) -> int:
    args = _build_argparser().parse_args(argv)
    fname = args.input

    try:
        if fname == "-":
            source = sys.stdin.read()
            fname = "<stdin>"
        else:
            source = Path(fname).read_text()
    except OSError as e:
        print(f"{fname}: error: {e}", file=sys.stderr)
        return 3

    cfg = DEFAULT_CONFIG.with_overrides(
        int_width=args.int_width,
        long_width=args.long_width,
        ptr_width=args.ptr_width,
        prefix=args.prefix,
        style=args.style,
    )

    try:
        out = compile_spec(source, cfg, max_disjuncts=args.max_disjuncts)
    except SpecError as e:
        print(_diag(fname, "error", e), file=sys.stderr)
        return 2

    for r in out.failed_disjuncts:
        severity = "warning" if out.ok else "error"
        print(f"{fname}: {severity}: {r.describe()}", file=sys.stderr)
    if not out.ok:
        print(f"{fname}: error: no disjunct is realizable", file=sys.stderr)
        return 1

    if args.check > 0:
        ok_clauses = [r.clause for r in out.ok_disjuncts]
        report = check_soundness(out.typed, out.ir, ok_clauses, cfg,
                                 n=args.check, seed=args.seed)
        if report.violations:
            for v in report.violations[:20]:
                print(f"{fname}: error: {v.render()}", file=sys.stderr)
            print(
                f"{fname}: error: {len(report.violations)} of "
                f"{report.paths} executions violate the precondition",
                file=sys.stderr,
            )
            return 1
        print(
            f"{fname}: checked {report.paths} executions, all satisfy "
            "the precondition",
            file=sys.stderr,
        )

    pieces: list[str] = []
    if args.emit_ir:
        pieces.append(render_ir(out.ir))
    else:
        pieces.append(out.driver_text)
    pieces.extend(_dumps(args, out))
    text = "\n".join(pieces)
    if not text.endswith("\n"):
        text += "\n"

    if args.output:
        try:
            Path(args.output).write_text(text)
            if cfg.style == GENERIC and not args.emit_ir:
                header = Path(args.output).parent / "ctxgen_runtime.h"
                header.write_text(runtime_header(cfg))
        except OSError as e:
            print(f"{args.output}: error: {e}", file=sys.stderr)
            return 3
    else:
        sys.stdout.write(text)
        if cfg.style == GENERIC and not args.emit_ir:
            print(
                "note: pass --output to also write ctxgen_runtime.h",
                file=sys.stderr,
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
