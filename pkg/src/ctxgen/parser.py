"""Parser for annotated C function declarations.

The accepted input is a small C subset: struct typedefs, global variable
declarations, and exactly one function declaration carrying an ACSL-like
``/*@ requires ... */`` annotation.  Comparison chains (16 <= n <= 32)
expand into conjunctions at parse time; everything else is kept faithful
so that pretty_print . parse_source is the identity up to layout.
"""

from __future__ import annotations

from dataclasses import dataclass

from .spec_ast import (
    ArithOp,
    ArrayType,
    Clause,
    CmpOp,
    CType,
    DefKind,
    GlobalDecl,
    IntType,
    Param,
    PtrType,
    RAnd,
    RBin,
    RCmp,
    RConst,
    RDefined,
    RField,
    RIdent,
    RIndex,
    RNot,
    ROr,
    RRange,
    RUnop,
    RExpr,
    RPred,
    SourceLoc,
    SpecError,
    SpecFile,
    StructField,
    StructType,
    Typedef,
    VoidType,
)

_DEF_KINDS = {
    "valid": DefKind.VALID,
    "valid_read": DefKind.VALID_READ,
    "initialized": DefKind.INITIALIZED,
}

_PUNCT2 = ("..", "->", "&&", "||", "==", "!=", "<=", ">=", "/*", "*/")
_PUNCT1 = "+-*/%()[]{};,.<>!=:&"

_BASE_WORDS = {"unsigned", "signed", "char", "short", "int", "long"}


@dataclass
class Token:
    kind: str  # ident, bsident, int, punct, annot_start, annot_end, eof
    text: str
    line: int
    col: int

    @property
    def loc(self) -> SourceLoc:
        return SourceLoc(self.line, self.col)


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    in_annot = False

    def bump(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c in " \t\r\n":
            bump(1)
            continue
        if c == "@":
            # annotation line leader; outside annotations '@' is invalid C
            if not in_annot:
                raise SpecError("stray '@' outside annotation", SourceLoc(line, col))
            bump(1)
            continue
        two = src[i : i + 2]
        if two == "//":
            while i < n and src[i] != "\n":
                bump(1)
            continue
        if two == "/*":
            if src[i : i + 3] == "/*@":
                toks.append(Token("annot_start", "/*@", line, col))
                bump(3)
                in_annot = True
                continue
            # plain comment, skip to */
            bump(2)
            while i < n and src[i : i + 2] != "*/":
                bump(1)
            if i >= n:
                raise SpecError("unterminated comment", SourceLoc(line, col))
            bump(2)
            continue
        if two == "*/":
            if not in_annot:
                raise SpecError("unmatched '*/'", SourceLoc(line, col))
            toks.append(Token("annot_end", "*/", line, col))
            bump(2)
            in_annot = False
            continue
        if c == "\\":
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i + 1 : j]
            if not word:
                raise SpecError("lone backslash", SourceLoc(line, col))
            toks.append(Token("bsident", word, line, col))
            bump(j - i)
            continue
        if c.isdigit():
            j = i
            if src[i : i + 2].lower() == "0x":
                j = i + 2
                while j < n and src[j] in "0123456789abcdefABCDEF":
                    j += 1
                text = src[i:j]
                toks.append(Token("int", str(int(text, 16)), line, col))
            else:
                while j < n and src[j].isdigit():
                    j += 1
                toks.append(Token("int", src[i:j], line, col))
            bump(j - i)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("ident", src[i:j], line, col))
            bump(j - i)
            continue
        if two in _PUNCT2:
            toks.append(Token("punct", two, line, col))
            bump(2)
            continue
        if c in _PUNCT1:
            toks.append(Token("punct", c, line, col))
            bump(1)
            continue
        raise SpecError(f"unexpected character {c!r}", SourceLoc(line, col))
    if in_annot:
        raise SpecError("unterminated annotation", SourceLoc(line, col))
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks: list[Token], known_types: set[str]):
        self.toks = toks
        self.pos = 0
        self.known_types = known_types

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def eat_punct(self, text: str) -> Token:
        t = self.peek()
        if not (t.kind == "punct" and t.text == text):
            raise SpecError(f"expected {text!r}, found {t.text!r}", t.loc)
        return self.next()

    def at_ident(self, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == "ident" and (text is None or t.text == text)

    def eat_ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise SpecError(f"expected identifier, found {t.text!r}", t.loc)
        return self.next()

    # -- declarations

    def starts_type(self) -> bool:
        t = self.peek()
        if t.kind != "ident":
            return False
        return (
            t.text in _BASE_WORDS
            or t.text == "const"
            or t.text == "size_t"
            or t.text in self.known_types
        )

    def parse_type_spec(self) -> CType:
        t = self.peek()
        const = False
        if self.at_ident("const"):
            self.next()
            const = True
        words: list[str] = []
        while self.at_ident() and self.peek().text in _BASE_WORDS:
            words.append(self.next().text)
        if words:
            # drop a trailing 'int' after short/long, normalize bare signs
            if len(words) > 1 and words[-1] == "int" and words[-2] in ("short", "long"):
                words = words[:-1]
            if words == ["signed"]:
                words = ["int"]
            if words == ["unsigned"]:
                words = ["unsigned", "int"]
            return IntType(" ".join(words), const=const)
        if self.at_ident("size_t"):
            self.next()
            return IntType("size_t", const=const)
        if self.at_ident() and self.peek().text in self.known_types:
            return StructType(self.next().text, const=const)
        raise SpecError(f"expected a type, found {t.text!r}", t.loc)

    def parse_declarator(self, base: CType, allow_unsized: bool = False):
        t = base
        while self.at_punct("*"):
            self.next()
            t = PtrType(t)
        name = self.eat_ident().text
        dims: list[int | None] = []
        while self.at_punct("["):
            self.next()
            if self.at_punct("]"):
                if not allow_unsized:
                    raise SpecError("array size required", self.peek().loc)
                dims.append(None)
            else:
                tok = self.peek()
                if tok.kind != "int":
                    raise SpecError("array size must be a constant", tok.loc)
                size = int(self.next().text)
                if size <= 0:
                    raise SpecError("array size must be positive", tok.loc)
                dims.append(size)
            self.eat_punct("]")
        for d in reversed(dims):
            t = ArrayType(t, d) if d is not None else PtrType(t)
        return name, t

    def parse_typedef(self) -> Typedef:
        self.eat_ident()  # typedef
        kw = self.eat_ident()
        if kw.text != "struct":
            raise SpecError("only struct typedefs are supported", kw.loc)
        self.eat_punct("{")
        fields: list[StructField] = []
        while not self.at_punct("}"):
            base = self.parse_type_spec()
            name, t = self.parse_declarator(base)
            fields.append(StructField(name, t))
            self.eat_punct(";")
        self.eat_punct("}")
        name = self.eat_ident().text
        self.eat_punct(";")
        self.known_types.add(name)
        return Typedef(name, tuple(fields))

    # -- predicates and expressions
    #
    # One precedence-climbing grammar covers both; operands are classified
    # when folded (a comparison of predicates, or '&&' of bare expressions,
    # is an error).

    def parse_pred(self):
        return self._or()

    def _require_pred(self, node, loc) -> RPred:
        if isinstance(node, RPred):
            return node
        raise SpecError("expected a predicate, found an expression", loc)

    def _require_expr(self, node, loc) -> RExpr:
        if isinstance(node, RExpr):
            return node
        raise SpecError("expected an expression, found a predicate", loc)

    def _or(self):
        loc = self.peek().loc
        first = self._and()
        if not self.at_punct("||"):
            return first
        items = [self._require_pred(first, loc)]
        while self.at_punct("||"):
            self.next()
            loc = self.peek().loc
            items.append(self._require_pred(self._and(), loc))
        return ROr(tuple(items), loc=loc)

    def _and(self):
        loc = self.peek().loc
        first = self._not()
        if not self.at_punct("&&"):
            return first
        items = [self._require_pred(first, loc)]
        while self.at_punct("&&"):
            self.next()
            loc = self.peek().loc
            items.append(self._require_pred(self._not(), loc))
        return RAnd(tuple(items), loc=loc)

    def _not(self):
        if self.at_punct("!"):
            loc = self.next().loc
            operand = self._require_pred(self._not(), loc)
            return RNot(operand, loc=loc)
        return self._cmp()

    _CMP_OPS = {
        "==": CmpOp.EQ,
        "!=": CmpOp.NE,
        "<=": CmpOp.LE,
        "<": CmpOp.LT,
        ">=": CmpOp.GE,
        ">": CmpOp.GT,
    }

    def _cmp(self):
        loc = self.peek().loc
        first = self._additive()
        t = self.peek()
        if not (t.kind == "punct" and t.text in self._CMP_OPS):
            return first
        left = self._require_expr(first, loc)
        cmps: list[RCmp] = []
        while self.peek().kind == "punct" and self.peek().text in self._CMP_OPS:
            op_tok = self.next()
            op = self._CMP_OPS[op_tok.text]
            rloc = self.peek().loc
            right = self._require_expr(self._additive(), rloc)
            cmps.append(RCmp(op, left, right, loc=op_tok.loc))
            left = right
        if len(cmps) == 1:
            return cmps[0]
        return RAnd(tuple(cmps), loc=cmps[0].loc)

    def _additive(self):
        loc = self.peek().loc
        node = self._multiplicative()
        while self.at_punct("+") or self.at_punct("-"):
            op = ArithOp.ADD if self.next().text == "+" else ArithOp.SUB
            left = self._require_expr(node, loc)
            rloc = self.peek().loc
            right = self._require_expr(self._multiplicative(), rloc)
            node = RBin(op, left, right, loc=loc)
        return node

    def _multiplicative(self):
        loc = self.peek().loc
        node = self._unary()
        ops = {"*": ArithOp.MUL, "/": ArithOp.DIV, "%": ArithOp.MOD}
        while self.peek().kind == "punct" and self.peek().text in ops:
            op = ops[self.next().text]
            left = self._require_expr(node, loc)
            rloc = self.peek().loc
            right = self._require_expr(self._unary(), rloc)
            node = RBin(op, left, right, loc=loc)
        return node

    def _unary(self):
        t = self.peek()
        if self.at_punct("-"):
            self.next()
            operand = self._require_expr(self._unary(), t.loc)
            if isinstance(operand, RConst):
                return RConst(-operand.value, loc=t.loc)
            return RUnop("-", operand, loc=t.loc)
        if self.at_punct("*"):
            self.next()
            operand = self._require_expr(self._unary(), t.loc)
            return RUnop("*", operand, loc=t.loc)
        return self._postfix()

    def _postfix(self):
        node = self._primary()
        while True:
            if self.at_punct("->") or self.at_punct("."):
                arrow = self.next().text == "->"
                name = self.eat_ident().text
                node = RField(self._require_expr(node, self.peek().loc), name, arrow)
            elif self.at_punct("["):
                loc = self.next().loc
                idx = self._require_expr(self._additive(), loc)
                self.eat_punct("]")
                node = RIndex(self._require_expr(node, loc), idx, loc=loc)
            else:
                return node

    def _primary(self):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return RConst(int(t.text), loc=t.loc)
        if t.kind == "bsident":
            self.next()
            if t.text == "null":
                return RConst(0, loc=t.loc)
            if t.text not in _DEF_KINDS:
                raise SpecError(f"unsupported annotation construct \\{t.text}", t.loc)
            self.eat_punct("(")
            loc = self.peek().loc
            arg = self._require_expr(self._additive(), loc)
            self.eat_punct(")")
            return RDefined(_DEF_KINDS[t.text], arg, loc=t.loc)
        if t.kind == "ident":
            self.next()
            return RIdent(t.text, loc=t.loc)
        if self.at_punct("("):
            self.next()
            inner = self.parse_pred()
            if self.at_punct(".."):
                self.next()
                lo = self._require_expr(inner, t.loc)
                hloc = self.peek().loc
                hi = self._require_expr(self._additive(), hloc)
                self.eat_punct(")")
                return RRange(lo, hi, loc=t.loc)
            self.eat_punct(")")
            return inner
        raise SpecError(f"unexpected token {t.text!r}", t.loc)

    # -- annotation + function

    def parse_annotation(self) -> list[Clause]:
        self.next()  # annot_start
        clauses: list[Clause] = []
        seen: set[str] = set()
        while not self.peek().kind == "annot_end":
            kw = self.eat_ident()
            if kw.text != "requires":
                raise SpecError(f"unsupported clause kind {kw.text!r}", kw.loc)
            label = None
            if (
                self.at_ident()
                and self.peek(1).kind == "punct"
                and self.peek(1).text == ":"
            ):
                label = self.next().text
                self.next()
                if label in seen:
                    raise SpecError(f"duplicate clause label {label!r}", kw.loc)
                seen.add(label)
            loc = self.peek().loc
            pred = self._require_pred(self.parse_pred(), loc)
            self.eat_punct(";")
            clauses.append(Clause(label, pred))
        self.next()  # annot_end
        if not clauses:
            raise SpecError("annotation without requires clauses", self.peek().loc)
        return clauses

    def parse_function(self):
        if self.at_ident("void"):
            self.next()
            base: CType = VoidType()
        else:
            base = self.parse_type_spec()
        ret = base
        while self.at_punct("*"):
            self.next()
            ret = PtrType(ret)
        name = self.eat_ident().text
        self.eat_punct("(")
        params: list[Param] = []
        if self.at_ident("void") and self.peek(1).text == ")":
            self.next()
        elif not self.at_punct(")"):
            while True:
                pbase = self.parse_type_spec()
                pname, ptype = self.parse_declarator(pbase, allow_unsized=True)
                params.append(Param(pname, ptype))
                if self.at_punct(","):
                    self.next()
                    continue
                break
        self.eat_punct(")")
        self.eat_punct(";")
        return ret, name, tuple(params)


def parse_source(src: str) -> SpecFile:
    """Parse one annotated declaration file into a SpecFile.

    :raises SpecError: on syntax errors and unsupported constructs.
    """
    toks = tokenize(src)
    parser = _Parser(toks, known_types=set())
    typedefs: list[Typedef] = []
    globals_: list[GlobalDecl] = []
    clauses: list[Clause] | None = None
    while True:
        t = parser.peek()
        if t.kind == "eof":
            raise SpecError("no annotated function declaration found", t.loc)
        if t.kind == "annot_start":
            clauses = parser.parse_annotation()
            ret, name, params = parser.parse_function()
            if parser.peek().kind != "eof":
                extra = parser.peek()
                raise SpecError("unexpected input after function declaration", extra.loc)
            return SpecFile(
                tuple(typedefs), tuple(globals_), ret, name, params, tuple(clauses)
            )
        if parser.at_ident("typedef"):
            typedefs.append(parser.parse_typedef())
            continue
        if parser.starts_type():
            base = parser.parse_type_spec()
            gname, gtype = parser.parse_declarator(base)
            parser.eat_punct(";")
            globals_.append(GlobalDecl(gname, gtype))
            continue
        raise SpecError(f"unexpected token {t.text!r}", t.loc)


# ---------------------------------------------------------------------------
# Pretty printer


def _print_expr(e: RExpr, prec: int = 0) -> str:
    if isinstance(e, RConst):
        return str(e.value) if e.value >= 0 else f"(-{-e.value})" if prec > 0 else f"-{-e.value}"
    if isinstance(e, RIdent):
        return e.name
    if isinstance(e, RUnop):
        inner = _print_expr(e.operand, 6)
        return f"{e.op}{inner}"
    if isinstance(e, RField):
        sep = "->" if e.arrow else "."
        return f"{_print_expr(e.base, 7)}{sep}{e.name}"
    if isinstance(e, RIndex):
        return f"{_print_expr(e.base, 7)}[{_print_expr(e.index)}]"
    if isinstance(e, RRange):
        return f"({_print_expr(e.lo)} .. {_print_expr(e.hi)})"
    if isinstance(e, RBin):
        levels = {
            ArithOp.ADD: 1,
            ArithOp.SUB: 1,
            ArithOp.MUL: 2,
            ArithOp.DIV: 2,
            ArithOp.MOD: 2,
        }
        p = levels[e.op]
        rp = p + 1 if e.op in (ArithOp.SUB, ArithOp.DIV, ArithOp.MOD) else p
        s = f"{_print_expr(e.left, p)} {e.op} {_print_expr(e.right, rp)}"
        return f"({s})" if p < prec else s
    raise AssertionError(e)


def _print_pred(p: RPred, prec: int = 0) -> str:
    if isinstance(p, RDefined):
        kind = {
            DefKind.VALID: "valid",
            DefKind.VALID_READ: "valid_read",
            DefKind.INITIALIZED: "initialized",
        }[p.kind]
        return f"\\{kind}({_print_expr(p.arg)})"
    if isinstance(p, RCmp):
        return f"{_print_expr(p.left, 1)} {p.op} {_print_expr(p.right, 1)}"
    if isinstance(p, RNot):
        return f"!({_print_pred(p.operand)})"
    if isinstance(p, RAnd):
        s = " && ".join(_print_pred(i, 2) for i in p.items)
        return f"({s})" if prec > 1 else s
    if isinstance(p, ROr):
        s = " || ".join(_print_pred(i, 1) for i in p.items)
        return f"({s})" if prec > 0 else s
    raise AssertionError(p)


def pretty_print(spec: SpecFile) -> str:
    """Render a SpecFile back to parseable source text."""
    from .spec_ast import render_decl

    out: list[str] = []
    for td in spec.typedefs:
        out.append("typedef struct {")
        for f in td.fields:
            out.append(f"  {render_decl(f.ctype, f.name)};")
        out.append(f"}} {td.name};")
        out.append("")
    for g in spec.globals:
        out.append(f"{render_decl(g.ctype, g.name)};")
    if spec.globals:
        out.append("")
    lines = []
    for i, cl in enumerate(spec.clauses):
        head = "/*@ " if i == 0 else "  @ "
        label = f"{cl.label}: " if cl.label else ""
        lines.append(f"{head}requires {label}{_print_pred(cl.pred)};")
    lines[-1] += " */"
    out.extend(lines)
    params = ", ".join(_param_decl(p) for p in spec.params) or "void"
    out.append(f"{_ret_decl(spec.ret_type)}{spec.name}({params});")
    return "\n".join(out) + "\n"


def _param_decl(p: Param) -> str:
    from .spec_ast import render_decl

    t = p.ctype
    prefix = ""
    base = t
    while isinstance(base, PtrType):
        base = base.pointee
    if isinstance(base, (IntType, StructType)) and base.const:
        prefix = "const "
    decl = render_decl(t, p.name)
    return prefix + decl


def _ret_decl(t: CType) -> str:
    s = ""
    while isinstance(t, PtrType):
        s = "*" + s
        t = t.pointee
    if isinstance(t, IntType):
        base = t.kind
    elif isinstance(t, VoidType):
        base = "void"
    else:
        base = t.name  # type: ignore[union-attr]
    return f"{base} {s}"
