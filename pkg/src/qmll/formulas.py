"""Formula syntax: atoms, multiplicatives, box/diamond modalities, contexts.

Concrete grammar (whitespace insignificant):

    F ::= ident | "~" ident | "(" F "%" F ")" | "(" F "*" F ")" | "[]" F | "<>" F

`%` is par, `*` is tensor, `[]` the box modality, `<>` the diamond modality.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import tokens as tk
from .errors import FormulaSyntaxError, QmllError


@dataclass(frozen=True)
class Atom:
    name: str
    positive: bool = True


@dataclass(frozen=True)
class Par:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Tensor:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Box:
    body: "Formula"


@dataclass(frozen=True)
class Diamond:
    body: "Formula"


Formula = Atom | Par | Tensor | Box | Diamond


def dual(f: Formula) -> Formula:
    """De Morgan dual; an involution. Box and diamond are dual to each other."""
    match f:
        case Atom(name, pos):
            return Atom(name, not pos)
        case Par(l, r):
            return Tensor(dual(l), dual(r))
        case Tensor(l, r):
            return Par(dual(l), dual(r))
        case Box(b):
            return Diamond(dual(b))
        case Diamond(b):
            return Box(dual(b))
    raise QmllError(f"not a formula: {f!r}")


def size(f: Formula) -> int:
    match f:
        case Atom():
            return 1
        case Par(l, r) | Tensor(l, r):
            return 1 + size(l) + size(r)
        case Box(b) | Diamond(b):
            return 1 + size(b)
    raise QmllError(f"not a formula: {f!r}")


def is_modal(f: Formula) -> bool:
    """True iff the outermost connective is box or diamond."""
    return isinstance(f, (Box, Diamond))


def modal_chain(f: Formula) -> int:
    """Length of the leading run of modal operators, boxes and diamonds mixed."""
    n = 0
    while isinstance(f, (Box, Diamond)):
        n += 1
        f = f.body
    return n


def leading_run(f: Formula) -> tuple[str, int, Formula]:
    """Maximal same-connective modal prefix: ('box'|'dia'|'', count, core)."""
    if isinstance(f, Box):
        n, core = 0, f
        while isinstance(core, Box):
            n += 1
            core = core.body
        return "box", n, core
    if isinstance(f, Diamond):
        n, core = 0, f
        while isinstance(core, Diamond):
            n += 1
            core = core.body
        return "dia", n, core
    return "", 0, f


def wrap_modal(kind: str, n: int, f: Formula) -> Formula:
    ctor = Box if kind == "box" else Diamond
    for _ in range(n):
        f = ctor(f)
    return f


def atoms(f: Formula) -> list[Atom]:
    """Atom occurrences in left-to-right leaf order."""
    match f:
        case Atom():
            return [f]
        case Par(l, r) | Tensor(l, r):
            return atoms(l) + atoms(r)
        case Box(b) | Diamond(b):
            return atoms(b)
    raise QmllError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# printing / parsing


def print_formula(f: Formula) -> str:
    match f:
        case Atom(name, pos):
            return name if pos else "~" + name
        case Par(l, r):
            return f"({print_formula(l)} % {print_formula(r)})"
        case Tensor(l, r):
            return f"({print_formula(l)} * {print_formula(r)})"
        case Box(b):
            return f"[] {print_formula(b)}"
        case Diamond(b):
            return f"<> {print_formula(b)}"
    raise QmllError(f"not a formula: {f!r}")


def parse_formula_stream(ts: tk.TokenStream) -> Formula:
    t = ts.next()
    if t.kind == tk.IDENT:
        return Atom(t.text, True)
    if t.kind == tk.TILDE:
        name = ts.expect(tk.IDENT, FormulaSyntaxError)
        return Atom(name.text, False)
    if t.kind == tk.BOX:
        return Box(parse_formula_stream(ts))
    if t.kind == tk.DIAMOND:
        return Diamond(parse_formula_stream(ts))
    if t.kind == tk.LP:
        left = parse_formula_stream(ts)
        op = ts.next()
        if op.kind not in (tk.PERCENT, tk.STAR):
            raise FormulaSyntaxError(f"expected '%' or '*', found {op.text!r}", op.pos)
        right = parse_formula_stream(ts)
        ts.expect(tk.RP, FormulaSyntaxError)
        return Par(left, right) if op.kind == tk.PERCENT else Tensor(left, right)
    raise FormulaSyntaxError(f"unexpected {t.text or 'end of input'!r} in formula", t.pos)


def parse_formula(text: str) -> Formula:
    try:
        ts = tk.TokenStream(tk.tokenize(text))
    except FormulaSyntaxError:
        raise
    except Exception as e:  # tokenizer raises SyntaxLocationError
        raise FormulaSyntaxError(str(e), getattr(e, "pos", 0)) from e
    f = parse_formula_stream(ts)
    end = ts.peek()
    if end.kind != tk.EOF:
        raise FormulaSyntaxError(f"trailing input {end.text!r}", end.pos)
    return f


# ---------------------------------------------------------------------------
# contexts: a formula with a single hole sitting at an atom occurrence.
#
# Represented as the path from the formula root down to the hole. Each step
# records the connective passed through and, for binary connectives, the
# subformula on the other side.

PAR_L, PAR_R, TENS_L, TENS_R, BOX_S, DIA_S = "parL", "parR", "tensL", "tensR", "box", "dia"

Step = tuple[str, Formula | None]


@dataclass(frozen=True)
class Context:
    steps: tuple[Step, ...]

    def __len__(self) -> int:
        return len(self.steps)


HOLE = Context(())


def depth(c: Context) -> int:
    """Number of modal operators the hole is nested inside."""
    return sum(1 for k, _ in c.steps if k in (BOX_S, DIA_S))


def subst(c: Context, filler: Formula) -> Formula:
    """Plug `filler` into the hole."""
    f = filler
    for kind, other in reversed(c.steps):
        if kind == PAR_L:
            f = Par(f, other)
        elif kind == PAR_R:
            f = Par(other, f)
        elif kind == TENS_L:
            f = Tensor(f, other)
        elif kind == TENS_R:
            f = Tensor(other, f)
        elif kind == BOX_S:
            f = Box(f)
        else:
            f = Diamond(f)
    return f


def dual_context(c: Context) -> Context:
    out = []
    for kind, other in c.steps:
        od = dual(other) if other is not None else None
        out.append({PAR_L: (TENS_L, od), PAR_R: (TENS_R, od), TENS_L: (PAR_L, od),
                    TENS_R: (PAR_R, od), BOX_S: (DIA_S, None), DIA_S: (BOX_S, None)}[kind])
    return Context(tuple(out))


def hole_atom(c: Context, f: Formula) -> Atom:
    """The atom sitting at the hole, reading `f` along the context path."""
    cur = f
    for kind, _ in c.steps:
        match kind, cur:
            case ("parL", Par(l, _)) | ("tensL", Tensor(l, _)):
                cur = l
            case ("parR", Par(_, r)) | ("tensR", Tensor(_, r)):
                cur = r
            case ("box", Box(b)) | ("dia", Diamond(b)):
                cur = b
            case _:
                raise QmllError("context does not match formula")
    if not isinstance(cur, Atom):
        raise QmllError("context hole is not at an atom")
    return cur


def polarity_for(c: Context, f: Formula) -> bool:
    """True if `c` is a positive context for `f` (hole holds a positive atom)."""
    return hole_atom(c, f).positive


def contexts_for(f: Formula) -> list[tuple[Context, bool]]:
    """One (context, polarity) per atom occurrence of `f`, in leaf order."""
    out: list[tuple[Context, bool]] = []

    def walk(g: Formula, steps: tuple[Step, ...]):
        match g:
            case Atom(_, pos):
                out.append((Context(steps), pos))
            case Par(l, r):
                walk(l, steps + ((PAR_L, r),))
                walk(r, steps + ((PAR_R, l),))
            case Tensor(l, r):
                walk(l, steps + ((TENS_L, r),))
                walk(r, steps + ((TENS_R, l),))
            case Box(b):
                walk(b, steps + ((BOX_S, None),))
            case Diamond(b):
                walk(b, steps + ((DIA_S, None),))

    walk(f, ())
    return out


def print_context(c: Context) -> str:
    def render(i: int) -> str:
        if i == len(c.steps):
            return "[.]"
        kind, other = c.steps[i]
        inner = render(i + 1)
        if kind == PAR_L:
            return f"({inner} % {print_formula(other)})"
        if kind == PAR_R:
            return f"({print_formula(other)} % {inner})"
        if kind == TENS_L:
            return f"({inner} * {print_formula(other)})"
        if kind == TENS_R:
            return f"({print_formula(other)} * {inner})"
        if kind == BOX_S:
            return f"[] {inner}"
        return f"<> {inner}"

    return render(0)
