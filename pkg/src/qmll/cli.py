"""Command-line front end.

Exit codes: 0 success, 1 domain errors (check failures, precondition
violations), 2 usage and parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .circuits import circuit_from_json, circuit_to_json, encode, extract
from .cutelim import normalize, trace_lines
from .errors import CheckFailure, QmllError, SyntaxLocationError
from .formulas import (BOX_S, DIA_S, PAR_L, PAR_R, TENS_L, TENS_R, Atom, Box, Context,
                       Diamond, Par, Tensor, contexts_for, hole_atom, print_formula)
from .matrices import StateVector, basis_state, f17, zero_state
from .proofs import Proof, check, mll_axiom_link_matrix, parse_proof, print_proof, print_sequent
from .qiam import OccurrenceGraph, initial_state, run, semantics_relative


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _matrix_json(m: np.ndarray) -> str:
    rows = ",".join(
        "[" + ",".join(f"[{f17(z.real)},{f17(z.imag)}]" for z in row) + "]" for row in m)
    return f"[{rows}]"


def _resolve_entry(proof: Proof, context_arg: str | None, entry_arg: int | None):
    concl = proof.conclusion
    if context_arg is None or context_arg == "auto":
        candidates = []
        for k, f in enumerate(concl, start=1):
            if entry_arg is not None and k != entry_arg:
                continue
            for ctx, positive in contexts_for(f):
                if not positive:
                    candidates.append((k, ctx))
        if len(candidates) != 1:
            raise QmllError(
                f"--context auto needs exactly one negative context, found {len(candidates)}")
        return candidates[0]
    parts = context_arg.split(".")
    try:
        k = int(parts[0])
    except ValueError:
        raise QmllError(f"context path must start with a formula index: {context_arg!r}")
    if not 1 <= k <= len(concl):
        raise QmllError(f"formula index {k} out of range")
    if entry_arg is not None and entry_arg != k:
        raise QmllError(f"--entry {entry_arg} conflicts with context path index {k}")
    f = concl[k - 1]
    steps = []
    for seg in parts[1:]:
        if seg == "L":
            match f:
                case Par(l, r):
                    steps.append((PAR_L, r))
                    f = l
                case Tensor(l, r):
                    steps.append((TENS_L, r))
                    f = l
                case Box(b):
                    steps.append((BOX_S, None))
                    f = b
                case Diamond(b):
                    steps.append((DIA_S, None))
                    f = b
                case _:
                    raise QmllError("context path descends below an atom")
        elif seg == "R":
            match f:
                case Par(l, r):
                    steps.append((PAR_R, l))
                    f = r
                case Tensor(l, r):
                    steps.append((TENS_R, l))
                    f = r
                case _:
                    raise QmllError("'R' only descends binary connectives")
        else:
            raise QmllError(f"bad context path segment {seg!r} (use L or R)")
    if not isinstance(f, Atom):
        raise QmllError("context path must end at an atom")
    return k, Context(tuple(steps))


def _parse_state(arg: str | None, n: int) -> StateVector:
    if arg is None:
        return zero_state(n)
    arg = arg.strip()
    if arg.startswith("|"):
        label = arg.strip("|>")
        return basis_state(label)
    data = json.loads(arg)
    amps = [complex(e[0], e[1]) for e in data]
    return StateVector(n, np.array(amps, dtype=complex))


def _cmd_check(args) -> int:
    proof = parse_proof(_read(args.proof))
    report = check(proof)
    if report.ok:
        print(f"ok: |- {print_sequent(proof.conclusion)}")
        return 0
    print(str(report), file=sys.stderr)
    return 1


def _cmd_normalize(args) -> int:
    proof = parse_proof(_read(args.proof))
    trace = normalize(proof, strategy=args.strategy, seed=args.seed)
    if args.trace:
        for line in trace_lines(trace):
            print(line, file=sys.stderr)
    _write(print_proof(trace.final), args.output)
    return 0


def _cmd_run(args) -> int:
    proof = parse_proof(_read(args.proof))
    k, ctx = _resolve_entry(proof, args.context, args.entry)
    from .formulas import depth as ctx_depth
    register = _parse_state(args.input, ctx_depth(ctx))
    graph = OccurrenceGraph(proof)
    start = initial_state(graph, k, ctx, register)
    result = run(graph, start, collect_trace=args.trace_machine)
    if args.trace_machine:
        for line in result.trace:
            print(line, file=sys.stderr)
    amps = ",".join(f"[{f17(z.real)},{f17(z.imag)}]"
                    for z in result.final.register.amplitudes)
    _write(f'{{"exit":{result.final.pos},"state":[{amps}]}}', args.output)
    return 0


def _cmd_semantics(args) -> int:
    proof = parse_proof(_read(args.proof))
    k, ctx = _resolve_entry(proof, args.context, args.entry)
    res = semantics_relative(proof, k, ctx)
    body = (f'{{"entry":{res.entry_pos},"exit":{res.exit_pos},'
            f'"dim_qubits":{res.unitary.dim_qubits},'
            f'"matrix":{_matrix_json(res.unitary.data)}}}')
    _write(body, args.output)
    return 0


def _cmd_encode(args) -> int:
    circuit = circuit_from_json(_read(args.circuit))
    _write(print_proof(encode(circuit)), args.output)
    return 0


def _cmd_extract(args) -> int:
    proof = parse_proof(_read(args.proof))
    k, ctx = _resolve_entry(proof, args.context, args.entry)
    circuit = extract(proof, k, ctx, prune_identity=args.prune_identity)
    _write(circuit_to_json(circuit), args.output)
    return 0


def _cmd_mll_matrix(args) -> int:
    proof = parse_proof(_read(args.proof))
    m = mll_axiom_link_matrix(proof)
    rows = ",".join("[" + ",".join(str(int(x)) for x in row) + "]" for row in m)
    _write(f'{{"size":{m.shape[0]},"matrix":[{rows}]}}', args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmll", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        return p

    p = add("check", _cmd_check, help="parse and check a proof file")
    p.add_argument("proof")

    p = add("normalize", _cmd_normalize, help="reduce a proof to cut-free normal form")
    p.add_argument("proof")
    p.add_argument("--strategy", choices=["leftmost-innermost", "random"],
                   default="leftmost-innermost")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="print one line per step to stderr")

    p = add("run", _cmd_run, help="run the token machine on a register")
    p.add_argument("proof")
    p.add_argument("--entry", type=int, default=None)
    p.add_argument("--context", default="auto")
    p.add_argument("--input", default=None,
                   help="register as JSON [re,im] pairs or a |bits> label")
    p.add_argument("--trace-machine", action="store_true")

    p = add("semantics", _cmd_semantics, help="the unitary a proof denotes")
    p.add_argument("proof")
    p.add_argument("--entry", type=int, default=None)
    p.add_argument("--context", default="auto")

    p = add("encode", _cmd_encode, help="encode a circuit JSON as a proof")
    p.add_argument("circuit")

    p = add("extract", _cmd_extract, help="extract the circuit a proof denotes")
    p.add_argument("proof")
    p.add_argument("--entry", type=int, default=None)
    p.add_argument("--context", default="auto")
    p.add_argument("--prune-identity", action="store_true")

    p = add("mll-matrix", _cmd_mll_matrix,
            help="axiom-link permutation matrix of a cut-free multiplicative proof")
    p.add_argument("proof")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except SyntaxLocationError as e:
        print(f"syntax error: {e}", file=sys.stderr)
        return 2
    except CheckFailure as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1
    except QmllError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
