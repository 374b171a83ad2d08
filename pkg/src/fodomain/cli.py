"""Command-line interface.

Exit codes: 0 success, 1 check failed (not inductive or not safe),
2 bad input, 3 language or state space too large, 4 iteration/time cap hit.
Data goes to stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .fixpoint import (CapExceeded, StateExplosion, check_bounds, check_inductive,
                       check_safety, lfp_symbolic_abstraction)
from .fol import FolError
from .lang import (LanguageTooLarge, ShapeError, canonicalize, enumerate_language, free_variables,
                   render)
from .lset import make_lset
from .oracle import BudgetExceeded
from .parsing import (ParseError, parse_bounds, parse_formula_lines, parse_language, parse_model,
                      parse_states, state_to_json)
from .report import dumps, lfp_report
from .weaken import abstract_states, weaken_set

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_TOO_LARGE, EXIT_CAP = 0, 1, 2, 3, 4

VISIBLE = ("enumerate", "weaken", "abstract", "lfp", "check")


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _need(args, *names):
    for name in names:
        if getattr(args, name) in (None, []):
            raise UsageError(f"{args.command} needs --{name.replace('_', '-')}")


def _load_model(args):
    return parse_model(_read(args.model), args.model)


def _load_language(args, sig=None):
    spec, sig = parse_language(_read(args.language), sig, args.language)
    return spec, sig


def _load_states(args, spec, sig):
    states = []
    for path in args.state:
        states.extend(parse_states(_read(path), sig, free_variables(spec), path))
    return states


def _load_formulas(args, spec):
    phis = parse_formula_lines(_read(args.formulas), spec, args.formulas)
    if args.canonicalize:
        phis = [canonicalize(spec, phi) for phi in phis]
    return phis


def _bounds(args, sig):
    try:
        return check_bounds(sig, parse_bounds(args.bounds))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _lines(formulas) -> str:
    return "".join(render(f) + "\n" for f in formulas)


def cmd_enumerate(args) -> int:
    _need(args, "language")
    spec, _ = _load_language(args)
    limit = args.limit
    if limit is not None and spec.size() > limit:
        raise LanguageTooLarge(spec.size(), limit)
    _emit(args, _lines(enumerate_language(spec, canonical_only=args.canonical_only)))
    return EXIT_OK


def _initial_set(args, spec):
    R = make_lset(spec)
    if args.formulas:
        for phi in _load_formulas(args, spec):
            if not R.is_subsumed(phi):
                for psi in R.subsuming(phi):
                    R.remove(psi)
                R.insert(phi)
    else:
        R.insert(spec.bottom)
    return R


def cmd_weaken(args) -> int:
    _need(args, "language", "state")
    spec, sig = _load_language(args)
    R = _initial_set(args, spec)
    for s in _load_states(args, spec, sig):
        weaken_set(R, s, threads=args.threads)
    _emit(args, _lines(R.formulas()))
    return EXIT_OK


def cmd_abstract(args) -> int:
    _need(args, "language", "state")
    spec, sig = _load_language(args)
    _emit(args, _lines(abstract_states(spec, _load_states(args, spec, sig))))
    return EXIT_OK


def _lfp_context(args):
    _need(args, "model", "language", "bounds")
    model = _load_model(args)
    spec, _ = _load_language(args, model.signature)
    if free_variables(spec):
        raise UsageError("the language must not have free variables for lfp/check")
    return model, spec, _bounds(args, model.signature)


def cmd_lfp(args) -> int:
    model, spec, bounds = _lfp_context(args)

    def progress(i, cti, R):
        if args.verbose:
            print(f"iteration {i}: |R| = {len(R)}", file=sys.stderr)

    try:
        result = lfp_symbolic_abstraction(model, bounds, spec, max_iters=args.max_iters,
                                          time_limit=args.time_limit, max_states=args.max_states,
                                          threads=args.threads, on_iteration=progress)
    except CapExceeded as e:
        r = e.result
        _emit(args, dumps(lfp_report(r, bounds, False, None, not args.no_timings, complete=False)))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    inductive = check_inductive(model, bounds, result.lset).inductive
    safe = check_safety(model, bounds, result.lset) if model.safety is not None else None
    _emit(args, dumps(lfp_report(result, bounds, inductive, safe, not args.no_timings)))
    return EXIT_OK


def cmd_check(args) -> int:
    _need(args, "formulas")
    model, spec, bounds = _lfp_context(args)
    R = make_lset(spec, _load_formulas(args, spec))
    res = check_inductive(model, bounds, R, max_states=args.max_states)
    safe = check_safety(model, bounds, R) if model.safety is not None else None
    out = {"inductive": res.inductive, "safe": safe,
           "counterexample": state_to_json(res.counterexample) if res.counterexample else None}
    _emit(args, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if res.inductive and safe is not False else EXIT_FAILED


def cmd_oracle(args) -> int:
    from . import oracle

    _need(args, "language")
    if args.what == "lfp":
        model, spec, bounds = _lfp_context(args)
        fixed = oracle.naive_min(spec, oracle.kleene_lfp(model, bounds, spec))
        _emit(args, _lines(sorted(fixed, key=lambda f: f.key)))
        return EXIT_OK
    spec, sig = _load_language(args)
    if args.what == "upward":
        base = _load_formulas(args, spec) if args.formulas else [spec.bottom]
        _emit(args, _lines(oracle.upward_closure(spec, base)))
        return EXIT_OK
    _need(args, "state")
    base = _load_formulas(args, spec) if args.formulas else [spec.bottom]
    out = set()
    for s in _load_states(args, spec, sig):
        for phi in base:
            out |= oracle.naive_weaken(spec, canonicalize(spec, phi), s)
    _emit(args, _lines(sorted(out, key=lambda f: f.key)))
    return EXIT_OK


COMMANDS = {"enumerate": cmd_enumerate, "weaken": cmd_weaken, "abstract": cmd_abstract,
            "lfp": cmd_lfp, "check": cmd_check, "oracle": cmd_oracle}


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _nonnegative(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must not be negative")
    return n


_OPTIONS = {
    "language": (("--language",), dict(help="language file")),
    "model": (("--model",), dict(help="model file")),
    "state": (("--state",), dict(action="append", default=[],
                                 help="state file (JSON, JSON array or JSON lines); repeatable")),
    "formulas": (("--formulas",),
                 dict(help="file of rendered formulas, one per line ('-' for stdin)")),
    "canonicalize": (("--canonicalize",), dict(
        action="store_true",
        help="canonicalize input formulas instead of rejecting non-canonical ones")),
    "bounds": (("--bounds",), dict(help="universe bounds, e.g. node=2,value=3")),
    "limit": (("--limit",), dict(type=_nonnegative, help="refuse to enumerate more formulas")),
    "max_iters": (("--max-iters",), dict(type=_nonnegative, help="stop after this many CTIs")),
    "max_states": (("--max-states",), dict(type=_positive,
                                           help="refuse to search more bounded structures")),
    "time_limit": (("--time-limit",), dict(type=float, help="seconds")),
    "threads": (("--threads",), dict(type=_positive, default=1,
                                     help="worker threads for weakening")),
    "out": (("--out",), dict(help="write output here instead of stdout")),
    "no_timings": (("--no-timings",), dict(action="store_true", help="omit wall-clock fields")),
    "canonical_only": (("--canonical-only",), dict(action="store_true",
                                                   help="list one formula per equivalence class")),
    "verbose": (("-v", "--verbose"), dict(action="store_true",
                                          help="report progress on stderr")),
}

_COMMAND_OPTIONS = {
    "enumerate": ("language", "limit", "canonical_only", "out"),
    "weaken": ("language", "state", "formulas", "canonicalize", "threads", "out"),
    "abstract": ("language", "state", "out"),
    "lfp": ("model", "language", "bounds", "max_iters", "max_states", "time_limit", "threads",
            "no_timings", "verbose", "out"),
    "check": ("model", "language", "bounds", "formulas", "canonicalize", "max_states", "out"),
    "oracle": ("model", "language", "bounds", "state", "formulas", "canonicalize", "out"),
}

_HELPS = {
    "enumerate": "list every formula of a language",
    "weaken": "weaken an antichain (default: bottom) by states",
    "abstract": "antichain of all formulas true in the given states",
    "lfp": "compute the bounded least fixpoint and write a JSON report",
    "check": "check a formula set for inductiveness and safety",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fodomain",
                                     description="Bounded first-order abstract domain tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(VISIBLE) + "}")
    sub.required = True
    for name, options in _COMMAND_OPTIONS.items():
        cmd = sub.add_parser(name, help=_HELPS[name]) if name in _HELPS else sub.add_parser(name)
        if name == "oracle":
            cmd.add_argument("what", choices=("upward", "weaken", "lfp"))
        for opt in options:
            flags, kwargs = _OPTIONS[opt]
            cmd.add_argument(*flags, **kwargs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, ShapeError, FolError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (LanguageTooLarge, StateExplosion, BudgetExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TOO_LARGE


if __name__ == "__main__":
    sys.exit(main())
