"""``dftkit`` command line.

Exit codes: 0 success, 1 analysis-level failure (invalid model, terms not
equivalent, rule failures, state budget), 2 usage or I/O errors.

A model argument is a path to a Galileo file, or ``@name`` for a built-in
benchmark (``@ahrs``, ``@cpand`` ...).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import bench
from .algebra import AllDistinct, ColdSpare, NeverEvents, TermEqNever, free_variables
from .galileo import (
    DftModel,
    GalileoError,
    GalileoSyntaxError,
    InvalidModel,
    NoGateForm,
    load,
    model_from_cut_sequences,
    serialize,
    to_structure_function,
    validate,
)
from .markov import MarkovError, StateBudgetExceeded, build_ctmc, mean_time_to_failure, transient_failure_probability
from .qualitative import NotCanonical, extract_cut_sequences, minimize
from .rewrite import (
    Exact,
    NormalizeError,
    NotEquivalent,
    Sampled,
    SelfCheckFailed,
    TooManyVariables,
    apply_reduction,
    decide_equivalence,
    verify_catalog,
)
from .simulate import simulate
from .syntax import TermSyntaxError, format_term, parse_hol, parse_term


class UsageError(Exception):
    pass


class AnalysisFailure(Exception):
    pass


def _emit(args, table: str, payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        print(table)


# ---------------------------------------------------------------------------
# model loading


def _load(ref: str) -> DftModel:
    if ref.startswith("@"):
        models = bench.builtin_models()
        if ref[1:] not in models:
            raise UsageError(f"unknown built-in model {ref}; choose from {', '.join('@' + n for n in models)}")
        return models[ref[1:]].original
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"{ref}: no such file")
    return load(path)


def _reduction(model: DftModel, trials: int, seed: int):
    sf = to_structure_function(model)
    return sf, apply_reduction(sf.term, sf.conditions, trials=trials, seed=seed)


def _analysis_model(args) -> DftModel:
    """The model a quantitative command should run on, honouring --reduced."""
    if not getattr(args, "reduced", False):
        return _load(args.model)
    if args.model.startswith("@"):
        _load(args.model)
        return bench.builtin_models()[args.model[1:]].reduced
    model = _load(args.model)
    _, red = _reduction(model, args.samples, args.seed)
    return model_from_cut_sequences(minimize(extract_cut_sequences(red.reduced)), model)


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    model = _load(args.model)
    violations = validate(model)
    kinds: dict[str, int] = {}
    for g in model.gates:
        kinds[g.kind] = kinds.get(g.kind, 0) + 1
    payload = {
        "toplevel": model.toplevel,
        "basic_events": len(model.events),
        "gates": dict(sorted(kinds.items())),
        "valid": not violations,
        "violations": [str(v) for v in violations],
    }
    lines = [f"toplevel: {model.toplevel}", f"basic events: {len(model.events)}"]
    lines.append("gates: " + (", ".join(f"{k}={n}" for k, n in sorted(kinds.items())) or "none"))
    lines += [f"violation: {v}" for v in violations] or ["valid"]
    _emit(args, "\n".join(lines), payload)
    return 1 if violations else 0


def cmd_reduce(args) -> int:
    model = _load(args.model)
    sf, red = _reduction(model, args.samples, args.seed)
    before, after = free_variables(sf.term), free_variables(red.reduced)
    payload = {
        "reduced": format_term(red.reduced),
        "certificate": red.certificate.describe(),
        "conditions": [str(c) for c in sf.conditions],
        "variables_before": len(before),
        "variables_after": len(after),
        "eliminated": sorted(set(before) - set(after)),
        "seed": args.seed,
    }
    if args.emit == "json" or args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(payload["reduced"])
        print(f"# {payload['certificate']}", file=sys.stderr)
    return 0


def cmd_cutseq(args) -> int:
    model = _load(args.model)
    _, red = _reduction(model, args.samples, args.seed)
    summary = minimize(extract_cut_sequences(red.reduced))
    payload = summary.to_json() | {"certificate": red.certificate.describe(), "seed": args.seed}
    _emit(args, "\n".join(str(s) for s in summary.sequences), payload)
    return 0


def cmd_prob(args) -> int:
    if args.time < 0:
        raise UsageError("--time must be nonnegative")
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    model = _analysis_model(args)
    chain = build_ctmc(model)
    p = transient_failure_probability(chain, args.time, args.tol)
    payload = {"time": args.time, "tol": args.tol, "reduced": args.reduced, "states": chain.n_states,
               "transitions": chain.n_transitions, "probability": p}
    _emit(args, f"{p:.12e}", payload)
    return 0


def cmd_mttf(args) -> int:
    model = _analysis_model(args)
    chain = build_ctmc(model)
    m = mean_time_to_failure(chain)
    finite = math.isfinite(m)
    payload = {"reduced": args.reduced, "states": chain.n_states, "mttf": m if finite else None, "finite": finite}
    _emit(args, f"{m:.12g}" if finite else "inf", payload)
    return 0


def cmd_mc(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.time < 0:
        raise UsageError("--time must be nonnegative")
    est = simulate(_load(args.model), args.time, args.trials, args.seed, method=args.method)
    payload = {"time": args.time, "p_hat": est.p_hat, "stderr": est.stderr, "trials": est.trials, "seed": est.seed}
    _emit(args, f"{est.p_hat:.6e} ± {est.stderr:.2e} ({est.trials} trials, seed {est.seed})", payload)
    return 0


def cmd_verify_rules(args) -> int:
    report = verify_catalog(max_vars=args.max_vars)
    payload = {
        "rules": len(report),
        "failures": [{"rule": c.rule.provenance, "verdict": c.verdict.describe()} for c in report.failures],
    }
    lines = [report.summary()] + [f"FAIL {c.rule.provenance}: {c.verdict.describe()}" for c in report.failures]
    _emit(args, "\n".join(lines), payload)
    return 0 if report.ok else 1


def _term(text: str):
    hol = any(tok in text for tok in ("D_", "PAND", "FDEP", "WSP", "CSP", "HSP", "shared_spare"))
    return parse_hol(text) if hol else parse_term(text)


def cmd_equiv(args) -> int:
    a, b = _term(args.a), _term(args.b)
    conditions = []
    if args.distinct:
        names = sorted(set(free_variables(a)) | set(free_variables(b)))
        conditions.append(AllDistinct(names))
    conditions += [ColdSpare(n) for n in args.cold]
    conditions += [NeverEvents(x, y) for x, y in args.never_events]
    conditions += [TermEqNever(_term(t)) for t in args.never]
    mode = Sampled(args.samples, args.seed) if args.samples else Exact(args.max_vars)
    verdict = decide_equivalence(a, b, conditions, mode)
    payload = {"equivalent": bool(verdict), "verdict": verdict.describe(), "seed": args.seed if args.samples else None}
    if isinstance(verdict, NotEquivalent):
        payload["witness"] = {k: (None if math.isinf(v) else v) for k, v in verdict.witness.items()}
    _emit(args, verdict.describe(), payload)
    return 0 if verdict else 1


def cmd_bench(args) -> int:
    names = [args.model] if args.model else list(bench.builtin_models())
    if args.export:
        out = Path(args.export)
        out.mkdir(parents=True, exist_ok=True)
        for n in names:
            b = bench.builtin_models()[n]
            (out / f"{n}.dft").write_text(serialize(b.original), encoding="utf-8")
            (out / f"{n}_reduced.dft").write_text(serialize(b.reduced), encoding="utf-8")
    report = bench.run_all(names, args.time, args.tol, args.samples, args.seed)
    timings = not args.no_timings
    if args.format == "json":
        print(report.to_json(timings))
    else:
        print(report.to_text(timings))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default="table")
    common.add_argument("--no-timings", action="store_true", help="omit wall-clock fields (for golden files)")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--samples", type=int, default=1_000_000, help="valuations for sampled certificates")
    sampling.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="dftkit", description="Dynamic fault tree reduction and analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", parents=[common], help="validate a model and print its size")
    s.add_argument("model")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("reduce", parents=[common, sampling], help="reduce the structure function")
    s.add_argument("model")
    s.add_argument("--emit", choices=("sop", "json"), default="sop")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("cutseq", parents=[common, sampling], help="minimal cut sequences")
    s.add_argument("model")
    s.set_defaults(func=cmd_cutseq)

    s = sub.add_parser("prob", parents=[common, sampling], help="failure probability by time T")
    s.add_argument("model")
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--reduced", action="store_true")
    s.set_defaults(func=cmd_prob)

    s = sub.add_parser("mttf", parents=[common, sampling], help="mean time to failure")
    s.add_argument("model")
    s.add_argument("--reduced", action="store_true")
    s.set_defaults(func=cmd_mttf)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo estimate of the failure probability")
    s.add_argument("model")
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--method", choices=("auto", "trajectory", "static"), default="auto")
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("verify-rules", parents=[common], help="check every catalogued rule")
    s.add_argument("--max-vars", type=int, default=4)
    s.set_defaults(func=cmd_verify_rules)

    s = sub.add_parser("equiv", parents=[common], help="decide equivalence of two terms")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--samples", type=int, default=0, help="sample this many valuations instead of exact search")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-vars", type=int, default=7)
    s.add_argument("--distinct", action="store_true", help="assume all variables fail at distinct times")
    s.add_argument("--cold", action="append", default=[], metavar="NAME")
    s.add_argument("--never-events", action="append", default=[], nargs=2, metavar=("A", "B"))
    s.add_argument("--never", action="append", default=[], metavar="TERM", help="assume TERM = NEVER")
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("bench", parents=[common, sampling], help="before/after reduction comparison")
    s.add_argument("--model", choices=list(bench.builtin_models()))
    s.add_argument("--time", type=float, default=None, help="time bound (default: per-model)")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--export", metavar="DIR", help="also write the models as Galileo files")
    s.set_defaults(func=cmd_bench)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"dftkit: error: {exc}", file=sys.stderr)
        return 2
    except (GalileoSyntaxError, TermSyntaxError) as exc:
        print(f"dftkit: syntax error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dftkit: error: {exc}", file=sys.stderr)
        return 2
    except InvalidModel as exc:
        print(f"dftkit: invalid model: {exc}", file=sys.stderr)
        return 1
    except bench.ReductionMismatch as exc:
        print(f"dftkit: {exc}", file=sys.stderr)
        return 1
    except (StateBudgetExceeded, NoGateForm, NotCanonical, SelfCheckFailed, TooManyVariables) as exc:
        print(f"dftkit: {exc}", file=sys.stderr)
        return 1
    except (GalileoError, MarkovError, NormalizeError, ValueError) as exc:
        print(f"dftkit: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
