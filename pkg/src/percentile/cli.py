"""Command-line front end: ``percentile {solve,verify,simulate,mec,formats}``.

Exit codes: 0 Yes (or verified), 1 No (or a constraint failed),
2 Unknown, 64 usage error, 65 data error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional

from .graph import max_end_components
from .horizon import NegativeWeights, PreciseDiscountUnsupported
from .io import (SCHEMAS, DataError, constraint_to_json, dumps, parse_model, parse_query, parse_strategy,
                 strategy_to_json, to_jsonable)
from .model import NotChainRepresentable
from .sim import estimate_percentiles, exact_verify_finite
from .solve import QueryError, solve_query
from .verdict import NO, UNKNOWN, YES

EXIT = {YES: 0, NO: 1, UNKNOWN: 2}
EXIT_FAIL, EXIT_USAGE, EXIT_DATA = 1, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _rational(text: str) -> Fraction:
    from .io import parse_rational
    try:
        return parse_rational(text)
    except DataError as e:
        raise argparse.ArgumentTypeError(e.message) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="percentile", description="Multi-constraint percentile queries on weighted MDPs.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="decide a query and export a witness strategy")
    s.add_argument("model")
    s.add_argument("query")
    s.add_argument("--epsilon", type=_rational, help="overrides the query file's epsilon")
    s.add_argument("--strategy-out", metavar="FILE", help="write the witness strategy here")
    s.add_argument("--certificate-out", metavar="FILE", help="write the certificate here")
    s.add_argument("--json", action="store_true", help="machine-readable output on stdout")

    v = sub.add_parser("verify", help="check a strategy file against a query")
    v.add_argument("model")
    v.add_argument("strategy")
    v.add_argument("query")
    v.add_argument("--mode", choices=("exact", "simulate"), default="exact")
    _sim_args(v)
    v.add_argument("--json", action="store_true")

    m = sub.add_parser("simulate", help="Monte Carlo estimates for a strategy file")
    m.add_argument("model")
    m.add_argument("strategy")
    m.add_argument("query")
    _sim_args(m)
    m.add_argument("--json", action="store_true")

    e = sub.add_parser("mec", help="print the maximal end components")
    e.add_argument("model")
    e.add_argument("--json", action="store_true")

    f = sub.add_parser("formats", help="print the file schemas")
    f.add_argument("which", nargs="?", choices=sorted(SCHEMAS))
    return p


def _sim_args(p):
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.99, help="confidence level of the intervals")
    p.add_argument("--threads", type=int, help="worker threads (default: $PERCENTILE_THREADS or all cores)")


def _emit(args, payload: dict, lines: List[str]):
    if getattr(args, "json", False):
        sys.stdout.write(dumps(payload) + "\n")
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    sys.stdout.flush()


def _describe(c, mdp) -> str:
    d = constraint_to_json(c, mdp)
    extra = ""
    if "target" in d:
        extra += " target={%s}" % ",".join(d["target"])
    if "discount" in d:
        extra += " discount=%s" % d["discount"]
    rel = "<=" if c.kind == "truncated_sum" else ">="
    return "P[%s_%d %s %s]%s >= %s" % (c.kind, c.dim, rel, d["value"], extra, d["prob"])


# ----------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    mdp = parse_model(args.model)
    query = parse_query(args.query, mdp)
    if args.epsilon is not None:
        query = type(query)(query.disjuncts, query.initial, args.epsilon)
    verdict = solve_query(mdp, query)

    exported, export_note = None, None
    if verdict.strategy is not None and getattr(verdict.strategy, "finite", False):
        exported = strategy_to_json(verdict.strategy, mdp)
        exported["meets"] = [constraint_to_json(c, mdp) for c in verdict.verified_against or verdict.constraints]
    elif verdict.relaxed_strategy is not None and getattr(verdict.relaxed_strategy, "finite", False):
        exported = strategy_to_json(verdict.relaxed_strategy, mdp)
        exported["meets"] = [constraint_to_json(c, mdp) for c in verdict.relaxed_constraints]
        exported["relaxed"] = True
        export_note = "exported strategy meets the relaxed constraints only"
    elif verdict.strategy is not None:
        export_note = "witness needs infinite memory: %s" % getattr(verdict.strategy, "description", "")
    if args.strategy_out:
        if exported is None:
            print("warning: no finite strategy to export", file=sys.stderr)
        else:
            with open(args.strategy_out, "w") as fh:
                fh.write(dumps(exported) + "\n")
    if args.certificate_out:
        with open(args.certificate_out, "w") as fh:
            fh.write(dumps(verdict.certificate) + "\n")

    payload = {
        "status": verdict.status,
        "constraints": [constraint_to_json(c, mdp) for c in verdict.constraints],
        "epsilon": verdict.epsilon,
        "suggested_epsilon": verdict.suggested_epsilon,
        "notes": verdict.notes + ([export_note] if export_note else []),
        "certificate": verdict.certificate,
        "strategy": exported,
        "relaxed_constraints": None if verdict.relaxed_constraints is None
        else [constraint_to_json(c, mdp) for c in verdict.relaxed_constraints],
    }
    lines = ["status: %s" % verdict.status.upper()]
    for c in verdict.constraints:
        lines.append("  %s" % _describe(c, mdp))
    if verdict.suggested_epsilon is not None:
        lines.append("suggested epsilon: %s" % verdict.suggested_epsilon)
    if verdict.relaxed_constraints is not None:
        lines.append("relaxed strategy meets:")
        lines += ["  %s" % _describe(c, mdp) for c in verdict.relaxed_constraints]
    if exported is not None:
        lines.append("strategy: %d memory element(s)%s" % (exported["memory_size"],
                                                          ", written to " + args.strategy_out if args.strategy_out else ""))
    for n in payload["notes"]:
        lines.append("note: %s" % n)
    for k, val in verdict.certificate.items():
        if k in ("flow", "reach", "weights"):
            continue
        lines.append("%-16s %s" % (k + ":", json.dumps(to_jsonable(val))))
    _emit(args, payload, lines)
    return EXIT[verdict.status]


# ----------------------------------------------------------------------------
# verify / simulate


def _threads(args):
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        os.environ["PERCENTILE_THREADS"] = str(args.threads)


def _simulate(args, mdp, strategy, constraints, init):
    _threads(args)
    if args.episodes < 1 or args.horizon < 1:
        raise UsageError("--episodes and --horizon must be positive")
    return estimate_percentiles(mdp, strategy, constraints, horizon=args.horizon, episodes=args.episodes,
                                seed=args.seed, level=args.level, init=init)


def _report_lines(report, mdp) -> List[str]:
    lines = ["%d episodes, horizon %d, seed %d, %g%% intervals"
             % (report.episodes, report.horizon, report.seed, 100 * report.level)]
    for e in report.estimates:
        lines.append("  %-50s freq %.4f  [%.4f, %.4f]  slack v=%.4g p=%.4g  %s%s"
                     % (_describe(e.constraint, mdp), e.frequency, e.lower, e.upper, e.value_slack,
                        e.prob_slack, "ok" if e.consistent else "FAIL", ("  (" + e.note + ")") if e.note else ""))
    return lines


def _report_json(report, mdp) -> dict:
    return {"episodes": report.episodes, "horizon": report.horizon, "seed": report.seed, "level": report.level,
            "generator": report.generator, "consistent": report.consistent,
            "estimates": [{"constraint": constraint_to_json(e.constraint, mdp), "successes": e.successes,
                           "frequency": e.frequency, "lower": e.lower, "upper": e.upper,
                           "value_slack": e.value_slack, "prob_slack": e.prob_slack,
                           "consistent": e.consistent, "note": e.note} for e in report.estimates]}


def _load_triplet(args):
    mdp = parse_model(args.model)
    strategy = parse_strategy(args.strategy, mdp)
    query = parse_query(args.query, mdp)
    init = mdp.initial if query.initial is None else query.initial
    if strategy.init != init:
        raise DataError("strategy starts in %r but the query in %r" % (mdp.states[strategy.init], mdp.states[init]),
                        "initial_state", args.strategy)
    return mdp, strategy, query, init


def cmd_verify(args) -> int:
    mdp, strategy, query, init = _load_triplet(args)
    blocks, lines, ok_any = [], [], False
    for b, block in enumerate(query.disjuncts):
        mode, warning = args.mode, None
        if mode == "exact":
            try:
                checks = exact_verify_finite(mdp, strategy, block, init)
            except (NotChainRepresentable, NotImplementedError) as e:
                mode, warning = "simulate", "exact check unavailable (%s); simulating instead" % e
                print("warning: " + warning, file=sys.stderr)
        if mode == "exact":
            ok = all(c.certified for c in checks)
            failing = [_describe(c.constraint, mdp) for c in checks if not c.certified]
            blocks.append({"mode": "exact", "ok": ok, "failing": failing,
                           "checks": [{"constraint": constraint_to_json(c.constraint, mdp), "lower": c.lower,
                                       "upper": c.upper, "certified": c.certified} for c in checks]})
            lines.append("disjunct %d (exact): %s" % (b, "ok" if ok else "FAIL"))
            for c in checks:
                val = str(c.lower) if c.exact else "[%s, %s]" % (c.lower, c.upper)
                lines.append("  %-50s prob %s  %s" % (_describe(c.constraint, mdp), val,
                                                      "ok" if c.certified else "FAIL"))
        else:
            report = _simulate(args, mdp, strategy, block, init)
            ok = report.consistent
            failing = [_describe(e.constraint, mdp) for e in report.estimates if not e.consistent]
            blocks.append(dict(_report_json(report, mdp), mode="simulate", ok=ok, failing=failing,
                               warning=warning))
            lines.append("disjunct %d (simulated): %s" % (b, "ok" if ok else "FAIL"))
            lines += ["  " + l for l in _report_lines(report, mdp)]
        ok_any = ok_any or ok
    _emit(args, {"ok": ok_any, "disjuncts": blocks}, lines)
    return 0 if ok_any else EXIT_FAIL


def cmd_simulate(args) -> int:
    mdp, strategy, query, init = _load_triplet(args)
    constraints = [c for b in query.disjuncts for c in b]
    report = _simulate(args, mdp, strategy, constraints, init)
    _emit(args, _report_json(report, mdp), _report_lines(report, mdp))
    ok = any(all(e.consistent for e in report.estimates if e.constraint in b) for b in query.disjuncts)
    return 0 if ok else EXIT_FAIL


# ----------------------------------------------------------------------------
# mec / formats


def cmd_mec(args) -> int:
    mdp = parse_model(args.model)
    dec = max_end_components(mdp)
    mecs = []
    for ec in dec.mecs:
        mecs.append({s_name: [mdp.actions[s][a].name for a in ec.actions[s]]
                     for s, s_name in ((s, mdp.states[s]) for s in sorted(ec.states))})
    transient = [mdp.states[s] for s in range(mdp.n_states) if s not in dec.membership]
    lines = ["%d maximal end component(s)" % len(mecs)]
    for k, m in enumerate(mecs):
        lines.append("  MEC %d: %s" % (k, "  ".join("%s{%s}" % (s, ",".join(a)) for s, a in m.items())))
    lines.append("outside every MEC: %s" % (", ".join(transient) or "-"))
    _emit(args, {"mecs": mecs, "transient": transient}, lines)
    return 0


def cmd_formats(args) -> int:
    doc = SCHEMAS[args.which] if args.which else SCHEMAS
    sys.stdout.write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    return 0


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "simulate": cmd_simulate, "mec": cmd_mec,
            "formats": cmd_formats}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print("percentile: usage error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, QueryError, NegativeWeights, PreciseDiscountUnsupported) as e:
        print("percentile: %s" % e, file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        # constraint/payoff mismatches raised by the solvers
        print("percentile: invalid input: %s" % e, file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
