"""Command-line front end.

Exit codes: 0 every evaluated property holds, 1 a property is violated,
2 usage error, 3 an exact computation was refused by a guard limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional

from .corrbox import (
    OT,
    PR,
    LocalBox,
    as_conditional,
    check_no_signalling,
    chsh_win_probability,
    uniform_box,
)
from .errors import ConfigurationError, GuardLimitExceeded, InapplicableStrategy, ValidationError
from .protocols import PROTOCOLS, get_protocol
from .security import (
    ADVERSARIES,
    BindingReport,
    ComposabilityDemo,
    SecurityReport,
    composability_demo,
    security_report,
)

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3
MAX_TABLE_LEAVES = 16

UNARY = {"zero": (0, 0), "one": (1, 1), "id": (0, 1), "not": (1, 0)}


class UsageError(Exception):
    pass


def frac(p: Fraction) -> str:
    p = Fraction(p)
    return f"{p.numerator}/{p.denominator}"


def _unary(token: str) -> tuple[int, int]:
    token = token.strip()
    if token in UNARY:
        return UNARY[token]
    if len(token) == 2 and set(token) <= {"0", "1"}:
        return int(token[0]), int(token[1])
    raise UsageError(f"unknown unary function {token!r}; use zero, one, id, not or a table like 01")


def parse_box(kind: str):
    if kind == "pr":
        return PR
    if kind == "ot":
        return OT
    if kind == "uniform":
        return uniform_box()
    if kind.startswith("local:"):
        parts = kind[len("local:"):].split(",")
        if len(parts) != 2:
            raise UsageError("local boxes are written local:<fa>,<fb>")
        return LocalBox(_unary(parts[0]), _unary(parts[1]))
    raise UsageError(f"unknown box kind {kind!r}; use pr, ot, uniform or local:<fa>,<fb>")


# serialisation


def binding_dict(b: BindingReport) -> dict:
    return {
        "threshold": frac(b.threshold),
        "violation": frac(b.violation),
        "secure": b.secure,
        "leaves": [
            {"p_accept_0": frac(leaf.p_accept_0), "p_accept_1": frac(leaf.p_accept_1)}
            for leaf in b.leaves
        ],
    }


def report_dict(r: SecurityReport) -> dict:
    return {
        "protocol": r.protocol,
        "n_epsilon": r.n_epsilon,
        "boxes": r.boxes,
        "adversary": r.adversary,
        "mode": r.mode,
        "correctness": frac(r.correctness),
        "privacy_distance": frac(r.privacy_distance),
        "binding": binding_dict(r.binding),
    }


def demo_dict(d: ComposabilityDemo) -> dict:
    return {
        "ot": report_dict(d.ot),
        "simulated": report_dict(d.simulated),
        "violations": [frac(v) for v in d.pair],
        "simulated_schedule_equals_pr_commit": d.same_schedule_as_pr,
        "simulated_honest_distribution_equals_pr_commit": d.same_honest_distribution_as_pr,
    }


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _state_text(leaf) -> str:
    return " ".join(f"{k}={v}" for k, v in leaf.leaf.alice_state.items()) or "-"


def report_table(r: SecurityReport) -> str:
    b = r.binding
    lines = [
        f"protocol          {r.protocol} (n_epsilon={r.n_epsilon}, {r.boxes} box{'es' if r.boxes != 1 else ''})",
        f"adversary         {r.adversary} [{r.mode}]",
        f"correctness       {frac(r.correctness)}",
        f"privacy distance  {frac(r.privacy_distance)}",
        f"binding threshold {frac(b.threshold)}",
        f"binding violation {frac(b.violation)}  secure binding: {'yes' if b.secure else 'NO'}",
    ]
    if b.family_size is not None:
        lines.append(f"search            {b.commit_strategies} commit behaviours, {b.family_size} strategy pairs")
    for choice in b.strategy:
        lines.append(f"  {choice}")
    lines.append("leaf  p_accept(0)  p_accept(1)  alice state")
    for i, leaf in enumerate(b.leaves[:MAX_TABLE_LEAVES]):
        lines.append(
            f"{i:>4}  {frac(leaf.p_accept_0):>11}  {frac(leaf.p_accept_1):>11}  {_state_text(leaf)}"
        )
    if len(b.leaves) > MAX_TABLE_LEAVES:
        rest = b.leaves[MAX_TABLE_LEAVES:]
        worst = max(leaf.both for leaf in rest)
        lines.append(f"  ... {len(rest)} more leaves, largest min(p0, p1) among them {frac(worst)}")
    return "\n".join(lines) + "\n"


def demo_table(d: ComposabilityDemo) -> str:
    v_ot, v_sim = d.pair
    head = [
        "OT boxes versus the same protocol over PR-simulated OT boxes",
        f"  violation with real OT boxes:      {frac(v_ot)}",
        f"  violation with simulated OT boxes: {frac(v_sim)}",
        f"  simulated schedule equals pr-commit:            {d.same_schedule_as_pr}",
        f"  simulated honest distribution equals pr-commit: {d.same_honest_distribution_as_pr}",
        "",
    ]
    return "\n".join(head) + report_table(d.ot) + "\n" + report_table(d.simulated)


# commands


def cmd_box_verify(args) -> int:
    box = parse_box(args.kind)
    table = as_conditional(box)
    ns = check_no_signalling(table)
    try:
        chsh: Optional[Fraction] = chsh_win_probability(table)
    except ValidationError:
        chsh = None
    data = {
        "kind": args.kind,
        "a_to_b_ok": ns.a_to_b_ok,
        "b_to_a_ok": ns.b_to_a_ok,
        "max_marginal_gap": frac(ns.max_marginal_gap),
        "chsh": None if chsh is None else frac(chsh),
    }
    if args.output == "json":
        _emit(args, dumps(data))
    else:
        _emit(args, "\n".join([
            f"box               {args.kind}",
            f"no signalling A->B {'ok' if ns.a_to_b_ok else 'SIGNALLING'}",
            f"no signalling B->A {'ok' if ns.b_to_a_ok else 'SIGNALLING'}",
            f"max marginal gap  {frac(ns.max_marginal_gap)}",
            f"chsh win          {'n/a' if chsh is None else frac(chsh)}",
        ]) + "\n")
    return EXIT_OK if ns.ok else EXIT_VIOLATED


def cmd_box_chsh(args) -> int:
    table = as_conditional(parse_box(args.kind))
    try:
        value = chsh_win_probability(table)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    if args.output == "json":
        _emit(args, dumps({"kind": args.kind, "chsh": frac(value)}))
    else:
        _emit(args, f"chsh win probability of {args.kind}: {frac(value)}\n")
    return EXIT_OK


def _sampling(args) -> tuple[Optional[int], int]:
    if args.mode == "exact":
        return None, 0
    if args.samples is None or args.samples < 1:
        raise UsageError("monte-carlo mode needs --samples >= 1")
    if args.seed is None:
        raise UsageError("monte-carlo mode needs --seed")
    return args.samples, args.seed


def cmd_run(args) -> int:
    samples, seed = _sampling(args)
    spec = get_protocol(args.protocol, args.n_epsilon)
    report = security_report(spec, args.adversary, samples, seed)
    _emit(args, dumps(report_dict(report)) if args.output == "json" else report_table(report))
    return EXIT_OK if report.holds else EXIT_VIOLATED


def cmd_compose_demo(args) -> int:
    demo = composability_demo(args.n_epsilon)
    _emit(args, dumps(demo_dict(demo)) if args.output == "json" else demo_table(demo))
    return EXIT_OK


def _emit(args, text: str) -> None:
    sys.stdout.write(text)
    if getattr(args, "output_file", None):
        with open(args.output_file, "w") as fh:
            fh.write(text)


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("json", "table"), default="table")
    common.add_argument("--output-file", help="also write the report to this file")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--protocol", choices=sorted(PROTOCOLS), default="ot-commit")
    analysis.add_argument("--n-epsilon", type=_positive, default=1)
    analysis.add_argument("--mode", choices=("exact", "monte-carlo"), default="exact")
    analysis.add_argument("--samples", type=int, default=None)
    analysis.add_argument("--seed", type=int, default=None)

    parser = argparse.ArgumentParser(
        prog="boxcommit",
        description="Bit commitment over OT boxes and PR boxes, analysed exactly.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    box = sub.add_parser("box", help="static checks of a single box")
    box_sub = box.add_subparsers(dest="box_command", required=True)
    verify = box_sub.add_parser("verify", parents=[common], help="no-signalling and CHSH")
    verify.add_argument("kind")
    verify.set_defaults(func=cmd_box_verify)
    chsh = box_sub.add_parser("chsh", parents=[common], help="CHSH win probability")
    chsh.add_argument("kind")
    chsh.set_defaults(func=cmd_box_chsh)

    run = sub.add_parser("run", parents=[common, analysis], help="evaluate a protocol")
    run.add_argument("--adversary", choices=ADVERSARIES, default="search")
    run.set_defaults(func=cmd_run)

    attack = sub.add_parser("attack", parents=[common, analysis],
                            help="the delayed-input attack (run --adversary delayed)")
    attack.set_defaults(func=cmd_run, adversary="delayed", protocol="pr-commit")

    demo = sub.add_parser("compose-demo", parents=[common], help="real versus simulated OT boxes")
    demo.add_argument("--n-epsilon", type=_positive, default=1)
    demo.set_defaults(func=cmd_compose_demo)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InapplicableStrategy, ConfigurationError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GuardLimitExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
