"""Command-line driver.

    adil analyze <prog.c> --spec <file> [--plans DIR] [--budget N] [--theta X]
                 [--report-json PATH] [--max-findings N] [--jobs N]
    adil graph <prog.c> [--json]
    adil plan <check|list|add|rm> [...]
    adil acquire <prog.c> --name <n> [-o FILE] [--accept] [--plans DIR]

Exit codes: 0 all required goals recognized; 1 findings reported (or a plan
management failure); 2 usage or parse errors; 3 search truncated by the
budget with nothing found. Flags beat the ADIL_PLANS / ADIL_BUDGET /
ADIL_THETA environment variables, which beat the defaults.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import acquire as acq
from . import debugger, explain, flowgraph, frontend, planlib
from .matcher import SearchBudget

_USAGE_ERRORS = (
    frontend.LexError,
    frontend.CSyntaxError,
    debugger.SpecSyntaxError,
    planlib.PlanSyntaxError,
    planlib.PlanSemanticError,
    planlib.UnknownPlan,
    FileNotFoundError,
    ValueError,  # e.g. several functions and no main
)


def _env(name: str, default: str) -> str:
    return os.environ.get(name, default)


def _add_plans_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--plans", default=_env("ADIL_PLANS", "plans"),
                   help="plan base directory (default ./plans or $ADIL_PLANS)")


def _budget_from(args: argparse.Namespace) -> SearchBudget:
    return SearchBudget(max_extension_steps=args.budget, theta=args.theta)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adil", description="knowledge-based static debugger")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="diagnose a program against its specification")
    p.add_argument("program", help="C-subset source file")
    p.add_argument("--spec", required=True, help="specification file (.spec)")
    _add_plans_flag(p)
    p.add_argument("--budget", type=int, default=int(_env("ADIL_BUDGET", "1000000")))
    p.add_argument("--theta", type=float, default=float(_env("ADIL_THETA", "0.6")))
    p.add_argument("--report-json", default=None, help="also write the JSON report here")
    p.add_argument("--max-findings", type=int, default=None,
                   help="show at most this many findings")
    p.add_argument("--jobs", type=int, default=1, help="matcher worker threads")

    p = sub.add_parser("graph", help="dump a program's annotated flow graph")
    p.add_argument("program")
    p.add_argument("--json", action="store_true", help="JSON instead of Graphviz DOT")

    p = sub.add_parser("plan", help="manage the plan base")
    plan_sub = p.add_subparsers(dest="plan_command", required=True)
    q = plan_sub.add_parser("check", help="validate the plan base")
    _add_plans_flag(q)
    q = plan_sub.add_parser("list", help="list plans")
    _add_plans_flag(q)
    q.add_argument("--kind", choices=["cliche", "bug"], default=None)
    q.add_argument("--category", choices=["pl", "pe", "cbt"], default=None)
    q = plan_sub.add_parser("add", help="add the plans in a file to the base")
    q.add_argument("file")
    _add_plans_flag(q)
    q = plan_sub.add_parser("rm", help="remove a plan from the base")
    q.add_argument("name")
    _add_plans_flag(q)

    p = sub.add_parser("acquire", help="draft a plan from an exemplar program")
    p.add_argument("program")
    p.add_argument("--name", required=True, help="name for the drafted plan")
    p.add_argument("-o", "--output", default=None, help="draft file (default <name>.plan)")
    p.add_argument("--accept", action="store_true",
                   help="install the reviewed draft into the plan base")
    _add_plans_flag(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as err:  # argparse exits on usage errors and --help
        code = err.code if isinstance(err.code, int) else 2
        return 0 if code == 0 else 2
    try:
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "graph":
            return cmd_graph(args)
        if args.command == "plan":
            return cmd_plan(args)
        if args.command == "acquire":
            return cmd_acquire(args)
        raise AssertionError(args.command)
    except _USAGE_ERRORS as err:
        print(f"adil: {err}", file=sys.stderr)
        return 2


def _load_base(plans_dir: str) -> planlib.PlanBase:
    base = planlib.load_plan_base(plans_dir)
    problems = planlib.base_validate(base)
    if problems:
        raise planlib.PlanSemanticError(
            f"plan base {plans_dir!r} is invalid: " + "; ".join(problems))
    return base


def _parse_program(path: str) -> frontend.Ast:
    source = Path(path).read_text(encoding="utf-8")
    return frontend.desugar(frontend.parse_c(source, filename=path))


def cmd_analyze(args: argparse.Namespace) -> int:
    source = Path(args.program).read_text(encoding="utf-8")
    spec = debugger.parse_spec(Path(args.spec).read_text(encoding="utf-8"), args.spec)
    base = _load_base(args.plans)
    ast = frontend.desugar(frontend.parse_c(source, filename=args.program))
    try:
        g = flowgraph.build_flow_graph(ast)
        report = debugger.diagnose(g, spec, base, _budget_from(args), jobs=args.jobs)
    except flowgraph.UnboundVariable as err:
        report = debugger.unbound_report(args.program, spec, err)

    if args.max_findings is not None:
        report.findings = report.findings[: args.max_findings]
    explanation = explain.render(report, source, base)
    sys.stdout.write(explain.render_text(explanation))
    if args.report_json:
        Path(args.report_json).write_text(debugger.report_to_json(report), encoding="utf-8")

    if report.findings:
        return 1
    if report.budget_truncated:
        return 3
    return 0


def cmd_graph(args: argparse.Namespace) -> int:
    ast = _parse_program(args.program)
    try:
        g = flowgraph.build_flow_graph(ast)
    except flowgraph.UnboundVariable as err:
        print(f"adil: {err}", file=sys.stderr)
        return 1
    sys.stdout.write(flowgraph.to_json(g) if args.json else flowgraph.to_dot(g))
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    if args.plan_command == "check":
        base = planlib.load_plan_base(args.plans)
        problems = planlib.base_validate(base)
        for problem in problems:
            print(problem)
        print(f"{len(base.plans)} plan(s), {len(problems)} problem(s)")
        return 0 if not problems else 1
    if args.plan_command == "list":
        base = planlib.load_plan_base(args.plans)
        for name in planlib.base_list(base, kind=args.kind, category=args.category):
            plan = base.plans[name]
            print(f"{name}  kind={plan.kind} category={plan.category}"
                  + (f" corrupts={plan.corrupts}" if plan.corrupts else ""))
        return 0
    if args.plan_command == "add":
        base = planlib.load_plan_base(args.plans)
        new_plans = planlib.parse_plans(Path(args.file).read_text(encoding="utf-8"), args.file)
        try:
            for plan in new_plans:
                planlib.base_add(base, plan)
        except planlib.DuplicatePlan as err:
            print(f"adil: {err}", file=sys.stderr)
            return 1
        for plan in new_plans:
            (Path(args.plans) / f"{plan.name}.plan").write_text(
                planlib.print_plan(plan), encoding="utf-8")
            print(f"added {plan.name}")
        return 0
    if args.plan_command == "rm":
        root = Path(args.plans)
        if not root.is_dir():
            raise FileNotFoundError(f"plan base directory not found: {root}")
        for path in sorted(root.glob("*.plan")):
            plans = planlib.parse_plans(path.read_text(encoding="utf-8"), str(path))
            if any(p.name == args.name for p in plans):
                kept = [p for p in plans if p.name != args.name]
                if kept:
                    path.write_text("".join(planlib.print_plan(p) for p in kept), encoding="utf-8")
                else:
                    path.unlink()
                print(f"removed {args.name}")
                return 0
        print(f"adil: no plan named {args.name!r} in {args.plans}", file=sys.stderr)
        return 1
    raise AssertionError(args.plan_command)


def cmd_acquire(args: argparse.Namespace) -> int:
    draft_path = Path(args.output or f"{args.name}.plan")
    if args.accept:
        if not draft_path.is_file():
            print(f"adil: no draft at {draft_path}; run acquire without --accept first",
                  file=sys.stderr)
            return 2
        base = _load_base(args.plans)
        plans = planlib.parse_plans(draft_path.read_text(encoding="utf-8"), str(draft_path))
        try:
            for plan in plans:
                planlib.base_add(base, plan)
        except planlib.DuplicatePlan as err:
            print(f"adil: {err}", file=sys.stderr)
            return 1
        for plan in plans:
            (Path(args.plans) / f"{plan.name}.plan").write_text(
                planlib.print_plan(plan), encoding="utf-8")
            print(f"installed {plan.name} into {args.plans}")
        return 0

    ast = _parse_program(args.program)
    try:
        draft = acq.acquire_plan(ast, args.name)
    except acq.AcquireError as err:
        print(f"adil: {err}", file=sys.stderr)
        return 1
    draft_path.write_text(acq.review_stub(draft), encoding="utf-8")
    print(f"draft written to {draft_path}; review it, then re-run with --accept")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
