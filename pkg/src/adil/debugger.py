"""Verification of a program against its specification, and fault localization.

The specification names the cliches the program is supposed to implement.
Each goal is verified by matching: an accepted match means the goal is
RECOGNIZED; an accepted corrupting bug cliche, or a structurally close
near-miss whose constraints fail, means BUGGY; anything else means MISSING.
Findings carry a pinpointed source span computed from the graph nodes that
witness the fault, and the report never touches the program text itself:
this debugger explains, it does not correct.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from . import explain
from .flowgraph import FlowGraph, UnboundVariable
from .matcher import MatchResult, Recognition, SearchBudget, binding_values, recognize
from .planlib import Plan, PlanBase, strip_comment
from .source import SourceSpan, span_hull


class SpecSyntaxError(Exception):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message


@dataclass(frozen=True)
class Goal:
    name: str
    required: bool


@dataclass(frozen=True)
class ProgramSpec:
    title: str
    goals: tuple[Goal, ...]
    notes: tuple[str, ...] = ()


_SPEC_STRING = r'"((?:[^"\\]|\\.)*)"'


def parse_spec(text: str, filename: str = "<spec>") -> ProgramSpec:
    """Parse a `.spec` file: spec "<title>" / goal "<name>" required|optional / note / end."""
    title: str | None = None
    goals: list[Goal] = []
    notes: list[str] = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw).strip()
        span = SourceSpan(filename, lineno, 1, lineno, max(1, len(raw)))
        if not line:
            continue
        if ended:
            raise SpecSyntaxError(span, "content after end")
        if m := re.fullmatch(rf"spec\s+{_SPEC_STRING}", line):
            if title is not None:
                raise SpecSyntaxError(span, "duplicate spec line")
            title = m.group(1)
        elif m := re.fullmatch(rf"goal\s+{_SPEC_STRING}\s+(required|optional)", line):
            name = m.group(1)
            if any(g.name == name for g in goals):
                raise SpecSyntaxError(span, f"duplicate goal {name!r}")
            goals.append(Goal(name, m.group(2) == "required"))
        elif m := re.fullmatch(rf"note\s+{_SPEC_STRING}", line):
            notes.append(m.group(1))
        elif line == "end":
            ended = True
        else:
            raise SpecSyntaxError(span, f"unrecognized spec line: {line!r}")
    tail = SourceSpan(filename, max(1, len(text.splitlines())), 1, max(1, len(text.splitlines())), 1)
    if title is None:
        raise SpecSyntaxError(tail, "missing spec title line")
    if not ended:
        raise SpecSyntaxError(tail, "missing end line")
    if not goals:
        raise SpecSyntaxError(tail, "a specification needs at least one goal")
    return ProgramSpec(title, tuple(goals), tuple(notes))


# ---------------------------------------------------------------------------
# Findings and reports

class FindingKind(Enum):
    BUG_CLICHE = "BUG_CLICHE"
    CONSTRAINT_VIOLATION = "CONSTRAINT_VIOLATION"
    MISSING_GOAL = "MISSING_GOAL"
    UNBOUND_VARIABLE = "UNBOUND_VARIABLE"


_KIND_ORDER = {kind: i for i, kind in enumerate(FindingKind)}


@dataclass(frozen=True)
class Finding:
    kind: FindingKind
    goal: str
    bug_plan: str | None
    span: SourceSpan
    evidence: str
    confidence: Fraction
    # render support, never serialized: the match backing this finding and
    # the plan whose doc template explains it
    match: MatchResult | None = field(default=None, compare=False)
    doc_plan: str | None = field(default=None, compare=False)
    doc_env: tuple[dict[str, str], dict[str, str]] | None = field(default=None, compare=False)


@dataclass
class DiagnosticReport:
    program: str
    spec_title: str
    verdicts: dict[str, str]  # goal -> RECOGNIZED | BUGGY | MISSING
    findings: tuple[Finding, ...]
    recognized: dict[str, MatchResult]  # goal -> accepted match
    meaning: str | None
    budget_truncated: bool


def pinpoint(nodes: set[int] | list[int], g: FlowGraph) -> SourceSpan:
    """Smallest source span covering every given node's annotation."""
    ids = sorted(set(nodes))
    if not ids:
        raise ValueError("pinpoint needs at least one node")
    return span_hull([g.nodes[nid].ann.span for nid in ids])


# ---------------------------------------------------------------------------
# Diagnosis

def diagnose(g: FlowGraph, spec: ProgramSpec, base: PlanBase,
             budget: SearchBudget | None = None, *, jobs: int = 1,
             use_filtering: bool = True) -> DiagnosticReport:
    """Verify each spec goal against the graph and localize what went wrong."""
    budget = budget or SearchBudget()
    goal_names = [goal.name for goal in spec.goals]
    for name in goal_names:
        base.get(name)  # unresolvable goals are a caller error, not a finding
    rec = recognize(g, base, goal_names if use_filtering else None, budget, jobs=jobs)

    theta = Fraction(budget.theta).limit_denominator(10**6)
    findings: list[Finding] = []
    verdicts: dict[str, str] = {}
    recognized: dict[str, MatchResult] = {}

    for goal in spec.goals:
        relevant = [goal.name] + _sub_closure(base, goal.name)
        goal_findings: list[Finding] = []

        accepted = _best(rec.accepted(goal.name))
        if accepted is not None:
            recognized[goal.name] = accepted

        for bug_name in sorted(base.plans):
            bug = base.plans[bug_name]
            if bug.kind != "bug" or bug.corrupts not in relevant:
                continue
            bug_match = _best(rec.accepted(bug_name))
            if bug_match is None:
                continue
            goal_findings.append(_bug_finding(goal.name, bug, bug_match, rec, g, base))

        if accepted is None:
            for plan_name in relevant:
                near = _best_near_miss(rec, plan_name)
                if near is None or near.score < theta:
                    continue
                failures = [o for o in near.constraint_outcomes if o.evaluated and not o.passed]
                for outcome in failures:
                    goal_findings.append(
                        _violation_finding(goal.name, base.plans[plan_name], near, outcome, g))

        if accepted is not None and not goal_findings:
            verdicts[goal.name] = "RECOGNIZED"
        elif goal_findings:
            verdicts[goal.name] = "BUGGY"
        else:
            verdicts[goal.name] = "MISSING"
            if goal.required:
                goal_findings.append(_missing_finding(goal.name, relevant, rec, g))
        findings.extend(goal_findings)

    findings.sort(key=lambda f: (f.span.line_start, _KIND_ORDER[f.kind], f.goal, f.bug_plan or ""))

    meaning: str | None = None
    if all(verdicts[goal.name] == "RECOGNIZED" for goal in spec.goals if goal.required):
        shown = [(goal.name, recognized[goal.name]) for goal in spec.goals
                 if goal.name in recognized]
        meaning = explain.compose_meaning(shown, base, g)

    return DiagnosticReport(
        program=g.nodes[g.entry].ann.span.file,
        spec_title=spec.title,
        verdicts=verdicts,
        findings=tuple(findings),
        recognized=recognized,
        meaning=meaning,
        budget_truncated=bool(rec.truncated),
    )


def unbound_report(program: str, spec: ProgramSpec, err: UnboundVariable) -> DiagnosticReport:
    """Degenerate report for programs whose graph cannot be finalized."""
    finding = Finding(
        kind=FindingKind.UNBOUND_VARIABLE,
        goal="",
        bug_plan=None,
        span=err.span,
        evidence=f"variable {err.name!r} may be read before it is assigned",
        confidence=Fraction(1),
    )
    return DiagnosticReport(
        program=program,
        spec_title=spec.title,
        verdicts={goal.name: "MISSING" for goal in spec.goals},
        findings=(finding,),
        recognized={},
        meaning=None,
        budget_truncated=False,
    )


def _doc_env(plan: Plan, m: MatchResult, g: FlowGraph) -> tuple[dict[str, str], dict[str, str]]:
    """Template values for a finding; unbound parts of a near-miss render as gaps."""
    slots = {name: "?" for name in plan.slots()}
    roles = {role: "(unmatched)" for role in plan.export_roles()}
    bound_slots, bound_roles = binding_values(plan, m, g)
    slots.update(bound_slots)
    roles.update(bound_roles)
    return slots, roles


def _best(results: list[MatchResult]) -> MatchResult | None:
    return results[0] if results else None


def _best_near_miss(rec: Recognition, plan_name: str) -> MatchResult | None:
    for m in rec.by_plan.get(plan_name, []):
        if not m.accepted:
            return m  # results are already best-first
    return None


def _sub_closure(base: PlanBase, name: str) -> list[str]:
    out: list[str] = []
    stack = [name]
    while stack:
        for pn in base.plans[stack.pop()].pnodes:
            if pn.is_sub and pn.subplan in base.plans and pn.subplan not in out:
                out.append(pn.subplan)
                stack.append(pn.subplan)
    return out


def _bug_finding(goal: str, bug: Plan, bug_match: MatchResult, rec: Recognition,
                 g: FlowGraph, base: PlanBase) -> Finding:
    # Pinpoint the delta: what the bug pattern binds beyond the portion of
    # the corrupted cliche that still matches. Accepted sub-matches inside
    # the bug pattern are intact cliche structure, not fault evidence.
    bug_nodes = bug_match.real_nodes()
    delta = set(bug_nodes)
    for sub in bug_match.sub_matches.values():
        delta -= sub.real_nodes()
    near = _best_near_miss(rec, bug.corrupts)
    if near is not None:
        delta -= near.real_nodes()
    if not delta:
        delta = bug_nodes
    slots, _ = binding_values(bug, bug_match, g)
    evidence = "bug pattern fully matched"
    if slots:
        evidence += " (" + ", ".join(f"{k}={v}" for k, v in sorted(slots.items())) + ")"
    return Finding(
        kind=FindingKind.BUG_CLICHE,
        goal=goal,
        bug_plan=bug.name,
        span=pinpoint(delta, g),
        evidence=evidence,
        confidence=bug_match.score,
        match=bug_match,
        doc_plan=bug.name,
        doc_env=_doc_env(bug, bug_match, g),
    )


def _violation_finding(goal: str, plan: Plan, near: MatchResult, outcome, g: FlowGraph) -> Finding:
    witness_pids: list[str] = []
    for arg in outcome.predicate.args:
        if isinstance(arg, int):
            continue
        if arg.startswith("$"):
            slot_name = arg[1:]
            witness_pids.extend(pn.pid for pn in plan.pnodes if pn.slot == slot_name)
        else:
            witness_pids.append(arg)
    witness_nodes = {near.binding[pid] for pid in witness_pids
                     if pid in near.binding and near.binding[pid] >= 0}
    span = pinpoint(witness_nodes, g) if witness_nodes else span_hull(list(near.spans))
    # smoothed passing fraction: the structural match itself counts for one,
    # keeping confidence strictly positive even when every predicate fails
    passing = 1 + sum(1 for o in near.constraint_outcomes if o.passed)
    total = 1 + len(near.constraint_outcomes)
    return Finding(
        kind=FindingKind.CONSTRAINT_VIOLATION,
        goal=goal,
        bug_plan=None,
        span=span,
        evidence=outcome.detail,
        confidence=near.score * Fraction(passing, total),
        match=near,
        doc_plan=plan.name,
        doc_env=_doc_env(plan, near, g),
    )


def _missing_finding(goal: str, relevant: list[str], rec: Recognition, g: FlowGraph) -> Finding:
    best: MatchResult | None = None
    for plan_name in relevant:
        candidate = _best(rec.by_plan.get(plan_name, []))
        if candidate is not None and (best is None or candidate.score > best.score):
            best = candidate
    if best is None:
        evidence = "no part of the expected structure was found"
    else:
        evidence = f"best structural match scored {best.score}"
    if rec.truncated:
        evidence += " (search was truncated by the matching budget)"
    return Finding(
        kind=FindingKind.MISSING_GOAL,
        goal=goal,
        bug_plan=None,
        span=g.nodes[g.entry].ann.span,
        evidence=evidence,
        confidence=Fraction(1),
    )


# ---------------------------------------------------------------------------
# Report serialization: stable key order, stable array orders

def _span_json(span: SourceSpan) -> dict:
    return {
        "line_start": span.line_start,
        "col_start": span.col_start,
        "line_end": span.line_end,
        "col_end": span.col_end,
    }


def _binding_json(m: MatchResult) -> dict:
    out: dict = {}
    for pid in sorted(m.binding):
        nid = m.binding[pid]
        if nid >= 0:
            out[pid] = nid
        else:
            sub = m.sub_matches[pid]
            out[pid] = {"plan": sub.plan, "binding": _binding_json(sub)}
    return out


def report_to_json(report: DiagnosticReport) -> str:
    doc = {
        "program": report.program,
        "spec": report.spec_title,
        "verdicts": dict(report.verdicts),
        "findings": [
            {
                "kind": f.kind.value,
                "goal": f.goal,
                "bug_plan": f.bug_plan,
                "span": _span_json(f.span),
                "evidence": f.evidence,
                "confidence": float(f.confidence),
            }
            for f in report.findings
        ],
        "recognized": [
            {
                "goal": goal,
                "plan": m.plan,
                "score": float(m.score),
                "binding": _binding_json(m),
            }
            for goal, m in sorted(report.recognized.items())
        ],
        "meaning": report.meaning,
        "budget_truncated": report.budget_truncated,
    }
    return json.dumps(doc, indent=2) + "\n"
