"""The knowledge base: plan formalism, plan parser, and plan-base manager.

A plan is a pattern over the flow graph: pattern nodes mirror graph node
kinds, pattern edges mirror data/control edges, and predicates express the
value-level requirements that pure structure cannot (equalities over bound
constants, same-variable identity, operand commutability). Bug plans are
stand-alone patterns that additionally name the cliche they corrupt, which
drives goal-directed filtering.

Plan text grammar, one directive per line, `;` starts a comment:

    plan "<name>" kind=(cliche|bug) [corrupts="<name>"] category=(pl|pe|cbt)
    doc "<template with $slot and @role interpolation>"
    node <pid> kind=<NodeKind> [op=<OpCode>] [const=<int> | slot=$<ident>]
    sub  <pid> plan="<name>"
    data <pid>:<out_port> -> <pid>:<in_port>
    ctrl <pid> -> <pid> [label=(seq|true|false|back)]
    constraint <predicate>
    export <role> = <pid>
    end

Predicates: eq/ne/lt/le/gt/ge($slot, int-or-$slot), samevar(pid, pid),
distinctvar(pid, pid), commutable(pid). A `.plan` file holds one or more
plans; a plan base is a directory of such files loaded in lexicographic
filename order.

Edges to a `sub` pattern node address the sub-plan's exported nodes: port k
of a sub node is the node bound to the k-th export role in lexicographic
role order. Control edges to/from a sub node accept any node bound by the
sub-match.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .flowgraph import NodeKind, OpCode
from .source import SourceSpan


class PlanSyntaxError(Exception):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message


class PlanSemanticError(Exception):
    pass


class DuplicatePlan(Exception):
    def __init__(self, name: str):
        super().__init__(f"plan {name!r} already in base")
        self.name = name


class UnknownPlan(Exception):
    def __init__(self, name: str):
        super().__init__(f"no plan named {name!r} in base")
        self.name = name


COMPARISONS = ("eq", "ne", "lt", "le", "gt", "ge")
PREDICATE_OPS = COMPARISONS + ("samevar", "distinctvar", "commutable")


@dataclass(frozen=True)
class Predicate:
    op: str
    # slot args are "$name" strings, pid args bare strings, literals ints
    args: tuple[str | int, ...]

    def __str__(self) -> str:
        return f"{self.op}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class PatternNode:
    pid: str
    kind: NodeKind | None = None  # None for sub-plan references
    opcode: OpCode | None = None
    const: int | None = None
    slot: str | None = None
    subplan: str | None = None

    @property
    def is_sub(self) -> bool:
        return self.subplan is not None


PDataEdge = tuple[tuple[str, int], tuple[str, int]]
PCtrlEdge = tuple[str, str, str | None]  # label None matches any control edge


@dataclass(frozen=True)
class Plan:
    name: str
    kind: str  # cliche | bug
    category: str  # pl | pe | cbt
    corrupts: str | None
    doc_template: str
    pnodes: tuple[PatternNode, ...]
    pdata: tuple[PDataEdge, ...]
    pctrl: tuple[PCtrlEdge, ...]
    constraints: tuple[Predicate, ...]
    exports: tuple[tuple[str, str], ...]  # (role, pid), sorted by role

    def pnode(self, pid: str) -> PatternNode:
        for pn in self.pnodes:
            if pn.pid == pid:
                return pn
        raise KeyError(pid)

    def sub_pids(self) -> list[str]:
        return [pn.pid for pn in self.pnodes if pn.is_sub]

    def export_roles(self) -> list[str]:
        return [role for role, _ in self.exports]

    def commutable_pids(self) -> set[str]:
        return {str(p.args[0]) for p in self.constraints if p.op == "commutable"}

    def slots(self) -> list[str]:
        return [pn.slot for pn in self.pnodes if pn.slot is not None]


# ---------------------------------------------------------------------------
# Parsing

_STRING = r'"((?:[^"\\]|\\.)*)"'
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"

_PLAN_RE = re.compile(
    rf'^plan\s+{_STRING}\s+kind=(cliche|bug)(?:\s+corrupts={_STRING})?\s+category=(pl|pe|cbt)\s*$'
)
_DOC_RE = re.compile(rf"^doc\s+{_STRING}\s*$")
_NODE_RE = re.compile(
    rf"^node\s+({_IDENT})\s+kind=({_IDENT})"
    rf"(?:\s+op=({_IDENT}))?(?:\s+const=(-?\d+)|\s+slot=\$({_IDENT}))?\s*$"
)
_SUB_RE = re.compile(rf"^sub\s+({_IDENT})\s+plan={_STRING}\s*$")
_DATA_RE = re.compile(rf"^data\s+({_IDENT}):(\d+)\s*->\s*({_IDENT}):(\d+)\s*$")
_CTRL_RE = re.compile(rf"^ctrl\s+({_IDENT})\s*->\s*({_IDENT})(?:\s+label=(seq|true|false|back))?\s*$")
_CONSTRAINT_RE = re.compile(rf"^constraint\s+({_IDENT})\s*\(([^)]*)\)\s*$")
_EXPORT_RE = re.compile(rf"^export\s+({_IDENT})\s*=\s*({_IDENT})\s*$")

_MARKER_RE = re.compile(r"[$@]([A-Za-z_][A-Za-z0-9_]*)")


def strip_comment(raw: str) -> str:
    """Cut a `;` comment, leaving semicolons inside quoted strings alone."""
    in_string = False
    i = 0
    while i < len(raw):
        ch = raw[i]
        if in_string:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == ";":
            return raw[:i]
        i += 1
    return raw


def _unescape(s: str) -> str:
    return s.replace('\\"', '"').replace("\\\\", "\\")


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


class _PlanFileParser:
    def __init__(self, text: str, filename: str):
        self.lines = text.splitlines()
        self.filename = filename

    def span(self, lineno: int, col: int = 1) -> SourceSpan:
        return SourceSpan(self.filename, lineno, col, lineno, max(col, 1))

    def parse(self) -> list[Plan]:
        plans: list[Plan] = []
        current: dict | None = None
        header_line = 0
        for lineno, raw in enumerate(self.lines, start=1):
            line = strip_comment(raw).strip()
            if not line:
                continue
            if current is None:
                m = _PLAN_RE.match(line)
                if not m:
                    raise PlanSyntaxError(self.span(lineno), f"expected a plan header, got {raw.strip()!r}")
                name, kind, corrupts, category = m.groups()
                if (corrupts is not None) != (kind == "bug"):
                    raise PlanSyntaxError(self.span(lineno),
                                          "corrupts= is required on bug plans and forbidden otherwise")
                current = {
                    "name": _unescape(name), "kind": kind, "category": category,
                    "corrupts": _unescape(corrupts) if corrupts else None,
                    "doc": None, "nodes": [], "data": [], "ctrl": [],
                    "constraints": [], "exports": [],
                }
                header_line = lineno
                continue
            if line == "end":
                plans.append(self._finish(current, header_line))
                current = None
                continue
            self._directive(current, line, lineno)
        if current is not None:
            raise PlanSyntaxError(self.span(len(self.lines) + 1),
                                  f"plan {current['name']!r} is missing its end line")
        return plans

    def _directive(self, cur: dict, line: str, lineno: int) -> None:
        if m := _DOC_RE.match(line):
            cur["doc"] = _unescape(m.group(1))
            return
        if m := _NODE_RE.match(line):
            pid, kind_s, op_s, const_s, slot = m.groups()
            try:
                kind = NodeKind(kind_s)
            except ValueError:
                raise PlanSyntaxError(self.span(lineno), f"unknown node kind {kind_s!r}") from None
            opcode = None
            if op_s is not None:
                try:
                    opcode = OpCode(op_s)
                except ValueError:
                    raise PlanSyntaxError(self.span(lineno), f"unknown opcode {op_s!r}") from None
                if kind is not NodeKind.OP:
                    raise PlanSyntaxError(self.span(lineno), "op= is only meaningful on kind=OP nodes")
            if const_s is not None and kind is not NodeKind.CONST:
                raise PlanSyntaxError(self.span(lineno), "const= is only meaningful on kind=CONST nodes")
            cur["nodes"].append(PatternNode(pid, kind, opcode,
                                            int(const_s) if const_s is not None else None, slot))
            return
        if m := _SUB_RE.match(line):
            pid, plan_name = m.groups()
            cur["nodes"].append(PatternNode(pid, subplan=_unescape(plan_name)))
            return
        if m := _DATA_RE.match(line):
            a, po, b, pi = m.groups()
            cur["data"].append(((a, int(po)), (b, int(pi))))
            return
        if m := _CTRL_RE.match(line):
            a, b, label = m.groups()
            cur["ctrl"].append((a, b, label))
            return
        if m := _CONSTRAINT_RE.match(line):
            cur["constraints"].append(self._predicate(m.group(1), m.group(2), lineno))
            return
        if m := _EXPORT_RE.match(line):
            cur["exports"].append((m.group(1), m.group(2)))
            return
        raise PlanSyntaxError(self.span(lineno), f"unrecognized directive: {line!r}")

    def _predicate(self, op: str, argtext: str, lineno: int) -> Predicate:
        if op not in PREDICATE_OPS:
            raise PlanSyntaxError(self.span(lineno), f"unknown predicate {op!r}")
        args: list[str | int] = []
        parts = [p.strip() for p in argtext.split(",")] if argtext.strip() else []
        for part in parts:
            if re.fullmatch(r"-?\d+", part):
                args.append(int(part))
            elif re.fullmatch(rf"\${_IDENT}", part):
                args.append(part)
            elif re.fullmatch(_IDENT, part):
                args.append(part)
            else:
                raise PlanSyntaxError(self.span(lineno), f"bad predicate argument {part!r}")
        arity = 1 if op == "commutable" else 2
        if len(args) != arity:
            raise PlanSyntaxError(self.span(lineno), f"{op} takes {arity} argument(s)")
        if op in COMPARISONS:
            if not (isinstance(args[0], str) and args[0].startswith("$")):
                raise PlanSyntaxError(self.span(lineno), f"{op} compares a $slot to an int or $slot")
            if not (isinstance(args[1], int) or (isinstance(args[1], str) and args[1].startswith("$"))):
                raise PlanSyntaxError(self.span(lineno), f"{op} compares a $slot to an int or $slot")
        else:
            if any(not isinstance(a, str) or a.startswith("$") for a in args):
                raise PlanSyntaxError(self.span(lineno), f"{op} takes pattern-node ids")
        return Predicate(op, tuple(args))

    def _finish(self, cur: dict, header_line: int) -> Plan:
        plan = Plan(
            name=cur["name"], kind=cur["kind"], category=cur["category"], corrupts=cur["corrupts"],
            doc_template=cur["doc"] or "",
            pnodes=tuple(sorted(cur["nodes"], key=lambda n: n.pid)),
            pdata=tuple(sorted(cur["data"])),
            pctrl=tuple(sorted(cur["ctrl"], key=lambda e: (e[0], e[1], e[2] or ""))),
            constraints=tuple(cur["constraints"]),
            exports=tuple(sorted(cur["exports"])),
        )
        try:
            check_plan(plan)
        except PlanSemanticError as err:
            raise PlanSemanticError(f"plan {plan.name!r} (line {header_line}): {err}") from None
        return plan


def check_plan(plan: Plan) -> None:
    """Single-plan invariants; cross-base references are base_validate's job."""
    pids = [pn.pid for pn in plan.pnodes]
    if len(set(pids)) != len(pids):
        raise PlanSemanticError("duplicate pattern-node id")
    if not pids:
        raise PlanSemanticError("a plan needs at least one pattern node")
    pidset = set(pids)
    slots = plan.slots()
    if len(set(slots)) != len(slots):
        raise PlanSemanticError("a slot may be bound by only one pattern node")
    slotset = {f"${s}" for s in slots}

    for (a, _), (b, _) in plan.pdata:
        for pid in (a, b):
            if pid not in pidset:
                raise PlanSemanticError(f"data edge references unknown pattern node {pid!r}")
    for a, b, _ in plan.pctrl:
        for pid in (a, b):
            if pid not in pidset:
                raise PlanSemanticError(f"ctrl edge references unknown pattern node {pid!r}")
    for role, pid in plan.exports:
        if pid not in pidset:
            raise PlanSemanticError(f"export {role!r} references unknown pattern node {pid!r}")
        if plan.pnode(pid).is_sub:
            raise PlanSemanticError(f"export {role!r} must reference a node, not a sub-plan")
    roles = [role for role, _ in plan.exports]
    if len(set(roles)) != len(roles):
        raise PlanSemanticError("duplicate export role")

    for pred in plan.constraints:
        for arg in pred.args:
            if isinstance(arg, int):
                continue
            if arg.startswith("$"):
                if arg not in slotset:
                    raise PlanSemanticError(f"constraint references unbound slot {arg}")
            elif arg not in pidset:
                raise PlanSemanticError(f"constraint references unknown pattern node {arg!r}")

    for marker in _MARKER_RE.finditer(plan.doc_template):
        token = plan.doc_template[marker.start()]
        name = marker.group(1)
        if token == "$" and f"${name}" not in slotset:
            raise PlanSemanticError(f"doc template references unbound slot ${name}")
        if token == "@" and name not in set(roles):
            raise PlanSemanticError(f"doc template references unexported role @{name}")

    if len(pids) > 1:
        adjacency: dict[str, set[str]] = {pid: set() for pid in pids}
        for (a, _), (b, _) in plan.pdata:
            adjacency[a].add(b)
            adjacency[b].add(a)
        for a, b, _ in plan.pctrl:
            adjacency[a].add(b)
            adjacency[b].add(a)
        seen = {pids[0]}
        stack = [pids[0]]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if seen != pidset:
            raise PlanSemanticError("pattern graph is not connected")


def parse_plans(text: str, filename: str = "<plan>") -> list[Plan]:
    return _PlanFileParser(text, filename).parse()


def parse_plan(text: str, filename: str = "<plan>") -> Plan:
    """Parse exactly one plan."""
    plans = parse_plans(text, filename)
    if len(plans) != 1:
        raise PlanSemanticError(f"expected exactly one plan, found {len(plans)}")
    return plans[0]


# ---------------------------------------------------------------------------
# Canonical printing: parse_plan(print_plan(p)) is structurally p.

def print_plan(plan: Plan) -> str:
    lines = [_header_line(plan)]
    if plan.doc_template:
        lines.append(f'doc "{_escape(plan.doc_template)}"')
    for pn in plan.pnodes:
        if pn.is_sub:
            lines.append(f'sub {pn.pid} plan="{_escape(pn.subplan)}"')
        else:
            bits = [f"node {pn.pid} kind={pn.kind.value}"]
            if pn.opcode is not None:
                bits.append(f"op={pn.opcode.value}")
            if pn.const is not None:
                bits.append(f"const={pn.const}")
            if pn.slot is not None:
                bits.append(f"slot=${pn.slot}")
            lines.append(" ".join(bits))
    for (a, po), (b, pi) in plan.pdata:
        lines.append(f"data {a}:{po} -> {b}:{pi}")
    for a, b, label in plan.pctrl:
        suffix = f" label={label}" if label is not None else ""
        lines.append(f"ctrl {a} -> {b}{suffix}")
    for pred in plan.constraints:
        lines.append(f"constraint {pred}")
    for role, pid in plan.exports:
        lines.append(f"export {role} = {pid}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _header_line(plan: Plan) -> str:
    bits = [f'plan "{_escape(plan.name)}" kind={plan.kind}']
    if plan.corrupts is not None:
        bits.append(f'corrupts="{_escape(plan.corrupts)}"')
    bits.append(f"category={plan.category}")
    return " ".join(bits)


# ---------------------------------------------------------------------------
# Plan base

@dataclass
class PlanBase:
    plans: dict[str, Plan] = field(default_factory=dict)

    def names(self) -> list[str]:
        return sorted(self.plans)

    def get(self, name: str) -> Plan:
        if name not in self.plans:
            raise UnknownPlan(name)
        return self.plans[name]

    def __contains__(self, name: str) -> bool:
        return name in self.plans


def base_add(base: PlanBase, plan: Plan) -> PlanBase:
    if plan.name in base.plans:
        raise DuplicatePlan(plan.name)
    base.plans[plan.name] = plan
    return base


def base_remove(base: PlanBase, name: str) -> PlanBase:
    if name not in base.plans:
        raise UnknownPlan(name)
    del base.plans[name]
    return base


def base_list(base: PlanBase, kind: str | None = None, category: str | None = None) -> list[str]:
    return sorted(
        name
        for name, plan in base.plans.items()
        if (kind is None or plan.kind == kind) and (category is None or plan.category == category)
    )


def base_validate(base: PlanBase) -> list[str]:
    """Cross-plan diagnostics: dangling references, bad targets, sub-plan cycles."""
    diagnostics: list[str] = []
    for name in base.names():
        plan = base.plans[name]
        if plan.corrupts is not None:
            target = base.plans.get(plan.corrupts)
            if target is None:
                diagnostics.append(f"{name}: corrupts unknown plan {plan.corrupts!r}")
            elif target.kind != "cliche":
                diagnostics.append(f"{name}: corrupts {plan.corrupts!r}, which is not a cliche")
        for pn in plan.pnodes:
            if pn.is_sub:
                target = base.plans.get(pn.subplan)
                if target is None:
                    diagnostics.append(f"{name}: sub {pn.pid} references unknown plan {pn.subplan!r}")
                elif target.kind != "cliche":
                    diagnostics.append(f"{name}: sub {pn.pid} references bug plan {pn.subplan!r}")

    state: dict[str, int] = {}

    def visit(name: str, trail: list[str]) -> None:
        state[name] = 1
        for pn in base.plans[name].pnodes:
            if pn.is_sub and pn.subplan in base.plans:
                if state.get(pn.subplan, 0) == 1:
                    cycle = trail[trail.index(pn.subplan):] if pn.subplan in trail else trail
                    diagnostics.append(
                        f"sub-plan cycle: {' -> '.join(cycle + [name, pn.subplan])}")
                elif state.get(pn.subplan, 0) == 0:
                    visit(pn.subplan, trail + [name])
        state[name] = 2

    for name in base.names():
        if state.get(name, 0) == 0:
            visit(name, [])
    return diagnostics


def closure(base: PlanBase, goals: list[str] | set[str]) -> list[str]:
    """Goals plus transitive sub-plans plus bug plans corrupting anything in that set.

    This is the filtering complement: only these plans are worth matching
    when the specification names its intended cliches. Monotone in goals and
    idempotent; result sorted by name.
    """
    selected: set[str] = set()
    frontier = list(goals)
    for name in frontier:
        if name not in base.plans:
            raise UnknownPlan(name)
    while frontier:
        name = frontier.pop()
        if name in selected:
            continue
        selected.add(name)
        for pn in base.plans[name].pnodes:
            if pn.is_sub and pn.subplan in base.plans and pn.subplan not in selected:
                frontier.append(pn.subplan)
        for other_name, other in base.plans.items():
            if other.corrupts == name and other_name not in selected:
                frontier.append(other_name)
    return sorted(selected)


def dependency_order(base: PlanBase, names: list[str]) -> list[list[str]]:
    """Names grouped into levels: every plan's sub-plans sit in earlier levels.

    Plans within one level are independent, so the matcher may run them in
    parallel; level-internal name order keeps output deterministic.
    """
    level: dict[str, int] = {}

    def depth(name: str) -> int:
        if name in level:
            return level[name]
        level[name] = 0  # cycle guard; base_validate reports real cycles
        subs = [pn.subplan for pn in base.plans[name].pnodes if pn.is_sub and pn.subplan in base.plans]
        level[name] = 1 + max((depth(s) for s in subs), default=-1)
        return level[name]

    for name in names:
        depth(name)
    grouped: dict[int, list[str]] = {}
    for name in names:
        grouped.setdefault(level[name], []).append(name)
    return [sorted(grouped[d]) for d in sorted(grouped)]


def load_plan_base(directory: str | Path) -> PlanBase:
    """Load every `.plan` file in the directory, lexicographic filename order."""
    base = PlanBase()
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"plan base directory not found: {root}")
    for path in sorted(root.glob("*.plan")):
        for plan in parse_plans(path.read_text(encoding="utf-8"), str(path)):
            base_add(base, plan)
    return base
