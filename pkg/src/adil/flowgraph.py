"""Annotated flow graph: the language-independent program representation.

Values are threaded SSA-style: every assignment's right-hand side becomes a
fresh value node, control merges insert JOIN nodes (in0 = then/initial value,
in1 = else/back value), and every loop contributes one LOOPHEAD marker plus a
single back-labeled control edge. Plain copies (`y = x;`) create no node;
"same variable" is therefore a property of the value threading, not of names,
which is what makes plan matching independent of the surface language.

A local array declaration binds the array to a fresh PARAM node (role
"array"): element-level initialization tracking is out of scope, so arrays
count as initialized storage from their declaration on. Scalars stay unbound
until assigned, and a read of an unbound scalar raises UnboundVariable, the
one dataflow fact reported ahead of matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from . import frontend as fe
from .source import SourceSpan, span_hull


class NodeKind(Enum):
    ENTRY = "ENTRY"
    EXIT = "EXIT"
    CONST = "CONST"
    PARAM = "PARAM"
    OP = "OP"
    TEST = "TEST"
    JOIN = "JOIN"
    LOOPHEAD = "LOOPHEAD"
    INPUT = "INPUT"
    OUTPUT = "OUTPUT"
    AREAD = "AREAD"
    AWRITE = "AWRITE"
    CALL = "CALL"


class OpCode(Enum):
    ADD = "ADD"
    SUB = "SUB"
    MUL = "MUL"
    DIV = "DIV"
    MOD = "MOD"
    LT = "LT"
    LE = "LE"
    GT = "GT"
    GE = "GE"
    EQ = "EQ"
    NE = "NE"
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    NEG = "NEG"


COMMUTATIVE = {OpCode.ADD, OpCode.MUL, OpCode.AND, OpCode.OR, OpCode.EQ, OpCode.NE}

_BINOP = {
    "+": OpCode.ADD, "-": OpCode.SUB, "*": OpCode.MUL, "/": OpCode.DIV, "%": OpCode.MOD,
    "<": OpCode.LT, "<=": OpCode.LE, ">": OpCode.GT, ">=": OpCode.GE,
    "==": OpCode.EQ, "!=": OpCode.NE, "&&": OpCode.AND, "||": OpCode.OR,
}
_UNOP = {"!": OpCode.NOT, "-": OpCode.NEG}


class UnboundVariable(Exception):
    """A variable is read before any assignment reaches it on some path."""

    def __init__(self, name: str, span: SourceSpan):
        super().__init__(f"{span}: variable {name!r} may be read before it is assigned")
        self.name = name
        self.span = span


@dataclass(frozen=True)
class Annotation:
    span: SourceSpan
    var_name: str | None = None
    role: str | None = None


@dataclass(frozen=True)
class GraphNode:
    id: int
    kind: NodeKind
    in_ports: int
    out_ports: int
    ann: Annotation
    opcode: OpCode | None = None
    value: int | None = None


DataEdge = tuple[tuple[int, int], tuple[int, int]]  # (src, out_port) -> (dst, in_port)
CtrlEdge = tuple[int, int, str]  # src -> dst with label seq|true|false|back


@dataclass(eq=False)
class FlowGraph:
    nodes: dict[int, GraphNode]
    data_edges: frozenset[DataEdge]
    ctrl_edges: frozenset[CtrlEdge]
    entry: int
    exit: int
    # adjacency caches, built once in __post_init__
    _producers: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict, repr=False)
    _consumers: dict[tuple[int, int], list[tuple[int, int]]] = field(default_factory=dict, repr=False)
    _ctrl_out: dict[int, list[tuple[int, str]]] = field(default_factory=dict, repr=False)
    _ctrl_in: dict[int, list[tuple[int, str]]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for (src, op), (dst, ip) in sorted(self.data_edges):
            self._producers[(dst, ip)] = (src, op)
            self._consumers.setdefault((src, op), []).append((dst, ip))
        for src, dst, label in sorted(self.ctrl_edges):
            self._ctrl_out.setdefault(src, []).append((dst, label))
            self._ctrl_in.setdefault(dst, []).append((src, label))

    def producer(self, node: int, in_port: int) -> tuple[int, int] | None:
        return self._producers.get((node, in_port))

    def consumers(self, node: int, out_port: int) -> list[tuple[int, int]]:
        return self._consumers.get((node, out_port), [])

    def ctrl_succs(self, node: int) -> list[tuple[int, str]]:
        return self._ctrl_out.get(node, [])

    def ctrl_preds(self, node: int) -> list[tuple[int, str]]:
        return self._ctrl_in.get(node, [])


# ---------------------------------------------------------------------------
# Builder

_Ref = tuple[int, int]  # (node id, out port)


class _Builder:
    def __init__(self) -> None:
        self.nodes: dict[int, GraphNode] = {}
        self.data_edges: set[DataEdge] = set()
        self.ctrl_edges: set[CtrlEdge] = set()
        self.frontier: list[tuple[int, str]] = []
        # scoping: names resolve to slot ids; env maps slots to value refs
        self.scopes: list[dict[str, int]] = []
        self.slot_names: dict[int, str] = {}
        self.slot_is_array: dict[int, bool] = {}
        self.slot_order: dict[int, int] = {}
        self.env: dict[int, _Ref] = {}
        self.next_slot = 0
        self.returns: list[tuple[_Ref, list[tuple[int, str]]]] = []

    # -- nodes and edges

    def node(self, kind: NodeKind, span: SourceSpan, *, in_ports: int = 0, out_ports: int = 0,
             opcode: OpCode | None = None, value: int | None = None,
             var_name: str | None = None, role: str | None = None) -> int:
        nid = len(self.nodes)
        self.nodes[nid] = GraphNode(nid, kind, in_ports, out_ports,
                                    Annotation(span, var_name, role), opcode, value)
        for tail, label in self.frontier:
            self.ctrl_edges.add((tail, nid, label))
        self.frontier = [(nid, "seq")]
        return nid

    def data(self, src: _Ref, dst: int, in_port: int) -> None:
        self.data_edges.add((src, (dst, in_port)))

    def rename(self, nid: int, name: str) -> None:
        node = self.nodes[nid]
        if node.ann.var_name is None:
            self.nodes[nid] = GraphNode(node.id, node.kind, node.in_ports, node.out_ports,
                                        Annotation(node.ann.span, name, node.ann.role),
                                        node.opcode, node.value)

    # -- variable slots

    def declare(self, name: str, is_array: bool) -> int:
        slot = self.next_slot
        self.next_slot += 1
        self.scopes[-1][name] = slot
        self.slot_names[slot] = name
        self.slot_is_array[slot] = is_array
        self.slot_order[slot] = slot
        return slot

    def resolve(self, name: str) -> int:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise KeyError(name)  # parser guarantees declarations; defensive only

    # -- statements

    def build_function(self, func: fe.FunctionDecl) -> FlowGraph:
        self.node(NodeKind.ENTRY, func.span, role=f"entry of {func.name}")
        self.scopes.append({})
        for p in func.params:
            slot = self.declare(p.name, p.is_array)
            pid = self.node(NodeKind.PARAM, p.span, out_ports=1, var_name=p.name,
                            role="array parameter" if p.is_array else "parameter")
            self.env[slot] = (pid, 0)
        self.stmt(func.body)
        self.scopes.pop()
        exit_tails = list(self.frontier)
        valued = [(ref, tails) for ref, tails in self.returns]
        exit_id = len(self.nodes)
        self.nodes[exit_id] = GraphNode(exit_id, NodeKind.EXIT, len(valued), 0,
                                        Annotation(func.span, None, f"exit of {func.name}"))
        for port, (ref, tails) in enumerate(valued):
            self.data_edges.add((ref, (exit_id, port)))
            for tail, label in tails:
                self.ctrl_edges.add((tail, exit_id, label))
        for tail, label in exit_tails:
            self.ctrl_edges.add((tail, exit_id, label))
        return FlowGraph(self.nodes, frozenset(self.data_edges), frozenset(self.ctrl_edges),
                         entry=0, exit=exit_id)

    def stmt(self, s: fe.Stmt) -> None:
        if isinstance(s, fe.Block):
            self.scopes.append({})
            for child in s.stmts:
                self.stmt(child)
            self.scopes.pop()
        elif isinstance(s, fe.VarDecl):
            slot = self.declare(s.name, s.array_size is not None)
            if s.array_size is not None:
                pid = self.node(NodeKind.PARAM, s.span, out_ports=1, var_name=s.name,
                                role=f"array[{s.array_size}]")
                self.env[slot] = (pid, 0)
            elif s.init is not None:
                ref = self.expr(s.init)
                self.rename(ref[0], s.name)
                self.env[slot] = ref
        elif isinstance(s, fe.Assign):
            self.assign(s.target, self.expr(s.value))
        elif isinstance(s, fe.Input):
            for target in s.targets:
                var_name = target.name if isinstance(target, fe.VarRef) else None
                ref = (self.node(NodeKind.INPUT, s.span, out_ports=1, var_name=var_name,
                                 role="stdin"), 0)
                self.assign(target, ref)
        elif isinstance(s, fe.Output):
            refs = [self.expr(a) for a in s.args]
            out = self.node(NodeKind.OUTPUT, s.span, in_ports=len(refs), role=f"stdout {s.format!r}")
            for port, ref in enumerate(refs):
                self.data(ref, out, port)
        elif isinstance(s, fe.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, fe.Return):
            if s.value is not None:
                ref = self.expr(s.value)
                self.returns.append((ref, list(self.frontier)))
            # fall through either way: anything after a return stays in the
            # graph as dead code, which later stages may still diagnose
        elif isinstance(s, fe.If):
            self.if_stmt(s)
        elif isinstance(s, fe.While):
            self.while_stmt(s)
        elif isinstance(s, fe.For):
            raise ValueError("flow graph construction requires a desugared Ast (no for-loops)")
        else:
            raise TypeError(f"unknown statement {s!r}")

    def assign(self, target: fe.LValue, ref: _Ref) -> None:
        if isinstance(target, fe.VarRef):
            slot = self.resolve(target.name)
            self.rename(ref[0], target.name)
            self.env[slot] = ref
        else:
            slot = self.resolve(target.name)
            arr = self.env[slot]  # arrays are always bound at declaration
            idx = self.expr(target.index)
            aw = self.node(NodeKind.AWRITE, target.span, in_ports=3, out_ports=1,
                           var_name=target.name, role=f"{target.name}[{fe.pp_expr(target.index)}]")
            self.data(arr, aw, 0)
            self.data(idx, aw, 1)
            self.data(ref, aw, 2)
            self.env[slot] = (aw, 0)

    def if_stmt(self, s: fe.If) -> None:
        cond = self.expr(s.cond)
        test = self.node(NodeKind.TEST, s.cond.span, in_ports=1, role="branch test")
        self.data(cond, test, 0)

        saved = dict(self.env)
        self.frontier = [(test, "true")]
        self.stmt(s.then)
        then_env, then_frontier = dict(self.env), list(self.frontier)

        self.env = dict(saved)
        self.frontier = [(test, "false")]
        if s.orelse is not None:
            self.stmt(s.orelse)
        else_env, else_frontier = dict(self.env), list(self.frontier)

        merged: dict[int, _Ref] = {}
        joins: list[tuple[int, _Ref, _Ref]] = []
        for slot in sorted(set(then_env) | set(else_env), key=lambda sl: self.slot_order[sl]):
            t, e = then_env.get(slot), else_env.get(slot)
            if t is None or e is None:
                continue  # assigned on one path only: unbound afterwards
            if t == e:
                merged[slot] = t
            else:
                joins.append((slot, t, e))
        self.env = merged
        self.frontier = then_frontier + else_frontier
        for slot, t, e in joins:
            j = self.node(NodeKind.JOIN, s.span, in_ports=2, out_ports=1,
                          var_name=self.slot_names[slot], role="merge")
            self.data(t, j, 0)
            self.data(e, j, 1)
            self.env[slot] = (j, 0)

    def while_stmt(self, s: fe.While) -> None:
        assigned = _assigned_names(s.body, frozenset())
        loop_slots: list[int] = []
        for name in assigned:
            try:
                slot = self.resolve(name)
            except KeyError:
                continue
            loop_slots.append(slot)
        loop_slots.sort(key=lambda sl: self.slot_order[sl])

        loophead = self.node(NodeKind.LOOPHEAD, s.span, role="loop head")
        joins: list[tuple[int, int]] = []  # (slot, join node)
        for slot in loop_slots:
            if slot in self.env:
                j = self.node(NodeKind.JOIN, s.span, in_ports=2, out_ports=1,
                              var_name=self.slot_names[slot], role="loop variable")
                self.data(self.env[slot], j, 0)
                self.env[slot] = (j, 0)
                joins.append((slot, j))
            else:
                self.env.pop(slot, None)

        cond = self.expr(s.cond)
        test = self.node(NodeKind.TEST, s.cond.span, in_ports=1, role="loop test")
        self.data(cond, test, 0)

        self.frontier = [(test, "true")]
        self.stmt(s.body)

        for slot, j in joins:
            self.data(self.env[slot], j, 1)
            self.env[slot] = (j, 0)
        for slot in loop_slots:
            if slot not in {sl for sl, _ in joins}:
                self.env.pop(slot, None)  # unbound on the zero-iteration path

        back_tail = max(nid for nid, _ in self.frontier)
        for nid, _ in self.frontier:
            self.ctrl_edges.add((nid, loophead, "back" if nid == back_tail else "seq"))
        self.frontier = [(test, "false")]

    # -- expressions

    def expr(self, e: fe.Expr) -> _Ref:
        if isinstance(e, fe.IntLit):
            return (self.node(NodeKind.CONST, e.span, out_ports=1, value=e.value), 0)
        if isinstance(e, fe.VarRef):
            slot = self.resolve(e.name)
            ref = self.env.get(slot)
            if ref is None:
                raise UnboundVariable(e.name, e.span)
            return ref
        if isinstance(e, fe.ArrayRef):
            slot = self.resolve(e.name)
            arr = self.env.get(slot)
            if arr is None:
                raise UnboundVariable(e.name, e.span)
            idx = self.expr(e.index)
            ar = self.node(NodeKind.AREAD, e.span, in_ports=2, out_ports=1,
                           role=f"{e.name}[{fe.pp_expr(e.index)}]")
            self.data(arr, ar, 0)
            self.data(idx, ar, 1)
            return (ar, 0)
        if isinstance(e, fe.Unary):
            ref = self.expr(e.operand)
            op = self.node(NodeKind.OP, e.span, in_ports=1, out_ports=1, opcode=_UNOP[e.op])
            self.data(ref, op, 0)
            return (op, 0)
        if isinstance(e, fe.Binary):
            lhs = self.expr(e.lhs)
            rhs = self.expr(e.rhs)
            op = self.node(NodeKind.OP, e.span, in_ports=2, out_ports=1, opcode=_BINOP[e.op])
            self.data(lhs, op, 0)
            self.data(rhs, op, 1)
            return (op, 0)
        if isinstance(e, fe.Call):
            refs = [self.expr(a) for a in e.args]
            call = self.node(NodeKind.CALL, e.span, in_ports=len(refs), out_ports=1, role=e.name)
            for port, ref in enumerate(refs):
                self.data(ref, call, port)
            return (call, 0)
        raise TypeError(f"unknown expression {e!r}")


def _assigned_names(stmt: fe.Stmt, shadowed: frozenset[str]) -> list[str]:
    """Names assigned within stmt that resolve to an enclosing scope, in first-assignment order."""
    out: list[str] = []

    def walk(s: fe.Stmt, hidden: set[str]) -> None:
        if isinstance(s, fe.Block):
            local = set(hidden)
            for child in s.stmts:
                if isinstance(child, fe.VarDecl):
                    local.add(child.name)
                walk(child, local)
        elif isinstance(s, fe.Assign):
            name = s.target.name
            if name not in hidden and name not in out:
                out.append(name)
        elif isinstance(s, fe.Input):
            for t in s.targets:
                if t.name not in hidden and t.name not in out:
                    out.append(t.name)
        elif isinstance(s, fe.If):
            walk(s.then, set(hidden))
            if s.orelse is not None:
                walk(s.orelse, set(hidden))
        elif isinstance(s, (fe.While, fe.For)):
            walk(s.body, set(hidden))

    walk(stmt, set(shadowed))
    return out


def build_flow_graph(ast: fe.Ast, function: str | None = None) -> FlowGraph:
    """Lower one function of a desugared Ast to its annotated flow graph."""
    by_name = {f.name: f for f in ast.functions}
    if function is not None:
        func = by_name[function]
    elif "main" in by_name:
        func = by_name["main"]
    elif len(ast.functions) == 1:
        func = ast.functions[0]
    else:
        raise ValueError("program has several functions and no main; pass function=...")
    return _Builder().build_function(func)


# ---------------------------------------------------------------------------
# Derived views

def node_index(g: FlowGraph) -> dict[tuple[NodeKind, OpCode | None], list[int]]:
    """Index nodes by (kind, opcode); id lists ascending. Seeds matcher anchoring."""
    index: dict[tuple[NodeKind, OpCode | None], list[int]] = {}
    for nid in sorted(g.nodes):
        node = g.nodes[nid]
        index.setdefault((node.kind, node.opcode), []).append(nid)
    return index


def value_chains(g: FlowGraph) -> dict[int, int]:
    """Map each node to the representative of its variable-threading class.

    Two nodes carry values of the same program variable exactly when a chain
    of JOIN merges (or AWRITE array updates) connects them; textual names
    play no part.
    """
    parent = {nid: nid for nid in g.nodes}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for nid in sorted(g.nodes):
        node = g.nodes[nid]
        if node.kind is NodeKind.JOIN:
            for port in (0, 1):
                src = g.producer(nid, port)
                if src is not None:
                    union(nid, src[0])
        elif node.kind is NodeKind.AWRITE:
            src = g.producer(nid, 0)
            if src is not None:
                union(nid, src[0])
    return {nid: find(nid) for nid in g.nodes}


def to_dot(g: FlowGraph) -> str:
    """Graphviz rendering: solid data edges with port labels, dashed control edges."""
    lines = ["digraph flow {", "  node [shape=box, fontname=monospace];"]
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        bits = [n.kind.value]
        if n.opcode is not None:
            bits.append(n.opcode.value)
        if n.value is not None:
            bits.append(str(n.value))
        if n.ann.var_name:
            bits.append(n.ann.var_name)
        bits.append(f"L{n.ann.span.line_start}")
        lines.append(f'  n{nid} [label="{nid}: ' + " ".join(bits) + '"];')
    for (src, op), (dst, ip) in sorted(g.data_edges):
        lines.append(f'  n{src} -> n{dst} [label="{op}->{ip}"];')
    for src, dst, label in sorted(g.ctrl_edges):
        lines.append(f'  n{src} -> n{dst} [style=dashed, color=gray, label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(g: FlowGraph) -> str:
    doc = {
        "nodes": [
            {
                "id": nid,
                "kind": n.kind.value,
                "op": n.opcode.value if n.opcode else None,
                "value": n.value,
                "var": n.ann.var_name,
                "role": n.ann.role,
                "span": {
                    "file": n.ann.span.file,
                    "line_start": n.ann.span.line_start,
                    "col_start": n.ann.span.col_start,
                    "line_end": n.ann.span.line_end,
                    "col_end": n.ann.span.col_end,
                },
            }
            for nid, n in sorted(g.nodes.items())
        ],
        "data_edges": [
            {"src": src, "out_port": op, "dst": dst, "in_port": ip}
            for (src, op), (dst, ip) in sorted(g.data_edges)
        ],
        "ctrl_edges": [
            {"src": src, "dst": dst, "label": label} for src, dst, label in sorted(g.ctrl_edges)
        ],
        "entry": g.entry,
        "exit": g.exit,
    }
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Well-formedness (exercised by tests; cheap enough to run after every build)

def validate(g: FlowGraph) -> list[str]:
    problems: list[str] = []
    for nid, n in g.nodes.items():
        for port in range(n.in_ports):
            incoming = [e for e in g.data_edges if e[1] == (nid, port)]
            if len(incoming) != 1:
                problems.append(f"node {nid} in_port {port} has {len(incoming)} producers")
    for (src, op), (dst, ip) in g.data_edges:
        if op >= g.nodes[src].out_ports or ip >= g.nodes[dst].in_ports:
            problems.append(f"edge ({src}:{op})->({dst}:{ip}) out of port range")

    # data cycles must pass through a JOIN's back/else input
    succs: dict[int, list[int]] = {nid: [] for nid in g.nodes}
    for (src, _), (dst, ip) in g.data_edges:
        if g.nodes[dst].kind is NodeKind.JOIN and ip == 1:
            continue
        succs[src].append(dst)
    state: dict[int, int] = {}

    def dfs(v: int) -> bool:
        state[v] = 1
        for w in succs[v]:
            if state.get(w, 0) == 1 or (state.get(w, 0) == 0 and dfs(w)):
                return True
        state[v] = 2
        return False

    if any(dfs(v) for v in g.nodes if state.get(v, 0) == 0):
        problems.append("data edges contain a cycle that avoids JOIN back-inputs")

    seen = {g.entry}
    stack = [g.entry]
    while stack:
        v = stack.pop()
        for w, _ in g.ctrl_succs(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    for nid in g.nodes:
        if nid not in seen:
            problems.append(f"node {nid} unreachable from entry via ctrl edges")

    reaches_exit = {g.exit}
    stack = [g.exit]
    while stack:
        v = stack.pop()
        for w, _ in g.ctrl_preds(v):
            if w not in reaches_exit:
                reaches_exit.add(w)
                stack.append(w)
    for nid in g.nodes:
        if nid not in reaches_exit:
            problems.append(f"exit unreachable from node {nid}")

    for nid, n in g.nodes.items():
        if n.kind is NodeKind.LOOPHEAD:
            backs = [e for e in g.ctrl_edges if e[1] == nid and e[2] == "back"]
            if len(backs) != 1:
                problems.append(f"loophead {nid} has {len(backs)} back edges")
    for src, dst, label in g.ctrl_edges:
        if label == "back" and g.nodes[dst].kind is not NodeKind.LOOPHEAD:
            problems.append(f"back edge {src}->{dst} does not target a LOOPHEAD")
    return problems
