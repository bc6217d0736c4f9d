"""From a boolean instance and a defining tree to a max-flow problem.

Every constraint ``y_j + sum(x_i for i in scope_j) = max_j`` contributes one
row of the system M z = a with 0 <= z <= c (slack columns first, then the
boolean columns; constraints with min = max get no slack).  Multiplying by
the tree incidence matrix P turns each column into the incidence vector of a
directed-path span, i.e. N = P M is the incidence matrix of a digraph whose
node balances are b = P a.  Positive balance means supply (net outflow);
the standard reduction adds a source feeding supplies and a sink draining
demands, and saturating flows correspond exactly to integer solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .boolenc import BooleanInstance, BoolVarId, display
from .errors import AmongFlowError, InputError
from .hypergraph import (
    Hypergraph,
    OrientedTree,
    booleanized_hypergraph,
    verified_paths,
)

SLACK = "slack"
VAR = "var"


@dataclass(frozen=True)
class LinearSystem:
    rows: tuple[str, ...]                       # constraint keys
    column_tags: tuple[tuple[str, object], ...]  # ("slack", key) | ("var", bool var)
    row_columns: tuple[tuple[int, ...], ...]     # per row, columns with coefficient 1
    rhs: tuple[int, ...]                         # a
    caps: tuple[int, ...]                        # c

    @property
    def num_cols(self) -> int:
        return len(self.column_tags)

    def dense(self) -> list[list[int]]:
        out = [[0] * self.num_cols for _ in self.rows]
        for i, cols in enumerate(self.row_columns):
            for j in cols:
                out[i][j] = 1
        return out

    def column_label(self, j: int) -> str:
        kind, payload = self.column_tags[j]
        if kind == SLACK:
            return f"y:{payload}"
        return f"x:{display(payload)}"


def build_linear_system(binst: BooleanInstance) -> LinearSystem:
    """Deterministic column order: slacks by constraint index, then free
    boolean variables by instance order."""
    slack_col: dict[str, int] = {}
    tags: list[tuple[str, object]] = []
    caps: list[int] = []
    for c in binst.constraints:
        if c.min < c.max:
            slack_col[c.key] = len(tags)
            tags.append((SLACK, c.key))
            caps.append(c.max - c.min)
    var_col: dict[BoolVarId, int] = {}
    for v in binst.free_variables:
        var_col[v] = len(tags)
        tags.append((VAR, v))
        caps.append(1)
    rows = []
    row_columns = []
    rhs = []
    for c in binst.constraints:
        cols = []
        if c.key in slack_col:
            cols.append(slack_col[c.key])
        cols.extend(var_col[v] for v in c.scope)
        rows.append(c.key)
        row_columns.append(tuple(cols))
        rhs.append(c.max)
    return LinearSystem(tuple(rows), tuple(tags), tuple(row_columns),
                        tuple(rhs), tuple(caps))


@dataclass(frozen=True)
class IncidenceMatrix:
    rows: tuple[str, ...]   # tree nodes
    cols: tuple[str, ...]   # hyperedge keys, constraint order
    ends: tuple[tuple[int, int], ...]  # per column: (start row, end row)

    def dense(self) -> list[list[int]]:
        out = [[0] * len(self.cols) for _ in self.rows]
        for j, (s, e) in enumerate(self.ends):
            out[s][j] = 1
            out[e][j] = -1
        return out


def build_incidence(tree: OrientedTree,
                    edge_order: Sequence[str] | None = None) -> IncidenceMatrix:
    """+1 where a hyperedge's tree edge starts, -1 where it ends."""
    keys = tuple(edge_order) if edge_order is not None else tuple(tree.edge_of)
    row_of = {n: i for i, n in enumerate(tree.nodes)}
    ends = []
    for k in keys:
        if k not in tree.edge_of:
            raise InputError(f"tree has no edge for hyperedge {k}")
        u, v = tree.edge_of[k]
        ends.append((row_of[u], row_of[v]))
    return IncidenceMatrix(tuple(tree.nodes), keys, tuple(ends))


@dataclass(frozen=True)
class FlowEdge:
    tail: str
    head: str
    capacity: int
    tag: tuple[str, object]


@dataclass(frozen=True)
class FlowNetwork:
    """Digraph derived from N = PM: one edge per system column (spanning that
    column's directed path) with capacity c_k, and node balances b = Pa.
    ``var_edge`` maps each free boolean variable to its edge index, or None
    when its path is empty (the variable occurs in no constraint)."""

    nodes: tuple[str, ...]
    balances: Mapping[str, int]
    edges: tuple[FlowEdge, ...]
    var_edge: Mapping[BoolVarId, int | None]
    system: LinearSystem


def build_flow_network(binst: BooleanInstance, tree: OrientedTree) -> FlowNetwork:
    """Requires (and checks, unless paths were already derived against this
    instance) that the tree defines the booleanized hypergraph."""
    hyper = booleanized_hypergraph(binst)
    tree = verified_paths(tree, hyper)
    assert tree.paths is not None
    system = build_linear_system(binst)
    balances = {n: 0 for n in tree.nodes}
    for c in binst.constraints:
        u, v = tree.edge_of[c.key]
        balances[u] += c.max
        balances[v] -= c.max
    edges: list[FlowEdge] = []
    var_edge: dict[BoolVarId, int | None] = {}
    for j, (kind, payload) in enumerate(system.column_tags):
        if kind == SLACK:
            u, v = tree.edge_of[payload]  # type: ignore[index]
            edges.append(FlowEdge(u, v, system.caps[j], (SLACK, payload)))
        else:
            path = tree.paths[payload]
            if len(path) <= 1:
                var_edge[payload] = None
                continue
            var_edge[payload] = len(edges)
            edges.append(FlowEdge(path[0], path[-1], 1, (VAR, payload)))
    return FlowNetwork(tree.nodes, balances, tuple(edges), var_edge, system)


@dataclass(frozen=True)
class StandardProblem:
    """Plain s-t max-flow instance; edges[:inner_count] mirror the network's
    edges in order, then one edge per supply node and one per demand node."""

    num_nodes: int
    source: int
    sink: int
    edges: tuple[tuple[int, int, int], ...]
    inner_count: int
    target_flow: int
    node_index: Mapping[str, int]


def to_standard_maxflow(net: FlowNetwork) -> StandardProblem:
    total = sum(net.balances.values())
    if total != 0:
        raise AmongFlowError(f"internal invariant failure: balances sum to {total}")
    node_index = {n: i for i, n in enumerate(net.nodes)}
    source = len(net.nodes)
    sink = len(net.nodes) + 1
    edges = [(node_index[e.tail], node_index[e.head], e.capacity) for e in net.edges]
    inner = len(edges)
    target = 0
    for n in net.nodes:
        bal = net.balances[n]
        if bal > 0:
            edges.append((source, node_index[n], bal))
            target += bal
    for n in net.nodes:
        bal = net.balances[n]
        if bal < 0:
            edges.append((node_index[n], sink, -bal))
    return StandardProblem(len(net.nodes) + 2, source, sink, tuple(edges),
                           inner, target, node_index)


def network_matrices(binst: BooleanInstance, tree: OrientedTree) -> dict[str, object]:
    """Dense M, a, c, P, N = PM and b = Pa with labels, for dumps and goldens."""
    hyper = booleanized_hypergraph(binst)
    tree = verified_paths(tree, hyper)
    system = build_linear_system(binst)
    keys = [c.key for c in binst.constraints]
    inc = build_incidence(tree, keys)
    m_dense = system.dense()
    p_dense = inc.dense()
    n_rows = len(inc.rows)
    n_dense = [[sum(p_dense[i][j] * m_dense[j][k] for j in range(len(keys)))
                for k in range(system.num_cols)]
               for i in range(n_rows)]
    a = list(system.rhs)
    b = [sum(p_dense[i][j] * a[j] for j in range(len(keys))) for i in range(n_rows)]
    return {
        "row_labels": keys,
        "col_labels": [system.column_label(j) for j in range(system.num_cols)],
        "node_labels": list(inc.rows),
        "M": m_dense,
        "a": a,
        "c": list(system.caps),
        "P": p_dense,
        "N": n_dense,
        "b": b,
    }
