"""Max flow, residual SCC analysis, and end-to-end domain filtering.

The pipeline is: encode -> build network from the defining tree -> max flow ->
saturation check -> residual SCC support test -> map removals back onto the
original lists.  A variable edge carrying flow f supports value f always, and
the opposite value exactly when its endpoints share a strongly connected
component of the residual graph (flipping the edge then closes a residual
cycle, preserving the saturating flow).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from . import builders
from .boolenc import (
    CANONICAL,
    ENCODINGS,
    PROJECTION,
    SET_ENCODING,
    BooleanInstance,
    booleanize,
    default_encoding,
    map_back,
)
from .errors import AmongFlowError, InputError, TreeMismatchError
from .flow import (
    FlowNetwork,
    StandardProblem,
    build_flow_network,
    to_standard_maxflow,
)
from .hypergraph import (
    OrientedTree,
    booleanized_hypergraph,
    contract_superfluous,
)
from .model import (
    ASSIGNMENT_MODE,
    CacInstance,
    FilterResult,
    all_removed_result,
    evaluate,
    require_valid,
)


@dataclass(frozen=True)
class Flow:
    """Integral flow on a standard problem's edge list."""

    value: int
    edge_flows: tuple[int, ...]


class _Dinic:
    """Blocking-flow max flow over an adjacency list of paired arcs.

    Deterministic: arcs are scanned in insertion order.  All loops are
    iterative; level graphs can be thousands of nodes deep on path-shaped
    networks.
    """

    def __init__(self, num_nodes: int):
        self.n = num_nodes
        self.adj: list[list[int]] = [[] for _ in range(num_nodes)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, capacity: int) -> int:
        eid = len(self.to)
        self.adj[u].append(eid)
        self.to.append(v)
        self.cap.append(capacity)
        self.adj[v].append(eid + 1)
        self.to.append(u)
        self.cap.append(0)
        return eid

    def _bfs(self, s: int, t: int) -> bool:
        self.level = [-1] * self.n
        self.level[s] = 0
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for eid in self.adj[u]:
                    v = self.to[eid]
                    if self.cap[eid] > 0 and self.level[v] < 0:
                        self.level[v] = self.level[u] + 1
                        nxt.append(v)
            frontier = nxt
        return self.level[t] >= 0

    def _augment_once(self, s: int, t: int, it: list[int]) -> int:
        stack = [s]
        path: list[int] = []
        while stack:
            u = stack[-1]
            if u == t:
                bottleneck = min(self.cap[eid] for eid in path)
                for eid in path:
                    self.cap[eid] -= bottleneck
                    self.cap[eid ^ 1] += bottleneck
                return bottleneck
            advanced = False
            while it[u] < len(self.adj[u]):
                eid = self.adj[u][it[u]]
                v = self.to[eid]
                if self.cap[eid] > 0 and self.level[v] == self.level[u] + 1:
                    stack.append(v)
                    path.append(eid)
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                self.level[u] = -1
                stack.pop()
                if path:
                    path.pop()
        return 0

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while self._bfs(s, t):
            it = [0] * self.n
            while True:
                pushed = self._augment_once(s, t, it)
                if pushed == 0:
                    break
                total += pushed
        return total


def max_flow(num_nodes: int, edges: Sequence[tuple[int, int, int]],
             source: int, sink: int) -> Flow:
    """Maximum integral s-t flow; per-edge flows follow the input edge order."""
    for u, v, cap in edges:
        if cap < 0:
            raise InputError("negative capacity")
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise InputError("edge endpoint out of range")
    dinic = _Dinic(num_nodes)
    ids = [dinic.add_edge(u, v, cap) for u, v, cap in edges]
    value = dinic.max_flow(source, sink)
    flows = tuple(edges[i][2] - dinic.cap[eid] for i, eid in enumerate(ids))
    return Flow(value, flows)


def solve_standard(std: StandardProblem) -> Flow:
    return max_flow(std.num_nodes, std.edges, std.source, std.sink)


def strongly_connected_components(num_nodes: int,
                                  adjacency: Sequence[Sequence[int]]) -> list[int]:
    """Tarjan's algorithm, iterative; returns a component id per node."""
    index = [-1] * num_nodes
    low = [0] * num_nodes
    on_stack = [False] * num_nodes
    comp = [-1] * num_nodes
    stack: list[int] = []
    counter = 0
    comps = 0
    for start in range(num_nodes):
        if index[start] != -1:
            continue
        work = [(start, 0)]
        while work:
            node, ptr = work.pop()
            if ptr == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            recurse = False
            neighbors = adjacency[node]
            while ptr < len(neighbors):
                nxt = neighbors[ptr]
                ptr += 1
                if index[nxt] == -1:
                    work.append((node, ptr))
                    work.append((nxt, 0))
                    recurse = True
                    break
                if on_stack[nxt]:
                    low[node] = min(low[node], index[nxt])
            if recurse:
                continue
            if low[node] == index[node]:
                while True:
                    top = stack.pop()
                    on_stack[top] = False
                    comp[top] = comps
                    if top == node:
                        break
                comps += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return comp


def supported_values(net: FlowNetwork, flow: Flow) -> dict[object, frozenset[int]]:
    """Support sets {0}/{1}/{0,1} per free boolean variable, read off the
    residual graph of a saturating flow (source and sink arcs included)."""
    std = to_standard_maxflow(net)
    if len(flow.edge_flows) != len(std.edges):
        raise InputError("flow does not match the standard network's edge list")
    if flow.value != std.target_flow:
        raise AmongFlowError("supported_values requires a saturating flow")
    adjacency: list[list[int]] = [[] for _ in range(std.num_nodes)]
    for (u, v, cap), f in zip(std.edges, flow.edge_flows):
        if f < cap:
            adjacency[u].append(v)
        if f > 0:
            adjacency[v].append(u)
    comp = strongly_connected_components(std.num_nodes, adjacency)
    out: dict[object, frozenset[int]] = {}
    for var, eidx in net.var_edge.items():
        if eidx is None:
            out[var] = frozenset({0, 1})
            continue
        u, v, _ = std.edges[eidx]
        current = flow.edge_flows[eidx]
        if comp[u] == comp[v]:
            out[var] = frozenset({0, 1})
        else:
            out[var] = frozenset({current})
    return out


def _prepare_user_tree(tree: OrientedTree, binst: BooleanInstance) -> OrientedTree:
    """Align an explicit tree with a (possibly narrowed) instance: unlabel
    hyperedge keys whose constraints folded away, then contract the freed
    edges.  Missing keys are a mismatch."""
    live = {c.key for c in binst.constraints}
    missing = sorted(live - set(tree.edge_of))
    if missing:
        raise TreeMismatchError(
            "tree: no tree edge for constraints " + ", ".join(missing))
    extra = set(tree.edge_of) - live
    if extra:
        tree = replace(tree, edge_of={k: e for k, e in tree.edge_of.items()
                                      if k in live}, paths=None)
    return contract_superfluous(tree)


def _resolve(inst: CacInstance,
             tree: OrientedTree | None,
             builder: str | None,
             encoding: str | None,
             projection_range: Iterable[str] | None,
             ) -> tuple[BooleanInstance, OrientedTree]:
    if (tree is None) == (builder is None):
        raise InputError("exactly one of tree/builder must be given")
    if encoding is not None and encoding not in ENCODINGS:
        raise InputError(f"unknown encoding {encoding!r}")
    if builder is not None:
        implied = builders.builder_encoding(inst, builder)
        if encoding is not None and encoding != implied:
            raise InputError(
                f"builder {builder} implies the {implied} encoding, not {encoding}")
        if implied != PROJECTION and projection_range is not None:
            raise InputError(f"--range does not apply to the {builder} builder")
        return builders.build_family(inst, builder, projection_range)
    enc = encoding or default_encoding(inst)
    if enc != PROJECTION and projection_range is not None:
        raise InputError(f"--range only applies to the projection encoding, not {enc}")
    binst = booleanize(inst, enc, projection_range)
    prepared = _prepare_user_tree(tree, binst)  # type: ignore[arg-type]
    return binst, prepared


def filter_domains(inst: CacInstance,
                   tree: OrientedTree | None = None,
                   builder: str | None = None,
                   encoding: str | None = None,
                   projection_range: Iterable[str] | None = None,
                   ) -> FilterResult:
    """Exact, complete domain filtering.

    ``removed`` ends up holding exactly the listed values taking part in no
    solution; infeasibility removes everything.  The defining tree comes from
    an explicit (possibly superfluous-edged) tree or a family builder tag.
    """
    require_valid(inst)
    binst, tree = _resolve(inst, tree, builder, encoding, projection_range)
    if binst.infeasible:
        return all_removed_result(inst, {"infeasible_at": 0})
    net = build_flow_network(binst, tree)
    std = to_standard_maxflow(net)
    flow = solve_standard(std)
    stats = {
        "bool_vars": len(binst.variables),
        "free_vars": len(binst.free_variables),
        "constraints": len(binst.constraints),
        "tree_nodes": len(tree.nodes),
        "network_edges": len(std.edges),
        "flow_value": flow.value,
        "flow_target": std.target_flow,
    }
    if flow.value < std.target_flow:
        return all_removed_result(inst, stats)
    supports = supported_values(net, flow)
    return map_back(binst, supports, inst, stats)


class FilterSession:
    """Owns the narrowing state of one instance across repeated filter calls.

    ``narrow`` removes values from the current lists and refilters; the result
    always equals a fresh ``filter_domains`` on the narrowed instance (the
    repair strategy here is recomputation, which the equivalence contract
    permits).  Not thread-safe; use one session per thread.
    """

    def __init__(self, inst: CacInstance,
                 tree: OrientedTree | None = None,
                 builder: str | None = None,
                 encoding: str | None = None,
                 projection_range: Iterable[str] | None = None):
        require_valid(inst)
        self._base = inst
        self._tree = tree
        self._builder = builder
        self._encoding = encoding
        self._projection_range = projection_range
        self._lists = {v: frozenset(inst.lists[v]) for v in inst.variables}

    @property
    def instance(self) -> CacInstance:
        return replace(self._base, lists=dict(self._lists))

    def filter(self) -> FilterResult:
        return filter_domains(self.instance, tree=self._tree, builder=self._builder,
                              encoding=self._encoding,
                              projection_range=self._projection_range)

    def narrow(self, removals: Mapping[str, Iterable[str]]) -> FilterResult:
        staged = dict(self._lists)
        for v, values in removals.items():
            if v not in staged:
                raise InputError(f"narrow: unknown variable {v!r}")
            values = frozenset(values)
            stray = values - staged[v]
            if stray:
                raise InputError(
                    f"narrow: {sorted(stray)} not currently in the list of {v!r}")
            staged[v] = staged[v] - values
        self._lists = staged
        return self.filter()


def narrow_and_refilter(session: FilterSession,
                        removals: Mapping[str, Iterable[str]]) -> FilterResult:
    return session.narrow(removals)


@dataclass(frozen=True)
class PropagatorSpec:
    """One filtering component of a search: a subset of the constraints routed
    through a builder or an explicit tree."""

    builder: str | None = None
    tree: OrientedTree | None = None
    encoding: str | None = None
    projection_range: frozenset[str] | None = None
    constraint_keys: tuple[str, ...] | None = None  # None = all constraints


@dataclass(frozen=True)
class SolveResult:
    assignment: dict[str, str] | None
    nodes: int

    @property
    def status(self) -> str:
        return "SAT" if self.assignment is not None else "UNSAT"


def _sub_instance(inst: CacInstance, spec: PropagatorSpec,
                  lists: Mapping[str, frozenset[str]]) -> CacInstance:
    if spec.constraint_keys is None:
        constraints = inst.constraints
    else:
        by_key = {inst.constraint_key(j): c for j, c in enumerate(inst.constraints)}
        unknown = [k for k in spec.constraint_keys if k not in by_key]
        if unknown:
            raise InputError(f"propagator selects unknown constraints {unknown}")
        constraints = tuple(by_key[k] for k in spec.constraint_keys)
    scope_vars = {v for c in constraints for v in c.scope}
    variables = tuple(v for v in inst.variables if v in scope_vars)
    return CacInstance(
        variables=variables,
        domain=inst.domain,
        lists={v: lists[v] for v in variables},
        constraints=constraints,
        mode=inst.mode,
    )


def _propagate(inst: CacInstance, specs: Sequence[PropagatorSpec],
               lists: dict[str, frozenset[str]]) -> bool:
    """Run every propagator to fixpoint on ``lists``; False means infeasible."""
    changed = True
    while changed:
        changed = False
        for spec in specs:
            sub = _sub_instance(inst, spec, lists)
            result = filter_domains(sub, tree=spec.tree, builder=spec.builder,
                                    encoding=spec.encoding,
                                    projection_range=spec.projection_range)
            if not result.feasible:
                return False
            for v, gone in result.removed.items():
                if gone:
                    lists[v] = lists[v] - gone
                    changed = True
            if any(not lists[v] for v in sub.variables):
                return False
    return True


def solve(inst: CacInstance,
          propagators: Sequence[PropagatorSpec] | None = None,
          tree: OrientedTree | None = None,
          builder: str | None = None,
          encoding: str | None = None,
          projection_range: Iterable[str] | None = None,
          ) -> SolveResult:
    """Depth-first search with complete filtering at every node.

    Branches on the lowest-index unassigned variable, trying values in domain
    order.  Several propagators may cover different constraint subsets; their
    removals accumulate on shared lists.  Candidate solutions are re-checked
    with evaluate before being returned.
    """
    require_valid(inst)
    if inst.mode != ASSIGNMENT_MODE:
        raise InputError("solve requires assignment mode")
    if propagators is None:
        rng = frozenset(projection_range) if projection_range is not None else None
        propagators = [PropagatorSpec(builder=builder, tree=tree, encoding=encoding,
                                      projection_range=rng)]
    nodes = 0

    def dfs(lists: dict[str, frozenset[str]]) -> dict[str, str] | None:
        nonlocal nodes
        nodes += 1
        if not _propagate(inst, propagators, lists):
            return None
        branch_var = None
        for v in inst.variables:
            if not lists[v]:
                return None
            if len(lists[v]) > 1:
                branch_var = v
                break
        if branch_var is None:
            candidate = {v: next(iter(lists[v])) for v in inst.variables}
            return candidate if evaluate(inst, candidate) else None
        for d in inst.sorted_values(lists[branch_var]):
            child = dict(lists)
            child[branch_var] = frozenset({d})
            found = dfs(child)
            if found is not None:
                return found
        return None

    answer = dfs({v: frozenset(inst.lists[v]) for v in inst.variables})
    return SolveResult(answer, nodes)
