"""Hypergraphs, oriented trees and the defines-relation between them.

An oriented tree *defines* a hypergraph when there is an injective map from
hyperedges to tree edges and a directed path per hypergraph node such that a
node belongs to a hyperedge exactly when the hyperedge's tree edge lies on the
node's path.  This module derives and verifies those paths, contracts
superfluous tree edges, and builds trees constructively for laminar families
(including the gluing combinator used by the family builders).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Hashable, Iterable, Mapping, Sequence

from .boolenc import BooleanInstance, display
from .errors import InputError, PreconditionError, TreeMismatchError

TOWARD_ROOT = "toward-root"
AWAY_FROM_ROOT = "away-from-root"

Edge = tuple[str, str]


@dataclass(frozen=True)
class Hypergraph:
    """Nodes plus keyed hyperedges.  Keys keep two constraints with identical
    member sets distinct (the edge set is a multiset)."""

    nodes: tuple[Hashable, ...]
    edges: tuple[tuple[str, frozenset], ...]

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.edges)

    def members(self) -> dict[str, frozenset]:
        return dict(self.edges)


def hypergraph_errors(hyper: Hypergraph) -> list[str]:
    out = []
    if len(set(hyper.nodes)) != len(hyper.nodes):
        out.append("duplicate hypergraph nodes")
    keys = [k for k, _ in hyper.edges]
    if len(set(keys)) != len(keys):
        out.append("duplicate hyperedge keys")
    node_set = set(hyper.nodes)
    for k, members in hyper.edges:
        if not members <= node_set:
            out.append(f"hyperedge {k} contains unknown nodes")
    return out


def booleanized_hypergraph(binst: BooleanInstance) -> Hypergraph:
    """Hypergraph of a boolean instance: free variables as nodes, one
    hyperedge per constraint over its free scope."""
    return Hypergraph(
        nodes=binst.free_variables,
        edges=tuple((c.key, frozenset(c.scope)) for c in binst.constraints),
    )


@dataclass(frozen=True)
class OrientedTree:
    """Directed tree plus the injective hyperedge-to-edge map.  ``paths`` maps
    each hypergraph node to its directed path (as a node sequence; a single
    node means the empty path) once derive_paths has run."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    edge_of: Mapping[str, Edge]
    paths: Mapping[Hashable, tuple[str, ...]] | None = None

    @property
    def root_hint(self) -> str:
        return self.nodes[0]


def tree_errors(tree: OrientedTree) -> list[str]:
    out = []
    if not tree.nodes:
        return ["tree has no nodes"]
    if len(set(tree.nodes)) != len(tree.nodes):
        out.append("duplicate tree nodes")
    node_set = set(tree.nodes)
    seen_undirected = set()
    for u, v in tree.edges:
        if u not in node_set or v not in node_set:
            out.append(f"edge ({u},{v}) uses unknown nodes")
        if u == v:
            out.append(f"self-loop at {u}")
        if frozenset((u, v)) in seen_undirected:
            out.append(f"parallel edges between {u} and {v}")
        seen_undirected.add(frozenset((u, v)))
    if len(tree.edges) != len(tree.nodes) - 1:
        out.append(f"{len(tree.edges)} edges for {len(tree.nodes)} nodes (tree needs n-1)")
    elif not out:
        # connectivity (undirected)
        adj: dict[str, list[str]] = {n: [] for n in tree.nodes}
        for u, v in tree.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {tree.nodes[0]}
        queue = deque([tree.nodes[0]])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        if len(seen) != len(tree.nodes):
            out.append("tree is not connected")
    edge_set = set(tree.edges)
    used: dict[Edge, str] = {}
    for key, e in tree.edge_of.items():
        if e not in edge_set:
            out.append(f"hyperedge {key} mapped to missing edge {e}")
        elif e in used:
            out.append(f"hyperedges {used[e]} and {key} share tree edge {e}")
        else:
            used[e] = key
    return out


def require_tree(tree: OrientedTree) -> None:
    errs = tree_errors(tree)
    if errs:
        raise InputError("invalid tree: " + "; ".join(errs))


class _TreeIndex:
    """Rooted view of a tree: parent pointers, depths, and LCA-style walks."""

    def __init__(self, tree: OrientedTree):
        self.edge_set = set(tree.edges)
        self.label: dict[Edge, str] = {e: k for k, e in tree.edge_of.items()}
        adj: dict[str, list[str]] = {n: [] for n in tree.nodes}
        for u, v in tree.edges:
            adj[u].append(v)
            adj[v].append(u)
        root = tree.nodes[0]
        self.parent: dict[str, str | None] = {root: None}
        self.depth: dict[str, int] = {root: 0}
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in self.depth:
                    self.parent[y] = x
                    self.depth[y] = self.depth[x] + 1
                    queue.append(y)

    def walk(self, u: str, w: str) -> list[str]:
        """Node sequence of the unique undirected tree path from u to w."""
        up_u = [u]
        up_w = [w]
        a, b = u, w
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]  # type: ignore[assignment]
            up_u.append(a)
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]  # type: ignore[assignment]
            up_w.append(b)
        while a != b:
            a = self.parent[a]  # type: ignore[assignment]
            b = self.parent[b]  # type: ignore[assignment]
            up_u.append(a)
            up_w.append(b)
        return up_u + up_w[-2::-1]

    def distance(self, u: str, w: str) -> int:
        a, b = u, w
        dist = 0
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]  # type: ignore[assignment]
            dist += 1
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]  # type: ignore[assignment]
            dist += 1
        while a != b:
            a = self.parent[a]  # type: ignore[assignment]
            b = self.parent[b]  # type: ignore[assignment]
            dist += 2
        return dist


def _chain_path(required: Sequence[Edge], node_label: str) -> tuple[str, ...] | None:
    """Assemble ``required`` into one directed path with no gaps.

    Returns the node sequence, or None when the edges are internally
    consistent (each node has at most one required in/out edge) but fall into
    several fragments.  Raises TreeMismatchError on a genuine conflict.
    """
    succ: dict[str, str] = {}
    pred: dict[str, str] = {}
    for u, v in required:
        if u in succ:
            raise TreeMismatchError(
                f"not a directed path for node {node_label}: edges "
                f"({u},{succ[u]}) and ({u},{v}) leave the same tree node")
        if v in pred:
            raise TreeMismatchError(
                f"not a directed path for node {node_label}: edges "
                f"({pred[v]},{v}) and ({u},{v}) enter the same tree node")
        succ[u] = v
        pred[v] = u
    starts = [u for u in succ if u not in pred]
    if len(starts) != 1:
        return None
    seq = [starts[0]]
    while seq[-1] in succ:
        seq.append(succ[seq[-1]])
    if len(seq) - 1 != len(required):
        return None
    return tuple(seq)


def _bridge_path(required: Sequence[Edge], index: _TreeIndex,
                 required_set: set[Edge], node_label: str) -> tuple[str, ...]:
    """General case: required edges separated by gaps of unlabeled edges."""
    endpoints: list[str] = []
    seen = set()
    for u, v in required:
        for x in (u, v):
            if x not in seen:
                seen.add(x)
                endpoints.append(x)
    x0 = endpoints[0]
    u = max(endpoints, key=lambda e: index.distance(x0, e))
    w = max(endpoints, key=lambda e: index.distance(u, e))
    seq = index.walk(u, w)
    polarities = []
    for a, b in zip(seq, seq[1:]):
        if (a, b) in index.edge_set:
            polarities.append(1)
        elif (b, a) in index.edge_set:
            polarities.append(-1)
        else:  # pragma: no cover - walk yields tree edges by construction
            raise AssertionError("walk left the tree")
    if all(p == -1 for p in polarities):
        seq = seq[::-1]
        polarities = [1] * len(polarities)
    if any(p == -1 for p in polarities):
        i = polarities.index(1)
        j = polarities.index(-1)
        raise TreeMismatchError(
            f"not a directed path for node {node_label}: edges "
            f"({seq[i]},{seq[i + 1]}) and ({seq[j + 1]},{seq[j]}) have opposite polarity")
    path_edges = list(zip(seq, seq[1:]))
    covered = set(path_edges)
    for e in required:
        if e not in covered:
            raise TreeMismatchError(
                f"not a directed path for node {node_label}: required edges do "
                f"not lie on one directed path (edge ({e[0]},{e[1]}) falls outside)")
    for e in path_edges:
        if e not in required_set and e in index.label:
            raise TreeMismatchError(
                f"node {node_label}: path would traverse the edge of hyperedge "
                f"{index.label[e]}, which does not contain it")
    return tuple(seq)


def derive_paths(tree: OrientedTree, hyper: Hypergraph) -> OrientedTree:
    """Compute, for every hypergraph node, the unique minimal directed path
    covering exactly the tree edges of its hyperedges.  Fails when those edges
    cannot lie on one directed path, or when a labeled in-between edge belongs
    to a hyperedge not containing the node."""
    require_tree(tree)
    errs = hypergraph_errors(hyper)
    if errs:
        raise InputError("invalid hypergraph: " + "; ".join(errs))
    missing = [k for k in hyper.keys() if k not in tree.edge_of]
    if missing:
        raise TreeMismatchError(f"tree has no edge for hyperedges: {', '.join(missing)}")

    index = _TreeIndex(tree)
    members = hyper.members()
    node_edges: dict[Hashable, list[Edge]] = {n: [] for n in hyper.nodes}
    for key, mem in hyper.edges:
        e = tree.edge_of[key]
        for n in mem:
            node_edges[n].append(e)

    anchor = tree.root_hint
    paths: dict[Hashable, tuple[str, ...]] = {}
    for n in hyper.nodes:
        required = node_edges[n]
        if not required:
            paths[n] = (anchor,)
            continue
        label = display(n)
        seq = _chain_path(required, label)
        if seq is None:
            seq = _bridge_path(required, index, set(required), label)
        paths[n] = seq
    return replace(tree, paths=paths)


def _iff_diagnostics(derived: OrientedTree, hyper: Hypergraph) -> list[str]:
    """Membership-vs-path agreement, checked per node in linear time."""
    assert derived.paths is not None
    label = {e: k for k, e in derived.edge_of.items()}
    containing: dict[Hashable, set[str]] = {n: set() for n in hyper.nodes}
    for k, mem in hyper.edges:
        for n in mem:
            containing[n].add(k)
    diags = []
    for n in hyper.nodes:
        p = derived.paths[n]
        path_keys = {label[e] for e in zip(p, p[1:]) if e in label}
        for k in sorted(containing[n] - path_keys):
            diags.append(f"path of {display(n)} misses edge of hyperedge {k}")
        for k in sorted(path_keys - containing[n]):
            diags.append(f"path of {display(n)} wrongly covers edge of hyperedge {k}")
    return diags


def verify_defines(tree: OrientedTree, hyper: Hypergraph) -> tuple[bool, list[str]]:
    """Check that the tree defines the hypergraph; diagnostics carry failures."""
    try:
        derived = derive_paths(tree, hyper)
    except (TreeMismatchError, InputError) as exc:
        return False, [str(exc)]
    diags = _iff_diagnostics(derived, hyper)
    return (not diags), diags


def verified_paths(tree: OrientedTree, hyper: Hypergraph) -> OrientedTree:
    """derive_paths + full defines-verification, raising on failure."""
    derived = derive_paths(tree, hyper)
    diags = _iff_diagnostics(derived, hyper)
    if diags:
        raise TreeMismatchError("tree does not define the hypergraph", diags)
    return derived


def contract_superfluous(tree: OrientedTree) -> OrientedTree:
    """Contract every tree edge carrying no hyperedge.  The result defines the
    same hypergraph and has one edge per hyperedge."""
    require_tree(tree)
    labeled = set(tree.edge_of.values())
    rep: dict[str, str] = {n: n for n in tree.nodes}

    def find(x: str) -> str:
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    order = {n: i for i, n in enumerate(tree.nodes)}
    for u, v in tree.edges:
        if (u, v) in labeled:
            continue
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        keep, drop = (ru, rv) if order[ru] <= order[rv] else (rv, ru)
        rep[drop] = keep
    new_nodes = []
    seen = set()
    for n in tree.nodes:
        r = find(n)
        if r not in seen:
            seen.add(r)
            new_nodes.append(r)
    new_edges = []
    new_edge_of = {}
    edge_map = {}
    for u, v in tree.edges:
        if (u, v) not in labeled:
            continue
        e2 = (find(u), find(v))
        edge_map[(u, v)] = e2
        new_edges.append(e2)
    for key, e in tree.edge_of.items():
        new_edge_of[key] = edge_map[e]
    return OrientedTree(tuple(new_nodes), tuple(new_edges), new_edge_of)


def is_laminar(family: Iterable[frozenset]) -> bool:
    return laminar_violation(family) is None


def laminar_violation(family: Iterable[frozenset]) -> tuple[int, int] | None:
    """Index pair of the first crossing (neither disjoint nor nested), if any."""
    fam = [frozenset(s) for s in family]
    for i in range(len(fam)):
        for j in range(i + 1, len(fam)):
            a, b = fam[i], fam[j]
            inter = a & b
            if inter and not (a <= b or b <= a):
                return i, j
    return None


def _fresh(name: str, taken: set[str]) -> str:
    candidate = name
    while candidate in taken:
        candidate += "'"
    return candidate


def build_laminar_tree(hyper: Hypergraph, orientation: str) -> OrientedTree:
    """Rooted tree defining a laminar hypergraph.

    Each hyperedge becomes a tree node whose edge points to the smallest
    hyperedge containing it (or to the fresh root).  ``toward-root`` makes all
    paths end at the root; ``away-from-root`` is the mirror image.  Duplicate
    member sets are chained onto consecutive series edges in key order.  Nodes
    in no hyperedge get the empty path anchored at the root.
    """
    if orientation not in (TOWARD_ROOT, AWAY_FROM_ROOT):
        raise InputError(f"unknown orientation {orientation!r}")
    errs = hypergraph_errors(hyper)
    if errs:
        raise InputError("invalid hypergraph: " + "; ".join(errs))
    sets = [mem for _, mem in hyper.edges]
    crossing = laminar_violation(sets)
    if crossing is not None:
        i, j = crossing
        raise PreconditionError(
            f"family is not laminar: hyperedges {hyper.edges[i][0]} and "
            f"{hyper.edges[j][0]} cross")

    keys = hyper.keys()
    root = _fresh("r", set(keys))
    parent: dict[str, str] = {}
    for i, (ki, si) in enumerate(hyper.edges):
        best: tuple[int, int] | None = None
        best_key = root
        for j, (kj, sj) in enumerate(hyper.edges):
            if i == j or not si <= sj:
                continue
            if len(sj) == len(si) and j < i:
                continue  # duplicate chain runs in key order
            cand = (len(sj), j)
            if best is None or cand < best:
                best = cand
                best_key = kj
        parent[ki] = best_key

    if orientation == TOWARD_ROOT:
        edge_of = {k: (k, parent[k]) for k in keys}
    else:
        edge_of = {k: (parent[k], k) for k in keys}
    nodes = (root,) + keys
    edges = tuple(edge_of[k] for k in keys)

    size_order = {k: (len(mem), i) for i, (k, mem) in enumerate(hyper.edges)}
    containing_map: dict[Hashable, list[str]] = {n: [] for n in hyper.nodes}
    for k, mem in hyper.edges:
        for n in mem:
            containing_map[n].append(k)
    paths: dict[Hashable, tuple[str, ...]] = {}
    for n in hyper.nodes:
        containing = sorted(containing_map[n], key=size_order.__getitem__)
        if not containing:
            paths[n] = (root,)
        elif orientation == TOWARD_ROOT:
            paths[n] = tuple(containing) + (root,)
        else:
            paths[n] = (root,) + tuple(reversed(containing))
    return OrientedTree(nodes, edges, edge_of, paths)


def single_node_tree(name: str = "r") -> OrientedTree:
    return OrientedTree((name,), (), {}, {})


def glue(t1: OrientedTree, r1: str, t2: OrientedTree, r2: str) -> OrientedTree:
    """Merge node r1 of t1 with node r2 of t2 into one node.

    Requires both trees to carry derived paths.  For every hypergraph node
    with edges in both trees, its t1 path must end at r1 and its t2 path must
    start at r2; the glued path is their concatenation.  t2 nodes are renamed
    on collision; the merged node keeps r2's name.
    """
    if t1.paths is None or t2.paths is None:
        raise InputError("glue requires trees with derived paths")
    if r1 not in set(t1.nodes):
        raise InputError(f"glue point {r1} not in first tree")
    if r2 not in set(t2.nodes):
        raise InputError(f"glue point {r2} not in second tree")
    dup = set(t1.edge_of) & set(t2.edge_of)
    if dup:
        raise InputError(f"trees share hyperedge keys: {sorted(dup)}")

    for n, p2 in t2.paths.items():
        p1 = t1.paths.get(n)
        if p1 is None or len(p1) <= 1 or len(p2) <= 1:
            continue
        if p1[-1] != r1:
            raise PreconditionError(
                f"glue precondition: path of {display(n)} in first tree ends at "
                f"{p1[-1]}, not at {r1}")
        if p2[0] != r2:
            raise PreconditionError(
                f"glue precondition: path of {display(n)} in second tree starts at "
                f"{p2[0]}, not at {r2}")

    kept1 = set(t1.nodes) - {r1}
    rename2: dict[str, str] = {}
    taken = set(kept1)
    merged = _fresh(r2, taken)
    taken.add(merged)
    for n in t2.nodes:
        if n == r2:
            rename2[n] = merged
        else:
            fresh = _fresh(n, taken)
            rename2[n] = fresh
            taken.add(fresh)
    map1 = {n: (merged if n == r1 else n) for n in t1.nodes}

    nodes = (merged,) + tuple(n for n in t1.nodes if n != r1) \
        + tuple(rename2[n] for n in t2.nodes if n != r2)
    edges = tuple((map1[u], map1[v]) for u, v in t1.edges) \
        + tuple((rename2[u], rename2[v]) for u, v in t2.edges)
    edge_of = {k: (map1[u], map1[v]) for k, (u, v) in t1.edge_of.items()}
    edge_of.update({k: (rename2[u], rename2[v]) for k, (u, v) in t2.edge_of.items()})

    paths: dict[Hashable, tuple[str, ...]] = {}
    for n in set(t1.paths) | set(t2.paths):
        p1 = t1.paths.get(n)
        p2 = t2.paths.get(n)
        q1 = tuple(map1[x] for x in p1) if p1 is not None else None
        q2 = tuple(rename2[x] for x in p2) if p2 is not None else None
        has1 = q1 is not None and len(q1) > 1
        has2 = q2 is not None and len(q2) > 1
        if has1 and has2:
            paths[n] = q1 + q2[1:]  # type: ignore[operator]
        elif has1:
            paths[n] = q1  # type: ignore[assignment]
        elif has2:
            paths[n] = q2  # type: ignore[assignment]
        else:
            paths[n] = (merged,)
    return OrientedTree(nodes, edges, edge_of, paths)
