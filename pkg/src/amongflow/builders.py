"""Family-specific tree builders and the decidable conditions they rely on.

Each builder booleanizes the instance with the encoding native to its family
and constructs an oriented tree defining the resulting hypergraph:

* ``disjoint``    -- pairwise-disjoint scope-times-range rectangles; star /
                     two-level tree through a root.
* ``sequence``    -- sliding-window (interval) scopes over the variable order
                     with one common range; a single directed path.
* ``tfo``         -- constraint scopes split into two laminar families; two
                     rooted laminar trees glued at their roots.
* ``full-domain`` -- every scope is the whole variable set and ranges form a
                     laminar family; nested range chain glued to the variable star.
* ``gcc-plus``    -- full cardinality constraint plus extra constraints of the
                     allowed shapes; laminar subtrees grafted onto both sides.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .boolenc import (
    CANONICAL,
    PROJECTION,
    SET_ENCODING,
    BoolConstraint,
    BooleanInstance,
    booleanize_canonical,
    booleanize_projection,
    booleanize_set,
)
from .errors import InputError, PreconditionError
from .hypergraph import (
    AWAY_FROM_ROOT,
    TOWARD_ROOT,
    Hypergraph,
    OrientedTree,
    booleanized_hypergraph,
    build_laminar_tree,
    glue,
    is_laminar,
    laminar_violation,
    single_node_tree,
)
from .model import ASSIGNMENT_MODE, SET_MODE, CacInstance, require_valid

DISJOINT = "disjoint"
SEQUENCE = "sequence"
TFO = "tfo"
FULL_DOMAIN = "full-domain"
GCC_PLUS = "gcc-plus"
FAMILY_TAGS = (DISJOINT, SEQUENCE, TFO, FULL_DOMAIN, GCC_PLUS)


def check_disjointedness(inst: CacInstance) -> bool:
    """True iff all constraint pairs have disjoint scope-times-range rectangles."""
    require_valid(inst)
    for i in range(len(inst.constraints)):
        ci = inst.constraints[i]
        si, ri = set(ci.scope), ci.range
        for j in range(i + 1, len(inst.constraints)):
            cj = inst.constraints[j]
            if (si & set(cj.scope)) and (ri & cj.range):
                return False
    return True


def _disjoint_witness(inst: CacInstance) -> tuple[str, str] | None:
    for i in range(len(inst.constraints)):
        ci = inst.constraints[i]
        si, ri = set(ci.scope), ci.range
        for j in range(i + 1, len(inst.constraints)):
            cj = inst.constraints[j]
            if (si & set(cj.scope)) and (ri & cj.range):
                return inst.constraint_key(i), inst.constraint_key(j)
    return None


def build_disjoint_tree(inst: CacInstance) -> tuple[BooleanInstance, OrientedTree]:
    """Two-level tree: one node per constraint with an edge into the root, and
    (assignment mode) one node per variable with an edge out of it."""
    require_valid(inst)
    witness = _disjoint_witness(inst)
    if witness is not None:
        raise PreconditionError(
            f"disjointedness violated: constraints {witness[0]} and {witness[1]} "
            f"share a (variable, value) pair")
    binst = booleanize_canonical(inst) if inst.mode == ASSIGNMENT_MODE \
        else booleanize_set(inst)

    root = "r"
    nodes = [root]
    edges = []
    edge_of = {}
    for c in binst.constraints:
        name = c.key if c.key != root else c.key + "'"
        nodes.append(name)
        e = (name, root) if not c.key.startswith("v:") else (root, name)
        edges.append(e)
        edge_of[c.key] = e

    covering: dict[object, list[str]] = {}
    for c in binst.constraints:
        for var in c.scope:
            covering.setdefault(var, []).append(c.key)
    paths = {}
    for var in binst.free_variables:
        into = [k for k in covering.get(var, ()) if not k.startswith("v:")]
        out = [k for k in covering.get(var, ()) if k.startswith("v:")]
        assert len(into) <= 1 and len(out) <= 1, "disjointedness guarantees this"
        seq: list[str] = []
        if into:
            seq.append(edge_of[into[0]][0])
        seq.append(root)
        if out:
            seq.append(edge_of[out[0]][1])
        paths[var] = tuple(seq)
    tree = OrientedTree(tuple(nodes), tuple(edges), edge_of, paths)
    return binst, tree


def _interval_of(positions: Sequence[int], key: str) -> tuple[int, int]:
    lo, hi = min(positions), max(positions)
    if hi - lo + 1 != len(positions):
        raise PreconditionError(
            f"no consecutive-ones order: scope of {key} is not contiguous "
            f"over the variable order")
    return lo, hi


def build_sequence_tree(inst: CacInstance,
                        projection_range: Iterable[str]) -> tuple[BooleanInstance, OrientedTree]:
    """Projection booleanization plus a tree that is a single directed path.

    Constraint scopes must be intervals of the declared variable order whose
    endpoints can be ordered jointly nondecreasing (true for sliding windows,
    also after list narrowing).  No reordering of variables is attempted.
    """
    require_valid(inst)
    binst = booleanize_projection(inst, projection_range)
    free = binst.free_variables
    pos = {v: i for i, v in enumerate(free)}
    intervals = []
    for c in binst.constraints:
        lo, hi = _interval_of([pos[v] for v in c.scope], c.key)
        intervals.append((lo, hi, c.key))
    order = sorted(range(len(intervals)),
                   key=lambda i: (intervals[i][0], intervals[i][1], i))
    last_hi = None
    for i in order:
        hi, key = intervals[i][1], intervals[i][2]
        if last_hi is not None and hi < last_hi:
            raise PreconditionError(
                f"no consecutive-ones order: scope of {key} is strictly nested "
                f"inside an earlier constraint with slack on both sides")
        last_hi = hi

    nodes = [f"p{i}" for i in range(len(order) + 1)]
    edges = []
    edge_of = {}
    for rank, i in enumerate(order):
        e = (nodes[rank], nodes[rank + 1])
        edges.append(e)
        edge_of[intervals[i][2]] = e
    rank_of = {intervals[i][2]: rank for rank, i in enumerate(order)}
    paths = {}
    for v in free:
        ranks = sorted(rank_of[c.key] for c in binst.constraints if v in c.scope)
        if not ranks:
            paths[v] = (nodes[0],)
            continue
        assert ranks == list(range(ranks[0], ranks[-1] + 1)), \
            "monotone interval order guarantees contiguity"
        paths[v] = tuple(nodes[ranks[0]:ranks[-1] + 2])
    tree = OrientedTree(tuple(nodes), tuple(edges), edge_of, paths)
    return binst, tree


def split_two_laminar(sets: Sequence[tuple[str, frozenset]]) -> tuple[list[str], list[str]]:
    """Partition keyed sets into two laminar families by 2-coloring the
    crossing graph (complete: fails only when no partition exists)."""
    n = len(sets)
    crossing = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            a, b = sets[i][1], sets[j][1]
            if (a & b) and not (a <= b or b <= a):
                crossing[i].append(j)
                crossing[j].append(i)
    color = [-1] * n
    for start in range(n):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in crossing[i]:
                if color[j] == -1:
                    color[j] = 1 - color[i]
                    queue.append(j)
                elif color[j] == color[i]:
                    raise PreconditionError(
                        f"scopes do not split into two laminar families: "
                        f"{sets[i][0]} and {sets[j][0]} cross within any bipartition")
    f1 = [sets[i][0] for i in range(n) if color[i] == 0]
    f2 = [sets[i][0] for i in range(n) if color[i] == 1]
    return f1, f2


def _glued_two_family_tree(hyper: Hypergraph, keys1: Sequence[str],
                           keys2: Sequence[str]) -> OrientedTree:
    members = hyper.members()
    h1 = Hypergraph(hyper.nodes, tuple((k, members[k]) for k in keys1))
    h2 = Hypergraph(hyper.nodes, tuple((k, members[k]) for k in keys2))
    t1 = build_laminar_tree(h1, TOWARD_ROOT)
    t2 = build_laminar_tree(h2, AWAY_FROM_ROOT) if keys2 else single_node_tree()
    return glue(t1, t1.root_hint, t2, t2.root_hint)


def build_tfo_tree(elements: Iterable[str],
                   family1: Mapping[frozenset, tuple[int, int]] | Sequence[tuple[Iterable[str], int, int]],
                   family2: Mapping[frozenset, tuple[int, int]] | Sequence[tuple[Iterable[str], int, int]],
                   ) -> tuple[BooleanInstance, OrientedTree]:
    """Explicit two-laminar-family feasibility model: boolean variable per
    element, one among constraint per set, tree glued from the two rooted
    laminar trees.  Both families must be nonempty and laminar."""
    elements = tuple(elements)

    def norm(fam) -> list[tuple[frozenset, int, int]]:
        if isinstance(fam, Mapping):
            return [(frozenset(s), lo, hi) for s, (lo, hi) in fam.items()]
        return [(frozenset(s), lo, hi) for s, lo, hi in fam]

    f1 = norm(family1)
    f2 = norm(family2)
    if not f1 or not f2:
        raise PreconditionError("both families must be nonempty")
    for name, fam in (("first", f1), ("second", f2)):
        if not is_laminar([s for s, _, _ in fam]):
            i, j = laminar_violation([s for s, _, _ in fam])  # type: ignore[misc]
            raise PreconditionError(f"{name} family is not laminar: sets {i} and {j} cross")
        for s, lo, hi in fam:
            if not s <= set(elements):
                raise InputError(f"{name} family set {sorted(s)} leaves the ground set")
            if not 0 <= lo <= hi <= len(s):
                raise PreconditionError(
                    f"{name} family set {sorted(s)}: bounds violate 0 <= min <= max <= |set|")

    constraints = []
    keys1, keys2 = [], []
    for idx, (s, lo, hi) in enumerate(f1 + f2):
        key = f"c{idx}"
        ordered = tuple(e for e in elements if e in s)
        constraints.append(BoolConstraint(key, ordered, lo, hi))
        (keys1 if idx < len(f1) else keys2).append(key)
    binst = BooleanInstance(
        variables=elements,
        fixed={},
        constraints=tuple(constraints),
        origin=PROJECTION,
        projection_range=frozenset({"1"}),
    )
    tree = _glued_two_family_tree(booleanized_hypergraph(binst), keys1, keys2)
    return binst, tree


def build_tfo_tree_for(inst: CacInstance,
                       projection_range: Iterable[str] | None = None,
                       ) -> tuple[BooleanInstance, OrientedTree]:
    """Pipeline entry for the ``tfo`` family tag.

    Set-mode instances use the set encoding; assignment-mode instances with a
    common constraint range use the projection encoding.  The constraint
    scopes are then split into two laminar families and the glued tree built.
    An empty second family (nothing crosses) degenerates to the first family's
    rooted tree alone.
    """
    require_valid(inst)
    if inst.mode == SET_MODE:
        binst = booleanize_set(inst)
    else:
        if projection_range is None:
            ranges = {c.range for c in inst.constraints}
            if len(ranges) != 1:
                raise PreconditionError(
                    "tfo builder needs a common constraint range (or an explicit one)")
            projection_range = next(iter(ranges))
        binst = booleanize_projection(inst, projection_range)
    sets = [(c.key, frozenset(c.scope)) for c in binst.constraints]
    keys1, keys2 = split_two_laminar(sets)
    tree = _glued_two_family_tree(booleanized_hypergraph(binst), keys1, keys2)
    return binst, tree


def _full_domain_condition(inst: CacInstance) -> tuple[bool, str]:
    for j, c in enumerate(inst.constraints):
        if set(c.scope) != set(inst.variables):
            raise PreconditionError(
                f"full-domain family requires scope = all variables; "
                f"{inst.constraint_key(j)} is narrower")
    bad = laminar_violation([c.range for c in inst.constraints])
    if bad is not None:
        return False, (f"full-domain condition: ranges of {inst.constraint_key(bad[0])} "
                       f"and {inst.constraint_key(bad[1])} cross")
    return True, ""


def check_full_domain_family(inst: CacInstance) -> bool:
    """Decides tree-definability for instances whose constraints all have full
    scope: true iff the range family is laminar.  Requires |domain| >= 3 (the
    equivalence does not hold for boolean domains)."""
    require_valid(inst)
    if len(inst.domain) < 3:
        raise PreconditionError("full-domain checker requires a domain of size >= 3")
    ok, _ = _full_domain_condition(inst)
    return ok


def build_full_domain_tree(inst: CacInstance) -> tuple[BooleanInstance, OrientedTree]:
    """Nested range chain (toward the root) glued with the star of per-variable
    assignment edges (away from it)."""
    require_valid(inst)
    ok, why = _full_domain_condition(inst)
    if not ok:
        raise PreconditionError(why)
    binst = booleanize_canonical(inst)
    hyper = booleanized_hypergraph(binst)
    keys1 = [c.key for c in binst.constraints if not c.key.startswith("v:")]
    keys2 = [c.key for c in binst.constraints if c.key.startswith("v:")]
    tree = _glued_two_family_tree(hyper, keys1, keys2)
    return binst, tree


def _gcc_plus_condition(inst: CacInstance) -> tuple[bool, str]:
    vset = set(inst.variables)
    dset = set(inst.domain)
    shapes = []
    for j, c in enumerate(inst.constraints):
        s, r = set(c.scope), c.range
        if not (len(s) == 1 or s == vset or len(r) == 1 or r == dset):
            return False, (f"gcc-plus shape condition: {inst.constraint_key(j)} has "
                           f"neither singleton/full scope nor singleton/full range")
        shapes.append((s, r))
    for i in range(len(shapes)):
        s1, r1 = shapes[i]
        for j in range(i + 1, len(shapes)):
            s2, r2 = shapes[j]
            same_full = s1 == s2 == vset
            same_single = len(s1) == 1 and s1 == s2
            if (same_full or same_single) and (r1 & r2) and not (r1 <= r2 or r2 <= r1):
                return False, (f"gcc-plus pair condition (a): ranges of "
                               f"{inst.constraint_key(i)} and {inst.constraint_key(j)} cross")
            same_full_r = r1 == r2 == dset
            same_single_r = len(r1) == 1 and r1 == r2
            if (same_full_r or same_single_r) and (s1 & s2) and not (s1 <= s2 or s2 <= s1):
                return False, (f"gcc-plus pair condition (b): scopes of "
                               f"{inst.constraint_key(i)} and {inst.constraint_key(j)} cross")
    return True, ""


def _require_full_gcc(inst: CacInstance) -> None:
    vset = set(inst.variables)
    covered = {next(iter(c.range)) for c in inst.constraints
               if set(c.scope) == vset and len(c.range) == 1}
    missing = set(inst.domain) - covered
    if missing:
        raise PreconditionError(
            f"gcc-plus family requires a full cardinality constraint: no "
            f"full-scope singleton-range constraint for values {sorted(missing)}")


def check_gcc_plus_family(inst: CacInstance) -> bool:
    """Decides tree-definability for instances containing a full cardinality
    constraint: every constraint must have singleton/full scope or
    singleton/full range, with nested-or-disjoint ranges (scopes) whenever two
    constraints share a full or singleton scope (range)."""
    require_valid(inst)
    _require_full_gcc(inst)
    if len(inst.domain) < 3:
        raise PreconditionError("gcc-plus checker requires a domain of size >= 3")
    ok, _ = _gcc_plus_condition(inst)
    return ok


def build_gcc_plus_tree(inst: CacInstance) -> tuple[BooleanInstance, OrientedTree]:
    """Assemble the tree exactly as the structural condition prescribes:
    per-value scope trees grafted onto the nested range chain (toward the
    root), mirrored per-variable range trees grafted onto the scope chain of
    full-range constraints plus the assignment star (away from it)."""
    require_valid(inst)
    _require_full_gcc(inst)
    ok, why = _gcc_plus_condition(inst)
    if not ok:
        raise PreconditionError(why)
    binst = booleanize_canonical(inst)
    hyper = booleanized_hypergraph(binst)
    members = hyper.members()

    vset = set(inst.variables)
    dset = set(inst.domain)
    by_value: dict[str, list[str]] = {}
    toward: list[str] = []
    by_variable: dict[str, list[str]] = {}
    away: list[str] = []
    shape: dict[str, tuple[set[str], frozenset]] = {}
    for j, c in enumerate(inst.constraints):
        shape[inst.constraint_key(j)] = (set(c.scope), c.range)
    for c in binst.constraints:
        if c.key.startswith("v:"):
            away.append(c.key)
            continue
        s, r = shape[c.key]
        if len(r) == 1 and s != vset:
            by_value.setdefault(next(iter(r)), []).append(c.key)
        elif s == vset:
            toward.append(c.key)
        elif len(s) == 1 and r != dset:
            by_variable.setdefault(next(iter(s)), []).append(c.key)
        else:
            away.append(c.key)

    def sub(keys: Sequence[str]) -> Hypergraph:
        return Hypergraph(hyper.nodes, tuple((k, members[k]) for k in keys))

    def first_key_with(keys: Sequence[str], target: frozenset) -> str | None:
        for k in keys:
            if members[k] == target:
                return k
        return None

    t_toward = build_laminar_tree(sub(toward), TOWARD_ROOT)
    toward_root = t_toward.root_hint
    for d, keys in sorted(by_value.items()):
        anchor_set = frozenset((v, d) for v in inst.variables if d in inst.lists[v])
        anchor = first_key_with(toward, anchor_set)
        if anchor is None:  # pragma: no cover - full GCC guarantees the container
            raise PreconditionError(
                f"gcc-plus assembly: no full-scope constraint for value {d}")
        t_d = build_laminar_tree(sub(keys), TOWARD_ROOT)
        t_toward = glue(t_d, t_d.root_hint, t_toward, anchor)

    t_away = build_laminar_tree(sub(away), AWAY_FROM_ROOT)
    away_root = t_away.root_hint
    for v, keys in sorted(by_variable.items()):
        anchor_set = frozenset((v, d) for d in inst.lists[v])
        anchor = first_key_with(away, anchor_set)
        if anchor is None:  # pragma: no cover - assignment hyperedges guarantee it
            raise PreconditionError(
                f"gcc-plus assembly: no full-range hyperedge for variable {v}")
        t_v = build_laminar_tree(sub(keys), AWAY_FROM_ROOT)
        t_away = glue(t_away, anchor, t_v, t_v.root_hint)

    tree = glue(t_toward, toward_root, t_away, away_root)
    return binst, tree


def build_family(inst: CacInstance, tag: str,
                 projection_range: Iterable[str] | None = None,
                 ) -> tuple[BooleanInstance, OrientedTree]:
    """Dispatch a family tag (the CLI ``--builder`` values)."""
    if tag == DISJOINT:
        return build_disjoint_tree(inst)
    if tag == SEQUENCE:
        if projection_range is None:
            ranges = {c.range for c in inst.constraints}
            if len(ranges) != 1:
                raise PreconditionError(
                    "sequence builder needs a common constraint range (or an explicit one)")
            projection_range = next(iter(ranges))
        return build_sequence_tree(inst, projection_range)
    if tag == TFO:
        return build_tfo_tree_for(inst, projection_range)
    if tag == FULL_DOMAIN:
        return build_full_domain_tree(inst)
    if tag == GCC_PLUS:
        return build_gcc_plus_tree(inst)
    raise InputError(f"unknown builder {tag!r} (expected one of {', '.join(FAMILY_TAGS)})")


def builder_encoding(inst: CacInstance, tag: str) -> str:
    """The encoding a family tag implies for a given instance."""
    if tag in (DISJOINT, FULL_DOMAIN, GCC_PLUS):
        return SET_ENCODING if (tag == DISJOINT and inst.mode == SET_MODE) else CANONICAL
    if tag == TFO and inst.mode == SET_MODE:
        return SET_ENCODING
    return PROJECTION
