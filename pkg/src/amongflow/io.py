"""JSON file formats: instances, trees, and result/matrix dumps.

Instance files::

    {"mode": "assignment" | "set",
     "variables": [ids], "domain": [ids],
     "lists": {var: [values]},
     "constraints": [{"scope": [vars], "range": [values], "min": int, "max": int}]}

Tree files::

    {"nodes": [ids],
     "edges": [{"from": id, "to": id, "hyperedges": [keys]}]}

Hyperedge keys are "c<i>" for the i-th constraint (0-based) and "v:<name>"
for a variable's assignment hyperedge.  Unknown keys are rejected everywhere;
all dumps are deterministic (sorted object keys, values in domain order).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .boolenc import BooleanInstance
from .errors import InputError
from .flow import network_matrices
from .hypergraph import OrientedTree
from .model import (
    AmongConstraint,
    CacInstance,
    FilterResult,
    MODES,
    OracleResult,
    require_valid,
)

INSTANCE_KEYS = {"mode", "variables", "domain", "lists", "constraints"}
CONSTRAINT_KEYS = {"scope", "range", "min", "max"}
TREE_KEYS = {"nodes", "edges"}
TREE_EDGE_KEYS = {"from", "to", "hyperedges"}


def _require_keys(obj: Mapping[str, Any], allowed: set[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{what} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise InputError(f"{what} has unknown keys {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise InputError(f"{what} misses keys {sorted(missing)}")


def _string_list(value: Any, what: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise InputError(f"{what} must be a list of strings")
    return value


def parse_instance(doc: Mapping[str, Any]) -> CacInstance:
    _require_keys(doc, INSTANCE_KEYS, "instance")
    if doc["mode"] not in MODES:
        raise InputError(f"instance mode must be one of {MODES}")
    variables = tuple(_string_list(doc["variables"], "variables"))
    domain = tuple(_string_list(doc["domain"], "domain"))
    if not isinstance(doc["lists"], dict):
        raise InputError("lists must be an object")
    lists = {v: frozenset(_string_list(vals, f"list of {v!r}"))
             for v, vals in doc["lists"].items()}
    if not isinstance(doc["constraints"], list):
        raise InputError("constraints must be a list")
    constraints = []
    for j, c in enumerate(doc["constraints"]):
        _require_keys(c, CONSTRAINT_KEYS, f"constraint {j}")
        if not isinstance(c["min"], int) or not isinstance(c["max"], int) \
                or isinstance(c["min"], bool) or isinstance(c["max"], bool):
            raise InputError(f"constraint {j}: min/max must be integers")
        constraints.append(AmongConstraint(
            scope=tuple(_string_list(c["scope"], f"constraint {j} scope")),
            range=frozenset(_string_list(c["range"], f"constraint {j} range")),
            min=c["min"],
            max=c["max"],
        ))
    inst = CacInstance(variables, domain, lists, tuple(constraints), doc["mode"])
    require_valid(inst)
    return inst


def dump_instance(inst: CacInstance) -> dict[str, Any]:
    return {
        "mode": inst.mode,
        "variables": list(inst.variables),
        "domain": list(inst.domain),
        "lists": {v: inst.sorted_values(inst.lists[v]) for v in inst.variables},
        "constraints": [
            {"scope": list(c.scope), "range": inst.sorted_values(c.range),
             "min": c.min, "max": c.max}
            for c in inst.constraints
        ],
    }


def load_instance(path: str | Path) -> CacInstance:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"instance file is not valid JSON: {exc}") from exc
    return parse_instance(doc)


def parse_tree(doc: Mapping[str, Any]) -> OrientedTree:
    _require_keys(doc, TREE_KEYS, "tree")
    nodes = tuple(_string_list(doc["nodes"], "tree nodes"))
    if not isinstance(doc["edges"], list):
        raise InputError("tree edges must be a list")
    edges = []
    edge_of: dict[str, tuple[str, str]] = {}
    for i, e in enumerate(doc["edges"]):
        _require_keys(e, TREE_EDGE_KEYS, f"tree edge {i}")
        if not isinstance(e["from"], str) or not isinstance(e["to"], str):
            raise InputError(f"tree edge {i}: endpoints must be strings")
        pair = (e["from"], e["to"])
        edges.append(pair)
        for key in _string_list(e["hyperedges"], f"tree edge {i} hyperedges"):
            if key in edge_of:
                raise InputError(f"hyperedge {key} assigned to two tree edges")
            edge_of[key] = pair
    tree = OrientedTree(nodes, tuple(edges), edge_of)
    from .hypergraph import require_tree
    require_tree(tree)
    return tree


def dump_tree(tree: OrientedTree) -> dict[str, Any]:
    keys_by_edge: dict[tuple[str, str], list[str]] = {}
    for key, e in tree.edge_of.items():
        keys_by_edge.setdefault(e, []).append(key)
    return {
        "nodes": list(tree.nodes),
        "edges": [
            {"from": u, "to": v, "hyperedges": sorted(keys_by_edge.get((u, v), []))}
            for u, v in tree.edges
        ],
    }


def load_tree(path: str | Path) -> OrientedTree:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read tree file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"tree file is not valid JSON: {exc}") from exc
    return parse_tree(doc)


def result_to_dict(result: FilterResult, inst: CacInstance) -> dict[str, Any]:
    def ordered(mapping: Mapping[str, frozenset[str]]) -> dict[str, list[str]]:
        return {v: inst.sorted_values(vals) for v, vals in mapping.items() if vals}

    return {
        "feasible": result.feasible,
        "removed": ordered(result.removed),
        "forced_in": ordered(result.forced_in),
        "forced_out": ordered(result.forced_out),
        "stats": dict(result.stats),
    }


def oracle_to_dict(result: OracleResult, inst: CacInstance) -> dict[str, Any]:
    out: dict[str, Any] = {"feasible": result.feasible}
    if result.supports is not None:
        out["supports"] = {v: inst.sorted_values(vals)
                           for v, vals in result.supports.items()}
    if result.can_include is not None:
        out["can_include"] = {v: inst.sorted_values(vals)
                              for v, vals in result.can_include.items()}
        out["can_exclude"] = {v: inst.sorted_values(vals)
                              for v, vals in result.can_exclude.items()}  # type: ignore[union-attr]
    return out


def to_json(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _grid_lines(name: str, row_labels: list[str], col_labels: list[str],
                rows: list[list[int]]) -> list[str]:
    lines = [f"{name} {len(rows)}x{len(col_labels)}"]
    lines.append("rows " + " ".join(row_labels))
    lines.append("cols " + " ".join(col_labels))
    for label, row in zip(row_labels, rows):
        lines.append(f"{label}: " + " ".join(str(x) for x in row))
    return lines


def _vector_lines(name: str, labels: list[str], values: list[int]) -> list[str]:
    lines = [f"{name} {len(values)}"]
    for label, value in zip(labels, values):
        lines.append(f"{label}: {value}")
    return lines


def matrices_text(binst: BooleanInstance, tree: OrientedTree) -> str:
    """Labeled dense dumps of M, a, c, P, N = PM and b = Pa; byte-stable."""
    mats = network_matrices(binst, tree)
    rows: list[str] = mats["row_labels"]  # type: ignore[assignment]
    cols: list[str] = mats["col_labels"]  # type: ignore[assignment]
    nodes: list[str] = mats["node_labels"]  # type: ignore[assignment]
    lines: list[str] = []
    lines += _grid_lines("M", rows, cols, mats["M"])  # type: ignore[arg-type]
    lines += _vector_lines("a", rows, mats["a"])  # type: ignore[arg-type]
    lines += _vector_lines("c", cols, mats["c"])  # type: ignore[arg-type]
    lines += _grid_lines("P", nodes, rows, mats["P"])  # type: ignore[arg-type]
    lines += _grid_lines("N", nodes, cols, mats["N"])  # type: ignore[arg-type]
    lines += _vector_lines("b", nodes, mats["b"])  # type: ignore[arg-type]
    return "\n".join(lines) + "\n"
