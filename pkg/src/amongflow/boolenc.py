"""Boolean encodings of an instance and the mapping of boolean filtering
results back onto the original lists.

Three encodings are provided:

* ``canonical`` -- one boolean per (variable, value) pair, one constraint per
  original among constraint over its scope-times-range rectangle, plus one
  exactly-one constraint per variable.
* ``set`` -- the canonical encoding without the exactly-one constraints,
  matching set-mode semantics where variables take value subsets.
* ``projection`` -- one boolean per original variable, meaning "this variable
  takes a value inside R"; only legal when every constraint has range exactly R.

Booleans whose list is not {0,1} are recorded as fixed and never reach the
flow construction; their contribution is folded into the constraint bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InputError, PreconditionError
from .model import (
    ASSIGNMENT_MODE,
    SET_MODE,
    CacInstance,
    FilterResult,
    all_removed_result,
    require_valid,
)

CANONICAL = "canonical"
SET_ENCODING = "set"
PROJECTION = "projection"
ENCODINGS = (CANONICAL, SET_ENCODING, PROJECTION)

# Boolean variable ids: (variable, value) pairs for the pair encodings,
# the plain variable id for the projection encoding.
BoolVarId = object


def display(var: BoolVarId) -> str:
    if isinstance(var, tuple):
        return f"{var[0]}={var[1]}"
    return str(var)


@dataclass(frozen=True)
class BoolConstraint:
    """Among(scope, {1}, min, max) over free boolean variables, bounds already
    folded for fixed scope members."""

    key: str
    scope: tuple[BoolVarId, ...]
    min: int
    max: int


@dataclass(frozen=True)
class BooleanInstance:
    variables: tuple[BoolVarId, ...]
    fixed: Mapping[BoolVarId, int]
    constraints: tuple[BoolConstraint, ...]
    origin: str
    projection_range: frozenset[str] | None = None
    infeasible: bool = False
    notices: tuple[str, ...] = ()

    @property
    def free_variables(self) -> tuple[BoolVarId, ...]:
        return tuple(v for v in self.variables if v not in self.fixed)


def _fold(key: str, members: Iterable[tuple[BoolVarId, int | None]],
          lo: int, hi: int) -> tuple[BoolConstraint | None, bool]:
    """Restrict a constraint to its free members.

    Returns (constraint or None, infeasible).  Fixed-one members lower both
    bounds; min is clamped at zero.  A constraint whose free scope empties is
    dropped when vacuously satisfied and flags infeasibility otherwise.
    """
    free: list[BoolVarId] = []
    ones = 0
    for var, fixed_val in members:
        if fixed_val is None:
            free.append(var)
        elif fixed_val == 1:
            ones += 1
    lo2 = max(0, lo - ones)
    hi2 = hi - ones
    if hi2 < 0 or lo2 > len(free):
        return None, True
    if not free:
        return None, False
    return BoolConstraint(key, tuple(free), lo2, hi2), False


def _pair_encoding(inst: CacInstance, with_assignment: bool, origin: str) -> BooleanInstance:
    variables: list[BoolVarId] = [(v, d) for v in inst.variables for d in inst.domain]
    fixed: dict[BoolVarId, int] = {
        (v, d): 0 for v in inst.variables for d in inst.domain if d not in inst.lists[v]
    }
    constraints: list[BoolConstraint] = []
    notices: list[str] = []
    infeasible = False

    def add(key: str, scope_pairs: list[tuple[str, str]], lo: int, hi: int) -> None:
        nonlocal infeasible
        members = [((v, d), fixed.get((v, d))) for v, d in scope_pairs]
        folded, bad = _fold(key, members, lo, hi)
        if bad:
            infeasible = True
            notices.append(f"{key}: unsatisfiable once fixed values are folded in")
        elif folded is None:
            notices.append(f"{key}: dropped (scope fully fixed, vacuously satisfied)")
        else:
            constraints.append(folded)

    for j, c in enumerate(inst.constraints):
        rect = [(v, d) for v in c.scope for d in inst.sorted_values(c.range)]
        add(inst.constraint_key(j), rect, c.min, c.max)
    if with_assignment:
        for v in inst.variables:
            add(f"v:{v}", [(v, d) for d in inst.domain], 1, 1)
    return BooleanInstance(
        variables=tuple(variables),
        fixed=fixed,
        constraints=tuple(constraints),
        origin=origin,
        infeasible=infeasible,
        notices=tuple(notices),
    )


def booleanize_canonical(inst: CacInstance) -> BooleanInstance:
    """Pair encoding with per-variable exactly-one constraints (assignment mode)."""
    require_valid(inst)
    if inst.mode != ASSIGNMENT_MODE:
        raise PreconditionError("canonical encoding requires assignment mode")
    if len(inst.domain) < 2:
        raise PreconditionError("canonical encoding requires a domain of size >= 2")
    return _pair_encoding(inst, with_assignment=True, origin=CANONICAL)


def booleanize_set(inst: CacInstance) -> BooleanInstance:
    """Pair encoding without exactly-one constraints (set mode)."""
    require_valid(inst)
    if inst.mode != SET_MODE:
        raise PreconditionError("set encoding requires set mode")
    return _pair_encoding(inst, with_assignment=False, origin=SET_ENCODING)


def booleanize_projection(inst: CacInstance, projection_range: Iterable[str]) -> BooleanInstance:
    """One boolean per original variable: true iff the variable picks a value
    in ``projection_range``.  Every constraint must have exactly that range."""
    require_valid(inst)
    if inst.mode != ASSIGNMENT_MODE:
        raise PreconditionError("projection encoding requires assignment mode")
    rng = frozenset(projection_range)
    if not rng <= set(inst.domain):
        raise InputError("projection range contains non-domain values")
    for j, c in enumerate(inst.constraints):
        if c.range != rng:
            raise PreconditionError(
                f"encoding mismatch: {inst.constraint_key(j)} has range "
                f"{sorted(c.range)}, projection requires {sorted(rng)}")

    fixed: dict[BoolVarId, int] = {}
    infeasible = False
    notices: list[str] = []
    for v in inst.variables:
        lv = inst.lists[v]
        if not lv:
            fixed[v] = 0
            infeasible = True
            notices.append(f"variable {v}: empty list, no value available")
        elif not lv & rng:
            fixed[v] = 0
        elif lv <= rng:
            fixed[v] = 1

    constraints: list[BoolConstraint] = []
    for j, c in enumerate(inst.constraints):
        key = inst.constraint_key(j)
        members = [(v, fixed.get(v)) for v in c.scope]
        folded, bad = _fold(key, members, c.min, c.max)
        if bad:
            infeasible = True
            notices.append(f"{key}: unsatisfiable once fixed values are folded in")
        elif folded is None:
            notices.append(f"{key}: dropped (scope fully fixed, vacuously satisfied)")
        else:
            constraints.append(folded)
    return BooleanInstance(
        variables=tuple(inst.variables),
        fixed=fixed,
        constraints=tuple(constraints),
        origin=PROJECTION,
        projection_range=rng,
        infeasible=infeasible,
        notices=tuple(notices),
    )


def booleanize(inst: CacInstance, encoding: str,
               projection_range: Iterable[str] | None = None) -> BooleanInstance:
    if encoding == CANONICAL:
        return booleanize_canonical(inst)
    if encoding == SET_ENCODING:
        return booleanize_set(inst)
    if encoding == PROJECTION:
        if projection_range is None:
            raise InputError("projection encoding requires a range")
        return booleanize_projection(inst, projection_range)
    raise InputError(f"unknown encoding {encoding!r}")


def default_encoding(inst: CacInstance) -> str:
    return SET_ENCODING if inst.mode == SET_MODE else CANONICAL


def map_back(binst: BooleanInstance,
             bool_supports: Mapping[BoolVarId, frozenset[int]],
             inst: CacInstance,
             stats: Mapping[str, int] | None = None) -> FilterResult:
    """Translate per-boolean support sets into removals on the original lists."""
    free = set(binst.free_variables)
    for var in bool_supports:
        if var not in free:
            raise InputError(f"supports given for unknown boolean variable {display(var)}")
    missing = free - set(bool_supports)
    if missing:
        raise InputError(
            "supports missing for boolean variables: "
            + ", ".join(sorted(display(v) for v in missing)))

    if binst.infeasible or any(not bool_supports[v] for v in free):
        return all_removed_result(inst, stats)

    def support_of(var: BoolVarId) -> frozenset[int]:
        if var in binst.fixed:
            return frozenset({binst.fixed[var]})
        return bool_supports[var]

    removed: dict[str, set[str]] = {}
    forced_in: dict[str, set[str]] = {}
    if binst.origin in (CANONICAL, SET_ENCODING):
        for var in binst.variables:
            v, d = var  # type: ignore[misc]
            if d not in inst.lists[v]:
                continue
            supp = support_of(var)
            if 1 not in supp:
                removed.setdefault(v, set()).add(d)
            if binst.origin == SET_ENCODING and 0 not in supp:
                forced_in.setdefault(v, set()).add(d)
    else:
        assert binst.projection_range is not None
        rng = binst.projection_range
        for v in binst.variables:
            supp = support_of(v)
            gone: set[str] = set()
            if 1 not in supp:
                gone |= inst.lists[v] & rng
            if 0 not in supp:
                gone |= inst.lists[v] - rng
            if gone:
                removed[v] = gone

    removed_out = {v: frozenset(vals) for v, vals in removed.items()}
    forced_out = dict(removed_out) if inst.mode == SET_MODE else {}
    return FilterResult(
        feasible=True,
        removed=removed_out,
        forced_in={v: frozenset(vals) for v, vals in forced_in.items()},
        forced_out=forced_out,
        stats=dict(stats or {}),
    )
