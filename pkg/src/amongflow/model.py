"""Conjunctions of among constraints: instances, evaluation, and a brute-force oracle.

An instance couples a variable set, a finite domain, per-variable value lists
and a collection of among constraints.  In ``assignment`` mode a solution maps
every variable to one value of its list; in ``set`` mode to a subset of its
list, and an among constraint counts the total number of (variable, value)
memberships that hit its range.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import InputError, OracleBudgetError

ASSIGNMENT_MODE = "assignment"
SET_MODE = "set"
MODES = (ASSIGNMENT_MODE, SET_MODE)

DEFAULT_ORACLE_BUDGET = 10**7

# var -> value (assignment mode) or var -> value set (set mode)
Assignment = Mapping[str, object]


@dataclass(frozen=True)
class AmongConstraint:
    """Among(scope, range, min, max): the number of scope variables whose value
    lies in ``range`` must be between ``min`` and ``max``."""

    scope: tuple[str, ...]
    range: frozenset[str]
    min: int
    max: int


def among(scope: Iterable[str], values: Iterable[str], lo: int, hi: int) -> AmongConstraint:
    """Convenience constructor normalizing scope/range containers."""
    return AmongConstraint(tuple(scope), frozenset(values), lo, hi)


@dataclass(frozen=True)
class CacInstance:
    variables: tuple[str, ...]
    domain: tuple[str, ...]
    lists: Mapping[str, frozenset[str]]
    constraints: tuple[AmongConstraint, ...]
    mode: str = ASSIGNMENT_MODE

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.variables)}

    @cached_property
    def val_index(self) -> dict[str, int]:
        return {d: i for i, d in enumerate(self.domain)}

    def sorted_values(self, values: Iterable[str]) -> list[str]:
        """Values ordered by their dense domain index (first-appearance order)."""
        return sorted(values, key=self.val_index.__getitem__)

    def constraint_key(self, j: int) -> str:
        return f"c{j}"


def make_instance(
    variables: Iterable[str],
    domain: Iterable[str],
    lists: Mapping[str, Iterable[str]] | None = None,
    constraints: Iterable[AmongConstraint] = (),
    mode: str = ASSIGNMENT_MODE,
) -> CacInstance:
    """Build an instance; omitted lists default to the full domain."""
    variables = tuple(variables)
    domain = tuple(domain)
    if lists is None:
        lmap = {v: frozenset(domain) for v in variables}
    else:
        lmap = {v: frozenset(lists.get(v, domain)) for v in variables}
    return CacInstance(variables, domain, lmap, tuple(constraints), mode)


def validate_instance(inst: CacInstance) -> list[str]:
    """Check all structural invariants.  Violations are returned as data, one
    message each; an empty list means the instance is well formed."""
    out: list[str] = []
    if inst.mode not in MODES:
        out.append(f"unknown mode {inst.mode!r}")
    if len(set(inst.variables)) != len(inst.variables):
        out.append("duplicate variable ids")
    if len(set(inst.domain)) != len(inst.domain):
        out.append("duplicate domain value ids")
    vset = set(inst.variables)
    dset = set(inst.domain)
    for v in inst.variables:
        if v not in inst.lists:
            out.append(f"variable {v!r} has no list")
        elif not set(inst.lists[v]) <= dset:
            extra = sorted(set(inst.lists[v]) - dset)
            out.append(f"list of {v!r} contains non-domain values {extra}")
    for v in inst.lists:
        if v not in vset:
            out.append(f"list given for unknown variable {v!r}")
    for j, c in enumerate(inst.constraints):
        key = inst.constraint_key(j)
        if not c.scope:
            out.append(f"{key}: empty scope")
        if len(set(c.scope)) != len(c.scope):
            out.append(f"{key}: scope repeats a variable")
        if not set(c.scope) <= vset:
            out.append(f"{key}: scope contains unknown variables")
        if not c.range <= dset:
            out.append(f"{key}: range contains unknown values")
        if not (isinstance(c.min, int) and isinstance(c.max, int)):
            out.append(f"{key}: bounds must be integers")
            continue
        # In set mode each scope variable can contribute up to |range| hits.
        cap = len(c.scope) if inst.mode == ASSIGNMENT_MODE else len(c.scope) * len(c.range)
        if not (0 <= c.min <= c.max <= cap):
            bound = "|scope|" if inst.mode == ASSIGNMENT_MODE else "|scope|*|range|"
            out.append(f"{key}: bounds violate 0 <= min <= max <= {bound} "
                       f"(min={c.min}, max={c.max}, cap={cap})")
    return out


def require_valid(inst: CacInstance) -> None:
    violations = validate_instance(inst)
    if violations:
        raise InputError("invalid instance: " + "; ".join(violations))


def _check_assignment_ids(inst: CacInstance, s: Mapping[str, object]) -> None:
    vset = set(inst.variables)
    for v in s:
        if v not in vset:
            raise InputError(f"assignment mentions unknown variable {v!r}")
    missing = vset - set(s)
    if missing:
        raise InputError(f"assignment misses variables {sorted(missing)}")
    dset = set(inst.domain)
    for v, val in s.items():
        vals = {val} if inst.mode == ASSIGNMENT_MODE else set(val)  # type: ignore[arg-type]
        if not vals <= dset:
            raise InputError(f"assignment of {v!r} uses unknown values {sorted(vals - dset)}")


def evaluate(inst: CacInstance, s: Mapping[str, object]) -> bool:
    """True iff ``s`` respects every list and every among constraint
    under the instance mode's counting rule."""
    _check_assignment_ids(inst, s)
    if inst.mode == ASSIGNMENT_MODE:
        for v in inst.variables:
            if s[v] not in inst.lists[v]:
                return False
        for c in inst.constraints:
            count = sum(1 for v in c.scope if s[v] in c.range)
            if not c.min <= count <= c.max:
                return False
    else:
        for v in inst.variables:
            if not frozenset(s[v]) <= inst.lists[v]:  # type: ignore[arg-type]
                return False
        for c in inst.constraints:
            count = sum(len(frozenset(s[v]) & c.range) for v in c.scope)  # type: ignore[arg-type]
            if not c.min <= count <= c.max:
                return False
    return True


@dataclass(frozen=True)
class OracleResult:
    """Exhaustively computed support information.

    Assignment mode fills ``supports`` (values reachable per variable); set
    mode fills ``can_include``/``can_exclude`` (whether some solution puts the
    value inside / outside s(v)).
    """

    feasible: bool
    supports: Mapping[str, frozenset[str]] | None = None
    can_include: Mapping[str, frozenset[str]] | None = None
    can_exclude: Mapping[str, frozenset[str]] | None = None


def oracle_supports(inst: CacInstance, budget: int = DEFAULT_ORACLE_BUDGET) -> OracleResult:
    """Enumerate every candidate solution and collect supports.

    Enumeration is lexicographic over the dense variable/value indices, so
    failures reproduce exactly.  Raises OracleBudgetError instead of sampling
    when the search space exceeds ``budget``.
    """
    require_valid(inst)
    ordered_lists = [inst.sorted_values(inst.lists[v]) for v in inst.variables]
    compiled = [
        (tuple(inst.var_index[v] for v in c.scope), c.range, c.min, c.max)
        for c in inst.constraints
    ]
    if inst.mode == ASSIGNMENT_MODE:
        size = math.prod(len(vals) for vals in ordered_lists)
        if size > budget:
            raise OracleBudgetError(
                f"oracle too large: {size} assignments exceed budget {budget}")
        supports: dict[str, set[str]] = {v: set() for v in inst.variables}
        feasible = False
        for combo in itertools.product(*ordered_lists):
            ok = True
            for positions, rng, lo, hi in compiled:
                count = sum(1 for i in positions if combo[i] in rng)
                if not lo <= count <= hi:
                    ok = False
                    break
            if ok:
                feasible = True
                for v, d in zip(inst.variables, combo):
                    supports[v].add(d)
        return OracleResult(
            feasible=feasible,
            supports={v: frozenset(vals) for v, vals in supports.items()},
        )

    size = math.prod(2 ** len(vals) for vals in ordered_lists)
    if size > budget:
        raise OracleBudgetError(
            f"oracle too large: {size} subset assignments exceed budget {budget}")
    subset_lists = [
        [frozenset(d for i, d in enumerate(vals) if (mask >> i) & 1)
         for mask in range(2 ** len(vals))]
        for vals in ordered_lists
    ]
    can_include: dict[str, set[str]] = {v: set() for v in inst.variables}
    can_exclude: dict[str, set[str]] = {v: set() for v in inst.variables}
    feasible = False
    for combo in itertools.product(*subset_lists):
        ok = True
        for positions, rng, lo, hi in compiled:
            count = sum(len(combo[i] & rng) for i in positions)
            if not lo <= count <= hi:
                ok = False
                break
        if ok:
            feasible = True
            for v, chosen, vals in zip(inst.variables, combo, ordered_lists):
                can_include[v].update(chosen)
                can_exclude[v].update(d for d in vals if d not in chosen)
    return OracleResult(
        feasible=feasible,
        can_include={v: frozenset(vals) for v, vals in can_include.items()},
        can_exclude={v: frozenset(vals) for v, vals in can_exclude.items()},
    )


@dataclass(frozen=True)
class FilterResult:
    """Outcome of complete domain filtering.

    ``removed`` holds, per variable, the listed values supported by no
    solution (only variables with at least one removal appear).  Set mode
    additionally reports ``forced_in`` (value present in every solution) and
    ``forced_out`` (synonym of removed, stated in set semantics).  When
    ``feasible`` is false every listed value of every variable is removed.
    """

    feasible: bool
    removed: Mapping[str, frozenset[str]]
    forced_in: Mapping[str, frozenset[str]] = field(default_factory=dict)
    forced_out: Mapping[str, frozenset[str]] = field(default_factory=dict)
    stats: Mapping[str, int] = field(default_factory=dict)


def all_removed_result(inst: CacInstance, stats: Mapping[str, int] | None = None) -> FilterResult:
    """The canonical infeasible result: everything still listed is unsupported."""
    removed = {v: frozenset(inst.lists[v]) for v in inst.variables if inst.lists[v]}
    forced_out = dict(removed) if inst.mode == SET_MODE else {}
    return FilterResult(
        feasible=False,
        removed=removed,
        forced_in={},
        forced_out=forced_out,
        stats=dict(stats or {}),
    )


def oracle_filter_result(inst: CacInstance, budget: int = DEFAULT_ORACLE_BUDGET) -> FilterResult:
    """FilterResult equivalent of the oracle, for differential testing."""
    res = oracle_supports(inst, budget)
    if not res.feasible:
        return all_removed_result(inst)
    if inst.mode == ASSIGNMENT_MODE:
        assert res.supports is not None
        removed = {
            v: frozenset(inst.lists[v] - res.supports[v])
            for v in inst.variables
            if inst.lists[v] - res.supports[v]
        }
        return FilterResult(feasible=True, removed=removed)
    assert res.can_include is not None and res.can_exclude is not None
    removed = {
        v: frozenset(inst.lists[v] - res.can_include[v])
        for v in inst.variables
        if inst.lists[v] - res.can_include[v]
    }
    forced_in = {
        v: frozenset(inst.lists[v] - res.can_exclude[v])
        for v in inst.variables
        if inst.lists[v] - res.can_exclude[v]
    }
    return FilterResult(feasible=True, removed=removed,
                        forced_in=forced_in, forced_out=dict(removed))
