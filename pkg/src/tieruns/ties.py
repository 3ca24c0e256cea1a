"""Runs test with repeated measurements at the same abscissa.

Observations sharing a timepoint have no natural order, so their order is
drawn uniformly at random before the residual signs are read off.  A tied
group lying entirely on one side of the fit contributes the same runs under
every order; only groups that straddle the curve make the count vary.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _rng
from .errors import DegenerateDataError, TierunsError, ZeroResidualError
from .regression import ModelSpec, least_squares_fit
from .runs import RunsTestResult, SignSequence, count_runs, runs_test


class ZeroPolicy(str, enum.Enum):
    ERROR = "error"
    DROP = "drop"


@dataclass(frozen=True)
class Observation:
    t: float
    y: float
    residual: float | None = None
    index: int | None = None  # position in the caller's input

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.y)):
            where = f"observation {self.index}" if self.index is not None else "observation"
            raise TierunsError(f"{where} has non-finite value (t={self.t}, y={self.y})")


@dataclass(frozen=True)
class TimeGroup:
    t: float
    members: tuple[Observation, ...]

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class GroupedDataset:
    groups: tuple[TimeGroup, ...]

    @property
    def total_count(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    @property
    def has_ties(self) -> bool:
        return any(len(g) > 1 for g in self.groups)


@dataclass(frozen=True)
class PermutationPlan:
    """Within-group orders: ``orderings[g][p]`` is the member shown at position p."""

    orderings: tuple[tuple[int, ...], ...]
    seed: int
    replicate_index: int = 0


def make_observations(t, y, residuals=None) -> list[Observation]:
    if residuals is None:
        residuals = [None] * len(t)
    if not (len(t) == len(y) == len(residuals)):
        raise TierunsError("t, y and residual columns differ in length")
    return [
        Observation(float(a), float(b), None if e is None else float(e), i)
        for i, (a, b, e) in enumerate(zip(t, y, residuals))
    ]


def group_by_time(data: Sequence[Observation], tolerance: float = 0.0) -> GroupedDataset:
    """Partition observations into timepoint groups, ascending in t.

    Observations are sorted by t (stably, so ties keep input order).  A
    group is keyed by its smallest t and absorbs each following observation
    whose t lies within `tolerance` of that key; the default 0 groups only
    exactly equal values.
    """
    if not data:
        raise TierunsError("no observations")
    if tolerance < 0 or not math.isfinite(tolerance):
        raise TierunsError(f"tolerance must be a finite nonnegative number, got {tolerance}")
    for i, obs in enumerate(data):
        if not (math.isfinite(obs.t) and math.isfinite(obs.y)):
            raise TierunsError(f"observation {i} has non-finite value")
    ordered = sorted(data, key=lambda o: o.t)
    groups = []
    key, members = ordered[0].t, [ordered[0]]
    for obs in ordered[1:]:
        if obs.t - key <= tolerance:
            members.append(obs)
        else:
            groups.append(TimeGroup(key, tuple(members)))
            key, members = obs.t, [obs]
    groups.append(TimeGroup(key, tuple(members)))
    return GroupedDataset(tuple(groups))


def draw_permutation(g: GroupedDataset, seed: int, replicate: int = 0) -> PermutationPlan:
    """Draw a uniform order for every tied group.

    Group ``i`` is shuffled by Fisher-Yates on the substream
    ``(seed, replicate, i)``, so the plan is a pure function of its inputs.
    """
    orders = []
    for i, size in enumerate(g.sizes):
        if size == 1:
            orders.append((0,))
        else:
            orders.append(tuple(_rng.fisher_yates(_rng.substream(seed, replicate, i), size)))
    return PermutationPlan(tuple(orders), seed, replicate)


def identity_plan(g: GroupedDataset) -> PermutationPlan:
    return PermutationPlan(tuple(tuple(range(n)) for n in g.sizes), 0, 0)


def ordered_residuals(g: GroupedDataset, plan: PermutationPlan) -> list[Observation]:
    if len(plan.orderings) != len(g.groups):
        raise TierunsError("permutation plan does not match the grouping")
    out = []
    for group, order in zip(g.groups, plan.orderings):
        if sorted(order) != list(range(len(group))):
            raise TierunsError(f"invalid ordering {order} for group at t={group.t}")
        out.extend(group.members[k] for k in order)
    return out


def residual_sign_sequence(
    g: GroupedDataset,
    plan: PermutationPlan,
    zero_policy: ZeroPolicy | str = ZeroPolicy.ERROR,
) -> SignSequence:
    """Signs of the residuals in ascending-t, plan-permuted order."""
    zero_policy = ZeroPolicy(zero_policy)
    ordered = ordered_residuals(g, plan)
    if ordered and all(o.residual == 0 for o in ordered):
        raise DegenerateDataError("all residuals are zero; a perfect fit cannot be tested")
    signs = []
    for pos, obs in enumerate(ordered):
        e = obs.residual
        if e is None:
            raise TierunsError("observation carries no residual; fit a model first")
        if e > 0:
            signs.append(1)
        elif e < 0:
            signs.append(-1)
        elif zero_policy is ZeroPolicy.ERROR:
            where = obs.index if obs.index is not None else pos
            raise ZeroResidualError(
                f"residual of observation {where} (t={obs.t}) is exactly zero; "
                "use zero policy 'drop' to discard zero residuals",
                index=where,
            )
    return SignSequence(tuple(signs))


def attach_residuals(data: Sequence[Observation], model: ModelSpec | None) -> list[Observation]:
    """Return observations with residuals from a least-squares fit of `model`.

    With ``model=None`` the observations must already carry residuals.
    """
    if model is None:
        if any(o.residual is None for o in data):
            raise TierunsError("model 'none' needs precomputed residuals")
        return list(data)
    fit = least_squares_fit(data, model)
    residuals = fit.residuals.copy()
    # below this the sign is round-off, not misfit
    floor = 16 * np.finfo(float).eps * len(data) * max(abs(o.y) for o in data)
    residuals[np.abs(residuals) <= floor] = 0.0
    return [replace(o, residual=float(e)) for o, e in zip(data, residuals)]


@dataclass(frozen=True)
class ExtendedRunsReport:
    results: tuple[RunsTestResult, ...]
    seed: int
    plans: tuple[PermutationPlan, ...] = field(repr=False, default=())

    @property
    def headline(self) -> RunsTestResult:
        return self.results[0]

    def p_summary(self) -> dict:
        ps = [r.p_two_sided for r in self.results]
        return {"min": min(ps), "median": statistics.median(ps), "max": max(ps)}


def extended_runs_test(
    data: Sequence[Observation],
    model: ModelSpec | None = None,
    seed: int = 0,
    replicates: int = 1,
    tolerance: float = 0.0,
    zero_policy: ZeroPolicy | str = ZeroPolicy.ERROR,
    method: str = "auto",
) -> ExtendedRunsReport:
    """Runs test on residual signs with tied timepoints randomly ordered.

    Parameters
    ----------
    data : sequence of Observation
        Observations; they carry residuals already when `model` is None.
    model : ModelSpec or None
        Basis fitted by least squares before testing.
    seed : int
        64-bit seed of the permutation substreams.
    replicates : int
        Number of independent permutation draws; each yields one result and
        replicate 0 is the headline.
    tolerance : float
        Abscissas within this distance are treated as one timepoint.

    Returns
    -------
    ExtendedRunsReport
    """
    if replicates < 1:
        raise TierunsError("replicates must be at least 1")
    if len(data) < 2:
        raise DegenerateDataError("need at least two observations")
    data = attach_residuals(data, model)
    grouped = group_by_time(data, tolerance)
    results, plans = [], []
    for rep in range(replicates):
        plan = draw_permutation(grouped, seed, rep)
        stat = count_runs(residual_sign_sequence(grouped, plan, zero_policy))
        results.append(runs_test(stat, method=method))
        plans.append(plan)
    return ExtendedRunsReport(tuple(results), seed, tuple(plans))


def classical_runs_test(data: Sequence[Observation], model: ModelSpec | None = None, method: str = "auto") -> RunsTestResult:
    """Plain runs test on residuals ordered by t (stable for ties)."""
    data = attach_residuals(data, model)
    ordered = sorted(data, key=lambda o: o.t)
    signs = SignSequence(tuple(1 if o.residual > 0 else -1 for o in ordered if o.residual != 0))
    return runs_test(count_runs(signs), method=method)
