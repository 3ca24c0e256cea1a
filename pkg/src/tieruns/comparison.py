"""Two-sample runs test between run-count distributions, with Sidak control.

A repeated-measures layout is judged equivalent to its evenly spaced
counterpart when the two run-count samples, merged and sorted, do not show
too few label runs.  Run counts are integers, so nearly all merged values are
tied; the labels inside every block of equal values are shuffled uniformly
before counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _rng
from .errors import TierunsError
from .runs import RunsStatistic, exact_runs_pmf, runs_test_normal, tail_probabilities
from .simulation import CaseSummary, SimulationCase, evenly_spaced_equivalent, run_case

# substream indices under a case seed
EVEN_STREAM = 1
TIE_STREAM = 2
ESCALATION_STREAM = 3


@dataclass(frozen=True)
class TwoSampleResult:
    n_a: int
    n_b: int
    runs: int
    z: float
    p: float
    seed: int
    method: str = "normal"


def label_runs(sample_a, sample_b, seed: int) -> tuple[np.ndarray, int]:
    """Origin labels (0 = A, 1 = B) in merged order, and their run count.

    Equal values are ordered by uniform keys drawn from substream ``seed``,
    which shuffles labels uniformly within each tied block.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise TierunsError("both samples must be non-empty")
    values = np.concatenate([a, b])
    labels = np.concatenate([np.zeros(a.size, np.int8), np.ones(b.size, np.int8)])
    keys = _rng.draw_array(np.uint64(_rng.substream(seed)), np.arange(values.size, dtype=np.uint64))
    ordered = labels[np.lexsort((keys, values))]
    runs = 1 + int(np.count_nonzero(ordered[1:] != ordered[:-1]))
    return ordered, runs


def two_sample_runs_test(sample_a, sample_b, seed: int = 0, method: str = "normal") -> TwoSampleResult:
    """Wald-Wolfowitz two-sample runs test with randomized tie breaking.

    The p-value is the lower tail ``P(R <= r)``: too few runs mean the
    samples separate.  ``method="normal"`` uses the uncorrected normal
    approximation; ``"exact"`` is available for small samples.
    """
    _, runs = label_runs(sample_a, sample_b, seed)
    n_a, n_b = np.size(sample_a), np.size(sample_b)
    stat = RunsStatistic(n_a, n_b, runs)
    res = runs_test_normal(stat, continuity_correction=False)
    if method == "exact":
        p, _ = tail_probabilities(exact_runs_pmf(n_a, n_b), runs)
    elif method == "normal":
        p = res.p_too_few
    else:
        raise TierunsError(f"unknown method {method!r}")
    return TwoSampleResult(n_a, n_b, runs, res.z, p, seed, method)


@dataclass(frozen=True)
class SidakThreshold:
    alpha: float
    k: int
    threshold: float


def sidak_threshold(alpha: float, k: int) -> SidakThreshold:
    """Per-comparison level ``1 - (1 - alpha) ** (1 / k)``."""
    if not 0 < alpha < 1:
        raise TierunsError(f"alpha must lie in (0, 1), got {alpha}")
    if k < 1:
        raise TierunsError(f"number of comparisons must be positive, got {k}")
    return SidakThreshold(alpha, k, -math.expm1(math.log1p(-alpha) / k))


@dataclass
class CaseComparison:
    case: SimulationCase
    repeated: CaseSummary
    even: CaseSummary
    test: TwoSampleResult
    escalated: "CaseComparison | None" = field(default=None, repr=False)

    @property
    def p(self) -> float:
        return self.test.p

    @property
    def final_p(self) -> float:
        return self.escalated.p if self.escalated else self.p

    @property
    def ci_unchanged(self) -> bool | None:
        if self.escalated is None:
            return None
        a, b = self.repeated, self.escalated.repeated
        return (a.ci95.lower, a.ci95.upper, a.ci99.lower, a.ci99.upper) == (
            b.ci95.lower, b.ci95.upper, b.ci99.lower, b.ci99.upper)

    def as_dict(self) -> dict:
        r = self.repeated
        out = {
            "case": self.case.label,
            "points": self.case.total_points,
            "trials": self.case.trials,
            "seed": self.case.seed,
            "mode": r.histogram.mode,
            "ci95": [r.ci95.lower, r.ci95.upper],
            "ci95_defined": r.ci95.defined,
            "ci99": [r.ci99.lower, r.ci99.upper],
            "ci99_defined": r.ci99.defined,
            "even_ci95": [self.even.ci95.lower, self.even.ci95.upper],
            "even_ci99": [self.even.ci99.lower, self.even.ci99.upper],
            "label_runs": self.test.runs,
            "z": self.test.z,
            "p": self.p,
            "escalated": self.escalated is not None,
            "escalated_p": self.escalated.p if self.escalated else None,
            "escalated_trials": self.escalated.case.trials if self.escalated else None,
            "ci_unchanged": self.ci_unchanged,
        }
        return out


def compare_case(case: SimulationCase, workers: int = 1, backend: str | None = None) -> CaseComparison:
    """Simulate `case` and its evenly spaced equivalent and compare them.

    The repeated layout uses ``case.seed``; the equivalent and the tie
    shuffle use substreams 1 and 2 of it.
    """
    repeated = CaseSummary(case, run_case(case, workers, backend))
    even_case = replace(evenly_spaced_equivalent(case), seed=_rng.substream(case.seed, EVEN_STREAM))
    even = CaseSummary(even_case, run_case(even_case, workers, backend))
    test = two_sample_runs_test(repeated.histogram.expand(), even.histogram.expand(),
                                seed=_rng.substream(case.seed, TIE_STREAM))
    return CaseComparison(case, repeated, even, test)


def needs_escalation(p: float, threshold: float, band: float = 10.0) -> bool:
    return p < band * threshold


def borderline_escalation(
    record: CaseComparison,
    threshold: float,
    band: float = 10.0,
    factor: int = 10,
    workers: int = 1,
    backend: str | None = None,
) -> CaseComparison:
    """Rerun a comparison with `factor` times the trials if p is near `threshold`.

    Triggered when ``p < band * threshold``; the rerun draws from a fresh
    substream of the case seed and is attached as ``record.escalated``.
    """
    if not needs_escalation(record.p, threshold, band):
        return record
    big = replace(record.case, trials=record.case.trials * factor,
                  seed=_rng.substream(record.case.seed, ESCALATION_STREAM))
    record.escalated = compare_case(big, workers, backend)
    return record


@dataclass
class FamilyReport:
    records: list[CaseComparison]
    alpha_levels: tuple[float, ...] = (0.05, 0.01)

    @property
    def k(self) -> int:
        return len(self.records)

    @property
    def thresholds(self) -> list[SidakThreshold]:
        return [sidak_threshold(a, self.k) for a in self.alpha_levels]

    def significant(self, alpha: float = 0.05) -> list[CaseComparison]:
        thr = sidak_threshold(alpha, self.k).threshold
        return [r for r in self.records if r.final_p < thr]

    def to_table(self) -> str:
        header = ["case", "points", "ci95_lo", "ci95_hi", "ci99_lo", "ci99_hi",
                  "ci95_defined", "ci99_defined", "p", "escalated", "escalated_p"]
        lines = ["\t".join(header)]
        for r in self.records:
            s = r.repeated
            row = [r.case.label, r.case.total_points, s.ci95.lower, s.ci95.upper,
                   s.ci99.lower, s.ci99.upper, int(s.ci95.defined), int(s.ci99.defined),
                   f"{r.p:.4f}", int(r.escalated is not None),
                   f"{r.escalated.p:.4f}" if r.escalated else ""]
            lines.append("\t".join("" if v is None else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "comparisons": self.k,
            "sidak": [{"alpha": s.alpha, "k": s.k, "threshold": s.threshold} for s in self.thresholds],
            "records": [r.as_dict() for r in self.records],
        }


def compare_family(
    cases: Sequence[SimulationCase],
    alpha: float = 0.05,
    escalate: bool = True,
    band: float = 10.0,
    factor: int = 10,
    workers: int = 1,
    backend: str | None = None,
    progress=None,
) -> FamilyReport:
    """Compare every case; Sidak control over the cases actually run."""
    threshold = sidak_threshold(alpha, len(cases)).threshold
    records = []
    for case in cases:
        rec = compare_case(case, workers, backend)
        if escalate:
            rec = borderline_escalation(rec, threshold, band, factor, workers, backend)
        records.append(rec)
        if progress:
            progress(rec)
    return FamilyReport(records)
