"""Full calibration run: reference histogram, both case families, stability."""

from __future__ import annotations

from dataclasses import dataclass

from .comparison import FamilyReport, compare_family, sidak_threshold
from .simulation import CaseSummary, lookup_case, registry_cases, summarize

STABILITY_SALT = 1


@dataclass
class StabilityRow:
    case_id: str
    base: CaseSummary
    large: CaseSummary

    @property
    def unchanged(self) -> bool:
        def bounds(s):
            return (s.ci95.lower, s.ci95.upper, s.ci99.lower, s.ci99.upper)
        return bounds(self.base) == bounds(self.large)

    def as_dict(self) -> dict:
        return {
            "case": self.case_id,
            "points": self.base.case.total_points,
            "trials": [self.base.histogram.trials, self.large.histogram.trials],
            "seeds": [self.base.case.seed, self.large.case.seed],
            "ci95": [[self.base.ci95.lower, self.base.ci95.upper],
                     [self.large.ci95.lower, self.large.ci95.upper]],
            "ci99": [[self.base.ci99.lower, self.base.ci99.upper],
                     [self.large.ci99.lower, self.large.ci99.upper]],
            "unchanged": self.unchanged,
        }


def stability_rows(master_seed: int, trials: int, large_trials: int, workers: int = 1,
                   backend: str | None = None, progress=None) -> list[StabilityRow]:
    """CIs of the stability cases at `trials` and, independently, at `large_trials`."""
    base = registry_cases("stability", master_seed, trials)
    large = registry_cases("stability", master_seed, large_trials, salt=STABILITY_SALT)
    rows = []
    for a, b in zip(base, large):
        row = StabilityRow(a.name, summarize(a, workers=workers, backend=backend),
                           summarize(b, workers=workers, backend=backend))
        rows.append(row)
        if progress:
            progress(row)
    return rows


@dataclass
class Reproduction:
    seed: int
    reference: CaseSummary
    constant: FamilyReport
    unequal: FamilyReport
    stability: list[StabilityRow]

    def sidak_lines(self) -> list[dict]:
        out = []
        for fam, name in ((self.constant, "constant"), (self.unequal, "unequal")):
            for alpha in (0.05, 0.01):
                s = sidak_threshold(alpha, fam.k)
                out.append({"family": name, "alpha": alpha, "k": s.k, "threshold": s.threshold})
        return out

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "reference": self.reference.as_dict(),
            "constant_repeats": self.constant.as_dict(),
            "unequal_repeats": self.unequal.as_dict(),
            "stability": [r.as_dict() for r in self.stability],
            "sidak": self.sidak_lines(),
        }


def reproduce(master_seed: int, trials: int = 100_000, large_trials: int = 1_000_000,
              workers: int = 1, backend: str | None = None, progress=None) -> Reproduction:
    ref = summarize(lookup_case("table1", master_seed, trials), workers=workers, backend=backend)
    kw = dict(workers=workers, backend=backend, progress=progress)
    constant = compare_family(registry_cases("grid", master_seed, trials), **kw)
    unequal = compare_family(registry_cases("unequal", master_seed, trials), **kw)
    stab = stability_rows(master_seed, trials, large_trials, **kw)
    return Reproduction(master_seed, ref, constant, unequal, stab)
