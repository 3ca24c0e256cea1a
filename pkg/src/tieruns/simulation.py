"""Monte Carlo calibration of the run-count distribution.

Each trial draws ``y = slope * t + intercept + noise`` at a fixed layout of
timepoints, fits a straight line, orders tied residuals by a random
permutation and counts the runs of their signs.  Trials are independent
substreams of the case seed, so a histogram does not depend on how the
trials are split across workers.
"""

from __future__ import annotations

import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import _backend, _rng
from .errors import TierunsError
from .regression import LINE, fit_arrays, orthonormal_design
from .runs import count_runs
from .ties import Observation, draw_permutation, group_by_time, residual_sign_sequence

DEFAULT_NOISE_SD = 0.34
DEFAULT_SLOPE = 2.0
DEFAULT_INTERCEPT = 1.0
DEFAULT_TRIALS = 100_000
MIN_POINTS = 9


@dataclass(frozen=True)
class SimulationCase:
    """Layout and generator of one Monte Carlo case.

    ``counts_per_timepoint[j]`` measurements are taken at abscissa
    ``abscissas[j]``, which defaults to ``j + 1``.
    """

    counts_per_timepoint: tuple[int, ...]
    noise_sd: float = DEFAULT_NOISE_SD
    slope: float = DEFAULT_SLOPE
    intercept: float = DEFAULT_INTERCEPT
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    abscissas: tuple[float, ...] | None = None
    name: str = ""

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts_per_timepoint)
        object.__setattr__(self, "counts_per_timepoint", counts)
        if not counts or any(c < 1 for c in counts):
            raise TierunsError(f"counts per timepoint must be positive integers, got {counts}")
        if sum(counts) < MIN_POINTS:
            raise TierunsError(f"a case needs at least {MIN_POINTS} points, got {sum(counts)}")
        if not self.noise_sd > 0:
            raise TierunsError("noise_sd must be positive")
        if self.trials < 1:
            raise TierunsError("trials must be positive")
        if not 0 <= self.seed < 2**64:
            raise TierunsError("seed must be a 64-bit unsigned integer")
        if self.abscissas is not None:
            xs = tuple(float(x) for x in self.abscissas)
            if len(xs) != len(counts) or any(b <= a for a, b in zip(xs, xs[1:])):
                raise TierunsError("abscissas must be strictly increasing, one per timepoint")
            object.__setattr__(self, "abscissas", xs)

    @property
    def timepoints(self) -> np.ndarray:
        if self.abscissas is None:
            return np.arange(1, len(self.counts_per_timepoint) + 1, dtype=float)
        return np.array(self.abscissas)

    @property
    def total_points(self) -> int:
        return sum(self.counts_per_timepoint)

    @property
    def t(self) -> np.ndarray:
        """Abscissa of every observation, grouped by timepoint."""
        return np.repeat(self.timepoints, self.counts_per_timepoint)

    @property
    def label(self) -> str:
        return self.name or ",".join(map(str, self.counts_per_timepoint))


@dataclass
class RunsHistogram:
    """Trial counts by number of runs; ``counts[r]`` trials had r runs."""

    counts: np.ndarray
    reruns: int = 0  # zero-residual redraws

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)

    @property
    def trials(self) -> int:
        return int(self.counts.sum())

    @property
    def mode(self) -> int:
        # argmax returns the first maximum: ties go to the smallest run count
        return int(np.argmax(self.counts))

    @property
    def support(self) -> tuple[int, int]:
        nz = np.flatnonzero(self.counts)
        return int(nz[0]), int(nz[-1])

    def as_dict(self) -> dict[int, int]:
        return {int(r): int(c) for r, c in enumerate(self.counts) if c}

    def expand(self) -> np.ndarray:
        """One value per trial: its run count (ascending)."""
        return np.repeat(np.arange(self.counts.size), self.counts)

    def __add__(self, other: "RunsHistogram") -> "RunsHistogram":
        size = max(self.counts.size, other.counts.size)
        a = np.zeros(size, dtype=np.int64)
        a[: self.counts.size] += self.counts
        a[: other.counts.size] += other.counts
        return RunsHistogram(a, self.reruns + other.reruns)

    def __eq__(self, other):
        if not isinstance(other, RunsHistogram):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def to_text(self) -> str:
        lines = ["runs\ttrials"]
        lines += [f"{r}\t{c}" for r, c in self.as_dict().items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunsHistogram":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("runs"):
                continue
            r, c = line.split()
            rows.append((int(r), int(c)))
        counts = np.zeros(max(r for r, _ in rows) + 1, dtype=np.int64)
        for r, c in rows:
            counts[r] = c
        return cls(counts)


@dataclass(frozen=True)
class ModeCenteredCI:
    level: float
    lower: int | None
    upper: int | None
    defined: bool
    mode: int
    coverage: float | None = None

    def __str__(self):
        return f"{self.lower}-{self.upper}" if self.defined else "N/A"


def mode_centered_ci(h: RunsHistogram, level: float) -> ModeCenteredCI:
    """Narrowest window ``mode +- w`` holding strictly more than `level`.

    The window must be a proper subrange of the observed run counts: if it
    has to leave that range, or grow to the whole of it, before reaching
    `level`, the interval is undefined.  A histogram with a single observed
    value gives the one-point interval.
    """
    if h.trials == 0:
        raise TierunsError("empty histogram")
    target = Fraction(repr(float(level)))
    mode = h.mode
    lo_obs, hi_obs = h.support
    cum = np.concatenate([[0], np.cumsum(h.counts)])
    w = 0
    while mode - w >= lo_obs and mode + w <= hi_obs:
        if lo_obs < hi_obs and (mode - w, mode + w) == (lo_obs, hi_obs):
            break
        covered = int(cum[mode + w + 1] - cum[mode - w])
        if Fraction(covered, h.trials) > target:
            return ModeCenteredCI(level, mode - w, mode + w, True, mode, covered / h.trials)
        w += 1
    return ModeCenteredCI(level, None, None, False, mode)


def generate_trial(case: SimulationCase, trial: int, attempt: int | None = None) -> list[Observation]:
    """Observations of one trial, grouped by timepoint in ascending order.

    Noise comes from substream ``(seed, trial, NOISE)``; after a zero
    residual the trial is redrawn from ``(seed, trial, RERUN, attempt)``.
    """
    if attempt is None:
        key = _rng.substream(case.seed, trial, _rng.NOISE)
    else:
        key = _rng.substream(case.seed, trial, _rng.RERUN, attempt)
    t = case.t
    y = case.slope * t + case.intercept + case.noise_sd * _rng.normal(key, t.size)
    return [Observation(float(a), float(b), index=i) for i, (a, b) in enumerate(zip(t, y))]


def trial_runs(case: SimulationCase, trial: int) -> int:
    """Run count of one trial through the public object pipeline.

    Slow reference for the batched kernels.
    """
    attempt = None
    while True:
        obs = generate_trial(case, trial, attempt)
        fit = fit_arrays([o.t for o in obs], [o.y for o in obs], LINE)
        if np.all(fit.residuals != 0):
            break
        attempt = 0 if attempt is None else attempt + 1
    obs = [replace(o, residual=float(e)) for o, e in zip(obs, fit.residuals)]
    grouped = group_by_time(obs)
    plan = draw_permutation(grouped, _rng.substream(case.seed, trial, _rng.PERMUTATION), 0)
    return count_runs(residual_sign_sequence(grouped, plan)).r


def run_case(case: SimulationCase, workers: int = 1, backend: str | None = None) -> RunsHistogram:
    """Histogram of run counts over ``case.trials`` trials.

    Parameters
    ----------
    case : SimulationCase
    workers : int
        Threads sharing the trial range; the result does not depend on it.
    backend : {"compiled", "python"}, optional
        Kernel to use; defaults to the compiled one when available.
    """
    kernel = _backend.BACKENDS[backend] if backend else _backend.simulate_histogram
    t = case.t
    sizes = np.asarray(case.counts_per_timepoint, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    q, _ = orthonormal_design(t, LINE)
    args = (t, starts, sizes, q, case.slope, case.intercept, case.noise_sd, case.seed)
    bounds = np.linspace(0, case.trials, max(1, workers) + 1).astype(int)
    spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(spans) == 1:
        parts = [kernel(*args, 0, case.trials)]
    else:
        with ThreadPoolExecutor(len(spans)) as pool:
            parts = list(pool.map(lambda s: kernel(*args, int(s[0]), int(s[1])), spans))
    total = RunsHistogram(np.zeros(t.size + 1, dtype=np.int64))
    for hist, reruns in parts:
        total = total + RunsHistogram(hist, reruns)
    return total


def evenly_spaced_equivalent(case: SimulationCase) -> SimulationCase:
    """Same number of points, one per abscissa, evenly spaced on [1, Tmax]."""
    n = case.total_points
    if n < 2:
        raise TierunsError("need at least two points")
    t_max = float(case.timepoints[-1])
    xs = tuple(1.0 + k * (t_max - 1.0) / (n - 1) for k in range(n))
    name = f"{case.name}-even" if case.name else ""
    return replace(case, counts_per_timepoint=(1,) * n, abscissas=xs, name=name)


@dataclass
class CaseSummary:
    case: SimulationCase
    histogram: RunsHistogram
    ci95: ModeCenteredCI = field(init=False)
    ci99: ModeCenteredCI = field(init=False)

    def __post_init__(self):
        self.ci95 = mode_centered_ci(self.histogram, 0.95)
        self.ci99 = mode_centered_ci(self.histogram, 0.99)

    def as_dict(self) -> dict:
        return {
            "case": self.case.label,
            "counts_per_timepoint": list(self.case.counts_per_timepoint),
            "points": self.case.total_points,
            "trials": self.histogram.trials,
            "seed": self.case.seed,
            "mode": self.histogram.mode,
            "ci95": [self.ci95.lower, self.ci95.upper],
            "ci95_defined": self.ci95.defined,
            "ci99": [self.ci99.lower, self.ci99.upper],
            "ci99_defined": self.ci99.defined,
            "zero_residual_reruns": self.histogram.reruns,
            "histogram": {str(k): v for k, v in self.histogram.as_dict().items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def summarize(case: SimulationCase, **kwargs) -> CaseSummary:
    return CaseSummary(case, run_case(case, **kwargs))


# -- registries --------------------------------------------------------------

def case_seed(master_seed: int, case_id: str, salt: int = 0) -> int:
    """Seed of a registry case: a substream of the master seed keyed by id."""
    return _rng.substream(master_seed, zlib.crc32(case_id.encode()), salt)


def constant_grid() -> list[tuple[str, tuple[int, ...]]]:
    """Constant-repeat grid: m in 2..5 per timepoint, T = 3..14 (5..14 for m = 2)."""
    out = []
    for m in (2, 3, 4, 5):
        for n_t in range(5 if m == 2 else 3, 15):
            out.append((f"m{m}-T{n_t}", (m,) * n_t))
    return out


UNEQUAL_CASES = [
    ("unequal-1", (2, 3, 3, 3, 3, 3, 3, 3)),
    ("unequal-2", (2, 4, 5, 3, 5, 3, 4, 5, 5, 5, 5, 4, 5, 3)),
    ("unequal-3", (5, 5, 5, 4, 5, 4, 5, 4, 5, 3, 5, 4, 5, 3)),
    ("unequal-4", (4, 5, 5, 5, 4, 5, 4, 5, 5, 5, 5, 5, 5, 5)),
]

STABILITY_CASES = [
    ("m2-T11", (2,) * 11),
    ("unequal-1", UNEQUAL_CASES[0][1]),
    ("m5-T9", (5,) * 9),
    ("m4-T12", (4,) * 12),
    ("m5-T10", (5,) * 10),
]

REGISTRIES = {
    "table1": lambda: [("table1", (4, 4, 4, 4))],
    "grid": constant_grid,
    "unequal": lambda: list(UNEQUAL_CASES),
    "stability": lambda: list(STABILITY_CASES),
}


def registry_cases(name: str, master_seed: int, trials: int = DEFAULT_TRIALS, salt: int = 0) -> list[SimulationCase]:
    if name not in REGISTRIES:
        raise TierunsError(f"unknown registry {name!r}; choose from {sorted(REGISTRIES)}")
    return [
        SimulationCase(counts, trials=trials, seed=case_seed(master_seed, cid, salt), name=cid)
        for cid, counts in REGISTRIES[name]()
    ]


def lookup_case(name: str, master_seed: int, trials: int = DEFAULT_TRIALS) -> SimulationCase:
    for reg in REGISTRIES.values():
        for cid, counts in reg():
            if cid == name:
                return SimulationCase(counts, trials=trials, seed=case_seed(master_seed, cid), name=cid)
    raise TierunsError(f"unknown case {name!r}")


# -- case files ---------------------------------------------------------------

def parse_case_line(line: str, default_trials: int = DEFAULT_TRIALS, default_seed: int = 0) -> SimulationCase | None:
    """Parse ``<counts> [trials] [seed] [name]``; counts are comma separated.

    Blank lines and ``#`` comments give None.
    """
    line = line.split("#", 1)[0].strip()
    if not line:
        return None
    fields = line.split()
    try:
        counts = tuple(int(c) for c in fields[0].split(",") if c)
        trials = int(fields[1]) if len(fields) > 1 else default_trials
        seed = int(fields[2], 0) if len(fields) > 2 else default_seed
    except ValueError:
        raise TierunsError(f"malformed case line: {line!r}") from None
    name = fields[3] if len(fields) > 3 else ""
    return SimulationCase(counts, trials=trials, seed=seed, name=name)


def read_case_file(path, default_trials: int = DEFAULT_TRIALS, default_seed: int = 0) -> list[SimulationCase]:
    cases = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                case = parse_case_line(line, default_trials, default_seed)
            except TierunsError as exc:
                raise TierunsError(f"{path}:{lineno}: {exc}") from None
            if case is not None:
                cases.append(case)
    return cases


def format_case_line(case: SimulationCase) -> str:
    parts = [",".join(map(str, case.counts_per_timepoint)), str(case.trials), str(case.seed)]
    if case.name:
        parts.append(case.name)
    return " ".join(parts)


def format_case_file(cases: Iterable[SimulationCase]) -> str:
    return "# counts trials seed [name]\n" + "".join(format_case_line(c) + "\n" for c in cases)
