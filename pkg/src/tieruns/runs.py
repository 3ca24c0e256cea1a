"""Runs in a two-symbol sequence: counting, exact null distribution, tests.

The exact distribution of the number of runs ``R`` given ``n1`` symbols of
one kind and ``n2`` of the other is, with ``n = n1 + n2``,

    P(R = 2k)     = 2 C(n1-1, k-1) C(n2-1, k-1) / C(n, n1)
    P(R = 2k + 1) = [C(n1-1, k-1) C(n2-1, k) + C(n1-1, k) C(n2-1, k-1)] / C(n, n1)

evaluated here in log space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from scipy.special import ndtr

from .errors import DegenerateDataError, ExactLimitError, TierunsError

#: Largest ``n1 + n2`` handled by the exact distribution.
EXACT_LIMIT = 1000


class Method(str, enum.Enum):
    EXACT = "exact"
    NORMAL = "normal"


_SYMBOLS = {"+": 1, "-": -1, 1: 1, -1: -1, True: 1, False: -1}


@dataclass(frozen=True)
class SignSequence:
    """Ordered residual signs, stored as ``+1`` / ``-1``."""

    signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.signs) == 0:
            raise DegenerateDataError("sign sequence is empty")
        bad = [s for s in self.signs if s not in (1, -1)]
        if bad:
            raise TierunsError(f"sign sequence holds non-binary symbol {bad[0]!r}")

    @classmethod
    def from_symbols(cls, symbols: Iterable) -> "SignSequence":
        """Build from ``'+'``/``'-'`` characters, ``+1``/``-1`` or booleans."""
        if isinstance(symbols, str):
            symbols = symbols.replace(" ", "").replace(",", "")
        try:
            return cls(tuple(_SYMBOLS[s] for s in symbols))
        except KeyError as exc:
            raise TierunsError(f"unknown sign symbol {exc.args[0]!r}") from None

    def __len__(self):
        return len(self.signs)

    def __str__(self):
        return "".join("+" if s > 0 else "-" for s in self.signs)


@dataclass(frozen=True)
class RunsStatistic:
    n1: int  # positive symbols
    n2: int  # negative symbols
    r: int

    def __post_init__(self):
        n1, n2, r = self.n1, self.n2, self.r
        if n1 < 0 or n2 < 0 or n1 + n2 < 1:
            raise TierunsError(f"invalid symbol counts n1={n1}, n2={n2}")
        if n1 == 0 or n2 == 0:
            if r != 1:
                raise TierunsError("a one-symbol sequence has exactly one run")
        elif not 2 <= r <= max_runs(n1, n2):
            raise TierunsError(
                f"r={r} outside [2, {max_runs(n1, n2)}] for n1={n1}, n2={n2}"
            )

    @property
    def n(self) -> int:
        return self.n1 + self.n2


@dataclass(frozen=True)
class RunsTestResult:
    statistic: RunsStatistic
    p_two_sided: float
    p_too_few: float
    p_too_many: float
    method: Method
    z: float | None = None

    def as_dict(self) -> dict:
        return {
            "runs": self.statistic.r,
            "n1": self.statistic.n1,
            "n2": self.statistic.n2,
            "method": self.method.value,
            "z": self.z,
            "p_two_sided": self.p_two_sided,
            "p_too_few": self.p_too_few,
            "p_too_many": self.p_too_many,
        }


def max_runs(n1: int, n2: int) -> int:
    if n1 == 0 or n2 == 0:
        return 1
    return 2 * min(n1, n2) + (n1 != n2)


def count_runs(signs: SignSequence | Sequence) -> RunsStatistic:
    """Count runs and symbol classes of a sign sequence.

    Examples
    --------
    >>> count_runs(SignSequence.from_symbols("++--- +"))
    RunsStatistic(n1=3, n2=3, r=3)
    """
    if not isinstance(signs, SignSequence):
        signs = SignSequence.from_symbols(signs)
    s = signs.signs
    n1 = sum(1 for x in s if x > 0)
    changes = sum(1 for a, b in zip(s, s[1:]) if a != b)
    return RunsStatistic(n1, len(s) - n1, 1 + changes)


def _log_comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def exact_runs_pmf(n1: int, n2: int) -> dict[int, float]:
    """Exact null distribution of the number of runs.

    Parameters
    ----------
    n1, n2 : int
        Counts of the two symbols.

    Returns
    -------
    dict
        Run count -> probability over ``2 .. max_runs(n1, n2)``; the
        degenerate ``{1: 1.0}`` when either count is zero.

    Raises
    ------
    ExactLimitError
        If ``n1 + n2`` exceeds :data:`EXACT_LIMIT`; use
        :func:`runs_test_normal` instead.
    """
    if n1 < 0 or n2 < 0 or n1 + n2 < 1:
        raise TierunsError(f"invalid symbol counts n1={n1}, n2={n2}")
    if n1 + n2 > EXACT_LIMIT:
        raise ExactLimitError(
            f"n1 + n2 = {n1 + n2} exceeds the exact limit {EXACT_LIMIT}; "
            "use the normal approximation"
        )
    if n1 == 0 or n2 == 0:
        return {1: 1.0}
    # the distribution is symmetric; a canonical order makes it so bitwise
    n1, n2 = min(n1, n2), max(n1, n2)
    log_total = _log_comb(n1 + n2, n1)
    pmf = {}
    for r in range(2, max_runs(n1, n2) + 1):
        k = r // 2
        if r % 2 == 0:
            log_p = math.log(2.0) + _log_comb(n1 - 1, k - 1) + _log_comb(n2 - 1, k - 1)
            pmf[r] = math.exp(log_p - log_total)
        else:
            a = _log_comb(n1 - 1, k - 1) + _log_comb(n2 - 1, k)
            b = _log_comb(n1 - 1, k) + _log_comb(n2 - 1, k - 1)
            pmf[r] = math.exp(a - log_total) + math.exp(b - log_total)
    return pmf


def runs_moments(n1: int, n2: int) -> tuple[float, float]:
    """Mean and variance of the number of runs (exact for all n1, n2 >= 1)."""
    n = n1 + n2
    prod = n1 * n2
    mean = 2.0 * prod / n + 1.0
    if n < 2:
        return mean, 0.0
    var = 2.0 * prod * (2.0 * prod - n) / (n * n * (n - 1.0))
    return mean, var


def _clip(p: float) -> float:
    return min(1.0, max(0.0, p))


def _two_sided(lo: float, hi: float) -> float:
    return min(1.0, 2.0 * min(lo, hi))


def _require_two_classes(stat: RunsStatistic):
    if stat.n1 == 0 or stat.n2 == 0:
        sign = "positive" if stat.n2 == 0 else "negative"
        raise DegenerateDataError(
            f"all {stat.n} residual signs are {sign}; randomness is untestable "
            "with a single sign class"
        )


def tail_probabilities(pmf: Mapping[int, float], r: int) -> tuple[float, float]:
    """``(P(R <= r), P(R >= r))`` under `pmf`."""
    lo = sum(p for k, p in pmf.items() if k <= r)
    hi = sum(p for k, p in pmf.items() if k >= r)
    return _clip(lo), _clip(hi)


def runs_test_exact(stat: RunsStatistic) -> RunsTestResult:
    """Runs test using the exact distribution.

    The two-sided p-value doubles the smaller tail and caps it at one.
    """
    _require_two_classes(stat)
    lo, hi = tail_probabilities(exact_runs_pmf(stat.n1, stat.n2), stat.r)
    mean, var = runs_moments(stat.n1, stat.n2)
    z = (stat.r - mean) / math.sqrt(var) if var > 0 else None
    return RunsTestResult(stat, _two_sided(lo, hi), lo, hi, Method.EXACT, z)


def runs_test_normal(stat: RunsStatistic, continuity_correction: bool = True) -> RunsTestResult:
    """Runs test using the normal approximation.

    With `continuity_correction` each tail is evaluated half a run beyond
    the observed count (``r + 0.5`` for the lower tail, ``r - 0.5`` for the
    upper one), and the reported `z` is shrunk toward zero by 0.5.
    """
    _require_two_classes(stat)
    mean, var = runs_moments(stat.n1, stat.n2)
    if var <= 0:
        raise DegenerateDataError(
            f"runs variance is zero for n1={stat.n1}, n2={stat.n2}; "
            "normal approximation undefined"
        )
    sd = math.sqrt(var)
    d = stat.r - mean
    if continuity_correction:
        lo = float(ndtr((d + 0.5) / sd))
        hi = float(ndtr(-(d - 0.5) / sd))
        z = math.copysign(max(abs(d) - 0.5, 0.0), d) / sd
    else:
        lo = float(ndtr(d / sd))
        hi = float(ndtr(-d / sd))
        z = d / sd
    lo, hi = _clip(lo), _clip(hi)
    return RunsTestResult(stat, _two_sided(lo, hi), lo, hi, Method.NORMAL, z)


def runs_test(stat: RunsStatistic, method: str = "auto", continuity_correction: bool = True) -> RunsTestResult:
    """Exact test when ``n1 + n2 <= EXACT_LIMIT`` (or forced), else normal."""
    if method == "auto":
        method = "exact" if stat.n <= EXACT_LIMIT else "normal"
    if method == "exact":
        return runs_test_exact(stat)
    if method == "normal":
        return runs_test_normal(stat, continuity_correction)
    raise TierunsError(f"unknown method {method!r}")
