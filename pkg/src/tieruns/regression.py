"""Least-squares polynomial-basis fits and residuals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RankDeficientError, TierunsError


@dataclass(frozen=True)
class ModelSpec:
    """Monomial basis ``sum_j c_j * t**basis[j]``.

    ``ModelSpec((0, 1))`` is the straight line ``B + A t``; ``ModelSpec((3,))``
    is ``A t**3``.
    """

    basis: tuple[int, ...]

    def __post_init__(self):
        basis = tuple(int(e) for e in self.basis)
        if not basis:
            raise TierunsError("model basis is empty")
        if any(e < 0 for e in basis):
            raise TierunsError(f"negative exponent in basis {basis}")
        if len(set(basis)) != len(basis):
            raise TierunsError(f"repeated exponent in basis {basis}")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def parse(cls, text: str) -> "ModelSpec | None":
        """Parse ``poly:0,1`` style strings; ``none`` returns None."""
        text = text.strip().lower()
        if text == "none":
            return None
        if text == "line":
            return LINE
        if not text.startswith("poly:"):
            raise TierunsError(f"model must be 'poly:<exponents>' or 'none', got {text!r}")
        try:
            return cls(tuple(int(e) for e in text[5:].split(",")))
        except ValueError:
            raise TierunsError(f"bad exponent list in model {text!r}") from None

    def __str__(self):
        return "poly:" + ",".join(map(str, self.basis))

    def design(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return t[:, None] ** np.asarray(self.basis, dtype=float)[None, :]

    def evaluate(self, coefficients, t) -> np.ndarray:
        return self.design(t) @ np.asarray(coefficients, dtype=float)


LINE = ModelSpec((0, 1))


@dataclass(frozen=True)
class FitResult:
    model: ModelSpec
    coefficients: np.ndarray
    residuals: np.ndarray
    sse: float


def orthonormal_design(t, model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factors ``(Q, R)`` of the design matrix at abscissas `t`.

    Raises RankDeficientError when the columns are not independent.
    """
    t = np.asarray(t, dtype=float)
    p = len(model.basis)
    distinct = np.unique(t).size
    if distinct < p:
        raise RankDeficientError(
            f"{distinct} distinct abscissa value(s) cannot determine "
            f"{p} coefficients of {model}"
        )
    X = model.design(t)
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        dead = [e for e, s in zip(model.basis, scale) if s == 0]
        raise RankDeficientError(f"basis column(s) t^{dead} vanish on the data")
    Q, R = np.linalg.qr(X / scale)
    diag = np.abs(np.diag(R))
    if diag.min() <= max(X.shape) * np.finfo(float).eps * diag.max():
        raise RankDeficientError(f"design matrix for {model} is rank deficient")
    return Q, R * scale[None, :]


def fit_arrays(t, y, model: ModelSpec = LINE) -> FitResult:
    """Least-squares fit of `model` to arrays ``(t, y)`` via QR."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise TierunsError("t and y must be 1-d arrays of equal length")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        bad = int(np.flatnonzero(~(np.isfinite(t) & np.isfinite(y)))[0])
        raise TierunsError(f"non-finite value in observation {bad}")
    Q, R = orthonormal_design(t, model)
    coef = solve_triangular(R, Q.T @ y)
    residuals = y - model.design(t) @ coef
    return FitResult(model, coef, residuals, float(residuals @ residuals))


def least_squares_fit(observations, model: ModelSpec = LINE) -> FitResult:
    """Fit `model` to a sequence of objects with ``t`` and ``y`` attributes.

    Residuals are returned in the order of `observations`.
    """
    t = [o.t for o in observations]
    y = [o.y for o in observations]
    return fit_arrays(t, y, model)
