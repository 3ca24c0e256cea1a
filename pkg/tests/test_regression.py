import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tieruns import LINE, ModelSpec, RankDeficientError, TierunsError, fit_arrays, least_squares_fit
from tieruns.ties import make_observations


def test_exact_line():
    fit = least_squares_fit(make_observations([1, 2, 3], [3, 5, 7]), LINE)
    assert fit.coefficients == pytest.approx([1.0, 2.0], abs=1e-12)
    assert np.allclose(fit.residuals, 0, atol=1e-12)


def test_exact_cubic():
    fit = fit_arrays([1, 2, 3], [1, 8, 27], ModelSpec((3,)))
    assert fit.coefficients == pytest.approx([1.0], abs=1e-12)
    assert np.allclose(fit.residuals, 0, atol=1e-12)


def test_against_polyfit():
    rng = np.random.default_rng(0)
    t = np.repeat(np.arange(1.0, 15.0), 3)
    y = 2 * t + 1 + rng.normal(0, 0.34, t.size)
    slope, intercept = np.polyfit(t, y, 1)
    fit = fit_arrays(t, y)
    assert fit.coefficients == pytest.approx([intercept, slope], rel=1e-10)
    assert fit.sse == pytest.approx(np.sum(fit.residuals ** 2), rel=1e-9)


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 14), finite), min_size=5, max_size=40),
       st.sampled_from([(0, 1), (0, 1, 2), (3,), (0, 3), (1, 2)]))
def test_residuals_orthogonal_to_basis(points, basis):
    t = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points])
    model = ModelSpec(basis)
    try:
        fit = fit_arrays(t, y, model)
    except RankDeficientError:
        return
    X = model.design(t)
    for j in range(X.shape[1]):
        scale = np.sum(np.abs(y * X[:, j])) + 1e-300
        assert abs(fit.residuals @ X[:, j]) <= 1e-8 * max(scale, 1.0)
    if 0 in basis:
        assert abs(fit.residuals.sum()) <= 1e-9 * max(np.abs(y).sum(), 1.0)
    for delta in (1e-3, -1e-3):
        for j in range(len(basis)):
            c = fit.coefficients.copy()
            c[j] += delta
            e = y - X @ c
            assert fit.sse <= e @ e + 1e-12


def test_recovers_generating_coefficients():
    t = np.linspace(1, 14, 30)
    model = ModelSpec((0, 1, 3))
    coef = np.array([1.5, -2.0, 0.25])
    fit = fit_arrays(t, model.evaluate(coef, t), model)
    assert fit.coefficients == pytest.approx(coef, rel=1e-9)


def test_rank_deficiency():
    with pytest.raises(RankDeficientError, match="distinct"):
        fit_arrays([2, 2, 2], [1, 2, 3], LINE)
    with pytest.raises(RankDeficientError):
        fit_arrays([0, 0, 0], [1, 2, 3], ModelSpec((1,)))


def test_non_finite_rejected():
    with pytest.raises(TierunsError, match="non-finite"):
        fit_arrays([1, 2, 3], [1, np.nan, 3])


@pytest.mark.parametrize("text, basis", [("poly:0,1", (0, 1)), ("poly:3", (3,)), ("line", (0, 1))])
def test_parse(text, basis):
    assert ModelSpec.parse(text).basis == basis


def test_parse_errors():
    assert ModelSpec.parse("none") is None
    for bad in ("poly:", "poly:1,1", "poly:-1", "cubic"):
        with pytest.raises(TierunsError):
            ModelSpec.parse(bad)
