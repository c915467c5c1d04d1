"""Regression and significance tests over run-level results."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import stats

from .errors import FittingError


def polynomial_fit(xs, ys, degree):
    """Least-squares polynomial coefficients, lowest order first."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if degree < 0 or int(degree) != degree:
        raise FittingError("degree must be a non-negative integer")
    if x.shape != y.shape or x.ndim != 1:
        raise FittingError("xs and ys must be 1-D and the same length")
    if np.unique(x).size < degree + 1:
        raise FittingError(f"need at least {degree + 1} distinct x values for degree {degree}")
    # centre and scale x for conditioning, then map the coefficients back
    mu = x.mean()
    s = float(np.max(np.abs(x - mu))) or 1.0
    A = np.vander((x - mu) / s, int(degree) + 1, increasing=True)
    c, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < degree + 1:
        raise FittingError("rank-deficient design matrix")
    scaled = np.polynomial.Polynomial(c, domain=[mu - s, mu + s], window=[-1, 1])
    coef = scaled.convert().coef
    out = np.zeros(int(degree) + 1)
    out[: coef.size] = coef[: out.size]
    return out


def polyval(coefficients, x):
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coefficients)


def compare_modes(static_runs, tuned_runs):
    """Welch two-sample t-test on run-level PERs; returns (t, two-sided p)."""
    a = np.asarray(static_runs, dtype=float)
    b = np.asarray(tuned_runs, dtype=float)
    if a.size < 2 or b.size < 2:
        raise FittingError("need at least two runs per group")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0 and vb == 0:
        if a.mean() == b.mean():
            return 0.0, 1.0
        return (np.inf if a.mean() > b.mean() else -np.inf), 0.0
    with warnings.catch_warnings():
        # near-identical samples only cost precision in the variance estimate
        warnings.filterwarnings("ignore", "Precision loss", RuntimeWarning)
        t, p = stats.ttest_ind(a, b, equal_var=False)
    return float(t), float(p)


def anova(groups):
    """One-way fixed-effects ANOVA across groups; returns (F, p)."""
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2 or any(g.size < 1 for g in groups):
        raise FittingError("need at least two non-empty groups")
    if all(np.all(g == groups[0][0]) for g in groups):
        return 0.0, 1.0
    f, p = stats.f_oneway(*groups)
    return float(f), float(p)
