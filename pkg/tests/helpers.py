"""Independent numerical oracles shared by the tests."""

import numpy as np


def random_standardized(rng, n, p, corr=0.5):
    """Correlated random matrix, column-standardized."""
    base = rng.standard_normal((n, 1))
    X = corr * base + rng.standard_normal((n, p))
    X = (X - X.mean(axis=0)) / X.std(axis=0, ddof=1)
    return X


def centered(v):
    v = np.asarray(v, dtype=float)
    return v - v.mean()


def ols_fit(X, y):
    """Least-squares fitted values of y on the columns of X."""
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return X @ coef


def principal_angles(A, B):
    """Principal angles between the column spaces of A and B."""
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    # sine form stays accurate for tiny angles, unlike arccos of cosines
    s = np.linalg.svd(qb - qa @ (qa.T @ qb), compute_uv=False)
    return np.arcsin(np.clip(s, 0.0, 1.0))
