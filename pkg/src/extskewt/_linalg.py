"""Small linear-algebra helpers shared across modules."""

import numpy as np

JITTER = 1e-10
EIG_FLOOR = 1e-12


def as_corr(mat, name="corr"):
    """Return ``mat`` as a validated correlation matrix (float ndarray)."""
    r = np.atleast_2d(np.asarray(mat, dtype=float))
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"{name} must be square, got shape {r.shape}")
    if r.shape[0] == 0:
        raise ValueError(f"{name} must have dimension >= 1")
    if not np.allclose(r, r.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if not np.allclose(np.diag(r), 1.0, atol=1e-10):
        raise ValueError(f"{name} must have unit diagonal")
    off = r[~np.eye(r.shape[0], dtype=bool)]
    if off.size and np.any(np.abs(off) >= 1.0):
        raise ValueError(f"{name} off-diagonal entries must lie in (-1, 1)")
    try:
        np.linalg.cholesky(r)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"{name} is not positive definite") from exc
    return r


def safe_cholesky(mat):
    """Cholesky factor, adding a small diagonal jitter for near-singular input."""
    mat = np.asarray(mat, dtype=float)
    if np.linalg.eigvalsh(mat).min() < EIG_FLOOR:
        mat = mat + JITTER * np.eye(mat.shape[0])
    return np.linalg.cholesky(mat)


def cov_to_corr(cov):
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd), sd


def schur(mat, keep, given):
    """Conditional covariance of ``keep`` given ``given`` and the regression matrix."""
    keep = np.asarray(keep, dtype=int)
    given = np.asarray(given, dtype=int)
    a = mat[np.ix_(keep, keep)]
    if given.size == 0:
        return a, np.zeros((keep.size, 0))
    b = mat[np.ix_(keep, given)]
    c = mat[np.ix_(given, given)]
    reg = np.linalg.solve(c, b.T).T
    return a - reg @ b.T, reg


def quad_form(vec, mat):
    vec = np.asarray(vec, dtype=float)
    return float(vec @ mat @ vec)
