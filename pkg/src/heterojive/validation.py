"""Input validation helpers used by every public entry point."""

import numpy as np

from .exceptions import InvalidInput

ORTHONORMALITY_TOL = 1e-10
SIMPLEX_TOL = 1e-12


def check_matrix(a, name="matrix", allow_empty_cols=False):
    """Coerce ``a`` to a float ndarray and validate that it is a finite 2-D matrix.

    Parameters
    ----------
    a : array-like
        Candidate matrix.
    name : str
        Name used in error messages.
    allow_empty_cols : bool
        Permit matrices with zero columns (used for empty individual bases).

    Returns
    -------
    numpy.ndarray
        Validated 2-D float array.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    min_cols = 0 if allow_empty_cols else 1
    if arr.shape[0] < 1 or arr.shape[1] < min_cols:
        raise InvalidInput(f"{name} has invalid shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise InvalidInput(f"{name} contains non-finite entries")
    return arr


def check_orthonormal(b, name="basis", tol=ORTHONORMALITY_TOL, allow_empty_cols=True):
    """Validate that ``b`` has orthonormal columns to within ``tol``.

    The check is max |b.T b - I| <= tol. Zero-column bases pass trivially.
    """
    arr = check_matrix(b, name=name, allow_empty_cols=allow_empty_cols)
    n, q = arr.shape
    if q > n:
        raise InvalidInput(f"{name} has more columns ({q}) than rows ({n})")
    if q:
        gram = arr.T @ arr
        dev = np.max(np.abs(gram - np.eye(q)))
        if dev > tol:
            raise InvalidInput(
                f"{name} columns are not orthonormal: max |b'b - I| = {dev:.3e} > {tol:.1e}"
            )
    return arr


def check_weights(w, k=None, tol=SIMPLEX_TOL, name="weights"):
    """Validate that ``w`` is a nonnegative vector summing to one.

    Parameters
    ----------
    w : array-like
        Candidate weight vector.
    k : int, optional
        Required length.
    tol : float
        Tolerance on |sum(w) - 1|.

    Returns
    -------
    numpy.ndarray
        Validated 1-D weight array.
    """
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be 1-dimensional")
    if k is not None and arr.shape[0] != k:
        raise InvalidInput(f"{name} must have length {k}, got {arr.shape[0]}")
    if arr.size == 0:
        raise InvalidInput(f"{name} must be nonempty")
    if not np.isfinite(arr).all():
        raise InvalidInput(f"{name} contains non-finite entries")
    if (arr < 0).any():
        raise InvalidInput(f"{name} contains negative entries")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise InvalidInput(f"{name} must sum to 1 within {tol:.1e}, got {total!r}")
    return arr


def check_views(views, name="views"):
    """Validate a list of view matrices sharing a common row count.

    Returns
    -------
    list of numpy.ndarray
        Validated views.
    """
    if not isinstance(views, (list, tuple)) or len(views) == 0:
        raise InvalidInput(f"{name} must be a nonempty list of matrices")
    out = [check_matrix(v, name=f"{name}[{k}]") for k, v in enumerate(views)]
    n = out[0].shape[0]
    for k, v in enumerate(out):
        if v.shape[0] != n:
            raise InvalidInput(
                f"{name}[{k}] has {v.shape[0]} rows but {name}[0] has {n}; "
                "all views must share the unit dimension"
            )
    return out


def check_count(value, name, minimum=1):
    """Validate an integer count with a lower bound."""
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise InvalidInput(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise InvalidInput(f"{name} must be >= {minimum}, got {value}")
    return int(value)
