"""Dense matrix primitives: SVD, symmetric eigendecomposition, projector algebra,
Haar-uniform orthonormal sampling, and principal-angle computations.

All operations are pure functions on immutable inputs. Random draws consume a
caller-owned ``numpy.random.Generator``. Eigenvector and singular-vector signs
are unconstrained; downstream comparisons must go through projectors.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import InvalidInput, RankDeficient
from .validation import check_count, check_matrix, check_orthonormal

SYMMETRY_TOL = 1e-10
DEGENERATE_GAP_TOL = 1e-12
FULL_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SpectrumSlice:
    """The leading part of a symmetric spectrum.

    Attributes
    ----------
    values : numpy.ndarray
        Eigenvalues sorted nonincreasing, length equals ``vectors.shape[1]``.
    vectors : numpy.ndarray
        Orthonormal eigenvectors, one column per value.
    gap : float
        Separation between the last retained eigenvalue and the next one,
        ``inf`` when the slice exhausts the spectrum.
    degenerate_gap : bool
        True when ``gap`` falls below the tie tolerance, meaning the retained
        subspace is only one valid choice among many.
    """

    values: np.ndarray
    vectors: np.ndarray
    gap: float
    degenerate_gap: bool


def thin_svd(a):
    """Thin singular value decomposition.

    Parameters
    ----------
    a : array-like, shape (n, d)
        Finite matrix.

    Returns
    -------
    left : numpy.ndarray, shape (n, min(n, d))
        Left singular vectors as columns.
    singvals : numpy.ndarray
        Singular values, nonnegative and nonincreasing.
    right : numpy.ndarray, shape (d, min(n, d))
        Right singular vectors as columns.
    """
    arr = check_matrix(a, name="a")
    left, singvals, right_t = np.linalg.svd(arr, full_matrices=False)
    return left, singvals, right_t.T


def top_r_eigvecs_sym(s, r):
    """Top-r eigenpairs of a symmetric matrix.

    The input must be symmetric to within ``SYMMETRY_TOL`` and is symmetrized
    as (s + s') / 2 before decomposition to absorb round-off.

    Parameters
    ----------
    s : array-like, shape (n, n)
        Symmetric matrix.
    r : int
        Number of leading eigenpairs, 1 <= r <= n.

    Returns
    -------
    SpectrumSlice
        The r largest eigenvalues with orthonormal eigenvectors. When the
        eigenvalue at the cut ties with the next one (within 1e-12), the
        returned vectors span one valid invariant subspace and the
        ``degenerate_gap`` flag is set; callers decide whether that is fatal.
    """
    arr = check_matrix(s, name="s")
    n, m = arr.shape
    if n != m:
        raise InvalidInput(f"s must be square, got shape {arr.shape}")
    asym = np.max(np.abs(arr - arr.T))
    if asym > SYMMETRY_TOL:
        raise InvalidInput(f"s is not symmetric: max |s - s'| = {asym:.3e}")
    r = check_count(r, "r")
    if r > n:
        raise InvalidInput(f"r = {r} exceeds matrix dimension {n}")
    sym = (arr + arr.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    values = eigvals[::-1][:r]
    vectors = eigvecs[:, ::-1][:, :r]
    if r < n:
        gap = float(values[-1] - eigvals[::-1][r])
    else:
        gap = float("inf")
    return SpectrumSlice(
        values=values.copy(),
        vectors=vectors.copy(),
        gap=gap,
        degenerate_gap=gap < DEGENERATE_GAP_TOL,
    )


def operator_norm(a):
    """Largest singular value of ``a``."""
    arr = check_matrix(a, name="a", allow_empty_cols=True)
    if arr.size == 0:
        return 0.0
    return float(np.linalg.norm(arr, 2))


def projector_distance(u1, u2):
    """Operator-norm distance between the orthogonal projectors of two bases.

    Parameters
    ----------
    u1, u2 : array-like
        Orthonormal bases sharing the ambient dimension.

    Returns
    -------
    float
        ||u1 u1' - u2 u2'|| in operator norm; lies in [0, 1] for equal ranks.
    """
    b1 = check_orthonormal(u1, name="u1")
    b2 = check_orthonormal(u2, name="u2")
    if b1.shape[0] != b2.shape[0]:
        raise InvalidInput(
            f"ambient dimensions differ: {b1.shape[0]} vs {b2.shape[0]}"
        )
    diff = b1 @ b1.T - b2 @ b2.T
    return float(np.linalg.norm(diff, 2))


def haar_orthonormal(rng, n, q):
    """Draw a Haar-uniform orthonormal n-by-q frame.

    Sampling is QR of an i.i.d. standard Gaussian matrix with sign correction
    (column j is multiplied by the sign of the j-th diagonal entry of the
    triangular factor), which yields exact Haar uniformity rather than mere
    orthonormality.

    Parameters
    ----------
    rng : numpy.random.Generator
        Seeded random stream, owned by the caller.
    n, q : int
        Ambient dimension and frame width, q <= n.
    """
    n = check_count(n, "n")
    q = check_count(q, "q", minimum=0)
    if q > n:
        raise InvalidInput(f"q = {q} exceeds ambient dimension n = {n}")
    if q == 0:
        return np.zeros((n, 0))
    gauss = rng.standard_normal((n, q))
    qmat, rmat = np.linalg.qr(gauss, mode="reduced")
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    return qmat * signs


def complement_basis(b):
    """Orthonormal basis of the orthogonal complement of ``b``'s column space.

    Parameters
    ----------
    b : array-like, shape (n, q)
        Orthonormal basis with q < n.

    Returns
    -------
    numpy.ndarray, shape (n, n - q)
        Basis with b' result = 0 to within 1e-10.
    """
    arr = check_orthonormal(b, name="b")
    n, q = arr.shape
    if q >= n:
        raise InvalidInput(f"basis of rank {q} already spans the ambient space")
    if q == 0:
        return np.eye(n)
    comp = scipy.linalg.null_space(arr.T)
    if comp.shape[1] != n - q:
        raise InvalidInput(
            f"complement of a rank-{q} basis in dimension {n} should have "
            f"{n - q} columns, got {comp.shape[1]}"
        )
    return comp


def sample_in_complement(rng, constraints, q, n=None):
    """Draw a Haar-uniform q-frame orthogonal to every constraint basis.

    Parameters
    ----------
    rng : numpy.random.Generator
        Seeded random stream.
    constraints : list of array-like
        Orthonormal bases whose joint span must be avoided. With no
        constraints (or only zero-width ones) the draw reduces to
        unconstrained Haar sampling.
    q : int
        Frame width; the constraint ranks plus q may not exceed the ambient
        dimension.
    n : int, optional
        Ambient dimension; required only when ``constraints`` is empty,
        otherwise inferred (and cross-checked) from the bases.
    """
    q = check_count(q, "q", minimum=0)
    bases = [
        check_orthonormal(c, name=f"constraints[{i}]")
        for i, c in enumerate(constraints)
    ]
    if bases:
        ambient = bases[0].shape[0]
        for i, b in enumerate(bases):
            if b.shape[0] != ambient:
                raise InvalidInput(
                    f"constraints[{i}] ambient dimension {b.shape[0]} != {ambient}"
                )
        if n is not None and n != ambient:
            raise InvalidInput(f"n = {n} contradicts constraint dimension {ambient}")
    else:
        if n is None:
            raise InvalidInput("n is required when constraints is empty")
        ambient = check_count(n, "n")
    total = sum(b.shape[1] for b in bases)
    if total + q > ambient:
        raise InvalidInput(
            f"constraint rank {total} plus q = {q} exceeds ambient dimension {ambient}"
        )
    if q == 0:
        return np.zeros((ambient, 0))
    if total == 0:
        return haar_orthonormal(rng, ambient, q)
    # The constraint bases need not be mutually orthogonal, so take the
    # null space of their union rather than complementing a stacked basis.
    stacked = np.hstack([b for b in bases if b.shape[1]])
    comp = scipy.linalg.null_space(stacked.T)
    if comp.shape[1] < q:
        raise InvalidInput(
            f"the joint constraint span leaves only {comp.shape[1]} free "
            f"dimensions, fewer than q = {q}"
        )
    frame = haar_orthonormal(rng, comp.shape[1], q)
    return comp @ frame


def principal_angle_delta(v, w):
    """Cosine of the smallest principal angle between two column spaces.

    Computes ||(v'v)^(-1/2) v'w (w'w)^(-1/2)|| in operator norm, which equals
    the largest cosine among the principal angles between span(v) and span(w).

    Parameters
    ----------
    v, w : array-like
        Matrices sharing the row dimension, each of full column rank
        (smallest singular value above 1e-10).

    Returns
    -------
    float
        Value in [0, 1]; 0 for orthogonal spans, 1 for nested spans.
    """
    av = check_matrix(v, name="v")
    aw = check_matrix(w, name="w")
    if av.shape[0] != aw.shape[0]:
        raise InvalidInput(
            f"row dimensions differ: {av.shape[0]} vs {aw.shape[0]}"
        )
    qv = _orthonormalize_full_rank(av, "v")
    qw = _orthonormalize_full_rank(aw, "w")
    cosines = np.linalg.svd(qv.T @ qw, compute_uv=False)
    if cosines.size == 0:
        return 0.0
    return float(np.clip(cosines[0], 0.0, 1.0))


def _orthonormalize_full_rank(a, name):
    """Orthonormal basis of a full-column-rank matrix; RankDeficient otherwise."""
    left, singvals, _ = np.linalg.svd(a, full_matrices=False)
    if singvals.size == 0 or singvals[-1] <= FULL_RANK_TOL:
        smallest = float(singvals[-1]) if singvals.size else 0.0
        raise RankDeficient(
            f"{name} is rank deficient: smallest singular value {smallest:.3e}"
        )
    return left[:, : a.shape[1]]
