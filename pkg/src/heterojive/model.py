"""Ground-truth construction and synthetic multi-view generation.

Each view follows the decomposition

    A_k = s_k * (u v_k' + gamma * u_k w_k') + E_k,

where ``u`` is the joint basis shared by all views, ``u_k`` is the
view-specific individual basis orthogonal to ``u``, ``v_k`` and ``w_k`` are
the loading matrices, and ``E_k`` has i.i.d. Gaussian entries with standard
deviation ``sigma_k``.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import InvalidInput
from .linalg import haar_orthonormal, operator_norm, sample_in_complement
from .validation import (
    ORTHONORMALITY_TOL,
    check_count,
    check_matrix,
    check_orthonormal,
    check_views,
    check_weights,
)


class LoadingScheme(enum.Enum):
    """How the per-view loading matrices are drawn."""

    RANDOM = "random"
    SHARED = "shared"
    SHARED_ORTHOGONAL = "shared_orthogonal"
    RANDOM_ORTHOGONAL = "random_orthogonal"

    @classmethod
    def parse(cls, value):
        """Accept a LoadingScheme or its string value (case-insensitive)."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls(value.strip().lower())
            except ValueError:
                pass
        options = ", ".join(m.value for m in cls)
        raise InvalidInput(f"unknown loading scheme {value!r}; expected one of: {options}")


@dataclass(frozen=True)
class RankSpec:
    """Joint rank and per-view individual ranks.

    Attributes
    ----------
    r : int
        Joint rank, at least 1.
    individual : tuple of int
        Individual rank of each view, each at least 0. The feasibility bound
        r + individual[k] <= min(n, d_k) is checked at synthesis and
        estimation time, where the dimensions are known.
    """

    r: int
    individual: tuple

    def __init__(self, r, individual):
        object.__setattr__(self, "r", check_count(r, "r"))
        if isinstance(individual, (int, np.integer)):
            raise InvalidInput(
                "individual must be a sequence of per-view ranks; "
                "use RankSpec.homogeneous for a common value"
            )
        ranks = tuple(check_count(x, f"individual[{i}]", minimum=0) for i, x in enumerate(individual))
        if not ranks:
            raise InvalidInput("individual ranks must be nonempty")
        object.__setattr__(self, "individual", ranks)

    @classmethod
    def homogeneous(cls, r, r_individual, n_views):
        """RankSpec with the same individual rank for every view."""
        n_views = check_count(n_views, "n_views")
        return cls(r, (r_individual,) * n_views)

    @property
    def n_views(self):
        return len(self.individual)

    def combined(self, k):
        """Total signal rank r + r_k of view k."""
        return self.r + self.individual[k]


@dataclass
class JiveGroundTruth:
    """Generative parameters of a synthetic multi-view instance.

    Invariants checked on construction: ``u`` and every ``u_k`` are
    orthonormal, and u' u_k = 0 for every view.
    """

    u: np.ndarray
    u_k: list
    v_k: list
    w_k: list
    sigma_k: list
    s_k: list
    gamma: float
    theta_target: Optional[float] = None

    def __post_init__(self):
        self.u = check_orthonormal(self.u, name="u", allow_empty_cols=False)
        n = self.u.shape[0]
        kk = len(self.u_k)
        if not (len(self.v_k) == len(self.w_k) == len(self.sigma_k) == len(self.s_k) == kk):
            raise InvalidInput("per-view field lists must share one length")
        self.u_k = [check_orthonormal(b, name=f"u_k[{k}]") for k, b in enumerate(self.u_k)]
        for k, b in enumerate(self.u_k):
            if b.shape[0] != n:
                raise InvalidInput(f"u_k[{k}] ambient dimension {b.shape[0]} != {n}")
            if b.shape[1]:
                cross = np.max(np.abs(self.u.T @ b))
                if cross > ORTHONORMALITY_TOL:
                    raise InvalidInput(
                        f"u_k[{k}] is not orthogonal to u: max |u' u_k| = {cross:.3e}"
                    )
        self.v_k = [check_matrix(v, name=f"v_k[{k}]") for k, v in enumerate(self.v_k)]
        self.w_k = [
            check_matrix(w, name=f"w_k[{k}]", allow_empty_cols=True)
            for k, w in enumerate(self.w_k)
        ]
        self.sigma_k = [float(s) for s in self.sigma_k]
        self.s_k = [float(s) for s in self.s_k]
        if any(s < 0 for s in self.sigma_k):
            raise InvalidInput("sigma_k must be nonnegative")
        if any(s <= 0 for s in self.s_k):
            raise InvalidInput("s_k must be positive")
        self.gamma = float(self.gamma)
        if self.gamma < 0:
            raise InvalidInput("gamma must be nonnegative")

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def n_views(self):
        return len(self.u_k)

    @property
    def ranks(self):
        return RankSpec(self.u.shape[1], tuple(b.shape[1] for b in self.u_k))

    def signal(self, k):
        """Noiseless view k: s_k * (u v_k' + gamma * u_k w_k')."""
        joint = self.u @ self.v_k[k].T
        if self.u_k[k].shape[1]:
            joint = joint + self.gamma * (self.u_k[k] @ self.w_k[k].T)
        return self.s_k[k] * joint


@dataclass
class MultiViewData:
    """K observed matrices over a shared set of n units."""

    views: list
    labels: Optional[np.ndarray] = None
    d_k: tuple = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        self.views = check_views(self.views)
        self.n = self.views[0].shape[0]
        self.d_k = tuple(v.shape[1] for v in self.views)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.n,):
                raise InvalidInput(
                    f"labels must have shape ({self.n},), got {labels.shape}"
                )
            self.labels = labels

    @property
    def n_views(self):
        return len(self.views)


def generate_subspaces(rng, n, ranks, theta=None):
    """Draw the joint basis and the per-view individual bases.

    With ``theta`` given, every view must have the same individual rank m and
    the bases are built as u_k = sqrt(1 - theta) * z + sqrt(theta) * z_k,
    where z is one Haar draw in the complement of u and each z_k is an
    independent Haar draw in the complement of span(u, z). theta = 0 makes
    all individual subspaces identical; theta = 1 makes them independent.

    With ``theta = None``, each u_k is an independent Haar draw in the
    complement of u (works for unequal individual ranks).

    Parameters
    ----------
    rng : numpy.random.Generator
    n : int
        Ambient dimension.
    ranks : RankSpec
    theta : float in [0, 1], optional

    Returns
    -------
    (u, u_k) : (numpy.ndarray, list of numpy.ndarray)
    """
    n = check_count(n, "n")
    if not isinstance(ranks, RankSpec):
        raise InvalidInput("ranks must be a RankSpec")
    u = haar_orthonormal(rng, n, ranks.r)
    if theta is None:
        u_list = []
        for k in range(ranks.n_views):
            m = ranks.individual[k]
            if ranks.r + m > n:
                raise InvalidInput(
                    f"view {k}: r + r_k = {ranks.r + m} exceeds n = {n}"
                )
            u_list.append(sample_in_complement(rng, [u], m))
        return u, u_list

    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise InvalidInput(f"theta must lie in [0, 1], got {theta}")
    distinct = set(ranks.individual)
    if len(distinct) != 1:
        raise InvalidInput(
            "the theta construction requires equal individual ranks; "
            "pass theta=None for independent complements"
        )
    m = ranks.individual[0]
    if ranks.r + 2 * m > n:
        raise InvalidInput(
            f"r + 2 * r_k = {ranks.r + 2 * m} exceeds n = {n}; "
            "no room for the shared and view-specific directions"
        )
    z = sample_in_complement(rng, [u], m)
    u_list = []
    for _ in range(ranks.n_views):
        z_k = sample_in_complement(rng, [u, z], m)
        u_list.append(np.sqrt(1.0 - theta) * z + np.sqrt(theta) * z_k)
    return u, u_list


def generate_loadings(rng, scheme, d, r, n_views, r_individual=None):
    """Draw the joint and individual loading matrices for every view.

    Parameters
    ----------
    rng : numpy.random.Generator
    scheme : LoadingScheme or str
        random: v_k and w_k are independent Haar frames per view.
        shared: one (v, w) draw reused by all views.
        shared_orthogonal: one Haar square matrix; v_k takes its first r
        columns and w_k the next r_individual columns, for every view.
        random_orthogonal: same column split from an independent Haar square
        matrix per view.
    d : int
        Loading dimension, shared by all views.
    r : int
        Joint rank (width of each v_k).
    n_views : int
    r_individual : int, optional
        Width of each w_k; defaults to r.

    Returns
    -------
    (v_k, w_k) : (list, list)
    """
    scheme = LoadingScheme.parse(scheme)
    d = check_count(d, "d")
    r = check_count(r, "r")
    n_views = check_count(n_views, "n_views")
    r_individual = r if r_individual is None else check_count(r_individual, "r_individual", minimum=0)
    orthogonal = scheme in (LoadingScheme.SHARED_ORTHOGONAL, LoadingScheme.RANDOM_ORTHOGONAL)
    needed = r + r_individual if orthogonal else max(r, r_individual)
    if d < needed:
        raise InvalidInput(
            f"loading dimension d = {d} is too small for scheme {scheme.value} "
            f"with ranks ({r}, {r_individual}); need d >= {needed}"
        )

    if scheme is LoadingScheme.RANDOM:
        v_list = []
        w_list = []
        for _ in range(n_views):
            v_list.append(haar_orthonormal(rng, d, r))
            w_list.append(haar_orthonormal(rng, d, r_individual))
        return v_list, w_list
    if scheme is LoadingScheme.SHARED:
        v = haar_orthonormal(rng, d, r)
        w = haar_orthonormal(rng, d, r_individual)
        return [v] * n_views, [w] * n_views
    if scheme is LoadingScheme.SHARED_ORTHOGONAL:
        q = haar_orthonormal(rng, d, d)
        v = q[:, :r]
        w = q[:, r : r + r_individual]
        return [v] * n_views, [w] * n_views
    v_list = []
    w_list = []
    for _ in range(n_views):
        q = haar_orthonormal(rng, d, d)
        v_list.append(q[:, :r])
        w_list.append(q[:, r : r + r_individual])
    return v_list, w_list


def synthesize_views(rng, truth):
    """Generate observed views from a ground truth.

    Noise for view k is drawn from a dedicated child stream of ``rng``
    (child k of ``rng.spawn``), so each view's data is reproducible
    regardless of the order in which views are materialized.

    Parameters
    ----------
    rng : numpy.random.Generator
        Seeded stream; consumed by spawning one child per view.
    truth : JiveGroundTruth

    Returns
    -------
    MultiViewData
    """
    if not isinstance(truth, JiveGroundTruth):
        raise InvalidInput("truth must be a JiveGroundTruth")
    n = truth.n
    ranks = truth.ranks
    views = []
    streams = rng.spawn(truth.n_views)
    for k in range(truth.n_views):
        d_k = truth.v_k[k].shape[0]
        if ranks.combined(k) > min(n, d_k):
            raise InvalidInput(
                f"view {k}: r + r_k = {ranks.combined(k)} exceeds min(n, d_k) = {min(n, d_k)}"
            )
        signal = truth.signal(k)
        if truth.sigma_k[k] > 0:
            noise = truth.sigma_k[k] * streams[k].standard_normal((n, d_k))
            views.append(signal + noise)
        else:
            views.append(signal)
    return MultiViewData(views=views)


def realized_theta(truth_or_bases, weights=None):
    """Misalignment 1 - ||sum_k w_k u_k u_k'|| actually realized by an instance.

    The target theta passed to ``generate_subspaces`` is not reproduced
    exactly by any finite draw; this helper measures what a given instance
    actually provides. Weights default to equal.

    Parameters
    ----------
    truth_or_bases : JiveGroundTruth or list of arrays
        Ground truth, or the individual bases directly.
    weights : array-like, optional
        Simplex weights over views.
    """
    if isinstance(truth_or_bases, JiveGroundTruth):
        bases = truth_or_bases.u_k
    else:
        bases = [check_orthonormal(b, name=f"u_k[{k}]") for k, b in enumerate(truth_or_bases)]
    kk = len(bases)
    if kk == 0:
        raise InvalidInput("at least one individual basis is required")
    if weights is None:
        w = np.full(kk, 1.0 / kk)
    else:
        w = check_weights(weights, k=kk)
    n = bases[0].shape[0]
    acc = np.zeros((n, n))
    for wk, b in zip(w, bases):
        if wk and b.shape[1]:
            acc += wk * (b @ b.T)
    return float(1.0 - operator_norm(acc))


def build_ground_truth(rng, n, d, ranks, scheme, s=1.0, gamma=1.0, theta=None, sigma=0.0):
    """Assemble a full JiveGroundTruth from scalar experiment parameters.

    Parameters
    ----------
    rng : numpy.random.Generator
    n : int
        Number of units.
    d : int or sequence of int
        Loading dimension, shared or per view; heterogeneous dimensions
        require the random scheme.
    ranks : RankSpec
    scheme : LoadingScheme or str
    s : float or sequence
        Signal scale, broadcast over views.
    gamma : float
        Relative strength of the individual component.
    theta : float or None
        Individual-subspace alignment target; None draws independent
        complements.
    sigma : float or sequence
        Noise level, broadcast over views.
    """
    if not isinstance(ranks, RankSpec):
        raise InvalidInput("ranks must be a RankSpec")
    kk = ranks.n_views
    s_list = _broadcast_per_view(s, kk, "s")
    sigma_list = _broadcast_per_view(sigma, kk, "sigma")
    if np.isscalar(d):
        d_list = [check_count(d, "d")] * kk
    else:
        d_list = [check_count(v, f"d[{i}]") for i, v in enumerate(d)]
        if len(d_list) != kk:
            raise InvalidInput(f"d must be a scalar or have length {kk}")
    distinct = set(ranks.individual)
    r_individual = ranks.individual[0] if len(distinct) == 1 else None
    u, u_list = generate_subspaces(rng, n, ranks, theta=theta)
    if r_individual is None or len(set(d_list)) > 1:
        if LoadingScheme.parse(scheme) is not LoadingScheme.RANDOM:
            raise InvalidInput(
                "unequal individual ranks or view dimensions are only "
                "supported with the random scheme"
            )
        v_list = []
        w_list = []
        for k in range(kk):
            v_list.append(haar_orthonormal(rng, d_list[k], ranks.r))
            w_list.append(haar_orthonormal(rng, d_list[k], ranks.individual[k]))
    else:
        v_list, w_list = generate_loadings(
            rng, scheme, d_list[0], ranks.r, kk, r_individual=r_individual
        )
    return JiveGroundTruth(
        u=u,
        u_k=u_list,
        v_k=v_list,
        w_k=w_list,
        sigma_k=sigma_list,
        s_k=s_list,
        gamma=gamma,
        theta_target=None if theta is None else float(theta),
    )


def _broadcast_per_view(value, n_views, name):
    """Expand a scalar or length-K sequence to a per-view float list."""
    if np.isscalar(value):
        return [float(value)] * n_views
    values = [float(v) for v in value]
    if len(values) != n_views:
        raise InvalidInput(f"{name} must be a scalar or have length {n_views}")
    return values
