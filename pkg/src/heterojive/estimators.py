"""Two-stage spectral estimators of the joint subspace.

The pipeline extracts each view's leading left singular subspace, then takes
the top-r eigenvectors of a weighted sum of the resulting projectors. Equal
weights give the classic angle-based estimator (AJIVE); general simplex
weights give HeteroJIVE. Stack-SVD, which eigendecomposes the pooled
covariance instead, is provided as a baseline.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import DegenerateAggregation, InvalidInput
from .linalg import DEGENERATE_GAP_TOL, thin_svd, top_r_eigvecs_sym
from .model import MultiViewData, RankSpec
from .validation import check_count, check_orthonormal, check_views, check_weights

COMPONENT_ORTHOGONALITY_TOL = 1e-8


@dataclass(frozen=True)
class StageOneResult:
    """Per-view signal subspaces from the first stage.

    Attributes
    ----------
    bases : list of numpy.ndarray
        bases[k] holds the top r + r_k left singular vectors of view k.
    singvals : list of numpy.ndarray
        Full singular value sequence of each view.
    degenerate : list of bool
        True for views whose retained subspace is ambiguous because the
        singular values tie at the cut (within 1e-12).
    """

    bases: list
    singvals: list
    degenerate: list


class AggregationResult(NamedTuple):
    """Output of a spectral aggregation step.

    Attributes
    ----------
    basis : numpy.ndarray
        Top-r eigenvectors, orthonormal columns.
    gap : float
        Eigenvalue separation at the cut, lambda_r - lambda_{r+1}.
    values : numpy.ndarray
        The r leading eigenvalues.
    degenerate : bool
        True when the gap falls below the tie tolerance.
    """

    basis: np.ndarray
    gap: float
    values: np.ndarray
    degenerate: bool


@dataclass
class JiveFit:
    """Full output of a HeteroJIVE run.

    Invariant checked on construction: the estimated joint and individual
    bases are orthogonal, max |u_hat' u_k_hat| <= 1e-8 for every view.
    """

    u_hat: np.ndarray
    u_k_hat: list
    v_k_hat: list
    w_k_hat: list
    weights: np.ndarray
    diagnostics: Optional[object] = None
    spectral_gap: float = float("nan")
    aggregation_values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.u_hat = check_orthonormal(self.u_hat, name="u_hat", allow_empty_cols=False)
        for k, b in enumerate(self.u_k_hat):
            if b.shape[1]:
                cross = np.max(np.abs(self.u_hat.T @ b))
                if cross > COMPONENT_ORTHOGONALITY_TOL:
                    raise InvalidInput(
                        f"u_k_hat[{k}] is not orthogonal to u_hat: "
                        f"max |u_hat' u_k_hat| = {cross:.3e}"
                    )


def _check_rank_budget(data, ranks):
    """Validate r + r_k <= min(n, d_k) for every view."""
    if not isinstance(ranks, RankSpec):
        raise InvalidInput("ranks must be a RankSpec")
    if ranks.n_views != data.n_views:
        raise InvalidInput(
            f"ranks cover {ranks.n_views} views but data has {data.n_views}"
        )
    for k in range(data.n_views):
        limit = min(data.n, data.d_k[k])
        if ranks.combined(k) > limit:
            raise InvalidInput(
                f"view {k}: r + r_k = {ranks.combined(k)} exceeds min(n, d_k) = {limit}"
            )


def stage1_extract(data, ranks):
    """Per-view extraction of the leading left singular subspace.

    Parameters
    ----------
    data : MultiViewData
    ranks : RankSpec

    Returns
    -------
    StageOneResult
        bases[k] spans the top r + r_k left singular directions of view k.
        A tie at the cut is flagged in ``degenerate`` but is not fatal here;
        downstream aggregation decides whether it matters.
    """
    if not isinstance(data, MultiViewData):
        data = MultiViewData(views=check_views(data))
    _check_rank_budget(data, ranks)
    bases = []
    singvals = []
    degenerate = []
    for k, view in enumerate(data.views):
        left, svals, _ = thin_svd(view)
        keep = ranks.combined(k)
        bases.append(left[:, :keep])
        singvals.append(svals)
        if keep < svals.shape[0]:
            degenerate.append(bool(svals[keep - 1] - svals[keep] < DEGENERATE_GAP_TOL))
        else:
            degenerate.append(False)
    return StageOneResult(bases=bases, singvals=singvals, degenerate=degenerate)


def aggregate_weighted(stage1, weights, r):
    """Top-r eigenvectors of the weighted sum of stage-one projectors.

    Parameters
    ----------
    stage1 : StageOneResult
    weights : array-like
        Simplex weights, one per view.
    r : int
        Joint rank.

    Returns
    -------
    AggregationResult

    Raises
    ------
    DegenerateAggregation
        When the eigenvalue gap at the cut is below 1e-12, so no stable
        joint subspace of rank r exists. A single view with r below its
        retained rank is the canonical trigger: all its eigenvalues tie.
    """
    if not isinstance(stage1, StageOneResult):
        raise InvalidInput("stage1 must be a StageOneResult")
    kk = len(stage1.bases)
    w = check_weights(weights, k=kk)
    n = stage1.bases[0].shape[0]
    r = check_count(r, "r")
    if r > n:
        raise InvalidInput(f"r = {r} exceeds ambient dimension {n}")
    acc = np.zeros((n, n))
    for wk, basis in zip(w, stage1.bases):
        if wk and basis.shape[1]:
            acc += wk * (basis @ basis.T)
    spectrum = top_r_eigvecs_sym(acc, r)
    if spectrum.degenerate_gap:
        raise DegenerateAggregation(
            f"aggregation spectrum has no usable gap at rank {r}: "
            f"lambda_r - lambda_(r+1) = {spectrum.gap:.3e}",
            gap=spectrum.gap,
        )
    return AggregationResult(
        basis=spectrum.vectors,
        gap=spectrum.gap,
        values=spectrum.values,
        degenerate=spectrum.degenerate_gap,
    )


def extract_components(data, u_hat, ranks):
    """Recover individual bases and loadings given an estimated joint basis.

    For each view: the individual basis is the top r_k left singular vectors
    of (I - u_hat u_hat') A_k, which is orthogonal to u_hat by construction;
    the joint loading is A_k' u_hat and the individual loading is
    A_k' u_k_hat.

    Parameters
    ----------
    data : MultiViewData
    u_hat : array-like, shape (n, r)
        Orthonormal joint basis estimate.
    ranks : RankSpec

    Returns
    -------
    (u_k_hat, v_k_hat, w_k_hat) : (list, list, list)
        Views with r_k = 0 get an empty individual basis and loading.
    """
    if not isinstance(data, MultiViewData):
        data = MultiViewData(views=check_views(data))
    u_hat = check_orthonormal(u_hat, name="u_hat", allow_empty_cols=False)
    if u_hat.shape[0] != data.n:
        raise InvalidInput(
            f"u_hat ambient dimension {u_hat.shape[0]} != data row count {data.n}"
        )
    _check_rank_budget(data, ranks)
    n, r = u_hat.shape
    u_k_hat = []
    v_k_hat = []
    w_k_hat = []
    for k, view in enumerate(data.views):
        r_k = ranks.individual[k]
        if r_k > min(n - r, data.d_k[k]):
            raise InvalidInput(
                f"view {k}: individual rank {r_k} exceeds min(n - r, d_k) = "
                f"{min(n - r, data.d_k[k])}"
            )
        if r_k:
            residual = view - u_hat @ (u_hat.T @ view)
            left, _, _ = thin_svd(residual)
            basis = left[:, :r_k]
        else:
            basis = np.zeros((n, 0))
        u_k_hat.append(basis)
        v_k_hat.append(view.T @ u_hat)
        w_k_hat.append(view.T @ basis)
    return u_k_hat, v_k_hat, w_k_hat


def heterojive(data, ranks, weights, compute_diagnostics=True):
    """Weighted two-stage estimation of the joint subspace.

    Composes ``stage1_extract``, ``aggregate_weighted``, and
    ``extract_components``, then attaches plug-in noise diagnostics computed
    from the fit's own reconstruction. Equal weights reproduce AJIVE
    bit for bit; there is no separate code path.

    Parameters
    ----------
    data : MultiViewData or list of matrices
    ranks : RankSpec
    weights : array-like
        Simplex weights, one per view.
    compute_diagnostics : bool
        Skip the diagnostics when False (or when the noise degrees of
        freedom are not positive, in which case ``diagnostics`` is None).

    Returns
    -------
    JiveFit
    """
    if not isinstance(data, MultiViewData):
        data = MultiViewData(views=check_views(data))
    w = check_weights(weights, k=data.n_views)
    stage1 = stage1_extract(data, ranks)
    agg = aggregate_weighted(stage1, w, ranks.r)
    u_k_hat, v_k_hat, w_k_hat = extract_components(data, agg.basis, ranks)
    fit = JiveFit(
        u_hat=agg.basis,
        u_k_hat=u_k_hat,
        v_k_hat=v_k_hat,
        w_k_hat=w_k_hat,
        weights=w,
        spectral_gap=agg.gap,
        aggregation_values=agg.values,
    )
    if compute_diagnostics:
        from .weighting import compute_plugin_diagnostics

        fit.diagnostics = compute_plugin_diagnostics(data, ranks, fit)
    return fit


def equal_weights(n_views):
    """Uniform simplex weights over ``n_views`` views."""
    n_views = check_count(n_views, "n_views")
    return np.full(n_views, 1.0 / n_views)


def stack_svd(data, r, weights=None):
    """Baseline: top-r eigenvectors of the pooled covariance.

    Computes the leading eigenvectors of sum_k w_k A_k A_k', which does not
    separate individual from joint variation. Weights default to equal.

    Parameters
    ----------
    data : MultiViewData or list of matrices
    r : int
        Joint rank.
    weights : array-like, optional

    Returns
    -------
    AggregationResult
        A tie at the cut sets ``degenerate`` instead of raising.
    """
    if not isinstance(data, MultiViewData):
        data = MultiViewData(views=check_views(data))
    r = check_count(r, "r")
    if r > data.n:
        raise InvalidInput(f"r = {r} exceeds data row count {data.n}")
    w = equal_weights(data.n_views) if weights is None else check_weights(weights, k=data.n_views)
    acc = np.zeros((data.n, data.n))
    for wk, view in zip(w, data.views):
        if wk:
            acc += wk * (view @ view.T)
    spectrum = top_r_eigvecs_sym(acc, r)
    return AggregationResult(
        basis=spectrum.vectors,
        gap=spectrum.gap,
        values=spectrum.values,
        degenerate=spectrum.degenerate_gap,
    )


class _BaseEstimator:
    """Minimal parameter-introspection base shared by the estimator classes."""

    _param_names = ()

    def get_params(self, deep=True):
        """Parameters of this estimator as a dict."""
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        """Set estimator parameters; unknown names raise."""
        for name, value in params.items():
            if name not in self._param_names:
                raise InvalidInput(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters: {', '.join(self._param_names)}"
                )
            setattr(self, name, value)
        return self

    def _require_fitted(self):
        if not hasattr(self, "joint_basis_"):
            raise InvalidInput(
                f"{type(self).__name__} instance is not fitted yet; call fit first"
            )


class HeteroJIVE(_BaseEstimator):
    """Weighted two-stage joint-subspace estimator.

    Parameters
    ----------
    joint_rank : int
        Rank of the shared subspace.
    individual_ranks : int, sequence of int, or None
        Per-view individual ranks; an int broadcasts, None uses
        ``joint_rank`` for every view.
    weights : "data_driven", "equal", or array-like
        "data_driven" learns simplex weights from the data before fitting;
        "equal" reproduces the classic angle-based estimator; an explicit
        vector is validated and used as given.
    t_max : int
        Iteration cap for the data-driven weighting.
    tol : float
        L1 stopping tolerance for the data-driven weighting.
    refresh_each_iter : bool
        Re-estimate the weighting maps from a fresh fit at every iterate
        instead of freezing them at the equal-weight initialization.

    Attributes
    ----------
    joint_basis_ : numpy.ndarray, shape (n, joint_rank)
        Estimated joint basis, one row per unit.
    individual_bases_ : list of numpy.ndarray
        Per-view individual bases, orthogonal to ``joint_basis_``.
    joint_loadings_, individual_loadings_ : list of numpy.ndarray
        Per-view loading matrices.
    weights_ : numpy.ndarray
        Weights used in the aggregation.
    weight_trace_ : object or None
        Iteration trace when weights were learned, else None.
    diagnostics_ : object or None
        Plug-in noise and signal-strength estimates.
    spectral_gap_ : float
        Eigenvalue gap of the aggregation at the joint-rank cut.

    Examples
    --------
    >>> import numpy as np
    >>> from heterojive import HeteroJIVE
    >>> rng = np.random.default_rng(0)
    >>> views = [rng.standard_normal((30, 20)) for _ in range(3)]
    >>> est = HeteroJIVE(joint_rank=2, individual_ranks=1).fit(views)
    >>> est.joint_basis_.shape
    (30, 2)
    """

    _param_names = (
        "joint_rank",
        "individual_ranks",
        "weights",
        "t_max",
        "tol",
        "refresh_each_iter",
    )

    def __init__(
        self,
        joint_rank=1,
        individual_ranks=None,
        weights="data_driven",
        t_max=20,
        tol=1e-8,
        refresh_each_iter=False,
    ):
        self.joint_rank = joint_rank
        self.individual_ranks = individual_ranks
        self.weights = weights
        self.t_max = t_max
        self.tol = tol
        self.refresh_each_iter = refresh_each_iter

    def _resolve_ranks(self, n_views):
        r_k = self.individual_ranks
        if r_k is None:
            r_k = self.joint_rank
        if isinstance(r_k, (int, np.integer)):
            return RankSpec.homogeneous(self.joint_rank, int(r_k), n_views)
        return RankSpec(self.joint_rank, tuple(int(x) for x in r_k))

    def fit(self, views, y=None):
        """Fit the estimator on a list of view matrices sharing rows.

        Parameters
        ----------
        views : list of array-like, each shape (n, d_k)
        y : ignored
            Present for interface compatibility.

        Returns
        -------
        self
        """
        data = MultiViewData(views=check_views(views))
        ranks = self._resolve_ranks(data.n_views)
        trace = None
        if isinstance(self.weights, str):
            if self.weights == "equal":
                w = equal_weights(data.n_views)
            elif self.weights == "data_driven":
                from .weighting import data_driven_weights

                w, trace = data_driven_weights(
                    data,
                    ranks,
                    t_max=self.t_max,
                    tol=self.tol,
                    refresh_each_iter=self.refresh_each_iter,
                )
            else:
                raise InvalidInput(
                    f"weights must be 'data_driven', 'equal', or a vector, "
                    f"got {self.weights!r}"
                )
        else:
            w = check_weights(np.asarray(self.weights, dtype=float), k=data.n_views)
        fit = heterojive(data, ranks, w)
        self.joint_basis_ = fit.u_hat
        self.individual_bases_ = fit.u_k_hat
        self.joint_loadings_ = fit.v_k_hat
        self.individual_loadings_ = fit.w_k_hat
        self.weights_ = fit.weights
        self.weight_trace_ = trace
        self.diagnostics_ = fit.diagnostics
        self.spectral_gap_ = fit.spectral_gap
        self.n_views_ = data.n_views
        return self

    def fit_transform(self, views, y=None):
        """Fit and return the joint scores, one row per unit."""
        return self.fit(views, y=y).joint_basis_

    def transform(self, views):
        """Project views onto the estimated joint subspace.

        Returns
        -------
        list of numpy.ndarray
            The joint component of each view, u_hat u_hat' X_k.
        """
        self._require_fitted()
        out = []
        for k, view in enumerate(check_views(views)):
            if view.shape[0] != self.joint_basis_.shape[0]:
                raise InvalidInput(
                    f"views[{k}] has {view.shape[0]} rows but the fit used "
                    f"{self.joint_basis_.shape[0]}"
                )
            out.append(self.joint_basis_ @ (self.joint_basis_.T @ view))
        return out


class AJIVE(HeteroJIVE):
    """Equal-weight special case of :class:`HeteroJIVE`."""

    _param_names = ("joint_rank", "individual_ranks")

    def __init__(self, joint_rank=1, individual_ranks=None):
        super().__init__(
            joint_rank=joint_rank,
            individual_ranks=individual_ranks,
            weights="equal",
        )


class StackSVD(_BaseEstimator):
    """Pooled-covariance baseline estimator.

    Parameters
    ----------
    joint_rank : int
    weights : array-like or None
        Simplex weights over views; None means equal.

    Attributes
    ----------
    joint_basis_ : numpy.ndarray, shape (n, joint_rank)
    spectral_gap_ : float
    degenerate_ : bool
        True when the eigenvalue cut was a tie.
    """

    _param_names = ("joint_rank", "weights")

    def __init__(self, joint_rank=1, weights=None):
        self.joint_rank = joint_rank
        self.weights = weights

    def fit(self, views, y=None):
        data = MultiViewData(views=check_views(views))
        result = stack_svd(data, self.joint_rank, weights=self.weights)
        self.joint_basis_ = result.basis
        self.spectral_gap_ = result.gap
        self.degenerate_ = result.degenerate
        self.weights_ = (
            equal_weights(data.n_views)
            if self.weights is None
            else check_weights(np.asarray(self.weights, dtype=float), k=data.n_views)
        )
        self.n_views_ = data.n_views
        return self

    def fit_transform(self, views, y=None):
        """Fit and return the joint scores, one row per unit."""
        return self.fit(views, y=y).joint_basis_

    def transform(self, views):
        """Project views onto the estimated subspace."""
        self._require_fitted()
        out = []
        for k, view in enumerate(check_views(views)):
            if view.shape[0] != self.joint_basis_.shape[0]:
                raise InvalidInput(
                    f"views[{k}] has {view.shape[0]} rows but the fit used "
                    f"{self.joint_basis_.shape[0]}"
                )
            out.append(self.joint_basis_ @ (self.joint_basis_.T @ view))
        return out
