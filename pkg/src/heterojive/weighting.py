"""Weight selection for the aggregation step.

The quality of a weighted aggregation is governed by a per-view cost that
combines the view's effective noise level with two curvature statistics of
the weighted projector sum. Minimizing the resulting quadratic objective
over the simplex by iterated inverse-cost reweighting gives the oracle
weights; the data-driven variant plugs in estimates of every unknown.
"""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import BoundaryPoint, InvalidInput, ThetaTooSmall
from .linalg import complement_basis, operator_norm
from .validation import check_count, check_orthonormal, check_weights

THETA_FLOOR = 1e-6
SNR_CEILING = 1e8
SNR_FLOOR = 1e-8
ESTIMATED_BASIS_TOL = 1e-8


@dataclass(frozen=True)
class DiagnosticMaps:
    """Per-view combined bases backing the weight-cost computations.

    Attributes
    ----------
    ubar_k : tuple of numpy.ndarray
        ubar_k[k] has orthonormal columns spanning the joint plus individual
        signal directions of view k; the first ``r`` columns span the joint
        part.
    r : int
        Joint rank; every basis must have at least ``r`` columns.
    """

    ubar_k: tuple
    r: int

    def __post_init__(self):
        if not self.ubar_k:
            raise InvalidInput("ubar_k must hold at least one basis")
        r = check_count(self.r, "r")
        checked = tuple(
            check_orthonormal(
                b, name=f"ubar_k[{k}]", tol=ESTIMATED_BASIS_TOL, allow_empty_cols=False
            )
            for k, b in enumerate(self.ubar_k)
        )
        n = checked[0].shape[0]
        for k, b in enumerate(checked):
            if b.shape[0] != n:
                raise InvalidInput(
                    f"ubar_k[{k}] has ambient dimension {b.shape[0]}, expected {n}"
                )
            if b.shape[1] < r:
                raise InvalidInput(
                    f"ubar_k[{k}] has {b.shape[1]} columns, fewer than the "
                    f"joint rank {r}"
                )
        object.__setattr__(self, "ubar_k", checked)
        object.__setattr__(self, "r", r)

    @property
    def n(self):
        return self.ubar_k[0].shape[0]

    @property
    def n_views(self):
        return len(self.ubar_k)

    def combined_rank(self, k):
        """Width of view k's combined basis."""
        return self.ubar_k[k].shape[1]

    def individual_basis(self, k):
        """Columns of view k's basis beyond the joint block."""
        return self.ubar_k[k][:, self.r:]


@dataclass(frozen=True)
class PluginDiagnostics:
    """Estimated noise and signal-strength quantities, one entry per view.

    ``eps_hat[k]`` is recomputable from the stored dimensions and
    ``snr_hat[k]`` via :func:`epsilon_k`.
    """

    n: int
    d_k: tuple
    combined_ranks: tuple
    sigma_hat: np.ndarray
    lambda_min_hat: np.ndarray
    snr_hat: np.ndarray
    eps_hat: np.ndarray
    kappa_hat: np.ndarray


@dataclass
class WeightTrace:
    """Record of one reweighting run.

    Attributes
    ----------
    iterates : list of numpy.ndarray
        Weight vectors visited, starting from the initial point; the last
        entry is the returned weight.
    costs : list of numpy.ndarray
        Cost vector evaluated at each iterate that produced an update.
    converged : bool
        True when the L1 step size fell below the tolerance.
    iterations_used : int
        Number of update steps performed.
    abort_reason : str or None
        Set when the run stopped because the weighted projector sum became
        numerically rank-revealing (theta at the current iterate fell below
        the floor); the last completed iterate is still returned.
    """

    iterates: list
    costs: list
    converged: bool
    iterations_used: int
    abort_reason: Optional[str] = None

    @property
    def final_weights(self):
        return self.iterates[-1]

    def to_jsonable(self):
        """Plain-Python representation for JSON serialization."""
        return {
            "iterates": [list(map(float, w)) for w in self.iterates],
            "costs": [list(map(float, c)) for c in self.costs],
            "converged": self.converged,
            "iterations_used": self.iterations_used,
            "abort_reason": self.abort_reason,
        }


class MkStats(NamedTuple):
    """Curvature statistics of the weighted projector sum for one view."""

    trace: float
    opnorm: float
    theta: float


def epsilon_k(n, d_k, snr):
    """Effective noise scale of one view.

    Computes sqrt(n)/snr + sqrt(n * d_k)/snr**2, the scale at which the
    view's stage-one subspace deviates from its noiseless counterpart.

    Parameters
    ----------
    n : int
        Number of rows (shared across views).
    d_k : int
        Number of columns of the view.
    snr : float
        Signal-to-noise ratio: the smallest retained singular value of the
        noiseless view divided by the noise level. Must be positive.

    Returns
    -------
    float

    Examples
    --------
    >>> round(epsilon_k(40, 50, 20.0), 4)
    0.428
    """
    n = check_count(n, "n")
    d_k = check_count(d_k, "d_k")
    snr = float(snr)
    if not np.isfinite(snr) or snr <= 0:
        raise InvalidInput(f"snr must be positive and finite, got {snr}")
    return float(np.sqrt(n) / snr + np.sqrt(n * d_k) / snr**2)


def _individual_bases(maps_or_bases):
    """Normalize the two accepted subspace containers to a basis list."""
    if isinstance(maps_or_bases, DiagnosticMaps):
        return [maps_or_bases.individual_basis(k) for k in range(maps_or_bases.n_views)]
    bases = [
        check_orthonormal(b, name=f"bases[{k}]", tol=ESTIMATED_BASIS_TOL)
        for k, b in enumerate(maps_or_bases)
    ]
    if not bases:
        raise InvalidInput("at least one basis is required")
    n = bases[0].shape[0]
    for k, b in enumerate(bases):
        if b.shape[0] != n:
            raise InvalidInput(
                f"bases[{k}] has ambient dimension {b.shape[0]}, expected {n}"
            )
    return bases


def theta_of_w(maps_or_bases, weights):
    """Spectral margin of the weighted individual-projector sum.

    Computes 1 - ||sum_k w_k P_k||_2 where P_k projects onto view k's
    individual subspace. Equals 1 when every individual rank is zero; equals
    0 when the weighted sum has a unit eigenvalue, which happens exactly
    when some direction lies in every individual subspace receiving weight.

    Parameters
    ----------
    maps_or_bases : DiagnosticMaps or list of numpy.ndarray
        Either diagnostic maps (the individual blocks are used) or a list
        of orthonormal individual bases directly.
    weights : array-like
        Simplex weights, one per view.

    Returns
    -------
    float
        In [0, 1]; tiny negative round-off is clipped to 0.
    """
    bases = _individual_bases(maps_or_bases)
    w = check_weights(weights, k=len(bases))
    n = bases[0].shape[0]
    acc = np.zeros((n, n))
    for wk, b in zip(w, bases):
        if wk and b.shape[1]:
            acc += wk * (b @ b.T)
    return max(0.0, 1.0 - operator_norm(acc))


def _h_spectrum(maps, weights):
    """Shared eigendecomposition behind the per-view curvature statistics.

    Forms H(w) = I - sum_k w_k ubar_k ubar_k' and returns
    (theta, lam, u_perp) where lam holds the top n - r eigenvalues in
    ascending order and u_perp the matching eigenvectors. The bottom r
    eigenvalues of H are exact zeros (the joint directions) and are
    discarded. Eigenvalues below the floor are clamped with a warning.

    Raises
    ------
    ThetaTooSmall
        When theta(w) <= 1e-6, so the inverse-square scaling is unusable.
    """
    if not isinstance(maps, DiagnosticMaps):
        raise InvalidInput("maps must be a DiagnosticMaps instance")
    w = check_weights(weights, k=maps.n_views)
    theta = theta_of_w(maps, w)
    if theta <= THETA_FLOOR:
        raise ThetaTooSmall(
            f"theta(w) = {theta:.3e} is at or below the floor {THETA_FLOOR:.0e}; "
            "the weighted individual subspaces leave no joint margin",
            theta=theta,
        )
    n, r = maps.n, maps.r
    acc = np.eye(n)
    for wk, b in zip(w, maps.ubar_k):
        if wk:
            acc -= wk * (b @ b.T)
    acc = (acc + acc.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(acc)
    lam = eigvals[r:]
    u_perp = eigvecs[:, r:]
    if lam.size and lam[0] < THETA_FLOOR:
        warnings.warn(
            f"clamping {int(np.sum(lam < THETA_FLOOR))} eigenvalue(s) of the "
            f"weighted complement to the floor {THETA_FLOOR:.0e}",
            RuntimeWarning,
            stacklevel=3,
        )
        lam = np.maximum(lam, THETA_FLOOR)
    return theta, lam, u_perp


def _mk_factor(maps, k, lam, u_perp):
    """Factor C with M_k = C'C: the scaled overlap of the two complements."""
    ubar_perp = complement_basis(maps.ubar_k[k])
    if ubar_perp.shape[1] == 0:
        return np.zeros((lam.shape[0], 0))
    return (u_perp.T @ ubar_perp) / lam[:, None]


def mk_stats(maps, weights, k):
    """Trace and operator norm of view k's curvature map M_k(w).

    M_k(w) measures how strongly the complement of view k's combined basis
    couples to the small-eigenvalue directions of H(w); its trace and
    operator norm enter the view's aggregation cost.

    Parameters
    ----------
    maps : DiagnosticMaps
    weights : array-like
    k : int
        View index.

    Returns
    -------
    MkStats
        (trace, opnorm, theta) at the given weights.
    """
    if not 0 <= k < maps.n_views:
        raise InvalidInput(f"view index {k} out of range for {maps.n_views} views")
    theta, lam, u_perp = _h_spectrum(maps, weights)
    factor = _mk_factor(maps, k, lam, u_perp)
    return MkStats(
        trace=float(np.sum(factor**2)),
        opnorm=float(operator_norm(factor) ** 2),
        theta=theta,
    )


def _check_eps(eps, n_views):
    eps = np.asarray(eps, dtype=float)
    if eps.ndim != 1 or eps.shape[0] != n_views:
        raise InvalidInput(
            f"eps must be a vector with one entry per view ({n_views}), "
            f"got shape {eps.shape}"
        )
    if np.any(np.isnan(eps)) or np.any(eps < 0):
        raise InvalidInput("eps entries must be nonnegative and not NaN")
    return eps


def cost_vector(eps, maps, weights):
    """Per-view aggregation costs at the given weights.

    c_k(w) = eps_k**4 / theta(w)**2
           + eps_k**2 / n * (trace(M_k(w)) + rbar_k * ||M_k(w)||_2)

    where rbar_k is the width of view k's combined basis. All K statistics
    share one eigendecomposition of H(w).

    Parameters
    ----------
    eps : array-like
        Effective noise scales, one per view.
    maps : DiagnosticMaps
    weights : array-like

    Returns
    -------
    numpy.ndarray
        Nonnegative costs, one per view.
    """
    if not isinstance(maps, DiagnosticMaps):
        raise InvalidInput("maps must be a DiagnosticMaps instance")
    eps = _check_eps(eps, maps.n_views)
    theta, lam, u_perp = _h_spectrum(maps, weights)
    n = maps.n
    costs = np.empty(maps.n_views)
    for k in range(maps.n_views):
        factor = _mk_factor(maps, k, lam, u_perp)
        trace = float(np.sum(factor**2))
        opnorm = float(operator_norm(factor) ** 2)
        rbar = maps.combined_rank(k)
        costs[k] = eps[k] ** 4 / theta**2 + eps[k] ** 2 / n * (trace + rbar * opnorm)
    return costs


def reweight_step(costs):
    """One inverse-cost update mapped back to the simplex.

    w_k proportional to 1 / c_k. Views with exactly zero cost absorb all
    the mass, split uniformly among them.

    Parameters
    ----------
    costs : array-like
        Nonnegative cost per view; infinite entries get zero weight.

    Returns
    -------
    numpy.ndarray
        Simplex weights.

    Examples
    --------
    >>> reweight_step([2.0, 4.0, 8.0])
    array([0.57142857, 0.28571429, 0.14285714])
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise InvalidInput(f"costs must be a nonempty vector, got shape {c.shape}")
    if np.any(np.isnan(c)) or np.any(c < 0):
        raise InvalidInput("costs must be nonnegative and not NaN")
    zero = c == 0.0
    if np.any(zero):
        w = zero.astype(float)
    else:
        w = 1.0 / c
        total = w.sum()
        if total == 0.0 or not np.isfinite(total):
            raise InvalidInput("costs admit no finite inverse-cost weights")
    return w / w.sum()


def oracle_iterate(eps, maps, w0=None, t_max=20, tol=1e-8):
    """Iterated inverse-cost reweighting with fresh costs at every step.

    Starting from ``w0`` (uniform by default), repeatedly evaluates the cost
    vector at the current iterate and replaces the weights by the normalized
    inverse costs, stopping when the L1 step falls below ``tol`` or after
    ``t_max`` updates. The costs entering each update are always evaluated
    at the iterate being updated, never reused from the previous step.

    Parameters
    ----------
    eps : array-like
        Effective noise scales, one per view; exact for the oracle,
        estimated for the plug-in.
    maps : DiagnosticMaps
    w0 : array-like, optional
    t_max : int
    tol : float

    Returns
    -------
    WeightTrace
        If theta falls below its floor at a later iterate, the trace is
        truncated there with ``abort_reason`` set; an unusable *starting*
        point raises instead.

    Raises
    ------
    ThetaTooSmall
        When theta(w0) is already at or below the floor.
    """
    if not isinstance(maps, DiagnosticMaps):
        raise InvalidInput("maps must be a DiagnosticMaps instance")
    eps = _check_eps(eps, maps.n_views)
    t_max = check_count(t_max, "t_max")
    tol = float(tol)
    if tol <= 0:
        raise InvalidInput(f"tol must be positive, got {tol}")
    if w0 is None:
        w = np.full(maps.n_views, 1.0 / maps.n_views)
    else:
        w = check_weights(w0, k=maps.n_views)
    iterates = [w.copy()]
    costs = []
    converged = False
    abort_reason = None
    for t in range(t_max):
        try:
            c = cost_vector(eps, maps, w)
        except ThetaTooSmall as exc:
            if t == 0:
                raise
            abort_reason = (
                f"stopped before update {t}: theta at the current iterate is "
                f"{exc.theta:.3e}, at or below the floor {THETA_FLOOR:.0e}"
            )
            break
        costs.append(c)
        w_next = reweight_step(c)
        iterates.append(w_next.copy())
        step = float(np.abs(w_next - w).sum())
        w = w_next
        if step < tol:
            converged = True
            break
    return WeightTrace(
        iterates=iterates,
        costs=costs,
        converged=converged,
        iterations_used=len(costs),
        abort_reason=abort_reason,
    )


def objective_J(eps, maps, weights):
    """Weighted aggregation risk surrogate J(w) = sum_k w_k**2 c_k(w)."""
    if not isinstance(maps, DiagnosticMaps):
        raise InvalidInput("maps must be a DiagnosticMaps instance")
    eps = _check_eps(eps, maps.n_views)
    w = check_weights(weights, k=maps.n_views)
    return float(np.sum(w**2 * cost_vector(eps, maps, w)))


def stationarity_bound(eps, maps, theta_half):
    """Tolerance L for the projected gradient at an approximate fixed point.

    L = 4 / theta_half**3 * max_k (eps_k**4 + 3 eps_k**2 rbar_k / n),
    with theta_half = theta(w)/2 absorbing the drift of the costs between
    neighbouring weight vectors.
    """
    eps = _check_eps(eps, maps.n_views)
    theta_half = float(theta_half)
    if theta_half <= 0:
        raise InvalidInput(f"theta_half must be positive, got {theta_half}")
    n = maps.n
    per_view = [
        eps[k] ** 4 + 3.0 * eps[k] ** 2 * maps.combined_rank(k) / n
        for k in range(maps.n_views)
    ]
    return float(4.0 / theta_half**3 * max(per_view))


def stationarity_check(eps, maps, weights, h=None):
    """Projected-gradient norm of J at interior weights, with its tolerance.

    Estimates the gradient of J along the simplex tangent directions by
    central differences of step ``h`` and projects out the constant
    component. At an exact interior fixed point of the reweighting map the
    projected gradient vanishes up to the returned bound.

    Parameters
    ----------
    eps : array-like
    maps : DiagnosticMaps
    weights : array-like
        Interior simplex point: every entry must exceed ``h``.
    h : float, optional
        Defaults to 1e-5 * (1 + max_k w_k).

    Returns
    -------
    (float, float)
        (sup-norm of the projected gradient, tolerance L at theta(w)/2).

    Raises
    ------
    BoundaryPoint
        When some weight is within ``h`` of zero, so the symmetric
        difference would leave the simplex.
    ThetaTooSmall
        When theta(w) <= 2e-6, too close to the floor for stable
        differencing.
    """
    if not isinstance(maps, DiagnosticMaps):
        raise InvalidInput("maps must be a DiagnosticMaps instance")
    eps = _check_eps(eps, maps.n_views)
    w = check_weights(weights, k=maps.n_views)
    kk = maps.n_views
    if h is None:
        h = 1e-5 * (1.0 + float(np.max(np.abs(w))))
    h = float(h)
    if h <= 0:
        raise InvalidInput(f"h must be positive, got {h}")
    if np.any(w <= h):
        raise BoundaryPoint(
            f"minimum weight {w.min():.3e} is within the step {h:.3e} of the "
            "simplex boundary; the interior stationarity condition does not apply"
        )
    theta = theta_of_w(maps, w)
    if theta <= 2 * THETA_FLOOR:
        raise ThetaTooSmall(
            f"theta(w) = {theta:.3e} is too close to the floor for stable "
            "finite differences",
            theta=theta,
        )
    bound = stationarity_bound(eps, maps, theta / 2.0)
    if kk == 1:
        return 0.0, bound
    grad = np.zeros(kk)
    for k in range(kk - 1):
        step = np.zeros(kk)
        step[k] = h
        step[kk - 1] = -h
        j_plus = objective_J(eps, maps, w + step)
        j_minus = objective_J(eps, maps, w - step)
        grad[k] = (j_plus - j_minus) / (2.0 * h)
    projected = grad - grad.mean()
    return float(np.max(np.abs(projected))), bound


def noise_dof(n, d_k, combined_rank):
    """Residual degrees of freedom after removing a rank-constrained fit."""
    return n * d_k - combined_rank * (n + d_k - combined_rank)


def compute_plugin_diagnostics(data, ranks, fit):
    """Estimate per-view noise and signal strength from a completed fit.

    For each view, reconstructs the estimated signal
    u_hat v_k_hat' + u_k_hat w_k_hat', reads the noise level off the
    residual Frobenius norm scaled by the residual degrees of freedom, and
    takes the smallest retained singular value of the reconstruction as the
    signal floor. The ratio is clamped into [1e-8, 1e8] before being turned
    into an effective noise scale.

    Returns
    -------
    PluginDiagnostics or None
        None when some view has no residual degrees of freedom, in which
        case the noise level is not identifiable.
    """
    n = data.n
    sigma_hat = np.empty(data.n_views)
    lambda_min_hat = np.empty(data.n_views)
    snr_hat = np.empty(data.n_views)
    eps_hat = np.empty(data.n_views)
    kappa_hat = np.empty(data.n_views)
    for k, view in enumerate(data.views):
        rbar = ranks.combined(k)
        dof = noise_dof(n, data.d_k[k], rbar)
        if dof <= 0:
            return None
        recon = fit.u_hat @ fit.v_k_hat[k].T
        if fit.u_k_hat[k].shape[1]:
            recon = recon + fit.u_k_hat[k] @ fit.w_k_hat[k].T
        sigma = float(np.linalg.norm(view - recon) / np.sqrt(dof))
        svals = np.linalg.svd(recon, compute_uv=False)
        lam = float(svals[rbar - 1])
        if sigma > 0.0:
            snr = min(max(lam / sigma, SNR_FLOOR), SNR_CEILING)
        else:
            snr = SNR_CEILING
        sigma_hat[k] = sigma
        lambda_min_hat[k] = lam
        snr_hat[k] = snr
        eps_hat[k] = epsilon_k(n, data.d_k[k], snr)
        kappa_hat[k] = float(svals[0] / lam) if lam > 0 else float("inf")
    return PluginDiagnostics(
        n=n,
        d_k=tuple(data.d_k),
        combined_ranks=tuple(ranks.combined(k) for k in range(data.n_views)),
        sigma_hat=sigma_hat,
        lambda_min_hat=lambda_min_hat,
        snr_hat=snr_hat,
        eps_hat=eps_hat,
        kappa_hat=kappa_hat,
    )


def maps_from_fit(fit, ranks):
    """Diagnostic maps built from a fit's estimated joint and individual bases."""
    ubar = tuple(
        np.hstack([fit.u_hat, fit.u_k_hat[k]]) for k in range(len(fit.u_k_hat))
    )
    return DiagnosticMaps(ubar_k=ubar, r=ranks.r)


def plugin_fit(data, ranks):
    """Equal-weight initialization fit with estimated weighting inputs.

    Runs the two-stage estimator at equal weights, then packages the
    estimated effective noise scales and the estimated combined bases for
    use by the reweighting iteration.

    Returns
    -------
    (PluginDiagnostics, DiagnosticMaps)

    Raises
    ------
    InvalidInput
        When some view has no residual degrees of freedom
        (n d_k <= rbar_k (n + d_k - rbar_k)), so the noise level cannot
        be estimated.
    """
    from .estimators import equal_weights, heterojive
    from .model import MultiViewData
    from .validation import check_views

    if not isinstance(data, MultiViewData):
        data = MultiViewData(views=check_views(data))
    for k in range(data.n_views):
        dof = noise_dof(data.n, data.d_k[k], ranks.combined(k))
        if dof <= 0:
            raise InvalidInput(
                f"view {k}: no residual degrees of freedom at combined rank "
                f"{ranks.combined(k)} (n = {data.n}, d_k = {data.d_k[k]}); "
                "the noise level is not identifiable"
            )
    fit = heterojive(data, ranks, equal_weights(data.n_views))
    return fit.diagnostics, maps_from_fit(fit, ranks)


def data_driven_weights(data, ranks, t_max=20, tol=1e-8, refresh_each_iter=False):
    """Learn aggregation weights from the data alone.

    Default behaviour estimates the weighting inputs once from an
    equal-weight fit and then runs the reweighting iteration against those
    frozen estimates. With ``refresh_each_iter`` the fit (and hence the
    maps and noise scales) is re-estimated at every iterate, which costs a
    full pipeline pass per step.

    Returns
    -------
    (numpy.ndarray, WeightTrace)
        The final weights and the full iteration record.
    """
    if not refresh_each_iter:
        diagnostics, maps = plugin_fit(data, ranks)
        trace = oracle_iterate(diagnostics.eps_hat, maps, t_max=t_max, tol=tol)
        return trace.final_weights, trace

    from .estimators import heterojive
    from .model import MultiViewData
    from .validation import check_views

    if not isinstance(data, MultiViewData):
        data = MultiViewData(views=check_views(data))
    t_max = check_count(t_max, "t_max")
    tol = float(tol)
    if tol <= 0:
        raise InvalidInput(f"tol must be positive, got {tol}")
    w = np.full(data.n_views, 1.0 / data.n_views)
    iterates = [w.copy()]
    costs = []
    converged = False
    abort_reason = None
    for t in range(t_max):
        fit = heterojive(data, ranks, w)
        if fit.diagnostics is None:
            raise InvalidInput(
                "no residual degrees of freedom; the noise level is not identifiable"
            )
        maps = maps_from_fit(fit, ranks)
        try:
            c = cost_vector(fit.diagnostics.eps_hat, maps, w)
        except ThetaTooSmall as exc:
            if t == 0:
                raise
            abort_reason = (
                f"stopped before update {t}: theta at the current iterate is "
                f"{exc.theta:.3e}, at or below the floor {THETA_FLOOR:.0e}"
            )
            break
        costs.append(c)
        w_next = reweight_step(c)
        iterates.append(w_next.copy())
        step = float(np.abs(w_next - w).sum())
        w = w_next
        if step < tol:
            converged = True
            break
    trace = WeightTrace(
        iterates=iterates,
        costs=costs,
        converged=converged,
        iterations_used=len(costs),
        abort_reason=abort_reason,
    )
    return trace.final_weights, trace
