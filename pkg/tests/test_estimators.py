"""Tests for the two-stage estimators and their class wrappers."""

import numpy as np
import pytest

from heterojive import (
    AJIVE,
    DegenerateAggregation,
    HeteroJIVE,
    InvalidInput,
    MultiViewData,
    RankSpec,
    StackSVD,
    aggregate_weighted,
    build_ground_truth,
    equal_weights,
    extract_components,
    heterojive,
    projector_distance,
    stack_svd,
    stage1_extract,
    subspace_error,
    synthesize_views,
    thin_svd,
)


def make_instance(seed, n=20, d=30, r=2, r_k=2, n_views=3, sigma=0.0, theta=0.5, **kw):
    rng = np.random.default_rng(seed)
    ranks = RankSpec.homogeneous(r, r_k, n_views)
    truth = build_ground_truth(
        rng, n, d, ranks, kw.pop("scheme", "random"),
        s=kw.pop("s", 1.0), gamma=kw.pop("gamma", 1.0), theta=theta, sigma=sigma,
    )
    data = synthesize_views(rng, truth)
    return truth, data, ranks


class TestStage1Extract:
    def test_noiseless_recovers_combined_subspace(self):
        truth, data, ranks = make_instance(0)
        out = stage1_extract(data, ranks)
        for k in range(3):
            combined = np.hstack([truth.u, truth.u_k[k]])
            assert projector_distance(out.bases[k], combined) < 1e-10
            assert not out.degenerate[k]

    def test_keeps_full_singular_value_sequence(self):
        _, data, ranks = make_instance(1, sigma=0.1)
        out = stage1_extract(data, ranks)
        assert out.singvals[0].shape == (20,)
        assert np.all(np.diff(out.singvals[0]) <= 0)

    def test_tie_at_cut_flagged(self):
        # An orthogonal view has all singular values equal to 1, so any
        # truncation below full rank cuts through a tie.
        rng = np.random.default_rng(2)
        from heterojive import haar_orthonormal

        view = haar_orthonormal(rng, 6, 6)
        out = stage1_extract([view], RankSpec(1, (1,)))
        assert out.degenerate == [True]

    def test_rank_budget_enforced(self):
        _, data, _ = make_instance(3)
        with pytest.raises(InvalidInput):
            stage1_extract(data, RankSpec.homogeneous(10, 15, 3))


class TestAggregateWeighted:
    def test_noiseless_equal_weights_recover_joint(self):
        truth, data, ranks = make_instance(4)
        stage1 = stage1_extract(data, ranks)
        agg = aggregate_weighted(stage1, equal_weights(3), 2)
        assert projector_distance(agg.basis, truth.u) < 1e-8
        assert agg.gap > 0.01
        assert not agg.degenerate

    def test_single_view_tie_raises(self):
        # One noiseless view: the projector sum is that view's projector,
        # whose eigenvalues tie at 1, so no rank-r slice is identified.
        truth, data, ranks = make_instance(5, n_views=1)
        stage1 = stage1_extract(
            MultiViewData(views=[data.views[0]]), RankSpec(2, (2,))
        )
        with pytest.raises(DegenerateAggregation) as exc_info:
            aggregate_weighted(stage1, [1.0], 2)
        assert exc_info.value.gap is not None
        assert exc_info.value.gap < 1e-12

    def test_weights_validated(self):
        _, data, ranks = make_instance(6)
        stage1 = stage1_extract(data, ranks)
        with pytest.raises(InvalidInput):
            aggregate_weighted(stage1, [0.5, 0.5, 0.5], 2)
        with pytest.raises(InvalidInput):
            aggregate_weighted(stage1, [-0.2, 0.6, 0.6], 2)

    def test_zero_weight_views_ignored(self):
        truth, data, ranks = make_instance(7)
        stage1 = stage1_extract(data, ranks)
        a = aggregate_weighted(stage1, [0.5, 0.5, 0.0], 2)
        stage1_sub = stage1_extract(
            MultiViewData(views=data.views[:2]), RankSpec.homogeneous(2, 2, 2)
        )
        b = aggregate_weighted(stage1_sub, [0.5, 0.5], 2)
        assert projector_distance(a.basis, b.basis) < 1e-10


class TestExtractComponents:
    def test_noiseless_exact_reconstruction(self):
        truth, data, ranks = make_instance(8)
        fit = heterojive(data, ranks, equal_weights(3))
        for k in range(3):
            recon = fit.u_hat @ fit.v_k_hat[k].T + fit.u_k_hat[k] @ fit.w_k_hat[k].T
            np.testing.assert_allclose(recon, data.views[k], atol=1e-8)

    def test_individual_orthogonal_to_joint(self):
        _, data, ranks = make_instance(9, sigma=0.1)
        fit = heterojive(data, ranks, equal_weights(3))
        for basis in fit.u_k_hat:
            assert np.max(np.abs(fit.u_hat.T @ basis)) < 1e-8

    def test_zero_individual_rank(self):
        _, data, _ = make_instance(10)
        ranks = RankSpec(2, (0, 0, 0))
        u_k, v_k, w_k = extract_components(data, np.eye(20)[:, :2], ranks)
        assert u_k[0].shape == (20, 0)
        assert w_k[0].shape == (30, 0)
        assert v_k[0].shape == (30, 2)

    def test_individual_rank_budget(self):
        _, data, _ = make_instance(11)
        with pytest.raises(InvalidInput):
            extract_components(data, np.eye(20)[:, :19], RankSpec(19, (2, 2, 2)))


class TestHeterojive:
    def test_scale_invariance(self):
        # Rescaling any view leaves its left singular subspace unchanged,
        # so the fitted joint basis must be identical for fixed weights.
        _, data, ranks = make_instance(12, sigma=0.05)
        w = np.array([0.2, 0.3, 0.5])
        fit1 = heterojive(data, ranks, w)
        scaled = MultiViewData(
            views=[3.0 * data.views[0], 0.5 * data.views[1], 10.0 * data.views[2]]
        )
        fit2 = heterojive(scaled, ranks, w)
        assert projector_distance(fit1.u_hat, fit2.u_hat) < 1e-9

    def test_diagnostics_populated_by_default(self):
        _, data, ranks = make_instance(13, sigma=0.1)
        fit = heterojive(data, ranks, equal_weights(3))
        assert fit.diagnostics is not None
        assert fit.diagnostics.sigma_hat.shape == (3,)
        fit_bare = heterojive(data, ranks, equal_weights(3), compute_diagnostics=False)
        assert fit_bare.diagnostics is None

    def test_accepts_plain_list_of_views(self):
        _, data, ranks = make_instance(14)
        fit = heterojive(list(data.views), ranks, equal_weights(3))
        assert fit.u_hat.shape == (20, 2)


class TestStackSvd:
    def test_single_view_equals_pca(self):
        _, data, _ = make_instance(15, sigma=0.1, n_views=1)
        res = stack_svd(MultiViewData(views=[data.views[0]]), 2)
        left, _, _ = thin_svd(data.views[0])
        assert projector_distance(res.basis, left[:, :2]) < 1e-10

    def test_degenerate_flag_does_not_raise(self):
        res = stack_svd([np.eye(4)], 2)
        assert res.degenerate
        assert res.gap < 1e-12

    def test_weights_change_result(self):
        _, data, _ = make_instance(16, sigma=0.1, s=[1.0, 5.0, 1.0])
        a = stack_svd(data, 2)
        b = stack_svd(data, 2, weights=[0.98, 0.01, 0.01])
        assert projector_distance(a.basis, b.basis) > 1e-4


class TestEstimatorClasses:
    def test_params_roundtrip(self):
        est = HeteroJIVE(joint_rank=3, individual_ranks=(1, 2), tol=1e-6)
        params = est.get_params()
        clone = HeteroJIVE(**params)
        assert clone.get_params() == params
        est.set_params(joint_rank=2)
        assert est.joint_rank == 2
        with pytest.raises(InvalidInput):
            est.set_params(bogus=1)

    def test_fit_sets_attributes(self):
        truth, data, _ = make_instance(17, sigma=0.05)
        est = HeteroJIVE(joint_rank=2, individual_ranks=2).fit(data.views)
        assert est.joint_basis_.shape == (20, 2)
        assert len(est.individual_bases_) == 3
        assert est.weights_.shape == (3,)
        assert est.weight_trace_ is not None
        assert est.spectral_gap_ > 0
        assert subspace_error(est.joint_basis_, truth.u) < 0.5

    def test_equal_weight_option_matches_ajive_class(self):
        _, data, _ = make_instance(18, sigma=0.05)
        a = HeteroJIVE(joint_rank=2, individual_ranks=2, weights="equal").fit(data.views)
        b = AJIVE(joint_rank=2, individual_ranks=2).fit(data.views)
        np.testing.assert_array_equal(a.joint_basis_, b.joint_basis_)
        assert a.weight_trace_ is None

    def test_explicit_weight_vector(self):
        _, data, _ = make_instance(19, sigma=0.05)
        est = HeteroJIVE(joint_rank=2, individual_ranks=2, weights=[0.6, 0.3, 0.1])
        est.fit(data.views)
        np.testing.assert_allclose(est.weights_, [0.6, 0.3, 0.1])

    def test_unknown_weights_string_rejected(self):
        _, data, _ = make_instance(20)
        with pytest.raises(InvalidInput):
            HeteroJIVE(weights="magic").fit(data.views)

    def test_transform_projects_onto_joint(self):
        _, data, _ = make_instance(21, sigma=0.05)
        est = AJIVE(joint_rank=2, individual_ranks=2).fit(data.views)
        proj = est.transform(data.views)
        p = est.joint_basis_ @ est.joint_basis_.T
        np.testing.assert_allclose(proj[0], p @ data.views[0], atol=1e-12)

    def test_transform_before_fit_rejected(self):
        with pytest.raises(InvalidInput):
            HeteroJIVE().transform([np.zeros((3, 2))])

    def test_fit_transform_returns_joint_basis(self):
        _, data, _ = make_instance(22, sigma=0.05)
        est = AJIVE(joint_rank=2, individual_ranks=2)
        basis = est.fit_transform(data.views)
        np.testing.assert_array_equal(basis, est.joint_basis_)

    def test_stack_svd_class(self):
        _, data, _ = make_instance(23, sigma=0.05)
        est = StackSVD(joint_rank=2).fit(data.views)
        assert est.joint_basis_.shape == (20, 2)
        assert not est.degenerate_
        np.testing.assert_allclose(est.weights_, equal_weights(3))
