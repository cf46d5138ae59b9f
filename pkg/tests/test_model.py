"""Tests for the data model: ranks, ground truth, generation, synthesis."""

import numpy as np
import pytest

from heterojive import (
    InvalidInput,
    JiveGroundTruth,
    LoadingScheme,
    MultiViewData,
    RankSpec,
    build_ground_truth,
    generate_loadings,
    generate_subspaces,
    haar_orthonormal,
    projector_distance,
    realized_theta,
    synthesize_views,
)


class TestRankSpec:
    def test_basic_properties(self):
        ranks = RankSpec(2, (1, 0, 3))
        assert ranks.r == 2
        assert ranks.individual == (1, 0, 3)
        assert ranks.n_views == 3
        assert ranks.combined(2) == 5

    def test_homogeneous_builder(self):
        ranks = RankSpec.homogeneous(2, 1, 4)
        assert ranks.individual == (1, 1, 1, 1)

    def test_rejects_scalar_individual(self):
        with pytest.raises(InvalidInput, match="homogeneous"):
            RankSpec(2, 1)

    def test_rejects_nonpositive_joint_rank(self):
        with pytest.raises(InvalidInput):
            RankSpec(0, (1,))

    def test_rejects_negative_individual(self):
        with pytest.raises(InvalidInput):
            RankSpec(1, (1, -1))


class TestJiveGroundTruth:
    def _pieces(self, seed=0):
        rng = np.random.default_rng(seed)
        u = haar_orthonormal(rng, 10, 2)
        from heterojive import sample_in_complement

        u_k = [sample_in_complement(rng, [u], 1) for _ in range(2)]
        v_k = [haar_orthonormal(rng, 6, 2) for _ in range(2)]
        w_k = [haar_orthonormal(rng, 6, 1) for _ in range(2)]
        return u, u_k, v_k, w_k

    def test_valid_construction(self):
        u, u_k, v_k, w_k = self._pieces()
        truth = JiveGroundTruth(
            u=u, u_k=u_k, v_k=v_k, w_k=w_k,
            sigma_k=[0.1, 0.2], s_k=[1.0, 2.0], gamma=0.5,
        )
        assert truth.n == 10
        assert truth.n_views == 2
        assert truth.ranks.individual == (1, 1)

    def test_signal_formula(self):
        u, u_k, v_k, w_k = self._pieces(1)
        truth = JiveGroundTruth(
            u=u, u_k=u_k, v_k=v_k, w_k=w_k,
            sigma_k=[0.0, 0.0], s_k=[3.0, 1.0], gamma=2.0,
        )
        expected = 3.0 * (u @ v_k[0].T + 2.0 * u_k[0] @ w_k[0].T)
        np.testing.assert_allclose(truth.signal(0), expected, atol=1e-12)

    def test_rejects_joint_individual_overlap(self):
        u, u_k, v_k, w_k = self._pieces(2)
        with pytest.raises(InvalidInput):
            JiveGroundTruth(
                u=u, u_k=[u[:, :1], u_k[1]], v_k=v_k, w_k=w_k,
                sigma_k=[0.1, 0.1], s_k=[1.0, 1.0], gamma=1.0,
            )

    def test_rejects_negative_noise(self):
        u, u_k, v_k, w_k = self._pieces(3)
        with pytest.raises(InvalidInput):
            JiveGroundTruth(
                u=u, u_k=u_k, v_k=v_k, w_k=w_k,
                sigma_k=[-0.1, 0.1], s_k=[1.0, 1.0], gamma=1.0,
            )


class TestGenerateSubspaces:
    def test_orthogonality_structure(self):
        rng = np.random.default_rng(4)
        ranks = RankSpec.homogeneous(2, 3, 4)
        u, u_list = generate_subspaces(rng, 20, ranks, theta=0.4)
        np.testing.assert_allclose(u.T @ u, np.eye(2), atol=1e-10)
        for u_k in u_list:
            np.testing.assert_allclose(u_k.T @ u_k, np.eye(3), atol=1e-10)
            assert np.max(np.abs(u.T @ u_k)) < 1e-10

    def test_theta_zero_collapses_individual_subspaces(self):
        rng = np.random.default_rng(5)
        ranks = RankSpec.homogeneous(1, 2, 3)
        _, u_list = generate_subspaces(rng, 12, ranks, theta=0.0)
        assert projector_distance(u_list[0], u_list[1]) < 1e-10
        assert projector_distance(u_list[0], u_list[2]) < 1e-10

    def test_independent_variant(self):
        rng = np.random.default_rng(6)
        ranks = RankSpec(1, (2, 3))
        u, u_list = generate_subspaces(rng, 15, ranks, theta=None)
        assert u_list[0].shape == (15, 2)
        assert u_list[1].shape == (15, 3)
        assert np.max(np.abs(u.T @ u_list[1])) < 1e-10

    def test_theta_requires_equal_widths(self):
        rng = np.random.default_rng(7)
        with pytest.raises(InvalidInput):
            generate_subspaces(rng, 15, RankSpec(1, (2, 3)), theta=0.5)

    def test_theta_needs_room_for_two_blocks(self):
        rng = np.random.default_rng(8)
        with pytest.raises(InvalidInput):
            generate_subspaces(rng, 6, RankSpec.homogeneous(2, 3, 2), theta=0.5)

    def test_theta_out_of_range(self):
        rng = np.random.default_rng(9)
        with pytest.raises(InvalidInput):
            generate_subspaces(rng, 20, RankSpec.homogeneous(1, 1, 2), theta=1.5)


class TestRealizedTheta:
    def test_closed_form_two_views(self):
        # u_1 and u_2 unit vectors with inner product 1 - t share the
        # component sqrt(1-t) e2; the equal-weight projector average has top
        # eigenvalue (1 + (1 - t))/2, so realized theta is exactly t/2.
        t = 0.4
        n = 5
        u1 = np.zeros((n, 1))
        u2 = np.zeros((n, 1))
        u1[1, 0] = np.sqrt(1 - t)
        u1[2, 0] = np.sqrt(t)
        u2[1, 0] = np.sqrt(1 - t)
        u2[3, 0] = np.sqrt(t)
        assert realized_theta([u1, u2]) == pytest.approx(t / 2, abs=1e-12)

    def test_weights_argument(self):
        u1 = np.eye(4)[:, :1]
        u2 = np.eye(4)[:, 1:2]
        assert realized_theta([u1, u2], weights=[1.0, 0.0]) == pytest.approx(0.0)
        assert realized_theta([u1, u2], weights=[0.5, 0.5]) == pytest.approx(0.5)

    def test_zero_rank_views_give_full_margin(self):
        assert realized_theta([np.zeros((4, 0)), np.zeros((4, 0))]) == 1.0


class TestGenerateLoadings:
    def test_shared_reuses_one_draw(self):
        rng = np.random.default_rng(10)
        v_list, w_list = generate_loadings(rng, "shared", 8, 2, 3)
        assert all(v is v_list[0] for v in v_list)
        assert all(w is w_list[0] for w in w_list)

    def test_shared_orthogonal_blocks(self):
        rng = np.random.default_rng(11)
        v_list, w_list = generate_loadings(rng, "shared_orthogonal", 9, 2, 3)
        assert np.max(np.abs(v_list[0].T @ w_list[0])) < 1e-10
        assert v_list[0] is v_list[2]

    def test_random_orthogonal_varies_per_view(self):
        rng = np.random.default_rng(12)
        v_list, w_list = generate_loadings(rng, "random_orthogonal", 9, 2, 2)
        for v, w in zip(v_list, w_list):
            assert np.max(np.abs(v.T @ w)) < 1e-10
        assert projector_distance(v_list[0], v_list[1]) > 1e-3

    def test_random_draws_independent_frames(self):
        rng = np.random.default_rng(13)
        v_list, w_list = generate_loadings(rng, "random", 6, 2, 2)
        np.testing.assert_allclose(v_list[0].T @ v_list[0], np.eye(2), atol=1e-10)
        assert projector_distance(v_list[0], v_list[1]) > 1e-3
        assert w_list[0].shape == (6, 2)

    def test_individual_width_override(self):
        rng = np.random.default_rng(14)
        v_list, w_list = generate_loadings(rng, "random", 7, 2, 2, r_individual=3)
        assert v_list[0].shape == (7, 2)
        assert w_list[0].shape == (7, 3)

    def test_orthogonal_scheme_needs_room(self):
        rng = np.random.default_rng(15)
        with pytest.raises(InvalidInput):
            generate_loadings(rng, "shared_orthogonal", 3, 2, 2)

    def test_scheme_parse_rejects_unknown(self):
        with pytest.raises(InvalidInput):
            LoadingScheme.parse("diagonal")


class TestSynthesizeViews:
    def _truth(self, sigma, seed=16):
        rng = np.random.default_rng(seed)
        ranks = RankSpec.homogeneous(2, 1, 2)
        return rng, build_ground_truth(
            rng, 20, 15, ranks, "random", s=1.0, gamma=1.0, theta=0.5, sigma=sigma
        )

    def test_noiseless_views_equal_signal(self):
        rng, truth = self._truth(0.0)
        data = synthesize_views(rng, truth)
        for k in range(2):
            np.testing.assert_allclose(data.views[k], truth.signal(k), atol=1e-12)

    def test_noise_level_matches_sigma(self):
        rng = np.random.default_rng(17)
        ranks = RankSpec.homogeneous(1, 1, 1)
        truth = build_ground_truth(
            rng, 200, 150, ranks, "random", sigma=0.3, theta=None
        )
        data = synthesize_views(rng, truth)
        residual = data.views[0] - truth.signal(0)
        assert np.std(residual) == pytest.approx(0.3, abs=0.01)

    def test_deterministic_given_stream(self):
        rng1, truth = self._truth(0.2, seed=18)
        data1 = synthesize_views(np.random.default_rng(99), truth)
        data2 = synthesize_views(np.random.default_rng(99), truth)
        for a, b in zip(data1.views, data2.views):
            np.testing.assert_array_equal(a, b)


class TestBuildGroundTruth:
    def test_scale_bookkeeping(self):
        # With shared loadings the two signal matrices differ only by the
        # per-view scale and the individual basis; since u is orthogonal to
        # each u_k, both Frobenius norms factor identically, so view 2's
        # signal is exactly 100 times view 1's.
        rng = np.random.default_rng(19)
        ranks = RankSpec.homogeneous(1, 1, 2)
        truth = build_ground_truth(
            rng, 100, 100, ranks, "shared", s=[1.0, 100.0], gamma=2.0,
            theta=None, sigma=0.1,
        )
        n1 = np.linalg.norm(truth.signal(0))
        n2 = np.linalg.norm(truth.signal(1))
        assert n2 == pytest.approx(100.0 * n1, rel=1e-10)

    def test_broadcasts_and_length_checks(self):
        rng = np.random.default_rng(20)
        ranks = RankSpec.homogeneous(1, 1, 3)
        truth = build_ground_truth(rng, 12, 8, ranks, "random", s=2.0, sigma=0.1)
        assert truth.s_k == [2.0, 2.0, 2.0]
        with pytest.raises(InvalidInput):
            build_ground_truth(rng, 12, 8, ranks, "random", s=[1.0, 2.0])

    def test_unequal_ranks_require_random_scheme(self):
        rng = np.random.default_rng(21)
        with pytest.raises(InvalidInput):
            build_ground_truth(rng, 12, 8, RankSpec(1, (1, 2)), "shared")
        truth = build_ground_truth(rng, 12, 8, RankSpec(1, (1, 2)), "random")
        assert truth.w_k[1].shape == (8, 2)

    def test_heterogeneous_dims_require_random_scheme(self):
        rng = np.random.default_rng(22)
        ranks = RankSpec.homogeneous(1, 1, 2)
        with pytest.raises(InvalidInput):
            build_ground_truth(rng, 12, [8, 9], ranks, "shared")
        truth = build_ground_truth(rng, 12, [8, 9], ranks, "random")
        assert truth.v_k[0].shape == (8, 1)
        assert truth.v_k[1].shape == (9, 1)


class TestMultiViewData:
    def test_row_mismatch_rejected(self):
        with pytest.raises(InvalidInput):
            MultiViewData(views=[np.zeros((3, 2)), np.zeros((4, 2))])

    def test_labels_length_checked(self):
        with pytest.raises(InvalidInput):
            MultiViewData(views=[np.zeros((3, 2))], labels=np.array([1, 2]))

    def test_dimensions_exposed(self):
        data = MultiViewData(views=[np.zeros((3, 2)), np.zeros((3, 5))])
        assert data.n == 3
        assert data.d_k == (2, 5)
        assert data.n_views == 2
