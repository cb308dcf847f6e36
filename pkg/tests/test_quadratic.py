import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from lsgames.errors import SingularMatrixError
from lsgames.maps import LinearReductionMap, identity_map, make_map
from lsgames.quadratic import (
    QuadGame2P,
    ReducedQuadGame2P,
    ReductionPair,
    cholesky_transport,
    closed_form_ne,
    lift_game,
    pd_preservation_probe,
    reduce_game,
)


def random_pd(dim, rng):
    B = rng.standard_normal((dim, dim))
    return B @ B.T / dim + 0.5 * np.eye(dim)


def random_game(dim, rng):
    return QuadGame2P(
        Q1=random_pd(dim, rng), Q2=random_pd(dim, rng),
        r1=rng.standard_normal(dim), r2=rng.standard_normal(dim),
        v1=float(rng.standard_normal()), v2=float(rng.standard_normal()),
        dim=dim,
    )


def random_reduced(k, rng):
    return ReducedQuadGame2P(
        Q1=rng.standard_normal((k, k)), Q2=rng.standard_normal((k, k)),
        r1=rng.standard_normal(k), r2=rng.standard_normal(k),
        v1=0.25, v2=-0.5, dim=k,
    )


def gaussian_pair(k, m, seed, same_map=True):
    A1 = make_map("gaussian", k, m, seed)
    A2 = A1 if same_map else make_map("gaussian", k, m, seed + 1)
    return ReductionPair(A1=A1, A2=A2)


class TestClosedFormNe:
    def test_identity_matrices(self):
        game = QuadGame2P(
            Q1=np.eye(2), Q2=np.eye(2),
            r1=np.array([1.0, 2.0]), r2=np.array([3.0, 4.0]),
            v1=0.0, v2=0.0, dim=2,
        )
        x1, x2 = closed_form_ne(game)
        assert_array_equal(x1, [3.0, 4.0])
        assert_array_equal(x2, [1.0, 2.0])

    def test_diagonal_solve(self):
        game = QuadGame2P(
            Q1=np.diag([2.0, 4.0]), Q2=np.eye(2),
            r1=np.array([2.0, 4.0]), r2=np.array([1.0, 1.0]),
            v1=0.0, v2=0.0, dim=2,
        )
        x1, x2 = closed_form_ne(game)
        assert_allclose(x1, [1.0, 1.0], atol=1e-15)
        assert_allclose(x2, [1.0, 1.0], atol=1e-15)

    def test_seeded_pd_instances_against_lstsq_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            game = random_game(50, rng)
            x1, x2 = closed_form_ne(game)
            res1 = np.linalg.norm(game.Q2 @ x1 - game.r2)
            res2 = np.linalg.norm(game.Q1 @ x2 - game.r1)
            assert res1 <= 1e-8 * (1.0 + np.linalg.norm(game.r2))
            assert res2 <= 1e-8 * (1.0 + np.linalg.norm(game.r1))
            # independent SVD-based solve
            oracle1 = np.linalg.lstsq(game.Q2, game.r2, rcond=None)[0]
            oracle2 = np.linalg.lstsq(game.Q1, game.r1, rcond=None)[0]
            assert_allclose(x1, oracle1, rtol=1e-8, atol=1e-10)
            assert_allclose(x2, oracle2, rtol=1e-8, atol=1e-10)

    def test_singular_matrix_named(self):
        game = QuadGame2P(
            Q1=np.eye(2), Q2=np.zeros((2, 2)),
            r1=np.zeros(2), r2=np.zeros(2), v1=0.0, v2=0.0, dim=2,
        )
        with pytest.raises(SingularMatrixError, match="Q2"):
            closed_form_ne(game)

    def test_ne_depends_only_on_other_players_parameters(self):
        rng = np.random.default_rng(7)
        game = random_game(20, rng)
        x1, _ = closed_form_ne(game)
        altered = QuadGame2P(
            Q1=random_pd(20, rng), Q2=game.Q2,
            r1=rng.standard_normal(20), r2=game.r2,
            v1=1.0, v2=2.0, dim=20,
        )
        x1_again, _ = closed_form_ne(altered)
        assert_array_equal(x1, x1_again)  # bit-identical


class TestReduceLift:
    def test_one_dimensional_reduction(self):
        pair = ReductionPair(
            A1=make_map("selection", 1, 2, 0, selected_indices=[0]),
            A2=make_map("selection", 1, 2, 0, selected_indices=[0]),
        )
        game = QuadGame2P(
            Q1=np.diag([2.0, 3.0]), Q2=np.eye(2),
            r1=np.zeros(2), r2=np.zeros(2), v1=0.0, v2=0.0, dim=2,
        )
        reduced = reduce_game(game, pair)
        assert_allclose(reduced.Q1, [[2.0]], atol=1e-14)

    def test_full_selection_is_identity_reduction(self):
        rng = np.random.default_rng(3)
        game = random_game(6, rng)
        ident = identity_map(6)
        reduced = reduce_game(game, ReductionPair(A1=ident, A2=ident))
        assert_allclose(reduced.Q1, game.Q1, atol=1e-12)
        assert_allclose(reduced.Q2, game.Q2, atol=1e-12)
        assert_allclose(reduced.r1, game.r1, atol=1e-12)
        assert reduced.v1 == game.v1

    def test_reduce_after_lift_recovers_reduced_game(self):
        rng = np.random.default_rng(11)
        for seed in range(5):
            reduced = random_reduced(4, rng)
            pair = gaussian_pair(4, 30, seed=seed, same_map=False)
            roundtrip = reduce_game(lift_game(reduced, pair), pair)
            assert_allclose(roundtrip.Q1, reduced.Q1, atol=1e-10)
            assert_allclose(roundtrip.Q2, reduced.Q2, atol=1e-10)
            assert_allclose(roundtrip.r1, reduced.r1, atol=1e-10)
            assert_allclose(roundtrip.r2, reduced.r2, atol=1e-10)

    def test_lift_outer_structure(self):
        pair = ReductionPair(
            A1=make_map("selection", 1, 2, 0, selected_indices=[0]),
            A2=make_map("selection", 1, 2, 0, selected_indices=[0]),
        )
        reduced = ReducedQuadGame2P(
            Q1=np.array([[1.0]]), Q2=np.array([[1.0]]),
            r1=np.array([0.0]), r2=np.array([0.0]), v1=0.0, v2=0.0, dim=1,
        )
        lifted = lift_game(reduced, pair)
        assert_array_equal(lifted.Q1, [[1.0, 0.0], [0.0, 0.0]])

    def test_lift_transpose_action_on_linear_term(self):
        pair = ReductionPair(
            A1=make_map("selection", 1, 2, 0, selected_indices=[1]),
            A2=make_map("selection", 1, 2, 0, selected_indices=[1]),
        )
        reduced = ReducedQuadGame2P(
            Q1=np.array([[0.0]]), Q2=np.array([[0.0]]),
            r1=np.array([5.0]), r2=np.array([0.0]), v1=0.0, v2=0.0, dim=1,
        )
        assert_array_equal(lift_game(reduced, pair).r1, [0.0, 5.0])

    def test_lifted_cost_identity_on_samples(self):
        rng = np.random.default_rng(19)
        reduced = random_reduced(5, rng)
        pair = gaussian_pair(5, 40, seed=2, same_map=False)
        lifted = lift_game(reduced, pair)
        A1, A2 = pair.A1.matrix, pair.A2.matrix
        for _ in range(100):
            x1 = rng.standard_normal(40)
            x2 = rng.standard_normal(40)
            assert abs(lifted.cost1(x1, x2) - reduced.cost1(A1 @ x1, A2 @ x2)) <= 1e-10
            assert abs(lifted.cost2(x1, x2) - reduced.cost2(A1 @ x1, A2 @ x2)) <= 1e-10

    def test_lift_residual_reported(self):
        rng = np.random.default_rng(23)
        game = random_game(12, rng)
        pair = gaussian_pair(3, 12, seed=5)
        reduced = reduce_game(game, pair)
        res1, res2 = reduced.lift_residuals
        assert res1 > 0.0  # generic r1 is not in the row space
        assert_allclose(
            res1, np.linalg.norm(pair.A1.matrix.T @ reduced.r1 - game.r1), atol=1e-12
        )
        # an r1 inside the row space lifts exactly
        r1_in = pair.A1.matrix.T @ rng.standard_normal(3)
        exact = reduce_game(
            QuadGame2P(Q1=game.Q1, Q2=game.Q2, r1=r1_in, r2=game.r2,
                       v1=0.0, v2=0.0, dim=12),
            pair,
        )
        assert exact.lift_residuals[0] <= 1e-10

    def test_rank_deficient_map_rejected(self):
        entries = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        entries.setflags(write=False)
        bad = LinearReductionMap(kind="selection", rows=2, cols=3,
                                 entries=entries, scale=1.0, seed=0)
        good = make_map("selection", 2, 3, 0, selected_indices=[0, 1])
        with pytest.raises(ValueError, match="rank deficient"):
            ReductionPair(A1=bad, A2=good)


class TestCholeskyTransport:
    def test_identity_map_returns_factor(self):
        R = np.linalg.cholesky(random_pd(5, np.random.default_rng(0)))
        assert_allclose(cholesky_transport(R, identity_map(5)), R, atol=1e-12)

    def test_selection_of_identity_stays_identity(self):
        A = make_map("selection", 3, 7, seed=1)
        Rt = cholesky_transport(np.eye(7), A)
        assert_allclose(Rt @ Rt.T, np.eye(3), atol=1e-12)

    def test_factor_product_matches_reduce_game(self):
        rng = np.random.default_rng(40)
        Q = random_pd(40, rng)
        R = np.linalg.cholesky(Q)
        A = make_map("gaussian", 8, 40, seed=6)
        pair = ReductionPair(A1=A, A2=A)
        game = QuadGame2P(Q1=Q, Q2=np.eye(40), r1=np.zeros(40), r2=np.zeros(40),
                          v1=0.0, v2=0.0, dim=40)
        Qt = reduce_game(game, pair).Q1
        Rt = cholesky_transport(R, A)
        assert np.max(np.abs(Rt @ Rt.T - Qt)) <= 1e-10


class TestPdPreservation:
    def test_same_map_selection_keeps_pd(self):
        M = 9
        pair = ReductionPair(
            A1=make_map("selection", 4, M, seed=3),
            A2=make_map("selection", 4, M, seed=3),
        )
        report = pd_preservation_probe(np.diag(np.arange(1.0, M + 1.0)), pair)
        assert report.reduced_pd
        assert report.min_eig > 0.0

    def test_same_map_gaussian_keeps_pd(self):
        rng = np.random.default_rng(8)
        for seed in range(5):
            pair = gaussian_pair(6, 25, seed=seed)
            report = pd_preservation_probe(random_pd(25, rng), pair)
            assert report.reduced_pd

    def test_distinct_maps_can_break_pd(self):
        rng = np.random.default_rng(15)
        found = False
        for seed in range(40):
            pair = gaussian_pair(6, 25, seed=seed, same_map=False)
            report = pd_preservation_probe(random_pd(25, rng), pair)
            if report.min_eig < 0.0:
                found = True
                break
        assert found, "no indefinite reduction found in the seed budget"

    def test_rejects_non_pd_input(self):
        pair = gaussian_pair(2, 6, seed=0)
        with pytest.raises(ValueError, match="positive definite"):
            pd_preservation_probe(-np.eye(6), pair)


def test_pd_flag_diagnostic():
    rng = np.random.default_rng(1)
    assert random_game(8, rng).pd_ok
    indefinite = QuadGame2P(
        Q1=np.diag([1.0, -1.0]), Q2=np.eye(2),
        r1=np.zeros(2), r2=np.zeros(2), v1=0.0, v2=0.0, dim=2,
    )
    assert not indefinite.pd_ok
