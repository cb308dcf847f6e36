import numpy as np
import pytest
from numpy.testing import assert_allclose

from lsgames.convex import (
    SmoothGame,
    _fd_gradient,
    _fd_hessian,
    convexity_probe,
    coupled_quadratic_game,
    coupled_quadratic_ne,
    decoupled_quadratic_game,
    gradient_consistency,
    local_equivalence_gap,
    logsumexp_game,
    ne_solve_best_response,
    projected_gradient_residual,
    taylor_model,
    transport_gradient,
    transport_hessian,
)
from lsgames.maps import apply_map, make_map
from lsgames.quadratic import ReductionPair, lift_game, reduce_game
from tests.test_quadratic import gaussian_pair, random_reduced


def block_identity_map(k, m):
    return make_map("selection", k, m, seed=0, selected_indices=np.arange(k))


class TestTransportGradient:
    def test_block_identity_picks_leading_components(self):
        g = np.arange(1.0, 9.0)
        out = transport_gradient(block_identity_map(3, 8), g)
        assert_allclose(out, [1.0, 2.0, 3.0], atol=1e-12)

    def test_row_space_recovery(self):
        A = make_map("gaussian", 4, 15, seed=2)
        h = np.random.default_rng(0).standard_normal(4)
        out = transport_gradient(A, A.matrix.T @ h)
        assert_allclose(out, h, atol=1e-10)

    def test_composition_recovers_reduced_gradient(self):
        # J(x) = 0.5 ||A x||^2 has gradient A'Ax; transported it equals Ax.
        A = make_map("gaussian", 3, 10, seed=4)
        x = np.random.default_rng(1).standard_normal(10)
        grad_J = A.matrix.T @ (A.matrix @ x)
        assert_allclose(transport_gradient(A, grad_J), apply_map(A, x), atol=1e-10)


class TestTransportHessian:
    def test_orthonormal_rows_identity(self):
        A = make_map("selection", 4, 9, seed=1)
        assert_allclose(transport_hessian(A, np.eye(9)), np.eye(4), atol=1e-12)

    def test_algebraic_cancellation(self):
        rng = np.random.default_rng(3)
        A = make_map("gaussian", 5, 20, seed=3)
        S = rng.standard_normal((5, 5))
        S = 0.5 * (S + S.T)
        H = A.matrix.T @ S @ A.matrix
        assert_allclose(transport_hessian(A, H), S, atol=1e-10)

    def test_composition_hessian_to_fd_tolerance(self):
        rng = np.random.default_rng(6)
        A = make_map("gaussian", 3, 12, seed=6)
        S = rng.standard_normal((3, 3))
        S = 0.5 * (S + S.T)
        c = rng.standard_normal(3)
        J = lambda x: 0.5 * (A.matrix @ x) @ S @ (A.matrix @ x) + c @ (A.matrix @ x)
        x0 = rng.standard_normal(12)
        H_fd = _fd_hessian(J, x0)
        out = transport_hessian(A, 0.5 * (H_fd + H_fd.T))
        assert np.max(np.abs(out - S)) <= 1e-4 * (1.0 + np.max(np.abs(S)))

    def test_asymmetric_input_rejected(self):
        A = make_map("gaussian", 2, 5, seed=0)
        H = np.zeros((5, 5))
        H[0, 1] = 1.0
        with pytest.raises(ValueError, match="asymmetric"):
            transport_hessian(A, H)


class TestTaylorModel:
    def box(self, dim, half=10.0):
        return (np.full(dim, -half), np.full(dim, half))

    def test_quadratic_cost_is_exact(self):
        rng = np.random.default_rng(5)
        S = rng.standard_normal((4, 4))
        S = S @ S.T / 4.0 + np.eye(4)
        b = rng.standard_normal(4)
        cost = lambda xs: float(0.5 * xs[0] @ S @ xs[0] - b @ xs[0])
        game = SmoothGame(costs=(cost,), boxes=(self.box(4),))
        center = [rng.standard_normal(4)]
        model = taylor_model(game, center, radius=0.5)
        for _ in range(100):
            d = rng.standard_normal(4)
            d *= 0.5 * rng.random() / np.linalg.norm(d)
            x = center[0] + d
            assert abs(model.evaluate(0, x) - cost([x])) <= 1e-8

    def test_cubic_remainder_bound(self):
        cost = lambda xs: float(np.exp(xs[0] @ xs[0]))
        game = SmoothGame(costs=(cost,), boxes=(self.box(3, 2.0),))
        center = [np.zeros(3)]
        radius = 0.1
        model = taylor_model(game, center, radius)
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(200):
            d = rng.standard_normal(3)
            d *= radius * rng.random() / np.linalg.norm(d)
            worst = max(worst, abs(model.evaluate(0, center[0] + d) - cost([center[0] + d])))
        assert worst <= 10.0 * radius**3

    def test_linear_cost_has_zero_curvature(self):
        c = np.array([1.5, -2.0, 0.25])
        cost = lambda xs: float(c @ xs[0])
        game = SmoothGame(costs=(cost,), boxes=(self.box(3),))
        model = taylor_model(game, [np.zeros(3)], radius=1.0)
        assert np.max(np.abs(model.hessians[0])) <= 1e-6
        assert_allclose(model.gradients[0], c, atol=1e-9)

    def test_center_on_boundary_rejected(self):
        cost = lambda xs: float(xs[0] @ xs[0])
        game = SmoothGame(costs=(cost,), boxes=((np.zeros(2), np.ones(2)),))
        with pytest.raises(ValueError, match="boundary"):
            taylor_model(game, [np.zeros(2)], radius=0.1)


class TestLocalEquivalenceGap:
    def test_exact_composition_has_zero_gap(self):
        m1 = make_map("gaussian", 2, 6, seed=0)
        m2 = make_map("gaussian", 2, 6, seed=1)
        reduced_costs = (
            lambda ys: float(ys[0] @ ys[0] + ys[0] @ ys[1]),
            lambda ys: float(ys[1] @ ys[1] - ys[0] @ ys[1]),
        )
        box6 = (np.full(6, -10.0), np.full(6, 10.0))
        box2 = (np.full(2, -100.0), np.full(2, 100.0))
        maps = (m1, m2)
        original = SmoothGame(
            costs=tuple(
                (lambda xs, i=i: reduced_costs[i]([apply_map(m1, xs[0]), apply_map(m2, xs[1])]))
                for i in range(2)
            ),
            boxes=(box6, box6),
        )
        reduced = SmoothGame(costs=reduced_costs, boxes=(box2, box2))
        gap = local_equivalence_gap(
            original, reduced, maps, [np.ones(6), -np.ones(6)],
            radius=0.5, samples=50, seed=0,
        )
        assert gap["delta_max"] <= 1e-10

    def test_lifted_quadratic_pair_gap(self):
        rng = np.random.default_rng(21)
        reduced_game = random_reduced(3, rng)
        pair = gaussian_pair(3, 12, seed=9, same_map=False)
        lifted = lift_game(reduced_game, pair)
        box_m = (np.full(12, -50.0), np.full(12, 50.0))
        box_k = (np.full(3, -500.0), np.full(3, 500.0))
        original = SmoothGame(
            costs=(lambda xs: lifted.cost1(xs[0], xs[1]),
                   lambda xs: lifted.cost2(xs[0], xs[1])),
            boxes=(box_m, box_m),
        )
        reduced = SmoothGame(
            costs=(lambda ys: reduced_game.cost1(ys[0], ys[1]),
                   lambda ys: reduced_game.cost2(ys[0], ys[1])),
            boxes=(box_k, box_k),
        )
        gap = local_equivalence_gap(
            original, reduced, (pair.A1, pair.A2),
            [rng.standard_normal(12), rng.standard_normal(12)],
            radius=1.0, samples=100, seed=13,
        )
        assert gap["delta_max"] <= 1e-10

    def test_cubic_perturbation_scaling(self):
        m = make_map("gaussian", 2, 5, seed=2)
        center = [np.zeros(5)]
        c = 0.3
        box5 = (np.full(5, -10.0), np.full(5, 10.0))
        box2 = (np.full(2, -10.0), np.full(2, 10.0))
        reduced = SmoothGame(costs=(lambda ys: float(ys[0] @ ys[0]),), boxes=(box2,))
        original = SmoothGame(
            costs=(lambda xs: reduced.costs[0]([apply_map(m, xs[0])])
                   + c * float(np.linalg.norm(xs[0]) ** 3),),
            boxes=(box5,),
        )
        for radius in (0.1, 0.05):
            gap = local_equivalence_gap(
                original, reduced, (m,), center, radius, samples=300, seed=4
            )
            assert 0.1 * c * radius**3 <= gap["delta_max"] <= 10.0 * c * radius**3


class TestBestResponseSolver:
    def test_decoupled_game_converges_immediately(self):
        centers = [np.array([0.5, -2.0]), np.array([15.0, 0.0])]
        game = decoupled_quadratic_game(centers, half_width=10.0)
        result = ne_solve_best_response(
            game, [np.zeros(2), np.zeros(2)], tol=1e-8, max_rounds=20
        )
        assert result.converged
        assert result.rounds <= 2
        assert_allclose(result.solution[0], [0.5, -2.0], atol=1e-8)
        assert_allclose(result.solution[1], [10.0, 0.0], atol=1e-8)  # clipped

    def test_coupled_game_matches_dense_oracle(self):
        rng = np.random.default_rng(12)
        b1, b2 = rng.standard_normal(3), rng.standard_normal(3)
        game = coupled_quadratic_game(b1, b2, coupling=0.1)
        result = ne_solve_best_response(
            game, [np.zeros(3), np.zeros(3)], tol=1e-8, max_rounds=100
        )
        x1_star, x2_star = coupled_quadratic_ne(b1, b2, 0.1)
        assert result.converged
        assert_allclose(result.solution[0], x1_star, atol=1e-6)
        assert_allclose(result.solution[1], x2_star, atol=1e-6)

    def test_contraction_violation_reports_divergence(self):
        game = coupled_quadratic_game(
            np.zeros(1), np.zeros(1), coupling=2.0, half_width=1.0, antisymmetric=True
        )
        result = ne_solve_best_response(
            game, [np.ones(1), np.ones(1)], tol=1e-6, max_rounds=30
        )
        assert not result.converged
        assert result.rounds == 30

    def test_residual_decreases_after_first_round(self):
        rng = np.random.default_rng(14)
        game = coupled_quadratic_game(
            rng.standard_normal(4), rng.standard_normal(4), coupling=0.5
        )
        result = ne_solve_best_response(
            game, [np.zeros(4), np.zeros(4)], tol=1e-10, max_rounds=60
        )
        hist = result.residual_history
        assert all(hist[k + 1] <= hist[k] for k in range(1, len(hist) - 1))

    def test_stationarity_at_convergence(self):
        rng = np.random.default_rng(18)
        game = coupled_quadratic_game(
            rng.standard_normal(3), rng.standard_normal(3), coupling=0.5
        )
        tol = 1e-7
        result = ne_solve_best_response(game, [np.zeros(3), np.zeros(3)], tol, 100)
        assert result.converged
        assert projected_gradient_residual(game, list(result.solution)) <= 10.0 * tol

    def test_nonconvex_cost_warns(self):
        game = SmoothGame(
            costs=(lambda xs: -float(xs[0] @ xs[0]),),
            boxes=((np.full(2, -1.0), np.full(2, 1.0)),),
        )
        with pytest.warns(RuntimeWarning, match="nonconvex"):
            ne_solve_best_response(game, [np.zeros(2)], tol=1e-6, max_rounds=3)


class TestConvexityProbe:
    def test_convex_quadratic_passes_both(self):
        A = make_map("gaussian", 3, 8, seed=0)
        out = convexity_probe(lambda x: float(x @ x), A, samples=200, seed=1)
        assert out["original_convex_evidence"]
        assert out["composed_convex_evidence"]

    def test_concave_cost_fails_original(self):
        A = make_map("gaussian", 3, 8, seed=0)
        out = convexity_probe(lambda x: -float(x @ x), A, samples=200, seed=1)
        assert not out["original_convex_evidence"]

    def test_logsumexp_composition_convex(self):
        from scipy.special import logsumexp

        A = make_map("gaussian", 4, 10, seed=3)
        out = convexity_probe(lambda x: float(logsumexp(x)), A, samples=1000, seed=2)
        assert out["original_convex_evidence"]
        assert out["composed_convex_evidence"]


def test_analytic_gradients_agree_with_fd():
    rng = np.random.default_rng(25)
    game = coupled_quadratic_game(rng.standard_normal(3), rng.standard_normal(3), 0.3)
    xs = [rng.standard_normal(3), rng.standard_normal(3)]
    assert gradient_consistency(game, xs) <= 1e-4
    game_ls = logsumexp_game(4, coupling=0.05)
    xs = [rng.standard_normal(4), rng.standard_normal(4)]
    assert gradient_consistency(game_ls, xs) <= 1e-4


def test_fd_gradient_matches_analytic_quadratic():
    rng = np.random.default_rng(30)
    S = rng.standard_normal((4, 4))
    S = 0.5 * (S + S.T)
    f = lambda x: 0.5 * x @ S @ x
    x0 = rng.standard_normal(4)
    assert_allclose(_fd_gradient(f, x0), S @ x0, atol=1e-8)


def test_box_validation():
    with pytest.raises(ValueError, match="compact"):
        SmoothGame(
            costs=(lambda xs: 0.0,),
            boxes=((np.array([0.0]), np.array([np.inf])),),
        )
    with pytest.raises(ValueError, match="lower bound exceeds"):
        SmoothGame(
            costs=(lambda xs: 0.0,),
            boxes=((np.array([1.0]), np.array([0.0])),),
        )
