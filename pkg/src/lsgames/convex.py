"""Smooth convex games: derivative transport, local quadratic models, and an
iterative best-response Nash solver.

Derivative transport relates a cost J on the large space to its reduced
counterpart through a full-row-rank map A:

    grad_reduced = (A A')^{-1} A grad,
    hess_reduced = (A A')^{-1} A hess A' (A A')^{-1}.

The Nash solver runs Gauss-Seidel sweeps of per-player projected-gradient
minimizations over box decision sets; it reports non-convergence instead of
raising when the coupling is too strong to contract.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ._linalg import min_norm_lift, rowspace_solve, symmetrized
from .maps import LinearReductionMap

GRAD_STEP = 1e-5
HESS_STEP = 1e-4
ARMIJO_C = 1e-4
HESS_SYM_TOL = 1e-8


@dataclass(frozen=True)
class SmoothGame:
    """N-player game given by black-box costs over box decision sets.

    ``costs[i]`` maps a list of per-player decision vectors to player i's
    cost. ``gradients[i]``, when given, returns player i's own-gradient at the
    joint decision and must agree with central finite differences.
    """

    costs: tuple
    boxes: tuple  # per player: (lower, upper) arrays, finite, lower <= upper
    gradients: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(self.costs))
        boxes = tuple(
            (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
            for lo, hi in self.boxes
        )
        if len(boxes) != len(self.costs):
            raise ValueError("one box per player required")
        for lo, hi in boxes:
            if lo.shape != hi.shape or lo.ndim != 1:
                raise ValueError("box bounds must be matching vectors")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ValueError("decision sets must be compact (finite bounds)")
            if np.any(lo > hi):
                raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "boxes", boxes)
        if self.gradients is not None:
            grads = tuple(self.gradients)
            if len(grads) != len(self.costs):
                raise ValueError("one gradient evaluator per player required")
            object.__setattr__(self, "gradients", grads)

    @property
    def n_players(self) -> int:
        return len(self.costs)

    @property
    def dims(self):
        return tuple(lo.shape[0] for lo, _ in self.boxes)

    def clip(self, i, x):
        lo, hi = self.boxes[i]
        return np.clip(x, lo, hi)

    def own_gradient(self, i, xs, step=GRAD_STEP):
        """Analytic own-gradient when available, else central differences."""
        if self.gradients is not None and self.gradients[i] is not None:
            return np.asarray(self.gradients[i](xs), dtype=float)
        return _fd_gradient(lambda xi: self.costs[i](_replace(xs, i, xi)), xs[i], step)


def _replace(xs, i, xi):
    out = list(xs)
    out[i] = xi
    return out


def _fd_gradient(f, x, h=GRAD_STEP):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def _fd_hessian(f, x, h=HESS_STEP):
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    f0 = f(x)
    E = h * np.eye(n)
    for i in range(n):
        H[i, i] = (f(x + E[i]) - 2.0 * f0 + f(x - E[i])) / h**2
    for i in range(n):
        for j in range(i + 1, n):
            v = (
                f(x + E[i] + E[j])
                - f(x + E[i] - E[j])
                - f(x - E[i] + E[j])
                + f(x - E[i] - E[j])
            ) / (4.0 * h**2)
            H[i, j] = v
            H[j, i] = v
    return H


def _own_hessian(game, i, point, h=HESS_STEP):
    """Own-Hessian of player i's cost; differentiates the analytic gradient
    when one is supplied (much lower noise than differencing the cost)."""
    if game.gradients is not None and game.gradients[i] is not None:
        x = np.asarray(point[i], dtype=float)
        n = x.size
        H = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = GRAD_STEP
            gp = game.gradients[i](_replace(point, i, x + e))
            gm = game.gradients[i](_replace(point, i, x - e))
            H[:, k] = (np.asarray(gp) - np.asarray(gm)) / (2.0 * GRAD_STEP)
        return symmetrized(H)
    f = lambda xi: game.costs[i](_replace(point, i, xi))
    return symmetrized(_fd_hessian(f, point[i], h=h))


def gradient_consistency(game: SmoothGame, xs, step=GRAD_STEP) -> float:
    """Max relative gap between analytic and finite-difference own-gradients at xs."""
    if game.gradients is None:
        return 0.0
    worst = 0.0
    for i in range(game.n_players):
        ana = game.own_gradient(i, xs)
        num = _fd_gradient(lambda xi: game.costs[i](_replace(xs, i, xi)), xs[i], step)
        worst = max(worst, np.max(np.abs(ana - num)) / (1.0 + np.max(np.abs(num))))
    return float(worst)


def transport_gradient(A: LinearReductionMap, g) -> np.ndarray:
    """Reduced-space gradient ``(A A')^{-1} A g`` via a stable solve."""
    g = np.asarray(g, dtype=float)
    if g.shape != (A.cols,):
        raise ValueError(f"gradient must have length {A.cols}")
    return rowspace_solve(A.matrix, g)


def transport_hessian(A: LinearReductionMap, H) -> np.ndarray:
    """Reduced-space Hessian ``(A A')^{-1} A H A' (A A')^{-1}``, symmetrized."""
    H = np.asarray(H, dtype=float)
    if H.shape != (A.cols, A.cols):
        raise ValueError(f"hessian must have shape ({A.cols}, {A.cols})")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.T)) > HESS_SYM_TOL * scale:
        raise ValueError("hessian is asymmetric beyond tolerance")
    M = rowspace_solve(A.matrix, symmetrized(H))
    return symmetrized(rowspace_solve(A.matrix, M.T))


@dataclass(frozen=True)
class LocalQuadraticModel:
    """Second-order model of each player's cost around a joint decision."""

    center: tuple
    values: tuple
    gradients: tuple
    hessians: tuple
    radius: float

    def evaluate(self, i, x_i) -> float:
        """Model of player i's cost at x_i, others held at the center."""
        d = np.asarray(x_i, dtype=float) - self.center[i]
        return float(self.values[i] + self.gradients[i] @ d + 0.5 * d @ self.hessians[i] @ d)


def taylor_model(game: SmoothGame, center, radius, grad_step=GRAD_STEP,
                 hess_step=HESS_STEP) -> LocalQuadraticModel:
    """Second-order expansion of every player's cost in its own variable.

    The center must sit strictly inside every box by at least the
    finite-difference step so the stencil stays feasible. Gradients use the
    analytic evaluators when present; Hessians are central differences of the
    cost and are symmetrized.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    center = tuple(np.asarray(c, dtype=float) for c in center)
    margin = max(grad_step, hess_step)
    for i, (lo, hi) in enumerate(game.boxes):
        if np.any(center[i] - lo < margin) or np.any(hi - center[i] < margin):
            raise ValueError(
                f"center of player {i} is within a finite-difference step of its box boundary"
            )
    values, grads, hessians = [], [], []
    for i in range(game.n_players):
        f = lambda xi, i=i: game.costs[i](_replace(center, i, xi))
        values.append(float(f(center[i])))
        grads.append(game.own_gradient(i, center, step=grad_step))
        hessians.append(_own_hessian(game, i, center, h=hess_step))
    return LocalQuadraticModel(
        center=center,
        values=tuple(values),
        gradients=tuple(grads),
        hessians=tuple(hessians),
        radius=float(radius),
    )


def _ball_samples(rng, total_dim, radius, samples):
    g = rng.standard_normal((samples, total_dim))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    radii = radius * rng.random(samples) ** (1.0 / total_dim)
    return g * radii[:, None]


def local_equivalence_gap(original: SmoothGame, reduced: SmoothGame, maps,
                          center, radius, samples, seed):
    """Sampled per-player gap |J_i(x) - Jt_i(A1 x1, ..., AN xN)| near a point.

    Returns ``{"delta_max": ..., "delta_mean": ...}`` over all players and
    samples drawn uniformly from the joint ball of the given radius.
    """
    center = tuple(np.asarray(c, dtype=float) for c in center)
    dims = original.dims
    if len(maps) != original.n_players:
        raise ValueError("one map per player required")
    rng = np.random.default_rng(int(seed))
    deltas = _ball_samples(rng, sum(dims), radius, int(samples))
    offsets = np.cumsum((0,) + dims)
    gaps = []
    for row in deltas:
        xs = [center[i] + row[offsets[i]:offsets[i + 1]] for i in range(len(dims))]
        ys = [maps[i].scale * (maps[i].entries @ xs[i]) for i in range(len(dims))]
        for i in range(original.n_players):
            gaps.append(abs(original.costs[i](xs) - reduced.costs[i](ys)))
    gaps = np.asarray(gaps)
    return {"delta_max": float(gaps.max()), "delta_mean": float(gaps.mean())}


@dataclass(frozen=True)
class BestResponseResult:
    solution: tuple
    rounds: int
    residual: float
    converged: bool
    residual_history: tuple = field(default=(), compare=False, repr=False)


def _projected_gradient_min(f, grad, clip, x0, tol, max_iters=500):
    """Minimize f over a box from x0; stops at projected-gradient residual <= tol."""
    x = np.asarray(x0, dtype=float)
    fx = f(x)
    for _ in range(max_iters):
        g = grad(x)
        if np.max(np.abs(x - clip(x - g))) <= tol:
            break
        t = 1.0
        while t > 1e-14:
            x_new = clip(x - t * g)
            step = x - x_new
            decrease = ARMIJO_C * (g @ step)
            f_new = f(x_new)
            if f_new <= fx - decrease:
                x, fx = x_new, f_new
                break
            t *= 0.5
        else:
            break  # no acceptable step; numerically stationary
    return x


def ne_solve_best_response(game: SmoothGame, init, tol, max_rounds,
                           convexity_check_seed=0) -> BestResponseResult:
    """Gauss-Seidel best-response iteration for a pure Nash equilibrium.

    Each sweep lets every player in turn minimize its own cost by projected
    gradient descent (inner stationarity tolerance tol/10, Armijo
    backtracking from unit step). Converged means two successive joint
    iterates moved less than tol in max-norm; hitting max_rounds returns the
    best iterate with ``converged=False`` rather than raising.

    Own-variable convexity is probed on sampled own-Hessians before solving;
    a negative eigenvalue below -1e-8 triggers a warning, not an error.
    """
    xs = [game.clip(i, np.asarray(v, dtype=float)) for i, v in enumerate(init)]
    _warn_if_nonconvex(game, xs, convexity_check_seed)
    inner_tol = tol / 10.0
    history = []
    for round_idx in range(1, int(max_rounds) + 1):
        move = 0.0
        for i in range(game.n_players):
            f = lambda xi, i=i: game.costs[i](_replace(xs, i, xi))
            grad = lambda xi, i=i: game.own_gradient(i, _replace(xs, i, xi))
            x_new = _projected_gradient_min(
                f, grad, lambda z, i=i: game.clip(i, z), xs[i], inner_tol
            )
            move = max(move, float(np.max(np.abs(x_new - xs[i]), initial=0.0)))
            xs[i] = x_new
        history.append(move)
        if move < tol:
            return BestResponseResult(tuple(xs), round_idx, move, True, tuple(history))
    return BestResponseResult(
        tuple(xs), int(max_rounds), history[-1], False, tuple(history)
    )


def _warn_if_nonconvex(game, xs, seed, min_eig_tol=-1e-8):
    rng = np.random.default_rng(int(seed))
    probes = [xs]
    for _ in range(2):
        probes.append(
            [lo + (hi - lo) * rng.random(lo.shape) for lo, hi in game.boxes]
        )
    for point in probes:
        for i in range(game.n_players):
            H = _own_hessian(game, i, point)
            w_min = float(np.linalg.eigvalsh(H)[0])
            if w_min < min_eig_tol:
                warnings.warn(
                    f"cost of player {i} looks nonconvex in its own variable "
                    f"(sampled own-Hessian min eigenvalue {w_min:.3e})",
                    RuntimeWarning,
                    stacklevel=3,
                )
                return


def projected_gradient_residual(game: SmoothGame, xs) -> float:
    """Max-norm projected stationarity residual over players at a joint decision."""
    worst = 0.0
    for i in range(game.n_players):
        g = game.own_gradient(i, xs)
        worst = max(worst, float(np.max(np.abs(xs[i] - game.clip(i, xs[i] - g)))))
    return worst


def convexity_probe(cost, A: LinearReductionMap, samples, seed, tol=1e-9):
    """Midpoint-convexity evidence for a cost and for its reduced composition.

    The reduced composition evaluates the cost on the minimum-norm lift of
    the reduced variable. Flags are True iff no sampled midpoint violates
    convexity beyond the tolerance.
    """
    rng = np.random.default_rng(int(seed))
    lift_basis = None  # computed lazily from the map

    def midpoint_ok(f, dim):
        for _ in range(int(samples)):
            a = rng.standard_normal(dim)
            b = rng.standard_normal(dim)
            if f(0.5 * (a + b)) > 0.5 * (f(a) + f(b)) + tol:
                return False
        return True

    original_ok = midpoint_ok(lambda x: float(cost(x)), A.cols)
    composed_ok = midpoint_ok(
        lambda y: float(cost(min_norm_lift(A.matrix, y))), A.rows
    )
    return {
        "original_convex_evidence": bool(original_ok),
        "composed_convex_evidence": bool(composed_ok),
    }


# ---------------------------------------------------------------------------
# Built-in game families (used by the CLI demo and the test suite).

def decoupled_quadratic_game(centers, half_width=10.0) -> SmoothGame:
    """J_i = ||x_i - c_i||^2 on symmetric boxes; NE is clip(c_i, box)."""
    centers = [np.asarray(c, dtype=float) for c in centers]
    costs = [
        (lambda xs, i=i: float(np.sum((xs[i] - centers[i]) ** 2)))
        for i in range(len(centers))
    ]
    grads = [
        (lambda xs, i=i: 2.0 * (xs[i] - centers[i])) for i in range(len(centers))
    ]
    boxes = [
        (np.full(c.shape, -half_width), np.full(c.shape, half_width)) for c in centers
    ]
    return SmoothGame(costs=tuple(costs), boxes=tuple(boxes), gradients=tuple(grads))


def coupled_quadratic_game(b1, b2, coupling, half_width=10.0,
                           antisymmetric=False) -> SmoothGame:
    """Two players with J_i = 0.5||x_i||^2 + w x1'x2 - b_i'x_i.

    With ``antisymmetric`` the coupling enters player 2's cost with opposite
    sign, which breaks contraction for |w| > 1 and gives the solver a
    divergence case.
    """
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    w = float(coupling)
    s = -1.0 if antisymmetric else 1.0
    costs = (
        lambda xs: float(0.5 * xs[0] @ xs[0] + w * xs[0] @ xs[1] - b1 @ xs[0]),
        lambda xs: float(0.5 * xs[1] @ xs[1] + s * w * xs[0] @ xs[1] - b2 @ xs[1]),
    )
    grads = (
        lambda xs: xs[0] + w * xs[1] - b1,
        lambda xs: xs[1] + s * w * xs[0] - b2,
    )
    boxes = (
        (np.full(b1.shape, -half_width), np.full(b1.shape, half_width)),
        (np.full(b2.shape, -half_width), np.full(b2.shape, half_width)),
    )
    return SmoothGame(costs=costs, boxes=boxes, gradients=grads)


def coupled_quadratic_ne(b1, b2, coupling):
    """Dense-oracle interior NE of the symmetric coupled quadratic game."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    n = b1.size
    I = np.eye(n)
    w = float(coupling)
    K = np.block([[I, w * I], [w * I, I]])
    sol = np.linalg.solve(K, np.concatenate([b1, b2]))
    return sol[:n], sol[n:]


def logsumexp_game(dim, coupling=0.1, half_width=5.0) -> SmoothGame:
    """Two players with convex costs logsumexp(x_i) + w x1'x2."""
    w = float(coupling)
    costs = (
        lambda xs: float(logsumexp(xs[0]) + w * xs[0] @ xs[1]),
        lambda xs: float(logsumexp(xs[1]) + w * xs[0] @ xs[1]),
    )

    def softmax(v):
        e = np.exp(v - np.max(v))
        return e / e.sum()

    grads = (
        lambda xs: softmax(xs[0]) + w * xs[1],
        lambda xs: softmax(xs[1]) + w * xs[0],
    )
    box = (np.full(dim, -half_width), np.full(dim, half_width))
    return SmoothGame(costs=costs, boxes=(box, box), gradients=grads)


GAME_FAMILIES = {
    "decoupled": "decoupled quadratic, separable NE",
    "coupled": "coupled quadratic with adjustable contraction factor",
    "logsumexp": "smooth convex coupling of logsumexp costs",
}
