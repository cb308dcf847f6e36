"""Linear SVM dual solver and its reduced/adversarial variant.

The dual problem

    max_a  1'a - 0.5 a' Y X X' Y a   s.t.  y'a = 0,  0 <= a <= C

is solved by pairwise coordinate ascent with most-violating-pair selection.
Each accepted update maximizes the objective exactly over the selected pair's
feasible segment, so the dual objective never decreases. The adversarial
variant runs the same solver on the row-selected, distorted, projected data
matrix; sample selection is realized by freezing the multipliers of dropped
rows at zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSolutionError
from .maps import LinearReductionMap, reduce_rows

SV_TOL = 1e-8
KKT_TOL = 1e-6
MAX_PAIR_UPDATES = 10**6
KERNEL_CACHE_LIMIT = 4096

BOX_TOL = 1e-10
EQUALITY_TOL = 1e-8


@dataclass(frozen=True)
class LabeledDataset:
    """n data vectors of dimension d with labels in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D matrix of row vectors")
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per row of X")
        if not np.all(np.abs(y) == 1.0):
            bad = np.unique(y[np.abs(y) != 1.0])
            raise ValueError(f"labels must be exactly -1 or +1; found {bad}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def has_both_classes(self) -> bool:
        return bool(np.any(self.y > 0) and np.any(self.y < 0))


@dataclass(frozen=True)
class SvmDualSolution:
    """Multipliers, hyperplane and diagnostics of one dual solve.

    ``w`` lives in the effective feature space of the solve (length d for the
    plain dual, length r for a reduced solve). ``margin`` is 1/||w||, inf when
    w vanishes. ``objective_trace`` is filled only when the solver is asked to
    track it.
    """

    alpha: np.ndarray
    w: np.ndarray
    bias: float
    objective: float
    margin: float
    support_indices: np.ndarray
    solver_iterations: int
    converged: bool
    C: float
    objective_trace: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if np.any(a < -BOX_TOL) or np.any(a > self.C + BOX_TOL):
            raise ValueError("multipliers violate the box constraint")


def _smo(M, y, C, tol, max_updates, track_objective=False):
    """Minimize 0.5 a'Qa - 1'a with Q = (y y') * (M M'), subject to box and y'a=0.

    Pair selection takes the most violating index from the ascent set and the
    second-order best partner among violators (LIBSVM's working-set rule),
    which keeps iteration counts low; each accepted update maximizes the dual
    over the pair's feasible segment exactly, so the dual objective never
    decreases. Returns (alpha, iterations, converged, trace) where trace is
    the running dual objective after every update.
    """
    n = M.shape[0]
    alpha = np.zeros(n)
    # u = -y * gradient of the minimization objective; u = y at alpha = 0.
    u = y.astype(float).copy()
    use_cache = n <= KERNEL_CACHE_LIMIT
    K = M @ M.T if use_cache else None
    diag = np.einsum("ij,ij->i", M, M)
    pos = y > 0
    # ascent/descent eligibility, maintained incrementally
    up = np.where(pos, alpha < C, alpha > 0)
    low = np.where(pos, alpha > 0, alpha < C)
    snap = 1e-12 * (1.0 + C)
    trace = [0.0] if track_objective else None
    obj = 0.0
    iterations = 0
    converged = False
    neg_inf = -np.inf
    pos_inf = np.inf

    def krow(t):
        return K[t] if use_cache else M @ M[t]

    while iterations < max_updates:
        if not up.any() or not low.any():
            converged = True
            break
        u_up = np.where(up, u, neg_inf)
        i = int(np.argmax(u_up))
        m = u[i]
        u_low = np.where(low, u, pos_inf)
        if m - np.min(u_low) <= tol:  # maximal KKT violation
            converged = True
            break

        Ki = krow(i)
        # second-order partner: maximize (m - u_t)^2 / eta_t over violators
        gap_all = m - u_low
        eta_all = np.maximum(diag[i] + diag - 2.0 * Ki, 1e-12)
        gain = np.where(gap_all > 0.0, gap_all * gap_all / eta_all, neg_inf)
        j = int(np.argmax(gain))
        gap = m - u[j]

        Kj = krow(j)
        eta = max(diag[i] + diag[j] - 2.0 * Ki[j], 0.0)
        t_max = min(
            C - alpha[i] if pos[i] else alpha[i],
            alpha[j] if pos[j] else C - alpha[j],
        )
        t = min(gap / eta, t_max) if eta > 1e-12 else t_max

        alpha[i] += t * y[i]
        alpha[j] -= t * y[j]
        for idx in (i, j):
            if alpha[idx] < snap:
                alpha[idx] = 0.0
            elif alpha[idx] > C - snap:
                alpha[idx] = C
            a_pos = alpha[idx] > 0
            a_free = alpha[idx] < C
            up[idx] = a_free if pos[idx] else a_pos
            low[idx] = a_pos if pos[idx] else a_free
        u -= t * (Ki - Kj)
        iterations += 1
        if track_objective:
            obj += -t * gap + 0.5 * t * t * eta
            trace.append(-obj)

    return alpha, iterations, converged, (np.asarray(trace) if track_objective else None)


def _bias_from_solution(alpha, y, u, C):
    """Average over free support vectors, else midpoint of the KKT interval."""
    free = (alpha > SV_TOL) & (alpha < C - SV_TOL)
    if free.any():
        return float(np.mean(y[free] - u[free]))
    lowers, uppers = [], []
    for t in range(alpha.shape[0]):
        bound = y[t] - u[t]
        at_zero = alpha[t] <= SV_TOL
        if (y[t] > 0) == at_zero:
            lowers.append(bound)
        else:
            uppers.append(bound)
    lo = max(lowers) if lowers else -np.inf
    hi = min(uppers) if uppers else np.inf
    if not np.isfinite(lo) and not np.isfinite(hi):
        return 0.0
    if not np.isfinite(lo):
        return float(hi)
    if not np.isfinite(hi):
        return float(lo)
    return float(0.5 * (lo + hi))


def _solution_from_alpha(M, y, alpha, C):
    ay = alpha * y
    w = M.T @ ay
    w_norm_sq = float(w @ w)
    objective = float(alpha.sum() - 0.5 * w_norm_sq)
    bias = _bias_from_solution(alpha, y, M @ w, C)
    margin = 1.0 / np.sqrt(w_norm_sq) if w_norm_sq > 0.0 else np.inf
    return w, bias, objective, margin


def solve_dual(data: LabeledDataset, C, tol=KKT_TOL, max_pair_updates=MAX_PAIR_UPDATES,
               track_objective=False) -> SvmDualSolution:
    """Train the linear SVM dual on the dataset.

    Terminates when the maximal KKT violation drops to ``tol`` or after
    ``max_pair_updates`` pair updates (in which case the best iterate is
    returned with ``converged=False``). The bias is averaged over free
    support vectors when any exist.
    """
    if C <= 0.0:
        raise ValueError("C must be positive")
    if not data.has_both_classes():
        raise ValueError("training requires at least one point of each class")
    alpha, iterations, converged, trace = _smo(
        data.X, data.y, float(C), tol, max_pair_updates, track_objective
    )
    w, bias, objective, margin = _solution_from_alpha(data.X, data.y, alpha, float(C))
    return SvmDualSolution(
        alpha=alpha,
        w=w,
        bias=bias,
        objective=objective,
        margin=margin,
        support_indices=np.flatnonzero(alpha > SV_TOL),
        solver_iterations=iterations,
        converged=converged,
        C=float(C),
        objective_trace=trace,
    )


@dataclass(frozen=True)
class DistortionMatrix:
    """Attacker's additive data distortion; nonzero rows have norm <= budget."""

    D: np.ndarray
    attacked_rows: np.ndarray
    budget: float

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        attacked = np.asarray(self.attacked_rows, dtype=int)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "attacked_rows", attacked)
        mask = np.zeros(D.shape[0], dtype=bool)
        mask[attacked] = True
        if np.any(D[~mask] != 0.0):
            raise ValueError("rows outside attacked_rows must be exactly zero")
        norms = np.linalg.norm(D, axis=1)
        if np.any(norms > self.budget * (1.0 + 1e-9) + 1e-15):
            raise ValueError("a distortion row exceeds the budget norm")


def zero_distortion(n, d) -> DistortionMatrix:
    return DistortionMatrix(
        D=np.zeros((n, d)), attacked_rows=np.empty(0, dtype=int), budget=0.0
    )


def make_distortion(data: LabeledDataset, w, bias, k, budget) -> DistortionMatrix:
    """Shift the k rows nearest the decision boundary across it.

    Rows are ranked by functional margin y_i (w'x_i + bias); the k smallest
    positive margins are attacked first (filling up with the nonpositive
    margins closest to zero if fewer than k rows sit on the correct side).
    Each attacked row i receives -budget * y_i * w/||w||, so its norm is
    exactly the budget.
    """
    w = np.asarray(w, dtype=float)
    k = int(k)
    if k < 0 or k > data.n:
        raise ValueError("k must lie between 0 and n")
    if budget < 0.0:
        raise ValueError("budget must be nonnegative")
    w_norm = np.linalg.norm(w)
    if w_norm == 0.0:
        raise ValueError("hyperplane normal must be nonzero")

    D = np.zeros((data.n, data.d))
    if k == 0 or budget == 0.0:
        return DistortionMatrix(D=D, attacked_rows=np.empty(0, dtype=int), budget=float(budget))

    margins = data.y * (data.X @ w + bias)
    order = np.argsort(margins, kind="stable")
    positive = [t for t in order if margins[t] > 0.0]
    chosen = positive[:k]
    if len(chosen) < k:
        nonpositive = [t for t in order[::-1] if margins[t] <= 0.0]
        chosen = chosen + nonpositive[: k - len(chosen)]
    chosen = np.asarray(sorted(chosen), dtype=int)
    direction = w / w_norm
    D[chosen] = -budget * data.y[chosen, None] * direction[None, :]
    return DistortionMatrix(D=D, attacked_rows=chosen, budget=float(budget))


def solve_reduced_adversarial(data: LabeledDataset, C, A_R: LinearReductionMap,
                              keep, D: DistortionMatrix, tol=KKT_TOL,
                              max_pair_updates=MAX_PAIR_UPDATES,
                              track_objective=False) -> SvmDualSolution:
    """Dual solve on the selected rows of the distorted, projected data.

    The effective data matrix is ``((X + D) restricted to keep) @ A_R'`` with
    the map's scale applied; multipliers of rows outside ``keep`` are frozen
    at zero, which realizes sample selection as constraints on alpha. The
    returned ``w`` lives in the reduced space.
    """
    keep = np.asarray(keep, dtype=int)
    if keep.size == 0:
        raise ValueError("keep must select at least one row")
    if np.any((keep < 0) | (keep >= data.n)) or len(np.unique(keep)) != keep.size:
        raise ValueError("keep indices must be distinct and in range")
    y_keep = data.y[keep]
    if not (np.any(y_keep > 0) and np.any(y_keep < 0)):
        raise ValueError("keep must retain at least one point of each class")
    if A_R.cols != data.d:
        raise ValueError(f"projection expects ambient dimension {A_R.cols}, data has {data.d}")
    if D.D.shape != (data.n, data.d):
        raise ValueError("distortion shape does not match the data")
    if C <= 0.0:
        raise ValueError("C must be positive")

    effective = reduce_rows(A_R, data.X + D.D)
    alpha_keep, iterations, converged, trace = _smo(
        effective[keep], y_keep, float(C), tol, max_pair_updates, track_objective
    )
    alpha = np.zeros(data.n)
    alpha[keep] = alpha_keep
    ay = alpha_keep * y_keep
    w = effective[keep].T @ ay
    w_norm_sq = float(w @ w)
    u = effective[keep] @ w
    return SvmDualSolution(
        alpha=alpha,
        w=w,
        bias=_bias_from_solution(alpha_keep, y_keep, u, float(C)),
        objective=float(alpha_keep.sum() - 0.5 * w_norm_sq),
        margin=1.0 / np.sqrt(w_norm_sq) if w_norm_sq > 0.0 else np.inf,
        support_indices=np.flatnonzero(alpha > SV_TOL),
        solver_iterations=iterations,
        converged=converged,
        C=float(C),
        objective_trace=trace,
    )


def margin_of(solution: SvmDualSolution) -> float:
    """Geometric margin 1/||w|| of a solved hyperplane."""
    norm = float(np.linalg.norm(solution.w))
    if norm == 0.0:
        raise DegenerateSolutionError("weight vector is zero; margin undefined")
    return 1.0 / norm
