"""Two-player bilinear quadratic games and their exact reduction/lift algebra.

Player costs are ``J1(x1, x2) = x1' Q1 x2 - x1' r1 + v1`` and symmetrically
``J2(x1, x2) = x2' Q2 x1 - x2' r2 + v2``. The closed-form equilibrium solves
each player's first-order condition, which pins down the *other* player's
action: ``x1* = Q2^{-1} r2`` and ``x2* = Q1^{-1} r1``.

Reduction to dimension K uses a pair of full-row-rank maps (A1, A2); lifting
is exact (``Q1 = A1' Qt1 A2``) while reducing is the least-squares direction,
so reduce(lift(G)) recovers G but lift(reduce(G)) generally loses the part of
r outside the row space of the maps.
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import has_full_row_rank, min_eig_symmetric_part, rowspace_solve, symmetrized
from .errors import SingularMatrixError
from .maps import LinearReductionMap

PD_EIG_RTOL = 1e-10
CONDITION_LIMIT = 1e12


def _numerically_pd(M) -> bool:
    """Scale-invariant PD test on the symmetric part: min eig > 1e-10 * max eig."""
    w = np.linalg.eigvalsh(symmetrized(M))
    return w[-1] > 0.0 and w[0] > PD_EIG_RTOL * w[-1]


def _bilinear_cost(Q, r, v, own, other) -> float:
    return float(own @ Q @ other - own @ r + v)


@dataclass(frozen=True)
class QuadGame2P:
    """Bilinear 2-player game in the original (large) decision dimension."""

    Q1: np.ndarray
    Q2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    v1: float
    v2: float
    dim: int
    pd_ok: bool = field(init=False, compare=False)

    def __post_init__(self):
        M = self.dim
        for name in ("Q1", "Q2"):
            if getattr(self, name).shape != (M, M):
                raise ValueError(f"{name} must have shape ({M}, {M})")
        for name in ("r1", "r2"):
            if getattr(self, name).shape != (M,):
                raise ValueError(f"{name} must have shape ({M},)")
        object.__setattr__(
            self, "pd_ok", _numerically_pd(self.Q1) and _numerically_pd(self.Q2)
        )

    def cost1(self, x1, x2) -> float:
        return _bilinear_cost(self.Q1, self.r1, self.v1, np.asarray(x1), np.asarray(x2))

    def cost2(self, x1, x2) -> float:
        return _bilinear_cost(self.Q2, self.r2, self.v2, np.asarray(x2), np.asarray(x1))


@dataclass(frozen=True)
class ReducedQuadGame2P:
    """Bilinear 2-player game in the reduced dimension (tilde parameters)."""

    Q1: np.ndarray
    Q2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    v1: float
    v2: float
    dim: int
    # ||A1' rt1 - r1||, ||A2' rt2 - r2|| when produced by reduce_game, else None.
    lift_residuals: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        K = self.dim
        for name in ("Q1", "Q2"):
            if getattr(self, name).shape != (K, K):
                raise ValueError(f"{name} must have shape ({K}, {K})")
        for name in ("r1", "r2"):
            if getattr(self, name).shape != (K,):
                raise ValueError(f"{name} must have shape ({K},)")

    def cost1(self, y1, y2) -> float:
        return _bilinear_cost(self.Q1, self.r1, self.v1, np.asarray(y1), np.asarray(y2))

    def cost2(self, y1, y2) -> float:
        return _bilinear_cost(self.Q2, self.r2, self.v2, np.asarray(y2), np.asarray(y1))


@dataclass(frozen=True)
class ReductionPair:
    """Per-player reduction maps; both must have full row rank."""

    A1: LinearReductionMap
    A2: LinearReductionMap
    same_map: bool = field(init=False)

    def __post_init__(self):
        if (self.A1.rows, self.A1.cols) != (self.A2.rows, self.A2.cols):
            raise ValueError("A1 and A2 must have identical shapes")
        for name in ("A1", "A2"):
            if not has_full_row_rank(getattr(self, name).matrix):
                raise ValueError(f"{name} is numerically rank deficient")
        object.__setattr__(
            self, "same_map", bool(np.array_equal(self.A1.matrix, self.A2.matrix))
        )


def closed_form_ne(game: QuadGame2P):
    """Unique interior Nash equilibrium of the bilinear game.

    Returns ``(x1_star, x2_star)`` with ``Q2 x1_star = r2`` and
    ``Q1 x2_star = r1``, each via a direct LU solve. Raises
    SingularMatrixError naming the offending matrix when its condition
    number exceeds 1e12.
    """
    for name, Q in (("Q1", game.Q1), ("Q2", game.Q2)):
        cond = np.linalg.cond(Q)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularMatrixError(
                f"{name} is numerically singular (condition number {cond:.3e})"
            )
    x1_star = np.linalg.solve(game.Q2, game.r2)
    x2_star = np.linalg.solve(game.Q1, game.r1)
    return x1_star, x2_star


def reduce_game(game: QuadGame2P, maps: ReductionPair) -> ReducedQuadGame2P:
    """Project a large game onto the reduced space of a map pair.

    Quadratic blocks follow ``Qt1 = (A1 A1')^{-1} A1 Q1 A2' (A2 A2')^{-1}``
    (and the role-swapped order for Qt2); linear terms are the least-squares
    solutions of ``r = A' rt``, with the attained residuals recorded on the
    result. Constants pass through unchanged.
    """
    A1, A2 = maps.A1.matrix, maps.A2.matrix
    Qt1 = rowspace_solve(A1, rowspace_solve(A2, game.Q1.T).T)
    Qt2 = rowspace_solve(A2, rowspace_solve(A1, game.Q2.T).T)
    rt1 = rowspace_solve(A1, game.r1)
    rt2 = rowspace_solve(A2, game.r2)
    residuals = (
        float(np.linalg.norm(A1.T @ rt1 - game.r1)),
        float(np.linalg.norm(A2.T @ rt2 - game.r2)),
    )
    return ReducedQuadGame2P(
        Q1=Qt1, Q2=Qt2, r1=rt1, r2=rt2, v1=game.v1, v2=game.v2,
        dim=maps.A1.rows, lift_residuals=residuals,
    )


def lift_game(reduced: ReducedQuadGame2P, maps: ReductionPair) -> QuadGame2P:
    """Exact lift of a reduced game: J_i(x1, x2) == Jt_i(A1 x1, A2 x2) for all x."""
    A1, A2 = maps.A1.matrix, maps.A2.matrix
    if reduced.dim != maps.A1.rows:
        raise ValueError("reduced game dimension does not match the maps")
    return QuadGame2P(
        Q1=A1.T @ reduced.Q1 @ A2,
        Q2=A2.T @ reduced.Q2 @ A1,
        r1=A1.T @ reduced.r1,
        r2=A2.T @ reduced.r2,
        v1=reduced.v1,
        v2=reduced.v2,
        dim=maps.A1.cols,
    )


def cholesky_transport(R, A: LinearReductionMap) -> np.ndarray:
    """Transport a Cholesky-style factor: ``Rt = (A A')^{-1} A R``.

    Intended for the shared-map case (A1 = A2 = A), where ``Rt Rt'`` equals
    the reduced quadratic block produced from ``Q = R R'``.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (A.cols, A.cols):
        raise ValueError(f"factor must have shape ({A.cols}, {A.cols})")
    return rowspace_solve(A.matrix, R)


@dataclass(frozen=True)
class PdProbeReport:
    reduced_pd: bool
    min_eig: float


def pd_preservation_probe(Q, maps: ReductionPair) -> PdProbeReport:
    """Check whether the reduction of a PD matrix stays positive definite.

    With ``same_map`` this is a congruence and always PD; with distinct maps
    the symmetric part of the reduced matrix may be indefinite, which this
    probe reports rather than forbids.
    """
    Q = np.asarray(Q, dtype=float)
    if not _numerically_pd(Q):
        raise ValueError("input matrix is not numerically positive definite")
    A1, A2 = maps.A1.matrix, maps.A2.matrix
    Qt = rowspace_solve(A1, rowspace_solve(A2, Q.T).T)
    min_eig = min_eig_symmetric_part(Qt)
    max_eig = float(np.linalg.eigvalsh(symmetrized(Qt))[-1])
    return PdProbeReport(
        reduced_pd=bool(max_eig > 0.0 and min_eig > PD_EIG_RTOL * max_eig),
        min_eig=min_eig,
    )
