"""Defender/attacker game over SVM reductions: margin-distortion quantities,
the margin lower-bound chain, and a finite grid game solved by enumeration.

The margin bound compares the clean full-data margin g* with the margin gt of
the selected/projected/distorted problem:

    gt^2 >= beta * (1 - phi - 2 delta) * g*^2,

where beta is the relaxation ratio of dropping the sample-selection
constraints, phi measures how well the projection preserves the data
subspace, and delta the relative strength of the injected distortion. The
grid game averages defender/attacker costs over seeded scenario replicates
and looks for pure equilibria by exhaustive deviation checks.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScenarioError
from .maps import LinearReductionMap, identity_map, make_map
from .svm import (
    DistortionMatrix,
    LabeledDataset,
    make_distortion,
    solve_dual,
    solve_reduced_adversarial,
)

log = logging.getLogger(__name__)

BOUND_TOL = 1e-9
DELTA_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class CostWeights:
    """Nonnegative weights of the norm terms in the player costs."""

    c_D_R: float = 0.0
    c_D_S: float = 0.0
    c_A: float = 0.0

    def __post_init__(self):
        if min(self.c_D_R, self.c_D_S, self.c_A) < 0.0:
            raise ValueError("cost weights must be nonnegative")


@dataclass(frozen=True)
class AdvScenario:
    """One concrete joint action: projection + kept rows for the defender,
    distortion for the attacker."""

    projection: LinearReductionMap
    keep: np.ndarray
    distortion: DistortionMatrix
    C: float
    cost_weights: CostWeights = CostWeights()

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=int)
        if keep.size == 0:
            raise ValueError("keep must be nonempty")
        object.__setattr__(self, "keep", keep)


@dataclass(frozen=True)
class MarginDistortionReport:
    beta: float
    phi: float
    delta: float
    gamma_star: float
    gamma_tilde: float
    bound_rhs: float
    bound_holds: bool
    gap_bound: float
    # delta evaluated at the selection-constrained optimum (diagnostic only).
    delta_at_pds: float = field(default=np.nan, compare=False)


def _projected_functional_sq(alpha, y, M, A_R):
    """||alpha' Y M A_R||^2 with the map applied in its scaled d x r role."""
    v = (alpha * y) @ M
    return float(np.sum(((v @ A_R.entries.T) * A_R.scale) ** 2))


def compute_delta(alpha, data: LabeledDataset, D: DistortionMatrix,
                  A_R: LinearReductionMap, warn_large=True) -> float:
    """Distortion strength ||a'YDA_R||^2 / ||a'YXA_R||^2 at the given multipliers.

    Values >= 1 invalidate the bound chain and are returned with a warning.
    """
    alpha = np.asarray(alpha, dtype=float)
    num = _projected_functional_sq(alpha, data.y, D.D, A_R)
    den = _projected_functional_sq(alpha, data.y, data.X, A_R)
    if den <= DELTA_DENOM_TOL:
        raise DegenerateScenarioError(
            "projected clean functional vanishes; delta undefined"
        )
    delta = num / den
    if warn_large and delta >= 1.0:
        warnings.warn(
            f"delta = {delta:.4g} >= 1: margin bound chain is invalid for this scenario",
            RuntimeWarning,
            stacklevel=2,
        )
    return delta


def compute_beta(data: LabeledDataset, C, A_R: LinearReductionMap, keep,
                 D: DistortionMatrix) -> float:
    """Relaxation ratio Z_pd / Z_pds >= 1 of dropping the selection constraints."""
    all_rows = np.arange(data.n)
    z_pd = solve_reduced_adversarial(data, C, A_R, all_rows, D).objective
    z_pds = solve_reduced_adversarial(data, C, A_R, keep, D).objective
    if z_pds <= 0.0:
        raise DegenerateScenarioError(
            f"selection-constrained dual value {z_pds:.4g} is not positive"
        )
    return z_pd / z_pds


def compute_phi(data: LabeledDataset, A_R: LinearReductionMap, rho) -> float:
    """Spectral norm of E = V'V - V' A_R A_R' V on the top-rho data subspace.

    V holds the top right singular vectors of X; the scaled projection is
    used in its d x r orientation.
    """
    rho = int(rho)
    if not 1 <= rho <= min(data.n, data.d):
        raise ValueError(f"rho must lie in [1, {min(data.n, data.d)}]")
    _, _, Vt = np.linalg.svd(data.X, full_matrices=False)
    V = Vt[:rho].T
    BV = (A_R.matrix) @ V  # (r x d) @ (d x rho); A_R' V in the d x r role
    E = V.T @ V - BV.T @ BV
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (E + E.T)))))


def default_rho(data: LabeledDataset) -> int:
    """Numerical rank of X (singular values above 1e-10 of the largest)."""
    s = np.linalg.svd(data.X, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 1
    return max(1, int(np.count_nonzero(s > 1e-10 * s[0])))


def margin_report(scenario: AdvScenario, data: LabeledDataset, rho=None) -> MarginDistortionReport:
    """Evaluate the full bound chain for one scenario.

    delta is evaluated at the optimum of the relaxed problem (no selection
    constraints), matching its place in the bound derivation; the value at
    the selection-constrained optimum is attached as a diagnostic.
    """
    if rho is None:
        rho = default_rho(data)
    base = solve_dual(data, scenario.C)
    all_rows = np.arange(data.n)
    pd_sol = solve_reduced_adversarial(
        data, scenario.C, scenario.projection, all_rows, scenario.distortion
    )
    pds_sol = solve_reduced_adversarial(
        data, scenario.C, scenario.projection, scenario.keep, scenario.distortion
    )
    if pds_sol.objective <= 0.0:
        raise DegenerateScenarioError(
            f"selection-constrained dual value {pds_sol.objective:.4g} is not positive"
        )
    beta = pd_sol.objective / pds_sol.objective
    phi = compute_phi(data, scenario.projection, rho)
    delta = compute_delta(pd_sol.alpha, data, scenario.distortion, scenario.projection)
    try:
        delta_at_pds = compute_delta(
            pds_sol.alpha, data, scenario.distortion, scenario.projection, warn_large=False
        )
    except DegenerateScenarioError:
        delta_at_pds = np.nan

    gamma_star = base.margin
    gamma_tilde = pds_sol.margin
    if gamma_tilde > gamma_star:
        log.info(
            "reduction increased the margin (%.4g > %.4g); the modeling "
            "assumption that reductions never help the defender is violated",
            gamma_tilde, gamma_star,
        )
    bound_rhs = beta * (1.0 - phi - 2.0 * delta) * gamma_star**2
    return MarginDistortionReport(
        beta=beta,
        phi=phi,
        delta=delta,
        gamma_star=gamma_star,
        gamma_tilde=gamma_tilde,
        bound_rhs=bound_rhs,
        bound_holds=bool(gamma_tilde**2 >= bound_rhs - BOUND_TOL),
        gap_bound=1.0 - beta * (1.0 - phi - 2.0 * delta),
        delta_at_pds=delta_at_pds,
    )


def sandwich_check(alpha, data: LabeledDataset, D: DistortionMatrix,
                   A_R: LinearReductionMap):
    """Exact triangle-inequality sandwich around the distorted functional.

    ratio = ||a'Y(X+D)A_R||^2 / ||a'YXA_R||^2 always lies in
    [(1-sqrt(delta))^2, (1+sqrt(delta))^2]; the looser [1-delta, 1+delta]
    form is only reported, not required.
    """
    alpha = np.asarray(alpha, dtype=float)
    den = _projected_functional_sq(alpha, data.y, data.X, A_R)
    if den <= DELTA_DENOM_TOL:
        raise DegenerateScenarioError(
            "projected clean functional vanishes; ratio undefined"
        )
    ratio = _projected_functional_sq(alpha, data.y, data.X + D.D, A_R) / den
    delta = compute_delta(alpha, data, D, A_R, warn_large=False)
    root = np.sqrt(delta)
    lower = (1.0 - root) ** 2
    upper = (1.0 + root) ** 2
    slack = 1e-10 * max(1.0, upper)
    if not (lower - slack <= ratio <= upper + slack):
        raise RuntimeError(
            f"triangle-inequality sandwich violated: {lower} <= {ratio} <= {upper}"
        )
    return {
        "ratio": ratio,
        "lower": lower,
        "upper": upper,
        "paper_form_holds": bool(1.0 - delta <= ratio <= 1.0 + delta),
    }


def defender_cost(report: MarginDistortionReport, scenario: AdvScenario) -> float:
    """-beta(1-phi-2delta) plus weighted reduction-size terms.

    The projection norm uses the unscaled entries so the term grows with the
    projection dimension; the selection norm is sqrt(#kept rows).
    """
    w = scenario.cost_weights
    core = report.beta * (1.0 - report.phi - 2.0 * report.delta)
    return (
        -core
        + w.c_D_R * float(np.linalg.norm(scenario.projection.entries))
        + w.c_D_S * float(np.sqrt(scenario.keep.size))
    )


def attacker_cost(report: MarginDistortionReport, scenario: AdvScenario) -> float:
    """+beta(1-phi-2delta) plus the weighted distortion norm."""
    w = scenario.cost_weights
    core = report.beta * (1.0 - report.phi - 2.0 * report.delta)
    return core + w.c_A * float(np.linalg.norm(scenario.distortion.D))


# ---------------------------------------------------------------------------
# Grid game over finite strategy cells.

@dataclass(frozen=True)
class GridGame:
    """Averaged payoff matrices over defender cells (r, s) x attacker cells
    (budget, k)."""

    defender_cells: tuple
    attacker_cells: tuple
    payoff_D: np.ndarray
    payoff_A: np.ndarray
    replicates: int
    seed: int
    invalid_defender_cells: tuple = ()
    # Per-(cell pair) aggregates of the margin reports, for CSV emission.
    margin_rows: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class EquilibriumReport:
    pure_ne: tuple
    security_strategies: tuple
    is_ne_empty: bool


def cell_seeds(seed, def_index, att_index, replicate):
    """Deterministic (map_seed, keep_seed) pair for one scenario draw."""
    ss = np.random.SeedSequence((int(seed), int(def_index), int(att_index), int(replicate)))
    words = ss.generate_state(2, dtype=np.uint64)
    return int(words[0]), int(words[1])


def draw_keep(keep_seed, y, s, max_attempts=100):
    """Uniform s-subset of rows containing both classes, or None after 100 tries."""
    rng = np.random.default_rng(int(keep_seed))
    for _ in range(max_attempts):
        keep = np.sort(rng.permutation(y.shape[0])[: int(s)])
        kept = y[keep]
        if np.any(kept > 0) and np.any(kept < 0):
            return keep
    return None


def draw_projection(map_seed, r, d) -> LinearReductionMap:
    """Gaussian projection of dimension r, or the no-op identity when r == d."""
    if r == d:
        return identity_map(d)
    return make_map("gaussian", r, d, map_seed)


def build_grid_game(data: LabeledDataset, C, defender_cells, attacker_cells,
                    cost_weights: CostWeights, replicates, seed, rho=None) -> GridGame:
    """Average defender/attacker costs over seeded replicates per cell pair.

    Per replicate the defender draws a gaussian projection of dimension r
    (r = d means no projection) and a uniform keep-set of size s; the
    attacker distorts the k lowest-margin rows of the *undistorted full-data*
    hyperplane by the budget. Replicate
    seeds derive deterministically from (seed, cell indices, replicate), so
    the game is reproducible bit for bit. Defender cells whose keep-set
    cannot contain both classes after 100 draws are excluded.
    """
    defender_cells = tuple((int(r), int(s)) for r, s in defender_cells)
    attacker_cells = tuple((float(b), int(k)) for b, k in attacker_cells)
    if not defender_cells or not attacker_cells:
        raise ValueError("both players need at least one strategy cell")
    replicates = int(replicates)
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if rho is None:
        rho = default_rho(data)

    full = solve_dual(data, C)
    n_def, n_att = len(defender_cells), len(attacker_cells)
    payoff_D = np.zeros((n_def, n_att))
    payoff_A = np.zeros((n_def, n_att))
    stats = [[None] * n_att for _ in range(n_def)]
    invalid = []

    for i, (r, s) in enumerate(defender_cells):
        cell_failed = False
        for j, (budget, k) in enumerate(attacker_cells):
            acc = {key: 0.0 for key in
                   ("beta", "phi", "delta", "gamma_star", "gamma_tilde", "bound_holds")}
            jd_sum = 0.0
            ja_sum = 0.0
            for rep in range(replicates):
                map_seed, keep_seed = cell_seeds(seed, i, j, rep)
                keep = draw_keep(keep_seed, data.y, s)
                if keep is None:
                    cell_failed = True
                    break
                projection = draw_projection(map_seed, r, data.d)
                distortion = make_distortion(data, full.w, full.bias, k, budget)
                scenario = AdvScenario(
                    projection=projection, keep=keep, distortion=distortion,
                    C=C, cost_weights=cost_weights,
                )
                report = margin_report(scenario, data, rho)
                jd_sum += defender_cost(report, scenario)
                ja_sum += attacker_cost(report, scenario)
                for key in ("beta", "phi", "delta", "gamma_star", "gamma_tilde"):
                    acc[key] += getattr(report, key)
                acc["bound_holds"] += float(report.bound_holds)
            if cell_failed:
                break
            payoff_D[i, j] = jd_sum / replicates
            payoff_A[i, j] = ja_sum / replicates
            stats[i][j] = {key: val / replicates for key, val in acc.items()}
        if cell_failed:
            invalid.append(i)

    valid = [i for i in range(n_def) if i not in invalid]
    if not valid:
        raise DegenerateScenarioError("every defender cell failed to retain both classes")
    margin_rows = tuple(
        {"def_index": i, "att_index": j, **stats[i][j]}
        for i in valid for j in range(n_att)
    )
    return GridGame(
        defender_cells=tuple(defender_cells[i] for i in valid),
        attacker_cells=attacker_cells,
        payoff_D=payoff_D[valid],
        payoff_A=payoff_A[valid],
        replicates=replicates,
        seed=int(seed),
        invalid_defender_cells=tuple(defender_cells[i] for i in invalid),
        margin_rows=margin_rows,
    )


def solve_grid_game(game: GridGame, tol=BOUND_TOL) -> EquilibriumReport:
    """Enumerate pure equilibria; fall back to minimax security strategies.

    A cell pair (i, j) is a pure NE iff the defender cannot lower payoff_D by
    switching rows and the attacker cannot lower payoff_A by switching
    columns. Security strategies minimize each player's worst-case cost and
    are always reported.
    """
    pd, pa = game.payoff_D, game.payoff_A
    col_min = pd.min(axis=0)
    row_min = pa.min(axis=1)
    ne = [
        (i, j)
        for i in range(pd.shape[0])
        for j in range(pd.shape[1])
        if pd[i, j] <= col_min[j] + tol and pa[i, j] <= row_min[i] + tol
    ]
    security = (int(np.argmin(pd.max(axis=1))), int(np.argmin(pa.max(axis=0))))
    return EquilibriumReport(
        pure_ne=tuple(ne),
        security_strategies=security,
        is_ne_empty=not ne,
    )
