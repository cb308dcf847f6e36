"""Reduction of large-scale continuous strategic games via linear maps.

Subpackages cover seeded reduction maps with distance-preservation checks,
exact reduce/lift algebra for bilinear 2-player games, derivative transport
and best-response solving for smooth convex games, a dual SVM solver with an
adversarial reduced variant, and a defender/attacker grid game built on the
margin-distortion bound.
"""

from .adversarial import (
    AdvScenario,
    CostWeights,
    EquilibriumReport,
    GridGame,
    MarginDistortionReport,
    attacker_cost,
    build_grid_game,
    compute_beta,
    compute_delta,
    compute_phi,
    defender_cost,
    margin_report,
    sandwich_check,
    solve_grid_game,
)
from .convex import (
    BestResponseResult,
    LocalQuadraticModel,
    SmoothGame,
    convexity_probe,
    local_equivalence_gap,
    ne_solve_best_response,
    taylor_model,
    transport_gradient,
    transport_hessian,
)
from .errors import DegenerateScenarioError, DegenerateSolutionError, SingularMatrixError
from .maps import (
    JlReport,
    LinearReductionMap,
    apply_map,
    identity_map,
    jl_bound,
    jl_check,
    make_map,
    reduce_rows,
)
from .quadratic import (
    QuadGame2P,
    ReducedQuadGame2P,
    ReductionPair,
    cholesky_transport,
    closed_form_ne,
    lift_game,
    pd_preservation_probe,
    reduce_game,
)
from .svm import (
    DistortionMatrix,
    LabeledDataset,
    SvmDualSolution,
    make_distortion,
    margin_of,
    solve_dual,
    solve_reduced_adversarial,
    zero_distortion,
)

__version__ = "0.1.0"
