"""Linear reduction maps: random projections, random signs, coordinate selection.

All maps are stored in K x M left-multiplication form (``y = scale * entries @ x``)
regardless of how a consumer orients them; modules that reduce data matrices
row-wise right-multiply by the transpose instead.

Randomness is drawn from numpy's PCG64 generator seeded with the map's 64-bit
seed; dense entries are filled in row-major order, and selection columns are
the first ``rows`` entries of a seeded permutation of ``range(cols)``. The same
(kind, dims, seed) therefore reproduces the same matrix bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

MAP_KINDS = ("gaussian", "sign", "selection")


@dataclass(frozen=True)
class LinearReductionMap:
    """A K x M linear map with its kind, dense entries, scale factor and seed."""

    kind: str
    rows: int
    cols: int
    entries: np.ndarray
    scale: float
    seed: int

    @property
    def matrix(self) -> np.ndarray:
        """Effective map, ``scale * entries``."""
        return self.scale * self.entries

    def selected_indices(self):
        """Column picked by each row (selection kind only)."""
        if self.kind != "selection":
            raise ValueError("selected_indices is only defined for selection maps")
        return np.argmax(self.entries, axis=1)


@dataclass(frozen=True)
class JlReport:
    """Outcome of an empirical pairwise distance-preservation check."""

    gamma: float
    pairs_tested: int
    pairs_preserved: int
    empirical_fraction: float
    theoretical_bound: float
    per_pair_distortion: np.ndarray = field(repr=False)


def jl_bound(gamma: float, rows: int) -> float:
    """Lower bound 1 - 2*exp(-(gamma^2 - gamma^3) * rows / 4) on the preservation probability."""
    return 1.0 - 2.0 * np.exp(-(gamma**2 - gamma**3) * rows / 4.0)


def make_map(kind, reduced_dim, ambient_dim, seed, selected_indices=None):
    """Construct a reduction map of the given kind.

    Parameters
    ----------
    kind : str
        One of ``gaussian``, ``sign``, ``selection``.
    reduced_dim, ambient_dim : int
        Output and input dimensions; ``1 <= reduced_dim <= ambient_dim``.
    seed : int
        64-bit seed; entries are reproducible bit for bit.
    selected_indices : sequence of int, optional
        For selection maps, the column each row picks. Sampled from the seed
        (without replacement) when omitted; ignored for dense kinds.

    Returns
    -------
    LinearReductionMap
        Scale is ``1/sqrt(reduced_dim)`` for gaussian/sign maps and 1 for
        selection maps.
    """
    if kind not in MAP_KINDS:
        raise ValueError(f"unknown map kind {kind!r}; expected one of {MAP_KINDS}")
    reduced_dim = int(reduced_dim)
    ambient_dim = int(ambient_dim)
    if reduced_dim < 1:
        raise ValueError("reduced_dim must be at least 1")
    if reduced_dim > ambient_dim:
        raise ValueError(
            f"reduced_dim {reduced_dim} exceeds ambient_dim {ambient_dim}"
        )
    seed = int(seed)
    rng = np.random.default_rng(seed)

    if kind == "gaussian":
        entries = rng.standard_normal((reduced_dim, ambient_dim))
        scale = 1.0 / np.sqrt(reduced_dim)
    elif kind == "sign":
        entries = (rng.integers(0, 2, size=(reduced_dim, ambient_dim)) * 2 - 1).astype(float)
        scale = 1.0 / np.sqrt(reduced_dim)
    else:
        if selected_indices is None:
            idx = rng.permutation(ambient_dim)[:reduced_dim]
        else:
            idx = np.asarray(selected_indices, dtype=int)
            if idx.shape != (reduced_dim,):
                raise ValueError(
                    f"expected {reduced_dim} selection indices, got {idx.shape}"
                )
            if np.any((idx < 0) | (idx >= ambient_dim)):
                raise ValueError("selection indices out of range")
            if len(np.unique(idx)) != len(idx):
                raise ValueError("selection indices must be distinct")
        entries = np.zeros((reduced_dim, ambient_dim))
        entries[np.arange(reduced_dim), idx] = 1.0
        scale = 1.0

    entries.setflags(write=False)
    return LinearReductionMap(
        kind=kind,
        rows=reduced_dim,
        cols=ambient_dim,
        entries=entries,
        scale=scale,
        seed=seed,
    )


def identity_map(dim: int) -> LinearReductionMap:
    """Selection map keeping every coordinate, in order (diagnostic no-op reduction)."""
    return make_map("selection", dim, dim, seed=0, selected_indices=np.arange(dim))


def apply_map(m: LinearReductionMap, x) -> np.ndarray:
    """Apply the map to a single vector: ``scale * entries @ x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.cols,):
        raise ValueError(f"expected a vector of length {m.cols}, got shape {x.shape}")
    return m.scale * (m.entries @ x)


def reduce_rows(m: LinearReductionMap, X) -> np.ndarray:
    """Apply the map to every row of an (n, cols) matrix, returning (n, rows)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.cols:
        raise ValueError(f"expected an (n, {m.cols}) matrix, got shape {X.shape}")
    return (X @ m.entries.T) * m.scale


def jl_check(points, m: LinearReductionMap, gamma: float) -> JlReport:
    """Count point pairs whose squared distance the map preserves within 1 +/- gamma.

    Pairs at zero original distance count as preserved (their ratio is taken
    as 1, which a linear map attains exactly). The theoretical bound field is
    the probability lower bound evaluated at the map's row count.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValueError("need at least two points")
    if P.shape[1] != m.cols:
        raise ValueError(f"points must have length {m.cols}, got {P.shape[1]}")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly between 0 and 1")

    orig = pdist(P, "sqeuclidean")
    red = pdist(reduce_rows(m, P), "sqeuclidean")
    ratio = np.ones_like(orig)
    nz = orig > 0.0
    ratio[nz] = red[nz] / orig[nz]
    preserved = (ratio >= 1.0 - gamma) & (ratio <= 1.0 + gamma)

    n_pairs = orig.size
    n_preserved = int(np.count_nonzero(preserved))
    ratio.setflags(write=False)
    return JlReport(
        gamma=float(gamma),
        pairs_tested=n_pairs,
        pairs_preserved=n_preserved,
        empirical_fraction=n_preserved / n_pairs,
        theoretical_bound=float(jl_bound(gamma, m.rows)),
        per_pair_distortion=ratio,
    )
