"""Small dense linear-algebra helpers shared by the reduction modules."""

import numpy as np

# Relative threshold below which a singular value counts as zero.
RANK_RTOL = 1e-10


def singular_value_ratio(A):
    """Smallest-to-largest singular value ratio of a 2-D array (0.0 for a zero matrix)."""
    s = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def has_full_row_rank(A, rtol=RANK_RTOL):
    A = np.asarray(A, dtype=float)
    if A.shape[0] > A.shape[1]:
        return False
    return singular_value_ratio(A) > rtol


def rowspace_solve(A, B):
    """Solve (A A^T) Z = A B for Z by a stable direct factorization.

    Equivalent to applying (A A^T)^{-1} A to B without forming the inverse.
    ``A`` must have full row rank; ``B`` may be a vector or a matrix.
    """
    A = np.asarray(A, dtype=float)
    if not has_full_row_rank(A):
        raise ValueError("matrix is rank deficient; rowspace solve undefined")
    gram = A @ A.T
    return np.linalg.solve(gram, A @ np.asarray(B, dtype=float))


def min_norm_lift(A, Y):
    """Right inverse A^T (A A^T)^{-1} applied to Y (minimum-norm preimage under A)."""
    A = np.asarray(A, dtype=float)
    if not has_full_row_rank(A):
        raise ValueError("matrix is rank deficient; lift undefined")
    gram = A @ A.T
    return A.T @ np.linalg.solve(gram, np.asarray(Y, dtype=float))


def symmetrized(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def min_eig_symmetric_part(M):
    """Smallest eigenvalue of the symmetric part of a square matrix."""
    return float(np.linalg.eigvalsh(symmetrized(M))[0])
