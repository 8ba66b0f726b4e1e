"""Dense matrix helpers shared by the synthesis, certification and simulation code.

Everything here is a thin, validated layer over numpy. The models handled by
this package are small (at most ten states), so dense arithmetic is used
throughout and no attempt is made at exploiting sparsity.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    symmetry: float = 1e-9          # relative to the inf-norm of the matrix
    lyapunov_residual: float = 1e-8  # relative to the inf-norm of W
    rank: float = 1e-8              # relative to the largest singular value
    condition_warn: float = 1e12
    pinv_identity: float = 1e-9


TOL = Tolerances()


class NotHurwitzError(ValueError):
    """Raised when a matrix that must be Hurwitz has an eigenvalue with Re >= 0."""

    def __init__(self, eigenvalue, label="matrix"):
        self.eigenvalue = complex(eigenvalue)
        super().__init__(
            f"{label} is not Hurwitz: eigenvalue {self.eigenvalue:.6g} has "
            f"non-negative real part"
        )


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def _as_matrix(M, name="M"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _require_square(M, name="M"):
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")


def inf_norm(M):
    M = np.atleast_2d(M)
    return float(np.max(np.sum(np.abs(M), axis=1))) if M.size else 0.0


def sym_eig_max(M):
    """Largest eigenvalue of the symmetric part of ``M``.

    Raises
    ------
    ValueError
        If ``M`` is not square or departs from symmetry by more than
        ``TOL.symmetry * ||M||_inf``.
    """
    M = _as_matrix(M)
    _require_square(M)
    scale = max(inf_norm(M), 1.0)
    if np.max(np.abs(M - M.T)) > TOL.symmetry * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    S = 0.5 * (M + M.T)
    return float(np.linalg.eigvalsh(S)[-1])


def sym_eig_min(M):
    M = _as_matrix(M)
    _require_square(M)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def eig_all(M):
    """All eigenvalues of a square matrix, with multiplicity."""
    M = _as_matrix(M)
    _require_square(M)
    return np.linalg.eigvals(M).astype(complex)


def spectral_abscissa(M):
    return float(np.max(eig_all(M).real))


def require_hurwitz(F, label="matrix"):
    ev = eig_all(F)
    worst = ev[np.argmax(ev.real)]
    if worst.real >= 0:
        raise NotHurwitzError(worst, label)
    return ev


def solve_lyapunov(F, W):
    """Solve ``F.T @ P + P @ F = -W`` by Kronecker vectorisation.

    The unknown is stacked column-wise, giving the linear system
    ``(I kron F.T + F.T kron I) vec(P) = -vec(W)`` of size ``n**2``.

    Parameters
    ----------
    F : (n, n) array_like
        Hurwitz matrix.
    W : (n, n) array_like
        Symmetric positive definite right-hand side.

    Returns
    -------
    P : (n, n) ndarray
        Symmetric positive definite solution.
    """
    F = _as_matrix(F, "F")
    W = _as_matrix(W, "W")
    _require_square(F, "F")
    if W.shape != F.shape:
        raise ValueError(f"W has shape {W.shape}, expected {F.shape}")
    require_hurwitz(F, "F")
    n = F.shape[0]
    I = np.eye(n)
    kron = np.kron(I, F.T) + np.kron(F.T, I)
    try:
        vecP = np.linalg.solve(kron, -W.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("Lyapunov operator is singular") from exc
    P = vecP.reshape((n, n), order="F")
    P = 0.5 * (P + P.T)
    bound = TOL.lyapunov_residual * inf_norm(W)
    R = F.T @ P + P @ F + W
    if inf_norm(R) > bound:
        # one step of iterative refinement for ill-conditioned F
        dP = np.linalg.solve(kron, -R.reshape(-1, order="F")).reshape((n, n), order="F")
        P = P + 0.5 * (dP + dP.T)
        R = F.T @ P + P @ F + W
    if inf_norm(R) > bound:
        raise np.linalg.LinAlgError(f"Lyapunov residual {inf_norm(R):.3g} exceeds {bound:.3g}")
    return P


def lyapunov_residual(F, P, W):
    return inf_norm(F.T @ P + P @ F + W)


def lstsq(A, B):
    """Minimum Frobenius-norm residual solution of ``A @ X = B``.

    Returns ``(X, residual)`` where ``residual = ||A @ X - B||_F``. For a
    rank-deficient ``A`` the minimum-norm ``X`` is returned.
    """
    A = _as_matrix(A, "A")
    B = np.asarray(B, dtype=float)
    vector_rhs = B.ndim == 1
    B = B.reshape(-1, 1) if vector_rhs else _as_matrix(B, "B")
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    X, *_ = np.linalg.lstsq(A, B, rcond=None)
    residual = float(np.linalg.norm(A @ X - B, "fro"))
    return (X.ravel() if vector_rhs else X), residual


def numerical_rank(M, rtol=None):
    M = _as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    rtol = TOL.rank if rtol is None else rtol
    return int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0


def inverse(M):
    """Matrix inverse; refuses singular or numerically singular input."""
    M = _as_matrix(M)
    _require_square(M)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularMatrixError(f"matrix is singular (condition number {cond:.3g})")
    return np.linalg.inv(M)


def condition_number(M):
    return float(np.linalg.cond(_as_matrix(M)))


def pseudo_inverse(M):
    return np.linalg.pinv(_as_matrix(M))


def mat_mul(A, B):
    A, B = _as_matrix(A, "A"), _as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def mat_add(A, B):
    A, B = _as_matrix(A, "A"), _as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"cannot add {A.shape} and {B.shape}")
    return A + B


def transpose(A):
    return _as_matrix(A, "A").T.copy()


def block_assemble(blocks):
    """Assemble a block matrix from a rectangular grid of 2-D blocks.

    Unlike ``np.block`` this checks that every block row shares one height and
    every block column one width, and names the offending block otherwise.
    """
    grid = [[_as_matrix(b, f"block[{i}][{j}]") for j, b in enumerate(row)]
            for i, row in enumerate(blocks)]
    if not grid or any(len(row) != len(grid[0]) for row in grid):
        raise ValueError("ragged block grid")
    heights = [row[0].shape[0] for row in grid]
    widths = [b.shape[1] for b in grid[0]]
    for i, row in enumerate(grid):
        for j, b in enumerate(row):
            if b.shape != (heights[i], widths[j]):
                raise ValueError(
                    f"block[{i}][{j}] has shape {b.shape}, expected "
                    f"{(heights[i], widths[j])}"
                )
    return np.block(grid)


def extract_blocks(M, row_sizes, col_sizes):
    M = _as_matrix(M)
    if sum(row_sizes) != M.shape[0] or sum(col_sizes) != M.shape[1]:
        raise ValueError("block sizes do not partition the matrix")
    r = np.cumsum([0, *row_sizes])
    c = np.cumsum([0, *col_sizes])
    return [[M[r[i]:r[i + 1], c[j]:c[j + 1]].copy() for j in range(len(col_sizes))]
            for i in range(len(row_sizes))]


def sqrtm_spd(P):
    """Symmetric square root and its inverse for an SPD matrix."""
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    if w[0] <= 0:
        raise ValueError("matrix is not positive definite")
    root = (V * np.sqrt(w)) @ V.T
    inv_root = (V / np.sqrt(w)) @ V.T
    return root, inv_root
