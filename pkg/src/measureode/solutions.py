"""Solving the coupled block system and reconstructing balanced solutions.

The coupling matrix acts on stacked subinterval coefficients.  Its kernel
corresponds one-to-one to homogeneous balanced solutions; kernel vectors of
the adjoint reduced matrix lift to homogeneous solutions with prescribed
balanced values at the partition points, and kernel vectors of the full
adjoint lift to solutions supported inside the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocksystem import (
    DEFAULT_TOL_RANK,
    BlockSystem,
    MomentVectors,
    nullspace,
)
from .errors import (
    DimensionMismatch,
    InconsistentLift,
    LiftEndpointNonzero,
    NotInKernel,
)
from .functions import L2Function
from .propagation import PiecewiseSolution, w_pairing

DEFAULT_TOL_SOLVE = 1e-9
# How far a claimed kernel vector may sit from the computed kernel.
KERNEL_MEMBERSHIP_TOL = 1e-6


def minimum_norm_solve(matrix: np.ndarray, rhs: np.ndarray,
                       tol_rank: float = DEFAULT_TOL_RANK) -> np.ndarray:
    """Minimum-norm least-squares solution with an explicit rank cut."""
    matrix = np.asarray(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex).reshape(-1)
    if matrix.shape[0] != rhs.size:
        raise DimensionMismatch("right-hand side length must match the row count")
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(matrix.shape[1], dtype=complex)
    keep = s > tol_rank * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return vh.conj().T @ (inv * (u.conj().T @ rhs))


def reconstruct(bs: BlockSystem, coefficients: np.ndarray,
                f: L2Function | None = None) -> PiecewiseSolution:
    """Balanced solution from one stacked coefficient vector (N+1 blocks)."""
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
    if coefficients.size != bs.n * (bs.N + 1):
        raise DimensionMismatch(
            f"expected {bs.n * (bs.N + 1)} stacked coefficients, got {coefficients.size}")
    return PiecewiseSolution(bs.problem, bs.points, bs.fundamentals,
                             bs.split_blocks(coefficients), f)


@dataclass
class SolutionSet:
    """Outcome of solving the coupling equation for one right-hand side."""

    consistent: bool
    residual: float
    coefficients: np.ndarray
    particular: PiecewiseSolution | None
    kernel_coefficients: np.ndarray  # columns span the nullspace
    kernel_basis: list[PiecewiseSolution]

    @property
    def kernel_dimension(self) -> int:
        return self.kernel_coefficients.shape[1]


def solve_system(bs: BlockSystem, moments: MomentVectors | None = None,
                 tol_solve: float = DEFAULT_TOL_SOLVE,
                 tol_rank: float = DEFAULT_TOL_RANK) -> SolutionSet:
    """Particular solution (minimum norm) plus a basis of homogeneous ones.

    With no moment data the right-hand side is zero: the particular solution
    is the zero solution and the kernel basis spans all homogeneous balanced
    solutions on the window.
    """
    n_cols = bs.n * (bs.N + 1)
    rhs = moments.rhs if moments is not None else np.zeros(bs.n * bs.N, dtype=complex)
    coeffs = minimum_norm_solve(bs.B, rhs, tol_rank)
    residual = float(np.linalg.norm(bs.B @ coeffs - rhs))
    consistent = residual <= tol_solve * (1.0 + float(np.linalg.norm(rhs)))

    kernel_coeffs = nullspace(bs.B, tol_rank)
    kernel_basis = [reconstruct(bs, kernel_coeffs[:, i])
                    for i in range(kernel_coeffs.shape[1])]
    particular = None
    if consistent:
        f = moments.f if moments is not None else None
        particular = reconstruct(bs, coeffs, f)
    assert kernel_coeffs.shape[0] == n_cols
    return SolutionSet(consistent, residual, coeffs, particular,
                       kernel_coeffs, kernel_basis)


def _project_onto_adjoint_kernel(bs: BlockSystem, uhat: np.ndarray,
                                 tol_rank: float) -> tuple[np.ndarray, float]:
    """Orthogonal projection of uhat onto ker(B_m^*), plus the distance."""
    uhat = np.asarray(uhat, dtype=complex).reshape(-1)
    if uhat.size != bs.n * bs.N:
        raise DimensionMismatch(
            f"expected a vector of length {bs.n * bs.N}, got {uhat.size}")
    basis = nullspace(bs.B_m.conj().T, tol_rank)
    projected = basis @ (basis.conj().T @ uhat)
    return projected, float(np.linalg.norm(uhat - projected))


def lift_kernel_vector(bs: BlockSystem, uhat: np.ndarray,
                       tol: float = DEFAULT_TOL_SOLVE,
                       tol_rank: float = DEFAULT_TOL_RANK) -> np.ndarray:
    """Stacked coefficients of the homogeneous solution with balanced values uhat.

    ``uhat`` holds the desired balanced values at the interior partition
    points and must lie in the kernel of the adjoint reduced coupling matrix;
    it is replaced by its projection onto the computed kernel when the
    distance is small, rejected otherwise.  The two closed-form reconstruction
    formulas (one stripping the first block, one the last) are both evaluated
    and must agree on the overlap.
    """
    projected, distance = _project_onto_adjoint_kernel(bs, uhat, tol_rank)
    scale = max(1.0, float(np.linalg.norm(uhat)))
    if distance > KERNEL_MEMBERSHIP_TOL * scale:
        raise NotInKernel(
            f"vector sits {distance:.3e} away from the adjoint kernel")
    return _lift_projected(bs, projected, tol)


def _lift_projected(bs: BlockSystem, uhat: np.ndarray, tol: float) -> np.ndarray:
    J = bs.problem.J
    n, N = bs.n, bs.N
    blocks = [uhat[j * n:(j + 1) * n] for j in range(N)]

    # Strip-first formula: coefficients c_1 .. c_N.
    top = [-np.linalg.solve(J, bs.b_plus[j].conj().T @ blocks[j]) for j in range(N)]
    # Strip-last formula: coefficients c_0 .. c_{N-1}.
    bottom = [np.linalg.solve(J, bs.u_ends[j].conj().T @ (bs.b_plus[j] @ blocks[j]))
              for j in range(N)]

    scale = max(1.0, float(np.linalg.norm(uhat)))
    overlap = 0.0
    for j in range(1, N):
        overlap = max(overlap, float(np.linalg.norm(top[j - 1] - bottom[j])))
    if overlap > 10.0 * tol * scale:
        raise InconsistentLift(
            f"reconstruction formulas disagree by {overlap:.3e} on the overlap")

    coeffs = [bottom[0]]
    for j in range(1, N):
        coeffs.append(0.5 * (top[j - 1] + bottom[j]))
    coeffs.append(top[N - 1])
    stacked = np.concatenate(coeffs)

    residual = float(np.linalg.norm(bs.B @ stacked))
    matched = float(np.linalg.norm(bs.C @ stacked - uhat))
    if residual > 100.0 * tol * scale or matched > 100.0 * tol * scale:
        raise InconsistentLift(
            f"lift failed post-check: coupling residual {residual:.3e}, "
            f"balanced-value mismatch {matched:.3e}")
    return stacked


def compact_support_solutions(bs: BlockSystem,
                              tol: float = DEFAULT_TOL_SOLVE,
                              tol_rank: float = DEFAULT_TOL_RANK
                              ) -> list[PiecewiseSolution]:
    """Homogeneous solutions vanishing identically outside the interior points.

    One solution per kernel vector of the adjoint coupling matrix.  The first
    and last coefficient blocks of each lift are checked to vanish and then
    set to exactly zero, so evaluation outside the support returns exact
    zeros.  Each kernel vector is scaled so its largest balanced value is
    exactly 1, which pins the otherwise arbitrary basis scaling.
    """
    basis = nullspace(bs.B.conj().T, tol_rank)
    n, N = bs.n, bs.N
    out = []
    for i in range(basis.shape[1]):
        uhat = basis[:, i]
        top = int(np.argmax(np.abs(uhat)))
        uhat = uhat / uhat[top]
        stacked = lift_kernel_vector(bs, uhat, tol, tol_rank)
        edge = max(float(np.linalg.norm(stacked[:n])),
                   float(np.linalg.norm(stacked[-n:])))
        if edge > 10.0 * tol * max(1.0, float(np.linalg.norm(uhat))):
            raise LiftEndpointNonzero(
                f"endpoint coefficient blocks have norm {edge:.3e}")
        stacked = stacked.copy()
        stacked[:n] = 0.0
        stacked[-n:] = 0.0
        out.append(reconstruct(bs, stacked))
    return out


def functional_identity_defect(bs: BlockSystem, moments: MomentVectors,
                               uhat: np.ndarray,
                               tol: float = DEFAULT_TOL_SOLVE,
                               tol_rank: float = DEFAULT_TOL_RANK) -> float:
    """|uhat^* functional - integral of u^* w f| for the lifted solution u.

    The pairing of the functional moment vector with a kernel vector of the
    adjoint reduced matrix equals the weighted pairing of the lifted
    homogeneous solution with the right-hand side; this returns the absolute
    mismatch between the two computations.
    """
    projected, distance = _project_onto_adjoint_kernel(bs, uhat, tol_rank)
    if distance > KERNEL_MEMBERSHIP_TOL * max(1.0, float(np.linalg.norm(uhat))):
        raise NotInKernel(
            f"vector sits {distance:.3e} away from the adjoint kernel")
    stacked = _lift_projected(bs, projected, tol)
    u = reconstruct(bs, stacked)
    lhs = complex(np.vdot(projected, moments.functional))
    lo, hi = bs.partition.window
    rhs = w_pairing(bs.problem.w, u, moments.f, (lo, hi))
    return abs(lhs - rhs)
