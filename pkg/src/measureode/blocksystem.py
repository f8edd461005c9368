"""Partitions at singular jumps and the coupled block system.

Points where J + dq/2 is singular break unique continuation; they become
partition points x_1 < ... < x_N inside the window, with x_0 and x_{N+1} the
window ends.  Between them fundamental matrices exist, and matching the jump
rule at each x_j couples the subinterval coefficients through one sparse
block matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import MeasureMatrix, Problem
from .errors import EmptyWindow, OutOfInterval
from .functions import L2Function
from .propagation import FundamentalMatrix, fundamental_matrix, inhomogeneous_integral

DEFAULT_TOL_SING = 1e-9
DEFAULT_TOL_RANK = 1e-10
BORDERLINE_SING = 1e-6


@dataclass(frozen=True)
class JumpReport:
    """Singular-value data of J + dq/2 at one jump position."""

    position: float
    sigma_min: float
    sigma_max: float
    status: str  # "singular" | "borderline" | "regular"


def classify_jumps(problem: Problem, window,
                   tol_sing: float = DEFAULT_TOL_SING) -> list[JumpReport]:
    """Classify every q-atom inside the open window by how singular it is."""
    lo, hi = float(window[0]), float(window[1])
    a, b = problem.interval
    if not (a <= lo < hi <= b):
        raise OutOfInterval(f"window ({lo}, {hi}) is not inside [{a}, {b}]")
    reports = []
    positions, _ = problem.q.atoms_between(lo, hi)
    for x in positions:
        sigma = np.linalg.svd(problem.b_plus(float(x)), compute_uv=False)
        smin, smax = float(sigma[-1]), float(sigma[0])
        if smin <= tol_sing * max(1.0, smax):
            status = "singular"
        elif smin <= BORDERLINE_SING * max(1.0, smax):
            status = "borderline"
        else:
            status = "regular"
        reports.append(JumpReport(float(x), smin, smax, status))
    return reports


def find_singular_points(problem: Problem, window,
                         tol_sing: float = DEFAULT_TOL_SING) -> list[float]:
    """Positions in the open window where J + dq/2 fails to be invertible."""
    return [r.position for r in classify_jumps(problem, window, tol_sing)
            if r.status == "singular"]


@dataclass(frozen=True)
class Partition:
    """Window ends plus at least two interior points, singular ones flagged."""

    window: tuple[float, float]
    interior: np.ndarray
    singular: np.ndarray  # bool mask aligned with interior

    def __post_init__(self):
        lo, hi = self.window
        interior = np.asarray(self.interior, dtype=float)
        singular = np.asarray(self.singular, dtype=bool)
        if interior.size < 2:
            raise ValueError("a partition needs at least two interior points")
        if interior.size != singular.size:
            raise ValueError("one flag per interior point required")
        if not np.all(np.diff(interior) > 0):
            raise ValueError("interior points must be strictly increasing")
        if not (lo < interior[0] and interior[-1] < hi):
            raise OutOfInterval("interior points must lie strictly inside the window")
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "singular", singular)
        self.interior.flags.writeable = False
        self.singular.flags.writeable = False

    @property
    def points(self) -> np.ndarray:
        """x_0 = window start, interior points, x_{N+1} = window end."""
        lo, hi = self.window
        return np.concatenate([[lo], self.interior, [hi]])

    @property
    def count(self) -> int:
        return int(self.interior.size)


def make_partition(window, singular_points, extra=()) -> Partition:
    """Partition from the singular points, padded up to two interior points.

    ``extra`` positions (for example user-forced ones) are merged in and
    flagged as padded.  With one point in total, a padded point is added at
    the midpoint of the longer adjacent gap (ties resolve to the right gap);
    with none, padded points sit at the thirds of the window.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise EmptyWindow(f"window ({lo}, {hi}) is empty")
    singular = sorted(float(x) for x in singular_points)
    chosen = dict.fromkeys(singular, True)
    for x in extra:
        chosen.setdefault(float(x), False)
    for x in chosen:
        if not (lo < x < hi):
            raise OutOfInterval(f"partition point {x} outside the open window")

    if len(chosen) == 0:
        width = hi - lo
        chosen = {lo + width / 3.0: False, lo + 2.0 * width / 3.0: False}
    elif len(chosen) == 1:
        (x,) = chosen
        if x - lo > hi - x:
            chosen[0.5 * (lo + x)] = False
        else:
            chosen[0.5 * (x + hi)] = False

    interior = np.array(sorted(chosen), dtype=float)
    flags = np.array([chosen[x] for x in sorted(chosen)], dtype=bool)
    return Partition((lo, hi), interior, flags)


def nullspace(matrix: np.ndarray, tol_rank: float = DEFAULT_TOL_RANK) -> np.ndarray:
    """Orthonormal basis of the kernel, columns; rank cut at tol_rank * sigma_max."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    cols = matrix.shape[1]
    if matrix.shape[0] == 0 or not matrix.any():
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(matrix)
    rank = int(np.sum(s > tol_rank * s[0]))
    return vh[rank:].conj().T


def _blockdiag(blocks) -> np.ndarray:
    blocks = list(blocks)
    n = blocks[0].shape[0]
    out = np.zeros((n * len(blocks), n * len(blocks)), dtype=complex)
    for i, blk in enumerate(blocks):
        out[i * n:(i + 1) * n, i * n:(i + 1) * n] = blk
    return out


def blockwise_solve(J: np.ndarray, stacked: np.ndarray) -> np.ndarray:
    """Apply J^{-1} to each length-n block of a stacked vector."""
    n = J.shape[0]
    out = np.array(stacked, dtype=complex)
    for i in range(out.size // n):
        out[i * n:(i + 1) * n] = np.linalg.solve(J, out[i * n:(i + 1) * n])
    return out


class BlockSystem:
    """All matrices coupling the subinterval coefficients of a partition."""

    def __init__(self, problem: Problem, partition: Partition,
                 fundamentals: list[FundamentalMatrix]):
        self.problem = problem
        self.partition = partition
        self.fundamentals = fundamentals
        pts = partition.points
        n = problem.n
        N = partition.count
        self.n = n
        self.N = N

        self.b_plus = [problem.b_plus(float(pts[j])) for j in range(1, N + 1)]
        self.b_minus = [problem.b_minus(float(pts[j])) for j in range(1, N + 1)]
        self.u_ends = [U.end_value for U in fundamentals]

        self.calB = _blockdiag(self.b_plus)
        self.calU = _blockdiag(self.u_ends[:N])
        self.calJ = _blockdiag([problem.J] * N)

        B = np.zeros((n * N, n * (N + 1)), dtype=complex)
        B[:, : n * N] += self.calB.conj().T @ self.calU
        B[:, n:] += self.calB
        C = np.zeros((n * N, n * (N + 1)), dtype=complex)
        C[:, : n * N] += 0.5 * self.calU
        C[:, n:] += 0.5 * np.eye(n * N)
        self.B = B
        self.C = C
        self.B_m = B[:, n:-n]
        self.C_m = C[:, n:-n]

    @property
    def points(self) -> np.ndarray:
        return self.partition.points

    def split_blocks(self, stacked: np.ndarray) -> list[np.ndarray]:
        """Cut a stacked coefficient vector into length-n blocks."""
        n = self.n
        stacked = np.asarray(stacked, dtype=complex).reshape(-1)
        return [stacked[i * n:(i + 1) * n] for i in range(stacked.size // n)]


def assemble(problem: Problem, partition: Partition,
             tol_sing: float = DEFAULT_TOL_SING) -> BlockSystem:
    """Fundamental matrices per subinterval plus the coupling matrices.

    Raises SingularAtom if a singular jump sits strictly inside a
    subinterval, i.e. the partition misses it.
    """
    pts = partition.points
    fundamentals = [
        fundamental_matrix(problem, (float(pts[j]), float(pts[j + 1])), tol_sing)
        for j in range(pts.size - 1)
    ]
    return BlockSystem(problem, partition, fundamentals)


@dataclass(frozen=True)
class MomentVectors:
    """Every moment of a right-hand side the block system consumes.

    ``jump_moments`` stacks dw(x_j) f(x_j); ``integrals`` stacks the
    subinterval integrals of U^* w f for the first N subintervals and
    ``last_integral`` holds the final one.  ``rhs`` is the right-hand side of
    the coupling equation and ``functional`` the combination that decides
    solvability with vanishing endpoint data.
    """

    f: L2Function
    jump_moments: np.ndarray
    integrals: np.ndarray
    last_integral: np.ndarray
    rhs: np.ndarray
    functional: np.ndarray

    @property
    def tail_integrals(self) -> np.ndarray:
        """Stacked vector that is zero except for the last subinterval integral."""
        head = np.zeros(self.integrals.size - self.last_integral.size, dtype=complex)
        return np.concatenate([head, self.last_integral])


def moment_vectors(bs: BlockSystem, f: L2Function) -> MomentVectors:
    """Compute all moments of f that the coupling equation needs."""
    problem = bs.problem
    pts = bs.points
    n, N = bs.n, bs.N
    w = problem.w

    jump_moments = np.zeros(n * N, dtype=complex)
    for j in range(1, N + 1):
        x = float(pts[j])
        dw = w.jump(x)
        if dw.any():
            jump_moments[(j - 1) * n: j * n] = dw @ f.value(x, "balanced")

    integrals = [
        inhomogeneous_integral(bs.fundamentals[j], w, f, float(pts[j + 1]))
        for j in range(N + 1)
    ]
    head = np.concatenate(integrals[:N])
    last = integrals[N]

    rhs = jump_moments - bs.calB.conj().T @ (bs.calU @ blockwise_solve(problem.J, head))
    tail = np.concatenate([np.zeros(n * (N - 1), dtype=complex), last])
    functional = rhs + bs.calB @ blockwise_solve(problem.J, tail)
    return MomentVectors(f, jump_moments, head, last, rhs, functional)
