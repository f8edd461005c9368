"""Weighted pairings, homogeneous kernels, endpoint-vanishing solves."""

import numpy as np
import pytest

from measureode import (
    MeasureMatrix,
    MissingRHS,
    OrthogonalityCertificate,
    Problem,
    inner_product,
    kernel_K0,
    lagrange_check,
    moment_vectors,
    solve_system,
    t0_solve,
    weighted_norm,
)
from measureode.functions import L2Function
from measureode.verify import orthogonal_rhs

from conftest import INTERVAL, J2, SWAP2, block_system, two_atom_problem

TOL_PAIRING = 1e-8


def test_inner_product_against_hand_integral():
    w = MeasureMatrix.lebesgue((0.0, 1.0), np.diag([2.0, 0.0]).astype(complex))
    u = L2Function.constant((0.0, 1.0), [1.0 + 1.0j, 5.0], w=w)
    v = L2Function.constant((0.0, 1.0), [3.0, 7.0], w=w)
    got = inner_product(w, u, v)
    assert got == pytest.approx((1.0 - 1.0j) * 2.0 * 3.0, abs=1e-10)


def test_weighted_norm_is_real_and_monotone_in_the_weight():
    w1 = MeasureMatrix.lebesgue((0.0, 1.0), np.eye(2, dtype=complex))
    w2 = MeasureMatrix.lebesgue((0.0, 1.0), 2.0 * np.eye(2, dtype=complex))
    f = L2Function.constant((0.0, 1.0), [1.0, 1.0])
    assert weighted_norm(w1, f) == pytest.approx(np.sqrt(2.0), abs=1e-10)
    assert weighted_norm(w2, f) == pytest.approx(2.0, abs=1e-10)


def test_kernel_K0_of_the_mirror_problem(mirror_problem):
    elements = kernel_K0(mirror_problem, INTERVAL)
    assert len(elements) == 3
    for el in elements:
        assert el.degenerate == (el.w_norm ** 2 <= 1e-10)
        # each element really is a homogeneous balanced solution
        bs = block_system(mirror_problem)
        assert np.linalg.norm(bs.B @ el.solution.coefficient_vector()) <= 1e-9
    assert max(el.w_norm for el in elements) > 0.1


def test_kernel_K0_with_zero_weight_is_all_degenerate():
    q = MeasureMatrix.from_atoms(INTERVAL, 2, [(-0.5, SWAP2), (0.5, -SWAP2)])
    problem = Problem(J2, q, MeasureMatrix.zero(INTERVAL, 2))
    elements = kernel_K0(problem, INTERVAL)
    assert len(elements) == 3
    assert all(el.degenerate for el in elements)
    assert all(el.w_norm == 0.0 for el in elements)


def test_t0_solve_requires_a_right_hand_side(mirror_problem):
    with pytest.raises(MissingRHS):
        t0_solve(mirror_problem, INTERVAL, None)


def test_t0_solve_certifies_the_mirror_obstruction(mirror_problem, ones_rhs):
    result = t0_solve(mirror_problem, INTERVAL, ones_rhs)
    assert isinstance(result, OrthogonalityCertificate)
    assert result.pairing == pytest.approx(2.0, abs=1e-10)
    assert result.moment_pairing == pytest.approx(2.0, abs=1e-10)
    assert result.projection_norm == pytest.approx(np.sqrt(2.0), abs=1e-10)
    # the witness is itself a homogeneous solution, compactly supported
    witness = result.solution
    for x in (-0.9, 0.9):
        assert np.linalg.norm(witness.evaluate(x)) <= 1e-12
    assert inner_product(mirror_problem.w, witness, ones_rhs,
                         INTERVAL) == pytest.approx(result.pairing, abs=1e-10)


def test_t0_solve_solves_orthogonal_right_hand_sides(repeated_problem):
    rng = np.random.default_rng(43)
    bs = block_system(repeated_problem)
    f = orthogonal_rhs(rng, bs, 1e-10)
    solution = t0_solve(repeated_problem, INTERVAL, f)
    assert not isinstance(solution, OrthogonalityCertificate)
    lo, hi = INTERVAL
    assert np.linalg.norm(solution.evaluate(lo, "right")) \
        + np.linalg.norm(solution.evaluate(hi, "left")) <= 1e-9
    # solvable right-hand sides pair to zero with every homogeneous solution
    for el in kernel_K0(repeated_problem, INTERVAL):
        pairing = abs(inner_product(repeated_problem.w, f, el.solution, INTERVAL))
        norm = weighted_norm(repeated_problem.w, f, INTERVAL) * el.w_norm
        assert pairing <= TOL_PAIRING * (1.0 + norm)


def test_lagrange_identity_for_inhomogeneous_pairs(repeated_problem):
    bs = block_system(repeated_problem)
    f = L2Function.from_pieces(INTERVAL, [(-1.0, 0.0, [1.0, 2.0]), (0.0, 1.0, [-1.0, 0.5])],
                               w=repeated_problem.w)
    g = L2Function.constant(INTERVAL, [0.5, -0.25], w=repeated_problem.w)
    u = solve_system(bs, moment_vectors(bs, f)).particular
    v = solve_system(bs, moment_vectors(bs, g)).particular
    report = lagrange_check(repeated_problem, INTERVAL, (u, f), (v, g))
    assert report.defect <= TOL_PAIRING
    assert report.rhs == pytest.approx(report.boundary_end - report.boundary_start)


def test_lagrange_identity_with_compactly_supported_factor(
        mirror_problem, repeated_problem, ones_rhs):
    from measureode import compact_support_solutions
    bs = block_system(mirror_problem)
    (u,) = compact_support_solutions(bs)
    g = L2Function.constant(INTERVAL, [2.0, 1.0], w=mirror_problem.w)
    mv = moment_vectors(bs, g)
    result = solve_system(bs, mv)
    if result.consistent:
        v, gv = result.particular, g
    else:
        v, gv = result.kernel_basis[0], None
    report = lagrange_check(mirror_problem, INTERVAL, (u, None), (v, gv))
    assert report.defect <= TOL_PAIRING
    # both boundary terms vanish because u vanishes near the window ends
    assert abs(report.boundary_start) <= 1e-12
    assert abs(report.boundary_end) <= 1e-12


def test_lagrange_identity_with_weight_atoms_on_and_off_the_partition():
    """Weight atoms inside a subinterval and at a singular point together.

    The solution must jump at an interior weight atom via the balanced jump
    rule, and at a partition point the jump is carried by the coupling
    equation alone; mixing up the two conventions breaks the identity.
    """
    w = MeasureMatrix(INTERVAL, breakpoints=[-1.0, 1.0],
                      densities=[0.25 * np.eye(2, dtype=complex)],
                      atoms=[(0.2, np.diag([1.0, 2.0]).astype(complex)),
                             (0.5, np.eye(2, dtype=complex))])
    problem = two_atom_problem(SWAP2, SWAP2, w_atoms=())
    problem = Problem(J2, problem.q, w)
    bs = block_system(problem)
    f = L2Function.from_pieces(INTERVAL, [(-1.0, 0.3, [1.0, -2.0]), (0.3, 1.0, [0.5, 1.5])],
                               w=w)
    g = L2Function.constant(INTERVAL, [-1.0, 1.0], w=w)
    u = solve_system(bs, moment_vectors(bs, f)).particular
    v = solve_system(bs, moment_vectors(bs, g)).particular
    assert u is not None and v is not None

    # jump relation at every atom, q-borne or w-borne
    for sol, rhs in ((u, f), (v, g)):
        for x in (-0.5, 0.2, 0.5):
            defect = problem.b_plus(x) @ sol.evaluate(x, "right") \
                - problem.b_minus(x) @ sol.evaluate(x, "left") \
                - w.jump(x) @ rhs.value(x, "balanced")
            assert np.linalg.norm(defect) <= 1e-10

    report = lagrange_check(problem, INTERVAL, (u, f), (v, g))
    assert report.defect <= TOL_PAIRING
