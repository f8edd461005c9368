"""Randomized self-check suites."""

import numpy as np
import pytest

from measureode import run_random_suites, run_suites
from measureode.verify import SUITE_NAMES, orthogonal_rhs
from measureode import inner_product, kernel_K0, weighted_norm
from measureode.fuzz import random_instance

from conftest import INTERVAL, block_system


def test_every_suite_row_passes_on_a_seeded_batch():
    rows = run_random_suites(20260819, 6)
    assert rows, "suites produced no checks"
    failures = [r for r in rows if not r.passed]
    assert failures == []
    names = {r.name.split()[0] for r in rows}
    assert names <= set(SUITE_NAMES)
    assert {"cbbc", "wronskian", "lift", "lagrange", "t0"} <= names


def test_rows_compare_measured_defects_with_their_tolerances():
    rows = run_random_suites(7, 3)
    for row in rows:
        if "nonzero" in row.name:
            # the certificate pairing must exceed its floor, not stay below
            assert row.passed == (row.measured > row.tolerance)
        else:
            assert row.passed == (row.measured <= row.tolerance)
        assert np.isfinite(row.measured)


def test_unknown_check_name_is_rejected(mirror_problem):
    with pytest.raises(ValueError):
        run_suites(mirror_problem, INTERVAL, checks=("cbbc", "nonsense"))


def test_single_suite_selection(mirror_problem):
    rows = run_suites(mirror_problem, INTERVAL, checks=("wronskian",))
    assert rows
    assert all(r.name.startswith("wronskian") for r in rows)


def test_orthogonal_rhs_is_orthogonal_to_the_kernel():
    rng = np.random.default_rng(11)
    for _ in range(5):
        inst = random_instance(rng, with_f=False)
        bs = block_system(inst.problem, inst.window, inst.extra_points)
        f = orthogonal_rhs(rng, bs, 1e-10)
        if f is None:
            continue
        fn = weighted_norm(inst.problem.w, f, inst.window)
        for el in kernel_K0(inst.problem, inst.window, inst.extra_points):
            pairing = abs(inner_product(inst.problem.w, el.solution, f, inst.window))
            assert pairing <= 1e-8 * (1.0 + fn * el.w_norm)
