import numpy as np
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st

import src.kernel_core as kernel_core
from src.kernel_core import (
    DefectKind,
    Kernel,
    PointSet,
    Potential,
    defect_scan,
    residual_tensor,
)
from src.sincov import quotient_kernel
from utils.exceptions import DomainError, PointSetMismatch


def small_matrices(max_n=5):
    return st.integers(min_value=1, max_value=max_n).flatmap(
        lambda n: st.lists(
            st.lists(st.floats(min_value=-4, max_value=4, allow_nan=False), min_size=n, max_size=n),
            min_size=n, max_size=n,
        )
    )


def test_point_set_rejects_duplicates_and_empty():
    with pytest.raises(DomainError):
        PointSet(("a", "a"))
    with pytest.raises(DomainError):
        PointSet(())


def test_point_set_of_size_labels():
    points = PointSet.of_size(3)
    assert points.labels == ("x0", "x1", "x2")
    assert points.index("x2") == 2
    with pytest.raises(DomainError):
        points.index("y")


def test_kernel_rejects_non_finite_and_wrong_shape():
    points = PointSet(("a", "b"))
    with pytest.raises(DomainError):
        Kernel(points, [[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(DomainError):
        Kernel(points, [[1.0, 2.0, 3.0], [0.0, 1.0, 2.0]])


def test_kernel_values_are_read_only(make_kernel):
    k = make_kernel([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        k.values[0, 0] = 7.0


def test_kernel_call_and_arithmetic(make_kernel):
    k = make_kernel([[1, 2], [3, 4]])
    assert k("a", "b") == 2.0
    assert (k + k).same_as(2 * k)
    assert (k - k).same_as(Kernel.zeros(k.points))
    assert (-k)("b", "a") == -3.0
    assert k.max_abs_difference(k * 0.5) == 2.0


def test_relabeled_keeps_the_function(make_kernel):
    k = make_kernel([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    moved = k.relabeled([2, 0, 1])
    assert moved.points.labels == ("c", "a", "b")
    for f in "abc":
        for g in "abc":
            assert moved(f, g) == k(f, g)


def test_sincov_scan_of_quotient_kernel_is_zero():
    T = quotient_kernel(Potential(PointSet(("a", "b", "c")), [1.0, 2.0, 4.0]))
    report = defect_scan(DefectKind.SINCOV, T)
    assert report.max_defect == 0.0
    assert report.violations == 0
    assert report.holds


def test_triangle_scan_reports_first_maximiser(triangle_violator):
    report = defect_scan("triangle", triangle_violator)
    assert report.max_defect == 3.0
    assert report.argmax == ("a", "b", "c")
    # (a,b,c) and (c,b,a)
    assert report.violations == 2
    assert not report.holds


def test_main_scan_of_constant_solution(make_kernel):
    ones = make_kernel(np.ones((3, 3)))
    report = defect_scan(DefectKind.MAIN, ones, ones)
    assert report.max_defect == 0.0
    assert report.violations == 0


def test_main_scan_counts_overflowing_triples(make_kernel):
    # |T - TT| ~ 1e400 > FF - F ~ 1e398, but both sides overflow to inf
    report = defect_scan(DefectKind.MAIN, make_kernel(np.full((2, 2), 1e200)), make_kernel(np.full((2, 2), 1e199)))
    assert not report.holds
    assert report.max_defect == np.inf
    assert report.violations == 8
    assert report.argmax == ("a", "a", "a")
    assert np.all(residual_tensor(DefectKind.MAIN, make_kernel(np.full((2, 2), 1e200)),
                                  make_kernel(np.full((2, 2), 1e199))) == np.inf)


def test_main_scan_with_overflowing_bound_holds(make_kernel):
    report = defect_scan(DefectKind.MAIN, make_kernel(np.ones((2, 2))), make_kernel(np.full((2, 2), 1e200)))
    assert report.holds and report.violations == 0


def test_additive_scan_of_coboundary(make_kernel):
    phi = np.array([0.5, -1.25, 3.0])
    report = defect_scan("additive", make_kernel(phi[:, None] - phi[None, :]))
    assert report.max_defect == 0.0


def test_complex_sincov_scan_uses_modulus(make_kernel):
    zeros = make_kernel(np.zeros((2, 2)))
    ones = make_kernel(np.ones((2, 2)))
    # T = i everywhere: |i - i*i| = |1 + i|
    report = defect_scan(DefectKind.SINCOV, zeros, imaginary=ones)
    assert report.max_defect == pytest.approx(np.sqrt(2.0), abs=1e-15)


def test_imaginary_part_rejected_for_real_kinds(make_kernel):
    k = make_kernel(np.ones((2, 2)))
    with pytest.raises(DomainError):
        defect_scan(DefectKind.TRIANGLE, k, imaginary=k)


def test_arity_and_point_set_checks(make_kernel):
    k = make_kernel(np.ones((2, 2)))
    other = make_kernel(np.ones((2, 2)), labels=("p", "q"))
    with pytest.raises(DomainError):
        defect_scan(DefectKind.MAIN, k)
    with pytest.raises(DomainError):
        defect_scan(DefectKind.SINCOV, k, k)
    with pytest.raises(PointSetMismatch):
        defect_scan(DefectKind.ADD, k, other)


def test_report_holds_iff_no_violation(make_kernel):
    k = make_kernel([[0, 1, 1.5], [1, 0, 1], [1.5, 1, 0]])
    report = defect_scan(DefectKind.TRIANGLE, k, tolerance=0.0)
    assert report.holds == (report.max_defect <= 0.0)
    loose = defect_scan(DefectKind.TRIANGLE, make_kernel([[0, 1, 2.5], [1, 0, 1], [2.5, 1, 0]]), tolerance=1.0)
    assert loose.holds and loose.max_defect == 0.5


def test_blocked_and_parallel_scans_agree(monkeypatch):
    rng = np.random.default_rng(3)
    k = Kernel(PointSet.of_size(5), rng.integers(-2, 3, (5, 5)).astype(float))
    whole = defect_scan(DefectKind.SUBMULTIPLICATIVE, k)
    monkeypatch.setattr(kernel_core, "_BLOCK_ELEMENTS", 8)
    for jobs in (1, 2):
        blocked = defect_scan(DefectKind.SUBMULTIPLICATIVE, k, n_jobs=jobs)
        assert blocked == whole


@settings(max_examples=50, deadline=None)
@given(small_matrices(), st.randoms())
def test_scan_is_permutation_equivariant(values, rnd):
    k = Kernel(PointSet.of_size(len(values)), values)
    order = list(range(k.n))
    rnd.shuffle(order)
    for kind in (DefectKind.SINCOV, DefectKind.TRIANGLE, DefectKind.ADDITIVE):
        assert defect_scan(kind, k.relabeled(order)).max_defect == defect_scan(kind, k).max_defect


@settings(max_examples=50, deadline=None)
@given(small_matrices(4))
def test_residual_tensor_maximum_matches_scan(values):
    k = Kernel(PointSet.of_size(len(values)), values)
    tensor = residual_tensor(DefectKind.SINCOV, k)
    report = defect_scan(DefectKind.SINCOV, k)
    assert tensor.max() == report.max_defect
    i, j, l = (k.points.index(label) for label in report.argmax)
    assert tensor[i, j, l] == report.max_defect
