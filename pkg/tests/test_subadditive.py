import itertools

import numpy as np
import pytest

from src.generators import GeneratorKind, GeneratorSpec, generate
from src.kernel_core import DefectKind, Kernel, PointSet, Potential, defect_scan
from src.subadditive import (
    PotentialFamily,
    canonical_potentials,
    coboundary_kernel,
    find_negative_cycle,
    membership_defect,
    product_closure,
    sup_representation,
    triangle_closure,
    verify_corollary_ct,
)
from utils.exceptions import DomainError, EmptyFamilyError, NegativeCycleError


def brute_force_closure(values):
    """Lightest path of length 1..n between every pair."""
    n = values.shape[0]
    best = np.full((n, n), np.inf)
    for length in range(1, n + 1):
        for path in itertools.product(range(n), repeat=length + 1):
            weight = sum(values[path[i], path[i + 1]] for i in range(length))
            best[path[0], path[-1]] = min(best[path[0], path[-1]], weight)
    return best


def has_negative_cycle(values):
    n = values.shape[0]
    for length in range(1, n + 1):
        for cycle in itertools.product(range(n), repeat=length):
            if sum(values[cycle[i], cycle[(i + 1) % length]] for i in range(length)) < 0:
                return True
    return False


def test_closure_shortens_long_edge(triangle_violator):
    closure = triangle_closure(triangle_violator)
    assert closure("a", "c") == 2.0
    assert defect_scan(DefectKind.TRIANGLE, closure).max_defect == 0.0


def test_closure_names_negative_cycle(negative_two_cycle):
    with pytest.raises(NegativeCycleError) as info:
        triangle_closure(negative_two_cycle)
    assert sorted(info.value.cycle) == ["a", "b"]
    assert info.value.weight == -2.0
    assert info.value.exit_code == 2


def test_negative_self_loop_is_a_cycle(make_kernel):
    found = find_negative_cycle(make_kernel([[0, 1], [1, -0.5]]))
    assert found == ([1], -0.5)


def test_no_cycle_on_nonnegative_kernel(triangle_violator):
    assert find_negative_cycle(triangle_violator) is None


@pytest.mark.parametrize("seed", range(20))
def test_closure_is_idempotent_and_monotone(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 5
    points = PointSet.of_size(n)
    # integer weights keep every path sum exact
    values = rng.integers(0, 20, (n, n)).astype(float)
    bigger = values + rng.integers(0, 4, (n, n))
    closure = triangle_closure(Kernel(points, values))
    assert triangle_closure(closure).same_as(closure)
    assert np.all(closure.values <= triangle_closure(Kernel(points, bigger)).values)


@pytest.mark.slow
def test_closure_matches_path_enumeration():
    rng = np.random.default_rng(5)
    entries = np.array([-1.0, 0.0, 1.0, 2.0])
    checked = 0
    for n in (1, 2, 3, 4):
        for _ in range(1250 if n > 2 else 300):
            values = rng.choice(entries, (n, n))
            negative = has_negative_cycle(values)
            if negative:
                with pytest.raises(NegativeCycleError):
                    triangle_closure(Kernel(PointSet.of_size(n), values))
            else:
                closure = triangle_closure(Kernel(PointSet.of_size(n), values))
                assert np.array_equal(closure.values, brute_force_closure(values))
            checked += 1
    assert checked > 0


def test_sup_representation_of_canonical_family_is_identity():
    for seed in range(500):
        n = 1 + seed % 12
        H = generate(GeneratorSpec(GeneratorKind.SUBADDITIVE, n, seed))[0]
        represented = sup_representation(canonical_potentials(H))
        assert represented.max_abs_difference(H) <= 1e-12


def test_canonical_family_lies_below_kernel(triangle_violator):
    family = canonical_potentials(triangle_violator)
    assert len(family) == 3
    assert membership_defect(family, triangle_violator) <= 0.0


def test_sup_representation_two_potentials():
    points = PointSet(("a", "b"))
    family = PotentialFamily.of(Potential(points, [0.0, 1.0]), Potential(points, [2.0, 0.0]))
    K = sup_representation(family)
    assert K.values.tolist() == [[0.0, 2.0], [1.0, 0.0]]


def test_empty_family_errors():
    with pytest.raises(EmptyFamilyError):
        PotentialFamily.of()
    with pytest.raises(EmptyFamilyError):
        sup_representation(PotentialFamily(PointSet(("a",)), np.zeros((0, 1))))


def test_family_rejects_non_finite():
    with pytest.raises(DomainError):
        PotentialFamily(PointSet(("a",)), [[np.inf]])


def test_coboundary_kernel_is_additive():
    K = coboundary_kernel(Potential(PointSet(("a", "b", "c")), [1.0, 0.25, -3.0]))
    assert defect_scan(DefectKind.ADDITIVE, K).max_defect == 0.0
    assert K("a", "c") == 4.0


def test_product_closure_is_submultiplicative():
    rng = np.random.default_rng(8)
    F = Kernel(PointSet.of_size(5), rng.uniform(1.0, 3.0, (5, 5)))
    closed = product_closure(F)
    assert defect_scan(DefectKind.SUBMULTIPLICATIVE, closed).max_defect <= 1e-12
    assert np.all(closed.values <= F.values)


def test_product_closure_spreads_an_off_diagonal_zero(make_kernel):
    values = np.full((3, 3), 2.0)
    values[0, 1] = 0.0
    assert np.all(product_closure(make_kernel(values)).values == 0.0)


@pytest.mark.parametrize("diagonal", [0.5, 0.0])
def test_product_closure_with_diagonal_below_one_vanishes(diagonal):
    values = np.full((3, 3), 2.0)
    values[1, 1] = diagonal
    closed = product_closure(Kernel(PointSet.of_size(3), values))
    assert np.all(closed.values == 0.0)
    assert defect_scan(DefectKind.SUBMULTIPLICATIVE, closed, tolerance=0.0).holds
    assert product_closure(closed).same_as(closed)


def brute_force_product_closure(values):
    """Smallest path product of length 1..n between every pair."""
    n = values.shape[0]
    best = np.full((n, n), np.inf)
    for length in range(1, n + 1):
        for path in itertools.product(range(n), repeat=length + 1):
            weight = np.prod([values[path[i], path[i + 1]] for i in range(length)])
            best[path[0], path[-1]] = min(best[path[0], path[-1]], weight)
    return best


@pytest.mark.parametrize("seed", range(20))
def test_product_closure_matches_path_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    values = rng.uniform(0.6, 3.0, (3, 3))
    closed = product_closure(Kernel(PointSet.of_size(3), values))
    best = brute_force_product_closure(values)
    if np.any(np.diag(best) < 1.0):
        assert np.all(closed.values == 0.0)
    else:
        np.testing.assert_allclose(closed.values, best, rtol=1e-12)
        assert defect_scan(DefectKind.SUBMULTIPLICATIVE, closed).max_defect <= 1e-12
    assert product_closure(closed).same_as(closed, atol=1e-12)


def test_product_closure_rejects_negative(make_kernel):
    with pytest.raises(DomainError):
        product_closure(make_kernel([[1, -1], [1, 1]]))


def test_verify_ct_on_metric(make_kernel):
    report = verify_corollary_ct(make_kernel([[0, 1, 2], [1, 0, 1], [2, 1, 0]]))
    assert report.hypotheses_hold and report.representation_matches
    assert report.biconditional_holds and report.holds


def test_verify_ct_on_triangle_violator(triangle_violator):
    report = verify_corollary_ct(triangle_violator)
    assert not report.hypotheses_hold
    assert not report.representation_matches
    assert report.representation_error == 3.0
    assert report.biconditional_holds


def test_verify_ct_nonzero_diagonal(make_kernel):
    # subadditive, but H(a,a) = 1 > 0 while any sup of differences vanishes on the diagonal
    report = verify_corollary_ct(make_kernel([[1, 1], [1, 1]]))
    assert report.triangle.holds and not report.zero_diagonal
    assert not report.representation_matches
    assert report.biconditional_holds


def test_verify_ct_negative_cycle(negative_two_cycle):
    report = verify_corollary_ct(negative_two_cycle)
    assert sorted(report.negative_cycle) == ["a", "b"]
    assert report.biconditional_holds and not report.holds


def test_verify_ct_biconditional_on_random_kernels():
    rng = np.random.default_rng(17)
    for _ in range(500):
        n = int(rng.integers(2, 7))
        values = rng.uniform(-0.5, 2.0, (n, n))
        if rng.random() < 0.5:
            np.fill_diagonal(values, 0.0)
        report = verify_corollary_ct(Kernel(PointSet.of_size(n), values))
        assert report.biconditional_holds
