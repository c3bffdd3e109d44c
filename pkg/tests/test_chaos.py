import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaosbench import chaos
from chaosbench.chaos import ChaosElement, evaluate_integral, multiply, sample_fields
from chaosbench.errors import InputError
from chaosbench.kernel import basis_kernel, random_kernel, reverse_conjugate, symmetrize_groups

from conftest import mc_close

SHAPES_PF = [(1, 0), (0, 1), (1, 1), (2, 1), (2, 2)]


def test_first_chaos_is_the_field():
    z = sample_fields(3, 5, seed=1)
    f = basis_kernel([1], [], 3)
    assert np.allclose(evaluate_integral(f, z), z[:, 1])
    g = basis_kernel([], [2], 3)
    assert np.allclose(evaluate_integral(g, z), np.conj(z[:, 2]))


def test_worked_example_is_modulus_square_minus_one():
    z = sample_fields(1, 10, seed=2)
    f = basis_kernel([0], [0], 1)
    assert np.allclose(evaluate_integral(f, z), np.abs(z[:, 0]) ** 2 - 1)


def test_distinct_coordinates_factorize():
    z = sample_fields(2, 7, seed=3)
    f = symmetrize_groups(basis_kernel([0, 1], [], 2))
    # sym of e0 (x) e1 has norm 1/sqrt 2; I_{2,0} = 2 * (1/2) Z_0 Z_1
    assert np.allclose(evaluate_integral(f, z), z[:, 0] * z[:, 1])


def test_field_dimension_and_symmetry_checks():
    with pytest.raises(InputError):
        evaluate_integral(basis_kernel([0], [], 2), np.zeros((3, 4)))
    with pytest.raises(InputError):
        evaluate_integral(basis_kernel([0, 1], [], 2), np.zeros((1, 2)))


def test_single_field_returns_scalar():
    f = random_kernel(1, 1, 2, seed=0)
    z = chaos.sample_field(2, seed=4)
    val = evaluate_integral(symmetrize_groups(f), z)
    assert isinstance(val, complex)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_product_formula_shape_matrix(n):
    fields = sample_fields(n, 6, seed=100 + n)
    for a, s1 in enumerate(SHAPES_PF):
        for b, s2 in enumerate(SHAPES_PF):
            f = random_kernel(*s1, n, seed=a, stream=b)
            g = random_kernel(*s2, n, seed=b + 10, stream=a)
            assert chaos.verify_product_formula(f, g, fields) <= 1e-8


def test_product_coefficient_values():
    assert chaos.product_coefficient(1, 1, 1, 1, 1, 1) == 1
    assert chaos.product_coefficient(2, 1, 1, 2, 1, 0) == 4
    assert chaos.product_coefficient(2, 2, 2, 2, 2, 2) == 4


def test_multiply_gives_exact_fourth_moment_of_worked_example():
    x = ChaosElement.single(basis_kernel([0], [0], 1))
    sq = multiply(x, x.conj())
    assert chaos.expect(sq) == pytest.approx(1.0)
    assert chaos.expect_product_conj(sq, sq).real == pytest.approx(9.0)
    cube = multiply(multiply(x, x), x)
    assert chaos.expect(cube) == pytest.approx(2.0)


def test_multiply_matches_pointwise_product():
    n = 2
    z = sample_fields(n, 20, seed=7)
    x = ChaosElement(n, {(1, 1): random_kernel(1, 1, n, seed=1), (2, 0): random_kernel(2, 0, n, seed=2)}, 0.5)
    y = ChaosElement(n, {(0, 1): random_kernel(0, 1, n, seed=3)}, -1j)
    xy = multiply(x, y)
    assert np.allclose(chaos.sample_chaos(xy, z), chaos.sample_chaos(x, z) * chaos.sample_chaos(y, z), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(1, 0), (1, 1), (2, 1), (0, 2), (2, 2)]), st.integers(1, 3), st.integers(0, 10**6))
def test_isometry_exact(shape, n, seed):
    f = symmetrize_groups(random_kernel(*shape, n, seed=seed))
    x = ChaosElement.single(f)
    got = chaos.expect(multiply(x, x.conj())).real
    assert got == pytest.approx(math.factorial(shape[0]) * math.factorial(shape[1]) * f.norm_sq(), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(1, 0), (1, 1), (2, 1), (1, 2), (3, 1)]), st.integers(0, 10**6))
def test_conjugation_via_reverse_kernel(shape, seed):
    f = symmetrize_groups(random_kernel(*shape, 2, seed=seed))
    z = sample_fields(2, 8, seed=seed)
    assert np.allclose(evaluate_integral(reverse_conjugate(f), z), np.conj(evaluate_integral(f, z)), atol=1e-10)


def test_monte_carlo_isometry_and_orthogonality():
    n = 2
    z = sample_fields(n, 200_000, seed=9)
    f = symmetrize_groups(random_kernel(2, 1, n, seed=4))
    g = symmetrize_groups(random_kernel(1, 1, n, seed=5))
    F, G = evaluate_integral(f, z), evaluate_integral(g, z)
    assert mc_close(np.abs(F) ** 2, 2 * f.norm_sq())
    assert mc_close((F * np.conj(G)).real, 0.0)
    assert mc_close(F.real, 0.0)


def test_chaos_element_validation_and_algebra():
    f = random_kernel(1, 1, 2, seed=0)
    with pytest.raises(InputError):
        ChaosElement(2, {(1, 0): f})
    with pytest.raises(InputError):
        ChaosElement(3, {(1, 1): f})
    with pytest.raises(InputError):
        ChaosElement(2, {(0, 0): basis_kernel([], [], 2)})
    x = ChaosElement.single(f)
    y = (x + x).scale(0.5)
    assert y.terms[(1, 1)].allclose(x.terms[(1, 1)])
    assert ChaosElement.single(basis_kernel([], [], 2, 3.0)).constant == 3
    assert x.variance_by_chaos()[(1, 1)] == pytest.approx(symmetrize_groups(f).norm_sq())


def test_sampling_is_seed_deterministic():
    assert np.array_equal(sample_fields(3, 4, seed=1, index=2), sample_fields(3, 4, seed=1, index=2))
    assert not np.array_equal(sample_fields(3, 4, seed=1, index=2), sample_fields(3, 4, seed=1, index=3))
    z = sample_fields(2, 100_000, seed=8)
    assert mc_close(np.abs(z[:, 0]) ** 2, 1.0)
    assert mc_close((z[:, 0] ** 2).real, 0.0)
