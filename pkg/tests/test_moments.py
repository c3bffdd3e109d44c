import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaosbench import chaos, moments
from chaosbench.chaos import ChaosElement, evaluate_integral, multiply, sample_fields
from chaosbench.errors import DegenerateCovarianceError, InputError
from chaosbench.kernel import ComplexCovariance, basis_kernel, random_kernel, reverse_conjugate, symmetrize_groups

from conftest import mc_close


def exact_moments(f):
    """Oracle through the product formula: (sigma^2, E F^2, E F^3, E F^2 conj F, kappa)."""
    x = ChaosElement.single(symmetrize_groups(f))
    xx = multiply(x, x)
    sq = multiply(x, x.conj())
    s2 = chaos.expect(sq).real
    e2 = chaos.expect(xx)
    third = chaos.expect(multiply(xx, x))
    mixed = chaos.expect(multiply(xx, x.conj()))
    fourth = chaos.expect_product_conj(sq, sq).real
    return s2, e2, third, mixed, fourth - 2 * s2**2 - abs(e2) ** 2


def test_worked_example():
    r = moments.moment_report(basis_kernel([0], [0], 1))
    assert (r.sigma_sq, r.ef2, r.third, r.kappa) == pytest.approx((1, 1, 2, 6), abs=1e-12)
    assert r.A == pytest.approx(2.0)
    assert r.lower_c1 == 1.0
    # E F^2 = E|F|^2 means a real chaos; the moment bound needs lam2 > 0
    assert r.eigenvalues == pytest.approx((1.0, 0.0))
    assert r.upper_moment_form is None
    d = r.to_dict()
    assert d["ef2"] == [1.0, 0.0] and "eq" in d


def test_worked_example_monte_carlo():
    z = sample_fields(1, 1_000_000, seed=3)
    F = evaluate_integral(basis_kernel([0], [0], 1), z).real
    assert mc_close(F**2, 1.0)
    assert mc_close(F**3, 2.0)
    g = F**4 - 2 * (F**2).mean() ** 2 - (F**2).mean() ** 2
    assert mc_close(g, 6.0)


K_SHAPES = [(1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (3, 1), (2, 2), (1, 3), (3, 0)]


@pytest.mark.parametrize("k", range(len(K_SHAPES)))
def test_moments_match_product_formula_oracle(k):
    p, q = K_SHAPES[k]
    for n in (2, 3):
        f = symmetrize_groups(random_kernel(p, q, n, seed=40 + k, stream=n))
        s2, e2, third, mixed, kappa = exact_moments(f)
        got_s2, got_e2 = moments.second_moments(f)
        got_third, got_mixed = moments.third_moments(f)
        assert got_s2 == pytest.approx(s2, rel=1e-12)
        assert abs(got_e2 - e2) <= 1e-12 * s2
        assert abs(got_third - third) <= 1e-10 * s2**1.5
        assert abs(got_mixed - mixed) <= 1e-10 * s2**1.5
        assert moments.kappa_v1(f) == pytest.approx(kappa, rel=1e-9, abs=1e-12)
        assert moments.kappa_v2(f) == pytest.approx(kappa, rel=1e-9, abs=1e-12)


def test_kappa_versions_agree_on_corpus():
    rng = np.random.default_rng(7)
    shapes = [(p, q) for p in range(5) for q in range(5) if 2 <= p + q <= 4]
    for k in range(100):
        p, q = shapes[rng.integers(len(shapes))]
        n = int(rng.integers(2, 5))
        f = symmetrize_groups(random_kernel(p, q, n, seed=k))
        k1, k2 = moments.kappa_v1(f), moments.kappa_v2(f)
        assert abs(k1 - k2) <= 1e-9 * abs(k1)


def test_kappa_monte_carlo():
    f = symmetrize_groups(random_kernel(2, 1, 2, seed=12))
    z = sample_fields(2, 400_000, seed=13)
    F = evaluate_integral(f, z)
    s2, e2 = moments.second_moments(f)
    assert mc_close(np.abs(F) ** 2, s2)
    assert mc_close(F**2, e2)
    # the gap uses exact second moments, so only the fourth moment is random
    assert mc_close(np.abs(F) ** 4, moments.kappa_v1(f) + 2 * s2**2 + abs(e2) ** 2)


def test_lower_c1_spot_values():
    assert moments.lower_c1(1, 1) == 1
    assert moments.lower_c1(2, 0) == 16
    assert moments.lower_c1(0, 2) == 16
    with pytest.raises(InputError):
        moments.lower_c1(1, 0)


def brute_c1(p, q):
    vals = [
        math.comb(p, i) ** 2 * math.comb(q, j) ** 2 * (math.factorial(p) * math.factorial(q)) ** 2
        for i in range(p + 1)
        for j in range(q + 1)
        if 0 < i + j < p + q
    ]
    return min(vals)


@pytest.mark.parametrize("p,q", [(p, q) for p in range(5) for q in range(5) if p + q >= 2])
def test_lower_c1_enumeration(p, q):
    assert moments.lower_c1(p, q) == brute_c1(p, q)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(1, 1), (2, 0), (2, 1), (1, 2), (2, 2), (3, 1), (0, 3)]), st.integers(2, 3), st.integers(0, 10**6))
def test_contraction_lower_bound(shape, n, seed):
    f = symmetrize_groups(random_kernel(*shape, n, seed=seed))
    r = moments.moment_report(f)
    assert r.lower_c1 * r.A <= r.kappa + 1e-9 * max(1, r.kappa)
    assert r.kappa >= -1e-12


def test_central_binomial_sum():
    assert [moments.central_binomial_sum(l) for l in range(1, 5)] == [0, 2, 8, 28]


def test_upper_moment_bound_and_degenerate():
    val = moments.upper_moment_bound(2.0, 0.0, 0.5, 2)
    # lam1 = lam2 = 1
    assert val == pytest.approx(4 * math.sqrt(2) * math.sqrt(2) * math.sqrt(0.5))
    with pytest.raises(DegenerateCovarianceError):
        moments.upper_moment_bound(1.0, 1.0, 0.5, 2)
    # circular case: the general constant is twice the circular one
    s2, kappa = 1.5, 0.3
    circ = moments.bound_1d_circular(s2, kappa + 2 * s2**2, 3)
    assert moments.upper_moment_bound(s2, 0.0, kappa, 3) == pytest.approx(2 * circ)


def test_bound_1d_on_circular_kernel():
    f = symmetrize_groups(random_kernel(2, 1, 3, seed=2))
    r = moments.moment_report(f)
    upper, sqrtA, lower = moments.bound_1d(r)
    assert upper == pytest.approx(r.upper_moment_form)
    assert sqrtA == pytest.approx(math.sqrt(r.A))
    assert lower == pytest.approx(max(abs(r.third), abs(r.third_mixed), r.kappa))
    assert r.ef2 == 0 and r.third == 0


def test_campese_reference():
    assert moments.bound_campese_reference(1.0, 2.0) == 0.0
    g = 0.02
    want = math.sqrt(2) * math.sqrt(g + math.sqrt(0.5 * (2 + g) * g))
    assert moments.bound_campese_reference(1.0, 2 + g) == pytest.approx(want)
    with pytest.raises(DegenerateCovarianceError):
        moments.bound_campese_reference(0.0, 1.0)


def test_fourth_norm_moment_matches_monte_carlo():
    n = 3
    ks = [symmetrize_groups(random_kernel(1, 1, n, seed=1)), symmetrize_groups(random_kernel(2, 1, n, seed=2))]
    z = sample_fields(n, 400_000, seed=4)
    F = np.column_stack([evaluate_integral(k, z) for k in ks])
    norm4 = np.sum(np.abs(F) ** 2, axis=1) ** 2
    assert mc_close(norm4, moments.fourth_norm_moment(ks))
    cov = moments.covariance_of(ks).sigma
    assert mc_close(np.abs(F[:, 0]) ** 2, cov[0, 0].real)
    assert cov[0, 1] == 0


def test_fourth_norm_moment_single_kernel():
    f = symmetrize_groups(random_kernel(2, 2, 2, seed=3))
    s2, e2 = moments.second_moments(f)
    assert moments.fourth_norm_moment([f]) == pytest.approx(moments.kappa_v1(f) + 2 * s2**2 + abs(e2) ** 2)


def test_gaussian_fourth_norm():
    s = ComplexCovariance(np.array([[1.0, 0.5j], [-0.5j, 2.0]]))
    assert moments.gaussian_fourth_norm(s) == pytest.approx(9 + 1 + 4 + 0.5)
    x = moments.sample_cn(s, 400_000, seed=1)
    z = x[:, :2] + 1j * x[:, 2:]
    assert mc_close(np.sum(np.abs(z) ** 2, axis=1) ** 2, 14.5)


def test_bound_multi():
    n = 3
    ks = [symmetrize_groups(random_kernel(1, 2, n, seed=5)), symmetrize_groups(random_kernel(2, 2, n, seed=6))]
    upper, rhs = moments.bound_multi(ks)
    assert upper > 0 and rhs > 0
    own = moments.covariance_of(ks)
    assert moments.bound_multi(ks, own) == (upper, rhs)
    with pytest.raises(InputError):
        moments.bound_multi(ks, ComplexCovariance(np.eye(3, dtype=complex)))


def test_multivariate_gating():
    f1 = symmetrize_groups(random_kernel(5, 1, 2, seed=1))
    f2 = symmetrize_groups(random_kernel(3, 2, 2, seed=2))
    _, pairs = moments.contraction_rhs_multi([f1, f2])
    assert all(t == 0.0 for pr in pairs for t in pr["terms"])
    g1 = symmetrize_groups(random_kernel(2, 2, 2, seed=3))
    g2 = symmetrize_groups(random_kernel(1, 1, 2, seed=4))
    _, pairs = moments.contraction_rhs_multi([g1, g2])
    assert any(t != 0.0 for pr in pairs for t in pr["terms"])


def test_sample_cn_covariance():
    s = ComplexCovariance(np.array([[2.0, 1 + 1j], [1 - 1j, 3.0]]))
    x = moments.sample_cn(s, 200_000, seed=2, index=1)
    emp = np.cov(x, rowvar=False)
    assert np.allclose(emp, s.sigma_prime, atol=0.05)
