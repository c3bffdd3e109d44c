import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from chaosbench import contraction, moments, ou
from chaosbench.chaos import evaluate_integral
from chaosbench.errors import InputError, NumericalError
from chaosbench.kernel import reverse_conjugate

from conftest import mc_close

GRID = [25.0, 50.0, 100.0, 200.0, 400.0]


def test_config_guards():
    cfg = ou.OUConfig(1.0, 8.0)
    assert cfg.steps == ou.DEFAULT_STEPS and cfg.h == pytest.approx(8 / 4096)
    for kw in (dict(gamma=-1.0, T=1.0), dict(gamma=1j, T=1.0), dict(gamma=1.0, T=0.0),
               dict(gamma=1.0, T=1.0, dt=2.0), dict(gamma=1.0, T=10.0, dt=0.5), dict(gamma=1.0, T=1.0, mc_paths=0)):
        with pytest.raises(InputError):
            ou.OUConfig(**kw)


def test_step_coefficients_match_exact_covariances():
    gamma, h = 0.7 + 1.3j, 0.05
    a, c, d = ou._step_coefficients(gamma, h)
    lam = gamma.real
    assert a == pytest.approx(np.exp(-gamma * h))
    var_eta = (1 - math.exp(-2 * lam * h)) / (2 * lam)
    assert abs(c) ** 2 + d**2 == pytest.approx(var_eta)
    # cross moment E[eta conj(zeta_h)] = int_0^h e^{-gamma (h - s)} ds
    assert c * math.sqrt(h) == pytest.approx((1 - np.exp(-gamma * h)) / gamma)


def test_closed_forms_match_quadrature():
    for lam in (0.5, 1.0, 2.0):
        for T in (0.5, 3.0, 25.0, 400.0):
            q, c = ou.ou_exact_quantities(lam, T), ou.ou_closed_forms(lam, T)
            for key in ("sigma_sq", "A", "third_mixed", "kappa"):
                assert q[key] == pytest.approx(c[key], rel=1e-10)
            assert q["quad_error"] < 1e-10 * q["kappa"]


def test_quadrature_integrands_match_symbolic():
    x, T, lam = sp.symbols("x T lam", positive=True)
    m1 = sp.integrate((T - x) * x * sp.exp(-2 * lam * x), (x, 0, T))
    m2 = sp.integrate((T - x) * x**2 * sp.exp(-2 * lam * x), (x, 0, T))
    vals = {T: 7.0, lam: 1.3}
    q = ou.ou_exact_quantities(1.3, 7.0)
    assert q["third_mixed"] == pytest.approx(float(2 * m1.subs(vals) / 7.0**1.5), rel=1e-12)
    assert q["kappa"] - q["A"] == pytest.approx(float(4 * m2.subs(vals) / 49.0), rel=1e-12)
    t = sp.symbols("t", positive=True)
    g = (1 - sp.exp(-2 * lam * t)) / (2 * lam) * (1 - sp.exp(-2 * lam * (T - t))) ** 2
    a10 = sp.integrate(sp.expand(g), (t, 0, T))
    want = 2 * 2 * a10 / (4 * lam**2 * T**2)  # the mirror term integrates to the same value
    assert q["A"] == pytest.approx(float(want.subs(vals)), rel=1e-12)


def test_sigma_sq_and_normalization():
    assert ou.sigma_sq_exact(1.0, 1e9) == pytest.approx(0.5)
    assert ou.normalization(2.0, 3.0) == pytest.approx(2 * 2.0 * ou.sigma_sq_exact(2.0, 3.0))
    with pytest.raises(InputError):
        ou.ou_exact_quantities(0.0, 1.0)


def test_cell_projection_matches_quadrature():
    lam, T = 1.0, 4.0
    # the imaginary part of gamma must not change any quantity
    f = ou.discretize_psi(lam + 0.5j, T, 2000)
    ex = ou.ou_exact_quantities(lam, T)
    s2, _ = moments.second_moments(f)
    assert abs(s2 - ex["sigma_sq"]) <= 1e-3
    A = contraction.quantity_A(f, reverse_conjugate(f))
    assert A == pytest.approx(ex["A"], rel=1e-3)
    assert moments.kappa_v1(f) == pytest.approx(ex["kappa"], rel=1e-3)
    assert abs(moments.third_moments(f)[1]) == pytest.approx(ex["third_mixed"], rel=1e-3)


def test_discretize_errors_and_grid_shape():
    g = ou.discretize_psi(1.0, 2.0, 8, "grid")
    assert (g.p, g.q, g.n) == (1, 1, 8)
    assert np.all(np.diag(g.coeffs) == 0) and np.all(np.triu(g.coeffs) == 0)
    with pytest.raises(InputError):
        ou.discretize_psi(1.0, 2.0, 8, "midpoint")


def _euler_kernel(gamma, T, m):
    # the Euler sum T^{-1/2} sum conj(Z_k) d zeta_k written as a (1,1) kernel in W = d zeta / sqrt h
    h = T / m
    lag = np.arange(m)[:, None] - np.arange(m)[None, :]
    lower = lag > 0
    return np.where(lower, (h / math.sqrt(T)) * (1 - np.conj(gamma) * h) ** np.where(lower, lag - 1, 0), 0)


@pytest.mark.parametrize("gamma", [1.0, 0.8 + 2.0j])
def test_euler_path_against_grid_kernel(gamma):
    T, paths = 4.0, 48
    errs, l2 = [], []
    for dt in (2.0**-6, 2.0**-8):
        cfg = ou.OUConfig(gamma, T, dt=dt, mc_paths=paths, seed=3)
        path = ou.simulate_ou(cfg, scheme="euler")
        w = path.dzeta / math.sqrt(cfg.h)
        k = ou.discretize_psi(gamma, T, cfg.steps, "grid")
        via_kernel = evaluate_integral(k, w, check_symmetric=False)
        f = ou.statistic_ft(path)
        # exact identity with the Euler kernel, first-order gap to the grid kernel
        eul = k.__class__(1, 1, cfg.steps, _euler_kernel(gamma, T, cfg.steps))
        assert np.allclose(evaluate_integral(eul, w, check_symmetric=False), f, atol=1e-10)
        errs.append(np.sqrt(np.mean(np.abs(f - via_kernel) ** 2)))
        l2.append(np.linalg.norm(eul.coeffs - k.coeffs))
    assert 3.0 < l2[0] / l2[1] < 5.0
    assert 2.5 < errs[0] / errs[1] < 6.0


def test_statistics_agree_with_stored_paths():
    cfg = ou.OUConfig(1 + 1j, 3.0, dt=3.0 / 256, mc_paths=10, seed=4)
    path = ou.simulate_ou(cfg)
    f, g = ou.simulate_statistics(cfg)
    assert np.allclose(ou.statistic_ft(path), f, rtol=1e-12, atol=1e-13)
    assert np.allclose(ou.estimator(path), g, rtol=1e-10)
    with pytest.raises(InputError):
        ou.simulate_ou(cfg, scheme="milstein")


def test_storage_guard_and_degenerate_estimator(monkeypatch):
    cfg = ou.OUConfig(1.0, 1.0, dt=1 / 64, mc_paths=4)
    monkeypatch.setattr(ou, "MAX_STORED", 10)
    with pytest.raises(InputError):
        ou.simulate_ou(cfg)
    z = np.zeros((1, 65), dtype=complex)
    with pytest.raises(NumericalError):
        ou.estimator(ou.OUPath(cfg, z, np.zeros((1, 64), dtype=complex)))
    with pytest.raises(InputError):
        ou.statistic_ft(ou.OUPath(cfg, z, None))


def test_exact_scheme_marginals():
    gamma, T = 0.5 + 1.0j, 2.0
    cfg = ou.OUConfig(gamma, T, dt=T / 64, mc_paths=40_000, seed=5)
    path = ou.simulate_ou(cfg)
    zT = path.z[:, -1]
    assert mc_close(np.abs(zT) ** 2, (1 - math.exp(-2 * 0.5 * T)) / (2 * 0.5))
    assert mc_close(zT**2, 0.0)


def test_statistic_variance_mc():
    lam, T = 1.0, 5.0
    cfg = ou.OUConfig(lam + 3j, T, dt=T / 4096, mc_paths=16_000, seed=6)
    f, _ = ou.simulate_statistics(cfg)
    assert mc_close(np.abs(f) ** 2, ou.sigma_sq_exact(lam, T))
    assert mc_close(f, 0.0)


def test_estimator_is_consistent():
    gamma = 1.0 + 0.5j
    cfg = ou.OUConfig(gamma, 100.0, dt=100.0 / 4096, mc_paths=500, seed=7)
    _, g = ou.simulate_statistics(cfg)
    assert abs(np.median(g.real) - 1.0) < 0.1
    assert abs(np.median(g.imag) - 0.5) < 0.1


def test_seed_controls_paths():
    cfg = ou.OUConfig(1.0, 1.0, dt=1 / 32, mc_paths=3, seed=1)
    a, b = ou.simulate_statistics(cfg)[0], ou.simulate_statistics(cfg)[0]
    assert np.array_equal(a, b)
    other = ou.simulate_statistics(ou.OUConfig(1.0, 1.0, dt=1 / 32, mc_paths=3, seed=2))[0]
    assert not np.array_equal(a, other)


@settings(max_examples=30)
@given(st.floats(-2, 2), st.floats(0.1, 5))
def test_fit_slope_recovers_power_law(k, c):
    x = np.array(GRID)
    s, r = ou.fit_slope(x, c * x**k)
    assert s == pytest.approx(k, abs=1e-9) and r < 1e-6


def test_fit_slope_nonpositive():
    assert math.isnan(ou.fit_slope([1, 2, 3], [1, 0, 2])[0])


def test_analytic_rate_study():
    study = ou.rate_study(1.0, GRID, monte_carlo=False)
    assert abs(study.slopes["sqrt_A"][0] + 0.5) <= 0.02
    assert abs(study.slopes["upper_moment"][0] + 0.5) <= 0.02
    assert "w1_estimate" not in study.slopes
    text = study.to_csv().splitlines()
    assert text[0] == ",".join(ou.CSV_COLUMNS)
    assert len(text) == 6
    assert all(math.isnan(v) for v in study.column("w1_estimate"))


def test_normalized_bounds():
    up, camp = ou.normalized_bounds(1.0, 100.0)
    ex = ou.ou_exact_quantities(1.0, 100.0)
    n = ou.normalization(1.0, 100.0)
    assert up == pytest.approx(2 * moments.bound_1d_circular(ex["sigma_sq"] / n, ex["kappa"] / n**2 + 2 * (ex["sigma_sq"] / n) ** 2, 2))
    assert camp > 0


def test_rate_study_validation():
    for grid in ([1, 2, 3], [1, 3, 2, 4]):
        with pytest.raises(InputError):
            ou.rate_study(1.0, grid, monte_carlo=False)
    with pytest.raises(InputError):
        ou.rate_study(0.0, [1, 2, 3, 4], monte_carlo=False)


def test_small_mc_rate_study_is_reproducible():
    kw = dict(paths=256, replicates=4, steps=128, seed=9)
    a = ou.rate_study(1.0, [2, 4, 8, 16], **kw)
    b = ou.rate_study(1.0, [2, 4, 8, 16], workers=2, **kw)
    assert a.to_csv() == b.to_csv()
    assert np.all(a.column("w1_estimate") > 0)
    assert np.all(a.column("w1_stderr") > 0)
