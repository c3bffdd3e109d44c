"""Built-in invariant suite behind ``chaosbench selftest``.

Each check carries a tag naming the identity it exercises, so a failing run
points at the violated formula.  Checks read module attributes at call time,
which lets tests inject corrupted implementations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import chaos, contraction, hermite, kernel, moments, wasserstein

SUITES = ("hermite", "contraction", "product", "isometry", "expansion", "moments", "wasserstein")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    tag: str
    passed: bool
    value: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} [{self.suite}] {self.tag}: {self.value:.3e} (tol {self.tolerance:.0e})"


def _points(count: int, radius: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(count))
    return r * np.exp(2j * np.pi * rng.random(count))


def _hermite_checks():
    z = _points(50, 3.0, 101)
    H = hermite.hermite_values(z, 6, 6)
    a = np.abs(z) ** 2
    zb = np.conj(z)
    anchors = [
        ("H_{1,1}(z)=|z|²−2", H[:, 1, 1], a - 2),
        ("H_{1,2}(z)=z̄(|z|²−4)", H[:, 1, 2], zb * (a - 4)),
        ("H_{2,2}(z)=|z|⁴−8|z|²+8", H[:, 2, 2], a**2 - 8 * a + 8),
        ("H_{p,0}(z)=z^p", H[:, :, 0], z[:, None] ** np.arange(7)),
        ("H_{0,q}(z)=z̄^q", H[:, 0, :], zb[:, None] ** np.arange(7)),
    ]
    for tag, got, want in anchors:
        err = float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))))
        yield tag, err, 1e-12
    # cancellation grows like (1 + |z|)^(p + q)
    deg = np.add.outer(np.arange(7), np.arange(7))
    scale = (1 + np.abs(z))[:, None, None] ** deg
    yield "H_{q,p}=conj H_{p,q}", float(np.max(np.abs(np.swapaxes(H, 1, 2) - np.conj(H)) / scale)), 1e-12
    lam = _points(20, 0.3, 102)
    zz = _points(20, 3.0, 103)
    yield "generating function exp(λz̄+λ̄z−2|λ|²)", generating_function_error(lam, zz, 16), 1e-8


def generating_function_error(lam, z, order: int) -> float:
    """Max ``|sum_{p,q<=order} conj(lam)^p lam^q H_{p,q}(z)/(p!q!) - exp(...)|``."""
    lam, z = np.asarray(lam, dtype=complex), np.asarray(z, dtype=complex)
    H = hermite.hermite_values(z, order, order)
    p = np.arange(order + 1)
    fact = np.array([math.factorial(k) for k in p], dtype=float)
    w = (np.conj(lam)[:, None] ** p / fact)[:, :, None] * (lam[:, None] ** p / fact)[:, None, :]
    series = np.sum(w * H, axis=(1, 2))
    exact = np.exp(lam * np.conj(z) + np.conj(lam) * z - 2 * np.abs(lam) ** 2)
    return float(np.max(np.abs(series - exact)))


def _random_pairs(count: int, seed: int):
    rng = np.random.default_rng(seed)
    shapes = [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 0), (2, 2)]
    for k in range(count):
        n = int(rng.integers(2, 4))
        s1 = shapes[rng.integers(len(shapes))]
        s2 = shapes[rng.integers(len(shapes))]
        f1 = kernel.symmetrize_groups(kernel.random_kernel(*s1, n, seed=seed, stream=2 * k))
        f2 = kernel.symmetrize_groups(kernel.random_kernel(*s2, n, seed=seed, stream=2 * k + 1))
        yield f1, f2


def _contraction_checks():
    cs, comm, naive, bridge, self_ineq, full = [], [], [], [], [], []
    for f1, f2 in _random_pairs(40, 7):
        h1, h2 = kernel.reverse_conjugate(f1), kernel.reverse_conjugate(f2)
        (p1, q1), (p2, q2) = (f1.p, f1.q), (f2.p, f2.q)
        for i in range(min(p1, q2) + 1):
            for j in range(min(q1, p2) + 1):
                c = contraction.contract(f1, f2, i, j)
                cs.append(c.norm() - f1.norm() * f2.norm())
                comm.append(abs(c.norm() - contraction.contract(f2, f1, j, i).norm()))
                naive.append(float(np.max(np.abs(c.coeffs - contraction.contract_naive(f1, f2, i, j).coeffs))))
                lhs = c.norm_sq()
                rhs = 0.5 * contraction.contract(f1, h1, p1 - i, q1 - j).norm_sq()
                rhs += 0.5 * contraction.contract(f2, h2, p2 - j, q2 - i).norm_sq()
                bridge.append(lhs - rhs)
        p, q = f1.p, f1.q
        for i in range(min(p, q) + 1):
            for j in range(min(p, q) + 1):
                lhs = 2 * contraction.contract(f1, f1, i, j).norm_sq()
                rhs = contraction.contract(f1, h1, p - i, q - j).norm_sq()
                rhs += contraction.contract(f1, h1, p - j, q - i).norm_sq()
                self_ineq.append(lhs - rhs)
        full.append(abs(complex(contraction.contract(f1, h1, p, q).flat[0]) - f1.norm_sq()) / f1.norm_sq())
    yield "contraction symmetry inequality ‖f⊗g‖≤‖f‖‖g‖", max(cs), 1e-10
    yield "communicative law ‖f⊗_{i,j}g‖=‖g⊗_{j,i}f‖", max(comm), 1e-12
    yield "norm inequality", max(bridge), 1e-10
    yield "norm inequality 0", max(self_ineq), 1e-10
    yield "matrix contraction = nested-loop contraction", max(naive), 1e-12
    yield "f⊗_{p,q}h = ‖f‖²", max(full), 1e-12


def _product_checks():
    shapes = [(1, 0), (0, 1), (1, 1), (2, 1), (2, 2)]
    worst = 0.0
    for n in (2, 3):
        fields = chaos.sample_fields(n, 4, seed=11, index=n)
        for a, s1 in enumerate(shapes):
            for b, s2 in enumerate(shapes):
                f = kernel.random_kernel(*s1, n, seed=5, stream=10 * a + b)
                g = kernel.random_kernel(*s2, n, seed=6, stream=10 * a + b)
                worst = max(worst, chaos.verify_product_formula(f, g, fields))
    yield "Product_formula", worst, 1e-8


def _isometry_checks():
    iso, conj_err = [], []
    fields = chaos.sample_fields(3, 8, seed=21)
    for k, (p, q) in enumerate([(1, 0), (1, 1), (2, 1), (2, 2), (0, 2)]):
        f = kernel.symmetrize_groups(kernel.random_kernel(p, q, 3, seed=9, stream=k))
        x = chaos.ChaosElement.single(f)
        via_product = chaos.expect(chaos.multiply(x, x.conj()))
        via_norm = math.factorial(p) * math.factorial(q) * f.norm_sq()
        iso.append(abs(via_product - via_norm) / via_norm)
        lhs = chaos.evaluate_integral(kernel.reverse_conjugate(f), fields)
        conj_err.append(float(np.max(np.abs(lhs - np.conj(chaos.evaluate_integral(f, fields))))))
    yield "isometry property E|I(f)|²=p!q!‖f‖²", max(iso), 1e-12
    yield "conj I_{p,q}(f) = I_{q,p}(h)", max(conj_err), 1e-10


def _exact_kappa(f) -> float:
    x = chaos.ChaosElement.single(f)
    sq = chaos.multiply(x, x.conj())
    fourth = chaos.expect_product_conj(sq, sq).real
    s2, e2 = moments.second_moments(f)
    return fourth - 2 * s2**2 - abs(e2) ** 2


def _expansion_checks():
    rel12, rel_oracle = [], []
    rng = np.random.default_rng(31)
    for k, (p, q) in enumerate([(1, 1), (2, 0), (2, 1), (3, 1), (2, 2), (1, 3)]):
        n = int(rng.integers(2, 4))
        f = kernel.symmetrize_groups(kernel.random_kernel(p, q, n, seed=13, stream=k))
        k1, k2 = moments.kappa_v1(f), moments.kappa_v2(f)
        rel12.append(abs(k1 - k2) / max(abs(k1), 1e-300))
        rel_oracle.append(abs(k1 - _exact_kappa(f)) / max(abs(k1), 1e-300))
    yield "revised version1 = revised version2", max(rel12), 1e-9
    yield "revised version1 = product-formula fourth moment", max(rel_oracle), 1e-9


def _moment_checks():
    f = kernel.basis_kernel([0], [0], 1)
    r = moments.moment_report(f)
    err = max(abs(r.sigma_sq - 1), abs(r.ef2 - 1), abs(r.third - 2), abs(r.kappa - 6))
    yield "worked example e₁⊗ē₁: σ²=1, EF²=1, EF³=2, κ=6", float(err), 1e-12
    slack = []
    for k, (p, q) in enumerate([(1, 1), (2, 0), (2, 1), (2, 2), (3, 1)]):
        f = kernel.symmetrize_groups(kernel.random_kernel(p, q, 3, seed=17, stream=k))
        rep = moments.moment_report(f)
        slack.append(rep.lower_c1 * rep.A - rep.kappa)
    yield "contraction moment c₁𝒜 ≤ κ", max(slack), 1e-9


def _wasserstein_checks():
    rng = np.random.default_rng(41)
    worst = 0.0
    for count in range(1, 7):
        a, b = rng.normal(size=(count, 2)), rng.normal(size=(count, 2))
        worst = max(worst, abs(wasserstein.w1_exact(a, b) - wasserstein.w1_bruteforce(a, b)))
    yield "assignment = brute-force permutation minimum", worst, 1e-12


_SUITE_FUNCS = {
    "hermite": _hermite_checks,
    "contraction": _contraction_checks,
    "product": _product_checks,
    "isometry": _isometry_checks,
    "expansion": _expansion_checks,
    "moments": _moment_checks,
    "wasserstein": _wasserstein_checks,
}


def run_checks(filter: str | None = None) -> list[CheckResult]:
    """Run every suite (or those whose name contains ``filter``)."""
    names = [s for s in SUITES if filter is None or filter in s]
    out = []
    for suite in names:
        for tag, value, tol in _SUITE_FUNCS[suite]():
            ok = bool(np.isfinite(value) and value <= tol)
            out.append(CheckResult(suite, tag, ok, float(value), tol))
    return out
