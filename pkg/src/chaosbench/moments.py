"""Exact moments of ``F = I_{p,q}(f)`` and Berry-Esseen bound evaluators.

Every formula here is a finite combination of contraction norms, computed on
the dense kernel.  Constants that are only known to exist (the ``c``, ``c_1``,
``c_2`` of the contraction-form bounds) are never invented: the corresponding
raw quantities are reported instead.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .contraction import contract, contraction_pairs, gated_terms, quantity_A
from .errors import DegenerateCovarianceError, InputError
from .kernel import ComplexCovariance, KernelTensor, inner_product, reverse_conjugate, symmetrize_groups
from .rng import STREAM_CN, generator

comb = math.comb
fact = math.factorial


def second_moments(f: KernelTensor) -> tuple[float, complex]:
    """``(E|F|^2, E[F^2])``."""
    w = fact(f.p) * fact(f.q)
    sigma_sq = w * f.norm_sq()
    if f.p != f.q:
        return sigma_sq, 0j
    return sigma_sq, w * inner_product(f, reverse_conjugate(f))


def third_moments(f: KernelTensor) -> tuple[complex, complex]:
    """``(E[F^3], E[F^2 conj F])``; both vanish unless ``p == q``."""
    if f.p != f.q:
        return 0j, 0j
    p = f.p
    h = reverse_conjugate(f)
    third = mixed = 0j
    for i in range(p + 1):
        c = fact(i) * fact(p - i) * fact(p) ** 2 * comb(p, i) ** 4
        k = symmetrize_groups(contract(f, f, i, p - i))
        third += c * inner_product(k, h)
        mixed += c * inner_product(k, f)
    return complex(third), complex(mixed)


def _theta(f, h, r):
    p, q = f.p, f.q
    w = (fact(p) * fact(q)) ** 2
    return math.fsum(
        comb(p, i) ** 2 * comb(q, r - i) ** 2 * w * contract(f, h, i, r - i).norm_sq()
        for i in range(max(0, r - q), min(p, r) + 1)
    )


def _varphi(f, r):
    p, q = f.p, f.q
    m = min(p, q)
    acc = None
    for i in range(max(0, r - m), min(m, r) + 1):
        j = r - i
        c = comb(p, i) * comb(q, i) * comb(q, j) * comb(p, j) * fact(i) * fact(j)
        k = symmetrize_groups(contract(f, f, i, j)).scale(c)
        acc = k if acc is None else acc + k
    return fact(2 * p - r) * fact(2 * q - r) * acc.norm_sq()


def _varrho(f, h, r):
    p, q = f.p, f.q
    l = p + q
    acc = None
    for i in range(max(0, r - q), min(p, r) + 1):
        j = r - i
        c = comb(p, i) ** 2 * comb(q, j) ** 2 * fact(i) * fact(j)
        k = symmetrize_groups(contract(f, h, i, j)).scale(c)
        acc = k if acc is None else acc + k
    return fact(l - r) ** 2 * acc.norm_sq()


def _varsigma(f, r):
    p, q = f.p, f.q
    m = min(p, q)
    w = (fact(p) * fact(q)) ** 2
    return math.fsum(
        comb(p, i) * comb(q, i) * comb(q, r - i) * comb(p, r - i) * w * contract(f, f, i, r - i).norm_sq()
        for i in range(max(0, r - m), min(m, r) + 1)
    )


def kappa_v1(f: KernelTensor) -> float:
    """Fourth-moment gap ``E|F|^4 - 2(E|F|^2)^2 - |E F^2|^2``, unsymmetrized ``f (x) h`` form."""
    p, q = f.p, f.q
    l, lp = p + q, 2 * min(p, q)
    h = reverse_conjugate(f)
    terms = [_theta(f, h, r) for r in range(1, l)]
    terms += [_varphi(f, r) for r in range(1, lp)]
    if lp >= 1 and p != q:
        terms.append(_varphi(f, lp))
    return float(math.fsum(terms))


def kappa_v2(f: KernelTensor) -> float:
    """The same gap through symmetrized ``f (x)~ h`` and unsymmetrized ``f (x) f`` norms."""
    p, q = f.p, f.q
    l, lp = p + q, 2 * min(p, q)
    h = reverse_conjugate(f)
    terms = [_varrho(f, h, r) for r in range(1, l)]
    terms += [_varsigma(f, r) for r in range(1, lp)]
    if lp >= 1 and p != q:
        terms.append(_varsigma(f, lp))
    return float(math.fsum(terms))


def _psi(f1, h2, r, p1, q1, p2, q2):
    w = fact(p1) * fact(q1) * fact(p2) * fact(q2)
    im, jm = min(p1, p2), min(q1, q2)
    return math.fsum(
        comb(p1, i) * comb(q1, r - i) * comb(q2, r - i) * comb(p2, i) * w * contract(f1, h2, i, r - i).norm_sq()
        for i in range(max(0, r - jm), min(im, r) + 1)
    )


def _phi(f1, f2, r, p1, q1, p2, q2):
    im, jm = min(p1, q2), min(q1, p2)
    acc = None
    for i in range(max(0, r - jm), min(im, r) + 1):
        j = r - i
        c = comb(p1, i) * comb(q1, j) * comb(q2, i) * comb(p2, j) * fact(i) * fact(j)
        k = symmetrize_groups(contract(f1, f2, i, j)).scale(c)
        acc = k if acc is None else acc + k
    return fact(p1 + p2 - r) * fact(q1 + q2 - r) * acc.norm_sq()


def cross_fourth(f1: KernelTensor, f2: KernelTensor) -> float:
    """``Cov(|F1|^2, |F2|^2) - |E F1 conj F2|^2 - |E F1 F2|^2`` as the four-part sum."""
    if f1.n != f2.n:
        raise InputError(f"basis dimension mismatch: {f1.n} vs {f2.n}")
    p1, q1, p2, q2 = f1.p, f1.q, f2.p, f2.q
    l = min(p1, p2) + min(q1, q2)
    lp = min(p1, q2) + min(q1, p2)
    h2 = reverse_conjugate(f2)
    args = (p1, q1, p2, q2)
    terms = []
    if l >= 2:
        terms += [_psi(f1, h2, r, *args) for r in range(1, l)]
    if l >= 1 and (p1, q1) != (p2, q2):
        terms.append(_psi(f1, h2, l, *args))
    if lp >= 2:
        terms += [_phi(f1, f2, r, *args) for r in range(1, lp)]
    if lp >= 1 and (p1, q1) != (q2, p2):
        terms.append(_phi(f1, f2, lp, *args))
    return float(math.fsum(terms))


def eigenvalues(sigma_sq: float, ef2: complex) -> tuple[float, float]:
    r = abs(ef2)
    return 0.5 * (sigma_sq + r), 0.5 * (sigma_sq - r)


def central_binomial_sum(l: int) -> int:
    return sum(comb(2 * r, r) for r in range(1, l))


def lower_c1(p: int, q: int) -> float:
    """``min binom(p,i)^2 binom(q,j)^2 (p! q!)^2`` over ``0 < i + j < p + q``."""
    if p + q < 2:
        raise InputError("lower_c1 needs p + q >= 2")
    w = (fact(p) * fact(q)) ** 2
    return float(min(comb(p, i) ** 2 * comb(q, j) ** 2 * w for i, j in contraction_pairs(p, q)))


@dataclass(frozen=True)
class MomentReport:
    p: int
    q: int
    sigma_sq: float
    ef2: complex
    third: complex
    third_mixed: complex
    kappa: float
    A: float
    lower_c1: float | None
    upper_moment_form: float | None
    lower_raw: float
    eigenvalues: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("ef2", "third", "third_mixed"):
            z = d[key]
            d[key] = [z.real, z.imag]
        d["eigenvalues"] = list(d["eigenvalues"])
        d["eq"] = {
            "sigma_sq": "isometry property",
            "ef2": "isometry property",
            "third": "3moment_1",
            "third_mixed": "3moment_2",
            "kappa": "revised version1",
            "A": "contraction moment",
            "lower_c1": "contraction moment",
            "upper_moment_form": "upper bound 1",
            "lower_raw": "lower bound 1",
        }
        return d


def moment_report(f: KernelTensor) -> MomentReport:
    f = symmetrize_groups(f)
    sigma_sq, ef2 = second_moments(f)
    third, mixed = third_moments(f)
    kappa = kappa_v1(f)
    A = quantity_A(f, reverse_conjugate(f))
    lam1, lam2 = eigenvalues(sigma_sq, ef2)
    report = MomentReport(
        p=f.p,
        q=f.q,
        sigma_sq=sigma_sq,
        ef2=ef2,
        third=third,
        third_mixed=mixed,
        kappa=kappa,
        A=A,
        lower_c1=lower_c1(f.p, f.q) if f.order >= 2 else None,
        upper_moment_form=None,
        lower_raw=max(abs(third), abs(mixed), kappa),
        eigenvalues=(lam1, lam2),
    )
    if f.order >= 2 and lam2 > 0:
        upper, _, _ = bound_1d(report)
        report = MomentReport(**{**asdict(report), "upper_moment_form": upper, "eigenvalues": (lam1, lam2)})
    return report


def upper_moment_bound(sigma_sq: float, ef2: complex, kappa: float, l: int) -> float:
    """``4 sqrt(2) sqrt(sum_{r<l} binom(2r, r)) sqrt(lam1) / lam2 * sqrt(kappa)``."""
    lam1, lam2 = eigenvalues(sigma_sq, ef2)
    if lam2 <= 0:
        raise DegenerateCovarianceError(f"need E|F|^2 > |E F^2| (got {sigma_sq} vs {abs(ef2)})")
    const = 4 * math.sqrt(2) * math.sqrt(central_binomial_sum(l)) * math.sqrt(lam1) / lam2
    return const * math.sqrt(max(kappa, 0.0))


def bound_1d(report: MomentReport) -> tuple[float, float, float]:
    """``(upper_moment, upper_contraction_raw, lower_raw)`` for ``d_W(F, N)``.

    Only ``upper_moment`` carries an explicit constant (see
    :func:`upper_moment_bound`); the other two are the raw quantities whose
    constants are not explicit.
    """
    upper = upper_moment_bound(report.sigma_sq, report.ef2, report.kappa, report.p + report.q)
    return upper, math.sqrt(max(report.A, 0.0)), max(abs(report.third), abs(report.third_mixed), report.kappa)


def bound_1d_circular(sigma_sq: float, fourth: float, l: int) -> float:
    """Bound for the case ``E F^2 = 0``:
    ``(4 / sigma) sqrt(sum binom(2r, r)) sqrt(E|F|^4 - 2 sigma^4)``."""
    if sigma_sq <= 0:
        raise DegenerateCovarianceError("sigma^2 must be positive")
    gap = max(fourth - 2 * sigma_sq**2, 0.0)
    return 4 / math.sqrt(sigma_sq) * math.sqrt(central_binomial_sum(l)) * math.sqrt(gap)


def bound_campese_reference(sigma_sq: float, fourth: float) -> float:
    """Earlier comparison bound ``(sqrt 2 / sigma) sqrt(g + sqrt(E|F|^4 g / 2))``
    with ``g = E|F|^4 - 2 sigma^4``; kept only to compare rates."""
    if sigma_sq <= 0:
        raise DegenerateCovarianceError("sigma^2 must be positive")
    gap = max(fourth - 2 * sigma_sq**2, 0.0)
    return math.sqrt(2) / math.sqrt(sigma_sq) * math.sqrt(gap + math.sqrt(0.5 * fourth * gap))


def gaussian_fourth_norm(sigma: ComplexCovariance) -> float:
    """``E||Z||^4 = (sum_j S_jj)^2 + sum_{j,r} |S_jr|^2`` for ``Z ~ CN(0, S)``."""
    s = sigma.sigma
    return float(np.trace(s).real ** 2 + np.sum(np.abs(s) ** 2))


def covariance_of(kernels) -> ComplexCovariance:
    """``E[F conj F']`` for ``F_j = I(f_j)``; only equal shapes correlate."""
    d = len(kernels)
    s = np.zeros((d, d), dtype=np.complex128)
    for a, fa in enumerate(kernels):
        for b, fb in enumerate(kernels):
            if fa.shape == fb.shape:
                s[a, b] = fact(fa.p) * fact(fa.q) * inner_product(fa, fb)
    return ComplexCovariance(s)


def fourth_norm_moment(kernels) -> float:
    """``E||F||^4`` assembled pairwise from :func:`cross_fourth` and second moments."""
    kernels = [symmetrize_groups(f) for f in kernels]
    total = []
    for fa in kernels:
        sa, _ = second_moments(fa)
        for fb in kernels:
            sb, _ = second_moments(fb)
            c = fact(fa.p) * fact(fa.q) * inner_product(fa, fb) if fa.shape == fb.shape else 0j
            e = 0j
            if (fa.p, fa.q) == (fb.q, fb.p):
                e = fact(fa.p) * fact(fa.q) * inner_product(fa, reverse_conjugate(fb))
            total.append(cross_fourth(fa, fb) + sa * sb + abs(c) ** 2 + abs(e) ** 2)
    return float(math.fsum(total))


def contraction_rhs_multi(kernels) -> tuple[float, list]:
    """Bracketed contraction sum of the vector bound, constant omitted.

    Returns the total and, for every ordered pair ``(r, j)`` with ``r != j``, the
    four gated terms (``0.0`` exactly when the dominance indicator is false).
    """
    kernels = [symmetrize_groups(f) for f in kernels]
    hs = [reverse_conjugate(f) for f in kernels]
    parts = [quantity_A(f, h) for f, h in zip(kernels, hs)]
    pairs = []
    for r, (fr, hr) in enumerate(zip(kernels, hs)):
        for j, (fj, hj) in enumerate(zip(kernels, hs)):
            if j == r:
                continue
            terms = gated_terms(fr, hr, fj, hj)
            pairs.append({"r": r, "j": j, "terms": terms})
            parts.extend(terms)
    return float(math.fsum(parts)), pairs


def bound_multi(kernels, sigma: ComplexCovariance | None = None) -> tuple[float, float]:
    """``(upper, rhs_contraction_raw)`` for a vector of integrals.

    ``upper = 2 sqrt(d lam_max) / lam_min * sqrt(E||F||^4 - E||Z||^4)``.  The
    hypothesis ``E[F F'] = 0`` is the caller's responsibility.  When ``sigma`` is
    omitted the kernels' own covariance is used.
    """
    kernels = list(kernels)
    if sigma is None:
        sigma = covariance_of(kernels)
    if sigma.d != len(kernels):
        raise InputError(f"sigma is {sigma.d}x{sigma.d} for {len(kernels)} kernels")
    eig = sigma.eigenvalues()
    if eig.min() <= 0:
        raise InputError("sigma must be positive definite")
    gap = fourth_norm_moment(kernels) - gaussian_fourth_norm(sigma)
    upper = 2 * math.sqrt(sigma.d * eig.max()) / eig.min() * math.sqrt(max(gap, 0.0))
    rhs, _ = contraction_rhs_multi(kernels)
    return upper, rhs


def sample_cn(sigma: ComplexCovariance, count: int, seed: int, index: int = 0) -> np.ndarray:
    """``count`` draws of the realified vector ``(Re Z, Im Z)`` with covariance ``sigma'``."""
    cov = sigma.sigma_prime
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-12:
        raise InputError("sigma' is indefinite")
    root = v * np.sqrt(np.clip(w, 0.0, None))
    g = generator(seed, STREAM_CN, index).standard_normal((count, cov.shape[0]))
    return g @ root.T
