"""Pathwise complex multiple Wiener-Ito integrals on a truncated basis.

A realization of the isonormal field on ``span(e_1..e_n)`` is a vector of
``n`` i.i.d. circular complex Gaussians ``Z_k = Z(e_k)`` with ``E|Z_k|^2 = 1``.
For a group-symmetric kernel ``f`` of shape ``(p, q)``,

    I_{p,q}(f) = sum_{k_1..k_p, l_1..l_q} f[k; l] prod_m Hn_{a_m, b_m}(Z_m),

where ``a_m`` (``b_m``) counts how often ``m`` occurs among the unbarred
(barred) indices and ``Hn_{a,b}(z) = 2^{-(a+b)/2} H_{a,b}(sqrt(2) z)``.  Summing
over ordered index tuples absorbs the multiplicity ``p! q! / (a! b!)`` of each
symmetrized basis tensor.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from . import hermite
from .contraction import contract
from .errors import InputError
from .kernel import KernelTensor, inner_product, reverse_conjugate, symmetrize_groups
from .rng import STREAM_FIELD, complex_normal, generator

# bound on the gathered (fields x patterns x slots) block per evaluation chunk
_GATHER_BUDGET = 2**23


@dataclass(frozen=True, eq=False)
class GaussianField:
    n: int
    z: np.ndarray
    seed: int
    index: int = 0


def sample_fields(n: int, count: int, seed: int, index: int = 0) -> np.ndarray:
    """``count`` independent fields as a ``(count, n)`` array."""
    if n < 1:
        raise InputError("n must be >= 1")
    return complex_normal(generator(seed, STREAM_FIELD, index), (count, n))


def sample_field(n: int, seed: int, index: int = 0) -> GaussianField:
    z = sample_fields(n, 1, seed, index)[0]
    z.setflags(write=False)
    return GaussianField(n, z, seed, index)


@dataclass(frozen=True)
class _Plan:
    coef: np.ndarray  # (m,) aggregated coefficients per index-multiset pattern
    K: np.ndarray  # (m, l) basis index per slot
    A: np.ndarray  # (m, l) unbarred multiplicity, nonzero only at first occurrence
    B: np.ndarray  # (m, l) barred multiplicity, ditto


_plans: "weakref.WeakKeyDictionary[KernelTensor, _Plan]" = weakref.WeakKeyDictionary()


def _build_plan(f: KernelTensor) -> _Plan:
    p, q, n, l = f.p, f.q, f.n, f.order
    if l == 0:
        empty = np.zeros((1, 0), dtype=np.int64)
        return _Plan(f.flat.copy(), empty, empty, empty)
    idx = np.indices(f.coeffs.shape).reshape(l, -1).T
    canon = np.concatenate([np.sort(idx[:, :p], axis=1), np.sort(idx[:, p:], axis=1)], axis=1)
    keys = np.ravel_multi_index(canon.T, f.coeffs.shape)
    ukeys, inverse = np.unique(keys, return_inverse=True)
    flat = f.flat
    coef = np.bincount(inverse, weights=flat.real) + 1j * np.bincount(inverse, weights=flat.imag)
    K = np.stack(np.unravel_index(ukeys, f.coeffs.shape), axis=1)
    eq = K[:, :, None] == K[:, None, :]
    a = eq[:, :, :p].sum(-1)
    b = eq[:, :, p:].sum(-1)
    first = ~np.tril(eq, k=-1).any(-1)
    keep = np.abs(coef) > 0
    return _Plan(
        coef[keep],
        K[keep],
        np.where(first, a, 0)[keep],
        np.where(first, b, 0)[keep],
    )


def _plan(f: KernelTensor) -> _Plan:
    plan = _plans.get(f)
    if plan is None:
        plan = _plans[f] = _build_plan(f)
    return plan


def _as_field_array(field, n: int) -> tuple[np.ndarray, bool]:
    z = field.z if isinstance(field, GaussianField) else np.asarray(field, dtype=np.complex128)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != n:
        raise InputError(f"field dimension {z.shape[1]} does not match kernel n={n}")
    return z, single


def evaluate_integral(f: KernelTensor, field, check_symmetric: bool = True):
    """``I_{p,q}(f)`` on one field (returns complex) or a batch ``(N, n)`` (returns array)."""
    z, single = _as_field_array(field, f.n)
    if check_symmetric and not f.is_symmetric():
        raise InputError("kernel is not group-symmetric; symmetrize it first")
    plan = _plan(f)
    out = np.zeros(z.shape[0], dtype=np.complex128)
    if plan.coef.size:
        if f.order == 0:
            out[:] = plan.coef[0]
        else:
            table = hermite.normalized_hermite(z, f.p, f.q)  # (N, n, p+1, q+1)
            per_chunk = max(1, _GATHER_BUDGET // max(1, plan.coef.size * f.order))
            for start in range(0, z.shape[0], per_chunk):
                t = table[start : start + per_chunk]
                factors = t[:, plan.K, plan.A, plan.B]  # (N, m, l)
                out[start : start + per_chunk] = np.prod(factors, axis=-1) @ plan.coef
    return complex(out[0]) if single else out


def product_coefficient(a: int, b: int, c: int, d: int, i: int, j: int) -> int:
    return math.comb(a, i) * math.comb(d, i) * math.comb(b, j) * math.comb(c, j) * math.factorial(i) * math.factorial(j)


def product_terms(f: KernelTensor, g: KernelTensor):
    """Expansion ``I(f) I(g) = sum coef * I(f (x)_{i,j} g)`` as ``[(i, j, coef, kernel)]``.

    Kernels are group-symmetrized; inputs are assumed symmetric.
    """
    a, b, c, d = f.p, f.q, g.p, g.q
    terms = []
    for i in range(min(a, d) + 1):
        for j in range(min(b, c) + 1):
            coef = product_coefficient(a, b, c, d, i, j)
            terms.append((i, j, coef, symmetrize_groups(contract(f, g, i, j))))
    return terms


def verify_product_formula(f: KernelTensor, g: KernelTensor, field) -> float:
    """Max ``|I(f) I(g) - sum_{i,j} coef I(f (x)_{i,j} g)|`` over the given field(s).

    Both kernels are group-symmetrized first.
    """
    if f.n != g.n:
        raise InputError(f"basis dimension mismatch: {f.n} vs {g.n}")
    f, g = symmetrize_groups(f), symmetrize_groups(g)
    lhs = np.atleast_1d(evaluate_integral(f, field, False) * evaluate_integral(g, field, False))
    rhs = np.zeros_like(lhs)
    for _, _, coef, k in product_terms(f, g):
        rhs = rhs + coef * np.atleast_1d(evaluate_integral(k, field, False))
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True, eq=False)
class ChaosElement:
    """Finite chaos expansion ``constant + sum_{(p,q)} I_{p,q}(terms[(p,q)])``."""

    n: int
    terms: dict = field(default_factory=dict)
    constant: complex = 0j

    def __post_init__(self):
        clean = {}
        for pq, k in self.terms.items():
            if k.n != self.n:
                raise InputError(f"term {pq} has n={k.n}, element has n={self.n}")
            if tuple(pq) != (k.p, k.q):
                raise InputError(f"term key {pq} does not match kernel shape {(k.p, k.q)}")
            if k.order == 0:
                raise InputError("put the (0,0) term in `constant`")
            clean[(k.p, k.q)] = symmetrize_groups(k)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "constant", complex(self.constant))

    @classmethod
    def single(cls, f: KernelTensor) -> "ChaosElement":
        if f.order == 0:
            return cls(f.n, {}, complex(f.flat[0]))
        return cls(f.n, {(f.p, f.q): f})

    def __add__(self, other: "ChaosElement") -> "ChaosElement":
        if self.n != other.n:
            raise InputError("dimension mismatch")
        terms = dict(self.terms)
        for pq, k in other.terms.items():
            terms[pq] = terms[pq] + k if pq in terms else k
        return ChaosElement(self.n, terms, self.constant + other.constant)

    def scale(self, c: complex) -> "ChaosElement":
        return ChaosElement(self.n, {pq: k.scale(c) for pq, k in self.terms.items()}, c * self.constant)

    def conj(self) -> "ChaosElement":
        terms = {}
        for k in self.terms.values():
            h = reverse_conjugate(k)
            terms[(h.p, h.q)] = h
        return ChaosElement(self.n, terms, np.conj(self.constant))

    def variance_by_chaos(self) -> dict:
        return {
            pq: math.factorial(pq[0]) * math.factorial(pq[1]) * k.norm_sq() for pq, k in self.terms.items()
        }


def multiply(x: ChaosElement, y: ChaosElement) -> ChaosElement:
    """Exact chaos expansion of the product ``x * y`` via the product formula."""
    if x.n != y.n:
        raise InputError("dimension mismatch")
    n = x.n
    constant = x.constant * y.constant
    acc: dict = {}

    def add(k: KernelTensor, c: complex):
        nonlocal constant
        if k.order == 0:
            constant += c * complex(k.flat[0])
            return
        key = (k.p, k.q)
        acc[key] = acc[key] + k.scale(c) if key in acc else k.scale(c)

    for f in x.terms.values():
        add(f, y.constant)
    for g in y.terms.values():
        add(g, x.constant)
    for f in x.terms.values():
        for g in y.terms.values():
            for _, _, coef, k in product_terms(f, g):
                add(k, coef)
    return ChaosElement(n, acc, constant)


def expect(x: ChaosElement) -> complex:
    return x.constant


def expect_product_conj(x: ChaosElement, y: ChaosElement) -> complex:
    """``E[x conj(y)]`` by the isometry."""
    total = x.constant * np.conj(y.constant)
    for pq, f in x.terms.items():
        g = y.terms.get(pq)
        if g is not None:
            total += math.factorial(pq[0]) * math.factorial(pq[1]) * inner_product(f, g)
    return complex(total)


def sample_chaos(elem: ChaosElement, field):
    z, single = _as_field_array(field, elem.n)
    out = np.full(z.shape[0], elem.constant, dtype=np.complex128)
    for f in elem.terms.values():
        out += evaluate_integral(f, z, check_symmetric=False)
    return complex(out[0]) if single else out
