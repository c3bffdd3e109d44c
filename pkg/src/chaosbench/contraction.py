"""(i, j)-contractions of mixed kernels and the aggregate norms built on them.

For ``f`` of shape ``(a, b)`` and ``g`` of shape ``(c, d)``, ``contract(f, g, i, j)``
pairs the last ``i`` unbarred slots of ``f`` with the last ``i`` barred slots of
``g`` and the last ``j`` barred slots of ``f`` with the last ``j`` unbarred slots
of ``g``.  The result has shape ``(a + c - i - j, b + d - i - j)`` with free
slots ordered ``(f unbarred, g unbarred; f barred, g barred)``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import InputError
from .kernel import KernelTensor, reverse_conjugate, symmetrize_groups

H_TOL = 1e-10


def _check_indices(f: KernelTensor, g: KernelTensor, i: int, j: int) -> None:
    if f.n != g.n:
        raise InputError(f"basis dimension mismatch: {f.n} vs {g.n}")
    if not (0 <= i <= min(f.p, g.q)):
        raise InputError(f"i={i} outside [0, min(p_f, q_g)] = [0, {min(f.p, g.q)}]")
    if not (0 <= j <= min(f.q, g.p)):
        raise InputError(f"j={j} outside [0, min(q_f, p_g)] = [0, {min(f.q, g.p)}]")


def contract(f: KernelTensor, g: KernelTensor, i: int, j: int) -> KernelTensor:
    _check_indices(f, g, i, j)
    a, b, c, d = f.p, f.q, g.p, g.q
    f_axes = list(range(a - i, a)) + list(range(a + b - j, a + b))
    g_axes = list(range(c + d - i, c + d)) + list(range(c - j, c))
    out = np.tensordot(f.coeffs, g.coeffs, axes=(f_axes, g_axes))
    # tensordot leaves (f unbarred, f barred, g unbarred, g barred)
    fa, fb, gc = a - i, b - j, c - j
    perm = (
        list(range(fa))
        + list(range(fa + fb, fa + fb + gc))
        + list(range(fa, fa + fb))
        + list(range(fa + fb + gc, out.ndim))
    )
    out = np.transpose(out, perm)
    return KernelTensor(a + c - i - j, b + d - i - j, f.n, out)


def contract_naive(f: KernelTensor, g: KernelTensor, i: int, j: int) -> KernelTensor:
    """Loop-by-loop reference for :func:`contract`; only for small shapes."""
    _check_indices(f, g, i, j)
    a, b, c, d = f.p, f.q, g.p, g.q
    n = f.n
    P, Q = a + c - i - j, b + d - i - j
    out = np.zeros((n,) * (P + Q), dtype=np.complex128)
    F, G = f.coeffs, g.coeffs
    for free in itertools.product(range(n), repeat=P + Q):
        t_f, t_g = free[: a - i], free[a - i : P]
        s_f, s_g = free[P : P + b - j], free[P + b - j :]
        acc = 0j
        for u in itertools.product(range(n), repeat=i):
            for v in itertools.product(range(n), repeat=j):
                acc += F[t_f + u + s_f + v] * G[t_g + v + s_g + u]
        out[free] = acc
    return KernelTensor(P, Q, n, out)


def contract_sym(f: KernelTensor, g: KernelTensor, i: int, j: int) -> KernelTensor:
    return symmetrize_groups(contract(f, g, i, j))


def succ(pq1, pq2) -> bool:
    """Strict componentwise dominance ``pq1 > pq2``."""
    (p1, q1), (p2, q2) = pq1, pq2
    return (p1, q1) != (p2, q2) and p1 >= p2 and q1 >= q2


def contraction_pairs(p: int, q: int):
    """All ``(i, j)`` with ``0 <= i <= p``, ``0 <= j <= q`` and ``0 < i + j < p + q``."""
    return [(i, j) for i in range(p + 1) for j in range(q + 1) if 0 < i + j < p + q]


def self_contraction_sum(f: KernelTensor, h: KernelTensor | None = None) -> float:
    """``sum_{0 < i+j < p+q} ||f (x)_{i,j} h||^2`` with ``h`` the reverse conjugate."""
    if h is None:
        h = reverse_conjugate(f)
    else:
        check_reverse_conjugate(f, h)
    terms = [contract(f, h, i, j).norm_sq() for i, j in contraction_pairs(f.p, f.q)]
    return float(math.fsum(terms))


def check_reverse_conjugate(f: KernelTensor, h: KernelTensor) -> None:
    expected = reverse_conjugate(f)
    if h.shape != expected.shape:
        raise InputError(f"h has shape {h.shape}, reverse conjugate of f has {expected.shape}")
    scale = max(1.0, float(np.max(np.abs(f.coeffs), initial=0.0)))
    if np.max(np.abs(h.coeffs - expected.coeffs), initial=0.0) > H_TOL * scale:
        raise InputError("h is not the reverse complex conjugate of f")


def quantity_A(f1, h1, f2=None, h2=None) -> float:
    """Aggregate squared self-contraction norms.

    With two kernels this is ``S(f1) + S(f2)`` where ``S`` is
    :func:`self_contraction_sum`.  With only ``(f1, h1)`` it is the single
    sum ``S(f1)`` used by the one-dimensional bounds.
    """
    if (f2 is None) != (h2 is None):
        raise InputError("pass both f2 and h2 or neither")
    total = self_contraction_sum(f1, h1)
    if f2 is not None:
        total += self_contraction_sum(f2, h2)
    return total


def gated_terms(f1, h1, f2, h2) -> list[float]:
    """The four dominance-gated cross terms, in order.

    A term is exactly ``0.0`` when its indicator is false; the contraction
    behind it is not evaluated in that case (its indices would be invalid).
    """
    check_reverse_conjugate(f1, h1)
    check_reverse_conjugate(f2, h2)
    p1, q1, p2, q2 = f1.p, f1.q, f2.p, f2.q
    n1, n2 = f1.norm_sq(), f2.norm_sq()
    terms = [0.0, 0.0, 0.0, 0.0]
    if succ((p2, q2), (q1, p1)):
        terms[0] = n1 * contract(f2, h2, p2 - q1, q2 - p1).norm()
    if succ((p2, q2), (p1, q1)):
        terms[1] = n1 * contract(f2, h2, p2 - p1, q2 - q1).norm()
    if succ((p1, q1), (q2, p2)):
        terms[2] = n2 * contract(f1, h1, p1 - q2, q1 - p2).norm()
    if succ((p1, q1), (p2, q2)):
        terms[3] = n2 * contract(f1, h1, p1 - p2, q1 - q2).norm()
    return terms


def quantity_B(f1, h1, f2, h2) -> float:
    return float(math.fsum(gated_terms(f1, h1, f2, h2)))


def quantities(f1: KernelTensor, f2: KernelTensor | None = None) -> dict:
    """Convenience wrapper computing the reverse conjugates internally."""
    h1 = reverse_conjugate(f1)
    if f2 is None:
        return {"A": quantity_A(f1, h1)}
    h2 = reverse_conjugate(f2)
    return {
        "A": quantity_A(f1, h1, f2, h2),
        "B": quantity_B(f1, h1, f2, h2),
        "B_terms": gated_terms(f1, h1, f2, h2),
    }
