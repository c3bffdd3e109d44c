"""Dense coordinate kernels for mixed symmetric tensor products.

A kernel of shape ``(p, q, n)`` holds the coordinates of an element of
``H^{(.)p} (x) H^{(.)q}`` over the first ``n`` vectors of an orthonormal
basis.  Axes ``0..p-1`` are the unbarred (holomorphic) slots and axes
``p..p+q-1`` the barred ones.  Coordinates are stored row-major, unbarred
indices outermost.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .rng import generator

#: Guard on the number of dense coefficients a kernel may carry.
MAX_COEFFS = 10**7

#: Above this many group permutations, symmetrization switches to sorting.
PERMUTATION_LIMIT = 10_000

RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class KernelTensor:
    p: int
    q: int
    n: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        arr = arr.reshape((self.n,) * (self.p + self.q))
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def order(self) -> int:
        return self.p + self.q

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.p, self.q, self.n)

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def norm_sq(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def scale(self, c: complex) -> "KernelTensor":
        return KernelTensor(self.p, self.q, self.n, c * self.coeffs)

    def __add__(self, other: "KernelTensor") -> "KernelTensor":
        _check_same_shape(self, other)
        return KernelTensor(self.p, self.q, self.n, self.coeffs + other.coeffs)

    def __sub__(self, other: "KernelTensor") -> "KernelTensor":
        _check_same_shape(self, other)
        return KernelTensor(self.p, self.q, self.n, self.coeffs - other.coeffs)

    def allclose(self, other: "KernelTensor", rtol=RTOL, atol=1e-14) -> bool:
        return self.shape == other.shape and np.allclose(
            self.coeffs, other.coeffs, rtol=rtol, atol=atol
        )

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        sym = symmetrize_groups(self)
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        return bool(np.max(np.abs(sym.coeffs - self.coeffs), initial=0.0) <= atol * scale)


def _check_same_shape(f: KernelTensor, g: KernelTensor) -> None:
    if f.shape != g.shape:
        raise InputError(f"kernel shape mismatch: {f.shape} vs {g.shape}")


def make_kernel(p: int, q: int, n: int, coeffs) -> KernelTensor:
    """Wrap ``coeffs`` (length ``n**(p+q)``) as a kernel without symmetrizing."""
    if p < 0 or q < 0:
        raise InputError("p and q must be non-negative")
    if n < 1:
        raise InputError("basis dimension n must be >= 1")
    size = n ** (p + q)
    if size > MAX_COEFFS:
        raise InputError(f"n^(p+q) = {size} exceeds the guard of {MAX_COEFFS}")
    arr = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if arr.size != size:
        raise InputError(f"expected {size} coefficients for (p,q,n)={p, q, n}, got {arr.size}")
    return KernelTensor(p, q, n, arr)


def zeros(p: int, q: int, n: int) -> KernelTensor:
    return make_kernel(p, q, n, np.zeros(n ** (p + q)))


def basis_kernel(unbarred, barred, n: int, coeff: complex = 1.0) -> KernelTensor:
    """``coeff * e_{k1} (x) ... (x) conj(e_{l1}) (x) ...`` with 0-based indices."""
    unbarred, barred = tuple(unbarred), tuple(barred)
    arr = np.zeros((n,) * (len(unbarred) + len(barred)), dtype=np.complex128)
    arr[unbarred + barred] = coeff
    return make_kernel(len(unbarred), len(barred), n, arr)


def flat_offset(index, n: int) -> int:
    return int(np.ravel_multi_index(tuple(index), (n,) * len(index)))


def unflatten(offset: int, n: int, order: int) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(offset, (n,) * order))


def _group_perm_count(p: int, q: int) -> int:
    return math.factorial(p) * math.factorial(q)


def symmetrize_groups(f: KernelTensor) -> KernelTensor:
    """Average ``f`` over permutations of the unbarred slots and, separately,
    of the barred slots.  The two groups are never mixed."""
    p, q = f.p, f.q
    if p <= 1 and q <= 1:
        return f
    if _group_perm_count(p, q) <= PERMUTATION_LIMIT:
        return KernelTensor(p, q, f.n, _symmetrize_by_permutation(f.coeffs, p, q))
    return KernelTensor(p, q, f.n, _symmetrize_by_sorting(f.coeffs, p, q))


def _symmetrize_by_permutation(arr: np.ndarray, p: int, q: int) -> np.ndarray:
    # S_p x S_q is a direct product, so average over each factor in turn
    l = p + q
    for lo, hi in ((0, p), (p, l)):
        if hi - lo < 2:
            continue
        acc = np.zeros_like(arr)
        perms = list(itertools.permutations(range(lo, hi)))
        for sp in perms:
            acc += np.transpose(arr, tuple(range(lo)) + sp + tuple(range(hi, l)))
        arr = acc / len(perms)
    return arr


def _symmetrize_by_sorting(arr: np.ndarray, p: int, q: int) -> np.ndarray:
    n = arr.shape[0] if arr.ndim else 1
    idx = np.indices(arr.shape).reshape(arr.ndim, -1).T
    canon = np.concatenate([np.sort(idx[:, :p], axis=1), np.sort(idx[:, p:], axis=1)], axis=1)
    keys = np.ravel_multi_index(canon.T, (n,) * arr.ndim)
    _, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    flat = arr.reshape(-1)
    sums = np.bincount(inverse, weights=flat.real) + 1j * np.bincount(inverse, weights=flat.imag)
    return (sums / counts)[inverse].reshape(arr.shape)


def reverse_conjugate(f: KernelTensor) -> KernelTensor:
    """The kernel ``h`` of shape ``(q, p)`` with ``h(t; s) = conj f(s; t)``."""
    axes = tuple(range(f.p, f.p + f.q)) + tuple(range(f.p))
    return KernelTensor(f.q, f.p, f.n, np.conj(np.transpose(f.coeffs, axes)))


def inner_product(f: KernelTensor, g: KernelTensor) -> complex:
    """``<f, g> = sum f * conj(g)``; linear in ``f``, conjugate-linear in ``g``."""
    _check_same_shape(f, g)
    return complex(np.vdot(g.coeffs, f.coeffs))


def random_kernel(p: int, q: int, n: int, seed: int, stream: int = 0) -> KernelTensor:
    """Group-symmetrized kernel with i.i.d. standard complex Gaussian entries
    (``E|c|^2 = 1``) before symmetrization."""
    rng = generator(seed, stream=stream)
    size = n ** (p + q)
    c = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)
    return symmetrize_groups(make_kernel(p, q, n, c))


def _load_mapping(data: dict) -> KernelTensor:
    try:
        p, q, n = int(data["p"]), int(data["q"]), int(data["n"])
        coeffs = [complex(re, im) for re, im in data["coeffs"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed kernel document: {exc}") from exc
    f = make_kernel(p, q, n, coeffs)
    return symmetrize_groups(f) if data.get("symmetrize") is True else f


def kernel_from_json(text: str) -> KernelTensor:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"kernel file is not valid JSON: {exc}") from exc
    return _load_mapping(data)


def load_kernel(path) -> KernelTensor:
    return kernel_from_json(Path(path).read_text())


def kernel_to_dict(f: KernelTensor) -> dict:
    return {
        "p": f.p,
        "q": f.q,
        "n": f.n,
        "coeffs": [[float(c.real), float(c.imag)] for c in f.flat],
    }


def save_kernel(f: KernelTensor, path) -> None:
    Path(path).write_text(json.dumps(kernel_to_dict(f)))


@dataclass(frozen=True, eq=False)
class ComplexCovariance:
    """Hermitian non-negative matrix ``sigma`` with its real ``2d x 2d`` form."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sigma, dtype=np.complex128))
        if s.shape[0] != s.shape[1]:
            raise InputError("covariance must be square")
        if not np.allclose(s, s.conj().T, atol=1e-12, rtol=0):
            raise InputError("covariance must be Hermitian")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        if np.linalg.eigvalsh(self.sigma_prime).min() < -1e-12:
            raise InputError("covariance is not non-negative definite")

    @classmethod
    def scalar(cls, var: float) -> "ComplexCovariance":
        return cls(np.array([[var]]))

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @property
    def sigma_prime(self) -> np.ndarray:
        re, im = self.sigma.real, self.sigma.imag
        return 0.5 * np.block([[re, -im], [im, re]])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.sigma)
