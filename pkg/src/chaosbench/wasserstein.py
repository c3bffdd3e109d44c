"""Empirical Wasserstein-1 distances between planar samples.

For two uniform empirical measures with the same number of atoms, W1 is
attained by a permutation, so it equals a min-cost perfect matching under
Euclidean cost.  That matching is solved exactly.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import InputError
from .kernel import ComplexCovariance
from .moments import sample_cn

#: Largest matching size accepted by :func:`w1_exact`.
MAX_COUNT = 8192


@dataclass(frozen=True, eq=False)
class PlanarSample:
    points: np.ndarray  # (count, 2)

    def __post_init__(self):
        raw = np.asarray(self.points)
        if raw.ndim == 1 and np.iscomplexobj(raw):
            raw = np.column_stack([raw.real, raw.imag])
        pts = np.asarray(raw, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"expected (count, 2) points, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise InputError("a sample needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise InputError("sample has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_complex(cls, z) -> "PlanarSample":
        z = np.asarray(z, dtype=np.complex128).reshape(-1)
        return cls(np.column_stack([z.real, z.imag]))

    @property
    def count(self) -> int:
        return self.points.shape[0]


def _pts(a) -> np.ndarray:
    return a.points if isinstance(a, PlanarSample) else PlanarSample(a).points


def matching_cost(a, b) -> tuple[float, np.ndarray]:
    """Minimum mean Euclidean cost over perfect matchings, plus the matching."""
    x, y = _pts(a), _pts(b)
    if x.shape[0] != y.shape[0]:
        raise InputError(f"unequal counts {x.shape[0]} and {y.shape[0]}; resample first")
    if x.shape[0] > MAX_COUNT:
        raise InputError(f"count {x.shape[0]} exceeds the guard of {MAX_COUNT}")
    cost = cdist(x, y)
    rows, cols = linear_sum_assignment(cost)
    return float(math.fsum(cost[rows, cols]) / x.shape[0]), cols


def w1_exact(a, b) -> float:
    return matching_cost(a, b)[0]


def w1_bruteforce(a, b) -> float:
    """Exhaustive minimum over permutations (test oracle, counts <= 8)."""
    x, y = _pts(a), _pts(b)
    if x.shape[0] != y.shape[0]:
        raise InputError("unequal counts")
    if x.shape[0] > 8:
        raise InputError("brute force is limited to 8 points")
    cost = cdist(x, y)
    idx = np.arange(x.shape[0])
    return min(cost[idx, list(perm)].sum() for perm in itertools.permutations(idx)) / x.shape[0]


def w1_1d(a, b) -> float:
    """W1 on the line: mean absolute difference of the sorted samples."""
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    if a.size != b.size:
        raise InputError(f"unequal counts {a.size} and {b.size}")
    return float(np.mean(np.abs(a - b)))


def jackknife_mean(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    m = values.size
    if m < 2:
        raise InputError("jackknife needs at least two replicates")
    total = math.fsum(values)
    loo = (total - values) / (m - 1)
    est = total / m
    se = math.sqrt((m - 1) / m * math.fsum((loo - loo.mean()) ** 2))
    return est, se


def w1_to_gaussian(
    samples,
    sigma: ComplexCovariance,
    seed: int,
    replicates: int,
    debias: bool = False,
    workers: int = 1,
) -> tuple[float, float]:
    """Estimate ``d_W(F, CN(0, sigma))`` from planar draws of ``F``.

    The samples are split into ``replicates`` equal blocks; each block is
    matched against the same number of fresh target draws and the block costs
    are averaged (jackknife standard error).  Two-sample matching is biased
    upward by the target's own sampling noise.  With ``debias=True`` each
    block cost is reduced by the cost of matching two fresh independent target
    blocks of the same size; this removes the noise floor only to first order
    and the result may then be negative.
    """
    if replicates < 2:
        raise InputError("need at least two replicates")
    if sigma.d != 1:
        raise InputError("planar target needs a 1x1 covariance")
    pts = _pts(samples)
    count = pts.shape[0] // replicates
    if count < 1:
        raise InputError("fewer samples than replicates")

    def block_cost(r: int) -> float:
        block = pts[r * count : (r + 1) * count]
        v = w1_exact(block, sample_cn(sigma, count, seed, index=3 * r))
        if debias:
            null_a = sample_cn(sigma, count, seed, index=3 * r + 1)
            null_b = sample_cn(sigma, count, seed, index=3 * r + 2)
            v -= w1_exact(null_a, null_b)
        return v

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(block_cost, range(replicates)))
    else:
        vals = [block_cost(r) for r in range(replicates)]
    est, se = jackknife_mean(vals)
    return (est if debias else max(est, 0.0)), se
