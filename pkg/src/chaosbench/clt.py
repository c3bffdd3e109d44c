"""Chaotic central limit demo.

A demo spec lists per-(p,q) kernel families.  Family member ``n`` is built on
``m = base ** n`` disjoint blocks of basis vectors:

* ``"spread"``: ``sqrt(sigma_sq / m) * sum_k sym(e_{block k})``; contraction
  norms decay like ``m^{-1/2}``, so the sum tends to a complex Gaussian.
* ``"fixed"``: a single block whatever ``n`` is; contraction norms never vanish.
* ``"tail"``: like ``"spread"`` but with variance ``sigma_sq * 2^{-n}``; it
  models the shrinking higher-chaos remainder and is left out of the target.

Spec JSON::

    {"families": [{"p": 1, "q": 1, "sigma_sq": 0.5, "kind": "spread"}, ...],
     "n_grid": [1, 2, 3, 4, 5], "samples": 4096, "base": 2,
     "components": [[...families...], ...]}      # optional, d >= 2

With ``components`` every entry is a family list for one coordinate of a
vector; coordinates use disjoint basis ranges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .chaos import ChaosElement, sample_chaos, sample_fields
from .contraction import contract, contraction_pairs
from .errors import InputError
from .kernel import ComplexCovariance, KernelTensor, basis_kernel, reverse_conjugate, symmetrize_groups
from .moments import second_moments
from .rng import STREAM_TARGET, generator
from .wasserstein import PlanarSample, w1_exact

KINDS = ("spread", "fixed", "tail")
# basis size guard for the densest family kernel
MAX_BASIS = 128


@dataclass(frozen=True)
class Family:
    p: int
    q: int
    sigma_sq: float
    kind: str = "spread"

    @property
    def order(self) -> int:
        return self.p + self.q


def _parse_family(d: dict) -> Family:
    try:
        fam = Family(int(d["p"]), int(d["q"]), float(d["sigma_sq"]), str(d.get("kind", "spread")))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad family entry {d!r}: {exc}") from None
    if fam.kind not in KINDS:
        raise InputError(f"family kind must be one of {KINDS}, got {fam.kind!r}")
    if fam.order < 1:
        raise InputError("families need p + q >= 1")
    if not (math.isfinite(fam.sigma_sq) and fam.sigma_sq >= 0):
        raise InputError(f"sigma_sq must be finite and >= 0, got {fam.sigma_sq}")
    return fam


@dataclass(frozen=True)
class DemoSpec:
    components: tuple  # tuple of tuples of Family
    n_grid: tuple = (1, 2, 3, 4, 5)
    samples: int = 4096
    base: int = 2

    @property
    def d(self) -> int:
        return len(self.components)

    def target_variances(self) -> list[float]:
        return [sum(f.sigma_sq for f in comp if f.kind != "tail") for comp in self.components]


def parse_spec(data: dict) -> DemoSpec:
    if "components" in data:
        comps = data["components"]
    elif "families" in data:
        comps = [data["families"]]
    else:
        raise InputError("spec needs 'families' or 'components'")
    components = []
    for comp in comps:
        fams = tuple(_parse_family(f) for f in comp)
        if not fams:
            raise InputError("empty family list")
        shapes = [(f.p, f.q) for f in fams]
        if len(set(shapes)) != len(shapes):
            raise InputError("each (p, q) may appear once per component")
        components.append(fams)
    spec = DemoSpec(
        tuple(components),
        tuple(int(n) for n in data.get("n_grid", (1, 2, 3, 4, 5))),
        int(data.get("samples", 4096)),
        int(data.get("base", 2)),
    )
    total = sum(spec.target_variances())
    if not (math.isfinite(total) and total > 0):
        raise InputError("the limiting variances must sum to a finite positive value")
    if spec.samples < 2 or spec.base < 2 or not spec.n_grid or min(spec.n_grid) < 0:
        raise InputError("need samples >= 2, base >= 2 and a non-empty n grid of non-negative indices")
    return spec


def load_spec(path) -> DemoSpec:
    with open(path) as fh:
        return parse_spec(json.load(fh))


def compliant_spec() -> DemoSpec:
    return parse_spec(
        {
            "families": [
                {"p": 1, "q": 1, "sigma_sq": 0.5, "kind": "spread"},
                {"p": 2, "q": 1, "sigma_sq": 0.5, "kind": "spread"},
            ]
        }
    )


def violating_spec() -> DemoSpec:
    """Same variances, but contraction norms stay of order one."""
    return parse_spec(
        {
            "families": [
                {"p": 1, "q": 1, "sigma_sq": 0.5, "kind": "fixed"},
                {"p": 2, "q": 1, "sigma_sq": 0.5, "kind": "fixed"},
            ]
        }
    )


def _blocks(fam: Family, spec: DemoSpec, n: int) -> int:
    return 1 if fam.kind == "fixed" else spec.base**n


def _widths(spec: DemoSpec, n: int) -> list[int]:
    return [max(f.order for f in comp) * max(_blocks(f, spec, n) for f in comp) for comp in spec.components]


def basis_dim(spec: DemoSpec, n: int) -> int:
    return sum(_widths(spec, n))


def member_kernels(spec: DemoSpec, n: int) -> list[dict]:
    """Kernels of member ``n``, one ``{(p,q): kernel}`` mapping per component."""
    widths = _widths(spec, n)
    dim = sum(widths)
    if dim > MAX_BASIS:
        raise InputError(f"member {n} needs a basis of {dim} > {MAX_BASIS}")
    out, offset = [], 0
    for comp, width in zip(spec.components, widths):
        terms = {}
        for fam in comp:
            m = _blocks(fam, spec, n)
            var = fam.sigma_sq * (2.0**-n if fam.kind == "tail" else 1.0)
            c = math.sqrt(var / m)
            acc = None
            for k in range(m):
                start = offset + k * fam.order
                idx = list(range(start, start + fam.order))
                b = basis_kernel(idx[: fam.p], idx[fam.p :], dim, c)
                acc = b if acc is None else acc + b
            terms[(fam.p, fam.q)] = symmetrize_groups(acc)
        out.append(terms)
        offset += width
    return out


def _contraction_max(f: KernelTensor) -> float:
    h = reverse_conjugate(f)
    return max((contract(f, h, i, j).norm() for i, j in contraction_pairs(f.p, f.q)), default=0.0)


def diagnostics(spec: DemoSpec, n: int, kernels: list[dict]) -> list[dict]:
    """Per-component checks of the four conditions of the chaotic limit theorem."""
    out = []
    for comp, terms in zip(spec.components, kernels):
        norms, contr, tail, ef2 = {}, {}, 0.0, 0j
        limit = {}
        for fam in comp:
            f = terms[(fam.p, fam.q)]
            s2, e2 = second_moments(f)
            key = f"{fam.p},{fam.q}"
            norms[key] = s2
            limit[key] = 0.0 if fam.kind == "tail" else fam.sigma_sq
            contr[key] = _contraction_max(f)
            ef2 += e2
            if fam.kind == "tail":
                tail += s2
        out.append(
            {
                "i_norms": norms,
                "i_limits": limit,
                "i_max_gap": max(abs(norms[k] - limit[k]) for k in norms),
                "ii_total_variance": sum(norms.values()),
                "iii_max_contraction": max(contr.values()),
                "iii_by_shape": contr,
                "iv_tail_mass": tail,
                "abs_E_F2": abs(ef2),
                "eq": {"i": "thm Pecca TUd (i)", "ii": "thm Pecca TUd (ii)", "iii": "thm Pecca TUd (iii)", "iv": "thm Pecca TUd (iv)"},
            }
        )
    return out


def sample_members(spec: DemoSpec, n: int, seed: int, field=None) -> tuple[np.ndarray, list[dict]]:
    """``(samples, kernels)`` with samples of shape ``(spec.samples, d)``.

    ``field`` may be a wider ``(samples, dim')`` draw; its leading columns are used.
    """
    kernels = member_kernels(spec, n)
    dim = next(iter(kernels[0].values())).n
    z = sample_fields(dim, spec.samples, seed) if field is None else field[:, :dim]
    cols = [sample_chaos(ChaosElement(dim, terms), z) for terms in kernels]
    return np.column_stack(cols), kernels


def _gaussian_block(cov: np.ndarray, count: int, seed: int, index: int) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    root = v * np.sqrt(np.clip(w, 0.0, None))
    return generator(seed, STREAM_TARGET, index).standard_normal((count, cov.shape[0])) @ root.T


def realify(samples: np.ndarray) -> np.ndarray:
    """``(Re F_1..Re F_d, Im F_1..Im F_d)`` per row."""
    return np.concatenate([samples.real, samples.imag], axis=1)


def _w1_planar(points: np.ndarray, cov: np.ndarray, seed: int, index: int, cache: dict | None = None) -> float:
    key = (points.tobytes(), cov.tobytes(), seed, index)
    if cache is not None and key in cache:
        return cache[key]
    w = w1_exact(PlanarSample(points), PlanarSample(_gaussian_block(cov, points.shape[0], seed, index)))
    if cache is not None:
        cache[key] = w
    return w


def run_demo(spec: DemoSpec, seed: int) -> dict:
    """W1 of each member to the complex Gaussian limit plus per-condition diagnostics.

    For ``d >= 2`` the joint law is probed through every coordinate pair of the
    realified ``2d``-vector, since exact matching in ``R^{2d}`` is out of budget.
    All members share one field draw (nested blocks) and one target draw, so
    the comparison across ``n`` is not swamped by sampling noise.
    """
    d = spec.d
    sigma = ComplexCovariance(np.diag(spec.target_variances()).astype(complex))
    sp = sigma.sigma_prime
    field = sample_fields(max(basis_dim(spec, n) for n in spec.n_grid), spec.samples, seed)
    members, cache = [], {}
    for n in spec.n_grid:
        x, kernels = sample_members(spec, n, seed, field)
        real = realify(x)
        comp_w1 = []
        for a in range(d):
            cols = [a, d + a]
            comp_w1.append(_w1_planar(real[:, cols], sp[np.ix_(cols, cols)], seed, a, cache))
        pairs = []
        if d >= 2:
            for u in range(2 * d):
                for v in range(u + 1, 2 * d):
                    if v == u + d:
                        continue  # same coordinate, already covered
                    cols = [u, v]
                    w = _w1_planar(real[:, cols], sp[np.ix_(cols, cols)], seed, 100 + 2 * d * u + v, cache)
                    pairs.append({"coords": cols, "w1": w})
        members.append(
            {
                "n": n,
                "w1": comp_w1,
                "pair_w1": pairs,
                "diagnostics": diagnostics(spec, n, kernels),
            }
        )
    w1_series = [[m["w1"][a] for m in members] for a in range(d)]
    report = {
        "d": d,
        "target_variances": spec.target_variances(),
        "samples": spec.samples,
        "members": members,
        "componentwise_decreasing": [bool(np.all(np.diff(s) < 0)) for s in w1_series],
        "eq": {"w1": "Wasserstein distance", "limit": "thm Pecca TUd", "joint": "thm Camp"},
    }
    if d >= 2:
        joint = [[m["pair_w1"][k]["w1"] for m in members] for k in range(len(members[0]["pair_w1"]))]
        report["pairwise_decreasing"] = [bool(np.all(np.diff(s) < 0)) for s in joint]
    return report
