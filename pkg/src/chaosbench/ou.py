"""Complex Ornstein-Uhlenbeck case study.

The process solves ``dZ = -gamma Z dt + d zeta`` with ``Z_0 = 0``, where ``zeta``
is a circular complex Brownian motion (``E|zeta_t|^2 = t``) and
``Re gamma = lam > 0``.  The statistic

    F_T = T^{-1/2} int_0^T conj(Z_t) d zeta_t

lies in the (1,1) chaos with kernel ``psi_T(t; s) = T^{-1/2} exp(-conj(gamma) (t - s))``
on ``s < t``.  Its second, third and fourth-order quantities are computed by
quadrature of the explicit exponentials; the imaginary part of ``gamma`` drops
out of all of them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.integrate import quad

from .errors import InputError, NumericalError
from .kernel import ComplexCovariance, KernelTensor, make_kernel
from .moments import bound_campese_reference, upper_moment_bound
from .rng import STREAM_OU, complex_normal, generator
from .wasserstein import PlanarSample, w1_to_gaussian

DEFAULT_STEPS = 4096
# paths per RNG chunk; fixed so results do not depend on how work is batched
PATH_CHUNK = 4096
# cap on stored (paths x steps) entries for simulate_ou
MAX_STORED = 2**26

CSV_COLUMNS = (
    "T",
    "sigma_sq_exact",
    "A_exact",
    "third_mixed_exact",
    "upper_moment",
    "campese_ref",
    "w1_estimate",
    "w1_stderr",
)


@dataclass(frozen=True)
class OUConfig:
    gamma: complex
    T: float
    dt: float | None = None
    mc_paths: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))
        if not self.gamma.real > 0:
            raise InputError(f"need Re gamma > 0, got {self.gamma}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InputError(f"horizon must be positive, got {self.T}")
        if self.dt is None:
            object.__setattr__(self, "dt", self.T / DEFAULT_STEPS)
        if not 0 < self.dt < self.T:
            raise InputError(f"need 0 < dt < T, got dt={self.dt}")
        if math.exp(-2 * self.lam * self.dt) <= 0.5:
            raise InputError("dt too coarse: need exp(-2 lam dt) > 0.5")
        if self.mc_paths < 1:
            raise InputError("mc_paths must be >= 1")

    @property
    def lam(self) -> float:
        return self.gamma.real

    @property
    def steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))

    @property
    def h(self) -> float:
        """Actual grid step (``T / steps``)."""
        return self.T / self.steps


@dataclass(frozen=True, eq=False)
class OUPath:
    """Stored paths: ``z`` is ``(paths, steps + 1)``, ``dzeta`` is ``(paths, steps)``."""

    cfg: OUConfig
    z: np.ndarray
    dzeta: np.ndarray | None
    scheme: str = "exact"


def _step_coefficients(gamma: complex, h: float):
    """``(a, c, d)`` with ``Z' = a Z + c W1 + d W2`` and ``d zeta = sqrt(h) W1``."""
    lam = gamma.real
    a = np.exp(-gamma * h)
    # E[eta conj(d zeta)] / sqrt(h), with eta the noise part of the exact step
    c = (1 - np.exp(-gamma * h)) / gamma / math.sqrt(h)
    var_eta = -math.expm1(-2 * lam * h) / (2 * lam)
    d = math.sqrt(max(var_eta - abs(c) ** 2, 0.0))
    return a, c, d


def _chunk_sizes(total: int):
    for start in range(0, total, PATH_CHUNK):
        yield start // PATH_CHUNK, min(PATH_CHUNK, total - start)


def _run_chunk(cfg: OUConfig, size: int, chunk: int, scheme: str, store: bool, stream_index: int = 0):
    """Simulate one chunk; returns ``(F_T, gamma_hat, z, dzeta)`` (paths stored only if asked)."""
    if scheme not in ("exact", "euler"):
        raise InputError(f"unknown scheme {scheme!r}")
    h, steps = cfg.h, cfg.steps
    a, c, d = _step_coefficients(cfg.gamma, h)
    rng = generator(cfg.seed, STREAM_OU, (stream_index << 32) + chunk)
    sq = math.sqrt(h)
    z = np.zeros(size, dtype=np.complex128)
    s_f = np.zeros(size, dtype=np.complex128)  # sum conj(Z) d zeta
    s_d = np.zeros(size, dtype=np.complex128)  # sum conj(Z) dZ
    s_q = np.zeros(size)  # sum |Z|^2 h
    zs = np.zeros((size, steps + 1), dtype=np.complex128) if store else None
    dz = np.zeros((size, steps), dtype=np.complex128) if store else None
    for k in range(steps):
        w1 = complex_normal(rng, size)
        w2 = complex_normal(rng, size)
        dzeta = sq * w1
        if scheme == "exact":
            z_next = a * z + c * w1 + d * w2
        else:
            z_next = z - cfg.gamma * z * h + dzeta
        zc = np.conj(z)
        s_f += zc * dzeta
        s_d += zc * (z_next - z)
        s_q += (z.real**2 + z.imag**2) * h
        if store:
            zs[:, k + 1] = z_next
            dz[:, k] = dzeta
        z = z_next
    with np.errstate(divide="ignore", invalid="ignore"):
        ghat = -s_d / s_q
    return s_f / math.sqrt(cfg.T), ghat, zs, dz


def simulate_ou(cfg: OUConfig, paths: int | None = None, scheme: str = "exact") -> OUPath:
    """Store ``paths`` (default ``cfg.mc_paths``) complete trajectories.

    The exact scheme draws ``(Z_{k+1}, zeta increment)`` from their joint
    Gaussian transition, so the stored path has the exact law on the grid.
    """
    paths = cfg.mc_paths if paths is None else paths
    if paths * cfg.steps > MAX_STORED:
        raise InputError(f"{paths} x {cfg.steps} stored entries exceed {MAX_STORED}; use simulate_statistics")
    zs, dzs = [], []
    for chunk, size in _chunk_sizes(paths):
        _, _, z, dz = _run_chunk(cfg, size, chunk, scheme, store=True)
        zs.append(z)
        dzs.append(dz)
    return OUPath(cfg, np.concatenate(zs), np.concatenate(dzs), scheme)


def simulate_statistics(cfg: OUConfig, paths: int | None = None, scheme: str = "exact", stream_index: int = 0):
    """``(F_T, gamma_hat)`` for many paths without storing them.

    Agrees draw-for-draw with :func:`statistic_ft` / :func:`estimator` applied to
    :func:`simulate_ou` at the same seed.
    """
    paths = cfg.mc_paths if paths is None else paths
    fs, gs = [], []
    for chunk, size in _chunk_sizes(paths):
        f, g, _, _ = _run_chunk(cfg, size, chunk, scheme, store=False, stream_index=stream_index)
        fs.append(f)
        gs.append(g)
    return np.concatenate(fs), np.concatenate(gs)


def statistic_ft(path: OUPath) -> np.ndarray:
    """Ito sum ``T^{-1/2} sum_k conj(Z_k) (zeta_{k+1} - zeta_k)`` per path."""
    if path.dzeta is None:
        raise InputError("path has no stored noise increments")
    return np.sum(np.conj(path.z[:, :-1]) * path.dzeta, axis=1) / math.sqrt(path.cfg.T)


def estimator(path: OUPath) -> np.ndarray:
    """Least-squares drift estimate ``-sum conj(Z) dZ / sum |Z|^2 dt`` per path."""
    z = path.z
    den = np.sum(np.abs(z[:, :-1]) ** 2, axis=1) * path.cfg.h
    if np.any(den <= 1e-300):
        raise NumericalError("degenerate path: sum |Z|^2 dt vanishes")
    num = np.sum(np.conj(z[:, :-1]) * np.diff(z, axis=1), axis=1)
    return -num / den


# --- exact quantities ---------------------------------------------------


def sigma_sq_exact(lam: float, T: float) -> float:
    """``E|F_T|^2 = 1/(2 lam) + exp(-2 lam T)/(4 lam^2 T) - 1/(4 lam^2 T)``."""
    return 1 / (2 * lam) + math.expm1(-2 * lam * T) / (4 * lam**2 * T)


def normalization(lam: float, T: float) -> float:
    """``1 + exp(-2 lam T)/(2 lam T) - 1/(2 lam T)``; ``F'_T = F_T / sqrt(normalization)``."""
    return 1 + math.expm1(-2 * lam * T) / (2 * lam * T)


def _quad(fun, T: float) -> tuple[float, float]:
    # break points keep the adaptive rule resolving the boundary layers
    pts = [x for x in (1.0, 5.0, 20.0, T - 20.0, T - 5.0, T - 1.0) if 0 < x < T]
    val, err = quad(fun, 0.0, T, points=sorted(set(pts)) or None, limit=500, epsabs=0.0, epsrel=1e-13)
    return val, err


def ou_exact_quantities(lam: float, T: float) -> dict:
    """Quadrature values of the chaos quantities of ``F_T``.

    ``A = ||psi (x)_{1,0} h||^2 + ||psi (x)_{0,1} h||^2``, ``third_mixed = |E F^2 conj F|``
    and ``kappa = E|F|^4 - 2 (E|F|^2)^2``; ``third = E F^3 = 0`` since a (1,1)
    kernel has no cubic moment.
    """
    if not (lam > 0 and T > 0):
        raise InputError("need lam > 0 and T > 0")
    two = 2 * lam

    # |psi (x)_{1,0} h|(s; t) = e^{-lam|t-s|} (1 - e^{-2 lam (T - max)}) / (2 lam T);
    # integrating the diagonal offset analytically leaves one variable
    def g10(t):
        return -math.expm1(-two * t) / two * math.expm1(-two * (T - t)) ** 2

    def g01(s):
        return -math.expm1(-two * (T - s)) / two * math.expm1(-two * s) ** 2

    a10, e10 = _quad(g10, T)
    a01, e01 = _quad(g01, T)
    scale = 2 / (4 * lam**2 * T**2)
    A = scale * (a10 + a01)

    # psi o psi (t; s) = (t - s) e^{-conj(gamma)(t - s)} / T on s < t
    m1, e1 = _quad(lambda x: (T - x) * x * math.exp(-two * x), T)
    m2, e2 = _quad(lambda x: (T - x) * x * x * math.exp(-two * x), T)
    third_mixed = 2 * m1 / T**1.5
    kappa = A + 4 * m2 / T**2
    err = max(scale * (e10 + e01), 2 * e1 / T**1.5, 4 * e2 / T**2)
    return {
        "sigma_sq": sigma_sq_exact(lam, T),
        "A": A,
        "third_mixed": third_mixed,
        "third": 0.0,
        "kappa": kappa,
        "quad_error": err,
    }


def ou_closed_forms(lam: float, T: float) -> dict:
    """Closed forms of the same quantities (an independent oracle)."""
    x = lam * T
    e = math.exp(-2 * x)
    A = 2 * (4 * x - 5 + (8 * x + 4) * e + e * e) / (16 * T**2 * lam**4)
    third_mixed = (x - 1 + (x + 1) * e) / (2 * T**1.5 * lam**3)
    phi = (x - 1.5 + (x * x + 2 * x + 1.5) * e) / (T**2 * lam**4)
    return {"sigma_sq": sigma_sq_exact(lam, T), "A": A, "third_mixed": third_mixed, "third": 0.0, "kappa": A + phi}


def discretize_psi(gamma: complex, T: float, m: int, method: str = "cell") -> KernelTensor:
    """``psi_T`` on ``m`` indicator basis functions of width ``T/m``.

    ``method="cell"`` is the exact L2 projection (cell averages).
    ``method="grid"`` uses ``(dt/sqrt T) exp(-conj(gamma)(k - l) dt)`` for ``k > l``
    and zero diagonal, the kernel an Ito sum on the grid sees.
    """
    gamma = complex(gamma)
    gb = np.conj(gamma)
    delta = T / m
    lag = np.arange(m)[:, None] - np.arange(m)[None, :]
    lower = lag > 0
    decay = np.where(lower, np.exp(-gb * delta * np.where(lower, lag, 0)), 0)
    if method == "grid":
        coeffs = decay * (delta / math.sqrt(T))
    elif method == "cell":
        u = -np.expm1(-gb * delta) / gb  # int_0^delta e^{-gb x} dx
        v = np.expm1(gb * delta) / gb  # int_0^delta e^{gb x} dx
        off = u * v / (delta * math.sqrt(T))
        diag = (delta / gb - u / gb) / (delta * math.sqrt(T))
        coeffs = decay * off + np.eye(m) * diag
    else:
        raise InputError(f"unknown method {method!r}")
    return make_kernel(1, 1, m, coeffs.reshape(-1))


# --- rate study ---------------------------------------------------------


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``log y`` on ``log x`` with a 2-stderr radius."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x <= 0):
        return float("nan"), float("nan")
    res = stats.linregress(np.log(x), np.log(y))
    return float(res.slope), float(2 * res.stderr)


@dataclass
class RateStudy:
    lam: float
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r[c])) for c in CSV_COLUMNS])
        return buf.getvalue()


def normalized_bounds(lam: float, T: float, exact: dict | None = None) -> tuple[float, float]:
    """``(upper_moment, campese_ref)`` for ``F'_T`` against ``CN(0, 1/(2 lam))``."""
    exact = exact or ou_exact_quantities(lam, T)
    norm = normalization(lam, T)
    s2 = exact["sigma_sq"] / norm
    kappa = exact["kappa"] / norm**2
    upper = upper_moment_bound(s2, 0j, kappa, 2)
    campese = bound_campese_reference(s2, kappa + 2 * s2**2)
    return upper, campese


def rate_study(
    lam: float,
    T_grid,
    paths: int = 2048 * 32,
    seed: int = 0,
    replicates: int = 32,
    steps: int = DEFAULT_STEPS,
    monte_carlo: bool = True,
    workers: int = 1,
) -> RateStudy:
    """Exact bounds and Wasserstein estimates of ``F'_T`` against ``CN(0, 1/(2 lam))`` over ``T_grid``."""
    T_grid = [float(t) for t in T_grid]
    if len(T_grid) < 4:
        raise InputError("T grid needs at least 4 points")
    if any(b <= a for a, b in zip(T_grid, T_grid[1:])):
        raise InputError("T grid must be strictly increasing")
    if lam <= 0:
        raise InputError("lambda must be positive")
    target = ComplexCovariance(np.array([[1 / (2 * lam)]]))
    study = RateStudy(lam)
    for row, T in enumerate(T_grid):
        ex = ou_exact_quantities(lam, T)
        upper, campese = normalized_bounds(lam, T, ex)
        rec = {
            "T": T,
            "sigma_sq_exact": ex["sigma_sq"],
            "A_exact": ex["A"],
            "third_mixed_exact": ex["third_mixed"],
            "upper_moment": upper,
            "campese_ref": campese,
            "w1_estimate": float("nan"),
            "w1_stderr": float("nan"),
        }
        if monte_carlo:
            cfg = OUConfig(lam, T, T / steps, paths, seed)
            f, _ = simulate_statistics(cfg, stream_index=row)
            f = f / math.sqrt(normalization(lam, T))
            tseed = int(np.random.SeedSequence(seed, spawn_key=(row,)).generate_state(1, np.uint64)[0])
            est, se = w1_to_gaussian(PlanarSample.from_complex(f), target, tseed, replicates, workers=workers)
            rec["w1_estimate"], rec["w1_stderr"] = est, se
        study.rows.append(rec)
    T = study.column("T")
    study.slopes = {
        "sqrt_A": fit_slope(T, np.sqrt(study.column("A_exact"))),
        "upper_moment": fit_slope(T, study.column("upper_moment")),
        "campese_ref": fit_slope(T, study.column("campese_ref")),
    }
    if monte_carlo:
        study.slopes["w1_estimate"] = fit_slope(T, study.column("w1_estimate"))
    return study
