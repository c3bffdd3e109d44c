"""Command-line front end.

Exit codes: 0 success, 1 invariant failure, 2 input error.  JSON reports go to
stdout unless ``--out`` is given; then the report is written to that path
together with a ``<out>.manifest.json`` sidecar.  Every JSON report embeds the
hash of its run manifest, which covers the command, its parameters and the
seed, so identical invocations produce byte-identical artifacts.
"""

from __future__ import annotations

import os

_threads = os.environ.get("CHAOS_BENCH_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402
import hashlib  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from dataclasses import dataclass, field  # noqa: E402
from importlib import metadata  # noqa: E402

import numpy as np  # noqa: E402

from . import chaos, clt, contraction, hermite, kernel, moments, ou, selftest, wasserstein  # noqa: E402
from .errors import InputError, NumericalError  # noqa: E402


def _version() -> str:
    try:
        return metadata.version("chaosbench")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def worker_count() -> int:
    raw = os.environ.get("CHAOS_BENCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"CHAOS_BENCH_THREADS must be an integer, got {raw!r}") from None


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    version: str = field(default_factory=_version)
    wall_time: float = 0.0
    outputs: list = field(default_factory=list)

    def hash(self) -> str:
        # wall time and output paths are deliberately excluded
        key = {"command": self.command, "parameters": self.parameters, "seed": self.seed, "version": self.version}
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
            "outputs": self.outputs,
            "hash": self.hash(),
        }


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _cplx(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _emit(args, manifest: RunManifest, payload: dict | None = None, text: str | None = None) -> None:
    """Write a JSON payload (or raw text such as CSV) and the manifest sidecar."""
    if payload is not None:
        payload = {**payload, "manifest_hash": manifest.hash()}
        text = _dump(payload)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        manifest.outputs.append(out)
        with open(out + ".manifest.json", "w") as fh:
            fh.write(_dump(manifest.to_dict()))
    else:
        sys.stdout.write(text)


def _manifest(args, command: str, keys) -> RunManifest:
    params = {k: _jsonable(getattr(args, k)) for k in keys}
    return RunManifest(command, params, getattr(args, "seed", None))


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _load_kernel(path) -> kernel.KernelTensor:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return kernel.kernel_from_json(json.dumps(data))


def _load_sigma(path) -> kernel.ComplexCovariance:
    data = _read_json(path)
    rows = data.get("sigma") if isinstance(data, dict) else data
    try:
        arr = np.array([[complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in row] for row in rows])
    except (TypeError, ValueError, IndexError):
        raise InputError(f"{path}: sigma must be a matrix of numbers or [re, im] pairs") from None
    return kernel.ComplexCovariance(arr)


def _read_csv_points(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        pts = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError):
        raise InputError(f"{path}: expected two numeric columns x,y without header") from None
    if pts.size == 0:
        raise InputError(f"{path}: no points")
    return pts


# --- commands -----------------------------------------------------------


def cmd_selftest(args) -> int:
    results = selftest.run_checks(args.filter)
    if not results:
        raise InputError(f"no suite matches {args.filter!r}; suites: {', '.join(selftest.SUITES)}")
    failed = [r for r in results if not r.passed]
    if args.out:
        m = _manifest(args, "selftest", ["filter"])
        _emit(args, m, {"checks": [r.__dict__ for r in results], "failed": [r.tag for r in failed]})
    else:
        for r in results:
            print(r.line())
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_clt_demo(args) -> int:
    t0 = time.perf_counter()
    if args.spec:
        spec = clt.parse_spec(_read_json(args.spec))
    else:
        spec = clt.compliant_spec() if args.fixture == "compliant" else clt.violating_spec()
    if args.samples:
        spec = clt.DemoSpec(spec.components, spec.n_grid, args.samples, spec.base)
    report = clt.run_demo(spec, args.seed)
    m = _manifest(args, "clt-demo", ["spec", "fixture", "samples"])
    m.wall_time = time.perf_counter() - t0
    _emit(args, m, report)
    return 0


def cmd_moments(args) -> int:
    f = _load_kernel(args.kernel)
    report = moments.moment_report(f).to_dict()
    report["kappa_v2"] = moments.kappa_v2(kernel.symmetrize_groups(f))
    report["eq"]["kappa_v2"] = "revised version2"
    _emit(args, _manifest(args, "moments", ["kernel"]), report)
    return 0


def cmd_bounds(args) -> int:
    ks = [kernel.symmetrize_groups(_load_kernel(p)) for p in args.kernel]
    if len(ks) == 1:
        rep = moments.moment_report(ks[0])
        upper, sqrt_a, lower = moments.bound_1d(rep)
        s2 = rep.sigma_sq
        fourth = rep.kappa + 2 * s2**2 + abs(rep.ef2) ** 2
        out = {
            "d": 1,
            "upper_moment": upper,
            "sqrt_A": sqrt_a,
            "lower_raw": lower,
            "campese_reference": moments.bound_campese_reference(s2, fourth),
            "eigenvalues": list(rep.eigenvalues),
            "eq": {
                "upper_moment": "upper bound 1",
                "sqrt_A": "upper bound 2",
                "lower_raw": "lower bound 1",
                "campese_reference": "upper bound in campese15",
            },
        }
        if abs(rep.ef2) < 1e-14:
            out["upper_circular"] = moments.bound_1d_circular(s2, fourth, rep.p + rep.q)
            out["eq"]["upper_circular"] = "Coro compare to Campese 1"
    else:
        sigma = _load_sigma(args.sigma) if args.sigma else None
        upper, rhs = moments.bound_multi(ks, sigma)
        _, pairs = moments.contraction_rhs_multi(ks)
        out = {
            "d": len(ks),
            "upper_moment": upper,
            "contraction_rhs": rhs,
            "gated_terms": pairs,
            "eq": {"upper_moment": "Fourth moment BEB2 coro 2", "contraction_rhs": "key estimate 000"},
        }
    _emit(args, _manifest(args, "bounds", ["kernel", "sigma"]), out)
    return 0


def cmd_contract(args) -> int:
    f, g = _load_kernel(args.f), _load_kernel(args.g)
    c = contraction.contract(f, g, args.i, args.j)
    if args.symmetrize:
        c = kernel.symmetrize_groups(c)
    out = kernel.kernel_to_dict(c)
    out["norm"] = c.norm()
    out["eq"] = "Product_formula"
    _emit(args, _manifest(args, "contract", ["f", "g", "i", "j", "symmetrize"]), out)
    return 0


def cmd_quantities(args) -> int:
    f1 = kernel.symmetrize_groups(_load_kernel(args.f))
    f2 = kernel.symmetrize_groups(_load_kernel(args.g)) if args.g else None
    out = contraction.quantities(f1, f2)
    out["eq"] = {"A": "contraction moment", "B": "key estimate 000"}
    _emit(args, _manifest(args, "quantities", ["f", "g"]), out)
    return 0


def cmd_sample(args) -> int:
    f = kernel.symmetrize_groups(_load_kernel(args.kernel))
    if args.n_samples < 2:
        raise InputError("need at least two samples")
    z = chaos.sample_fields(f.n, args.n_samples, args.seed)
    x = chaos.evaluate_integral(f, z, check_symmetric=False)
    m = args.n_samples

    def stat(v):
        return {"mean": complex(np.mean(v)), "stderr": float(np.std(v) / np.sqrt(m))}

    a2 = np.abs(x) ** 2
    out = {
        "n_samples": m,
        "E_F": stat(x),
        "E_abs_F2": stat(a2),
        "E_F2": stat(x**2),
        "E_F3": stat(x**3),
        "E_F2_conjF": stat(x**2 * np.conj(x)),
        "E_abs_F4": stat(a2**2),
        "eq": {"E_abs_F2": "isometry property", "E_F3": "3moment_1", "E_F2_conjF": "3moment_2"},
    }
    _emit(args, _manifest(args, "sample", ["kernel", "n_samples"]), out)
    return 0


def cmd_hermite(args) -> int:
    z = complex(args.re, args.im)
    table = hermite.hermite_table(z, args.pmax, args.qmax)
    out = {"z": z, "values": table.values, "eq": "H_{p,q} generating function"}
    _emit(args, _manifest(args, "hermite", ["re", "im", "pmax", "qmax"]), out)
    return 0


def cmd_w1(args) -> int:
    a, b = _read_csv_points(args.a), _read_csv_points(args.b)
    out = {"w1": wasserstein.w1_exact(a, b), "count": int(a.shape[0]), "eq": "Wasserstein distance"}
    _emit(args, _manifest(args, "w1", ["a", "b"]), out)
    return 0


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"bad T grid {text!r}; expected comma-separated numbers") from None


def cmd_ou_rate(args) -> int:
    t0 = time.perf_counter()
    study = ou.rate_study(
        args.lam,
        _parse_grid(args.tgrid),
        paths=args.paths,
        seed=args.seed,
        replicates=args.replicates,
        steps=args.steps,
        monte_carlo=not args.no_mc,
        workers=worker_count(),
    )
    m = _manifest(args, "ou-rate", ["lam", "tgrid", "paths", "replicates", "steps", "no_mc"])
    m.wall_time = time.perf_counter() - t0
    _emit(args, m, text=study.to_csv())
    slopes = {k: {"slope": v[0], "radius": v[1]} for k, v in study.slopes.items()}
    sys.stderr.write(_dump({"slopes": slopes, "manifest_hash": m.hash()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chaosbench", description="Complex Wiener chaos calculus and rate checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--filter", help="run only suites whose name contains this string")
    p.add_argument("--out")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("clt-demo", help="chaotic central limit demo")
    p.add_argument("--spec", help="demo spec JSON (default: built-in fixture)")
    p.add_argument("--fixture", choices=("compliant", "violating"), default="compliant")
    p.add_argument("--samples", type=int, help="override samples per member")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_clt_demo)

    p = sub.add_parser("moments", help="exact moment report for one kernel")
    p.add_argument("--kernel", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("bounds", help="Berry-Esseen bounds (pass --kernel several times for a vector)")
    p.add_argument("--kernel", action="append", required=True)
    p.add_argument("--sigma", help="target covariance JSON for the vector bound")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("contract", help="(i, j)-contraction of two kernels")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("quantities", help="aggregate contraction quantities A and B")
    p.add_argument("--f", required=True)
    p.add_argument("--g")
    p.add_argument("--out")
    p.set_defaults(func=cmd_quantities)

    p = sub.add_parser("sample", help="Monte Carlo moments of I(f)")
    p.add_argument("--kernel", required=True)
    p.add_argument("--n-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("hermite", help="table of H_{p,q}(z)")
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)
    p.add_argument("--pmax", type=int, default=3)
    p.add_argument("--qmax", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hermite)

    p = sub.add_parser("w1", help="exact W1 between two planar CSV samples")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_w1)

    p = sub.add_parser("ou-rate", help="OU rate study, CSV output")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--tgrid", default="25,50,100,200,400")
    p.add_argument("--paths", type=int, default=2048 * 32)
    p.add_argument("--replicates", type=int, default=32)
    p.add_argument("--steps", type=int, default=ou.DEFAULT_STEPS)
    p.add_argument("--no-mc", action="store_true", help="exact columns only")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ou_rate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
