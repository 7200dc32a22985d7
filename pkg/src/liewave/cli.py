"""``liewave`` command line: symbol verification, config-driven solves and case batteries."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from .cauchy import (
    CauchyProblem,
    InadmissibleOrderError,
    check_gevrey_order,
    gevrey_data,
    make_data,
    regularity_ladder,
    regularity_report,
    solve,
)
from .group_harmonics import TORUS, EulerAngles
from .mode_solver import StabilityError
from .spaces import InsufficientShellsError, classical_sobolev_norm, fit_gevrey_decay, sobolev_L_norm
from .speeds import make_profile
from .suites import BATTERIES, symbol_battery
from .symbols import (
    SymbolOracleError,
    check_hormander_bounds,
    extract_symbol,
    laplacian_operator,
    laplacian_symbol,
    sublaplacian_symbol,
)

EXIT_FAIL = 1
EXIT_INVALID = 2
ORACLE_LMAX = 5.0


class ConfigError(ValueError):
    pass


# Config --------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("liewave").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate_config(config: dict) -> None:
    """Raise :class:`ConfigError` listing every schema violation by JSON pointer."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_pointer(e.absolute_path)}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
    if config["group"] == TORUS and config["operator"] != "laplacian":
        raise ConfigError("/operator: the torus backend supports only the laplacian")


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_symbol(config: dict):
    L = config["L_max"]
    if config["group"] == TORUS:
        return laplacian_symbol(int(L), TORUS, ndim=config.get("ndim", 1))
    integer_only = config.get("integer_only", False)
    if config["operator"] == "sublaplacian":
        return sublaplacian_symbol(L, integer_only=integer_only, verify_lmax=min(L, ORACLE_LMAX))
    return laplacian_symbol(L, integer_only=integer_only)


def versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "numba", "jsonschema"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    return out


def workers_from(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get("LIEWAVE_WORKERS", "1")))


# Output --------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(out: Path, name: str, text: str, digests: dict) -> None:
    (out / name).write_text(text, encoding="utf-8", newline="\n")
    digests[name] = hashlib.sha256(text.encode()).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def norm_rows(sol, sym, s: float):
    header = ["t", "HL_u", "HL_ut", "H_u", "H_ut", "gevrey_s_hat", "gevrey_A_hat"]
    rows = []
    for t, u, ut in zip(sol.times, sol.u, sol.ut):
        try:
            fit = fit_gevrey_decay(u, sym)
            s_hat, A_hat = fit.s_hat, fit.A_hat
        except InsufficientShellsError:
            s_hat = A_hat = math.nan
        rows.append([
            t,
            sobolev_L_norm(u, 1 + s, sym), sobolev_L_norm(ut, s, sym),
            classical_sobolev_norm(u, 1 + s), classical_sobolev_norm(ut, s),
            s_hat, A_hat,
        ])
    return header, rows


def mode_rows(sol, u0, limit: int = 64):
    """Entries carrying data, traced over the snapshots (at most ``limit``)."""
    entries = []
    for rep, mat in u0.items():
        for j, k in zip(*np.nonzero(mat)):
            entries.append((rep, int(j), int(k)))
    entries = entries[:limit]
    header = ["t", "rep", "row", "col", "re_u", "im_u", "re_ut", "im_ut"]
    rows = []
    for t, u, ut in zip(sol.times, sol.u, sol.ut):
        for rep, j, k in entries:
            z, w = u[rep][j, k], ut[rep][j, k]
            rows.append([t, rep.label(), str(j), str(k), z.real, z.imag, w.real, w.imag])
    return header, rows


# Commands ------------------------------------------------------------------

def cmd_verify_symbol(args) -> int:
    lmax = args.lmax if args.lmax is not None else ORACLE_LMAX
    report: dict = {"operator": args.operator, "lmax": lmax}
    try:
        if args.operator == "sublaplacian":
            sym = sublaplacian_symbol(lmax, verify_lmax=min(lmax, ORACLE_LMAX), tol=1e-8)
        else:
            sym = laplacian_symbol(lmax)
            g = EulerAngles.random(np.random.default_rng(0 if args.seed is None else args.seed))
            err = 0.0
            for rep in sym.reps:
                if rep.ell > ORACLE_LMAX:
                    break
                m = extract_symbol(laplacian_operator, rep, g)
                err = max(err, float(np.abs(m + np.diag(sym.nu_squared[rep])).max()))
            if err > 1e-8:
                raise SymbolOracleError(f"Laplacian symbol differs from the oracle by {err:.3e}")
        report["oracle"] = "agree"
    except SymbolOracleError as exc:
        report.update(oracle="disagree", error=str(exc), **{"pass": False})
        print(json.dumps(report, indent=2), file=sys.stdout)
        return EXIT_FAIL
    try:
        horm = check_hormander_bounds(sym, args.r)
    except ValueError as exc:
        report.update(error=str(exc), **{"pass": False})
        print(json.dumps(report, indent=2))
        return EXIT_FAIL
    report.update(horm.as_dict())
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "symbol_report.json").write_text(text + "\n", encoding="utf-8")
    if not horm.passed:
        print(f"Hormander bounds fail for r = {horm.r}: c_lower = {horm.c_lower:.6g}, "
              f"c_upper = {horm.c_upper:.6g}", file=sys.stderr)
        return EXIT_FAIL
    return 0


def effective_config(args) -> dict:
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        config["seed"] = args.seed
    if args.lmax is not None:
        config["L_max"] = args.lmax
    if args.case is not None:
        raise ConfigError("--case applies to the 'cases' command")
    validate_config(config)
    return config


def run_config(config: dict, out: Path, workers: int = 1) -> dict:
    """Solve the configured problem and write all artifacts; returns the manifest."""
    h = config_hash(config)
    seed = int(config.get("seed", 0))
    profile = make_profile(config["profile"]["key"], **config["profile"].get("params", {}))
    gev = config.get("gevrey")
    if gev is not None:
        # refuse before any compute
        check_gevrey_order(profile, gev["s"])
    sym = build_symbol(config)
    rng = np.random.default_rng(seed)
    if gev is not None:
        u0, u1 = gevrey_data(sym, gev.get("A", 1.0), gev["s"], rng)
    else:
        u0, u1 = make_data(config["data"], sym, rng)
    T = float(config.get("T", profile.T))
    problem = CauchyProblem(sym, profile, u0, u1, T)
    snapshots = int(config.get("snapshots", 16))
    sol = solve(problem, config.get("dt"), snapshots, workers=workers)

    out.mkdir(parents=True, exist_ok=True)
    digests: dict = {}
    s = float(config.get("s", 0.0))
    report: dict = {"config_hash": h, "case": profile.case_tag, "profile": profile.name, "dt": sol.dt}
    doc = sol.to_dict()
    doc["config_hash"] = h
    _write(out, "solution.json", json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", digests)
    _write(out, "norms.csv", csv_text(*norm_rows(sol, sym, s)), digests)
    _write(out, "modes.csv", csv_text(*mode_rows(sol, u0 if len(u0) else u1)), digests)

    if profile.case_tag == 1:
        reg = config.get("regularity", {})
        rs, rr = float(reg.get("s", s)), reg.get("r")
        report["regularity"] = regularity_report(sol, problem, rs, rr).as_dict()
        if "ladder" in reg:
            def make(L):
                sub = dict(config, L_max=L)
                sym_L = build_symbol(sub)
                a, b = make_data(config["data"], sym_L, np.random.default_rng(seed))
                return CauchyProblem(sym_L, profile, a, b, T)

            ladder = regularity_ladder(make, reg["ladder"], rs, rr, dt=config.get("dt"))
            report["regularity_ladder"] = ladder.as_dict()
            report["pass"] = ladder.est_stable
    if gev is not None:
        fit0, fitT = fit_gevrey_decay(u0, sym), fit_gevrey_decay(sol.u[-1], sym)
        report["gevrey"] = {
            "s": gev["s"], "A": gev.get("A", 1.0), "data_fit": fit0.as_dict(), "solution_fit": fitT.as_dict(),
            "pass": fitT.s_hat <= 1.1 * gev["s"] and fitT.A_hat > 0,
        }
        report["pass"] = report["gevrey"]["pass"]
    _write(out, "report.json", _dumps(report), digests)

    manifest = {
        "config_hash": h,
        "config": config,
        "seed": seed,
        "versions": versions(),
        "outputs": digests,
    }
    _write(out, "manifest.json", _dumps(manifest), {})
    return manifest


def cmd_solve(args) -> int:
    try:
        config = effective_config(args)
        manifest = run_config(config, Path(args.out), workers_from(args))
    except (ConfigError, InadmissibleOrderError, StabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps({"config_hash": manifest["config_hash"], "outputs": sorted(manifest["outputs"])}))
    return 0


def cmd_cases(args) -> int:
    cases = [args.case] if args.case is not None else sorted(BATTERIES)
    seed = args.seed if args.seed is not None else 0
    checks = []
    if args.case is None:
        checks.extend(symbol_battery())
    for k in cases:
        checks.extend(BATTERIES[k](seed))
    for c in checks:
        print(c.line())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        body = {"cases": cases, "seed": seed, "checks": [{"name": c.name, "pass": c.passed, "detail": c.detail} for c in checks]}
        (out / "cases_report.json").write_text(_dumps(body), encoding="utf-8")
    return 0 if all(c.passed for c in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="64-bit seed for random data (default 0)")
    common.add_argument("--workers", type=int, help="mode-parallel worker threads (fallback: LIEWAVE_WORKERS)")
    common.add_argument("--lmax", type=float, help="band limit L_max")

    parser = argparse.ArgumentParser(prog="liewave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-symbol", parents=[common], help="check the symbol table and Hormander bounds")
    p.add_argument("--operator", choices=["sublaplacian", "laplacian"], default="sublaplacian")
    p.add_argument("--r", type=int, help="Hormander order to test (default: the operator's)")
    p.set_defaults(func=cmd_verify_symbol)

    p = sub.add_parser("solve", parents=[common], help="solve the Cauchy problem described by a config")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--case", type=int, choices=[1, 2, 3, 4], help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("cases", parents=[common], help="run the canonical per-case batteries")
    p.add_argument("--case", type=int, choices=[1, 2, 3, 4])
    p.set_defaults(func=cmd_cases)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve" and args.out is None:
        args.out = "liewave-out"
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
