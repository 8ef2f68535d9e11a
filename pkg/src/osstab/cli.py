"""Command-line surface: verification campaigns, solves, and report emission.

Every subcommand writes its tables as CSV (and JSON where a report object
exists) under --out and prints a one-line verdict.  Exit codes: 0 = pass,
1 = quantitative failure, 2 = usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import defaults
from .airy import a0, a0_ratios, airy_ai
from .exceptions import OsstabError
from .grid import GridFunction, make_grid
from .modified_airy import verify_airy_estimates
from .ns import (
    ModeField,
    NSSolver,
    solve_nonlinear,
    state_to_json,
    verify_resolvent_regimes,
    x_norm,
    zero_state,
)
from .os_solver import OSParams, boundary_corrector, solve_os_full, spectral_gap
from .profiles import profile_from_config, verify_structure
from .rayleigh import homogeneous_rayleigh, sigma_op, solve_rayleigh
from .reports import EstimateReport, read_report_csv


def _load_config(path):
    text = Path(path).read_text()
    if path.endswith(".json"):
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


def _profile_from_args(args, cfg):
    spec = cfg.get("profile", {})
    if args.kind:
        spec = {"kind": args.kind, "params": [args.steepness]}
    if not spec:
        spec = {"kind": "tanh", "params": [1.0]}
    return profile_from_config(spec)


def _grid_from_args(args, cfg):
    gspec = cfg.get("grid", {})
    n = args.n_grid or gspec.get("N", defaults.GRID_N)
    el = gspec.get("L", defaults.GRID_SCALE)
    kind = gspec.get("grid_kind", "rational")
    return make_grid(int(n), float(el), kind)


def _emit(report, out_dir, stem):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    report.write_csv(csv_path)
    (out / f"{stem}.json").write_text(report.to_json())
    # emitted CSV must round-trip through our own reader
    read_report_csv(csv_path)
    return csv_path


def _floats(text):
    return [float(tok) for tok in text.split(",") if tok]


def _int_range(text):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def _pool_map(fn, items):
    """Dispatch sweep points to a worker pool; result order follows the
    (sorted) input order, independent of completion order."""
    import os as _os
    from concurrent.futures import ThreadPoolExecutor

    try:
        workers = max(1, int(_os.environ.get("OSS_STAB_THREADS", "")))
    except ValueError:
        workers = 1
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_verify_profile(args, cfg):
    profile = _profile_from_args(args, cfg)
    grid = _grid_from_args(args, cfg)
    report = verify_structure(profile, grid)
    print(
        f"verify-profile: {'PASS' if report.passed else 'FAIL'} "
        f"(c={report.min_ratio:.4f}, max (1+Y)^3|U''|={report.max_weighted_d2u:.3f}, "
        f"U'(0)={report.wall_shear:.3f})"
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "profile_structure.json").write_text(json.dumps(report.__dict__, indent=2))
    return 0 if report.passed else 1


_SOURCES = {
    "exp": lambda y: np.exp(-y),
    "exp2": lambda y: np.exp(-2.0 * y),
    "gauss": lambda y: np.exp(-(y**2)),
    "poly3": lambda y: (1.0 + y) ** -3,
}


def cmd_solve_os(args, cfg):
    profile = _profile_from_args(args, cfg)
    grid = _grid_from_args(args, cfg)
    f_fn = _SOURCES[args.f]
    f1 = f_fn(grid.nodes).astype(complex)
    f2 = np.zeros_like(f1)
    params = OSParams(alpha=args.alpha, eps=args.eps)
    sol = solve_os_full(profile, params, f1, f2, grid=grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "os_solution.csv"
    with open(path, "w") as fh:
        fh.write("Y,Re_phi,Im_phi,Re_w,Im_w\n")
        for y, ph, w in zip(grid.nodes, sol.phi.values, sol.w.values):
            fh.write(f"{float(y)!r},{float(ph.real)!r},{float(ph.imag)!r},"
                     f"{float(w.real)!r},{float(w.imag)!r}\n")
        fh.write(f"# residual,{sol.residual!r},helm_gap,{sol.helm_gap!r}\n")
    read_report_csv(path)
    ok = sol.residual <= 1e-6 and abs(sol.boundary["phi0"]) <= 1e-8
    print(
        f"solve-os: {'PASS' if ok else 'FAIL'} residual={sol.residual:.3e} "
        f"|phi(0)|={abs(sol.boundary['phi0']):.2e} "
        f"|dphi(0)|={abs(sol.boundary['dphi0']):.2e} -> {path}"
    )
    return 0 if ok else 1


def cmd_verify_airy(args, cfg):
    profile = _profile_from_args(args, cfg)
    grid = _grid_from_args(args, cfg)
    eps_list = _floats(args.eps_list)
    report = verify_airy_estimates(profile, args.alpha, eps_list,
                               lambda y: y * np.exp(-y), grid)
    # special-function spot checks ride along
    ev = airy_ai(0.0)
    closed_ai0 = 0.3550280538878172
    closed_aip0 = -0.2588194037928068
    special_ok = (abs(ev.ai - closed_ai0) < 1e-10
                  and abs(ev.ai_prime - closed_aip0) < 1e-10
                  and abs(a0(0.0) - 1.0 / 3.0) < 1e-8)
    ratios_ok = all(a0_ratios(z)[0].real <= -1.0 / 3.0
                    for z in np.linspace(0, 10, 25))
    path = _emit(report, args.out, "airy_estimates")
    ok = report.passed and special_ok and ratios_ok
    print(f"verify-airy: {'PASS' if ok else 'FAIL'} "
          f"exponents={report.fitted_exponent} -> {path}")
    return 0 if ok else 1


def cmd_verify_rayleigh(args, cfg):
    profile = _profile_from_args(args, cfg)
    grid = _grid_from_args(args, cfg)
    rng = np.random.default_rng(args.seed)
    rows = []
    ok = True
    for alpha in _floats(args.alpha_list):
        phi_ray, c_e = homogeneous_rayleigh(profile, alpha, grid)
        res = grid.norm(
            profile.u(grid.nodes) * (grid.d2 @ phi_ray.values - alpha**2 * phi_ray.values)
            - profile.d2u(grid.nodes) * phi_ray.values
        ) / grid.norm(phi_ray.values)
        gap = abs(c_e - profile.uprime0)
        rows.append({"alpha": alpha, "phi0": phi_ray.values[0].real,
                     "c_e": c_e, "residual_rel": res, "c_e_gap": gap})
        ok = ok and res <= 1e-6 and abs(phi_ray.values[0] - 1.0) < 1e-12
        if alpha <= 0.2:
            ok = ok and gap <= 5.0 * alpha
    # random admissible inhomogeneous data
    y = grid.nodes
    for trial in range(args.trials):
        c = rng.normal(size=3)
        gsrc = (c[0] * y + c[1] * y**2 + c[2] * y**3) * np.exp(-1.5 * y)
        f1 = sigma_op(gsrc, grid)
        sol = solve_rayleigh(profile, 1.0, f1, np.zeros_like(f1), grid=grid)
        rows.append({"alpha": 1.0, "trial": trial, "residual_rel":
                     sol.residual / max(grid.norm(gsrc), 1e-300)})
        ok = ok and sol.residual <= 1e-6 * max(grid.norm(gsrc), 1.0)
    report = EstimateReport(rows=rows, fitted_exponent={}, passed=bool(ok),
                            tolerance={"residual": 1e-6, "c_e": "5*alpha"})
    path = _emit(report, args.out, "rayleigh")
    print(f"verify-rayleigh: {'PASS' if ok else 'FAIL'} -> {path}")
    return 0 if ok else 1


def cmd_corrector(args, cfg):
    profile = _profile_from_args(args, cfg)
    grid = _grid_from_args(args, cfg)
    params = OSParams(alpha=args.alpha, eps=args.eps)
    corr = boundary_corrector(profile, params, grid)
    ok = (abs(corr.boundary["phi_b0"]) <= 1e-8
          and abs(corr.boundary["dphi_b0"] - 1.0) <= 1e-8
          and corr.os_residual_rel <= 1e-5)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "corrector.csv"
    with open(path, "w") as fh:
        fh.write("Y,Re_phi_b,Im_phi_b,Re_w_b,Im_w_b\n")
        for y, ph, w in zip(grid.nodes, corr.phi_b.values, corr.w_b.values):
            fh.write(f"{float(y)!r},{float(ph.real)!r},{float(ph.imag)!r},"
                     f"{float(w.real)!r},{float(w.imag)!r}\n")
        fh.write(f"# branch,{corr.branch.value},os_residual_rel,{corr.os_residual_rel!r}\n")
    read_report_csv(path)
    print(f"corrector: {'PASS' if ok else 'FAIL'} branch={corr.branch.value} "
          f"residual={corr.os_residual_rel:.2e} -> {path}")
    return 0 if ok else 1


def cmd_scan_spectrum(args, cfg):
    profile = _profile_from_args(args, cfg)
    points = sorted(
        (alpha, eps)
        for alpha in _floats(args.alpha_list)
        for eps in _floats(args.eps_list)
    )
    n_list = _int_range(args.n_list)

    def work(point):
        alpha, eps = point
        rep = spectral_gap(profile, OSParams(alpha=alpha, eps=eps), n_list)
        return {
            "alpha": alpha, "eps": eps,
            **{f"sigma_N{n}": s for n, s in zip(rep.n_list, rep.sigma_min)},
            "verdict": rep.verdict,
            "evidence_only": rep.evidence_only,
        }

    rows = _pool_map(work, points)
    ok = all(r["verdict"] == "gap-open" for r in rows if not r["evidence_only"])
    report = EstimateReport(rows=rows, fitted_exponent={}, passed=bool(ok),
                            tolerance={"refinement_spread": 1.2})
    path = _emit(report, args.out, "spectrum_scan")
    print(f"scan-spectrum: {'PASS' if ok else 'FAIL'} ({len(rows)} points) -> {path}")
    return 0 if ok else 1


def cmd_verify_resolvent(args, cfg):
    profile = _profile_from_args(args, cfg)
    report = verify_resolvent_regimes(
        profile,
        _floats(args.nu_list),
        args.theta,
        _int_range(args.n_list),
        lambda y: np.exp(-y / args.decay),
        n_grid=args.n_grid or defaults.GRID_N,
    )
    path = _emit(report, args.out, "resolvent_regimes")
    print(f"verify-resolvent: {'PASS' if report.passed else 'FAIL'} "
          f"spreads={report.fitted_exponent['spreads']} -> {path}")
    return 0 if report.passed else 1


def cmd_nonlinear_solve(args, cfg):
    profile = _profile_from_args(args, cfg)
    solver = NSSolver(profile, args.nu, args.theta,
                      n_grid=args.n_grid or 128, n_max=args.n_max)
    gy = solver.grid_y
    forcing = zero_state(args.nu, args.theta, gy, args.n_max)
    shape = np.exp(-gy.nodes / np.sqrt(args.nu)) * args.amplitude
    forcing.modes[1] = ModeField(
        n=1,
        u1=GridFunction(shape.astype(complex), gy),
        u2=GridFunction(np.zeros_like(shape, dtype=complex), gy),
        phi_n=GridFunction(np.zeros_like(shape, dtype=complex), gy),
    )
    forcing.modes[-1] = forcing.modes[1].conjugated()
    state, history = solve_nonlinear(solver, forcing, tol=args.tol,
                                     max_iter=args.max_iter)
    ratios = [history[i + 1] / history[i] for i in range(len(history) - 2)]
    ok = bool(ratios and max(ratios) < 1.0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "nonlinear_state.json").write_text(state_to_json(state))
    rows = [{"iteration": i, "residual": r} for i, r in enumerate(history)]
    report = EstimateReport(rows=rows, fitted_exponent={}, passed=ok,
                            tolerance={"contraction": 1.0})
    path = _emit(report, args.out, "nonlinear_history")
    print(f"nonlinear-solve: {'PASS' if ok else 'FAIL'} iters={len(history)} "
          f"x_norm={x_norm(state):.4e} -> {path}")
    return 0 if ok else 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="osstab",
        description="Half-line Orr-Sommerfeld solvers and estimate verification",
    )
    parser.add_argument("--config", help="TOML or JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--kind", choices=["tanh", "exp"], default=None,
                        help="built-in profile kind")
        sp.add_argument("--steepness", type=float, default=1.0)
        sp.add_argument("--n-grid", type=int, default=None, dest="n_grid")
        sp.add_argument("--out", default="out")
        sp.add_argument("--seed", type=int, default=1234)

    sp = sub.add_parser("verify-profile", help="structure checks of U")
    common(sp)
    sp.set_defaults(func=cmd_verify_profile)

    sp = sub.add_parser("solve-os", help="one full Orr-Sommerfeld solve")
    common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--f", choices=sorted(_SOURCES), default="exp")
    sp.set_defaults(func=cmd_solve_os)

    sp = sub.add_parser("verify-airy", help="inner-solver estimate sweep")
    common(sp)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--eps-list", default="1e-2,1e-3,1e-4,1e-5")
    sp.set_defaults(func=cmd_verify_airy)

    sp = sub.add_parser("verify-rayleigh", help="Rayleigh solver checks")
    common(sp)
    sp.add_argument("--alpha-list", default="0.05,0.1,0.2,0.5,1.0")
    sp.add_argument("--trials", type=int, default=5)
    sp.set_defaults(func=cmd_verify_rayleigh)

    sp = sub.add_parser("corrector", help="boundary corrector construction")
    common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.set_defaults(func=cmd_corrector)

    sp = sub.add_parser("scan-spectrum", help="smallest-singular-value scans")
    common(sp)
    sp.add_argument("--alpha-list", default="0,0.5,1")
    sp.add_argument("--eps-list", default="1e-3,1e-2")
    sp.add_argument("--n-list", default="96,160,256", dest="n_list")
    sp.set_defaults(func=cmd_scan_spectrum)

    sp = sub.add_parser("verify-resolvent", help="per-regime resolvent sweeps")
    common(sp)
    sp.add_argument("--nu", dest="nu_list", default="1e-3,1e-4")
    sp.add_argument("--theta", type=float, default=0.05)
    sp.add_argument("--n", dest="n_list", default="1..4")
    sp.add_argument("--decay", type=float, default=1.0,
                    help="source decay scale in y")
    sp.set_defaults(func=cmd_verify_resolvent)

    sp = sub.add_parser("nonlinear-solve", help="Picard fixed point")
    common(sp)
    sp.add_argument("--nu", type=float, default=1e-3)
    sp.add_argument("--theta", type=float, default=0.05)
    sp.add_argument("--n-max", type=int, default=4, dest="n_max")
    sp.add_argument("--amplitude", type=float, default=1e-4)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=40, dest="max_iter")
    sp.set_defaults(func=cmd_nonlinear_solve)

    return parser


def run(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = _load_config(args.config) if args.config else {}
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args, cfg)
    except OsstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
