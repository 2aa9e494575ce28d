"""Command-line interface.

Subcommands: ``simulate``, ``ensemble``, ``sensitivity``,
``verify-operators`` and ``verify``.  Run flags override values from
``--config``; configuration errors exit with status 2 and name the
offending field.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .config import PRESETS, ConfigError, RunConfig
from .io import write_csv, write_json
from .runner import EXIT_CONFIG, EXIT_DIVERGED, EXIT_FAILED, EXIT_OK, _meta, build_run, run_ensemble, run_simulate, run_verify
from .verification import SUITES


def _add_run_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--preset", choices=PRESETS, help="initial-data preset")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--nx", type=int, help="cells per side")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--boundary-mode", choices=("fixed", "jump"))
    p.add_argument("--jump-rate", type=float)
    p.add_argument("--snapshot-every", type=int, help="steps between snapshots (0 = none)")
    p.add_argument("--sigma0", type=float, help="additive noise strength")
    p.add_argument("--sigmas", type=float, nargs="*", help="multiplicative noise strengths")
    p.add_argument("--eta", type=float, help="Ginzburg-Landau penalty")
    p.add_argument("--out", help="output directory")


def build_config(args) -> RunConfig:
    base = RunConfig.load(args.config).to_dict() if args.config else {}
    over = {
        ("initial", "preset"): args.preset,
        ("solver", "dt"): args.dt,
        ("solver", "t_end"): args.t_end,
        ("domain", "nx"): args.nx,
        ("noise", "seed"): args.seed,
        ("solver", "boundary_mode"): args.boundary_mode,
        ("noise", "jump_rate"): args.jump_rate,
        ("output", "snapshot_every"): args.snapshot_every,
        ("params", "sigma0"): args.sigma0,
        ("params", "sigmas"): args.sigmas,
        ("params", "eta"): args.eta,
        ("output", "dir"): args.out,
    }
    scheme = getattr(args, "scheme", None)
    if scheme and scheme != "both":
        over[("solver", "scheme")] = scheme
    for (sec, key), val in over.items():
        if val is not None:
            base.setdefault(sec, {})[key] = val
    if args.preset == "anticipating" and not base.get("params", {}).get("sigmas"):
        base.setdefault("params", {})["sigmas"] = [1.0]
    return RunConfig.from_dict(base)


def _direction(text: str | None) -> dict:
    if not text:
        return {}
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("direction-spec", f"invalid JSON: {e}") from e
    if not isinstance(spec, dict):
        raise ConfigError("direction-spec", "expected an object")
    return spec


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    return run_simulate(cfg, cfg.data["output"]["dir"], scheme_both=args.scheme == "both")


def cmd_ensemble(args) -> int:
    cfg = build_config(args)
    return run_ensemble(cfg, args.n_traj, args.workers, cfg.data["output"]["dir"])


def cmd_sensitivity(args) -> int:
    from .grid import DirectorField3, VectorField2
    from .noise import MalliavinDirection, NoisePath
    from .operators import discretization
    from .sensitivity import (
        AnticipatingSpec,
        anticipating_sides,
        cameron_martin_check,
        fd_check,
        run_malliavin,
        run_tangent,
        sensitivity_norm,
    )
    from .solver import reconstruct_v, run_transformed

    cfg = build_config(args)
    spec = _direction(args.direction_spec)
    out = cfg.data["output"]["dir"]
    os.makedirs(out, exist_ok=True)
    meta = _meta(cfg)
    params, scfg, dom = cfg.params, cfg.solver, cfg.domain
    disc = discretization(dom)
    s0, path, _, modes = build_run(cfg)
    S = lambda X, Y: np.sin(np.pi * X / dom.lx) * np.sin(np.pi * Y / dom.lx)  # noqa: E731
    if args.mode == "frechet":
        ua = float(spec.get("velocity_amplitude", 0.01))
        da = float(spec.get("director_amplitude", 1.0))
        u0 = VectorField2.from_stream_function(dom, lambda X, Y: ua * S(X, Y) ** 2)
        b0 = DirectorField3.from_function(dom, lambda X, Y: (da * S(X, Y), 0 * X, 0 * X)).interior_only()
        _, traj = run_transformed(s0, path, scfg, params, modes=modes)
        U, D = run_tangent(traj, u0, b0, scfg, params)
        rows = [(n * scfg.dt, sensitivity_norm(disc, U[n], D[n])) for n in range(len(U))]
        write_csv(os.path.join(out, "sensitivity.csv"), ["t", "norm"], rows, meta)
        if args.fd_check:
            fd_rows, order = fd_check(reconstruct_v(s0), s0.d, u0, b0, path, scfg, params)
            write_csv(os.path.join(out, "fd_check.csv"), ["h", "mismatch"], fd_rows, meta)
            print(f"fd order {order:.6f}")
            return EXIT_OK if order >= 1.0 else EXIT_FAILED
        return EXIT_OK
    if args.mode == "malliavin":
        direction = MalliavinDirection(int(spec.get("channel", 1)), float(spec.get("v", 0.5 * scfg.t_end)),
                                       int(spec.get("mode", 0)))
        _, traj = run_transformed(s0, path, scfg, params, modes=modes)
        XI, ETA = run_malliavin(traj, path, direction, scfg, params)
        rows = [(n * scfg.dt, sensitivity_norm(disc, XI[n], ETA[n])) for n in range(len(XI))]
        write_csv(os.path.join(out, "sensitivity.csv"), ["t", "norm"], rows, meta)
        if args.fd_check:
            rel, ref = cameron_martin_check(traj, path, s0, direction, scfg, params, float(spec.get("eps", 1e-4)))
            write_csv(os.path.join(out, "fd_check.csv"), ["rel_error", "derivative_norm"], [(rel, ref)], meta)
            print(f"cameron-martin relative error {rel:.3e}")
            return EXIT_OK if rel <= 1e-2 else EXIT_FAILED
        return EXIT_OK
    # skorohod
    ini = cfg.data["initial"]
    psi = VectorField2.from_stream_function(dom, lambda X, Y: ini["amplitude"] * S(X, Y) ** 2)
    terms = tuple((k, float(c)) for k, c in spec.get("terms", ini["terms"]))
    aspec = AnticipatingSpec(psi, float(spec.get("t1", ini["t1"])), int(spec.get("channel", ini["channel"])), terms)
    if aspec.t1 > scfg.t_end:
        raise ConfigError("direction-spec.t1", "must not exceed solver.t_end")
    if params.K < aspec.channel:
        raise ConfigError("params.sigmas", "the anticipating channel needs a multiplicative noise channel")
    n_paths = int(spec.get("paths", args.paths))
    rows = []
    for i in range(n_paths):
        p = NoisePath.generate(cfg.seed, scfg.dt, scfg.n_steps, params.K, 0, traj_index=i)
        r = anticipating_sides(aspec, s0.d, p, scfg, params)
        rows.append((i, r["strat"], r["forward"], r["trace"], r["correction"], r["rhs"]))
    write_csv(os.path.join(out, "skorohod_paths.csv"),
              ["traj_index", "stratonovich", "forward", "trace", "correction", "rhs"], rows, meta)
    arr = np.array([r[1:] for r in rows])
    L, R = arr[:, 0], arr[:, 4]
    se = float(np.sqrt(L.var(ddof=1) / n_paths + R.var(ddof=1) / n_paths)) if n_paths > 1 else float("nan")
    z = float((L.mean() - R.mean()) / se) if se > 0 else 0.0
    summary = dict(meta, paths=n_paths, lhs_mean=float(L.mean()), rhs_mean=float(R.mean()), combined_se=se, z=z,
                   correction_identically_zero=bool(np.all(arr[:, 3] == 0)))
    write_json(os.path.join(out, "skorohod_summary.json"), summary)
    print(f"lhs {L.mean():.6g} rhs {R.mean():.6g} se {se:.3g} z {z:.3f}")
    return EXIT_OK if abs(z) <= 3.0 or n_paths < 2 else EXIT_FAILED


def cmd_verify_operators(args) -> int:
    from .verification import SuiteReport, check_refinement

    rep = SuiteReport("operators")
    check_refinement(rep, tuple(args.resolutions))
    header, rows = rep.tables["refinement"]
    w = csv.writer(sys.stdout, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_verify(args) -> int:
    suites = SUITES if "all" in args.suite else tuple(dict.fromkeys(args.suite))
    kw = {"n_paths": args.paths} if args.paths else {}
    return run_verify(suites, args.out, quick=args.quick, **kw)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlcsim", description="Stochastic nematic liquid-crystal flow solver.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory")
    _add_run_flags(p)
    p.add_argument("--scheme", choices=("semi-implicit", "fully-explicit", "both"),
                   help="'both' adds a direct-versus-transformed cross-validation report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="run independent trajectories and merge statistics")
    _add_run_flags(p)
    p.add_argument("--scheme", choices=("semi-implicit", "fully-explicit"))
    p.add_argument("--n-traj", type=int, default=1)
    p.add_argument("--workers", type=int, default=1, help="process count (capped by NLC_THREADS)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("sensitivity", help="tangent, Malliavin derivative or anticipating identity")
    _add_run_flags(p)
    p.add_argument("--scheme", choices=("semi-implicit", "fully-explicit"))
    p.add_argument("--mode", choices=("frechet", "malliavin", "skorohod"), required=True)
    p.add_argument("--direction-spec", help="JSON object or @file")
    p.add_argument("--fd-check", action="store_true", help="compare against perturbed reruns")
    p.add_argument("--paths", type=int, default=200, help="Monte Carlo paths for --mode skorohod")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("verify-operators", help="print operator residual tables as CSV")
    p.add_argument("--resolutions", type=int, nargs="+", default=[32, 64, 128])
    p.set_defaults(func=cmd_verify_operators)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", nargs="+", choices=SUITES + ("all",), default=["all"])
    p.add_argument("--out", default="verify_out")
    p.add_argument("--quick", action="store_true", help="reduced sample counts")
    p.add_argument("--paths", type=int, help="Monte Carlo paths for the skorohod suite")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["main", "make_parser", "build_config", "EXIT_OK", "EXIT_FAILED", "EXIT_CONFIG", "EXIT_DIVERGED"]
