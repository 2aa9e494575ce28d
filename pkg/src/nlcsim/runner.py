"""Run orchestration: single runs, ensembles and verification suites.

Every artifact carries the config hash and the code version; nothing
time-dependent is written, so identical (config, seed) pairs give
byte-identical output directories.
"""
from __future__ import annotations

import hashlib
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import RunConfig, initial_fields
from .diagnostics import DiagRecord, record
from .io import write_checkpoint, write_csv, write_json, write_noise, write_records_csv, write_snapshot
from .noise import STREAM_JUMPS, JumpBoundary, NoisePath, make_rng, step_jump_boundary, stokes_modes
from .sensitivity import AnticipatingSpec, fitted_order
from .solver import SolverDivergence, initial_state, reconstruct_v, run_transformed

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

SUMMARY_COLUMNS = ["traj_index", "status", "q_T"] + DiagRecord.columns()


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _meta(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.hash, "code_version": __version__}


@dataclass
class TrajectoryResult:
    traj_index: int
    status: str
    records: list
    error: str = ""

    @property
    def summary_row(self):
        if self.records:
            last = self.records[-1]
            return [self.traj_index, self.status, last.q_abs] + last.row()
        return [self.traj_index, self.status, math.nan] + [math.nan] * len(DiagRecord.columns())


def build_run(cfg: RunConfig, traj_index: int = 0):
    """Initial state, noise path and jump process of trajectory ``traj_index``."""
    dom, params, scfg = cfg.domain, cfg.params, cfg.solver
    noise = cfg.data["noise"]
    modes = stokes_modes(dom, noise["w0_modes"])
    path = NoisePath.generate(cfg.seed, scfg.dt, scfg.n_steps, params.K, modes.M, traj_index=traj_index)
    v0, d0 = initial_fields(cfg, traj_index)
    ini = cfg.data["initial"]
    if ini["preset"] == "anticipating":
        spec = AnticipatingSpec(v0, ini["t1"], ini["channel"], tuple((k, float(c)) for k, c in ini["terms"]))
        v0 = spec.initial_velocity(path)
    s0 = initial_state(v0, d0, modes)
    jb = None
    if scfg.boundary_mode == "jump":
        jb = step_jump_boundary(JumpBoundary(noise["jump_rate"], noise["jump_amplitude"]), 0.0, scfg.t_end,
                                make_rng(cfg.seed, traj_index, STREAM_JUMPS))
    return s0, path, jb, modes


def simulate_trajectory(cfg: RunConfig, out_dir, traj_index: int = 0) -> TrajectoryResult:
    """Run one trajectory and write its artifacts into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    out = cfg.data["output"]
    s0, path, jb, modes = build_run(cfg, traj_index)
    params, scfg = cfg.params, cfg.solver
    records = []
    snaps = []
    last = [s0]

    def observer(s, n):
        if n % out["record_every"] == 0 or n == scfg.n_steps:
            try:
                records.append(record(s, params))
            except FloatingPointError as e:
                raise SolverDivergence(str(e), state=last[0], step=n) from e
        last[0] = s
        if out["snapshot_every"] and n % out["snapshot_every"] == 0:
            sdir = os.path.join(out_dir, "snapshots")
            os.makedirs(sdir, exist_ok=True)
            for name, fld in (("v", reconstruct_v(s)), ("d", s.d)):
                fn = os.path.join("snapshots", f"{name}_{n:06d}.nlcf")
                write_snapshot(os.path.join(out_dir, fn), fld, s.t)
                snaps.append(fn)

    status, error = "ok", ""
    # the stored copy points at its own directory so artifacts do not depend on where they were written
    cfg.updated(output={"dir": "."}).save(os.path.join(out_dir, "config.json"))
    files = ["config.json"]
    try:
        run_transformed(s0, path, scfg, params, jb=jb, store=False, observer=observer, modes=modes)
    except SolverDivergence as e:
        status, error = "diverged", str(e)
        dump = os.path.join(out_dir, "dump")
        if e.state is not None:
            write_checkpoint(dump, e.state, cfg.hash)
        os.makedirs(dump, exist_ok=True)
        write_noise(os.path.join(dump, "noise.nlcn"), path)
        files += sorted(os.path.join("dump", f) for f in os.listdir(dump))
        log.error("trajectory %d diverged: %s", traj_index, e)
    write_records_csv(os.path.join(out_dir, "diagnostics.csv"), records, _meta(cfg))
    files += ["diagnostics.csv"] + snaps
    manifest = dict(_meta(cfg), status=status, error=error, traj_index=traj_index, seed=cfg.seed,
                    files={f: _sha256(os.path.join(out_dir, f)) for f in files})
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return TrajectoryResult(traj_index, status, records, error)


def cross_validate(cfg: RunConfig, out_dir, refinements: int = 3) -> dict:
    """Direct versus transformed runs on one shared path at ``dt / 2^k``."""
    from .verification import paired_errors

    params, scfg = cfg.params, cfg.solver
    s0, _, _, modes = build_run(cfg)
    levels = [scfg.n_steps * 2 ** k for k in range(refinements)]
    finest = levels[-1]
    base = NoisePath.generate(cfg.seed, scfg.t_end / finest, finest, params.K, modes.M)
    v0 = reconstruct_v(s0)
    errs = paired_errors(v0, s0.d, params, base, levels, modes)
    dts = [scfg.t_end / lev for lev in levels]
    slope = fitted_order(dts, errs) if np.all(errs > 0) else math.inf
    write_csv(os.path.join(out_dir, "crossval.csv"), ["dt", "sup_h_error"], list(zip(dts, map(float, errs))),
              _meta(cfg))
    rep = dict(_meta(cfg), slope=slope if math.isfinite(slope) else "inf", dt=dts, sup_h_error=[float(e) for e in errs])
    write_json(os.path.join(out_dir, "crossval.json"), rep)
    return rep


def run_simulate(cfg: RunConfig, out_dir=None, scheme_both: bool = False) -> int:
    out_dir = out_dir or cfg.data["output"]["dir"]
    res = simulate_trajectory(cfg, out_dir)
    if res.status != "ok":
        return EXIT_DIVERGED
    if scheme_both:
        rep = cross_validate(cfg, out_dir)
        log.info("cross-validation slope %s", rep["slope"])
    return EXIT_OK


def _worker(args):
    cfg_dict, out_dir, i = args
    cfg = RunConfig.from_dict(cfg_dict)
    try:
        return simulate_trajectory(cfg, out_dir, i).summary_row, ""
    except Exception as e:  # reported in the manifest, never fatal to the ensemble
        return TrajectoryResult(i, "failed", []).summary_row, f"{type(e).__name__}: {e}"


def worker_count(requested: int) -> int:
    cap = os.environ.get("NLC_THREADS")
    n = max(1, int(requested))
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_ensemble(cfg: RunConfig, n_traj: int, workers: int = 1, out_dir=None) -> int:
    """Trajectories ``0 .. n_traj-1`` with merged per-trajectory and mean/SE tables."""
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    out_dir = out_dir or cfg.data["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg.to_dict(), os.path.join(out_dir, f"traj_{i:04d}"), i) for i in range(n_traj)]
    nw = min(worker_count(workers), n_traj)
    if nw == 1:
        results = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            results = list(ex.map(_worker, jobs))
    rows = [r for r, _ in sorted(results, key=lambda x: x[0][0])]
    errors = {r[0]: err for r, err in results if err}
    failed = [r[0] for r in rows if r[1] != "ok"]
    meta = _meta(cfg)
    write_csv(os.path.join(out_dir, "ensemble.csv"), SUMMARY_COLUMNS, rows, meta)
    ok = [r for r in rows if r[1] == "ok"]
    stats_rows = []
    for j, col in enumerate(SUMMARY_COLUMNS[2:], start=2):
        x = np.array([r[j] for r in ok], dtype=float)
        mean = float(x.mean()) if len(x) else math.nan
        se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan
        stats_rows.append([col, len(x), mean, se])
    write_csv(os.path.join(out_dir, "stats.csv"), ["column", "n", "mean", "se"], stats_rows, meta)
    manifest = dict(meta, n_traj=n_traj, seed=cfg.seed, failed=failed,
                    errors={str(k): v for k, v in sorted(errors.items())},
                    files={f: _sha256(os.path.join(out_dir, f)) for f in ("ensemble.csv", "stats.csv")})
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return EXIT_OK if not failed else EXIT_FAILED


def run_verify(suites, out_dir, quick: bool = False, **kw) -> int:
    """Run verification suites; JSON report plus one CSV per table. Exit 0 iff all pass."""
    from .verification import SUITE_FUNCS

    os.makedirs(out_dir, exist_ok=True)
    reports = []
    for name in suites:
        fn = SUITE_FUNCS[name]
        rep = fn(quick=quick, **kw) if name == "skorohod" else fn(quick=quick)
        reports.append(rep)
        rows = [[c.name, "pass" if c.passed else "FAIL", float(c.value), float(c.threshold), c.detail]
                for c in rep.checks]
        write_csv(os.path.join(out_dir, f"{name}_checks.csv"), ["check", "result", "value", "threshold", "detail"],
                  rows, {"code_version": __version__})
        for tname, (header, trows) in rep.tables.items():
            write_csv(os.path.join(out_dir, f"{name}_{tname}.csv"), header, trows, {"code_version": __version__})
        log.info("suite %s: %s", name, "pass" if rep.passed else "FAIL")
    report = {"code_version": __version__, "passed": all(r.passed for r in reports),
              "suites": [r.as_dict() for r in reports]}
    write_json(os.path.join(out_dir, "report.json"), report)
    return EXIT_OK if report["passed"] else EXIT_FAILED
