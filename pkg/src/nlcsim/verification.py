"""Verification suites: operators, energy, frechet, malliavin, skorohod,
plus the equivalence, jump and fixed-point studies they build on.

Each suite returns a :class:`SuiteReport` with one :class:`Check` per
property; ``tables`` carries CSV-ready rows for the human report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .diagnostics import (
    IDENTITIES,
    energy_law_check,
    manufactured_fields,
    polar_residual,
    record,
    refinement_study,
)
from .grid import DirectorField3, Domain, Params, VectorField2, inner_h, norm_hm
from .noise import (
    JumpBoundary,
    MalliavinDirection,
    NoisePath,
    make_rng,
    step_jump_boundary,
    stokes_modes,
)
from .operators import (
    GLParams,
    apply_a1,
    b1_form,
    b2_form,
    discretization,
    dual_norm_v,
    gl_fprime_apply,
    gl_f,
    leray_project,
    m_stress_div,
)
from .sensitivity import (
    AnticipatingSpec,
    anticipating_sides,
    cameron_martin_check,
    fd_check,
    fitted_order,
    run_malliavin,
    run_tangent,
)
from .solver import SolverConfig, initial_state, run_direct, run_transformed

SUITES = ("operators", "energy", "frechet", "malliavin", "skorohod")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": _json_num(self.value),
                "threshold": _json_num(self.threshold), "detail": self.detail}


def _json_num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, *args, **kw):
        self.checks.append(Check(*args, **kw))

    def as_dict(self):
        return {"suite": self.suite, "passed": self.passed, "checks": [c.as_dict() for c in self.checks]}


# ---------------------------------------------------------------------------
# shared smooth data


def _bump(X, Y):
    return np.sin(np.pi * X) * np.sin(np.pi * Y)


def vortex(domain: Domain, amplitude: float = 1.0) -> VectorField2:
    """Discrete curl of ``amplitude sin^2(pi x) sin^2(pi y)``."""
    return VectorField2.from_stream_function(domain, lambda X, Y: amplitude * _bump(X, Y) ** 2)


def tilted_director(domain: Domain, tilt: float = 0.5) -> DirectorField3:
    """``(sin th, 0, cos th)`` with ``th = tilt sin(pi x) sin(pi y)``; unit length, vertical on the boundary."""
    return DirectorField3.from_function(
        domain, lambda X, Y: (np.sin(tilt * _bump(X, Y)), 0 * X, np.cos(tilt * _bump(X, Y)))
    )


def random_div_free(domain: Domain, rng) -> VectorField2:
    n = domain.n
    psi = np.zeros((n + 1, n + 1))
    psi[1:n, 1:n] = rng.standard_normal((n - 1, n - 1))
    return VectorField2.from_stream_function(domain, lambda *_: psi * domain.h)


def random_interior_director(domain: Domain, rng) -> DirectorField3:
    return DirectorField3(domain, rng.standard_normal((3, domain.n + 1, domain.n + 1))).interior_only()


# ---------------------------------------------------------------------------
# operators


def check_skew_identities(report: SuiteReport, resolutions=(16, 32, 64), samples: int = 100, seed: int = 0,
                          tol: float = 1e-12):
    rng = np.random.default_rng(seed)
    worst1 = worst2 = 0.0
    for n in resolutions:
        dom = Domain(n)
        for _ in range(samples):
            u = random_div_free(dom, rng)
            v = random_div_free(dom, rng)
            s1 = norm_hm(u, 0) * norm_hm(v, 1) * norm_hm(v, 0)
            worst1 = max(worst1, abs(b1_form(u, v, v)) / s1)
            dt_ = random_interior_director(dom, rng)
            s2 = norm_hm(u, 0) * norm_hm(dt_, 1) * norm_hm(dt_, 0)
            worst2 = max(worst2, abs(b2_form(u, dt_, dt_)) / s2)
    report.add("b1(u,v,v)=0", worst1 <= tol, worst1, tol, f"{samples} samples at {tuple(resolutions)}")
    report.add("<B2(v,d),d>=0", worst2 <= tol, worst2, tol, f"{samples} samples at {tuple(resolutions)}")


def check_refinement(report: SuiteReport, resolutions=(32, 64, 128)):
    rows = []
    for ident in IDENTITIES:
        res = refinement_study(ident, resolutions)
        rows.extend([(ident, "generic", n, h, r, res.slope) for n, h, r in res.rows])
        report.add(f"{ident} refinement order", res.passed, res.slope, 1.8, "generic manufactured fields")
        sym = refinement_study(ident, resolutions, lambda d: manufactured_fields(d, "symmetric"))
        rows.extend([(ident, "symmetric", n, h, r, "exact" if sym.exact else sym.slope) for n, h, r in sym.rows])
        report.add(f"{ident} symmetric family", sym.passed, max(r for *_, r in sym.rows), 1.8,
                   "exact" if sym.exact else f"order {sym.slope}")
    report.tables["refinement"] = (("identity", "family", "n", "h", "residual", "order"), rows)


def check_projection(report: SuiteReport, n: int = 16, seed: int = 1):
    rng = np.random.default_rng(seed)
    dom = Domain(n)
    disc = discretization(dom)
    w1 = disc.vel_field(rng.standard_normal(disc.nf))
    w2 = disc.vel_field(rng.standard_normal(disc.nf))
    p1, p2 = leray_project(w1), leray_project(w2)
    idem = norm_hm(leray_project(p1) - p1, 0) / norm_hm(p1, 0)
    adj = abs(inner_h(p1, w2) - inner_h(w1, p2)) / (norm_hm(w1, 0) * norm_hm(w2, 0))
    div = np.abs(disc.D @ disc.vel_vec(p1)).max() * dom.h / norm_hm(w1, 0)
    phi = rng.standard_normal(disc.nc)
    grad = disc.vel_field(-(disc.DT @ phi))
    gres = norm_hm(leray_project(grad), 0) / norm_hm(grad, 0)
    report.add("P idempotent", idem <= 1e-12, idem, 1e-12)
    report.add("P self-adjoint", adj <= 1e-12, adj, 1e-12)
    report.add("P divergence-free", div <= 1e-10, div, 1e-10)
    report.add("P kills gradients", gres <= 1e-12, gres, 1e-12)
    a = apply_a1(p1)
    sym = abs(inner_h(a, p2) - inner_h(apply_a1(p2), p1)) / (norm_hm(p1, 1) * norm_hm(p2, 1))
    report.add("A1 symmetric", sym <= 1e-12, sym, 1e-12)
    report.add("A1 positive", inner_h(a, p1) >= 0, inner_h(a, p1), 0.0)


def check_gl_jacobian(report: SuiteReport, n: int = 8, seed: int = 2):
    rng = np.random.default_rng(seed)
    dom = Domain(n)
    d = DirectorField3(dom, rng.standard_normal((3, n + 1, n + 1)))
    b = DirectorField3(dom, rng.standard_normal((3, n + 1, n + 1)))
    p = GLParams(0.7)
    exact = gl_fprime_apply(d, b, p).values
    errs = []
    epss = (1e-2, 1e-3)
    for eps in epss:
        fd = (gl_f(d + b * eps, p).values - gl_f(d - b * eps, p).values) / (2 * eps)
        errs.append(np.abs(fd - exact).max())
    order = fitted_order(epss, errs)
    report.add("f' central-difference order", order >= 1.9, order, 1.9)


def check_norm_ratios(report: SuiteReport, resolutions=(16, 32, 64), samples: int = 100, seed: int = 3):
    """Boundedness of the trilinear-form ratios (reported, no constant asserted)."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in resolutions:
        dom = Domain(n)
        r1 = r3 = 0.0
        for _ in range(samples):
            u, v, w = (random_smooth_velocity(dom, rng) for _ in range(3))
            den = math.sqrt(norm_hm(u, 0) * norm_hm(u, 1)) * norm_hm(v, 1) * math.sqrt(norm_hm(w, 0) * norm_hm(w, 1))
            r1 = max(r1, abs(b1_form(u, v, w)) / den)
            d, b = random_smooth_director(dom, rng), random_smooth_director(dom, rng)
            den3 = math.sqrt(norm_hm(d, 1) * norm_hm(d, 2) * norm_hm(b, 1) * norm_hm(b, 2))
            r3 = max(r3, dual_norm_v(m_stress_div(d, b)) / den3)
        rows.append((n, r1, r3))
    report.tables["norm_ratios"] = (("n", "max_b1_ratio", "max_M_ratio"), rows)
    finite = all(math.isfinite(a) and math.isfinite(c) for _, a, c in rows)
    spread = max(max(r[1] for r in rows) / min(r[1] for r in rows), max(r[2] for r in rows) / min(r[2] for r in rows))
    report.add("norm-inequality ratios bounded", finite, spread, math.inf, "max/min ratio across resolutions")


def _smooth_scalar(rng, k: int = 3):
    a = rng.standard_normal((k, k)) / (1 + np.add.outer(np.arange(k), np.arange(k))) ** 2
    return lambda X, Y: sum(a[i, j] * np.sin((i + 1) * np.pi * X) * np.sin((j + 1) * np.pi * Y)
                            for i in range(k) for j in range(k))


def random_smooth_velocity(domain: Domain, rng) -> VectorField2:
    f = _smooth_scalar(rng)
    return VectorField2.from_stream_function(domain, lambda X, Y: f(X, Y) * _bump(X, Y))


def random_smooth_director(domain: Domain, rng) -> DirectorField3:
    fs = [_smooth_scalar(rng) for _ in range(3)]
    c = rng.standard_normal(3)
    return DirectorField3.from_function(domain, lambda X, Y: [c[i] + fs[i](X, Y) for i in range(3)])


def suite_operators(quick: bool = False) -> SuiteReport:
    rep = SuiteReport("operators")
    check_skew_identities(rep, samples=20 if quick else 100)
    check_refinement(rep)
    check_projection(rep)
    check_gl_jacobian(rep)
    check_norm_ratios(rep, samples=5 if quick else 100)
    return rep


# ---------------------------------------------------------------------------
# energy


def equilibrium_drift(n: int = 16, steps: int = 1000, dt: float = 1e-3, vec=(0.0, 0.6, 0.8)) -> float:
    """Largest per-step change of the constant unit-director rest state."""
    dom = Domain(n)
    d0 = DirectorField3.constant(dom, vec)
    s0 = initial_state(VectorField2.zeros(dom), d0)
    cfg = SolverConfig(dt, steps * dt)
    path = NoisePath.generate(0, dt, steps, 0, 0)
    disc = discretization(dom)
    prev = [disc.vel_vec(s0.u), disc.node_arr(s0.d)]
    worst = [0.0]

    def obs(s, k):
        u, d = disc.vel_vec(s.u), disc.node_arr(s.d)
        worst[0] = max(worst[0], np.abs(u - prev[0]).max(initial=0.0), np.abs(d - prev[1]).max())
        prev[0], prev[1] = u, d

    run_transformed(s0, path, cfg, Params(), store=False, observer=obs)
    return worst[0]


def energy_run(n: int, dt: float, t_end: float, params: Params, amplitude=1.0, tilt=1.0, jb=None):
    dom = Domain(n)
    s0 = initial_state(vortex(dom, amplitude), tilted_director(dom, tilt))
    steps = int(round(t_end / dt))
    mode = "jump" if jb is not None else "fixed"
    cfg = SolverConfig(dt, t_end, boundary_mode=mode)
    path = NoisePath.generate(0, dt, steps, 0, 0)
    recs = []
    run_transformed(s0, path, cfg, params, jb=jb, store=False,
                              observer=lambda s, k: recs.append(record(s, params)))
    return recs


def suite_energy(quick: bool = False) -> SuiteReport:
    rep = SuiteReport("energy")
    drift = equilibrium_drift()
    rep.add("equilibrium drift per step", drift <= 1e-12, drift, 1e-12, "1000 steps, 16x16")
    p = Params()
    rows = []
    defects = []
    dts = (2e-3, 1e-3, 5e-4)
    for dt in dts:
        recs = energy_run(32, dt, 0.1, p)
        er = energy_law_check(recs, dt, p)
        if dt == 1e-3:
            rep.add("energy non-increasing (dt=1e-3, 32x32)", er.monotone, er.max_increase, er.tolerance)
        defects.append(er.max_defect)
        rows.append((dt, er.max_increase, er.max_defect, er.cumulative_defect))
    order = fitted_order(dts, defects)
    rep.add("energy-balance defect order in dt", order >= 1.0, order, 1.0, "max per-step defect")
    rep.tables["energy"] = (("dt", "max_increase", "max_defect", "cumulative_defect"), rows)
    return rep


# ---------------------------------------------------------------------------
# frechet


FRECHET_ETA = 0.1


def frechet_problem(n: int = 16):
    """Base data and direction for the finite-difference check.

    The director sits close to the zero of the Ginzburg-Landau well where the
    cubic term is strongest, so the third-order remainder is visible above
    round-off at the smallest perturbation.
    """
    dom = Domain(n)
    params = Params(eta=FRECHET_ETA, sigma0=0.5, sigmas=(0.7,))
    v0 = vortex(dom, 2.0)
    d0 = DirectorField3.from_function(dom, lambda X, Y: (0.05 * _bump(X, Y), 0 * X, 1 - _bump(X, Y)))
    u0 = VectorField2.from_stream_function(
        dom, lambda X, Y: 0.01 * np.sin(np.pi * X) ** 2 * np.sin(2 * np.pi * Y) ** 2)
    b0 = DirectorField3.from_function(dom, lambda X, Y: (_bump(X, Y), 0 * X, 0 * X)).interior_only()
    return dom, params, v0, d0, u0, b0


def suite_frechet(quick: bool = False) -> SuiteReport:
    rep = SuiteReport("frechet")
    dom, params, v0, d0, u0, b0 = frechet_problem()
    dt, T = 1e-3, 0.1
    cfg = SolverConfig(dt, T)
    path = NoisePath.generate(5, dt, int(round(T / dt)), params.K, 4)
    rows, order = fd_check(v0, d0, u0, b0, path, cfg, params)
    rep.tables["fd_check"] = (("h", "mismatch"), rows)
    rep.add("FD mismatch order in h", order >= 1.0, order, 1.0, "h in {1e-2,1e-3,1e-4}, 16x16, T=0.1")
    # linearity of the tangent map
    s0 = initial_state(v0, d0)
    _, traj = run_transformed(s0, path, cfg, params)
    rng = np.random.default_rng(4)
    u1, u2 = random_smooth_velocity(dom, rng), random_smooth_velocity(dom, rng)
    b1 = random_smooth_director(dom, rng).interior_only()
    b2 = random_smooth_director(dom, rng).interior_only()
    a, b = 0.7, -1.3
    U1, D1 = run_tangent(traj, u1, b1, cfg, params)
    U2, D2 = run_tangent(traj, u2, b2, cfg, params)
    U3, D3 = run_tangent(traj, u1 * a + u2 * b, b1 * a + b2 * b, cfg, params)
    num = max(np.abs(U3 - a * U1 - b * U2).max(), np.abs(D3 - a * D1 - b * D2).max())
    den = max(np.abs(U3).max(), np.abs(D3).max())
    lin = num / den
    rep.add("tangent linearity", lin <= 1e-10, lin, 1e-10)
    # coupling consistency of the tangent system: polarization identity on
    # (base director, tangent director, tangent velocity) pairs
    coupling = []
    for m in (16, 32, 64):
        dm = Domain(m)
        d = tilted_director(dm, 1.0)
        dh = DirectorField3.from_function(dm, lambda X, Y: (_bump(X, Y) * X, np.sin(2 * np.pi * X) * _bump(X, Y), 0 * X))
        uh = VectorField2.from_stream_function(dm, lambda X, Y: _bump(X, Y) ** 2 * np.exp(X - 0.5 * Y))
        coupling.append((m, dm.h, abs(polar_residual(d, dh, uh))))
    slope = fitted_order([c[1] for c in coupling], [c[2] for c in coupling])
    rep.tables["tangent_coupling"] = (("n", "h", "polar_residual"), coupling)
    rep.add("tangent coupling residual order", slope >= 1.8, slope, 1.8,
            "M/B2 polarization on tangent-type pairs")
    return rep


# ---------------------------------------------------------------------------
# malliavin


def malliavin_problem(n: int = 16):
    dom = Domain(n)
    params = Params(sigma0=0.5, sigmas=(0.7,))
    return dom, params, vortex(dom, 0.5), tilted_director(dom, 0.8)


def suite_malliavin(quick: bool = False, eps: float = 1e-4) -> SuiteReport:
    rep = SuiteReport("malliavin")
    dom, params, v0, d0 = malliavin_problem()
    dt, T = 1e-3, 0.1
    cfg = SolverConfig(dt, T)
    modes = stokes_modes(dom, 4)
    path = NoisePath.generate(7, dt, int(round(T / dt)), params.K, modes.M)
    s0 = initial_state(v0, d0, modes)
    _, traj = run_transformed(s0, path, cfg, params, modes=modes)
    rows = []
    for dirn in (MalliavinDirection(1, 0.03), MalliavinDirection(0, 0.03, 0), MalliavinDirection(0, 0.05, 2)):
        rel, ref = cameron_martin_check(traj, path, s0, dirn, cfg, params, eps)
        rows.append((dirn.channel, dirn.mode, dirn.v, rel, ref))
        rep.add(f"Cameron-Martin channel {dirn.channel} mode {dirn.mode} v={dirn.v}", rel <= 1e-2 and ref > 0,
                rel, 1e-2)
    rep.tables["cameron_martin"] = (("channel", "mode", "v", "rel_error", "derivative_norm"), rows)
    # adaptedness: zero before v, and zero everywhere for v beyond the horizon
    dirn = MalliavinDirection(1, 0.05)
    XI, ETA = run_malliavin(traj, path, dirn, cfg, params)
    n_v = int(round(0.05 / dt))
    before = max(np.abs(XI[: n_v + 1]).max(), np.abs(ETA[: n_v + 1]).max())
    rep.add("zero for t < v", before == 0.0, before, 0.0)
    XI2, ETA2 = run_malliavin(traj, path, MalliavinDirection(1, T + 0.01), cfg, params)
    late = max(np.abs(XI2).max(), np.abs(ETA2).max())
    rep.add("zero for v > t_end", late == 0.0, late, 0.0)
    return rep


# ---------------------------------------------------------------------------
# skorohod


def skorohod_problem(n: int = 8):
    dom = Domain(n)
    params = Params(sigmas=(1.0,))
    psi = vortex(dom, 2.0)
    return dom, params, psi, tilted_director(dom, 0.5)


def skorohod_mc(terms, n_paths: int = 2000, seed: int = 11, t1: float = 0.05, dt: float = 2e-3, t_end: float = 0.1):
    """Monte Carlo means of both sides of the Stratonovich/Skorohod identity."""
    dom, params, psi, d0 = skorohod_problem()
    spec = AnticipatingSpec(psi, t1, 1, tuple(terms))
    cfg = SolverConfig(dt, t_end)
    steps = int(round(t_end / dt))
    L = np.empty(n_paths)
    R = np.empty(n_paths)
    C = np.empty(n_paths)
    for i in range(n_paths):
        path = NoisePath.generate(seed, dt, steps, 1, 0, traj_index=i)
        r = anticipating_sides(spec, d0, path, cfg, params)
        L[i], R[i], C[i] = r["strat"], r["rhs"], r["correction"]
    se = math.sqrt(L.var(ddof=1) / n_paths + R.var(ddof=1) / n_paths)
    return {"lhs": L.mean(), "rhs": R.mean(), "se": se, "z": (L.mean() - R.mean()) / se,
            "correction_mean": C.mean(), "correction_max_abs": np.abs(C).max()}


def suite_skorohod(quick: bool = False, n_paths: int | None = None) -> SuiteReport:
    rep = SuiteReport("skorohod")
    if n_paths is None:
        n_paths = 200 if quick else 2000
    rows = []
    for label, terms in (("linear", (("linear", 1.0),)), ("deterministic", (("const", 1.0),))):
        r = skorohod_mc(terms, n_paths)
        rows.append((label, n_paths, r["lhs"], r["rhs"], r["se"], r["z"], r["correction_mean"]))
        rep.add(f"identity in mean ({label} R)", abs(r["z"]) <= 3.0, abs(r["z"]), 3.0,
                f"lhs={r['lhs']:.6g} rhs={r['rhs']:.6g} se={r['se']:.3g}")
        if label == "deterministic":
            rep.add("correction vanishes for deterministic R", r["correction_max_abs"] == 0.0,
                    r["correction_max_abs"], 0.0)
    rep.tables["skorohod"] = (("R_nu", "paths", "lhs_mean", "rhs_mean", "combined_se", "z", "correction_mean"), rows)
    return rep


# ---------------------------------------------------------------------------
# further studies used by the acceptance suite


def paired_errors(v0: VectorField2, d0: DirectorField3, params: Params, base: NoisePath, levels,
                  modes=None) -> np.ndarray:
    """Sup-in-time ``H`` distance between direct and transformed runs.

    ``base`` is sampled on the finest level; coarser paths sum its
    increments so every level sees the same Brownian path.
    """
    dom = v0.domain
    if modes is None:
        modes = stokes_modes(dom, base.M)
    finest = base.n_steps
    t_end = finest * base.dt
    out = np.empty(len(levels))
    for k, lev in enumerate(levels):
        if finest % lev:
            raise ValueError("levels must divide the finest step count")
        r = finest // lev
        path = NoisePath(base.seed, t_end / lev, base.dW.reshape(lev, r, -1).sum(1),
                         base.dbeta.reshape(lev, r, -1).sum(1), base.rho, base.traj_index)
        cfg = SolverConfig(t_end / lev, t_end)
        _, traj = run_transformed(initial_state(v0, d0, modes), path, cfg, params, modes=modes)
        vd, _ = run_direct(v0, d0, path, cfg, params, modes)
        out[k] = max(dom.h * np.linalg.norm(traj.v_vec(m) - vd[m]) for m in range(lev + 1))
    return out


def equivalence_study(n: int = 32, t_end: float = 0.25, n_paths: int = 8, levels=(32, 64, 128, 256),
                      seed: int = 21, params: Params | None = None):
    """Direct versus transformed runs over ``n_paths`` shared paths.

    Returns ``(rows, order)`` where rows are ``(dt, rms_error)``.
    """
    if params is None:
        params = Params(sigma0=0.5, sigmas=(0.7,))
    dom = Domain(n)
    modes = stokes_modes(dom, 4)
    v0, d0 = vortex(dom, 0.5), tilted_director(dom, 0.8)
    finest = max(levels)
    errs = np.array([
        paired_errors(v0, d0, params,
                      NoisePath.generate(seed, t_end / finest, finest, params.K, modes.M, traj_index=i),
                      levels, modes)
        for i in range(n_paths)
    ])
    rms = np.sqrt(np.mean(errs ** 2, axis=0))
    dts = [t_end / lev for lev in levels]
    return list(zip(dts, rms)), fitted_order(dts, rms)


def poisson_count_test(rate: float = 3.0, t_end: float = 1.0, samples: int = 10000, seed: int = 5):
    """Chi-square goodness of fit of the jump count against ``Poisson(rate T)``."""
    counts = np.empty(samples, dtype=int)
    for i in range(samples):
        jb = step_jump_boundary(JumpBoundary(rate), 0.0, t_end, make_rng(seed, i, 1))
        counts[i] = jb.n_jumps
    lam = rate * t_end
    kmax = int(stats.poisson.ppf(0.999, lam))
    obs = np.array([np.sum(counts == k) for k in range(kmax)] + [np.sum(counts >= kmax)], dtype=float)
    probs = np.array([stats.poisson.pmf(k, lam) for k in range(kmax)] + [stats.poisson.sf(kmax - 1, lam)])
    exp_ = probs * samples
    # merge sparse tail bins so every expected count is at least 5
    while exp_[-1] < 5 and len(exp_) > 2:
        exp_[-2] += exp_[-1]
        obs[-2] += obs[-1]
        exp_, obs = exp_[:-1], obs[:-1]
    chi = stats.chisquare(obs, exp_)
    return float(chi.pvalue), counts


def jump_energy_study(n: int = 16, dt: float = 1e-3, t_end: float = 0.2, rate: float = 15.0, seed: int = 3):
    """Noise-free run in jump mode; energy must decrease between jumps."""
    jb = step_jump_boundary(JumpBoundary(rate, amplitude=0.2), 0.0, t_end, make_rng(seed, 0, 1))
    p = Params()
    dom = Domain(n)
    s0 = initial_state(vortex(dom, 0.5), tilted_director(dom, 0.5))
    steps = int(round(t_end / dt))
    cfg = SolverConfig(dt, t_end, boundary_mode="jump")
    path = NoisePath.generate(0, dt, steps, 0, 0)
    recs = []
    run_transformed(s0, path, cfg, p, jb=jb, store=False, observer=lambda s, k: recs.append(record(s, p)))
    # steps ending at a grid time where a jump was applied straddle that jump
    jump_grid = {int(math.ceil(t / dt - 1e-9)) for t in jb.times}
    keep = np.array([(k + 1) not in jump_grid for k in range(steps)])
    return energy_law_check(recs, dt, p, segments=keep), jb


SUITE_FUNCS = {
    "operators": suite_operators,
    "energy": suite_energy,
    "frechet": suite_frechet,
    "malliavin": suite_malliavin,
    "skorohod": suite_skorohod,
}
