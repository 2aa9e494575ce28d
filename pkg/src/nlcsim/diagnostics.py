"""Energy functionals, identity residuals, norm monitors and refinement studies."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields

import numpy as np

from .grid import DirectorField3, Domain, Params, SimState, VectorField2, inner_h, norm_hm
from .operators import (
    GLParams,
    b2_form,
    dirichlet_energy_director,
    dirichlet_energy_velocity,
    discretization,
    gl_F_integral,
    gl_f_array,
    laplacian_nodes,
    m_stress_div,
)
from .solver import reconstruct_v


@dataclass(frozen=True)
class DiagRecord:
    t: float
    E_kin: float
    E_el: float
    E_gl: float
    E_total: float
    diss_v: float
    diss_d: float
    balance_residual: float
    polar_residual: float
    gl_advection_residual: float
    v_l2: float
    v_h1: float
    d_h1: float
    d_h2: float
    d_h3: float
    q_abs: float
    z_h2: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [getattr(self, c) for c in self.columns()]

    @property
    def finite(self) -> bool:
        return all(math.isfinite(x) for x in self.row())


def balance_residual(d: DirectorField3, v: VectorField2) -> float:
    """``<M(d, d), v> - <B2(v, d), Lap_h d>``."""
    return inner_h(m_stress_div(d, d), v) - b2_form(v, d, laplacian_nodes(d))


def polar_residual(d: DirectorField3, b: DirectorField3, v: VectorField2) -> float:
    """``<M(d,b) + M(b,d), v> - <B2(v,d), Lap_h b> - <B2(v,b), Lap_h d>``."""
    lhs = inner_h(m_stress_div(d, b) + m_stress_div(b, d), v)
    return lhs - b2_form(v, d, laplacian_nodes(b)) - b2_form(v, b, laplacian_nodes(d))


def gl_advection_residual(d: DirectorField3, v: VectorField2, eta: float) -> float:
    """``<f(d), B2(v, d)>`` on interior nodes (zero in the continuum)."""
    disc = discretization(d.domain)
    dn = disc.node_arr(d)
    return float(d.domain.h ** 2 * np.sum(gl_f_array(dn, eta) * disc.b2_raw(disc.vel_vec(v), dn)))


def director_dissipation(d: DirectorField3, params: Params) -> float:
    """``lam gamma |Lap_h d - f(d)|^2`` over interior nodes."""
    disc = discretization(d.domain)
    dn = disc.node_arr(d)
    r = (disc.lap_nodes(dn) - gl_f_array(dn, params.eta))[disc.interior_nodes]
    return float(params.lam * params.gamma * d.domain.h ** 2 * np.sum(r * r))


def energy(v: VectorField2, d: DirectorField3, params: Params):
    """``(E_kin, E_el, E_gl)``."""
    e_kin = 0.5 * inner_h(v, v)
    e_el = 0.5 * params.lam * dirichlet_energy_director(d)
    e_gl = params.lam * gl_F_integral(d, GLParams(params.eta))
    return e_kin, e_el, e_gl


def record(s: SimState, params: Params) -> DiagRecord:
    v = reconstruct_v(s)
    d = s.d
    e_kin, e_el, e_gl = energy(v, d, params)
    b = d - s.lift
    rec = DiagRecord(
        t=s.t,
        E_kin=e_kin,
        E_el=e_el,
        E_gl=e_gl,
        E_total=e_kin + e_el + e_gl,
        diss_v=params.mu * dirichlet_energy_velocity(v),
        diss_d=director_dissipation(d, params),
        balance_residual=balance_residual(d, v),
        polar_residual=polar_residual(d, b, v),
        gl_advection_residual=gl_advection_residual(d, v, params.eta),
        v_l2=norm_hm(v, 0),
        v_h1=norm_hm(v, 1),
        d_h1=norm_hm(d, 1),
        d_h2=norm_hm(d, 2),
        d_h3=norm_hm(d, 3),
        q_abs=abs(s.q),
        z_h2=norm_hm(s.z, 2),
    )
    if not rec.finite:
        raise FloatingPointError(f"non-finite diagnostics at t={s.t:g}")
    return rec


# ---------------------------------------------------------------------------
# energy law


@dataclass
class EnergyReport:
    increments: np.ndarray
    defects: np.ndarray
    monotone: bool
    max_increase: float
    tolerance: float
    cumulative_defect: float
    max_defect: float

    @property
    def passed(self) -> bool:
        return self.monotone


def energy_law_check(records, dt: float, params: Params, noisy: bool = False, rel_tol: float = 1e-8,
                     segments=None) -> EnergyReport:
    """Per-step energy balance of a noise-free run.

    ``increments[n] = E_{n+1} - E_n`` must not exceed ``rel_tol * E(0)``.
    The balance defect

        delta_n = E_{n+1} - E_n + dt (diss_v + diss_d)_{n+1}
                  + dt lam (balance_residual_n + gl_advection_residual_n)

    is ``O(dt^2)`` per step, so ``sum |delta_n|`` is ``O(dt)``.  Steps that
    straddle a boundary jump can be excluded by passing ``segments`` as a
    boolean mask of steps to keep.
    """
    if noisy:
        raise ValueError("energy law check applies to noise-free runs only")
    E = np.array([r.E_total for r in records])
    diss = np.array([r.diss_v + r.diss_d for r in records])
    corr = np.array([r.balance_residual + r.gl_advection_residual for r in records])
    inc = np.diff(E)
    defects = inc + dt * diss[1:] + dt * params.lam * corr[:-1]
    keep = np.ones(len(inc), dtype=bool) if segments is None else np.asarray(segments, dtype=bool)
    tol = rel_tol * max(E[0], 1e-300)
    max_inc = float(inc[keep].max()) if keep.any() else -math.inf
    return EnergyReport(inc, defects, bool(max_inc <= tol), max_inc, tol,
                        float(np.sum(np.abs(defects[keep]))), float(np.abs(defects[keep]).max()) if keep.any() else 0.0)


def regularity_monitors(records, dt: float) -> dict:
    """Sup-in-time and time-integral norm columns of the a priori bound."""
    v2 = np.array([r.v_l2 ** 2 for r in records])
    d1 = np.array([r.d_h1 ** 2 for r in records])
    v1 = np.array([r.v_h1 ** 2 for r in records])
    d2 = np.array([r.d_h2 ** 2 for r in records])
    return {
        "sup_v_l2_sq_plus_d_h1_sq": float(np.max(v2 + d1)),
        "int_v_h1_sq": float(dt * np.sum(v1[:-1])),
        "int_d_h2_sq": float(dt * np.sum(d2[:-1])),
        "sup_q": float(max(r.q_abs for r in records)),
        "sup_z_h2": float(max(r.z_h2 for r in records)),
    }


# ---------------------------------------------------------------------------
# refinement studies

IDENTITIES = ("balance", "polarization")


def manufactured_fields(domain: Domain, family: str = "generic"):
    """Smooth synthetic ``(v, d, b)`` for identity checks.

    ``symmetric`` is the family ``d = (sin pi x sin pi y, cos pi x sin pi y, c)``
    with ``v`` the curl of a ``sin^2`` bubble; its residual vanishes by
    symmetry, so it is exact rather than convergent.  ``generic`` breaks the
    symmetry and exhibits the second-order truncation error.
    """
    pi = np.pi
    S = lambda X, Y: np.sin(pi * X) * np.sin(pi * Y)
    if family == "symmetric":
        v = VectorField2.from_stream_function(domain, lambda X, Y: S(X, Y) ** 2)
        d = DirectorField3.from_function(domain, lambda X, Y: (S(X, Y), np.cos(pi * X) * np.sin(pi * Y), 0.3 + 0 * X))
        b = DirectorField3.from_function(domain, lambda X, Y: (np.cos(pi * X) * np.cos(pi * Y), S(X, Y), 0 * X))
    elif family == "generic":
        v = VectorField2.from_stream_function(domain, lambda X, Y: S(X, Y) ** 2 * np.exp(X - 0.5 * Y))
        d = DirectorField3.from_function(
            domain,
            lambda X, Y: (S(X, Y) + 0.3 * X * Y, np.cos(pi * X) * np.sin(2 * pi * Y) + 0.2 * X, 0.3 + np.cos(pi * X * Y)),
        )
        b = DirectorField3.from_function(
            domain, lambda X, Y: (np.sin(2 * pi * X) * np.sin(pi * Y), np.cos(pi * X) * np.sin(pi * Y), 0 * X)
        )
    else:
        raise ValueError(f"unknown family {family!r}")
    return v, d, b


def random_smooth_fields(domain: Domain, rng: np.random.Generator, n_modes: int = 3):
    """Random low-frequency ``(v, d, b)`` built from a few sine/cosine modes."""
    pi = np.pi

    def scalar():
        a = rng.normal(size=(n_modes, n_modes))
        ph = rng.uniform(0, 2 * pi, size=(n_modes, n_modes))

        def f(X, Y):
            out = 0 * X
            for i in range(n_modes):
                for j in range(n_modes):
                    out = out + a[i, j] * np.cos((i + 1) * X * 1.3 + ph[i, j]) * np.cos((j + 1) * Y * 1.1 + ph[j, i]) / (1 + i + j)
            return out

        return f

    psi_c = rng.normal(size=(n_modes, n_modes)) / (1 + np.add.outer(np.arange(n_modes), np.arange(n_modes))) ** 2

    def psi(X, Y):
        out = 0 * X
        for i in range(n_modes):
            for j in range(n_modes):
                out = out + psi_c[i, j] * np.sin((i + 1) * pi * X) * np.sin((j + 1) * pi * Y)
        return out * np.sin(pi * X) * np.sin(pi * Y)

    v = VectorField2.from_stream_function(domain, psi)
    fd = [scalar() for _ in range(3)]
    fb = [scalar() for _ in range(3)]
    d = DirectorField3.from_function(domain, lambda X, Y: [f(X, Y) for f in fd])
    b = DirectorField3.from_function(domain, lambda X, Y: [f(X, Y) for f in fb])
    return v, d, b


def identity_residual(identity: str, v, d, b) -> float:
    if identity == "balance":
        return balance_residual(d, v)
    if identity == "polarization":
        return polar_residual(d, b, v)
    raise ValueError(f"identity must be one of {IDENTITIES}")


@dataclass
class RefinementResult:
    identity: str
    rows: list  # (n, h, residual)
    slope: float | None
    exact: bool

    @property
    def passed(self) -> bool:
        return self.exact or (self.slope is not None and self.slope >= 1.8)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["identity", "n", "h", "residual", "fitted_order"])
        order = "exact" if self.exact else f"{self.slope:.6f}"
        for n, h, r in self.rows:
            w.writerow([self.identity, n, repr(h), repr(r), order])
        return buf.getvalue()


def refinement_study(identity: str, resolutions, fields_fn=None, exact_tol: float = 1e-12) -> RefinementResult:
    """Residual of an identity against ``h`` with the least-squares order.

    ``fields_fn(domain) -> (v, d, b)`` defaults to the generic manufactured
    family.  If every residual is below ``exact_tol`` (relative to the size of
    the individual terms) the identity is reported as exact.
    """
    resolutions = list(resolutions)
    if len(resolutions) < 3:
        raise ValueError("refinement study needs at least 3 resolutions")
    if identity not in IDENTITIES:
        raise ValueError(f"identity must be one of {IDENTITIES}")
    if fields_fn is None:
        fields_fn = manufactured_fields
    rows = []
    exact = True
    for n in resolutions:
        dom = Domain(n)
        v, d, b = fields_fn(dom)
        r = identity_residual(identity, v, d, b)
        scale = abs(b2_form(v, d, laplacian_nodes(d if identity == "balance" else b))) + 1.0
        if abs(r) > exact_tol * scale:
            exact = False
        rows.append((n, dom.h, abs(r)))
    slope = None
    if not exact:
        hs = np.log([r[1] for r in rows])
        rs = np.log(np.maximum([r[2] for r in rows], 1e-300))
        slope = float(np.polyfit(hs, rs, 1)[0])
    return RefinementResult(identity, rows, slope, exact)
