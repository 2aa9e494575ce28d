"""Operator algebra on the MAC / node grids.

Velocity unknowns are the interior faces only (wall-normal faces are pinned
to zero); they are stored as flat vectors ``[u1[1:n, :], u2[:, 1:n]]``.  The
Euclidean product on those vectors is ``inner_h / h^2``, so every adjoint
below is a plain matrix transpose.

Conventions that differ in sign from a literal reading of the weak forms:

* ``M(d, b)`` is the projected divergence ``P div(grad d (.) grad b)``,
  i.e. ``[M]_j = sum_i d_i(d_i d . d_j b)``.  With this sign the balance law
  ``<M(d, d), u> = <B2(u, d), Lap d>`` holds; the weak form satisfies
  ``<M(d, b), v> = -sum_ij int d_i d^k d_j b^k d_i v^j``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import DirectorField3, Domain, FieldError, VectorField2, node_weights

DIRECT_SOLVE_MAX_N = 256
# below this size dense stencils beat sparse call overhead
DENSE_MAX_N = 10


class NumericalError(RuntimeError):
    """A linear solve failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class GLParams:
    eta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be positive, got {self.eta}")


# ---------------------------------------------------------------------------
# stencil assembly


class _Builder:
    def __init__(self, shape):
        self.shape = shape
        self.rows, self.cols, self.vals = [], [], []

    def add(self, r, c, v):
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(v)

    def tocsr(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=self.shape)


class Discretization:
    """Constant stencil matrices and cached factorizations for one domain."""

    def __init__(self, domain: Domain):
        self.domain = domain
        n = domain.n
        h = domain.h
        self.n, self.h = n, h

        idx1 = -np.ones((n + 1, n), dtype=np.int64)
        idx1[1:n, :] = np.arange((n - 1) * n).reshape(n - 1, n)
        off = (n - 1) * n
        idx2 = -np.ones((n, n + 1), dtype=np.int64)
        idx2[:, 1:n] = off + np.arange(n * (n - 1)).reshape(n, n - 1)
        self.idx1, self.idx2 = idx1, idx2
        self.n_u1 = off
        self.nf = 2 * off
        self.nc = n * n
        self.nn = (n + 1) ** 2
        self.ni = (n - 1) ** 2

        node_mask = np.zeros((n + 1, n + 1), dtype=bool)
        node_mask[1:n, 1:n] = True
        self.interior_nodes = np.flatnonzero(node_mask.ravel())
        self.boundary_nodes = np.flatnonzero(~node_mask.ravel())

        self._build_velocity_ops()
        self._build_node_ops()
        self._build_stress_ops()
        self.D_sp, self.L_sp = self.D, self.L
        if n <= DENSE_MAX_N:
            self._densify()
        self._saddle = {}
        self._helm = {}
        self._leray = None

    # -- velocity -----------------------------------------------------------
    def _build_velocity_ops(self):
        n, h = self.n, self.h
        idx1, idx2 = self.idx1, self.idx2
        nf = self.nf
        D = _Builder((self.nc, nf))
        L = _Builder((nf, nf))
        Ix, Iy, Gx, Gy = (_Builder((nf, nf)) for _ in range(4))

        def add_if(b, r, c, v):
            if c >= 0:
                b.add(r, c, v)

        for i in range(n):
            for j in range(n):
                c = i * n + j
                add_if(D, c, idx1[i + 1, j], 1.0 / h)
                add_if(D, c, idx1[i, j], -1.0 / h)
                add_if(D, c, idx2[i, j + 1], 1.0 / h)
                add_if(D, c, idx2[i, j], -1.0 / h)

        ih2 = 1.0 / h ** 2
        i2h = 0.5 / h
        for i in range(1, n):
            for j in range(n):
                r = idx1[i, j]
                diag = 4.0 * ih2
                add_if(L, r, idx1[i - 1, j], -ih2)
                add_if(L, r, idx1[i + 1, j], -ih2)
                for jj in (j - 1, j + 1):
                    if 0 <= jj < n:
                        L.add(r, idx1[i, jj], -ih2)
                    else:
                        diag += ih2  # ghost = -u at tangential wall
                L.add(r, r, diag)
                Ix.add(r, r, 1.0)
                for ii, jj in ((i - 1, j), (i, j), (i - 1, j + 1), (i, j + 1)):
                    add_if(Iy, r, idx2[ii, jj], 0.25)
                add_if(Gx, r, idx1[i + 1, j], i2h)
                add_if(Gx, r, idx1[i - 1, j], -i2h)
                if j + 1 < n:
                    Gy.add(r, idx1[i, j + 1], i2h)
                else:
                    Gy.add(r, r, -i2h)
                if j - 1 >= 0:
                    Gy.add(r, idx1[i, j - 1], -i2h)
                else:
                    Gy.add(r, r, i2h)
        for i in range(n):
            for j in range(1, n):
                r = idx2[i, j]
                diag = 4.0 * ih2
                add_if(L, r, idx2[i, j - 1], -ih2)
                add_if(L, r, idx2[i, j + 1], -ih2)
                for ii in (i - 1, i + 1):
                    if 0 <= ii < n:
                        L.add(r, idx2[ii, j], -ih2)
                    else:
                        diag += ih2
                L.add(r, r, diag)
                Iy.add(r, r, 1.0)
                for ii, jj in ((i, j - 1), (i + 1, j - 1), (i, j), (i + 1, j)):
                    add_if(Ix, r, idx1[ii, jj], 0.25)
                if i + 1 < n:
                    Gx.add(r, idx2[i + 1, j], i2h)
                else:
                    Gx.add(r, r, -i2h)
                if i - 1 >= 0:
                    Gx.add(r, idx2[i - 1, j], -i2h)
                else:
                    Gx.add(r, r, i2h)
                add_if(Gy, r, idx2[i, j + 1], i2h)
                add_if(Gy, r, idx2[i, j - 1], -i2h)

        self.D = D.tocsr()
        self.DT = self.D.T.tocsr()
        self.L = L.tocsr()
        self.Ix, self.Iy = Ix.tocsr(), Iy.tocsr()
        self.Gx, self.Gy = Gx.tocsr(), Gy.tocsr()
        self.GxT, self.GyT = self.Gx.T.tocsr(), self.Gy.T.tocsr()

    # -- nodes --------------------------------------------------------------
    def _build_node_ops(self):
        n, h = self.n, self.h
        nid = np.arange(self.nn).reshape(n + 1, n + 1)
        Jx = _Builder((self.nn, self.nf))
        Jy = _Builder((self.nn, self.nf))
        Dx = _Builder((self.nn, self.nn))
        Dy = _Builder((self.nn, self.nn))
        Lap = _Builder((self.nn, self.nn))
        i2h = 0.5 / h
        ih2 = 1.0 / h ** 2
        for i in range(1, n):
            for j in range(1, n):
                r = nid[i, j]
                for jj in (j - 1, j):
                    Jx.add(r, self.idx1[i, jj], 0.5)
                for ii in (i - 1, i):
                    Jy.add(r, self.idx2[ii, j], 0.5)
                Dx.add(r, nid[i + 1, j], i2h)
                Dx.add(r, nid[i - 1, j], -i2h)
                Dy.add(r, nid[i, j + 1], i2h)
                Dy.add(r, nid[i, j - 1], -i2h)
                Lap.add(r, r, -4.0 * ih2)
                for ii, jj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                    Lap.add(r, nid[ii, jj], ih2)
        self.Jx, self.Jy = Jx.tocsr(), Jy.tocsr()
        self.Dxn, self.Dyn = Dx.tocsr(), Dy.tocsr()
        self.Lapn = Lap.tocsr()
        lap_int = self.Lapn[self.interior_nodes]
        self.lap_ii = lap_int[:, self.interior_nodes].tocsc()
        self.lap_ib = lap_int[:, self.boundary_nodes].tocsr()

    def _densify(self):
        for name in ("D", "DT", "L", "Ix", "Iy", "Gx", "Gy", "GxT", "GyT", "Jx", "Jy", "Dxn", "Dyn",
                     "Lapn", "lap_ib", "Gxn", "Gyn", "Cx", "Cy", "A11", "A21", "A12", "A22"):
            setattr(self, name, getattr(self, name).toarray())

    # -- conversions --------------------------------------------------------
    def vel_vec(self, v: VectorField2) -> np.ndarray:
        n = self.n
        return np.concatenate([v.u1[1:n, :].ravel(), v.u2[:, 1:n].ravel()])

    def vel_field(self, x: np.ndarray) -> VectorField2:
        n = self.n
        u1 = np.zeros((n + 1, n))
        u2 = np.zeros((n, n + 1))
        u1[1:n, :] = x[: self.n_u1].reshape(n - 1, n)
        u2[:, 1:n] = x[self.n_u1:].reshape(n, n - 1)
        return VectorField2(self.domain, u1, u2)

    def node_arr(self, d: DirectorField3) -> np.ndarray:
        """Director as ``(nn, 3)`` array of flattened node values."""
        return d.values.reshape(3, -1).T

    def node_field(self, a: np.ndarray) -> DirectorField3:
        n = self.n
        return DirectorField3(self.domain, a.T.reshape(3, n + 1, n + 1))

    # -- Leray projection -------------------------------------------------
    def leray(self) -> "LerayWorkspace":
        if self._leray is None:
            self._leray = LerayWorkspace(self)
        return self._leray

    def stokes_solver(self, coef: float):
        """Solve ``(I + coef L) u + grad p = r, div u = 0``; ``coef = 0`` gives P."""
        key = float(coef)
        if key not in self._saddle:
            if key == 0.0:
                self._saddle[key] = self.leray().project_vec
            else:
                self._saddle[key] = _SaddleSolver(self, sp.identity(self.nf) + key * self.L_sp)
        return self._saddle[key]

    def inverse_stokes(self):
        """``x -> A1^+ P x`` (pseudo-inverse of the Stokes operator)."""
        key = "inv"
        if key not in self._saddle:
            self._saddle[key] = _SaddleSolver(self, self.L_sp)
        return self._saddle[key]

    def helmholtz_solver(self, coef: float):
        """Factorization of ``I - coef Lap`` on interior nodes."""
        key = float(coef)
        if key not in self._helm:
            A = (sp.identity(self.ni) - key * self.lap_ii).tocsc()
            self._helm[key] = spla.splu(A)
        return self._helm[key]

    # -- bilinear kernels on raw arrays ---------------------------------------
    def convect(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``C(a, v) = (a . grad) v`` on interior faces."""
        return (self.Ix @ a) * (self.Gx @ v) + (self.Iy @ a) * (self.Gy @ v)

    def convect_adj(self, a: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Transpose of ``v -> C(a, v)`` applied to ``w``."""
        return self.GxT @ ((self.Ix @ a) * w) + self.GyT @ ((self.Iy @ a) * w)

    def b1_raw(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Unprojected representer of the split form ``w -> b1(a, v, w)``."""
        return 0.5 * (self.convect(a, v) - self.convect_adj(a, v))

    def node_velocity(self, a: np.ndarray):
        return self.Jx @ a, self.Jy @ a

    def b2_raw(self, a: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Split advection ``1/2 [a.grad d + div(a d)]`` on all nodes (zero on boundary).

        ``d`` has shape ``(nn, 3)``.
        """
        ax, ay = self.node_velocity(a)
        ax = ax[:, None]
        ay = ay[:, None]
        adv = ax * (self.Dxn @ d) + ay * (self.Dyn @ d)
        cons = self.Dxn @ (ax * d) + self.Dyn @ (ay * d)
        return 0.5 * (adv + cons)

    def lap_nodes(self, d: np.ndarray) -> np.ndarray:
        """Discrete Laplacian on interior nodes, zero on boundary nodes."""
        return self.Lapn @ d

    def _build_stress_ops(self):
        n, h = self.n, self.h
        nid = np.arange(self.nn).reshape(n + 1, n + 1)
        cid = np.arange(self.nc).reshape(n, n)
        # node gradients: centred inside, second-order one-sided on the edges
        Gx = _Builder((self.nn, self.nn))
        Gy = _Builder((self.nn, self.nn))
        i2h = 0.5 / h
        for i in range(n + 1):
            for j in range(n + 1):
                r = nid[i, j]
                for G, line in ((Gx, nid[:, j]), (Gy, nid[i, :])):
                    k = i if G is Gx else j
                    if k == 0:
                        for off, c in ((0, -3.0), (1, 4.0), (2, -1.0)):
                            G.add(r, line[off], c * i2h)
                    elif k == n:
                        for off, c in ((0, 3.0), (-1, -4.0), (-2, 1.0)):
                            G.add(r, line[n + off], c * i2h)
                    else:
                        G.add(r, line[k + 1], i2h)
                        G.add(r, line[k - 1], -i2h)
        # cell-centre gradients from averaged edge differences
        Cx = _Builder((self.nc, self.nn))
        Cy = _Builder((self.nc, self.nn))
        ih2 = 0.5 / h
        for i in range(n):
            for j in range(n):
                r = cid[i, j]
                for jj in (j, j + 1):
                    Cx.add(r, nid[i + 1, jj], ih2)
                    Cx.add(r, nid[i, jj], -ih2)
                for ii in (i, i + 1):
                    Cy.add(r, nid[ii, j + 1], ih2)
                    Cy.add(r, nid[ii, j], -ih2)
        # divergence of the stress onto interior faces
        A11 = _Builder((self.nf, self.nc))
        A21 = _Builder((self.nf, self.nn))
        A12 = _Builder((self.nf, self.nn))
        A22 = _Builder((self.nf, self.nc))
        ih = 1.0 / h
        for i in range(1, n):
            for j in range(n):
                r = self.idx1[i, j]
                A11.add(r, cid[i, j], ih)
                A11.add(r, cid[i - 1, j], -ih)
                A21.add(r, nid[i, j + 1], ih)
                A21.add(r, nid[i, j], -ih)
        for i in range(n):
            for j in range(1, n):
                r = self.idx2[i, j]
                A12.add(r, nid[i + 1, j], ih)
                A12.add(r, nid[i, j], -ih)
                A22.add(r, cid[i, j], ih)
                A22.add(r, cid[i, j - 1], -ih)
        self.Gxn, self.Gyn = Gx.tocsr(), Gy.tocsr()
        self.Cx, self.Cy = Cx.tocsr(), Cy.tocsr()
        self.A11, self.A21, self.A12, self.A22 = A11.tocsr(), A21.tocsr(), A12.tocsr(), A22.tocsr()

    def stress_div_raw(self, d: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Unprojected ``div(grad d (.) grad b)`` on interior faces.

        Diagonal stress entries live at cell centres, off-diagonal ones at
        nodes, so each face sees a compact centred difference.
        """
        t11 = np.sum((self.Cx @ d) * (self.Cx @ b), axis=1)
        t22 = np.sum((self.Cy @ d) * (self.Cy @ b), axis=1)
        dxn, dyn = self.Gxn @ d, self.Gyn @ d
        bxn, byn = self.Gxn @ b, self.Gyn @ b
        t21 = np.sum(dyn * bxn, axis=1)
        t12 = np.sum(dxn * byn, axis=1)
        return self.A11 @ t11 + self.A21 @ t21 + self.A12 @ t12 + self.A22 @ t22


class _SaddleSolver:
    """Direct solve of ``[[H, D^T], [D, 0]]`` with one pressure dof pinned."""

    def __init__(self, disc: Discretization, H):
        Dr = disc.D_sp[:-1]
        K = sp.bmat([[H, Dr.T], [Dr, None]], format="csc")
        self.lu = spla.splu(K)
        self.nf = disc.nf
        self.nc1 = disc.nc - 1

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if r.ndim == 1:
            rhs = np.concatenate([r, np.zeros(self.nc1)])
        else:
            rhs = np.vstack([r, np.zeros((self.nc1, r.shape[1]))])
        return self.lu.solve(rhs)[: self.nf]


class LerayWorkspace:
    """Pressure-Poisson factorization for the discrete Leray projection.

    Uses a direct sparse LU on grids up to ``DIRECT_SOLVE_MAX_N`` cells per
    side and preconditioned CG above that.
    """

    def __init__(self, disc: Discretization, tol: float = 1e-12):
        if tol > 1e-10:
            raise ValueError("projection tolerance must be <= 1e-10")
        self.disc = disc
        self.tol = tol
        A = (disc.D_sp @ disc.D_sp.T).tocsr()
        self.direct = disc.n <= DIRECT_SOLVE_MAX_N
        if self.direct:
            self.lu = spla.splu(A[:-1, :-1].tocsc())
        else:
            self.A = A

    def _poisson(self, r):
        if self.direct:
            phi = np.zeros_like(r)
            phi[:-1] = self.lu.solve(r[:-1])
            return phi
        r = r - r.mean()
        phi, info = spla.cg(self.A, r, rtol=self.tol * 1e-2, maxiter=20 * len(r))
        res = np.linalg.norm(self.A @ phi - r) / max(np.linalg.norm(r), 1e-300)
        if info != 0 or res > self.tol:
            raise NumericalError(f"pressure Poisson solve did not converge (residual {res:.3e})", res)
        return phi

    def project_vec(self, w: np.ndarray) -> np.ndarray:
        disc = self.disc
        r = disc.D @ w
        out = w - disc.DT @ self._poisson(r)
        scale = max(np.linalg.norm(r), np.linalg.norm(w) / disc.h, 1e-300)
        res = np.linalg.norm(disc.D @ out) / scale
        if res > self.tol:
            raise NumericalError(f"projection residual {res:.3e} exceeds tolerance {self.tol:.1e}", res)
        return out


@functools.lru_cache(maxsize=16)
def discretization(domain: Domain) -> Discretization:
    return Discretization(domain)


# ---------------------------------------------------------------------------
# public operators on fields


def _require_no_slip(v: VectorField2, name="field"):
    scale = max(np.abs(v.u1).max(), np.abs(v.u2).max(), 1.0)
    if v.normal_boundary_max() > 1e-12 * scale:
        raise FieldError(f"{name} has non-zero wall-normal entries")


def divergence(v: VectorField2) -> np.ndarray:
    """Cell divergence, shape ``(n, n)``; wall-normal entries included."""
    h = v.domain.h
    return (v.u1[1:, :] - v.u1[:-1, :]) / h + (v.u2[:, 1:] - v.u2[:, :-1]) / h


def leray_project(w: VectorField2) -> VectorField2:
    _require_no_slip(w, "w")
    disc = discretization(w.domain)
    return disc.vel_field(disc.leray().project_vec(disc.vel_vec(w)))


def apply_a1(v: VectorField2) -> VectorField2:
    """Stokes operator ``A1 v = P(-Lap_h v)``."""
    _require_no_slip(v, "v")
    disc = discretization(v.domain)
    return disc.vel_field(disc.leray().project_vec(disc.L @ disc.vel_vec(v)))


def apply_a2(d: DirectorField3) -> DirectorField3:
    """``-Lap_h d`` on interior nodes using the stored boundary values; zero on the boundary."""
    disc = discretization(d.domain)
    return disc.node_field(-disc.lap_nodes(disc.node_arr(d)))


def laplacian_nodes(d: DirectorField3) -> DirectorField3:
    return -1.0 * apply_a2(d)


def _check_domains(*fields):
    dom = fields[0].domain
    for f in fields[1:]:
        if f.domain != dom:
            from .grid import DimensionError

            raise DimensionError(f"domain mismatch: {dom} vs {f.domain}")
    return dom


def b1_form(u: VectorField2, v: VectorField2, w: VectorField2) -> float:
    """Skew-symmetric split form ``1/2 [<u.grad v, w> - <u.grad w, v>]``."""
    dom = _check_domains(u, v, w)
    disc = discretization(dom)
    a, vv, ww = disc.vel_vec(u), disc.vel_vec(v), disc.vel_vec(w)
    return float(dom.h ** 2 * 0.5 * (ww @ disc.convect(a, vv) - vv @ disc.convect(a, ww)))


def b1_op(u: VectorField2, v: VectorField2) -> VectorField2:
    """Divergence-free representer of ``w -> b1(u, v, w)``."""
    dom = _check_domains(u, v)
    disc = discretization(dom)
    raw = disc.b1_raw(disc.vel_vec(u), disc.vel_vec(v))
    return disc.vel_field(disc.leray().project_vec(raw))


def b2_op(v: VectorField2, d: DirectorField3) -> DirectorField3:
    """Split-form advection of ``d`` by ``v`` on interior nodes (zero on the boundary)."""
    dom = _check_domains(v, d)
    disc = discretization(dom)
    return disc.node_field(disc.b2_raw(disc.vel_vec(v), disc.node_arr(d)))


def b2_form(v: VectorField2, d: DirectorField3, b: DirectorField3) -> float:
    """``<B2(v, d), b>`` over interior nodes.

    For ``d`` and ``b`` vanishing on the boundary this equals the split form
    ``1/2 [<v.grad d, b> - <v.grad b, d>]`` and is exactly antisymmetric.
    """
    dom = _check_domains(v, d, b)
    disc = discretization(dom)
    out = disc.b2_raw(disc.vel_vec(v), disc.node_arr(d))
    return float(dom.h ** 2 * np.sum(out * disc.node_arr(b)))


def m_stress_div(d: DirectorField3, b: DirectorField3) -> VectorField2:
    """``M(d, b) = P div(grad d (.) grad b)``."""
    dom = _check_domains(d, b)
    disc = discretization(dom)
    raw = disc.stress_div_raw(disc.node_arr(d), disc.node_arr(b))
    return disc.vel_field(disc.leray().project_vec(raw))


def dual_norm_v(w: VectorField2) -> float:
    """``||w||_{V'} = sup <w, v> / |grad v|`` over discrete divergence-free ``v``."""
    disc = discretization(w.domain)
    x = disc.vel_vec(w)
    y = disc.inverse_stokes()(x)
    return float(math.sqrt(max(w.domain.h ** 2 * (x @ y), 0.0)))


def dirichlet_energy_velocity(v: VectorField2) -> float:
    """``<A1 v, v> = |grad_h v|^2`` for admissible ``v``."""
    disc = discretization(v.domain)
    x = disc.vel_vec(v)
    return float(v.domain.h ** 2 * (x @ (disc.L @ x)))


def dirichlet_energy_director(d: DirectorField3) -> float:
    """``|grad_h d|^2`` summed over every grid edge (forward differences)."""
    vals = d.values
    return float(np.sum(np.diff(vals, axis=1) ** 2) + np.sum(np.diff(vals, axis=2) ** 2))


# ---------------------------------------------------------------------------
# Ginzburg-Landau terms


def gl_f_array(d: np.ndarray, eta: float) -> np.ndarray:
    """``f(d) = (|d|^2 - 1) d / eta^2`` for arrays with components on the last axis."""
    s = np.sum(d * d, axis=-1, keepdims=True) - 1.0
    return s * d / eta ** 2


def gl_fprime_array(d: np.ndarray, b: np.ndarray, eta: float) -> np.ndarray:
    s = np.sum(d * d, axis=-1, keepdims=True) - 1.0
    db = np.sum(d * b, axis=-1, keepdims=True)
    return (s * b + 2.0 * db * d) / eta ** 2


def gl_f(d: DirectorField3, p: GLParams) -> DirectorField3:
    return DirectorField3(d.domain, np.moveaxis(gl_f_array(np.moveaxis(d.values, 0, -1), p.eta), -1, 0))


def gl_fprime_apply(d: DirectorField3, b: DirectorField3, p: GLParams) -> DirectorField3:
    _check_domains(d, b)
    out = gl_fprime_array(np.moveaxis(d.values, 0, -1), np.moveaxis(b.values, 0, -1), p.eta)
    return DirectorField3(d.domain, np.moveaxis(out, -1, 0))


def gl_F_integral(d: DirectorField3, p: GLParams) -> float:
    s = np.sum(d.values ** 2, axis=0) - 1.0
    F = s * s / (4.0 * p.eta ** 2)
    return float(d.domain.h ** 2 * np.sum(node_weights(d.domain) * F))
