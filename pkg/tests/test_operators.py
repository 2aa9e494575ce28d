import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_divergence, dense_leray, faces_to_vec, quad_b1, quad_b2, quad_m
from nlcsim.grid import DirectorField3, Domain, FieldError, VectorField2, inner_h, norm_hm
from nlcsim.operators import (
    GLParams,
    apply_a1,
    apply_a2,
    b1_form,
    b1_op,
    b2_form,
    b2_op,
    discretization,
    divergence,
    dual_norm_v,
    gl_F_integral,
    gl_f,
    gl_fprime_apply,
    leray_project,
    m_stress_div,
)
from nlcsim.sensitivity import fitted_order
from nlcsim.verification import random_div_free, random_interior_director

pi = np.pi


def s(x):
    return np.sin(pi * x)


def c(x):
    return np.cos(pi * x)


def psi1(X, Y):
    return s(X) ** 2 * s(Y) ** 2


def u_exact(X, Y):
    return 2 * pi * s(X) ** 2 * s(Y) * c(Y), -2 * pi * s(X) * c(X) * s(Y) ** 2


def psi2(X, Y):
    return X * s(X) ** 2 * s(Y) ** 2


def v_exact(X, Y):
    return X * 2 * pi * s(X) ** 2 * s(Y) * c(Y), -(2 * pi * s(X) * c(X) * X + s(X) ** 2) * s(Y) ** 2


def w_exact(X, Y):
    return np.sin(2 * pi * X) * s(Y), X * (1 - X) * s(Y)


def d_exact(X, Y):
    return np.cos(X + 2 * Y), np.sin(X * Y), X * X


def b_exact(X, Y):
    return np.sin(2 * X) * Y, np.cos(Y), X * Y


def grad(f, ncomp):
    def g(X, Y, e=1e-6):
        return [((f(X + e, Y)[k] - f(X - e, Y)[k]) / (2 * e), (f(X, Y + e)[k] - f(X, Y - e)[k]) / (2 * e))
                for k in range(ncomp)]
    return g


RES = (16, 32, 64)


def _order(errs):
    return fitted_order([1.0 / n for n in RES], np.abs(errs))


def test_leray_matches_dense_pseudo_inverse(rng):
    dom = Domain(8)
    disc = discretization(dom)
    w = disc.vel_field(rng.standard_normal(disc.nf))
    p = leray_project(w)
    u1, u2 = dense_leray(np.array(w.u1), np.array(w.u2), dom.h)
    assert np.abs(p.u1 - u1).max() < 1e-12 and np.abs(p.u2 - u2).max() < 1e-12


def test_divergence_matrix_matches_oracle(rng):
    dom = Domain(6)
    disc = discretization(dom)
    x = rng.standard_normal(disc.nf)
    ref = dense_divergence(6, dom.h) @ x
    assert np.allclose(divergence(disc.vel_field(x)).ravel(), ref, atol=1e-12)
    assert np.array_equal(faces_to_vec(*(lambda f: (f.u1, f.u2))(disc.vel_field(x))), x)


def test_leray_rejects_normal_flux(dom8):
    u1 = np.zeros((9, 8))
    u1[0, 3] = 1.0
    with pytest.raises(FieldError):
        leray_project(VectorField2(dom8, u1, np.zeros((8, 9))))


def test_b1_converges_to_quadrature():
    ref = quad_b1(u_exact, v_exact, grad(v_exact, 2), w_exact)
    errs = []
    for n in RES:
        dom = Domain(n)
        U = VectorField2.from_stream_function(dom, psi1)
        V = VectorField2.from_stream_function(dom, psi2)
        W = VectorField2.from_functions(dom, lambda X, Y: w_exact(X, Y)[0], lambda X, Y: w_exact(X, Y)[1])
        errs.append(b1_form(U, V, W) - ref)
    assert abs(errs[-1]) < 1e-2 * abs(ref)
    assert _order(errs) > 1.8


def test_b2_converges_to_quadrature():
    def dz(X, Y):
        return s(X) * s(Y), X * Y * s(X) * s(Y), np.cos(X) * s(X) * s(Y)

    def bz(X, Y):
        return np.sin(2 * pi * X) * s(Y), s(X) * s(Y) * Y, X * s(X) * s(Y)

    ref = quad_b2(u_exact, grad(dz, 3), bz)
    errs = []
    for n in RES:
        dom = Domain(n)
        U = VectorField2.from_stream_function(dom, psi1)
        errs.append(b2_form(U, DirectorField3.from_function(dom, dz), DirectorField3.from_function(dom, bz)) - ref)
    assert _order(errs) > 1.8


def test_stress_divergence_converges_to_weak_form():
    ref = quad_m(grad(d_exact, 3), grad(b_exact, 3), grad(u_exact, 2))
    errs = []
    for n in RES:
        dom = Domain(n)
        U = VectorField2.from_stream_function(dom, psi1)
        M = m_stress_div(DirectorField3.from_function(dom, d_exact), DirectorField3.from_function(dom, b_exact))
        errs.append(inner_h(M, U) - ref)
    assert abs(errs[-1]) < 1e-2 * abs(ref)
    assert _order(errs) > 1.8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([6, 8, 12]))
def test_skew_symmetry_on_random_inputs(seed, n):
    r = np.random.default_rng(seed)
    dom = Domain(n)
    u, v = random_div_free(dom, r), random_div_free(dom, r)
    scale = norm_hm(u, 0) * norm_hm(v, 1) * norm_hm(v, 0)
    assert abs(b1_form(u, v, v)) <= 1e-12 * scale
    d = random_interior_director(dom, r)
    assert abs(b2_form(u, d, d)) <= 1e-12 * norm_hm(u, 0) * norm_hm(d, 1) * norm_hm(d, 0)


def test_b1_representer_and_b2_operator_agree_with_forms(rng, dom8):
    u, v, w = (random_div_free(dom8, rng) for _ in range(3))
    assert inner_h(b1_op(u, v), w) == pytest.approx(b1_form(u, v, w), rel=1e-10, abs=1e-12)
    assert np.abs(divergence(b1_op(u, v))).max() < 1e-9
    d, b = random_interior_director(dom8, rng), random_interior_director(dom8, rng)
    assert inner_h(b2_op(u, d), b) == pytest.approx(b2_form(u, d, b), rel=1e-10)


def test_stokes_operator_symmetric_positive(rng, dom8):
    u, v = random_div_free(dom8, rng), random_div_free(dom8, rng)
    assert inner_h(apply_a1(u), v) == pytest.approx(inner_h(u, apply_a1(v)), rel=1e-10)
    assert inner_h(apply_a1(u), u) > 0


def test_director_laplacian_kills_affine_fields(dom8):
    d = DirectorField3.from_function(dom8, lambda X, Y: (X + 2 * Y, 1 - Y, 3 * X))
    assert np.abs(apply_a2(d).values).max() < 1e-10


def test_ginzburg_landau_terms():
    dom = Domain(8)
    p = GLParams(0.5)
    unit = DirectorField3.constant(dom, (0.0, 0.6, 0.8))
    assert np.abs(gl_f(unit, p).values).max() < 1e-15
    assert gl_F_integral(unit, p) < 1e-30
    zero = DirectorField3.zeros(dom)
    assert gl_F_integral(zero, p) == pytest.approx(1.0 / (4 * 0.25))
    r = np.random.default_rng(0)
    d = DirectorField3(dom, r.standard_normal((3, 9, 9)))
    b = DirectorField3(dom, r.standard_normal((3, 9, 9)))
    eps = 1e-6
    fd = (gl_f(d + b * eps, p).values - gl_f(d - b * eps, p).values) / (2 * eps)
    assert np.allclose(fd, gl_fprime_apply(d, b, p).values, rtol=1e-7, atol=1e-6)


def test_dual_norm_bounds_pairing(rng, dom8):
    w = random_div_free(dom8, rng)
    v = random_div_free(dom8, rng)
    dv = np.sqrt(inner_h(apply_a1(v), v))
    assert abs(inner_h(w, v)) <= dual_norm_v(w) * dv * (1 + 1e-10)
