import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcsim.grid import (
    DirectorField3,
    Domain,
    FieldError,
    ParameterError,
    Params,
    SimState,
    VectorField2,
    inner_h,
    node_weights,
    norm_hm,
    validate_params,
)
from nlcsim.operators import divergence


def test_domain_rejects_bad_sizes():
    with pytest.raises(ValueError):
        Domain(3)
    with pytest.raises(ValueError):
        Domain(8, float("nan"))
    with pytest.raises(ValueError):
        Domain(8.5)
    d = Domain(8, 2.0)
    assert d.n == d.ny == 8 and d.h == 0.25 and d.ly == 2.0


def test_field_shapes_and_finiteness(dom8):
    with pytest.raises(FieldError):
        VectorField2(dom8, np.zeros((8, 8)), np.zeros((8, 9)))
    bad = np.zeros((9, 8))
    bad[2, 2] = np.inf
    with pytest.raises(FieldError):
        VectorField2(dom8, bad, np.zeros((8, 9)))
    with pytest.raises(FieldError):
        DirectorField3(dom8, np.zeros((2, 9, 9)))


def test_fields_are_immutable(dom8):
    v = VectorField2.zeros(dom8)
    with pytest.raises(ValueError):
        v.u1[0, 0] = 1.0
    d = DirectorField3.constant(dom8, (0, 0, 1))
    with pytest.raises(ValueError):
        d.values[0, 0, 0] = 1.0


def test_stream_function_field_is_discretely_solenoidal(dom16):
    v = VectorField2.from_stream_function(dom16, lambda X, Y: np.sin(np.pi * X) ** 2 * np.sin(2 * np.pi * Y))
    assert np.abs(divergence(v)).max() < 1e-12
    assert v.normal_boundary_max() < 1e-14


def test_boundary_helpers(dom8):
    d = DirectorField3.constant(dom8, (1, 2, 3))
    inner = d.interior_only()
    assert np.all(inner.values[:, 0, :] == 0) and np.all(inner.values[:, 4, 4] == (1, 2, 3))
    back = inner.with_boundary_of(d)
    assert np.array_equal(back.values, d.values)


def test_inner_product_integrates_constants(dom8):
    d = DirectorField3.constant(dom8, (1, 0, 0))
    assert inner_h(d, d) == pytest.approx(1.0, abs=1e-14)
    assert node_weights(dom8).sum() * dom8.h ** 2 == pytest.approx(1.0, abs=1e-14)


def test_norms_match_continuum_values():
    dom = Domain(64)
    d = DirectorField3.from_function(dom, lambda X, Y: (np.sin(np.pi * X) * np.sin(np.pi * Y), 0 * X, 0 * X))
    # |S|^2 = 1/4, |grad S|^2 = pi^2/2
    assert norm_hm(d, 0) == pytest.approx(0.5, rel=1e-3)
    assert norm_hm(d, 1) == pytest.approx(math.sqrt(0.25 + np.pi ** 2 / 2), rel=1e-2)
    with pytest.raises(ValueError):
        norm_hm(d, 4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_inner_product_symmetric_bilinear(seed, a, b):
    dom = Domain(6)
    r = np.random.default_rng(seed)
    x, y, z = (DirectorField3(dom, r.standard_normal((3, 7, 7))) for _ in range(3))
    assert inner_h(x, y) == pytest.approx(inner_h(y, x), abs=1e-12)
    lhs = inner_h(x * a + y * b, z)
    assert lhs == pytest.approx(a * inner_h(x, z) + b * inner_h(y, z), abs=1e-10)


def test_validate_params_reports_fields():
    with pytest.raises(ParameterError) as e:
        validate_params(Params(mu=-1, eta=0.0, sigmas=(float("nan"),)))
    assert set(e.value.fields) == {"mu", "eta", "sigmas[0]"}
    assert validate_params(Params(sigmas=(0.5,))).K == 1


def test_state_requires_positive_q(dom8):
    v, d = VectorField2.zeros(dom8), DirectorField3.zeros(dom8)
    with pytest.raises(FieldError):
        SimState(0.0, v, d, 0.0, v, d)
