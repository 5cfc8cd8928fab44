import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hemicontact.tensors import SymTensor, VectorValue, deviatoric_split, isotropic_tensor, tensor_inner

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def sym(draw, d=None):
    d = draw(st.sampled_from([2, 3])) if d is None else d
    a = draw(arrays(float, (d, d), elements=finite))
    return SymTensor(0.5 * (a + a.T))


@st.composite
def sym_pair(draw):
    d = draw(st.sampled_from([2, 3]))
    return draw(sym(d)), draw(sym(d))


def test_inner_identity():
    assert tensor_inner(SymTensor.identity(2), SymTensor.identity(2)) == 2.0


def test_inner_zero():
    a = SymTensor([[1.0, 2.0], [2.0, 3.0]])
    assert tensor_inner(a, SymTensor.zeros(2)) == 0.0


def test_inner_entrywise_sum():
    a = SymTensor([[1.0, 2.0], [2.0, 3.0]])
    b = SymTensor([[0.0, 1.0], [1.0, 0.0]])
    assert tensor_inner(a, b) == 4.0


def test_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        tensor_inner(SymTensor.identity(2), SymTensor.identity(3))


def test_rejects_asymmetric():
    with pytest.raises(ValueError):
        SymTensor([[0.0, 1.0], [0.0, 0.0]])


def test_rejects_non_finite_vector():
    with pytest.raises(ValueError):
        VectorValue([1.0, np.nan])


def test_deviatoric_identity():
    tr, dev = deviatoric_split(SymTensor.identity(2))
    assert tr == 2.0
    assert dev == SymTensor.zeros(2)


def test_deviatoric_traceless_input():
    a = SymTensor([[1.0, 0.0], [0.0, -1.0]])
    tr, dev = deviatoric_split(a)
    assert tr == 0.0 and dev == a


def test_deviatoric_subtracts_mean_diagonal():
    tr, dev = deviatoric_split(SymTensor([[3.0, 1.0], [1.0, 1.0]]))
    assert tr == 4.0
    assert dev == SymTensor([[1.0, 1.0], [1.0, -1.0]])


def test_isotropic_tensor_acts_as_lame_law(rng):
    eps = rng.standard_normal((3, 3))
    eps = 0.5 * (eps + eps.T)
    C = isotropic_tensor(1.5, 0.7, 3)
    expected = 2 * 1.5 * eps + 0.7 * np.trace(eps) * np.eye(3)
    assert np.allclose(np.einsum("ijkl,kl->ij", C, eps), expected, atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(sym(), finite)
def test_symmetric_entries(a, _):
    assert np.array_equal(a.entries, a.entries.T)


@settings(max_examples=200, deadline=None)
@given(st.data(), st.floats(-10, 10))
def test_inner_bilinear(data, alpha):
    d = data.draw(st.sampled_from([2, 3]))
    a, b, c = (data.draw(sym(d)) for _ in range(3))
    lhs = tensor_inner(a * alpha + b, c)
    rhs = alpha * tensor_inner(a, c) + tensor_inner(b, c)
    scale = max(1.0, (abs(alpha) * a.norm() + b.norm()) * c.norm())
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(sym_pair())
def test_cauchy_schwarz(pair):
    a, b = pair
    assert tensor_inner(a, b) ** 2 <= tensor_inner(a, a) * tensor_inner(b, b) * (1 + 1e-12) + 1e-300


@settings(max_examples=200, deadline=None)
@given(sym())
def test_inner_self_is_frobenius(a):
    assert np.isclose(tensor_inner(a, a), np.linalg.norm(a.entries, "fro") ** 2, rtol=1e-13, atol=0.0)


@settings(max_examples=200, deadline=None)
@given(sym())
def test_deviatoric_reconstruction_and_orthogonality(a):
    tr, dev = deviatoric_split(a)
    scale = max(1.0, a.norm())
    assert abs(dev.trace()) <= 1e-14 * scale
    assert abs(tensor_inner(dev, SymTensor.identity(a.d))) <= 1e-13 * scale
    rebuilt = dev.entries + (tr / a.d) * np.eye(a.d)
    assert np.allclose(rebuilt, a.entries, atol=1e-12 * scale, rtol=0)
