import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cosshell.errors import FrameMismatch, NotARotation, NotSkew
from cosshell.tensors import (
    PlanarTensor,
    ShellTensor,
    alternator_apply,
    axl,
    axl_skew,
    check_rotation,
    decompose,
    dev_s,
    exp_so3,
    hat,
    inner,
    inner_cartesian,
    left_jacobian_inv,
    log_so3,
    matrix_to_quat,
    norm2,
    quat_to_matrix,
    recompose,
    skew,
    sym,
    trace,
)

from conftest import flat_frame, random_chart_frames

finite = st.floats(-10, 10, allow_nan=False)


def e(i):
    return np.eye(3)[i]


def test_pure_transversal_decomposition():
    fr = flat_frame()
    X = ShellTensor.from_cartesian(np.outer(e(2), e(0))[None], fr)
    P, t = decompose(X)
    assert np.allclose(P.components, 0)
    assert np.allclose(t, [[1, 0, 0]])


def test_pure_planar_decomposition():
    fr = flat_frame()
    X = PlanarTensor.identity(fr).as_shell()
    P, t = decompose(X)
    assert np.allclose(P.cart, fr.a_cart) and np.allclose(t, 0)


def test_decomposition_round_trip_and_norm_split(rng):
    for fr in random_chart_frames(rng):
        X = ShellTensor(rng.standard_normal(fr.shape + (3, 2)), fr)
        P, t = decompose(X)
        Y = recompose(P, t)
        assert np.allclose(Y.components, X.components, rtol=1e-14, atol=1e-14)
        n2 = inner_cartesian(X, X)
        assert np.allclose(n2, inner(P, P) + np.sum(t * t, -1), rtol=1e-12)


def test_identity_and_skew_parts():
    fr = flat_frame()
    a = PlanarTensor.identity(fr)
    assert np.allclose(dev_s(a).components, 0) and np.allclose(trace(a), 2)
    W = PlanarTensor(np.array([[[0.0, 1.0], [-1.0, 0.0]]]), fr)
    assert np.allclose(sym(W).components, 0) and np.allclose(trace(W), 0)


def test_deviator_norm_identity(rng):
    for fr in random_chart_frames(rng):
        T = PlanarTensor(rng.standard_normal(fr.shape + (2, 2)), fr)
        S = sym(T)
        assert np.allclose(norm2(S), norm2(dev_s(S)) + 0.5 * trace(T) ** 2, rtol=1e-12)
        assert np.allclose(trace(dev_s(T)), 0, atol=1e-12)
        parts = [dev_s(S), skew(T), PlanarTensor.identity(fr) * (0.5 * trace(T))]
        total = parts[0] + parts[1] + parts[2]
        assert np.allclose(total.components, T.components, atol=1e-12)
        for i in range(3):
            for j in range(i + 1, 3):
                assert np.allclose(inner(parts[i], parts[j]), 0, atol=1e-12 * np.max(norm2(T)))


def test_component_and_cartesian_scalar_products_agree(rng):
    for fr in random_chart_frames(rng):
        A = ShellTensor(rng.standard_normal(fr.shape + (3, 2)), fr)
        B = ShellTensor(rng.standard_normal(fr.shape + (3, 2)), fr)
        assert np.allclose(inner(A, B), inner_cartesian(A, B), rtol=1e-12)


def test_frame_mismatch_rejected(rng):
    f1, f2 = flat_frame(), flat_frame()
    A = ShellTensor(np.zeros((1, 3, 2)), f1)
    B = ShellTensor(np.zeros((1, 3, 2)), f2)
    with pytest.raises(FrameMismatch):
        inner(A, B)
    with pytest.raises(FrameMismatch):
        A + B
    with pytest.raises(FrameMismatch):
        ShellTensor.from_cartesian(np.eye(3)[None], f1)


def test_axl_examples():
    assert np.allclose(axl(np.zeros((3, 3))), 0)
    W = np.zeros((3, 3))
    W[2, 1], W[1, 2] = 1.0, -1.0
    assert np.allclose(axl(W), [1, 0, 0])
    with pytest.raises(NotSkew):
        axl(np.eye(3))


@given(w=arrays(float, 3, elements=finite), v=arrays(float, (10, 3), elements=finite))
def test_axl_cross_product_identity(w, v):
    W = hat(w)
    assert np.allclose(axl(W), w)
    assert np.allclose(v @ W.T, np.cross(axl(W), v), atol=1e-12 * (1 + np.abs(w).max() * np.abs(v).max()))
    A = W + np.diag(w)
    assert np.allclose(axl_skew(A), w)


def test_alternator_examples(rng):
    fr = flat_frame()
    assert np.allclose(alternator_apply(fr, ShellTensor.zeros(fr)).components, 0)
    X = ShellTensor.from_cartesian(np.outer(e(0), e(0))[None], fr)
    # quarter turn by -pi/2 about n0: a^1 -> -a^2
    assert np.allclose(alternator_apply(fr, X).cart[0], -np.outer(e(1), e(0)))
    for f in random_chart_frames(rng):
        Y = ShellTensor(rng.standard_normal(f.shape + (3, 2)), f)
        twice = alternator_apply(f, alternator_apply(f, Y))
        assert np.allclose(twice.cart + Y.planar().as_shell().cart, 0, atol=1e-12)
        assert np.allclose(alternator_apply(f, Y).cart, f.c_cart @ Y.cart, atol=1e-12)


def test_rotation_helpers(rng):
    w = rng.uniform(-1, 1, (50, 3))
    R = exp_so3(w)
    check_rotation(R)
    check_rotation(R @ exp_so3(w[::-1]))
    check_rotation(np.swapaxes(R, -1, -2))
    assert np.allclose(log_so3(R), w)
    assert np.allclose(quat_to_matrix(matrix_to_quat(R)), R)
    assert np.all(matrix_to_quat(R)[:, 0] >= 0)
    with pytest.raises(NotARotation):
        check_rotation(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(NotARotation):
        check_rotation(2 * np.eye(3))


def test_left_jacobian_inverse_maps_spatial_increments(rng):
    th = rng.uniform(-1, 1, 3)
    w = rng.standard_normal(3)
    t = 1e-6
    d_fd = (log_so3(exp_so3(t * w) @ exp_so3(th)) - log_so3(exp_so3(-t * w) @ exp_so3(th))) / (2 * t)
    assert np.allclose(left_jacobian_inv(th) @ w, d_fd, atol=1e-8)
    assert np.allclose(left_jacobian_inv(np.zeros(3)), np.eye(3))
