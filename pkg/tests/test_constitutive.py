import numpy as np
import pytest
from hypothesis import given, strategies as st

from cosshell.constitutive import (
    MaterialConstants,
    L_n0,
    apply_C3d,
    apply_G3d,
    apply_moduli_index,
    shell_moduli,
    stress_resultants,
    w_coss,
    w_coss_paths,
    w_curv,
    w_curv_paths,
    w_mixt,
    w_mp,
    w_shell,
)
from cosshell.errors import FrameMismatch
from cosshell.geometry import PlateChart, SphereCapChart, evaluate_frame
from cosshell.tensors import PlanarTensor, ShellTensor
from cosshell.validation import random_shell_tensor

from conftest import flat_frame, random_chart_frames


def sample_frame(chart, rng, n):
    return evaluate_frame(chart, rng.uniform(*chart.u_range, n), rng.uniform(*chart.v_range, n))


def shell(frame, M):
    return ShellTensor.from_cartesian(np.broadcast_to(M, frame.shape + (3, 3)).copy(), frame)


E1, E3 = np.array([1.0, 0, 0]), np.array([0, 0, 1.0])
A = np.diag([1.0, 1.0, 0.0])


@pytest.mark.parametrize("kw", [dict(mu=0), dict(lam=-1), dict(mu_c=-0.1), dict(b2=0), dict(L_c=0), dict(h=-1)])
def test_material_invariants(kw):
    base = dict(mu=1.0, lam=1.0, mu_c=0.5)
    base.update(kw)
    with pytest.raises(ValueError):
        MaterialConstants(**base)


def test_semi_definite_flag_and_kappa():
    m = MaterialConstants(1.0, 1.5, 0.0)
    assert m.semi_definite and m.kappa == pytest.approx(13 / 6)
    assert not MaterialConstants(1.0, 1.5, 0.1).semi_definite
    with pytest.raises(ValueError):
        m.shear_coefficient("geometric")


def test_thickness_guard_is_reported():
    fr = evaluate_frame(SphereCapChart(2.0), np.array([0.1]), np.array([1.5]))
    rep = MaterialConstants(1.0, 1.0, 0.5, h=0.3).curvature_range(fr)
    assert rep["h_limit"] == pytest.approx(0.2) and not rep["thin"]


def test_w_mixt_examples(rng):
    fr = flat_frame()
    m = MaterialConstants(1.0, 1.0, 0.3)
    assert w_mixt(shell(fr, A), mat=m)[0] == pytest.approx(10 / 3, abs=1e-14)
    assert w_mixt(ShellTensor.zeros(fr), mat=m)[0] == 0
    for frame in random_chart_frames(rng):
        X = random_shell_tensor(rng, frame)
        tr = np.trace(X.cart, axis1=-2, axis2=-1)
        rhs = w_mp(X, m) - m.lam**2 / (2 * (m.lam + 2 * m.mu)) * tr**2
        assert np.allclose(w_mixt(X, mat=m), rhs, rtol=1e-12, atol=1e-14)
        Y = random_shell_tensor(rng, frame)
        assert np.allclose(w_mixt(X, Y, m), w_mixt(Y, X, m), rtol=1e-13)


def test_w_coss_examples(rng):
    fr = flat_frame()
    m = MaterialConstants(2.0, 1.0, 1.0)
    assert w_coss(shell(fr, np.outer(E3, E1)), mat=m)[0] == pytest.approx(4 / 3, abs=1e-14)
    assert w_coss(shell(fr, A), mat=m)[0] == pytest.approx(w_mixt(shell(fr, A), mat=m)[0], abs=1e-14)
    for frame in random_chart_frames(rng):
        X = random_shell_tensor(rng, frame)
        paths = list(w_coss_paths(X, m).values())
        for p in paths[1:]:
            assert np.allclose(p, paths[0], rtol=1e-12, atol=1e-14)


def test_frame_mismatch():
    a, b = flat_frame(), flat_frame()
    with pytest.raises(FrameMismatch):
        w_coss(ShellTensor.zeros(a), ShellTensor.zeros(b), MaterialConstants(1.0, 1.0, 1.0))
    with pytest.raises(FrameMismatch):
        w_shell(ShellTensor.zeros(a), ShellTensor.zeros(a), b, MaterialConstants(1.0, 1.0, 1.0))


def test_w_curv_examples(rng, mat):
    m = MaterialConstants(1.0, 1.0, 0.5, L_c=1.0, b1=1.0, b2=1.0, b3=1.0)
    fr = flat_frame()
    assert w_curv(shell(fr, A), m)[0] == pytest.approx(14 / 3, abs=1e-14)
    assert w_curv(ShellTensor.zeros(fr), m)[0] == 0
    for frame in random_chart_frames(rng):
        paths = list(w_curv_paths(random_shell_tensor(rng, frame), mat).values())
        for p in paths[1:]:
            assert np.allclose(p, paths[0], rtol=1e-12, atol=1e-14)


def test_L_n0_examples(rng, mat):
    fr = flat_frame()
    m = MaterialConstants(2.0, 1.0, 1.0)
    X = np.outer(E3, E1)
    assert np.allclose(L_n0(shell(fr, X), m)[0], X - np.outer(E1, E3) / 3, atol=1e-15)
    T = np.array([[1.0, 2.0, 0], [-0.5, -1.0, 0], [0, 0, 0]])
    assert np.allclose(L_n0(shell(fr, T), m)[0], T, atol=1e-15)
    for frame in random_chart_frames(rng):
        X = random_shell_tensor(rng, frame)
        lhs = 0.5 * np.einsum("...ij,...ij->...", X.cart, apply_C3d(L_n0(X, mat), mat))
        assert np.allclose(lhs, w_coss(X, mat=mat), rtol=1e-12, atol=1e-14)


def test_apply_C3d_examples(rng, mat):
    m = MaterialConstants(1.0, 1.0, 0.0)
    assert np.allclose(apply_C3d(np.eye(3), m), 5 * np.eye(3))
    W = np.array([[0, 1.0, -2], [-1, 0, 3], [2, -3, 0]])
    assert np.allclose(apply_C3d(W, m), 0)
    for frame in random_chart_frames(rng):
        T = rng.standard_normal(frame.shape + (3, 3))
        for which, fn in (("C", apply_C3d), ("G", apply_G3d)):
            assert np.allclose(apply_moduli_index(T, frame, mat, which), fn(T, mat), rtol=1e-12, atol=1e-13)


def test_shell_moduli_examples(rng):
    fr = flat_frame()
    m = MaterialConstants(1.3, 0.7, 0.4)
    mod = shell_moduli(fr, m)
    a = PlanarTensor.identity(fr)
    expected = 2 * m.mu + 4 * m.lam * m.mu / (m.lam + 2 * m.mu)
    assert np.allclose(mod.apply("C", a).cart, expected * a.cart, atol=1e-14)
    S = PlanarTensor.from_cartesian(np.array([[[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]]]), fr)
    assert np.allclose(mod.apply("C", S).cart, 2 * m.mu_c * S.cart, atol=1e-14)


def test_shell_moduli_major_symmetry(rng, mat):
    for frame in random_chart_frames(rng):
        mod = shell_moduli(frame, mat)
        for T in (mod.C, mod.G):
            assert np.allclose(T, np.transpose(T, (0, 3, 4, 1, 2)), atol=1e-13)


def test_w_shell_examples(rng, mat):
    fr = evaluate_frame(PlateChart(), rng.uniform(0, 1, 5), rng.uniform(0, 1, 5))
    zero = ShellTensor.zeros(fr)
    assert np.all(w_shell(zero, zero, fr, mat) == 0)
    E, K = random_shell_tensor(rng, fr), random_shell_tensor(rng, fr)
    cK = ShellTensor.from_cartesian(fr.c_cart @ K.cart, fr)
    expected = mat.h * (w_coss(E, mat=mat) + w_curv(K, mat)) + mat.h**3 / 12 * w_coss(cK, mat=mat)
    for form in ("split", "cosserat"):
        assert np.allclose(w_shell(E, K, fr, mat, form=form), expected, rtol=1e-12)
    with pytest.raises(ValueError):
        w_shell(E, K, fr, mat, form="other")


def test_w_shell_forms_agree_on_sphere(rng, mat):
    fr = sample_frame(SphereCapChart(0.8), rng, 50)
    E, K = random_shell_tensor(rng, fr), random_shell_tensor(rng, fr)
    for variant in ("harmonic", "arithmetic"):
        a = w_shell(E, K, fr, mat, variant, "split")
        b = w_shell(E, K, fr, mat, variant, "cosserat")
        assert np.allclose(a, b, rtol=1e-12)


def test_plate_resultant_example():
    fr = flat_frame()
    m = MaterialConstants(1.0, 1.0, 0.5, h=1.0)
    blocks = stress_resultants(shell(fr, A), ShellTensor.zeros(fr), fr, m).blocks()
    assert np.allclose(blocks["aP"].cart[0], 10 / 3 * A, atol=1e-14)
    for k in ("n0P", "aR", "n0R"):
        assert np.allclose(np.asarray(getattr(blocks[k], "cart", blocks[k])), 0, atol=1e-14)
    zero = ShellTensor.zeros(fr)
    res = stress_resultants(zero, zero, fr, m)
    assert np.all(res.P.cart == 0) and np.all(res.R.cart == 0)


def test_resultants_are_energy_gradients(rng, mat):
    from cosshell.geometry import CylinderChart

    fr = evaluate_frame(CylinderChart(1.5), rng.uniform(0, 1, 4), rng.uniform(0, 1, 4))
    E, K = random_shell_tensor(rng, fr, 0.3), random_shell_tensor(rng, fr, 0.3)
    res = stress_resultants(E, K, fr, mat)
    for X, G in ((E, res.P), (K, res.R)):
        comps = X.components
        fd = np.zeros_like(comps)
        for idx in np.ndindex(comps.shape[1:]):
            step = max(1e-6 * np.abs(comps).max(), 1e-8)
            plus, minus = comps.copy(), comps.copy()
            plus[(slice(None),) + idx] += step
            minus[(slice(None),) + idx] -= step

            def energy(c):
                Xn = ShellTensor(c, fr)
                return w_shell(Xn, K, fr, mat) if X is E else w_shell(E, Xn, fr, mat)

            fd[(slice(None),) + idx] = (energy(plus) - energy(minus)) / (2 * step)
        # components X_ia multiply g^i (x) a^a, so dW/dX_ia = g^i . G a^a
        grad = np.einsum("nik,nkl,nal->nia", fr.basis_con, G.cart, fr.a_con)
        assert np.allclose(grad, fd, rtol=1e-6, atol=1e-8 * np.abs(fd).max())


@given(st.floats(0.1, 10), st.floats(-0.5, 5), st.floats(0.01, 5), st.integers(0, 2**31))
def test_positive_definiteness(mu, lam, mu_c, seed):
    rng = np.random.default_rng(seed)
    m = MaterialConstants(mu, lam, mu_c, L_c=0.5, b1=1.0, b2=2.0, b3=0.5)
    fr = sample_frame(SphereCapChart(1.0), rng, 200)
    X = random_shell_tensor(rng, fr)
    assert np.all(w_coss(X, mat=m) > 0) and np.all(w_curv(X, m) > 0)


def test_semi_definite_without_couple_modulus():
    fr = flat_frame()
    m = MaterialConstants(1.0, 1.0, 0.0)
    W = np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]])
    assert w_coss(shell(fr, W), mat=m)[0] == pytest.approx(0, abs=1e-15)


def test_variant_relation(rng, mat):
    fr = sample_frame(SphereCapChart(1.0), rng, 30)
    n0 = fr.n0
    P = np.eye(3) - n0[..., :, None] * n0[..., None, :]
    E = ShellTensor.from_cartesian(P @ rng.standard_normal(fr.shape + (3, 3)) @ P, fr)
    K = random_shell_tensor(rng, fr)
    assert np.allclose(w_shell(E, K, fr, mat, "harmonic"), w_shell(E, K, fr, mat, "arithmetic"), rtol=1e-12)
    E2 = random_shell_tensor(rng, fr)
    assert not np.allclose(w_shell(E2, K, fr, mat, "harmonic"), w_shell(E2, K, fr, mat, "arithmetic"))
