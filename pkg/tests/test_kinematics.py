import numpy as np
import pytest
from hypothesis import given, strategies as st

from cosshell.constitutive import MaterialConstants, apply_C3d
from cosshell.errors import DegenerateDeformedSurface, GridTooSmall, ScenarioError
from cosshell.geometry import CylinderChart, PlateChart, SphereCapChart
from cosshell.kinematics import (
    Discretization,
    Grid,
    MidsurfaceConfiguration,
    bending_curvature,
    diff_matrix,
    expansion_vectors,
    koiter_strains,
    load_fields,
    save_fields,
    shell_strain,
    surface_divergence,
    surface_gradient,
)
from cosshell.tensors import ShellTensor, exp_so3
from cosshell.validation import analytic_rotation

CYL = CylinderChart(1.0, (0.0, 1.0), (0.0, 1.0))


def identity_q(shape):
    q = np.zeros(shape + (4,))
    q[..., 0] = 1
    return q


def test_grid_too_small():
    with pytest.raises(GridTooSmall):
        diff_matrix(2, 0.1)
    with pytest.raises(GridTooSmall):
        Grid(2, 5, (0, 1), (0, 1))


def test_gradient_of_constant_and_affine_fields():
    d = Discretization(PlateChart(), 7, 5)
    assert np.allclose(surface_gradient(np.ones(d.shape + (3,)), d), 0)
    f = np.zeros(d.shape + (3,))
    f[..., 0] = d.grid.U
    G = surface_gradient(f, d)
    assert np.allclose(G, np.outer([1, 0, 0], [1, 0, 0]), atol=1e-10)


def test_gradient_of_chart_is_second_order():
    errs = []
    for n in (9, 17, 33):
        d = Discretization(CYL, n, n)
        errs.append(np.abs(surface_gradient(d.frame.point, d) - d.frame.a_cart)[1:-1, 1:-1].max())
    assert np.log2(errs[0] / errs[1]) > 1.8 and np.log2(errs[1] / errs[2]) > 1.8


def test_divergence_of_affine_tensor_field():
    d = Discretization(PlateChart(), 6, 6)
    T = np.zeros(d.shape + (3, 3))
    T[..., 0, 0] = d.grid.U
    T[..., 1, 1] = 3 * d.grid.V
    assert np.allclose(surface_divergence(T, d), [1, 3, 0], atol=1e-10)


def test_reference_and_rigid_motion_strains_vanish(rng):
    d = Discretization(CYL, 9, 9)
    ref = MidsurfaceConfiguration.reference(d)
    assert np.allclose(shell_strain(ref, d).cart, 0, atol=1e-14)
    assert np.allclose(bending_curvature(ref, d).cart, 0, atol=1e-14)
    R = exp_so3(rng.standard_normal(3))
    moved = ref.rigidly_moved(R, [1.0, -2.0, 0.5])
    assert np.allclose(shell_strain(moved, d).cart, 0, atol=1e-13)
    assert np.allclose(bending_curvature(moved, d).cart, 0, atol=1e-13)


def test_uniform_stretch_strain():
    d = Discretization(PlateChart(), 5, 5)
    lam = 1.01
    cfg = MidsurfaceConfiguration(lam * d.reference_positions(), identity_q(d.shape))
    assert np.allclose(shell_strain(cfg, d).cart, (lam - 1) * d.frame.a_cart, atol=1e-13)
    ks = koiter_strains(cfg, d)
    assert np.allclose(ks.eps.cart, 0.5 * (lam**2 - 1) * d.frame.a_cart, atol=1e-13)
    assert np.allclose(ks.rho.cart, 0, atol=1e-13)


def test_strains_frame_indifferent(rng):
    d = Discretization(SphereCapChart(1.0), 9, 9)
    m = d.reference_positions() + 0.05 * rng.standard_normal(d.shape + (3,))
    cfg = MidsurfaceConfiguration.from_matrices(m, exp_so3(0.1 * rng.standard_normal(d.shape + (3,))))
    E0, K0 = shell_strain(cfg, d).cart, bending_curvature(cfg, d).cart
    for _ in range(5):
        moved = cfg.rigidly_moved(exp_so3(rng.standard_normal(3)), rng.standard_normal(3))
        assert np.abs(shell_strain(moved, d).cart - E0).max() < 1e-12
        assert np.abs(bending_curvature(moved, d).cart - K0).max() < 1e-12


def test_constant_rotation_has_no_curvature():
    d = Discretization(CYL, 7, 7)
    Q = np.broadcast_to(exp_so3([0.3, -0.2, 0.5]), d.shape + (3, 3))
    cfg = MidsurfaceConfiguration.from_matrices(d.reference_positions(), Q)
    assert np.allclose(bending_curvature(cfg, d).cart, 0, atol=1e-13)


def test_rotation_about_normal_gives_unit_curvature():
    d = Discretization(PlateChart(), 17, 17)
    Q = exp_so3(np.stack([0 * d.grid.U, 0 * d.grid.U, d.grid.U], -1))
    cfg = MidsurfaceConfiguration.from_matrices(d.reference_positions(), Q)
    expected = np.outer([0, 0, 1], [1, 0, 0])
    for method in ("axl", "directors"):
        assert np.allclose(bending_curvature(cfg, d, method).cart[1:-1, 1:-1], expected, atol=1e-3)


def test_two_curvature_formulas_agree_on_fine_grid():
    d = Discretization(CYL, 129, 129)
    cfg = MidsurfaceConfiguration.from_matrices(d.frame.point, analytic_rotation(d.grid.U, d.grid.V))
    k1 = bending_curvature(cfg, d, "axl").cart
    k2 = bending_curvature(cfg, d, "directors").cart
    assert np.abs(k1 - k2).max() < 1e-4
    assert np.abs(k1 - k2)[1:-1, 1:-1].max() < 1e-4
    with pytest.raises(ValueError):
        bending_curvature(cfg, d, "other")


def test_isometric_bend_koiter_strains():
    R = 2.0
    d = Discretization(PlateChart((0.0, 1.0), (0.0, 1.0)), 65, 65)
    U, V = d.grid.U, d.grid.V
    m = np.stack([R * np.sin(U / R), V, R * (1 - np.cos(U / R))], -1)
    cfg = MidsurfaceConfiguration(m, identity_q(d.shape))
    ks = koiter_strains(cfg, d)
    assert np.abs(ks.eps.cart).max() < 1e-4
    eig = np.linalg.eigvalsh(ks.rho.cart[32, 32])
    assert np.isclose(np.abs(eig).max(), 1 / R, rtol=1e-3)
    assert np.allclose(ks.rho.cart, np.swapaxes(ks.rho.cart, -1, -2), atol=1e-12)


def test_degenerate_deformed_surface():
    d = Discretization(PlateChart(), 5, 5)
    m = np.zeros(d.shape + (3,))
    m[..., 0] = d.grid.U
    with pytest.raises(DegenerateDeformedSurface):
        koiter_strains(MidsurfaceConfiguration(m, identity_q(d.shape)), d)


def test_expansion_vectors_trivial_cases(rng):
    d = Discretization(SphereCapChart(1.0), 5, 5)
    fr = d.frame
    mat = MaterialConstants(1.0, 0.8, 0.3)
    zero = ShellTensor.zeros(fr)
    alpha, beta = expansion_vectors(zero, zero, fr, mat)
    assert np.allclose(alpha, fr.n0) and np.allclose(beta, 0)
    E = ShellTensor(rng.standard_normal(fr.shape + (3, 2)), fr)
    same = MaterialConstants(1.0, 0.8, 1.0)
    alpha, _ = expansion_vectors(E, zero, fr, same)
    tr = np.trace(E.cart, axis1=-2, axis2=-1)
    assert np.allclose(alpha, (1 - 0.8 / 2.8 * tr)[..., None] * fr.n0)


def test_expansion_vectors_solve_traction_free_conditions(rng):
    d = Discretization(SphereCapChart(1.0), 5, 5)
    fr = d.frame
    mat = MaterialConstants(1.0, 0.8, 0.3)
    E = ShellTensor(0.1 * rng.standard_normal(fr.shape + (3, 2)), fr)
    Kc = ShellTensor(0.1 * rng.standard_normal(fr.shape + (3, 2)), fr)
    Q = exp_so3(rng.standard_normal(fr.shape + (3,)))
    alpha, beta = expansion_vectors(E, Kc, fr, mat, Q)
    Qt = np.swapaxes(Q, -1, -2)
    n0 = fr.n0
    outer = lambda x, y: x[..., :, None] * y[..., None, :]  # noqa: E731
    T1 = E.cart + outer(np.einsum("...ij,...j->...i", Qt, alpha) - n0, n0)
    r1 = np.einsum("...ij,...j->...i", apply_C3d(T1, mat), n0)
    Y = E.cart @ fr.b_cart + fr.c_cart @ Kc.cart
    T2 = Y + outer(np.einsum("...ij,...j->...i", Qt, beta), n0)
    r2 = np.einsum("...ij,...j->...i", apply_C3d(T2, mat), n0)
    assert np.abs(r1).max() < 1e-10 and np.abs(r2).max() < 1e-10


@given(st.integers(3, 6), st.integers(3, 6), st.integers(0, 2**31))
def test_field_csv_round_trip_is_exact(n_u, n_v, seed):
    import tempfile
    from pathlib import Path

    rng = np.random.default_rng(seed)
    d = Discretization(PlateChart(), n_u, n_v)
    cfg = MidsurfaceConfiguration.from_matrices(rng.standard_normal(d.shape + (3,)),
                                                exp_so3(rng.standard_normal(d.shape + (3,))))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "f.csv"
        save_fields(path, cfg, d.grid)
        back = load_fields(path, d.grid)
    assert np.array_equal(back.m, cfg.m) and np.array_equal(back.q, cfg.q)


def test_field_csv_errors(tmp_path):
    d = Discretization(PlateChart(), 3, 3)
    p = tmp_path / "bad.csv"
    p.write_text("idx,u,v,mx,my,mz,qw,qx,qy,qz\n0,0,0,1,2\n")
    with pytest.raises(ScenarioError, match=":2:"):
        load_fields(p, d.grid)
    p.write_text("a,b\n")
    with pytest.raises(ScenarioError, match=":1:"):
        load_fields(p, d.grid)
