import dataclasses

import numpy as np
import pytest

from cosshell.constitutive import MaterialConstants, w_mixt
from cosshell.errors import KLViolated, NotSymmetric
from cosshell.kinematics import Discretization
from cosshell.koiter import (
    KoiterMaterial,
    amplitude_study,
    builtin_fixtures,
    fit_order,
    koiter_energy_density,
    koiter_moduli,
    reduction_check,
    sample_from_configuration,
    w_koiter_form,
)
from cosshell.tensors import ShellTensor, exp_so3

from conftest import random_chart_frames

UNIT = KoiterMaterial(1.0, 1.0, 1.0)
A = np.diag([1.0, 1.0, 0.0])


@pytest.fixture(scope="module")
def fixtures():
    return builtin_fixtures()


def test_koiter_material_invariants():
    with pytest.raises(ValueError):
        KoiterMaterial(0.0, 1.0, 1.0)
    assert KoiterMaterial.from_material(MaterialConstants(2.0, 1.0, 0.3, h=0.2)) == KoiterMaterial(2.0, 1.0, 0.2)


def test_w_koiter_form_examples(rng):
    assert w_koiter_form(A, UNIT) == pytest.approx(10 / 3)
    assert w_koiter_form(np.zeros((3, 3)), UNIT) == 0
    with pytest.raises(NotSymmetric):
        w_koiter_form(np.array([[0, 1.0, 0], [0, 0, 0], [0, 0, 0]]), UNIT)
    m = MaterialConstants(1.3, 0.4, 0.77)
    for fr in random_chart_frames(rng):
        T = rng.standard_normal(fr.shape + (2, 2))
        S = np.einsum("...ab,...ai,...bj->...ij", T + np.swapaxes(T, -1, -2), fr.a_con, fr.a_con)
        X = ShellTensor.from_cartesian(S, fr)
        assert np.allclose(w_koiter_form(S, KoiterMaterial(m.mu, m.lam, 1.0)), w_mixt(X, mat=m), rtol=1e-12)


def test_koiter_energy_density_examples():
    assert koiter_energy_density(np.zeros((3, 3)), np.zeros((3, 3)), UNIT) == 0
    assert koiter_energy_density(np.zeros((3, 3)), A, UNIT) == pytest.approx(5 / 18)
    thin = KoiterMaterial(1.0, 1.0, 0.1)
    assert koiter_energy_density(A, np.zeros((3, 3)), thin) == pytest.approx(0.1 * 10 / 3)


def test_koiter_moduli_match_shell_moduli(rng):
    from cosshell.constitutive import shell_moduli

    km = KoiterMaterial(1.3, 0.6, 0.1)
    for fr in random_chart_frames(rng):
        assert np.allclose(koiter_moduli(fr, km), shell_moduli(fr, km.as_cosserat()).C, rtol=1e-14, atol=1e-14)


def test_reference_fixture_reports_zeros(fixtures):
    rep = amplitude_study(fixtures["reference"], UNIT, n=9)
    for r in rep["reports"]:
        assert all(v == 0 for v in r.values())
    assert rep["discrepancy_order"] is None and rep["max_bracket"] == 0


def test_plate_bracket_vanishes(fixtures):
    rep = amplitude_study(fixtures["plate"], KoiterMaterial(1.0, 0.7, 0.05), n=17)
    assert rep["max_bracket"] == 0
    assert rep["discrepancy_order"] >= 2.7


@pytest.mark.parametrize("name", ["cylinder", "sphere-cap"])
def test_curved_discrepancy_is_cubic(fixtures, name):
    rep = amplitude_study(fixtures[name], KoiterMaterial(1.0, 0.7, 0.05), n=17)
    assert rep["discrepancy_order"] >= 2.7
    assert rep["extensional_order"] >= 2.7
    assert rep["max_bracket"] > 0


@pytest.mark.parametrize("name", ["plate", "cylinder", "sphere-cap"])
def test_kl_fixture_has_no_transverse_shear(fixtures, name):
    rep = reduction_check(fixtures[name].sample(0.05, 17), UNIT)
    assert rep.kl_violation < 1e-12
    assert rep.max_transverse_shear <= 10 * max(rep.kl_violation, 1e-16)
    assert rep.w_shell_gap < 1e-12


def test_violated_kl_hypothesis_is_rejected(fixtures):
    s = fixtures["plate"].sample(0.05, 9)
    tilted = dataclasses.replace(s, Q=exp_so3([0.01, 0.0, 0.0]) @ s.Q)
    with pytest.raises(KLViolated):
        reduction_check(tilted, UNIT)
    with pytest.raises(ValueError):
        reduction_check(s, MaterialConstants(1.0, 1.0, 0.5))


def test_sample_from_discrete_configuration(fixtures):
    fx = fixtures["sphere-cap"]
    disc = Discretization(fx.chart, 17, 17)
    cfg = fx.configuration(0.01, disc)
    s = sample_from_configuration(cfg, disc)
    assert s.kl_violation().max() < 1e-2
    analytic = fx.sample(0.01, 17)
    assert np.allclose(s.Q, analytic.Q, atol=1e-14)


def test_fit_order():
    amps = [1e-2, 1e-3, 1e-4]
    assert fit_order(amps, [a**3 for a in amps]) == pytest.approx(3.0)
    assert fit_order(amps, [0, 0, 0]) is None
