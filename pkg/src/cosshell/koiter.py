"""Classical Koiter energy and the reduction of the Cosserat shell energy to it.

Kirchhoff-Love (KL) configurations are built analytically: a deformed surface
``m = y0 + s phi`` is prescribed symbolically, and the microrotation is the
rotation taking the reference frame ``{a_1/|a_1|, n0 x a_1/|a_1|, n0}`` to the
corresponding deformed frame.  The director ``d3`` is then the deformed normal
by construction and all derivatives are exact.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import sympy

from .constitutive import MaterialConstants, _ddot, _sym, _tr, shell_moduli, w_mixt_cart, w_shell_terms, Geometry
from .errors import KLViolated, NotSymmetric
from .geometry import Chart, CylinderChart, PlateChart, SphereCapChart, SurfaceFrame, frame_from_derivatives
from .kinematics import (
    Discretization,
    MidsurfaceConfiguration,
    curvature_from_rotation_derivatives,
    deformation_gradient,
    koiter_from_derivatives,
    strain_from_gradient,
    unit_normal,
)
from .tensors import PlanarTensor

KL_TOL = 1e-8


@dataclass(frozen=True)
class KoiterMaterial:
    mu: float
    lam: float
    h: float

    def __post_init__(self):
        if not (self.mu > 0 and 3 * self.lam + 2 * self.mu > 0 and self.h > 0):
            raise ValueError("need mu > 0, 3 lam + 2 mu > 0 and h > 0")

    @classmethod
    def from_material(cls, mat: MaterialConstants) -> "KoiterMaterial":
        return cls(mat.mu, mat.lam, mat.h)

    def as_cosserat(self) -> MaterialConstants:
        """Cosserat constants with ``mu_c = 0`` (curvature constants are placeholders)."""
        return MaterialConstants(self.mu, self.lam, 0.0, h=self.h)


def _w_koit_cart(T, mat):
    return mat.mu * _ddot(_sym(T), _sym(T)) + mat.lam * mat.mu / (mat.lam + 2 * mat.mu) * _tr(T) ** 2


def w_koiter_form(T, mat) -> np.ndarray:
    """``mu |sym T|^2 + lam mu/(lam+2mu) (tr T)^2`` for a symmetric planar tensor.

    ``T`` is a :class:`PlanarTensor` or a Cartesian array.

    Raises
    ------
    NotSymmetric
        If ``|skew T| > 1e-10 (|T| + 1)``.
    """
    Tc = T.cart if isinstance(T, PlanarTensor) else np.asarray(T, dtype=float)
    skew = 0.5 * (Tc - np.swapaxes(Tc, -1, -2))
    if np.any(np.linalg.norm(skew, axis=(-2, -1)) > 1e-10 * (np.linalg.norm(Tc, axis=(-2, -1)) + 1.0)):
        raise NotSymmetric("Koiter form needs a symmetric tensor")
    return _w_koit_cart(Tc, mat)


def koiter_energy_density(eps, rho, mat) -> np.ndarray:
    """``h W(eps) + h^3/12 W(rho)``."""
    return mat.h * w_koiter_form(eps, mat) + mat.h**3 / 12 * w_koiter_form(rho, mat)


def koiter_moduli(frame: SurfaceFrame, mat) -> np.ndarray:
    """Plane-stress moduli components (the shell elasticity moduli at ``mu_c = 0``)."""
    g = frame.metric_inv
    gg = np.einsum("...ik,...jl->...ijkl", g, g)
    gs = np.einsum("...il,...jk->...ijkl", g, g)
    return mat.mu * (gg + gs) + 2 * mat.lam * mat.mu / (mat.lam + 2 * mat.mu) * np.einsum("...ij,...kl->...ijkl", g, g)


# ---------------------------------------------------------------------------
# KL samples

@dataclass
class KLSample:
    """Pointwise data of a KL configuration: frame, derivatives and rotations."""

    frame: SurfaceFrame
    m_u: np.ndarray
    m_v: np.ndarray
    n: np.ndarray
    n_u: np.ndarray
    n_v: np.ndarray
    Q: np.ndarray
    Q_u: np.ndarray
    Q_v: np.ndarray
    weights: np.ndarray | None = None

    def strains(self):
        F = deformation_gradient(self.frame, self.m_u, self.m_v)
        E = strain_from_gradient(self.frame, F, self.Q)
        Kc = curvature_from_rotation_derivatives(self.frame, self.Q, self.Q_u, self.Q_v)
        return E, Kc

    def koiter_strains(self):
        return koiter_from_derivatives(self.frame, self.m_u, self.m_v, self.n_u, self.n_v)

    def kl_violation(self) -> np.ndarray:
        """``|d3 - n|`` per point."""
        d3 = np.einsum("...ij,...j->...i", self.Q, self.frame.n0)
        return np.linalg.norm(d3 - self.n, axis=-1)


def _unit_with_derivative(x, x_a):
    """Unit vector ``x/|x|`` and its derivative given the derivative of ``x``."""
    nx = np.linalg.norm(x, axis=-1, keepdims=True)
    t = x / nx
    return t, (x_a - t * np.sum(t * x_a, axis=-1, keepdims=True)) / nx


def _frame_with_derivatives(x_u, x_v, x_uu, x_uv, x_vv):
    """Orthonormal frame ``[t, n x t, n]`` (as columns) and its u/v derivatives."""
    c = np.cross(x_u, x_v)
    c_u = np.cross(x_uu, x_v) + np.cross(x_u, x_uv)
    c_v = np.cross(x_uv, x_v) + np.cross(x_u, x_vv)
    n, n_u = _unit_with_derivative(c, c_u)
    _, n_v = _unit_with_derivative(c, c_v)
    t, t_u = _unit_with_derivative(x_u, x_uu)
    _, t_v = _unit_with_derivative(x_u, x_uv)
    s = np.cross(n, t)
    s_u = np.cross(n_u, t) + np.cross(n, t_u)
    s_v = np.cross(n_v, t) + np.cross(n, t_v)
    D = np.stack([t, s, n], axis=-1)
    return D, np.stack([t_u, s_u, n_u], axis=-1), np.stack([t_v, s_v, n_v], axis=-1), n, n_u, n_v


class KLFixture:
    """Analytic KL configuration ``m(u, v) = y0(u, v) + s phi(u, v)``.

    Parameters
    ----------
    name : str
    chart : Chart
        Reference chart (only its parameter ranges are used for sampling).
    y0, phi : sequence of three sympy expressions in ``u, v``
    """

    u, v = sympy.symbols("u v", real=True)

    def __init__(self, name: str, chart: Chart, y0, phi):
        self.name = name
        self.chart = chart
        u, v = self.u, self.v
        s = sympy.Symbol("s", real=True)
        m = sympy.Matrix(y0) + s * sympy.Matrix(phi)
        y = sympy.Matrix(y0)

        def derivs(expr):
            d_u, d_v = expr.diff(u), expr.diff(v)
            return [expr, d_u, d_v, d_u.diff(u), d_u.diff(v), d_v.diff(v)]

        self._m = [sympy.lambdify((u, v, s), list(d), "numpy") for d in derivs(m)]
        self._y = [sympy.lambdify((u, v), list(d), "numpy") for d in derivs(y)]

    @staticmethod
    def _eval(fn, shape, *args):
        vals = fn(*args)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in vals], axis=-1)

    def sample(self, amplitude: float, n_u: int = 33, n_v: int | None = None) -> KLSample:
        """Evaluate the fixture on a uniform ``n_u x n_v`` lattice of its chart domain."""
        n_v = n_u if n_v is None else n_v
        uu = np.linspace(*self.chart.u_range, n_u)
        vv = np.linspace(*self.chart.v_range, n_v)
        U, V = np.meshgrid(uu, vv, indexing="ij")
        shape = U.shape
        yd = [self._eval(f, shape, U, V) for f in self._y]
        md = [self._eval(f, shape, U, V, float(amplitude)) for f in self._m]
        frame = frame_from_derivatives(*yd)
        D0, D0_u, D0_v, _, _, _ = _frame_with_derivatives(*yd[1:])
        D, D_u, D_v, nrm, nrm_u, nrm_v = _frame_with_derivatives(*md[1:])
        D0t = np.swapaxes(D0, -1, -2)
        Q = D @ D0t
        Q_u = D_u @ D0t + D @ np.swapaxes(D0_u, -1, -2)
        Q_v = D_v @ D0t + D @ np.swapaxes(D0_v, -1, -2)
        wu = np.full(n_u, uu[1] - uu[0])
        wu[[0, -1]] *= 0.5
        wv = np.full(n_v, vv[1] - vv[0])
        wv[[0, -1]] *= 0.5
        weights = np.outer(wu, wv) * frame.area
        return KLSample(frame, md[1], md[2], nrm, nrm_u, nrm_v, Q, Q_u, Q_v, weights)

    def configuration(self, amplitude: float, disc: Discretization) -> MidsurfaceConfiguration:
        """Nodal fields ``(m, Q_e)`` of the fixture on a discretization of its chart."""
        sample = self.sample(amplitude, *disc.shape)
        m = self._eval(self._m[0], disc.shape, disc.grid.U, disc.grid.V, float(amplitude))
        return MidsurfaceConfiguration.from_matrices(m, sample.Q)


def sample_from_configuration(config: MidsurfaceConfiguration, disc: Discretization) -> KLSample:
    """KL sample from nodal fields, with finite-difference derivatives."""
    grid = disc.grid
    m_u, m_v = grid.d_u(config.m), grid.d_v(config.m)
    n = unit_normal(m_u, m_v)
    Q = config.Q
    return KLSample(disc.frame, m_u, m_v, n, grid.d_u(n), grid.d_v(n), Q, grid.d_u(Q), grid.d_v(Q), disc.quad_weights)


def builtin_fixtures() -> dict:
    """KL fixtures used by the tests and the CLI (keys: plate, cylinder, sphere-cap, reference)."""
    u, v = KLFixture.u, KLFixture.v
    pi = sympy.pi
    plate_phi = [
        sympy.Rational(3, 10) * sympy.sin(pi * u) * v,
        sympy.Rational(1, 5) * u * v**2,
        sympy.sin(pi * u) * sympy.cos(pi * v / 2) + u**2,
    ]
    R = 1
    sphere_y0 = [R * sympy.sin(v) * sympy.cos(u), R * sympy.sin(v) * sympy.sin(u), R * sympy.cos(v)]
    sphere_phi = [
        sympy.Rational(1, 2) * sympy.cos(2 * u) * sympy.sin(v),
        sympy.Rational(3, 10) * sympy.sin(u + v),
        sympy.cos(u) * sympy.cos(2 * v) + sympy.Rational(1, 5) * u,
    ]
    cyl_y0 = [sympy.cos(u), sympy.sin(u), v]
    cyl_phi = [sympy.Rational(2, 5) * sympy.cos(u) * v, sympy.sin(2 * u), sympy.Rational(1, 2) * v**2 * sympy.cos(u)]
    return {
        "plate": KLFixture("plate", PlateChart(), [u, v, 0], plate_phi),
        "cylinder": KLFixture("cylinder", CylinderChart(1.0, (0.0, 1.0), (0.0, 1.0)), cyl_y0, cyl_phi),
        "sphere-cap": KLFixture("sphere-cap", SphereCapChart(1.0), sphere_y0, sphere_phi),
        "reference": KLFixture("reference", PlateChart(), [u, v, 0], [0, 0, 0]),
    }


# ---------------------------------------------------------------------------
# reduction

@dataclass
class ReductionReport:
    """Integrated energies of the reduction chain (all per unit of the sampled area)."""

    w_full_reduced: float
    w_koiter_leading: float
    w_curvature_correction_terms: float
    discrepancy: float
    neglected_terms: float
    extensional_gap: float
    w_shell_gap: float
    max_transverse_shear: float
    kl_violation: float

    def to_dict(self):
        return asdict(self)


def reduced_energy_density(E, Kc, geo: Geometry, mat: MaterialConstants) -> np.ndarray:
    """Cosserat energy density with ``mu_c = 0`` and no curvature energy, in the rearranged form.

    ``(h + K h^3/12) W(E) + h^3/12 [W(Eb + cK) - 2 W(E, (Eb + cK) b*)]``.
    """
    h = mat.h
    h3 = h**3 / 12
    Y = E @ geo.b + geo.c @ Kc
    return (h + geo.K * h3) * w_mixt_cart(E, E, mat) + h3 * (
        w_mixt_cart(Y, Y, mat) - 2 * w_mixt_cart(E, Y @ geo.bstar, mat)
    )


def correction_bracket(eps, rho, geo: Geometry, mat) -> np.ndarray:
    """Curvature-coupled terms left over after expressing the reduced energy in (eps, rho).

    ``h^3/12 [4 W(eps b, eps b - rho) - W(eps, 3 K eps - 2 rho b*)]``; it
    vanishes identically for plates.
    """
    h3 = mat.h**3 / 12
    eb = eps @ geo.b
    K = geo.K[..., None, None]
    return h3 * (4 * w_mixt_cart(eb, eb - rho, mat) - w_mixt_cart(eps, 3 * K * eps - 2 * rho @ geo.bstar, mat))


def reduction_check(sample: KLSample, mat, tol: float = KL_TOL) -> ReductionReport:
    """Compare the reduced Cosserat energy with the Koiter energy on a KL sample.

    ``mat`` must have ``mu_c = 0``; a :class:`KoiterMaterial` is converted.

    Raises
    ------
    KLViolated
        If ``|d3 - n| > tol`` at some point.
    """
    if isinstance(mat, KoiterMaterial):
        mat = mat.as_cosserat()
    if mat.mu_c != 0:
        raise ValueError("the reduction requires mu_c = 0")
    viol = sample.kl_violation()
    if np.any(viol > tol):
        raise KLViolated(f"director d3 deviates from the deformed normal by {viol.max():.3e}")
    geo = Geometry.from_frame(sample.frame)
    E, Kc = sample.strains()
    eps, rho = sample.koiter_strains()
    wts = sample.weights if sample.weights is not None else np.ones(sample.frame.shape)
    area = float(np.sum(wts))

    def integral(x):
        return float(np.sum(x * wts)) / area

    full = reduced_energy_density(E, Kc, geo, mat)
    koit = mat.h * _w_koit_cart(eps, mat) + mat.h**3 / 12 * _w_koit_cart(rho, mat)
    bracket = correction_bracket(eps, rho, geo, mat)
    terms = w_shell_terms(E, Kc, geo, mat, "harmonic")
    shell = terms["h_membrane"] + terms["h_shear"] + terms["h3_membrane"] + terms["h3_shear"] + terms["h3_coupling"]
    e_tr = np.linalg.norm(np.einsum("...ji,...j->...i", E, sample.frame.n0), axis=-1)
    return ReductionReport(
        w_full_reduced=integral(full),
        w_koiter_leading=integral(koit),
        w_curvature_correction_terms=integral(bracket),
        discrepancy=integral(np.abs(full - koit - bracket)),
        neglected_terms=integral(np.abs(bracket)),
        extensional_gap=integral(np.abs(mat.h * _w_koit_cart(eps, mat) - mat.h * w_mixt_cart(E, E, mat))),
        w_shell_gap=float(np.max(np.abs(shell - full))),
        max_transverse_shear=float(e_tr.max()),
        kl_violation=float(viol.max()),
    )


def fit_order(amplitudes, values) -> float | None:
    """Least-squares slope of ``log(values)`` against ``log(amplitudes)``.

    Returns ``None`` when every value is zero (nothing to fit).
    """
    if not np.any(np.asarray(values, dtype=float) > 0):
        return None
    x = np.log(np.asarray(amplitudes, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def amplitude_study(fixture: KLFixture, mat, amplitudes=(1e-2, 1e-3, 1e-4), n: int = 33) -> dict:
    """Reduction reports over amplitudes, with fitted orders of the discrepancy and extensional gap."""
    reports = [reduction_check(fixture.sample(s, n), mat) for s in amplitudes]
    return {
        "fixture": fixture.name,
        "amplitudes": list(amplitudes),
        "reports": [r.to_dict() for r in reports],
        "discrepancy_order": fit_order(amplitudes, [r.discrepancy for r in reports]),
        "extensional_order": fit_order(amplitudes, [r.extensional_gap for r in reports]),
        "max_bracket": max(abs(r.w_curvature_correction_terms) for r in reports),
    }
