"""Material constants, quadratic energy forms, moduli and stress resultants.

Every energy form exists along at least two independent evaluation paths so
they can be cross-checked.  The production path (``*_dev`` forms) is what
:func:`w_shell` and the solver kernels use.

Array-level functions (leading underscore or ``_cart`` suffix) work on stacks
of Cartesian 3x3 matrices together with the unit normal ``n0``; public
functions accept :class:`~cosshell.tensors.ShellTensor` objects.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import FrameMismatch
from .geometry import SurfaceFrame
from .tensors import PlanarTensor, ShellTensor

VARIANTS = ("harmonic", "arithmetic")


@dataclass(frozen=True)
class MaterialConstants:
    """Isotropic Cosserat shell constants (SI units).

    Attributes
    ----------
    mu, lam : float
        Lame constants.
    mu_c : float
        Cosserat couple modulus.  ``mu_c = 0`` is allowed; the energy is then
        only positive semi-definite.
    L_c : float
        Internal length.
    b1, b2, b3 : float
        Dimensionless curvature coefficients.
    h : float
        Shell thickness.
    """

    mu: float
    lam: float
    mu_c: float
    L_c: float = 1.0
    b1: float = 1.0
    b2: float = 1.0
    b3: float = 1.0
    h: float = 0.1

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 3 * self.lam + 2 * self.mu > 0:
            raise ValueError("3 lam + 2 mu must be positive")
        if not self.mu_c >= 0:
            raise ValueError("mu_c must be non-negative")
        if not (self.b1 > 0 and self.b2 > 0 and self.b3 > 0):
            raise ValueError("b1, b2, b3 must be positive")
        if not self.L_c > 0:
            raise ValueError("L_c must be positive")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @property
    def kappa(self) -> float:
        return (3 * self.lam + 2 * self.mu) / 3

    @property
    def semi_definite(self) -> bool:
        """True when ``mu_c = 0`` (energy only positive semi-definite)."""
        return self.mu_c == 0

    def shear_coefficient(self, variant: str = "harmonic") -> float:
        """Transverse-shear stiffness: ``2 mu mu_c/(mu+mu_c)`` or ``(mu+mu_c)/2``."""
        if variant == "harmonic":
            return 2 * self.mu * self.mu_c / (self.mu + self.mu_c)
        if variant == "arithmetic":
            return 0.5 * (self.mu + self.mu_c)
        raise ValueError(f"unknown variant {variant!r}")

    def curvature_range(self, frame: SurfaceFrame) -> dict:
        """Thickness check ``h <= 0.1 / max|principal curvature|`` (reported only)."""
        disc = np.sqrt(np.maximum(frame.H**2 - frame.K, 0.0))
        kmax = float(np.max(np.abs(frame.H) + disc)) if frame.H.size else 0.0
        limit = np.inf if kmax == 0 else 0.1 / kmax
        return {"max_principal_curvature": kmax, "h_limit": limit, "thin": self.h <= limit}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(v) for k, v in d.items()})


def _ratio_coeffs(mat: MaterialConstants):
    """``lam/(lam+2mu)`` and ``(mu-mu_c)/(mu+mu_c)``."""
    if not mat.lam + 2 * mat.mu > 0 or not mat.mu + mat.mu_c > 0:
        raise ValueError("need lam + 2 mu > 0 and mu + mu_c > 0")
    return mat.lam / (mat.lam + 2 * mat.mu), (mat.mu - mat.mu_c) / (mat.mu + mat.mu_c)


# ---------------------------------------------------------------------------
# array-level helpers

def _T(X):
    return np.swapaxes(X, -1, -2)


def _ddot(A, B):
    return np.einsum("...ij,...ij->...", A, B)


def _tr(X):
    return np.trace(X, axis1=-2, axis2=-1)


def _sym(X):
    return 0.5 * (X + _T(X))


def _skew(X):
    return 0.5 * (X - _T(X))


def _proj(n0):
    return np.eye(3) - n0[..., :, None] * n0[..., None, :]


def _planar(X, n0):
    """``aX`` (left projection onto the tangent plane)."""
    return _proj(n0) @ X


def _transversal(X, n0):
    """``n0 X = X^T n0``."""
    return np.einsum("...ji,...j->...i", X, n0)


def _dev_s(T, n0):
    return T - 0.5 * _tr(T)[..., None, None] * _proj(n0)


def _mixt_coeff(mat):
    return mat.lam * mat.mu / (mat.lam + 2 * mat.mu)


def w_mixt_cart(X, Y, mat):
    """``mu sym X : sym Y + mu_c skew X : skew Y + lam mu/(lam+2mu) tr X tr Y``."""
    return (
        mat.mu * _ddot(_sym(X), _sym(Y))
        + mat.mu_c * _ddot(_skew(X), _skew(Y))
        + _mixt_coeff(mat) * _tr(X) * _tr(Y)
    )


def w_mp_cart(X, mat):
    """``mu |sym X|^2 + mu_c |skew X|^2 + lam/2 (tr X)^2``."""
    return mat.mu * _ddot(_sym(X), _sym(X)) + mat.mu_c * _ddot(_skew(X), _skew(X)) + 0.5 * mat.lam * _tr(X) ** 2


def w_coss_cart(X, Y, n0, mat, variant="harmonic"):
    """Bilinear Cosserat form as ``W_mixt`` minus a transverse-shear correction."""
    k = mat.shear_coefficient(variant)
    corr = 0.5 * (mat.mu + mat.mu_c) - k
    return w_mixt_cart(X, Y, mat) - corr * np.einsum("...i,...i->...", _transversal(X, n0), _transversal(Y, n0))


def w_coss_split_cart(X, Y, n0, mat, variant="harmonic"):
    """``W_mixt(aX, aY) + k (n0 X).(n0 Y)``."""
    k = mat.shear_coefficient(variant)
    return w_mixt_cart(_planar(X, n0), _planar(Y, n0), mat) + k * np.einsum(
        "...i,...i->...", _transversal(X, n0), _transversal(Y, n0)
    )


def w_coss_dev_cart(X, n0, mat, variant="harmonic"):
    """Quadratic Cosserat form in deviatoric split (production path)."""
    k = mat.shear_coefficient(variant)
    aX = _planar(X, n0)
    ds = _dev_s(_sym(aX), n0)
    sk = _skew(aX)
    e = _transversal(X, n0)
    vol = mat.mu * (3 * mat.lam + 2 * mat.mu) / (2 * (mat.lam + 2 * mat.mu))
    return mat.mu * _ddot(ds, ds) + mat.mu_c * _ddot(sk, sk) + vol * _tr(aX) ** 2 + k * np.einsum("...i,...i->...", e, e)


def w_curv_dev_cart(X, n0, mat):
    """Curvature energy in deviatoric split (production path)."""
    aX = _planar(X, n0)
    ds = _dev_s(_sym(aX), n0)
    sk = _skew(aX)
    e = _transversal(X, n0)
    return (mat.mu * mat.L_c**2) * (
        mat.b1 * _ddot(ds, ds)
        + mat.b2 * _ddot(sk, sk)
        + (mat.b3 + mat.b1 / 6) * _tr(aX) ** 2
        + 0.5 * (mat.b1 + mat.b2) * np.einsum("...i,...i->...", e, e)
    )


def w_curv_full_cart(X, mat):
    """Curvature energy from the 3D form ``b1 |dev sym X|^2 + b2 |skew X|^2 + b3 tr^2``."""
    S = _sym(X)
    dev = S - _tr(X)[..., None, None] * np.eye(3) / 3
    return (mat.mu * mat.L_c**2) * (mat.b1 * _ddot(dev, dev) + mat.b2 * _ddot(_skew(X), _skew(X)) + mat.b3 * _tr(X) ** 2)


# ---------------------------------------------------------------------------
# moduli

def apply_CS_cart(T, n0, mat):
    """Shell elasticity moduli acting on a planar Cartesian tensor."""
    a = _proj(n0)
    return 2 * mat.mu * _sym(T) + 2 * mat.mu_c * _skew(T) + 2 * _mixt_coeff(mat) * _tr(T)[..., None, None] * a


def apply_GS_cart(T, n0, mat):
    """Shell curvature moduli acting on a planar Cartesian tensor."""
    a = _proj(n0)
    c = 2 * mat.mu * mat.L_c**2
    return c * (mat.b1 * _sym(T) + mat.b2 * _skew(T) + (mat.b3 - mat.b1 / 3) * _tr(T)[..., None, None] * a)


def apply_C3d(T, mat):
    """3D isotropic Cosserat moduli: ``2 mu sym T + 2 mu_c skew T + lam tr T 1``."""
    T = np.asarray(T, dtype=float)
    return 2 * mat.mu * _sym(T) + 2 * mat.mu_c * _skew(T) + mat.lam * _tr(T)[..., None, None] * np.eye(3)


def apply_G3d(T, mat):
    """3D curvature moduli: ``2 mu L^2 (b1 sym T + b2 skew T + (b3 - b1/3) tr T 1)``."""
    T = np.asarray(T, dtype=float)
    c = 2 * mat.mu * mat.L_c**2
    return c * (mat.b1 * _sym(T) + mat.b2 * _skew(T) + (mat.b3 - mat.b1 / 3) * _tr(T)[..., None, None] * np.eye(3))


def _iso4(g, c_sym, c_skew, c_tr):
    """Components ``c_sym S + c_skew A + c_tr g (x) g`` from a contravariant metric ``g``."""
    gg = np.einsum("...ik,...jl->...ijkl", g, g)
    gs = np.einsum("...il,...jk->...ijkl", g, g)
    return 0.5 * c_sym * (gg + gs) + 0.5 * c_skew * (gg - gs) + c_tr * np.einsum("...ij,...kl->...ijkl", g, g)


def _g3_inv(frame):
    g = np.zeros(frame.shape + (3, 3))
    g[..., :2, :2] = frame.metric_inv
    g[..., 2, 2] = 1.0
    return g


def moduli_3d_components(frame: SurfaceFrame, mat, which="C"):
    """Contravariant components ``C^{ijkl}`` (or ``G^{ijkl}``) on the basis {a_1, a_2, n0}."""
    g = _g3_inv(frame)
    if which == "C":
        return _iso4(g, 2 * mat.mu, 2 * mat.mu_c, mat.lam)
    c = 2 * mat.mu * mat.L_c**2
    return _iso4(g, c * mat.b1, c * mat.b2, c * (mat.b3 - mat.b1 / 3))


def apply_moduli_index(T, frame: SurfaceFrame, mat, which="C"):
    """Apply the 3D moduli through their frame components (index-form oracle)."""
    basis = frame.basis_cov
    Tc = np.einsum("...ik,...kl,...jl->...ij", basis, np.asarray(T, dtype=float), basis)
    out = np.einsum("...ijkl,...kl->...ij", moduli_3d_components(frame, mat, which), Tc)
    return np.einsum("...ij,...ik,...jl->...kl", out, basis, basis)


@dataclass
class ShellModuli:
    """Contravariant components ``C_S^{abcd}`` and ``G_S^{abcd}`` on a frame."""

    C: np.ndarray
    G: np.ndarray
    frame: SurfaceFrame

    def apply(self, which: str, T: PlanarTensor) -> PlanarTensor:
        """``C_S : T`` (``which='C'``) or ``G_S : T``, returned with covariant components."""
        if T.frame.uid != self.frame.uid:
            raise FrameMismatch("planar tensor does not live on the moduli frame")
        A = self.C if which == "C" else self.G
        con = np.einsum("...abcd,...cd->...ab", A, T.components)
        g = self.frame.metric
        return PlanarTensor(np.einsum("...ac,...cd,...db->...ab", g, con, g), self.frame)

    def energy(self, which: str, T: PlanarTensor) -> np.ndarray:
        """``1/2 T : M : T``."""
        A = self.C if which == "C" else self.G
        return 0.5 * np.einsum("...ab,...abcd,...cd->...", T.components, A, T.components)


def shell_moduli(frame: SurfaceFrame, mat: MaterialConstants) -> ShellModuli:
    g = frame.metric_inv
    C = _iso4(g, 2 * mat.mu, 2 * mat.mu_c, 2 * _mixt_coeff(mat))
    c = 2 * mat.mu * mat.L_c**2
    G = _iso4(g, c * mat.b1, c * mat.b2, c * (mat.b3 - mat.b1 / 3))
    return ShellModuli(C, G, frame)


# ---------------------------------------------------------------------------
# public tensor-level forms

def _same(X, Y):
    if X.frame.uid != Y.frame.uid:
        raise FrameMismatch("tensors live on different surface frames")


def w_mixt(X, Y=None, mat: MaterialConstants = None):
    """Mixed bilinear form ``W_mixt(X, Y)``; ``w_mixt(X, mat=m)`` is the quadratic form."""
    if Y is None:
        Y = X
    _same(X, Y)
    return w_mixt_cart(X.cart, Y.cart, mat)


def w_mp(X, mat):
    return w_mp_cart(X.cart, mat)


def w_coss(X, Y=None, mat: MaterialConstants = None, variant="harmonic"):
    """Cosserat bilinear form ``W_mixt(X, Y) - (mu-mu_c)^2/(2(mu+mu_c)) (n0X).(n0Y)``."""
    if Y is None:
        Y = X
    _same(X, Y)
    return w_coss_cart(X.cart, Y.cart, X.frame.n0, mat, variant)


def w_coss_paths(X: ShellTensor, mat, variant="harmonic") -> dict:
    """The quadratic Cosserat form along four independent evaluation paths."""
    n0 = X.frame.n0
    e = X.transversal()
    k = mat.shear_coefficient(variant)
    moduli = shell_moduli(X.frame, mat)
    Xc = X.cart
    return {
        "correction": w_coss_cart(Xc, Xc, n0, mat, variant),
        "split": w_coss_split_cart(Xc, Xc, n0, mat, variant),
        "moduli": moduli.energy("C", X.planar()) + k * np.einsum("...i,...i->...", e, e),
        "deviatoric": w_coss_dev_cart(Xc, n0, mat, variant),
    }


def w_curv(X: ShellTensor, mat) -> np.ndarray:
    """Curvature energy (deviatoric production path)."""
    return w_curv_dev_cart(X.cart, X.frame.n0, mat)


def w_curv_paths(X: ShellTensor, mat) -> dict:
    e = X.transversal()
    moduli = shell_moduli(X.frame, mat)
    return {
        "moduli": moduli.energy("G", X.planar())
        + 0.5 * mat.mu * mat.L_c**2 * (mat.b1 + mat.b2) * np.einsum("...i,...i->...", e, e),
        "deviatoric": w_curv_dev_cart(X.cart, X.frame.n0, mat),
        "three_d": w_curv_full_cart(X.cart, mat),
    }


def L_n0(X: ShellTensor, mat) -> np.ndarray:
    """``X - lam/(lam+2mu) tr X n0 (x) n0 - (mu-mu_c)/(mu+mu_c) (n0X) (x) n0`` (Cartesian 3x3)."""
    s, t = _ratio_coeffs(mat)
    n0 = X.frame.n0
    Xc = X.cart
    e = _transversal(Xc, n0)
    return Xc - (s * _tr(Xc))[..., None, None] * n0[..., :, None] * n0[..., None, :] - t * e[..., :, None] * n0[..., None, :]


# ---------------------------------------------------------------------------
# shell energy density

@dataclass(frozen=True)
class Geometry:
    """Per-node geometric data consumed by the shell kernels (Cartesian)."""

    n0: np.ndarray
    b: np.ndarray
    c: np.ndarray
    bstar: np.ndarray
    K: np.ndarray
    H: np.ndarray

    @classmethod
    def from_frame(cls, frame: SurfaceFrame) -> "Geometry":
        return cls(frame.n0, frame.b_cart, frame.c_cart, frame.bstar_cart, frame.K, frame.H)


def w_shell_terms(E, Kc, geo: Geometry, mat, variant="harmonic") -> dict:
    """Energy density split by thickness order and kind.

    Keys are ``h_membrane``, ``h_shear``, ``h_curvature``, ``h3_membrane``,
    ``h3_shear``, ``h3_coupling`` and ``h3_curvature``.  Their sum is the shell
    energy density.  ``E`` and ``Kc`` are Cartesian arrays.
    """
    h = mat.h
    h3 = h**3 / 12
    h1 = h - geo.K * h3
    k = mat.shear_coefficient(variant)
    n0 = geo.n0
    aE = _planar(E, n0)
    e = _transversal(E, n0)
    Eb = E @ geo.b
    cK = geo.c @ Kc
    Y = _planar(Eb, n0) + cK
    eb = _transversal(Eb, n0)
    Z = cK @ geo.bstar
    zero = np.zeros_like(geo.n0[..., 0])
    return {
        "h_membrane": h1 * w_mixt_cart(aE, aE, mat),
        "h_shear": h1 * k * np.einsum("...i,...i->...", e, e),
        "h_curvature": h1 * w_curv_dev_cart(Kc, n0, mat),
        "h3_membrane": h3 * w_mixt_cart(Y, Y, mat) + zero,
        "h3_shear": h3 * k * np.einsum("...i,...i->...", eb, eb) + zero,
        "h3_coupling": -2 * h3 * w_mixt_cart(aE, Z, mat) + zero,
        "h3_curvature": h3 * w_curv_dev_cart(Kc @ geo.b, n0, mat) + zero,
    }


def w_shell_cart(E, Kc, geo: Geometry, mat, variant="harmonic"):
    """Shell energy density in the split form used by the solver."""
    return sum(w_shell_terms(E, Kc, geo, mat, variant).values())


def w_shell_coss_cart(E, Kc, geo: Geometry, mat, variant="harmonic"):
    """Shell energy density assembled from the bilinear Cosserat form."""
    h = mat.h
    h3 = h**3 / 12
    h1 = h - geo.K * h3
    n0 = geo.n0
    Y = E @ geo.b + geo.c @ Kc
    Z = geo.c @ Kc @ geo.bstar

    def wc(A, B):
        return w_coss_cart(A, B, n0, mat, variant)

    def wk(A):
        return w_curv_full_cart(A, mat)

    return h1 * (wc(E, E) + wk(Kc)) + h3 * (wc(Y, Y) - 2 * wc(E, Z) + wk(Kc @ geo.b))


def _check_strains(E, Kc, frame):
    if E.frame.uid != frame.uid or Kc.frame.uid != frame.uid:
        raise FrameMismatch("strains do not live on the given frame")


def w_shell(E: ShellTensor, Kc: ShellTensor, frame: SurfaceFrame, mat, variant="harmonic", form="split"):
    """Areal strain-energy density of the shell.

    Parameters
    ----------
    variant : {"harmonic", "arithmetic"}
        Transverse-shear coefficient ``2 mu mu_c/(mu+mu_c)`` or ``(mu+mu_c)/2``.
    form : {"split", "cosserat"}
        ``"split"`` separates planar and transversal parts (production);
        ``"cosserat"`` uses the bilinear Cosserat form directly.
    """
    _check_strains(E, Kc, frame)
    geo = Geometry.from_frame(frame)
    if form == "split":
        return w_shell_cart(E.cart, Kc.cart, geo, mat, variant)
    if form == "cosserat":
        return w_shell_coss_cart(E.cart, Kc.cart, geo, mat, variant)
    raise ValueError(f"unknown form {form!r}")


def stress_resultants_cart(E, Kc, geo: Geometry, mat, variant="harmonic"):
    """Rotated resultants ``P = Q^T N`` and ``R = Q^T M`` (Cartesian, ``P n0 = 0``).

    ``P`` and ``R`` are the derivatives of :func:`w_shell_cart` with respect to
    ``E`` and ``Kc`` within the space of shell tensors.
    """
    h = mat.h
    h3 = h**3 / 12
    h1 = (h - geo.K * h3)[..., None, None]
    h2 = (h - 2 * geo.K * h3)[..., None]
    Hh = (2 * geo.H * h3)[..., None]
    k = mat.shear_coefficient(variant)
    n0 = geo.n0
    b, c, bs = geo.b, geo.c, geo.bstar
    aE = _planar(E, n0)
    aK = _planar(Kc, n0)
    e = _transversal(E, n0)
    f = _transversal(Kc, n0)
    Y = _planar(E @ b, n0) + c @ Kc
    CY = apply_CS_cart(Y, n0, mat)
    CE = apply_CS_cart(aE, n0, mat)
    aP = h1 * CE + h3 * CY @ b - h3 * apply_CS_cart(c @ Kc @ bs, n0, mat)
    nP = 2 * k * (h2 * e + Hh * np.einsum("...ij,...j->...i", b, e))
    aR = (
        h1 * apply_GS_cart(aK, n0, mat)
        - h3 * c @ CY
        + h3 * c @ CE @ bs
        + h3 * apply_GS_cart(aK @ b, n0, mat) @ b
    )
    gc = mat.mu * mat.L_c**2 * (mat.b1 + mat.b2)
    nR = gc * (h2 * f + Hh * np.einsum("...ij,...j->...i", b, f))
    outer = n0[..., :, None]
    return aP + outer * nP[..., None, :], aR + outer * nR[..., None, :]


@dataclass
class StressResultants:
    """Rotated surface stress ``P = Q_e^T N`` and couple ``R = Q_e^T M``."""

    P: ShellTensor
    R: ShellTensor

    def unrotated(self, Q):
        """Cartesian ``N = Q_e P`` and ``M = Q_e R``."""
        return Q @ self.P.cart, Q @ self.R.cart

    def blocks(self) -> dict:
        """Planar and transversal parts of both resultants."""
        return {
            "aP": self.P.planar(),
            "n0P": self.P.transversal(),
            "aR": self.R.planar(),
            "n0R": self.R.transversal(),
        }


def stress_resultants(E: ShellTensor, Kc: ShellTensor, frame: SurfaceFrame, mat, variant="harmonic") -> StressResultants:
    _check_strains(E, Kc, frame)
    P, R = stress_resultants_cart(E.cart, Kc.cart, Geometry.from_frame(frame), mat, variant)
    return StressResultants(ShellTensor.from_cartesian(P, frame, check=False), ShellTensor.from_cartesian(R, frame, check=False))
