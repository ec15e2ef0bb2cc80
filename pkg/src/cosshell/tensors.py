"""Surface tensor algebra and SO(3) helpers.

Mixed shell tensors ``X = X_{i a} a^i (x) a^a`` (with ``a^3 = n0``) and planar
tensors ``T = T_{ab} a^a (x) a^b`` are stored by their covariant components on
a :class:`~cosshell.geometry.SurfaceFrame`.  Their Cartesian 3x3 embedding is
available as ``.cart`` and is what the energy kernels consume.

The array-level helpers at the bottom of the module (``hat``, ``axl``,
``exp_so3``, ...) work on stacks of 3-vectors or 3x3 matrices.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation as _Rot

from .errors import FrameMismatch, NotARotation, NotSkew
from .geometry import SurfaceFrame

SKEW_TOL = 1e-10
ROTATION_TOL = 1e-10


def _check_same_frame(*tensors):
    uid = tensors[0].frame.uid
    for t in tensors[1:]:
        if t.frame.uid != uid:
            raise FrameMismatch("tensors live on different surface frames")


class ShellTensor:
    """Mixed tensor ``X_{i a} a^i (x) a^a`` on a surface frame.

    Parameters
    ----------
    components : array_like, shape (..., 3, 2)
        ``X_{i a}``; row 2 holds the transversal components ``X_{3 a}``.
    frame : SurfaceFrame
        Frame the components refer to.  Leading shapes must match.
    """

    __slots__ = ("components", "frame", "_cart")

    def __init__(self, components, frame: SurfaceFrame):
        comp = np.asarray(components, dtype=float)
        if comp.shape[-2:] != (3, 2):
            raise ValueError("shell tensor components must have trailing shape (3, 2)")
        if comp.shape[:-2] != frame.shape:
            raise FrameMismatch(
                f"component batch shape {comp.shape[:-2]} does not match frame shape {frame.shape}"
            )
        self.components = comp
        self.frame = frame
        self._cart = None

    @classmethod
    def from_cartesian(cls, M, frame: SurfaceFrame, check=True):
        """Build from a Cartesian matrix satisfying ``M n0 = 0``."""
        M = np.asarray(M, dtype=float)
        if check:
            resid = np.linalg.norm(np.einsum("...ij,...j->...i", M, frame.n0), axis=-1)
            scale = np.linalg.norm(M, axis=(-2, -1)) + 1.0
            if np.any(resid > 1e-9 * scale):
                raise FrameMismatch("matrix has a component along n0 in its second slot")
        comp = np.einsum("...ik,...kl,...al->...ia", frame.basis_cov, M, frame.a_cov)
        out = cls(comp, frame)
        return out

    @classmethod
    def zeros(cls, frame: SurfaceFrame):
        return cls(np.zeros(frame.shape + (3, 2)), frame)

    @property
    def cart(self) -> np.ndarray:
        """Cartesian 3x3 matrix ``sum X_{i a} a^i (x) a^a``."""
        if self._cart is None:
            self._cart = np.einsum(
                "...ia,...ik,...al->...kl", self.components, self.frame.basis_con, self.frame.a_con
            )
        return self._cart

    def planar(self) -> "PlanarTensor":
        return PlanarTensor(self.components[..., :2, :], self.frame)

    def transversal(self) -> np.ndarray:
        """Tangent vector ``n0 X = X_{3 a} a^a`` (Cartesian)."""
        return np.einsum("...a,...ak->...k", self.components[..., 2, :], self.frame.a_con)

    def __add__(self, other):
        _check_same_frame(self, other)
        return ShellTensor(self.components + other.components, self.frame)

    def __sub__(self, other):
        _check_same_frame(self, other)
        return ShellTensor(self.components - other.components, self.frame)

    def __mul__(self, s):
        return ShellTensor(self.components * np.asarray(s)[..., None, None], self.frame)

    __rmul__ = __mul__

    def __neg__(self):
        return ShellTensor(-self.components, self.frame)

    def __repr__(self):
        return f"ShellTensor(shape={self.components.shape[:-2]}, frame={self.frame.uid})"


class PlanarTensor:
    """Planar tensor ``T_{ab} a^a (x) a^b`` on a surface frame."""

    __slots__ = ("components", "frame", "_cart")

    def __init__(self, components, frame: SurfaceFrame):
        comp = np.asarray(components, dtype=float)
        if comp.shape[-2:] != (2, 2):
            raise ValueError("planar tensor components must have trailing shape (2, 2)")
        if comp.shape[:-2] != frame.shape:
            raise FrameMismatch("component batch shape does not match frame shape")
        self.components = comp
        self.frame = frame
        self._cart = None

    @classmethod
    def identity(cls, frame: SurfaceFrame):
        """The first fundamental form ``a`` (covariant components a_{ab})."""
        return cls(frame.metric.copy(), frame)

    @classmethod
    def from_cartesian(cls, M, frame: SurfaceFrame):
        comp = np.einsum("...ak,...kl,...bl->...ab", frame.a_cov, np.asarray(M, dtype=float), frame.a_cov)
        return cls(comp, frame)

    @property
    def cart(self) -> np.ndarray:
        if self._cart is None:
            self._cart = np.einsum(
                "...ab,...ak,...bl->...kl", self.components, self.frame.a_con, self.frame.a_con
            )
        return self._cart

    def as_shell(self) -> ShellTensor:
        comp = np.zeros(self.components.shape[:-2] + (3, 2))
        comp[..., :2, :] = self.components
        return ShellTensor(comp, self.frame)

    def __add__(self, other):
        _check_same_frame(self, other)
        return PlanarTensor(self.components + other.components, self.frame)

    def __sub__(self, other):
        _check_same_frame(self, other)
        return PlanarTensor(self.components - other.components, self.frame)

    def __mul__(self, s):
        return PlanarTensor(self.components * np.asarray(s)[..., None, None], self.frame)

    __rmul__ = __mul__

    def __neg__(self):
        return PlanarTensor(-self.components, self.frame)

    def __repr__(self):
        return f"PlanarTensor(shape={self.components.shape[:-2]}, frame={self.frame.uid})"


def decompose(X: ShellTensor):
    """Split ``X`` into its planar part ``aX`` and transversal part ``n0 X``.

    Returns
    -------
    planar : PlanarTensor
    transversal : ndarray, shape (..., 3)
        Cartesian components of the tangent vector ``X_{3 a} a^a``.
    """
    if X.components.shape[:-2] != X.frame.shape:
        raise FrameMismatch("shell tensor components do not match their frame")
    return X.planar(), X.transversal()


def recompose(planar: PlanarTensor, transversal) -> ShellTensor:
    """Inverse of :func:`decompose`: ``aX + n0 (x) n0X``."""
    frame = planar.frame
    comp = np.empty(planar.components.shape[:-2] + (3, 2))
    comp[..., :2, :] = planar.components
    comp[..., 2, :] = np.einsum("...k,...ak->...a", np.asarray(transversal, dtype=float), frame.a_cov)
    return ShellTensor(comp, frame)


def transpose(T: PlanarTensor) -> PlanarTensor:
    return PlanarTensor(np.swapaxes(T.components, -1, -2), T.frame)


def sym(T: PlanarTensor) -> PlanarTensor:
    return PlanarTensor(0.5 * (T.components + np.swapaxes(T.components, -1, -2)), T.frame)


def skew(T: PlanarTensor) -> PlanarTensor:
    return PlanarTensor(0.5 * (T.components - np.swapaxes(T.components, -1, -2)), T.frame)


def trace(T) -> np.ndarray:
    """``tr T = a^{ab} T_{ab}``; for a shell tensor this is the trace of its planar part."""
    if isinstance(T, ShellTensor):
        T = T.planar()
    return np.einsum("...ab,...ab->...", T.frame.metric_inv, T.components)


def dev_s(T: PlanarTensor) -> PlanarTensor:
    """Surface deviator ``T - (tr T / 2) a``."""
    tr = trace(T)
    return PlanarTensor(T.components - 0.5 * tr[..., None, None] * T.frame.metric, T.frame)


def inner(A, B) -> np.ndarray:
    """Scalar product ``A : B`` evaluated from covariant components.

    Indices are raised with ``a^{ab}`` (and ``n0 . n0 = 1`` for the third row).
    """
    _check_same_frame(A, B)
    g = A.frame.metric_inv
    if isinstance(A, PlanarTensor) and isinstance(B, PlanarTensor):
        return np.einsum("...ab,...cd,...ac,...bd->...", A.components, B.components, g, g)
    if isinstance(A, PlanarTensor):
        A = A.as_shell()
    if isinstance(B, PlanarTensor):
        B = B.as_shell()
    gi = np.zeros(g.shape[:-2] + (3, 3))
    gi[..., :2, :2] = g
    gi[..., 2, 2] = 1.0
    return np.einsum("...ia,...jb,...ij,...ab->...", A.components, B.components, gi, g)


def inner_cartesian(A, B) -> np.ndarray:
    """Scalar product through the full 3x3 embedding (independent of :func:`inner`)."""
    _check_same_frame(A, B)
    return np.einsum("...ij,...ij->...", A.cart, B.cart)


def norm2(A) -> np.ndarray:
    return inner(A, A)


def alternator_apply(frame: SurfaceFrame, X):
    """Left action of the alternator ``c = a eps_{ab} a^a (x) a^b`` on ``X``.

    ``c`` rotates tangent vectors by -pi/2 about ``n0``, so ``c(cX) = -aX``.
    Works on shell and planar tensors; the result has the same type.
    """
    if X.frame.uid != frame.uid:
        raise FrameMismatch("tensor does not live on the given frame")
    # (cX)_{b a} = c_{b g} a^{g d} X_{d a}
    cg = np.einsum("...bg,...gd->...bd", frame.c_cov, frame.metric_inv)
    if isinstance(X, PlanarTensor):
        return PlanarTensor(np.einsum("...bd,...da->...ba", cg, X.components), frame)
    comp = np.zeros_like(X.components)
    comp[..., :2, :] = np.einsum("...bd,...da->...ba", cg, X.components[..., :2, :])
    return ShellTensor(comp, frame)


# ---------------------------------------------------------------------------
# array-level SO(3) helpers

def hat(w) -> np.ndarray:
    """Skew matrix ``[w]x`` with ``[w]x v = w x v``."""
    w = np.asarray(w, dtype=float)
    W = np.zeros(w.shape[:-1] + (3, 3))
    W[..., 0, 1] = -w[..., 2]
    W[..., 0, 2] = w[..., 1]
    W[..., 1, 0] = w[..., 2]
    W[..., 1, 2] = -w[..., 0]
    W[..., 2, 0] = -w[..., 1]
    W[..., 2, 1] = w[..., 0]
    return W


def axl(W, check=True) -> np.ndarray:
    """Axial vector of a skew-symmetric 3x3 matrix.

    Raises
    ------
    NotSkew
        If ``|W + W^T| > 1e-10 |W|`` and ``check`` is true.
    """
    W = np.asarray(W, dtype=float)
    if check:
        sym_part = np.linalg.norm(W + np.swapaxes(W, -1, -2), axis=(-2, -1))
        if np.any(sym_part > SKEW_TOL * np.linalg.norm(W, axis=(-2, -1))):
            raise NotSkew("matrix is not skew-symmetric")
    return np.stack([W[..., 2, 1], W[..., 0, 2], W[..., 1, 0]], axis=-1)


def axl_skew(A) -> np.ndarray:
    """``axl(skew A)`` for an arbitrary 3x3 matrix."""
    A = np.asarray(A, dtype=float)
    return 0.5 * np.stack(
        [A[..., 2, 1] - A[..., 1, 2], A[..., 0, 2] - A[..., 2, 0], A[..., 1, 0] - A[..., 0, 1]], axis=-1
    )


def check_rotation(R, tol=ROTATION_TOL) -> np.ndarray:
    """Return ``R`` as an array after checking ``R^T R = 1`` and ``det R > 0``."""
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise NotARotation("rotation must be 3x3")
    err = np.linalg.norm(np.swapaxes(R, -1, -2) @ R - np.eye(3), axis=(-2, -1))
    if np.any(err > tol) or np.any(np.linalg.det(R) <= 0):
        raise NotARotation("matrix is not in SO(3)")
    return R


def _flat(a, tail):
    a = np.asarray(a, dtype=float)
    return a.reshape((-1,) + tail), a.shape[: a.ndim - len(tail)]


def exp_so3(w) -> np.ndarray:
    """Rotation matrix ``exp([w]x)``."""
    flat, lead = _flat(w, (3,))
    return _Rot.from_rotvec(flat).as_matrix().reshape(lead + (3, 3))


def log_so3(R) -> np.ndarray:
    """Rotation vector of ``R`` (angle in [0, pi])."""
    flat, lead = _flat(R, (3, 3))
    return _Rot.from_matrix(flat).as_rotvec().reshape(lead + (3,))


def quat_to_matrix(q) -> np.ndarray:
    """Unit quaternion ``(w, x, y, z)`` to rotation matrix (normalizes first)."""
    flat, lead = _flat(q, (4,))
    return _Rot.from_quat(flat, scalar_first=True).as_matrix().reshape(lead + (3, 3))


def matrix_to_quat(R) -> np.ndarray:
    """Rotation matrix to unit quaternion ``(w, x, y, z)`` with ``w >= 0``."""
    flat, lead = _flat(R, (3, 3))
    q = _Rot.from_matrix(flat).as_quat(canonical=True, scalar_first=True)
    return q.reshape(lead + (4,))


def left_jacobian_inv(theta) -> np.ndarray:
    """Inverse left Jacobian of SO(3) at rotation vector ``theta``.

    It maps a spatial increment ``w`` (``exp(w) exp(theta) = exp(theta + dtheta)``
    to first order) to ``dtheta = J_l^{-1}(theta) w``.
    """
    theta = np.asarray(theta, dtype=float)
    t = np.linalg.norm(theta, axis=-1)
    T = hat(theta)
    T2 = T @ T
    small = t < 1e-4
    ts = np.where(small, 1.0, t)
    coef = np.where(small, 1.0 / 12.0 + t**2 / 720.0, 1.0 / ts**2 - (1.0 + np.cos(ts)) / (2.0 * ts * np.sin(ts)))
    return np.eye(3) - 0.5 * T + coef[..., None, None] * T2
