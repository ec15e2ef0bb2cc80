"""Discrete midsurface fields and shell strain measures.

Fields live on a rectangular lattice of parameter nodes with ``ij`` indexing:
a vector field has shape ``(n_u, n_v, 3)`` and a rotation field
``(n_u, n_v, 3, 3)``.  Derivatives use 2nd-order central differences inside
and 2nd-order one-sided stencils on the boundary.

Strains are returned as Cartesian 3x3 stacks wrapped in
:class:`~cosshell.tensors.ShellTensor` objects on the lattice frame.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateDeformedSurface, GridTooSmall, ScenarioError
from .geometry import Chart, SurfaceFrame, evaluate_frame
from .tensors import (
    PlanarTensor,
    ShellTensor,
    axl_skew,
    check_rotation,
    matrix_to_quat,
    quat_to_matrix,
)


def diff_matrix(n: int, h: float) -> sp.csr_matrix:
    """First-derivative matrix on ``n`` uniform nodes with spacing ``h``."""
    if n < 3:
        raise GridTooSmall(f"need at least 3 nodes per direction, got {n}")
    rows, cols, vals = [], [], []
    for i in range(1, n - 1):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-0.5, 0.5]
    rows += [0, 0, 0, n - 1, n - 1, n - 1]
    cols += [0, 1, 2, n - 3, n - 2, n - 1]
    vals += [-1.5, 2.0, -0.5, 0.5, -2.0, 1.5]
    return sp.csr_matrix((np.array(vals) / h, (rows, cols)), shape=(n, n))


def one_sided_matrix(n: int, h: float, forward: bool) -> sp.csr_matrix:
    """Compact two-point difference matrix; the row without a neighbour is empty."""
    idx = np.arange(n - 1)
    rows = idx if forward else idx + 1
    data = np.concatenate([-np.ones(n - 1), np.ones(n - 1)]) / h
    return sp.csr_matrix((data, (np.concatenate([rows, rows]), np.concatenate([idx, idx + 1]))), shape=(n, n))


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


class Grid:
    """Uniform rectangular lattice over ``[u0, u1] x [v0, v1]``."""

    def __init__(self, n_u: int, n_v: int, u_range, v_range):
        if n_u < 3 or n_v < 3:
            raise GridTooSmall(f"grid {n_u}x{n_v} is too small for 3-point stencils")
        self.n_u, self.n_v = int(n_u), int(n_v)
        self.u_range = (float(u_range[0]), float(u_range[1]))
        self.v_range = (float(v_range[0]), float(v_range[1]))
        self.u = np.linspace(u_range[0], u_range[1], self.n_u)
        self.v = np.linspace(v_range[0], v_range[1], self.n_v)
        self.du = self.u[1] - self.u[0]
        self.dv = self.v[1] - self.v[0]
        self.U, self.V = np.meshgrid(self.u, self.v, indexing="ij")
        self.Du = diff_matrix(self.n_u, self.du)
        self.Dv = diff_matrix(self.n_v, self.dv)
        self.DuT = self.Du.T.tocsr()
        self.DvT = self.Dv.T.tocsr()
        self.weights = np.outer(trapezoid_weights(self.n_u, self.du), trapezoid_weights(self.n_v, self.dv))

    @property
    def shape(self):
        return (self.n_u, self.n_v)

    @property
    def size(self):
        return self.n_u * self.n_v

    @staticmethod
    def _apply0(D, f):
        f = np.asarray(f, dtype=float)
        return (D @ f.reshape(f.shape[0], -1)).reshape(f.shape)

    @staticmethod
    def _apply1(D, f):
        f = np.asarray(f, dtype=float)
        g = np.swapaxes(f, 0, 1)
        out = (D @ g.reshape(g.shape[0], -1)).reshape(g.shape)
        return np.swapaxes(out, 0, 1)

    def d_u(self, f):
        """Derivative along u of a field with leading shape (n_u, n_v)."""
        return self._apply0(self.Du, f)

    def d_v(self, f):
        return self._apply1(self.Dv, f)

    def d_u_adjoint(self, f):
        return self._apply0(self.DuT, f)

    def d_v_adjoint(self, f):
        return self._apply1(self.DvT, f)

    def corner_stencils(self):
        """Compact difference operators for the four corners a node can take in a cell.

        Returns a list of ``(Du, Dv, mask)`` where ``Du``/``Dv`` are forward or
        backward two-point differences and ``mask`` marks nodes at which both
        exist.  Each cell contributes one evaluation per corner, so every node
        appears once per adjacent cell.
        """
        out = []
        for fu in (True, False):
            for fv in (True, False):
                mu = np.ones(self.n_u, dtype=bool)
                mu[-1 if fu else 0] = False
                mv = np.ones(self.n_v, dtype=bool)
                mv[-1 if fv else 0] = False
                out.append((one_sided_matrix(self.n_u, self.du, fu), one_sided_matrix(self.n_v, self.dv, fv),
                            np.outer(mu, mv)))
        return out

    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def interior_mask(self, depth: int = 1):
        m = np.zeros(self.shape, dtype=bool)
        if self.n_u > 2 * depth and self.n_v > 2 * depth:
            m[depth:-depth, depth:-depth] = True
        return m

    def edge_mask(self, edge: str):
        m = np.zeros(self.shape, dtype=bool)
        if edge == "u0":
            m[0, :] = True
        elif edge == "u1":
            m[-1, :] = True
        elif edge == "v0":
            m[:, 0] = True
        elif edge == "v1":
            m[:, -1] = True
        else:
            raise ValueError(f"unknown edge {edge!r}")
        return m

    def to_dict(self):
        return {"n_u": self.n_u, "n_v": self.n_v}


def polar_directors(frame: SurfaceFrame) -> np.ndarray:
    """Reference directors as columns of the polar rotation of the chart gradient.

    The 3D gradient ``a_1 (x) e_1 + a_2 (x) e_2 + n0 (x) e_3`` is factored as
    ``R U``; the result is ``R`` with ``R e_3 = n0``.
    """
    g = frame.metric
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    s = np.sqrt(det)
    t = np.sqrt(g[..., 0, 0] + g[..., 1, 1] + 2 * s)
    sqrt_g = (g + s[..., None, None] * np.eye(2)) / t[..., None, None]
    sdet = sqrt_g[..., 0, 0] * sqrt_g[..., 1, 1] - sqrt_g[..., 0, 1] * sqrt_g[..., 1, 0]
    inv = np.empty_like(sqrt_g)
    inv[..., 0, 0] = sqrt_g[..., 1, 1] / sdet
    inv[..., 1, 1] = sqrt_g[..., 0, 0] / sdet
    inv[..., 0, 1] = -sqrt_g[..., 0, 1] / sdet
    inv[..., 1, 0] = -sqrt_g[..., 1, 0] / sdet
    d12 = np.einsum("...bk,...ba->...ka", frame.a_cov, inv)
    return np.concatenate([d12, frame.n0[..., :, None]], axis=-1)


class Discretization:
    """A chart sampled on a grid, with its nodal frames and reference directors."""

    def __init__(self, chart: Chart, n_u: int, n_v: int):
        self.chart = chart
        self.grid = Grid(n_u, n_v, chart.u_range, chart.v_range)
        self.frame = evaluate_frame(chart, self.grid.U, self.grid.V)
        self.D0 = polar_directors(self.frame)
        self.quad_weights = self.grid.weights * self.frame.area
        self._F0 = None

    @property
    def shape(self):
        return self.grid.shape

    def area(self) -> float:
        return float(self.quad_weights.sum())

    def reference_positions(self) -> np.ndarray:
        return self.frame.point.copy()

    @property
    def reference_gradient(self) -> np.ndarray:
        """``Grad_s y0`` by the same differences as the deformed gradient.

        It equals ``a`` up to O(h^2); subtracting it instead of ``a`` makes the
        discrete reference state exactly strain free.
        """
        if self._F0 is None:
            self._F0 = surface_gradient(self.frame.point, self)
        return self._F0


@dataclass
class MidsurfaceConfiguration:
    """Deformed midsurface ``m`` and elastic microrotation ``Q_e`` at lattice nodes.

    Rotations are held as unit quaternions ``(w, x, y, z)``; ``Q`` gives the
    matrices.
    """

    m: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if q.shape[:-1] != self.m.shape[:-1] or q.shape[-1] != 4:
            raise ValueError("quaternion field must have shape (n_u, n_v, 4) matching m")
        nrm = np.linalg.norm(q, axis=-1, keepdims=True)
        # leave already-unit quaternions bit-identical so field files round-trip
        self.q = np.where(np.abs(nrm - 1) > 1e-14, q / nrm, q)
        self._Q = None

    @classmethod
    def reference(cls, disc: Discretization) -> "MidsurfaceConfiguration":
        q = np.zeros(disc.shape + (4,))
        q[..., 0] = 1.0
        return cls(disc.reference_positions(), q)

    @classmethod
    def from_matrices(cls, m, Q) -> "MidsurfaceConfiguration":
        Q = check_rotation(Q, tol=1e-8)
        return cls(m, matrix_to_quat(Q))

    @property
    def Q(self) -> np.ndarray:
        if self._Q is None:
            self._Q = quat_to_matrix(self.q)
        return self._Q

    @property
    def shape(self):
        return self.m.shape[:-1]

    def directors(self, disc: Discretization) -> np.ndarray:
        """Columns ``d_i = Q_e d_i^0``."""
        return self.Q @ disc.D0

    def rigidly_moved(self, R, t) -> "MidsurfaceConfiguration":
        R = np.asarray(R, dtype=float)
        return MidsurfaceConfiguration.from_matrices(self.m @ R.T + np.asarray(t, dtype=float), R @ self.Q)

    def copy(self):
        return MidsurfaceConfiguration(self.m.copy(), self.q.copy())


def surface_gradient(field, disc: Discretization) -> np.ndarray:
    """``Grad_s f = f_,u (x) a^1 + f_,v (x) a^2`` at every node.

    ``field`` has leading shape ``(n_u, n_v)``; a trailing axis of length 3 is
    appended to the result.
    """
    grid = disc.grid
    f = np.asarray(field, dtype=float)
    if f.shape[:2] != grid.shape:
        raise ValueError("field shape does not match the grid")
    fu, fv = grid.d_u(f), grid.d_v(f)
    a1 = disc.frame.a_con[..., 0, :]
    a2 = disc.frame.a_con[..., 1, :]
    extra = f.ndim - 2
    idx = (slice(None), slice(None)) + (None,) * extra
    return fu[..., None] * a1[idx] + fv[..., None] * a2[idx]


def surface_divergence(T, disc: Discretization) -> np.ndarray:
    """``Div_s T = T_,u a^1 + T_,v a^2`` for a field of 3x3 tensors."""
    grid = disc.grid
    return np.einsum("...ij,...j->...i", grid.d_u(T), disc.frame.a_con[..., 0, :]) + np.einsum(
        "...ij,...j->...i", grid.d_v(T), disc.frame.a_con[..., 1, :]
    )


# ---------------------------------------------------------------------------
# pointwise kernels: they take derivatives as arrays, so analytic and
# finite-difference derivatives share the same algebra.

def deformation_gradient(frame: SurfaceFrame, m_u, m_v) -> np.ndarray:
    return m_u[..., :, None] * frame.a_con[..., 0, None, :] + m_v[..., :, None] * frame.a_con[..., 1, None, :]


def strain_from_gradient(frame: SurfaceFrame, F, Q) -> np.ndarray:
    """Cartesian ``E = Q^T F - a``."""
    return np.swapaxes(Q, -1, -2) @ F - frame.a_cart


def curvature_from_rotation_derivatives(frame: SurfaceFrame, Q, Q_u, Q_v) -> np.ndarray:
    """Cartesian ``K = axl(skew(Q^T Q_,a)) (x) a^a``."""
    Qt = np.swapaxes(Q, -1, -2)
    k1 = axl_skew(Qt @ Q_u)
    k2 = axl_skew(Qt @ Q_v)
    return k1[..., :, None] * frame.a_con[..., 0, None, :] + k2[..., :, None] * frame.a_con[..., 1, None, :]


def curvature_from_director_derivatives(frame: SurfaceFrame, Q, D, D_u, D_v, D0, D0_u, D0_v) -> np.ndarray:
    """Cartesian ``K`` from directors: ``1/2 [Q^T sum d_i x d_i,a - sum d0_i x d0_i,a] (x) a^a``.

    ``D`` etc. hold the directors as matrix columns.
    """
    Qt = np.swapaxes(Q, -1, -2)
    out = 0.0
    for alpha, (Da, D0a) in enumerate(((D_u, D0_u), (D_v, D0_v))):
        s = np.cross(D, Da, axis=-2).sum(axis=-1)
        s0 = np.cross(D0, D0a, axis=-2).sum(axis=-1)
        k = 0.5 * (np.einsum("...ij,...j->...i", Qt, s) - s0)
        out = out + k[..., :, None] * frame.a_con[..., alpha, None, :]
    return out


def unit_normal(m_u, m_v) -> np.ndarray:
    cr = np.cross(m_u, m_v)
    nrm = np.linalg.norm(cr, axis=-1)
    scale = np.linalg.norm(m_u, axis=-1) * np.linalg.norm(m_v, axis=-1)
    if np.any(~(nrm > 1e-12 * scale)):
        raise DegenerateDeformedSurface("deformed midsurface is not immersed (m_u x m_v = 0)")
    return cr / nrm[..., None]


def koiter_from_derivatives(frame: SurfaceFrame, m_u, m_v, n_u, n_v):
    """Cartesian change of metric and change of curvature (both symmetrized).

    ``eps = (F^T F - a)/2`` and ``rho = -F^T Grad_s n - b``.
    """
    F = deformation_gradient(frame, m_u, m_v)
    G = deformation_gradient(frame, n_u, n_v)
    Ft = np.swapaxes(F, -1, -2)
    eps = 0.5 * (Ft @ F - frame.a_cart)
    rho = -Ft @ G - frame.b_cart
    eps = 0.5 * (eps + np.swapaxes(eps, -1, -2))
    rho = 0.5 * (rho + np.swapaxes(rho, -1, -2))
    return eps, rho


# ---------------------------------------------------------------------------
# grid operations

def shell_strain(config: MidsurfaceConfiguration, disc: Discretization) -> ShellTensor:
    """Elastic shell strain ``E = Q_e^T Grad_s m - a`` at every node.

    ``a`` is taken as the discrete reference gradient
    (:attr:`Discretization.reference_gradient`), so ``E`` vanishes exactly in
    the reference configuration and under rigid motions.
    """
    F = surface_gradient(config.m, disc)
    E = np.swapaxes(config.Q, -1, -2) @ F - disc.reference_gradient
    return ShellTensor.from_cartesian(E, disc.frame, check=False)


def bending_curvature(config: MidsurfaceConfiguration, disc: Discretization, method: str = "axl") -> ShellTensor:
    """Elastic bending-curvature tensor at every node.

    Parameters
    ----------
    method : {"axl", "directors"}
        ``"axl"`` differentiates the rotation field, ``"directors"`` uses the
        director cross-product formula.  They agree up to discretization error.
    """
    grid = disc.grid
    Q = config.Q
    if method == "axl":
        Kc = curvature_from_rotation_derivatives(disc.frame, Q, grid.d_u(Q), grid.d_v(Q))
    elif method == "directors":
        D = config.directors(disc)
        D0 = disc.D0
        Kc = curvature_from_director_derivatives(
            disc.frame, Q, D, grid.d_u(D), grid.d_v(D), D0, grid.d_u(D0), grid.d_v(D0)
        )
    else:
        raise ValueError(f"unknown curvature method {method!r}")
    return ShellTensor.from_cartesian(Kc, disc.frame, check=False)


@dataclass
class KoiterStrains:
    eps: PlanarTensor
    rho: PlanarTensor


def koiter_strains(config: MidsurfaceConfiguration, disc: Discretization) -> KoiterStrains:
    """Change of metric and change of curvature of the deformed midsurface."""
    grid = disc.grid
    m_u, m_v = grid.d_u(config.m), grid.d_v(config.m)
    n = unit_normal(m_u, m_v)
    eps, rho = koiter_from_derivatives(disc.frame, m_u, m_v, grid.d_u(n), grid.d_v(n))
    return KoiterStrains(PlanarTensor.from_cartesian(eps, disc.frame), PlanarTensor.from_cartesian(rho, disc.frame))


def expansion_vectors(E: ShellTensor, Kc: ShellTensor, frame: SurfaceFrame, material, Q=None):
    """Through-thickness expansion vectors ``alpha`` (order x3) and ``beta`` (order x3^2).

    Parameters
    ----------
    E, Kc : ShellTensor
        Strain and bending curvature.
    Q : array_like, optional
        Microrotation (defaults to the identity).

    Returns
    -------
    alpha, beta : ndarray, shape (..., 3)
    """
    from .constitutive import _ratio_coeffs

    if E.frame.uid != frame.uid or Kc.frame.uid != frame.uid:
        from .errors import FrameMismatch

        raise FrameMismatch("strains do not live on the given frame")
    s, t = _ratio_coeffs(material)
    Q = np.broadcast_to(np.eye(3), frame.shape + (3, 3)) if Q is None else np.asarray(Q, dtype=float)
    n0 = frame.n0
    Ec, Kcc = E.cart, Kc.cart
    d3 = np.einsum("...ij,...j->...i", Q, n0)
    Y = Ec @ frame.b_cart + frame.c_cart @ Kcc
    trE = np.trace(Ec, axis1=-2, axis2=-1)
    trY = np.trace(Y, axis1=-2, axis2=-1)
    eE = np.einsum("...ji,...j->...i", Ec, n0)
    eY = np.einsum("...ji,...j->...i", Y, n0)
    alpha = (1.0 - s * trE)[..., None] * d3 - t * np.einsum("...ij,...j->...i", Q, eE)
    beta = -(s * trY)[..., None] * d3 - t * np.einsum("...ij,...j->...i", Q, eY)
    return alpha, beta


# ---------------------------------------------------------------------------
# CSV field files

FIELD_COLUMNS = ("idx", "u", "v", "mx", "my", "mz", "qw", "qx", "qy", "qz")


def save_fields(path, config: MidsurfaceConfiguration, grid: Grid) -> None:
    """Write ``idx,u,v,mx,my,mz,qw,qx,qy,qz`` rows in ``ij`` node order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELD_COLUMNS)
        for k, (i, j) in enumerate(np.ndindex(grid.shape)):
            w.writerow([k, repr(grid.u[i]), repr(grid.v[j])] + [repr(float(x)) for x in config.m[i, j]]
                       + [repr(float(x)) for x in config.q[i, j]])


def load_fields(path, grid: Grid) -> MidsurfaceConfiguration:
    """Read a field file written by :func:`save_fields` for the same grid."""
    n = grid.size
    data = np.full((n, 7), np.nan)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FIELD_COLUMNS:
            raise ScenarioError(f"{path}:1: expected header {','.join(FIELD_COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(FIELD_COLUMNS):
                raise ScenarioError(f"{path}:{lineno}: expected {len(FIELD_COLUMNS)} columns, got {len(rec)}")
            try:
                k = int(rec[0])
                vals = [float(x) for x in rec[3:]]
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: {exc}") from None
            if not 0 <= k < n:
                raise ScenarioError(f"{path}:{lineno}: node index {k} outside grid of {n} nodes")
            data[k] = vals
    if np.isnan(data).any():
        raise ScenarioError(f"{path}: missing nodes (expected {n})")
    data = data.reshape(grid.shape + (7,))
    return MidsurfaceConfiguration(data[..., :3], data[..., 3:])
