"""Reference midsurface charts and their differential geometry.

A chart maps parameters ``(u, v)`` to points ``y0(u, v)`` of the reference
midsurface.  :func:`evaluate_frame` turns chart derivatives into a
:class:`SurfaceFrame` holding the covariant/contravariant bases, the unit
normal ``n0 = y0_u x y0_v / |.|``, both fundamental forms, the curvatures and
the tangent-plane alternator.  All quantities are batched: every array has a
leading shape equal to the broadcast shape of the evaluation points.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChart, ScenarioError, SingularShifter

IMMERSION_TOL = 1e-12
SHIFTER_TOL = 1e-12

_frame_ids = itertools.count()


class Chart:
    """Base class for midsurface charts.

    Subclasses implement :meth:`derivatives`, returning ``y, y_u, y_v, y_uu,
    y_uv, y_vv`` with shape ``(..., 3)``.
    """

    kind = "abstract"

    def __init__(self, u_range, v_range):
        self.u_range = (float(u_range[0]), float(u_range[1]))
        self.v_range = (float(v_range[0]), float(v_range[1]))
        if not (self.u_range[0] < self.u_range[1] and self.v_range[0] < self.v_range[1]):
            raise ValueError("parameter ranges must be increasing")

    def derivatives(self, u, v):
        raise NotImplementedError

    def contains(self, u, v, tol=1e-12):
        u = np.asarray(u)
        v = np.asarray(v)
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        return bool(np.all((u >= u0 - tol) & (u <= u1 + tol) & (v >= v0 - tol) & (v <= v1 + tol)))

    def area(self):
        return (self.u_range[1] - self.u_range[0]) * (self.v_range[1] - self.v_range[0])

    def to_dict(self):
        return {"kind": self.kind, "u_range": list(self.u_range), "v_range": list(self.v_range)}


class PlateChart(Chart):
    """Flat chart ``y0 = (u, v, 0)``."""

    kind = "plate"

    def __init__(self, u_range=(0.0, 1.0), v_range=(0.0, 1.0)):
        super().__init__(u_range, v_range)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        zero = np.zeros(u.shape + (3,))
        y = np.stack([u, v, np.zeros_like(u)], axis=-1)
        y_u = zero.copy()
        y_u[..., 0] = 1.0
        y_v = zero.copy()
        y_v[..., 1] = 1.0
        return y, y_u, y_v, zero, zero.copy(), zero.copy()


class CylinderChart(Chart):
    """Circular cylinder about e3: ``y0 = (R cos u, R sin u, v)``."""

    kind = "cylinder"

    def __init__(self, radius=1.0, u_range=(0.0, np.pi / 2), v_range=(0.0, 1.0)):
        super().__init__(u_range, v_range)
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        R = self.radius
        c, s = np.cos(u), np.sin(u)
        zero = np.zeros_like(u)
        y = np.stack([R * c, R * s, v], axis=-1)
        y_u = np.stack([-R * s, R * c, zero], axis=-1)
        y_v = np.stack([zero, zero, np.ones_like(u)], axis=-1)
        y_uu = np.stack([-R * c, -R * s, zero], axis=-1)
        y_uv = np.zeros(u.shape + (3,))
        return y, y_u, y_v, y_uu, y_uv, y_uv.copy()

    def to_dict(self):
        return {**super().to_dict(), "radius": self.radius}


class SphereCapChart(Chart):
    """Sphere of radius R in longitude ``u`` and colatitude ``v``.

    With this ordering the induced normal points inward, so H = 1/R and K = 1/R^2.
    The colatitude range must stay away from the poles.
    """

    kind = "sphere-cap"

    def __init__(self, radius=1.0, u_range=(-0.5, 0.5), v_range=(np.pi / 2 - 0.5, np.pi / 2 + 0.5)):
        super().__init__(u_range, v_range)
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        R = self.radius
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        zero = np.zeros_like(u)
        y = R * np.stack([sv * cu, sv * su, cv], axis=-1)
        y_u = R * np.stack([-sv * su, sv * cu, zero], axis=-1)
        y_v = R * np.stack([cv * cu, cv * su, -sv], axis=-1)
        y_uu = R * np.stack([-sv * cu, -sv * su, zero], axis=-1)
        y_uv = R * np.stack([-cv * su, cv * cu, zero], axis=-1)
        y_vv = R * np.stack([-sv * cu, -sv * su, -cv], axis=-1)
        return y, y_u, y_v, y_uu, y_uv, y_vv

    def to_dict(self):
        return {**super().to_dict(), "radius": self.radius}


class ReparametrizedChart(Chart):
    """Affine reparametrization ``y(s, t) = base(A @ (s, t) + shift)``.

    The parameter ranges of the new chart are not used for evaluation; they are
    set to the bounding box of the preimage of the base domain.
    """

    kind = "reparametrized"

    def __init__(self, base: Chart, A, shift=(0.0, 0.0)):
        self.base = base
        self.A = np.asarray(A, dtype=float)
        self.shift = np.asarray(shift, dtype=float)
        if abs(np.linalg.det(self.A)) < 1e-14:
            raise ValueError("reparametrization matrix is singular")
        Ainv = np.linalg.inv(self.A)
        corners = np.array(list(itertools.product(base.u_range, base.v_range))) - self.shift
        pre = corners @ Ainv.T
        super().__init__((pre[:, 0].min(), pre[:, 0].max()), (pre[:, 1].min(), pre[:, 1].max()))

    def to_base(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        A, c = self.A, self.shift
        return A[0, 0] * s + A[0, 1] * t + c[0], A[1, 0] * s + A[1, 1] * t + c[1]

    def derivatives(self, s, t):
        y, y_u, y_v, y_uu, y_uv, y_vv = self.base.derivatives(*self.to_base(s, t))
        A = self.A
        d1 = [y_u, y_v]
        d2 = [[y_uu, y_uv], [y_uv, y_vv]]
        first = [sum(A[i, a] * d1[i] for i in range(2)) for a in range(2)]
        second = [
            [sum(A[i, a] * A[j, b] * d2[i][j] for i in range(2) for j in range(2)) for b in range(2)]
            for a in range(2)
        ]
        return y, first[0], first[1], second[0][0], second[0][1], second[1][1]


def _fd_weights_first(n, h):
    """Dense first-derivative matrix: 4th-order centred inside, 2nd order near edges."""
    if n < 3:
        raise DegenerateChart("sampled grid needs at least 3 nodes per direction")
    D = np.zeros((n, n))
    for i in range(n):
        if 2 <= i <= n - 3:
            D[i, [i - 2, i - 1, i + 1, i + 2]] = np.array([1.0, -8.0, 8.0, -1.0]) / (12 * h)
        elif i == 0:
            D[i, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
        elif i == n - 1:
            D[i, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * h)
        else:
            D[i, [i - 1, i + 1]] = np.array([-1.0, 1.0]) / (2 * h)
    return D


class SampledGridChart(Chart):
    """Chart given by positions sampled on a uniform rectangular parameter lattice.

    Derivatives come from finite differences (4th-order centred in the interior,
    2nd order at and next to the edges); frames are only available at lattice
    nodes.
    """

    kind = "user-sampled-grid"

    def __init__(self, u_nodes, v_nodes, positions, source=None):
        u_nodes = np.asarray(u_nodes, dtype=float)
        v_nodes = np.asarray(v_nodes, dtype=float)
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (u_nodes.size, v_nodes.size, 3):
            raise ValueError("positions must have shape (n_u, n_v, 3)")
        super().__init__((u_nodes[0], u_nodes[-1]), (v_nodes[0], v_nodes[-1]))
        du = np.diff(u_nodes)
        dv = np.diff(v_nodes)
        if not (np.allclose(du, du[0], rtol=1e-9) and np.allclose(dv, dv[0], rtol=1e-9)):
            raise ValueError("sampled grid must be uniform in u and v")
        self.u_nodes, self.v_nodes, self.positions = u_nodes, v_nodes, positions
        self.source = source
        Du = _fd_weights_first(u_nodes.size, du[0])
        Dv = _fd_weights_first(v_nodes.size, dv[0])
        y = positions
        y_u = np.einsum("ij,jkc->ikc", Du, y)
        y_v = np.einsum("kj,ijc->ikc", Dv, y)
        y_uu = np.einsum("ij,jkc->ikc", Du, y_u)
        y_uv = np.einsum("kj,ijc->ikc", Dv, y_u)
        y_vv = np.einsum("kj,ijc->ikc", Dv, y_v)
        self._tables = (y, y_u, y_v, y_uu, y_uv, y_vv)

    @classmethod
    def from_csv(cls, path):
        """Read ``u,v,x,y,z`` rows (optional header) describing a full lattice."""
        rows = []
        with open(path, newline="") as fh:
            for lineno, rec in enumerate(csv.reader(fh), start=1):
                if not rec or rec[0].strip().startswith("#"):
                    continue
                try:
                    rows.append([float(x) for x in rec[:5]])
                except ValueError:
                    if lineno == 1:
                        continue
                    raise ScenarioError(f"{path}:{lineno}: expected 5 numeric columns u,v,x,y,z")
                if len(rec) < 5:
                    raise ScenarioError(f"{path}:{lineno}: expected 5 columns u,v,x,y,z")
        data = np.array(rows)
        u_nodes = np.unique(data[:, 0])
        v_nodes = np.unique(data[:, 1])
        if data.shape[0] != u_nodes.size * v_nodes.size:
            raise ScenarioError(f"{path}: rows do not form a complete rectangular lattice")
        pos = np.full((u_nodes.size, v_nodes.size, 3), np.nan)
        iu = np.searchsorted(u_nodes, data[:, 0])
        iv = np.searchsorted(v_nodes, data[:, 1])
        pos[iu, iv] = data[:, 2:5]
        if np.isnan(pos).any():
            raise ScenarioError(f"{path}: duplicate (u, v) rows")
        return cls(u_nodes, v_nodes, pos, source=str(path))

    def _node_index(self, u, v):
        iu = np.rint((u - self.u_nodes[0]) / (self.u_nodes[1] - self.u_nodes[0])).astype(int)
        iv = np.rint((v - self.v_nodes[0]) / (self.v_nodes[1] - self.v_nodes[0])).astype(int)
        ok = (
            (iu >= 0) & (iu < self.u_nodes.size) & (iv >= 0) & (iv < self.v_nodes.size)
        )
        if not np.all(ok):
            raise ValueError("point outside the sampled lattice")
        iu, iv = np.clip(iu, 0, self.u_nodes.size - 1), np.clip(iv, 0, self.v_nodes.size - 1)
        if not (np.allclose(self.u_nodes[iu], u, atol=1e-9) and np.allclose(self.v_nodes[iv], v, atol=1e-9)):
            raise ValueError("sampled-grid charts can only be evaluated at lattice nodes")
        return iu, iv

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        iu, iv = self._node_index(u, v)
        return tuple(t[iu, iv] for t in self._tables)

    def to_dict(self):
        return {"kind": self.kind, "path": self.source}


def make_chart(spec: dict) -> Chart:
    """Build a chart from its scenario description."""
    kind = spec["kind"]
    if kind == "plate":
        return PlateChart(spec.get("u_range", (0.0, 1.0)), spec.get("v_range", (0.0, 1.0)))
    if kind == "cylinder":
        return CylinderChart(spec.get("radius", 1.0), spec.get("u_range", (0.0, np.pi / 2)), spec.get("v_range", (0.0, 1.0)))
    if kind == "sphere-cap":
        kw = {k: spec[k] for k in ("u_range", "v_range") if k in spec}
        return SphereCapChart(spec.get("radius", 1.0), **kw)
    if kind == "user-sampled-grid":
        return SampledGridChart.from_csv(spec["path"])
    raise ValueError(f"unknown chart kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SurfaceFrame:
    """First/second fundamental form data at a batch of midsurface points.

    Vector-valued fields carry a trailing axis of length 3 (Cartesian
    components).  ``a_cov[..., a, :]`` is the covariant basis vector a_a and
    ``a_con[..., a, :]`` its dual.  Tensors with a ``_cart`` suffix are the
    3x3 Cartesian matrices of the corresponding surface tensors.
    """

    point: np.ndarray  # y0, (..., 3)
    a_cov: np.ndarray  # (..., 2, 3)
    a_con: np.ndarray  # (..., 2, 3)
    n0: np.ndarray  # (..., 3)
    metric: np.ndarray  # a_{ab}, (..., 2, 2)
    metric_inv: np.ndarray  # a^{ab}
    area: np.ndarray  # sqrt(det a_{ab}), (...)
    b_cov: np.ndarray  # b_{ab}
    b_mixed: np.ndarray  # b^a_b (row a, column b)
    H: np.ndarray
    K: np.ndarray
    c_cov: np.ndarray  # c_{ab} = a eps_{ab}
    bstar_mixed: np.ndarray  # (b*)^a_b
    a_cart: np.ndarray  # projector 1 - n0 (x) n0
    b_cart: np.ndarray
    c_cart: np.ndarray
    bstar_cart: np.ndarray
    uid: int = field(default_factory=lambda: next(_frame_ids))

    @property
    def shape(self):
        return self.area.shape

    @property
    def basis_cov(self):
        """(..., 3, 3) rows a_1, a_2, n0."""
        return np.concatenate([self.a_cov, self.n0[..., None, :]], axis=-2)

    @property
    def basis_con(self):
        """(..., 3, 3) rows a^1, a^2, n0."""
        return np.concatenate([self.a_con, self.n0[..., None, :]], axis=-2)

    def __getitem__(self, idx):
        """Sub-frame at index ``idx`` of the batch (gets a fresh uid)."""
        vals = {}
        for name in self.__dataclass_fields__:
            if name == "uid":
                continue
            arr = getattr(self, name)
            vals[name] = arr[idx]
        return SurfaceFrame(**vals)


_EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def frame_from_derivatives(y, y_u, y_v, y_uu, y_uv, y_vv) -> SurfaceFrame:
    """Assemble a :class:`SurfaceFrame` from chart derivatives."""
    a_cov = np.stack([y_u, y_v], axis=-2)
    cross = np.cross(y_u, y_v)
    cn = np.linalg.norm(cross, axis=-1)
    scale = np.linalg.norm(y_u, axis=-1) * np.linalg.norm(y_v, axis=-1)
    if np.any(~(cn >= IMMERSION_TOL * scale)) or np.any(scale == 0):
        raise DegenerateChart("chart is not an immersion: |y_u x y_v| below tolerance")
    n0 = cross / cn[..., None]
    metric = np.einsum("...ak,...bk->...ab", a_cov, a_cov)
    det = metric[..., 0, 0] * metric[..., 1, 1] - metric[..., 0, 1] * metric[..., 1, 0]
    area = np.sqrt(det)
    metric_inv = np.empty_like(metric)
    metric_inv[..., 0, 0] = metric[..., 1, 1] / det
    metric_inv[..., 1, 1] = metric[..., 0, 0] / det
    metric_inv[..., 0, 1] = -metric[..., 0, 1] / det
    metric_inv[..., 1, 0] = -metric[..., 1, 0] / det
    a_con = np.einsum("...ab,...bk->...ak", metric_inv, a_cov)
    second = np.stack([np.stack([y_uu, y_uv], axis=-2), np.stack([y_uv, y_vv], axis=-2)], axis=-3)
    b_cov = np.einsum("...k,...abk->...ab", n0, second)
    b_cov = 0.5 * (b_cov + np.swapaxes(b_cov, -1, -2))
    b_mixed = np.einsum("...ag,...gb->...ab", metric_inv, b_cov)
    H = 0.5 * (b_mixed[..., 0, 0] + b_mixed[..., 1, 1])
    K = b_mixed[..., 0, 0] * b_mixed[..., 1, 1] - b_mixed[..., 0, 1] * b_mixed[..., 1, 0]
    c_cov = area[..., None, None] * _EPS2
    eye2 = np.eye(2)
    bstar_mixed = -b_mixed + 2.0 * H[..., None, None] * eye2
    a_cart = np.eye(3) - n0[..., :, None] * n0[..., None, :]
    b_cart = np.einsum("...ab,...ai,...bj->...ij", b_cov, a_con, a_con)
    c_cart = np.einsum("...ab,...ai,...bj->...ij", c_cov, a_con, a_con)
    bstar_cart = -b_cart + 2.0 * H[..., None, None] * a_cart
    return SurfaceFrame(
        point=np.asarray(y, dtype=float),
        a_cov=a_cov,
        a_con=a_con,
        n0=n0,
        metric=metric,
        metric_inv=metric_inv,
        area=area,
        b_cov=b_cov,
        b_mixed=b_mixed,
        H=H,
        K=K,
        c_cov=c_cov,
        bstar_mixed=bstar_mixed,
        a_cart=a_cart,
        b_cart=b_cart,
        c_cart=c_cart,
        bstar_cart=bstar_cart,
    )


def evaluate_frame(chart: Chart, u, v) -> SurfaceFrame:
    """Evaluate the surface frame of ``chart`` at parameter point(s) ``(u, v)``.

    Raises
    ------
    ValueError
        If a point lies outside the chart's parameter domain.
    DegenerateChart
        If ``|y0_u x y0_v| < 1e-12 |y0_u| |y0_v|`` somewhere.
    """
    if not isinstance(chart, ReparametrizedChart) and not chart.contains(u, v, tol=1e-9):
        raise ValueError("evaluation point outside the parameter domain")
    return frame_from_derivatives(*chart.derivatives(u, v))


@dataclass(frozen=True)
class Shifter:
    """Shifter ``mu = a - x3 b`` at thickness coordinate ``x3``.

    ``mu`` and ``mu_inv`` are mixed components (row index up); ``*_cart`` are
    Cartesian 3x3 matrices of the planar tensors.
    """

    x3: float
    mu: np.ndarray
    mu_inv: np.ndarray
    b_det: np.ndarray
    mu_cart: np.ndarray
    mu_inv_cart: np.ndarray


def shifter(frame: SurfaceFrame, x3: float) -> Shifter:
    """Shifter tensor and its inverse at height ``x3`` above the midsurface."""
    x3 = float(x3)
    b_det = 1.0 - 2.0 * frame.H * x3 + frame.K * x3**2
    if np.any(np.abs(b_det) < SHIFTER_TOL):
        raise SingularShifter(f"det(mu) vanishes at x3={x3}")
    eye2 = np.eye(2)
    mu = eye2 - x3 * frame.b_mixed
    mu_inv = (eye2 - x3 * frame.bstar_mixed) / b_det[..., None, None]
    mu_cart = frame.a_cart - x3 * frame.b_cart
    mu_inv_cart = (frame.a_cart - x3 * frame.bstar_cart) / b_det[..., None, None]
    return Shifter(x3, mu, mu_inv, b_det, mu_cart, mu_inv_cart)
