"""Total energy, its gradient, equilibrium residuals and the minimizer.

The discrete energy is the nodal trapezoidal sum of the shell energy density
minus the potential of dead loads.  Rotational variations are spatial:
``dQ = [w]x Q`` and the retraction is ``Q <- exp([w]x) Q``.  The gradient
with respect to ``w`` is therefore the discrete counterpart of the moment
balance, and the gradient with respect to ``m`` that of the force balance.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import backend
from .constitutive import Geometry, MaterialConstants, w_shell_terms
from .errors import NonConvergence
from .kinematics import (
    Discretization,
    Grid,
    MidsurfaceConfiguration,
    curvature_from_rotation_derivatives,
    surface_divergence,
    surface_gradient,
    trapezoid_weights,
)
from .tensors import axl_skew, exp_so3, hat, left_jacobian_inv, log_so3, matrix_to_quat

log = logging.getLogger(__name__)

EDGES = ("u0", "u1", "v0", "v1")
ROUNDOFF = 1e-13


class IllPosedWarning(UserWarning):
    """No Dirichlet boundary and loads that are not self-equilibrated."""


@dataclass
class BoundaryConditions:
    """Nodal boundary data.

    Attributes
    ----------
    dirichlet : ndarray of bool, shape (n_u, n_v)
        Nodes whose position and rotation are prescribed.
    m_star, Q_star : ndarray
        Prescribed positions (n_u, n_v, 3) and rotations (n_u, n_v, 3, 3).
    line_force, line_couple : ndarray, shape (n_u, n_v, 3)
        Boundary force and couple per unit length on Neumann nodes, already
        multiplied by the nodal line weight.
    labels : dict
        Edge name to ``"dirichlet"`` or ``"neumann"``.
    """

    dirichlet: np.ndarray
    m_star: np.ndarray
    Q_star: np.ndarray
    line_force: np.ndarray
    line_couple: np.ndarray
    labels: dict = field(default_factory=dict)

    @classmethod
    def free(cls, disc: Discretization) -> "BoundaryConditions":
        shape = disc.shape
        return cls(
            np.zeros(shape, dtype=bool),
            disc.reference_positions(),
            np.broadcast_to(np.eye(3), shape + (3, 3)).copy(),
            np.zeros(shape + (3,)),
            np.zeros(shape + (3,)),
            {e: "neumann" for e in EDGES},
        )

    @classmethod
    def from_edges(cls, disc: Discretization, edges: dict) -> "BoundaryConditions":
        """Build nodal data from per-edge descriptions.

        Each value is ``"clamped"``, ``"free"`` or a dict with ``type``
        ``"dirichlet"`` (keys ``rotation`` as a rotation vector, ``about`` and
        ``displacement``) or ``"neumann"`` (keys ``force`` and ``couple`` per
        unit length).  Dirichlet edges take precedence at shared corners.
        """
        bc = cls.free(disc)
        grid = disc.grid
        y0 = disc.reference_positions()
        specs = {e: _normalize_edge(edges.get(e, "free")) for e in EDGES}
        for e, s in specs.items():
            if s["type"] != "neumann":
                continue
            mask = grid.edge_mask(e)
            lw = _line_weights(disc, e)
            bc.line_force[mask] += lw[:, None] * np.asarray(s["force"], dtype=float)
            bc.line_couple[mask] += lw[:, None] * np.asarray(s["couple"], dtype=float)
        for e, s in specs.items():
            bc.labels[e] = s["type"]
            if s["type"] != "dirichlet":
                continue
            mask = grid.edge_mask(e)
            R = exp_so3(np.asarray(s["rotation"], dtype=float))
            p = np.asarray(s["about"], dtype=float)
            bc.dirichlet |= mask
            bc.m_star[mask] = (y0[mask] - p) @ R.T + p + np.asarray(s["displacement"], dtype=float)
            bc.Q_star[mask] = R
            bc.line_force[mask] = 0.0
            bc.line_couple[mask] = 0.0
        return bc

    def apply(self, config: MidsurfaceConfiguration) -> MidsurfaceConfiguration:
        """Copy of ``config`` with Dirichlet values imposed."""
        m = config.m.copy()
        q = config.q.copy()
        d = self.dirichlet
        m[d] = self.m_star[d]
        if d.any():
            q[d] = matrix_to_quat(self.Q_star[d])
        return MidsurfaceConfiguration(m, q)


def _normalize_edge(spec):
    if spec == "clamped":
        spec = {"type": "dirichlet"}
    elif spec == "free":
        spec = {"type": "neumann"}
    out = dict(spec)
    if out["type"] == "dirichlet":
        out.setdefault("rotation", [0.0, 0.0, 0.0])
        out.setdefault("about", [0.0, 0.0, 0.0])
        out.setdefault("displacement", [0.0, 0.0, 0.0])
    elif out["type"] == "neumann":
        out.setdefault("force", [0.0, 0.0, 0.0])
        out.setdefault("couple", [0.0, 0.0, 0.0])
    else:
        raise ValueError(f"unknown boundary type {out['type']!r}")
    return out


def _line_weights(disc: Discretization, edge: str) -> np.ndarray:
    """Trapezoidal length weights of the nodes along a boundary edge."""
    grid = disc.grid
    mask = grid.edge_mask(edge)
    if edge in ("u0", "u1"):
        tangent = disc.frame.a_cov[..., 1, :][mask]
        w = trapezoid_weights(grid.n_v, grid.dv)
    else:
        tangent = disc.frame.a_cov[..., 0, :][mask]
        w = trapezoid_weights(grid.n_u, grid.du)
    return w * np.linalg.norm(tangent, axis=-1)


@dataclass
class LoadSpec:
    """Body force ``f`` and body couple ``c`` per unit reference area at every node."""

    f: np.ndarray
    c: np.ndarray

    @classmethod
    def constant(cls, disc: Discretization, f=(0.0, 0.0, 0.0), c=(0.0, 0.0, 0.0)) -> "LoadSpec":
        shape = disc.shape + (3,)
        return cls(np.broadcast_to(np.asarray(f, dtype=float), shape).copy(),
                   np.broadcast_to(np.asarray(c, dtype=float), shape).copy())

    @classmethod
    def zero(cls, disc: Discretization) -> "LoadSpec":
        return cls.constant(disc)

    @classmethod
    def normal_pressure(cls, disc: Discretization, p: float) -> "LoadSpec":
        """Dead load ``p n0`` (fixed in the reference normal direction)."""
        return cls(p * disc.frame.n0.copy(), np.zeros(disc.shape + (3,)))


@dataclass
class SolveOptions:
    """Minimizer settings.

    ``tol`` is the threshold on the Euclidean norm of the projected gradient;
    when ``None`` it defaults to ``1e-8 h mu area``.
    """

    tol: float | None = None
    max_iter: int = 20000
    memory: int = 20
    threads: int = 1
    armijo: float = 1e-4
    max_backtracks: int = 60
    initial: MidsurfaceConfiguration | None = None


@dataclass
class SolveReport:
    energy: float
    iterations: int
    grad_norm_history: list
    energy_history: list
    residual_force: float
    residual_moment: float
    converged: bool
    tol: float
    message: str = ""

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


class ShellProblem:
    """Energy functional of a discretized shell with loads and boundary data."""

    def __init__(
        self,
        disc: Discretization,
        mat: MaterialConstants,
        bcs: BoundaryConditions | None = None,
        loads: LoadSpec | None = None,
        variant: str = "harmonic",
        threads: int = 1,
        backend_name: str | None = None,
    ):
        self.disc = disc
        self.mat = mat
        self.bcs = bcs if bcs is not None else BoundaryConditions.free(disc)
        self.loads = loads if loads is not None else LoadSpec.zero(disc)
        self.variant = variant
        self.threads = int(threads)
        self.backend_name = backend_name
        self.geo = Geometry(
            disc.frame.n0.reshape(-1, 3),
            disc.frame.b_cart.reshape(-1, 3, 3),
            disc.frame.c_cart.reshape(-1, 3, 3),
            disc.frame.bstar_cart.reshape(-1, 3, 3),
            disc.frame.K.reshape(-1),
            disc.frame.H.reshape(-1),
        )
        self.wq = disc.quad_weights
        self.y0 = disc.reference_positions()
        self._setup_stencils()

    # -- evaluation ---------------------------------------------------------
    def _setup_stencils(self):
        """Corner-averaged quadrature: one compact-difference evaluation per cell corner.

        Each node carries a quarter of the cell area for every adjacent cell,
        which reproduces the trapezoidal weights, while compact differences
        penalize the odd-even modes that nodal central differences miss.  The
        reference gradient uses the same stencil, so the undeformed shell is
        exactly strain free.
        """
        disc = self.disc
        grid = disc.grid
        quarter = 0.25 * grid.du * grid.dv * disc.frame.area
        y0 = disc.reference_positions()
        self.stencils = []
        for Du, Dv, mask in grid.corner_stencils():
            DuT, DvT = Du.T.tocsr(), Dv.T.tocsr()
            F0 = self._gradient(y0, Du, Dv)
            self.stencils.append((Du, Dv, DuT, DvT, np.where(mask, quarter, 0.0), F0))

    def _gradient(self, f, Du, Dv):
        frame = self.disc.frame
        fu = Grid._apply0(Du, f)
        fv = Grid._apply1(Dv, f)
        return fu[..., :, None] * frame.a_con[..., 0, None, :] + fv[..., :, None] * frame.a_con[..., 1, None, :]

    def _strains(self, m, Q, stencil):
        Du, Dv, _, _, _, F0 = stencil
        F = self._gradient(m, Du, Dv)
        E = np.swapaxes(Q, -1, -2) @ F - F0
        Q_u, Q_v = Grid._apply0(Du, Q), Grid._apply1(Dv, Q)
        Kc = curvature_from_rotation_derivatives(self.disc.frame, Q, Q_u, Q_v)
        return F, E, Kc, Q_u, Q_v

    def _kernel(self, E, Kc):
        shape = self.disc.shape
        w, P, R = backend.shell_kernel(
            E.reshape(-1, 3, 3), Kc.reshape(-1, 3, 3), self.geo, self.mat, self.variant,
            threads=self.threads, backend=self.backend_name,
        )
        return w.reshape(shape), P.reshape(shape + (3, 3)), R.reshape(shape + (3, 3))

    def load_potential(self, m, Q):
        """Dead-load potential ``-sum f.(m - y0) - sum c.log(Q)`` (zero in the reference state)."""
        theta = log_so3(Q)
        f = self.loads.f * self.wq[..., None] + self.bcs.line_force
        c = self.loads.c * self.wq[..., None] + self.bcs.line_couple
        return -float(np.sum(f * (m - self.y0))) - float(np.sum(c * theta))

    def energy_terms(self, config: MidsurfaceConfiguration) -> dict:
        """Integrated energy split by thickness order and kind, plus the load potential."""
        geo = Geometry.from_frame(self.disc.frame)
        out = {}
        for st in self.stencils:
            _, E, Kc, _, _ = self._strains(config.m, config.Q, st)
            for k, v in w_shell_terms(E, Kc, geo, self.mat, self.variant).items():
                out[k] = out.get(k, 0.0) + float(np.sum(v * st[4]))
        out["load_potential"] = self.load_potential(config.m, config.Q)
        return out

    def energy(self, config: MidsurfaceConfiguration, with_scale: bool = False):
        """Total energy; with ``with_scale`` also a magnitude bound for round-off estimates."""
        m, Q = config.m, config.Q
        elastic = np.zeros(self.disc.shape)
        for st in self.stencils:
            _, E, Kc, _, _ = self._strains(m, Q, st)
            w, _, _ = self._kernel(E, Kc)
            elastic += w * st[4]
        load = self.load_potential(m, Q)
        total = float(np.sum(elastic)) + load
        if not with_scale:
            return total
        f = self.loads.f * self.wq[..., None] + self.bcs.line_force
        scale = float(np.sum(np.abs(elastic))) + float(np.sum(np.abs(f * (m - self.y0)))) + abs(load)
        return total, scale

    def energy_and_gradient(self, config: MidsurfaceConfiguration):
        """Energy and its gradient ``(g_m, g_w)`` with respect to ``(m, w)``.

        ``g_w`` is the derivative along spatial rotation increments
        ``dQ = [w]x Q``.
        """
        frame = self.disc.frame
        m, Q = config.m, config.Q
        Qt = np.swapaxes(Q, -1, -2)
        a1 = frame.a_con[..., 0, :]
        a2 = frame.a_con[..., 1, :]
        elastic = np.zeros(self.disc.shape)
        g_m = np.zeros_like(m)
        g_w = np.zeros_like(m)
        for st in self.stencils:
            _, _, DuT, DvT, wq, _ = st
            F, E, Kc, Q_u, Q_v = self._strains(m, Q, st)
            w, P, R = self._kernel(E, Kc)
            elastic += w * wq
            WN = wq[..., None, None] * (Q @ P)
            g_m += Grid._apply0(DuT, np.einsum("...ij,...j->...i", WN, a1))
            g_m += Grid._apply1(DvT, np.einsum("...ij,...j->...i", WN, a2))
            # strain term
            g_w += 2.0 * axl_skew(F @ np.swapaxes(WN, -1, -2))
            # curvature terms
            Rw = wq[..., None, None] * R
            for a_con, D_Q, adj in ((a1, Q_u, lambda x: Grid._apply0(DuT, x)), (a2, Q_v, lambda x: Grid._apply1(DvT, x))):
                QR = Q @ hat(np.einsum("...ij,...j->...i", Rw, a_con))
                g_w -= axl_skew(QR @ np.swapaxes(D_Q, -1, -2))
                g_w += axl_skew(adj(QR) @ Qt)
        energy = float(np.sum(elastic)) + self.load_potential(m, Q)
        g_m -= self.loads.f * self.wq[..., None] + self.bcs.line_force
        c = self.loads.c * self.wq[..., None] + self.bcs.line_couple
        g_w -= np.einsum("...ji,...j->...i", left_jacobian_inv(log_so3(Q)), c)
        return energy, g_m, g_w

    def project(self, g_m, g_w):
        d = self.bcs.dirichlet
        g_m = g_m.copy()
        g_w = g_w.copy()
        g_m[d] = 0.0
        g_w[d] = 0.0
        return g_m, g_w

    def retract(self, config: MidsurfaceConfiguration, dm, dw) -> MidsurfaceConfiguration:
        Q = exp_so3(dw) @ config.Q
        return MidsurfaceConfiguration(config.m + dm, matrix_to_quat(Q))

    def residual(self, config: MidsurfaceConfiguration):
        """Pointwise force and moment balance residuals at every node.

        ``r_f = Div_s N + f`` and ``r_m = Div_s M + axl(N F^T - F N^T) + c_eff``
        where ``c_eff = J_l^{-T}(theta) c`` is the couple conjugate to the dead
        couple potential (it equals ``c`` for small rotations).
        """
        disc = self.disc
        m, Q = config.m, config.Q
        F = surface_gradient(m, disc)
        E = np.swapaxes(Q, -1, -2) @ F - disc.reference_gradient
        Kc = curvature_from_rotation_derivatives(disc.frame, Q, disc.grid.d_u(Q), disc.grid.d_v(Q))
        _, P, R = self._kernel(E, Kc)
        N = Q @ P
        Mc = Q @ R
        r_f = surface_divergence(N, disc) + self.loads.f
        c_eff = np.einsum("...ji,...j->...i", left_jacobian_inv(log_so3(Q)), self.loads.c)
        r_m = surface_divergence(Mc, disc) + 2.0 * axl_skew(N @ np.swapaxes(F, -1, -2)) + c_eff
        return r_f, r_m

    def interior_residual(self, config: MidsurfaceConfiguration, margin: float = 0.25):
        """Max norms of the residuals over a fixed interior patch of the parameter domain.

        The patch drops a fraction ``margin`` of each parameter range at both
        ends, so it is the same physical region on every grid.  Boundary
        layers and the one-sided boundary stencils stay outside it.
        """
        r_f, r_m = self.residual(config)
        g = self.disc.grid
        (u0, u1), (v0, v1) = g.u_range, g.v_range
        tol = 1e-12 * max(u1 - u0, v1 - v0)
        mu = (g.U >= u0 + margin * (u1 - u0) - tol) & (g.U <= u1 - margin * (u1 - u0) + tol)
        mv = (g.V >= v0 + margin * (v1 - v0) - tol) & (g.V <= v1 - margin * (v1 - v0) + tol)
        mask = mu & mv & g.interior_mask(1)
        if not mask.any():
            return 0.0, 0.0
        return (float(np.linalg.norm(r_f[mask], axis=-1).max()), float(np.linalg.norm(r_m[mask], axis=-1).max()))

    def default_tol(self) -> float:
        return 1e-8 * self.mat.h * self.mat.mu * self.disc.area()

    def check_well_posed(self):
        """Warn when no node is clamped and the loads have a net force."""
        if self.bcs.dirichlet.any():
            return True
        net = np.sum(self.loads.f * self.wq[..., None], axis=(0, 1)) + np.sum(self.bcs.line_force, axis=(0, 1))
        scale = np.sum(np.abs(self.loads.f) * self.wq[..., None]) + np.sum(np.abs(self.bcs.line_force)) + 1e-300
        if np.linalg.norm(net) > 1e-10 * scale:
            warnings.warn("no Dirichlet boundary and the loads have a nonzero net force", IllPosedWarning)
            return False
        return True


def _two_loop(g, S, Y, rho):
    q = g.copy()
    alphas = []
    for s, y, r in zip(reversed(S), reversed(Y), reversed(rho)):
        a = r * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if S:
        gamma = np.dot(S[-1], Y[-1]) / np.dot(Y[-1], Y[-1])
        q *= gamma
    for (s, y, r), a in zip(zip(S, Y, rho), reversed(alphas)):
        b = r * np.dot(y, q)
        q += (a - b) * s
    return q


def minimize(problem: ShellProblem, options: SolveOptions | None = None):
    """Riemannian L-BFGS with Armijo backtracking on (R^3 x SO(3))^N.

    Returns ``(config, report)``; raises :class:`NonConvergence` carrying both
    when the tolerance is not met.
    """
    opts = options or SolveOptions()
    tol = opts.tol if opts.tol is not None else problem.default_tol()
    start = opts.initial if opts.initial is not None else MidsurfaceConfiguration.reference(problem.disc)
    x = problem.bcs.apply(start)
    n = x.m.size

    def flat_grad(cfg):
        e, gm, gw = problem.energy_and_gradient(cfg)
        gm, gw = problem.project(gm, gw)
        return e, np.concatenate([gm.ravel(), gw.ravel()])

    def step(cfg, d):
        return problem.retract(cfg, d[:n].reshape(cfg.m.shape), d[n:].reshape(cfg.m.shape))

    energy, g = flat_grad(x)
    gnorm = float(np.linalg.norm(g))
    e_hist, g_hist = [energy], [gnorm]
    S, Y, rho = [], [], []
    it = 0
    converged = gnorm <= tol
    message = "converged" if converged else ""
    while not converged and it < opts.max_iter:
        it += 1
        d = -_two_loop(g, S, Y, rho)
        slope = float(np.dot(g, d))
        if not slope < 0:
            S, Y, rho = [], [], []
            d = -g
            slope = -gnorm**2
        t = 1.0 if S else min(1.0, 1e-2 / max(gnorm, 1e-300))
        g_new = None
        for _ in range(opts.max_backtracks):
            trial = step(x, t * d)
            e_new, scale = problem.energy(trial, with_scale=True)
            if e_new <= energy + opts.armijo * t * slope:
                break
            if abs(e_new - energy) <= ROUNDOFF * scale:
                # energy change is below round-off: fall back to the slope along d
                e_new, g_new = flat_grad(trial)
                if abs(np.dot(g_new, d)) <= 0.9 * abs(slope):
                    break
                g_new = None
            t *= 0.5
        else:
            message = "line search failed"
            break
        if g_new is None:
            e_new, g_new = flat_grad(trial)
        s = t * d
        yv = g_new - g
        sy = float(np.dot(s, yv))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            S.append(s)
            Y.append(yv)
            rho.append(1.0 / sy)
            if len(S) > opts.memory:
                S.pop(0)
                Y.pop(0)
                rho.pop(0)
        x, g, energy = trial, g_new, e_new
        gnorm = float(np.linalg.norm(g))
        e_hist.append(energy)
        g_hist.append(gnorm)
        if gnorm <= tol:
            converged = True
            message = "converged"
    if not converged and not message:
        message = "maximum iterations reached"
    rf, rm = problem.interior_residual(x)
    report = SolveReport(energy, it, g_hist, e_hist, rf, rm, converged, tol, message)
    log.info("solve finished: %s after %d iterations (|g| = %.3e)", message, it, gnorm)
    if not converged:
        raise NonConvergence(f"solver did not converge: {message} (|g| = {gnorm:.3e}, tol = {tol:.3e})", x, report)
    return x, report


# ---------------------------------------------------------------------------
# functional interface

def total_energy(config, disc, mat, loads=None, variant="harmonic", bcs=None) -> float:
    return ShellProblem(disc, mat, bcs, loads, variant).energy(config)


def energy_gradient(config, disc, mat, loads=None, variant="harmonic", bcs=None):
    """Per-node gradient ``(dE/dm, dE/dw)`` with ``w`` the spatial rotation increment."""
    _, g_m, g_w = ShellProblem(disc, mat, bcs, loads, variant).energy_and_gradient(config)
    return g_m, g_w


def equilibrium_residual(config, disc, mat, loads=None, variant="harmonic"):
    return ShellProblem(disc, mat, None, loads, variant).residual(config)


def solve(disc, mat, bcs=None, loads=None, variant="harmonic", options: SolveOptions | None = None):
    """Minimize the total energy; see :func:`minimize`."""
    opts = options or SolveOptions()
    problem = ShellProblem(disc, mat, bcs, loads, variant, threads=opts.threads)
    problem.check_well_posed()
    return minimize(problem, opts)
