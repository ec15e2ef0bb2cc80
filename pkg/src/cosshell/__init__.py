"""Geometrically nonlinear 6-parameter Cosserat shells.

Surface geometry on parametric charts, shell strain and bending-curvature
tensors, the thickness-integrated energy with its stress resultants, an
energy minimizer on ``(R^3 x SO(3))^N`` and checks of the reduction to the
Koiter energy.

Examples
--------
>>> from cosshell import CylinderChart, Discretization, MaterialConstants, LoadSpec, BoundaryConditions, solve
>>> disc = Discretization(CylinderChart(1.0, (0.0, 1.0), (0.0, 1.0)), 9, 9)
>>> bcs = BoundaryConditions.from_edges(disc, {"u0": "clamped", "u1": "clamped"})
>>> config, report = solve(disc, MaterialConstants(1.0, 1.0, 0.5, h=0.1), bcs, LoadSpec.normal_pressure(disc, 0.05))
>>> report.converged
True
"""

from .constitutive import (
    MaterialConstants,
    ShellModuli,
    StressResultants,
    L_n0,
    apply_C3d,
    apply_G3d,
    shell_moduli,
    stress_resultants,
    w_coss,
    w_curv,
    w_mixt,
    w_shell,
)
from .errors import (
    CosshellError,
    DegenerateChart,
    DegenerateDeformedSurface,
    FrameMismatch,
    GridTooSmall,
    KLViolated,
    NonConvergence,
    NotARotation,
    NotSkew,
    NotSymmetric,
    ScenarioError,
    SingularShifter,
)
from .geometry import (
    Chart,
    CylinderChart,
    PlateChart,
    ReparametrizedChart,
    SampledGridChart,
    SphereCapChart,
    SurfaceFrame,
    evaluate_frame,
    make_chart,
    shifter,
)
from .kinematics import (
    Discretization,
    Grid,
    KoiterStrains,
    MidsurfaceConfiguration,
    bending_curvature,
    expansion_vectors,
    koiter_strains,
    load_fields,
    save_fields,
    shell_strain,
    surface_divergence,
    surface_gradient,
)
from .koiter import (
    KoiterMaterial,
    amplitude_study,
    builtin_fixtures,
    koiter_energy_density,
    reduction_check,
    w_koiter_form,
)
from .scenario import Scenario, bundled_scenario, load_scenario
from .solver import (
    BoundaryConditions,
    IllPosedWarning,
    LoadSpec,
    ShellProblem,
    SolveOptions,
    SolveReport,
    energy_gradient,
    equilibrium_residual,
    minimize,
    solve,
    total_energy,
)
from .tensors import PlanarTensor, ShellTensor, axl, exp_so3, hat, log_so3

__version__ = "0.1.0"

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, type(errors))]
