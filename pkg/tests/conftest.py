import numpy as np
import pytest
from hypothesis import settings

from cosshell.constitutive import MaterialConstants
from cosshell.geometry import CylinderChart, PlateChart, SphereCapChart, evaluate_frame

settings.register_profile("cosshell", max_examples=40, deadline=None)
settings.load_profile("cosshell")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mat():
    return MaterialConstants(mu=1.0, lam=0.7, mu_c=0.4, L_c=0.3, b1=1.2, b2=0.8, b3=1.5, h=0.05)


@pytest.fixture
def unit():
    """mu = lam = L_c = b_i = h = 1."""
    return MaterialConstants(mu=1.0, lam=1.0, mu_c=0.5, L_c=1.0, b1=1.0, b2=1.0, b3=1.0, h=1.0)


def flat_frame(n=1):
    return evaluate_frame(PlateChart(), np.full(n, 0.5), np.full(n, 0.5))


def random_chart_frames(rng, n=20):
    out = []
    for chart in (PlateChart(), CylinderChart(1.3), SphereCapChart(0.9)):
        out.append(evaluate_frame(chart, rng.uniform(*chart.u_range, n), rng.uniform(*chart.v_range, n)))
    return out
