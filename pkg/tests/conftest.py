import math

import numpy as np
import pytest

import pseudocone as pc

S2 = math.sqrt(0.5)


@pytest.fixture
def quarter():
    """Planar cone between 45 and 135 degrees."""
    return pc.build_cone([[S2, S2], [-S2, S2]], [[S2, -S2], [-S2, -S2]])


@pytest.fixture
def octant():
    return pc.build_cone(np.eye(3), -np.eye(3))


@pytest.fixture
def quarter_single(quarter):
    """Quarter cone truncated at height 1 by the downward direction."""
    return pc.make_wulff(quarter, [[0.0, -1.0]], [1.0])


@pytest.fixture
def mc_fast():
    return pc.MCConfig(seed=7, n_samples=50_000)


@pytest.fixture
def mc_med():
    return pc.MCConfig(seed=7, n_samples=200_000)


def closed_form_surface(t):
    """Surface weight of the height-t truncation of the quarter cone."""
    return math.exp(-0.5 * t * t) * (2.0 * pc.phi_cdf(t) - 1.0) / math.sqrt(
        2.0 * math.pi
    )


def quarter_volume_oracle(t):
    """Gaussian volume of {x in quarter cone : x2 >= t} by 1-d quadrature."""
    from scipy.integrate import quad

    def integrand(s):
        return math.exp(-0.5 * s * s) / math.sqrt(2.0 * math.pi) * (
            2.0 * pc.phi_cdf(s) - 1.0
        )

    val, _ = quad(integrand, t, 40.0, epsabs=1e-13, epsrel=1e-12)
    return val
