import numpy as np
import pytest

from dbsampling.schrodinger import Potential
from dbsampling.spectrum import compute_spectrum

B_EXTENT = 1.5 * np.pi


@pytest.fixture(scope="session")
def cosine_pot():
    return Potential.cosine(2.0, 2.0, B_EXTENT)


@pytest.fixture(scope="session")
def pwl_pot():
    xs = [0.0, 1.0, 2.2, np.pi, B_EXTENT]
    vs = [0.5, -1.0, 1.5, 0.25, -0.75]
    return Potential.piecewise_linear(xs, vs)


@pytest.fixture(scope="session")
def spec400_cosine(cosine_pot):
    """spec(H_pi(pi/2)) for the cosine potential, 401 eigenvalues (shared by
    the oversampling, undersampling and acceptance suites)."""
    return compute_spectrum(cosine_pot, np.pi, np.pi / 2, 400)


@pytest.fixture(scope="session")
def spec60_cosine(spec400_cosine):
    return spec400_cosine.truncated(60)


@pytest.fixture(scope="session")
def spec60_pwl(pwl_pot):
    return compute_spectrum(pwl_pot, np.pi, np.pi / 2, 60)
