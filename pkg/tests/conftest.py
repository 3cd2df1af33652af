import math

import pytest

from jchd.model import ModelParams

SQRT2 = math.sqrt(2.0)


def resonant(mu_offset=-0.7, zkappa=0.16, gamma_a=0.0, gamma_c=0.0, omega=1.0, beta=1.0, z=4):
    """Resonant site with mu = omega + mu_offset * beta and hopping zkappa * beta."""
    return ModelParams(omega_a=omega, omega_c=omega, beta=beta, gamma_a=gamma_a,
                       gamma_c=gamma_c, mu=omega + mu_offset * beta, z=z,
                       kappa=zkappa * beta / z)


# lossless n = 1 lobe tip, mu - omega_c, from a brute-force grid maximum of -1/S
TIP_OFFSET = -0.7836105


@pytest.fixture
def tip_params():
    return resonant(mu_offset=TIP_OFFSET, zkappa=0.2)
