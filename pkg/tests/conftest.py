import numpy as np
import pytest

from src.energy_chain import AccessPolicy
from src.link_model import SystemParams


@pytest.fixture
def common_params():
    """Common simulation parameters: E_max = 4, lambda_e = 1, lambda_p = 0.4, P_p = 10 mW."""
    return SystemParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_params(rng, max_capacity=6, **fixed):
    values = dict(
        primary_arrival_rate=float(rng.uniform(0.0, 0.75)),
        energy_arrival_rate=float(rng.uniform(0.05, 2.0)),
        energy_capacity=int(rng.integers(0, max_capacity + 1)),
        energy_per_packet_j=float(rng.choice([5e-4, 1e-3, 2e-3])),
        eq7_literal=bool(rng.integers(0, 2)),
    )
    values.update(fixed)
    return SystemParams(**values)


def random_policy(rng, energy_capacity):
    return AccessPolicy.random(energy_capacity, rng)
