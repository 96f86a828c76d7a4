import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from roscalab.core import RoscaInstance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def monotone_values(rng: np.random.Generator, n: int, high: float = 10.0, decimals=None) -> np.ndarray:
    v = np.sort(rng.uniform(0, high, (n, n)), axis=1)[:, ::-1]
    return np.round(v, decimals) if decimals is not None else v


def random_instance(rng, n, high=10.0, decimals=None) -> RoscaInstance:
    return RoscaInstance(monotone_values(rng, n, high, decimals))


@pytest.fixture
def example1() -> RoscaInstance:
    return RoscaInstance(np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0]]))
