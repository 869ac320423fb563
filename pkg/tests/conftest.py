import pytest

from fpp_local.core.models import ExperimentConfig
from fpp_local.core.rng import RngStream
from fpp_local.stochastic.laws import DegreeModel, WeightModel


@pytest.fixture
def rng() -> RngStream:
    return RngStream(20240601, (99,))


@pytest.fixture
def two_point_degree() -> DegreeModel:
    """D uniform on {1, 3}: nu = 1.5, q* = 1/3, zeta = 22/27."""
    return DegreeModel.from_atoms({1: 0.5, 3: 0.5})


@pytest.fixture
def exp_weight() -> WeightModel:
    return WeightModel.exponential(1.0)


@pytest.fixture
def small_config(tmp_path) -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {
            "degree": {"kind": "pmf", "atoms": {"1": 0.5, "3": 0.5}},
            "weight": {"kind": "exponential", "rate": 1.0},
            "n_grid": [300],
            "R": 1,
            "samples": 60,
            "pairsPerGraph": 10,
            "horizon": 5,
            "bootstrap": 30,
            "seed": 7,
            "out": str(tmp_path / "out"),
        }
    )
