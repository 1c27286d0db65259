import numpy as np
import pytest

from risloc import SceneConfig, UpaConfig, Position3D, Box3D
from risloc.config import GridSpec
from risloc.dataset import build_dataset


def small_scene(**overrides) -> SceneConfig:
    """4x4 arrays and a short pilot: fast enough for unit tests."""
    defaults = dict(
        wavelength=1.0,
        ap=UpaConfig(4, 4, 0.2, Position3D(-10.0, -5.0, 2.5), axis_a="X", axis_b="Z"),
        ris=UpaConfig(4, 4, 0.2, Position3D(-5.10, -1.43, 2.0), axis_a="Y", axis_b="Z"),
        n_paths_mu_ris=2,
        n_paths_ris_ap=3,
        scatter_bounds=Box3D(Position3D(-15.0, -0.5, 0.0), Position3D(-5.0, 6.0, 3.0)),
        tx_power_dbm=10.0,
        noise_power_dbm=-34.0,
        pilot_length=4,
        rng_seed=0,
    )
    defaults.update(overrides)
    return SceneConfig(**defaults)


def small_grid(**overrides) -> GridSpec:
    defaults = dict(length=0.8, width=0.6, spacing=0.2, heights=(1.4, 1.6),
                    origin=Position3D(-10.0, 2.0, 0.0))
    defaults.update(overrides)
    return GridSpec(**defaults)


@pytest.fixture(scope="session")
def small_dataset():
    """(train, test, manifest) on a 5x4x2 = 40 position grid."""
    return build_dataset(small_scene(), small_grid(), 0.8, seed=3)
