import pytest

from plantguard.data.profiles import synthetic_profile
from plantguard.data.synthetic import PlantConfig, generate_synthetic_plant
from plantguard.evaluation.experiment import fit_system


@pytest.fixture(scope="session")
def tiny_plant_splits():
    """Short benign run of the two-tank plant, for structural tests."""
    return generate_synthetic_plant(PlantConfig(seed=5), 3000, 1200)


@pytest.fixture(scope="session")
def tiny_system(tiny_plant_splits):
    """A lightly trained system; consistent but not accurate."""
    train, validation, _ = tiny_plant_splits
    system, info = fit_system(
        train, validation, synthetic_profile(), seed=1, wdnn_epochs=8, ttnn_epochs=40
    )
    system.fit_info = info
    return system
