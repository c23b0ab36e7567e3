import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vqcsearch.circuits import DeviceModel, GeneratorConfig, generate_candidates, line_device


@pytest.fixture
def device3() -> DeviceModel:
    return line_device(3, p1=0.004, p2=0.02, readout_flip=0.015)


@pytest.fixture
def device4() -> DeviceModel:
    return line_device(4, p1=0.004, p2=0.02, readout_flip=0.015)


def random_genomes(device, count, gate_budget=12, n_features=4, seed=0,
                   fractions=(0.45, 0.35, 0.2)):
    """Small random genomes for property tests."""
    config = GeneratorConfig(
        n_candidates=count,
        gate_budget=gate_budget,
        embed_fraction=fractions[0],
        trainable_fraction=fractions[1],
        entangle_fraction=fractions[2],
        n_features=n_features,
        seed=seed,
    )
    return generate_candidates(device, config)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
