import pytest

from ssidepth.model.settings_model import ToolSettings
from ssidepth.toy.data import build_dataset


@pytest.fixture(scope="module")
def tiny_settings():
    return ToolSettings(seed=5, pair_count=100, ord_pairs=200, num_scales=2, epochs=2,
                        receptive_field=32, max_factor=1.0)


@pytest.fixture(scope="module")
def ssi_samples(tiny_settings):
    return build_dataset(2, size=16, seed=5, settings=tiny_settings)


@pytest.fixture(scope="module")
def si_samples(tiny_settings):
    return build_dataset(2, size=16, seed=5, settings=tiny_settings, with_ssi=True)
