import pathlib

import pytest

from jpmsim.device import load_device

DATA_YAML = str(
    pathlib.Path(__file__).resolve().parents[1]
    / "src" / "jpmsim" / "data" / "chip1_q1j1.yaml"
)


@pytest.fixture(scope="session")
def device():
    return load_device(DATA_YAML)
