import importlib.resources as ir
from pathlib import Path

import pytest

from crsim.device import build_system, load_device
from crsim.pulses import load_pulse_records


def fixture_path(name: str) -> Path:
    return Path(str(ir.files("crsim.fixtures") / name))


@pytest.fixture(scope="session")
def dev3():
    return load_device(fixture_path("three_transmon.json"))


@pytest.fixture(scope="session")
def dev2():
    return load_device(fixture_path("two_transmon.json"))


@pytest.fixture(scope="session")
def ops3(dev3):
    return build_system(dev3)


@pytest.fixture(scope="session")
def ops2(dev2):
    return build_system(dev2)


@pytest.fixture(scope="session")
def designs3():
    return {p.label: p for p in load_pulse_records(fixture_path("asym_cnot_3t.json"))}


@pytest.fixture(scope="session")
def designs2():
    return {p.label: p for p in load_pulse_records(fixture_path("asym_cnot_2t.json"))}
