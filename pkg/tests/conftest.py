from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from thermodelam.grid import GeometrySpec, build_two_block_grid
from thermodelam.material import HeatCapacityLaw, MaterialSet
from thermodelam.mixity import MixityLaw

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

NORMAL_2D = np.array([0.0, -1.0])

ACCEPTANCE_LINES: list = []


def record_acceptance(number: int, title: str, passed: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def small_grid():
    spec = GeometrySpec(2, (1.0,), (0.5, 0.5), (6,), (4, 4), ("plus.left", "minus.left"))
    return build_two_block_grid(spec)


@pytest.fixture
def material():
    return MaterialSet.isotropic(2, lame=(1.0, 1.0), viscous_ratio=0.1, length_scale=0.05,
                                 hyper_viscous_ratio=0.1, thermal_coupling=0.02,
                                 kappa_n=2.0, kappa_t=1.0,
                                 heat_capacity=HeatCapacityLaw("power", 1.0, 2.0))


@pytest.fixture
def law(material):
    return MixityLaw.from_adhesive(material.adhesive, NORMAL_2D, a_I=0.1)
