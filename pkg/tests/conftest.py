import sys

import numpy as np
import pytest

from hemicontact import nonsmooth as ns
from hemicontact.coupling import fixed_point_solve
from hemicontact.materials import (
    LinearConductivity,
    LinearHeatSource,
    LinearIsotropicLaw,
    LinearTangentialHeating,
    LinearThermalExpansion,
    MaterialModel,
    MemoryKernel,
)
from hemicontact.mesh import rectangle_mesh
from hemicontact.scenario import Scenario, parse_scenario, shipped_scenario
from hemicontact.solvers import TimeGrid


def linear_model(visc=(1.0, 0.5), elast=(1.0, 0.5), memory=(), expansion=0.0, k=1.0, source=0.0, heating=0.0):
    return MaterialModel(
        viscosity=LinearIsotropicLaw(*visc),
        elasticity=LinearIsotropicLaw(*elast),
        memory=MemoryKernel(tuple(memory)),
        thermal_expansion=LinearThermalExpansion(expansion),
        conductivity=LinearConductivity(k),
        heat_source=LinearHeatSource(source),
        tangential_heating=LinearTangentialHeating(heating),
    )


def small_scenario(n=4, T=0.5, steps=5, model=None, **kw):
    """Unit square, left clamped, bottom in contact, top/right loaded."""
    mesh = kw.pop("mesh", None) or rectangle_mesh(n, n)
    return Scenario(mesh=mesh, model=model or linear_model(), grid=TimeGrid(T, steps), **kw)


@pytest.fixture(scope="session")
def benchmark():
    return parse_scenario(shipped_scenario("benchmark.scn"))


@pytest.fixture(scope="session")
def benchmark_result(benchmark):
    return fixed_point_solve(benchmark)


@pytest.fixture(scope="session")
def rest():
    return parse_scenario(shipped_scenario("rest.scn"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def weakening_law():
    return ns.slip_weakening_law(0.2, 0.1, 0.5)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
