# -*- coding: utf-8 -*-
"""Shared fixtures"""

import pytest

from simstab.config import configure
from simstab.examples_data import get_example
from simstab.problem import Plant
from simstab.ratfun import RatFun


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    """Every test starts from the default configuration, without SIMSTAB_* overrides"""
    for name in ("SIMSTAB_LOG_LEVEL", "SIMSTAB_TOL_ROOT", "SIMSTAB_TOL_CEE",
                 "SIMSTAB_LAMBDA_POINTS", "SIMSTAB_OUTPUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    configure(None)
    yield
    configure(None)


@pytest.fixture
def unstable_first_order():
    """p = 1/(s − 1) as x = 1/(s + 1), y = (s − 1)/(s + 1)"""
    return Plant(RatFun.from_roots([], [-1.0]), RatFun.from_roots([1.0], [-1.0]))


@pytest.fixture
def example(request):
    return get_example(request.param)


@pytest.fixture
def siso_plant_document():
    """Plant file body for the second built-in SISO pair, coefficients ascending in s"""
    case = get_example(2)
    p0, p1 = case.plants
    return {"mode": "siso", "name": "pair", "p0": p0.to_dict(), "p1": p1.to_dict(),
            "sigma": {"expression": "z*(z-0.1)"}}
