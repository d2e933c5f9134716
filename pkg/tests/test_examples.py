# -*- coding: utf-8 -*-
import numpy as np
import pandas as pd
import pytest

from simstab.cli import comparison_table, reference_verdict, synthesize
from simstab.errors import ConfigError
from simstab.examples_data import EXAMPLES, ReferenceMatrix, ReferenceRatio, get_example, sigma_preset
from simstab.plant_provider import create_plant_provider
from simstab.verify import lambda_sweep


@pytest.mark.parametrize("example_id", ["0", 7, "first"])
def test_unknown_example(example_id):
    with pytest.raises(ConfigError):
        get_example(example_id)


@pytest.mark.parametrize("example", sorted(EXAMPLES), indirect=True)
def test_plants_satisfy_the_factor_invariants(example):
    for plant in example.plants:
        plant.validate()
    assert example.mode in ("siso", "mimo")


@pytest.mark.parametrize("example_id, count", [(1, 6), (2, 1), (3, 6), (4, 1)])
def test_sigma_presets(example_id, count):
    presets = sigma_preset(example_id)
    assert len(presets) == count
    assert all(isinstance(p, dict) for p in presets)


def test_reference_shapes():
    assert isinstance(get_example(1).reference, ReferenceRatio)
    assert get_example(1).reference.ratfun().den.degree == 2
    assert get_example(2).reference.ratfun().den.degree == 4
    for example_id in (3, 4):
        reference = get_example(example_id).reference
        assert isinstance(reference, ReferenceMatrix)
        assert reference.ratmat().shape == (2, 2)


@pytest.mark.slow
@pytest.mark.parametrize("example_id", [1, 2, 3, 4])
def test_comparison_table(example_id):
    pair = create_plant_provider("example", example_id=example_id).get_plant_pair()
    comp = synthesize(pair)
    table = comparison_table(pair.example, comp)
    assert list(table.columns) == ["entry", "part", "power", "computed", "reference", "rel_error"]
    assert not table.empty
    assert set(table["part"]) <= {"num", "den"}


@pytest.mark.slow
@pytest.mark.parametrize("example_id", [1, 2, 3, 4])
def test_reference_is_matched_or_the_loop_is_verified(example_id):
    pair = create_plant_provider("example", example_id=example_id).get_plant_pair()
    comp = synthesize(pair)
    table = comparison_table(pair.example, comp)
    report = lambda_sweep(pair.plants, comp, np.linspace(0.0, 1.0, 21))
    verdict = reference_verdict(table, report.stable)
    assert verdict in ("match", "verified"), table.to_string()
    if verdict == "verified":
        assert report.stable


def test_reference_verdict():
    table = pd.DataFrame({"rel_error": [0.001, 0.019]})
    assert reference_verdict(table, False) == "match"
    off = pd.DataFrame({"rel_error": [0.001, 0.05]})
    assert reference_verdict(off, True) == "verified"
    assert reference_verdict(off, False) == "mismatch"
    padded = pd.DataFrame({"rel_error": [0.001, np.nan]})
    assert reference_verdict(padded, False) == "mismatch"
