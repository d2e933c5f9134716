# -*- coding: utf-8 -*-
import json

import numpy as np
import pytest
from marshmallow import ValidationError

from simstab.cee import build_observer_form
from simstab.errors import PlantFileError, SigmaError
from simstab.plant_provider import create_plant_provider, load_compensator, plant_pair_from_document
from simstab.ratfun import RatFun, RatMat
from simstab.result_writer import FileResultWriter, create_result_writer
from simstab.schemas import (
    CompensatorFileSchema,
    JobConfigSchema,
    MimoFileSchema,
    SisoFileSchema,
    parse_sigma_expression,
    rational_from_dict,
    sigma_from_spec,
    sigma_label,
)
from simstab.stabilize import Compensator

ONE = {"num": [1.0]}


class TestSigmaExpression:

    @pytest.mark.parametrize("text, roots", [
        ("z", [0.0]),
        ("z*(z-0.1)", [0.0, 0.1]),
        ("(z-0.5)^2", [0.5, 0.5]),
        ("(z+0.25) * z**2", [-0.25, 0.0, 0.0]),
    ])
    def test_roots(self, text, roots):
        assert parse_sigma_expression(text) == pytest.approx(roots)

    @pytest.mark.parametrize("text", ["", "2z", "z*(y-1)", "sin(z)"])
    def test_unreadable(self, text):
        with pytest.raises(SigmaError):
            parse_sigma_expression(text)

    def test_spec_forms_agree(self):
        obs = build_observer_form(1, 2)
        from_text = sigma_from_spec("z*(z-0.1)", obs)
        from_roots = sigma_from_spec({"roots": [0.0, 0.1]}, obs)
        assert np.allclose(from_text.Sigma, from_roots.Sigma)

    def test_two_sources_are_rejected(self):
        with pytest.raises(SigmaError):
            sigma_from_spec({"roots": [0.1], "expression": "z"}, build_observer_form(1, 1))

    def test_labels(self):
        assert sigma_label(None) == "central"
        assert sigma_label("z-0.5") == "z-0.5"
        assert sigma_label({"roots": [0.5], "label": "shifted"}) == "shifted"
        assert sigma_label({"roots": [0.5]}) == "roots=[0.5]"


class TestPlantFiles:

    def test_siso_document(self, siso_plant_document):
        pair = plant_pair_from_document(siso_plant_document)
        assert pair.mode == "siso"
        assert pair.name == "pair"
        assert pair.sigma == {"expression": "z*(z-0.1)"}
        p0, _ = pair.plants
        assert p0.x(0.3) == pytest.approx(rational_from_dict(siso_plant_document["p0"]["x"])(0.3))

    def test_missing_plant(self, siso_plant_document):
        del siso_plant_document["p1"]
        with pytest.raises(ValidationError) as exc:
            SisoFileSchema().load(siso_plant_document)
        assert "p1" in exc.value.messages

    def test_zero_denominator(self, siso_plant_document):
        siso_plant_document["p0"]["y"]["den"] = [0.0, 0.0]
        with pytest.raises(ValidationError):
            plant_pair_from_document(siso_plant_document)

    def test_unstable_factor(self, siso_plant_document):
        siso_plant_document["p0"]["x"] = RatFun.from_roots([], [2.0]).to_dict()
        with pytest.raises(PlantFileError):
            plant_pair_from_document(siso_plant_document)

    def test_mimo_shapes(self):
        doc = {
            "mode": "mimo",
            "N0": [[ONE, ONE], [ONE, ONE]],
            "D0": [[ONE]],
            "N1": [[ONE]],
            "D1": [[ONE]],
        }
        with pytest.raises(ValidationError) as exc:
            MimoFileSchema().load(doc)
        assert "D0" in exc.value.messages

    def test_json_provider(self, tmp_path, siso_plant_document):
        path = tmp_path / "plants.json"
        path.write_text(json.dumps(siso_plant_document), encoding="utf-8")
        pair = create_plant_provider("json", file_path=str(path)).get_plant_pair()
        assert pair.mode == "siso"

    def test_missing_file(self, tmp_path):
        with pytest.raises(PlantFileError) as exc:
            create_plant_provider("json", file_path=str(tmp_path / "absent.json"))
        assert exc.value.exit_code == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"mode\": ", encoding="utf-8")
        with pytest.raises(PlantFileError, match="invalid JSON"):
            create_plant_provider("json", file_path=str(path))

    def test_example_provider(self):
        pair = create_plant_provider("example", example_id=3).get_plant_pair()
        assert pair.mode == "mimo"
        assert pair.example.id == 3

    def test_unknown_source(self):
        with pytest.raises(ValueError):
            create_plant_provider("spreadsheet")


class TestCompensatorFiles:

    def test_exactly_one_kind(self):
        with pytest.raises(ValidationError):
            CompensatorFileSchema().load({"residuals": {}})
        with pytest.raises(ValidationError):
            CompensatorFileSchema().load({"k": ONE, "K": [[ONE]]})

    def test_scalar_round_trip(self, tmp_path):
        k = RatFun.from_roots([-2.0], [-5.0], 3.0)
        writer = FileResultWriter(str(tmp_path), formats=("csv",))
        path = writer.write_compensator(Compensator(scalar=k, residuals={"riccati": 1e-12}))
        assert (tmp_path / "compensator_residuals.json").exists()
        loaded = load_compensator(path)
        assert loaded.is_scalar
        assert loaded.scalar(0.7) == pytest.approx(k(0.7))
        assert loaded.residuals == {"riccati": 1e-12}

    def test_matrix_round_trip(self, tmp_path):
        K = RatMat([[RatFun.from_roots([], [-1.0]), 2.0], [0.0, 1.0]])
        path = FileResultWriter(str(tmp_path)).write_compensator(Compensator(matrix=K), stem="matrix")
        loaded = load_compensator(path)
        assert not loaded.is_scalar
        assert np.allclose(loaded.matrix(0.5), K(0.5))

    def test_unknown_writer(self, tmp_path):
        with pytest.raises(ValueError):
            create_result_writer("database", output_dir=str(tmp_path))


class TestJobConfig:

    def test_defaults(self):
        job = JobConfigSchema().load({"example": 2})
        assert job["output_dir"] == "results"
        assert job["formats"] == ["csv", "svg"]
        assert job["verify"] is True

    @pytest.mark.parametrize("doc", [
        {},
        {"plants": "p.json", "example": 1},
        {"example": 5},
        {"example": 1, "lambda_points": 5, "lambda_grid": [0.0, 1.0]},
        {"example": 1, "lambda_grid": [0.0, 1.5]},
        {"example": 1, "formats": ["pdf"]},
    ])
    def test_rejected(self, doc):
        with pytest.raises(ValidationError):
            JobConfigSchema().load(doc)
