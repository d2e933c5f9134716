#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Plant Provider Module
Provides an abstraction layer for reading plant pairs (JSON files, built-in examples)
and compensator files
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

from marshmallow import ValidationError

from .errors import PlantFileError
from .examples_data import ExampleCase, get_example
from .problem import MimoPlant, Plant
from .schemas import (
    CompensatorFileSchema,
    MimoFileSchema,
    SisoFileSchema,
    rational_from_dict,
    ratmat_from_grid,
)
from .stabilize import Compensator
from .utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class PlantPair:
    """Plant family endpoints plus the Σ spec that came with them"""
    mode: str
    plants: Union[Tuple[Plant, Plant], Tuple[MimoPlant, MimoPlant]]
    sigma: Optional[Any] = None
    name: str = ""
    example: Optional[ExampleCase] = None


class PlantProvider:
    """
    Abstract base class for plant providers
    """

    def get_plant_pair(self) -> PlantPair:
        """Get the plant pair"""
        raise NotImplementedError


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        logger.error(f"Plant file not found: {path}")
        raise PlantFileError(f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise PlantFileError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")


def plant_pair_from_document(doc: Dict[str, Any], name: str = "") -> PlantPair:
    """
    Validate a plant document and build the plant pair

    Raises:
        ValidationError: schema violations, keyed by field
        PlantFileError: the factors violate the plant invariants
    """
    mode = doc.get("mode") if isinstance(doc, dict) else None
    if mode == "mimo":
        data = MimoFileSchema().load(doc)
        plants = (
            MimoPlant(ratmat_from_grid(data["N0"]), ratmat_from_grid(data["D0"])),
            MimoPlant(ratmat_from_grid(data["N1"]), ratmat_from_grid(data["D1"])),
        )
    else:
        data = SisoFileSchema().load(doc)
        plants = tuple(
            Plant(rational_from_dict(data[key]["x"]), rational_from_dict(data[key]["y"]))
            for key in ("p0", "p1")
        )
    for plant in plants:
        plant.validate()
    return PlantPair(data["mode"], plants, data.get("sigma"), data.get("name") or name)


class JsonPlantProvider(PlantProvider):
    """
    Plant provider for JSON plant files
    """

    def __init__(self, file_path: str):
        self.file_path = file_path
        self._doc = _read_json(file_path)
        logger.info(f"Successfully loaded plant file: {file_path}")

    def get_plant_pair(self) -> PlantPair:
        try:
            return plant_pair_from_document(self._doc, self.file_path)
        except ValidationError as e:
            logger.error(f"Plant file {self.file_path} failed validation: {e.messages}")
            raise


class BuiltinExampleProvider(PlantProvider):
    """
    Plant provider for the built-in example families
    """

    def __init__(self, example_id: int):
        self.case = get_example(example_id)

    def get_plant_pair(self) -> PlantPair:
        case = self.case
        logger.info(f"Using built-in example {case.id}: {case.name}")
        return PlantPair(case.mode, case.plants, case.sigma, f"example {case.id}", case)


def create_plant_provider(source_type: str, **kwargs) -> PlantProvider:
    """
    Factory function to create the appropriate plant provider

    Args:
        source_type: 'json' or 'example'
        **kwargs: file_path or example_id

    Returns:
        PlantProvider instance
    """
    if source_type.lower() == "json":
        if "file_path" not in kwargs:
            raise ValueError("file_path is required for the JSON plant provider")
        return JsonPlantProvider(kwargs["file_path"])

    elif source_type.lower() in ["example", "builtin"]:
        if "example_id" not in kwargs:
            raise ValueError("example_id is required for the built-in example provider")
        return BuiltinExampleProvider(kwargs["example_id"])

    else:
        raise ValueError(f"Unsupported plant source: {source_type}")


def load_compensator(path: str) -> Compensator:
    """
    Read a compensator file written by solve

    Raises:
        PlantFileError: unreadable file
        ValidationError: schema violations
    """
    data = CompensatorFileSchema().load(_read_json(path))
    if "k" in data:
        comp = Compensator(scalar=rational_from_dict(data["k"]))
        if "x_c" in data and "y_c" in data:
            comp.x_c = rational_from_dict(data["x_c"])
            comp.y_c = rational_from_dict(data["y_c"])
    else:
        comp = Compensator(matrix=ratmat_from_grid(data["K"]))
        if "N_c" in data:
            comp.N_c = ratmat_from_grid(data["N_c"])
            comp.D_c = ratmat_from_grid(data["D_c"])
    comp.residuals = dict(data.get("residuals") or {})
    logger.info(f"Loaded compensator from {path}")
    return comp
