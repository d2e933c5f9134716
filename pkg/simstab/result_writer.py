#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Result Writer Module
Handles writing synthesis and verification results to files (JSON, CSV, SVG)
"""

import json
import os
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .config import section
from .errors import UnsupportedWriter
from .stabilize import Compensator
from .utils.logger import get_logger
from .verify import SweepReport, emit_loci

logger = get_logger(__name__)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


class ResultWriter:
    """
    Abstract base class for result writers
    """

    def write_compensator(self, comp: Compensator, stem: str = "compensator") -> Optional[str]:
        """Write the compensator"""
        raise NotImplementedError

    def write_report(self, report: Dict[str, Any], stem: str) -> Optional[str]:
        """Write a named JSON report"""
        raise NotImplementedError

    def write_table(self, df: pd.DataFrame, stem: str) -> Optional[str]:
        """Write a summary table"""
        raise NotImplementedError

    def write_loci(self, report: SweepReport, stem: str = "loci") -> Dict[str, str]:
        """Write sweep loci"""
        raise NotImplementedError


class FileResultWriter(ResultWriter):
    """
    Result writer for a local output directory
    """

    def __init__(self, output_dir: str, formats: Sequence[str] = ("csv", "svg"), opts: Optional[Dict[str, Any]] = None):
        self.output_dir = output_dir
        self.formats = list(formats)
        self.opts = opts
        self.float_format = section("output", opts)["float_format"]
        os.makedirs(output_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_compensator(self, comp: Compensator, stem: str = "compensator") -> Optional[str]:
        """Write the compensator file plus its residual report"""
        path = self._path(f"{stem}.json")
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(_jsonable(comp.to_dict()), handle, indent=2)
        logger.info(f"Compensator written to {path}")
        residuals = {"residuals": comp.residuals}
        if comp.unit_report is not None:
            residuals["unit_check"] = {
                "passed": comp.unit_report.passed,
                "worst_real_part": comp.unit_report.worst,
                "lambda_points": len(comp.unit_report.lambdas),
            }
        if comp.solution is not None:
            residuals["diagnostics"] = comp.solution.diagnostics
        self.write_report(residuals, f"{stem}_residuals")
        return path

    def write_report(self, report: Dict[str, Any], stem: str) -> Optional[str]:
        path = self._path(f"{stem}.json")
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(_jsonable(report), handle, indent=2)
        logger.debug(f"Report written to {path}")
        return path

    def write_table(self, df: pd.DataFrame, stem: str) -> Optional[str]:
        path = self._path(f"{stem}.csv")
        df.to_csv(path, index=False, float_format=self.float_format)
        logger.info(f"Table written to {path}")
        return path

    def write_loci(self, report: SweepReport, stem: str = "loci") -> Dict[str, str]:
        if not self.formats:
            return {}
        paths = emit_loci(report, self.output_dir, self.formats, stem, self.opts)
        self.write_report(report.summary(), f"{stem}_summary")
        return paths


def create_result_writer(output_type: str, **kwargs) -> ResultWriter:
    """
    Factory function to create the appropriate result writer

    Args:
        output_type: "files" (the configured output.writer)
        **kwargs: output_dir, formats, opts

    Returns:
        ResultWriter instance

    Raises:
        UnsupportedWriter: unknown output_type or missing output_dir
    """
    if output_type.lower() in ["files", "file", "directory"]:
        if "output_dir" not in kwargs:
            raise UnsupportedWriter("output_dir is required for the file result writer")
        return FileResultWriter(kwargs["output_dir"], kwargs.get("formats", ("csv", "svg")), kwargs.get("opts"))

    else:
        raise UnsupportedWriter(f"Unsupported output type: {output_type}")
