#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Simultaneous stabilization toolkit
Command-line entry point: solve, verify, example, sweep-sigma
"""

import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from marshmallow import ValidationError

from . import __version__
from .config import active_config, section
from .errors import EXIT_UNSTABLE, SimStabError
from .examples_data import ExampleCase, ReferenceMatrix, ReferenceRatio, sigma_preset
from .plant_provider import PlantPair, create_plant_provider, load_compensator
from .ratfun import Poly, RatFun, RatMat
from .result_writer import ResultWriter, create_result_writer
from .schemas import JobConfigSchema, sigma_label
from .stabilize import Compensator, mimo_compensator, siso_compensator
from .utils.logger import get_logger, setup_logging
from .verify import lambda_sweep, map_ordered

logger = get_logger(__name__)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def _writer(output_dir: str, formats: Sequence[str], opts: Optional[Dict[str, Any]] = None) -> ResultWriter:
    return create_result_writer(section("output", opts)["writer"], output_dir=output_dir, formats=formats, opts=opts)


def synthesize(pair: PlantPair, sigma: Any = None, opts: Optional[Dict[str, Any]] = None) -> Compensator:
    """Compensator for a plant pair, with the pair's own Σ when none is given"""
    spec = sigma if sigma is not None else pair.sigma
    first, second = pair.plants
    if pair.mode == "siso":
        return siso_compensator(first, second, spec, opts)
    return mimo_compensator(first, second, spec, opts=opts)


def _error_result(err: Exception) -> Dict[str, Any]:
    code = err.exit_code if isinstance(err, SimStabError) else 2
    message = f"{type(err).__name__}: {err.messages if isinstance(err, ValidationError) else err}"
    logger.error(message)
    return {"status": "error", "error": message, "exit_code": code}


def run_solve_task(
    pair: PlantPair,
    sigma: Any = None,
    opts: Optional[Dict[str, Any]] = None,
    output_dir: str = "results",
    formats: Sequence[str] = ("csv", "svg"),
    verify: bool = True,
    lambda_grid: Optional[Sequence[float]] = None
) -> Dict[str, Any]:
    """
    Synthesize, write the compensator and (optionally) run the closed-loop sweep

    Returns:
        {"status": "success" | "unstable" | "error", "compensator": path,
         "residuals": {...}, "sweep": {...}, "error": str (on error)}
    """
    logger.info("=" * 60)
    logger.info(f"Synthesis for {pair.name or pair.mode} ({pair.mode}), sigma {sigma_label(sigma or pair.sigma)}")
    logger.info("=" * 60)
    try:
        comp = synthesize(pair, sigma, opts)
        writer = _writer(output_dir, formats, opts)
        result: Dict[str, Any] = {
            "status": "success",
            "compensator": writer.write_compensator(comp),
            "residuals": comp.residuals,
        }
        if verify:
            report = lambda_sweep(pair.plants, comp, lambda_grid, opts)
            result["artifacts"] = writer.write_loci(report)
            result["sweep"] = report.summary()
            if not report.stable:
                result["status"] = "unstable"
                result["exit_code"] = EXIT_UNSTABLE
        result["compensator_object"] = comp
        return result
    except (SimStabError, ValidationError) as e:
        return _error_result(e)


def run_verify_task(
    pair: PlantPair,
    comp: Optional[Compensator],
    opts: Optional[Dict[str, Any]] = None,
    output_dir: str = "results",
    formats: Sequence[str] = ("csv", "svg"),
    lambda_grid: Optional[Sequence[float]] = None
) -> Dict[str, Any]:
    """λ sweep of a stored compensator (or the open loop when comp is None)"""
    try:
        report = lambda_sweep(pair.plants, comp, lambda_grid, opts)
        writer = _writer(output_dir, formats, opts)
        stem = "open_loop_loci" if comp is None else "loci"
        result = {"status": "success" if report.stable else "unstable", "artifacts": writer.write_loci(report, stem)}
        result["sweep"] = report.summary()
        if not report.stable:
            result["exit_code"] = EXIT_UNSTABLE
        return result
    except (SimStabError, ValidationError, ValueError) as e:
        return _error_result(e)


def _monic_desc(p: Poly, lead: complex) -> List[float]:
    return [float(np.real(c / lead)) for c in p.coeffs[::-1]]


def comparison_table(case: ExampleCase, comp: Compensator) -> pd.DataFrame:
    """Computed vs printed coefficients (descending powers, monic denominators)"""
    rows: List[Dict[str, Any]] = []

    def compare(entry: str, kind: str, computed: List[float], reference: Sequence[float]) -> None:
        width = max(len(computed), len(reference))
        comp_pad = [np.nan] * (width - len(computed)) + list(computed)
        ref_pad = [np.nan] * (width - len(reference)) + list(reference)
        for power, (c, r) in enumerate(zip(comp_pad, ref_pad)):
            rel = abs(c - r) / max(abs(r), 1e-12) if np.isfinite(c) and np.isfinite(r) else np.nan
            rows.append({
                "entry": entry, "part": kind, "power": width - 1 - power,
                "computed": c, "reference": r, "rel_error": rel,
            })

    ref = case.reference
    if isinstance(ref, ReferenceRatio):
        ratio: RatFun = comp.delta.ratio
        target = ref.ratfun()
        lead = ratio.den.leading
        compare("delta_ratio", "num", _monic_desc(ratio.num, lead), _monic_desc(target.num, target.den.leading))
        compare("delta_ratio", "den", _monic_desc(ratio.den, lead), list(ref.den_desc))
    elif isinstance(ref, ReferenceMatrix):
        F1: RatMat = comp.delta.root
        grid, d = F1.normalize().common_denominator()
        lead = d.leading
        compare("F1", "den", _monic_desc(d, lead), list(ref.den_desc))
        for i, row in enumerate(ref.numerators):
            for j, num in enumerate(row):
                compare(f"F1[{i + 1},{j + 1}]", "num", _monic_desc(grid[i][j], lead), list(num))
    return pd.DataFrame(rows, columns=["entry", "part", "power", "computed", "reference", "rel_error"])


def reference_verdict(table: pd.DataFrame, stable: bool, opts: Optional[Dict[str, Any]] = None) -> str:
    """
    "match" when every printed coefficient is reproduced within reference_rel_tol,
    "verified" when it is not but the λ sweep is stable, "mismatch" otherwise
    """
    tol = section("verification", opts)["reference_rel_tol"]
    rel = table["rel_error"]
    if not table.empty and not rel.isna().any() and float(rel.max()) <= tol:
        return "match"
    return "verified" if stable else "mismatch"


def _interpolant_grid(comp: Compensator, points: int = 64, radius: float = 0.95) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    return np.array([comp.interpolant.original(radius * np.exp(1j * t)) for t in theta])


def run_sigma_sweep_task(
    pair: PlantPair,
    sigmas: Sequence[Any],
    opts: Optional[Dict[str, Any]] = None,
    output_dir: str = "results",
    formats: Sequence[str] = ("csv", "svg"),
    lambda_grid: Optional[Sequence[float]] = None
) -> Dict[str, Any]:
    """One solve + sweep per Σ; summary table with distances to the first Σ's interpolant"""
    if not sigmas:
        return {"status": "error", "error": "empty sigma list", "exit_code": 2}
    cfg = section("verification", opts)

    def one(indexed):
        index, spec = indexed
        try:
            comp = synthesize(pair, spec, opts)
            report = lambda_sweep(pair.plants, comp, lambda_grid, opts)
            return index, spec, comp, report, None
        except SimStabError as e:
            logger.error(f"sigma {sigma_label(spec)} failed: {type(e).__name__}: {e}")
            return index, spec, None, None, e

    outcomes = map_ordered(one, list(enumerate(sigmas)), cfg)
    writer = _writer(output_dir, formats, opts)
    reference_grid = None
    rows = []
    first_error: Optional[SimStabError] = None
    for index, spec, comp, report, err in outcomes:
        row = {"sigma": sigma_label(spec), "status": "error", "stable": False,
               "worst_margin": np.nan, "max_grid_distance": np.nan, "error": ""}
        if err is not None:
            row["error"] = f"{type(err).__name__}: {err}"
            first_error = first_error or err
        else:
            writer.write_compensator(comp, f"compensator_{index}")
            writer.write_loci(report, f"loci_{index}")
            values = _interpolant_grid(comp)
            if reference_grid is None:
                reference_grid = values
            row.update({
                "status": "success" if report.stable else "unstable",
                "stable": report.stable,
                "worst_margin": report.worst_margin,
                "max_grid_distance": float(np.max(np.abs(values - reference_grid))),
            })
        rows.append(row)
    table = pd.DataFrame(rows)
    result: Dict[str, Any] = {"status": "success", "summary": writer.write_table(table, "sigma_sweep"), "rows": rows}
    if first_error is not None:
        result.update({"status": "error", "error": f"{type(first_error).__name__}: {first_error}",
                       "exit_code": first_error.exit_code})
    elif not all(r["stable"] for r in rows):
        result.update({"status": "unstable", "exit_code": EXIT_UNSTABLE})
    return result


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _parse_sigma_arg(text: Optional[str]) -> Any:
    """--sigma accepts a JSON spec or an expression such as z*(z-0.1)"""
    if text is None:
        return None
    stripped = text.strip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    if stripped.startswith("["):
        return {"roots": json.loads(stripped)}
    return {"expression": stripped}


def _opts_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    opts: Dict[str, Any] = {}
    if getattr(args, "tol_root", None) is not None:
        opts["cluster"] = args.tol_root
    if getattr(args, "tol_cee", None) is not None:
        opts["residual_tol"] = args.tol_cee
    if getattr(args, "lambda_points", None) is not None:
        opts["lambda_points"] = args.lambda_points
    if getattr(args, "parallel", False):
        opts["parallel"] = True
    return opts


def _formats(text: str) -> List[str]:
    return [f.strip() for f in text.split(",") if f.strip()]


def _pair_from_args(args: argparse.Namespace) -> PlantPair:
    if getattr(args, "example", None) is not None:
        return create_plant_provider("example", example_id=args.example).get_plant_pair()
    if not getattr(args, "plants", None):
        raise ValidationError("a plant file or --example is required", "plants")
    return create_plant_provider("json", file_path=args.plants).get_plant_pair()


def _load_job(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        return JobConfigSchema().load(json.load(handle))


def build_parser() -> argparse.ArgumentParser:
    defaults = active_config()
    parser = argparse.ArgumentParser(
        prog="simstab",
        description="Simultaneous stabilization of plant families by analytic interpolation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sigma", help='Σ spec: expression "z*(z-0.1)", JSON {"roots": [...]}, {"coeffs": [...]} or {"Sigma": [[...]]}')
    common.add_argument("--lambda-points", type=int, help=f"λ grid size (default: {defaults['verification']['lambda_points']})")
    common.add_argument("--tol-root", type=float, help="root clustering tolerance")
    common.add_argument("--tol-cee", type=float, help="CEE residual tolerance")
    common.add_argument("--out", default=defaults["output"]["directory"], help="output directory (default: %(default)s)")
    common.add_argument("--format", default=",".join(defaults["output"]["formats"]), help="loci formats, e.g. csv,svg (default: %(default)s)")
    common.add_argument("--parallel", action="store_true", help="run λ and Σ sweeps on a thread pool")
    common.add_argument("--log-level", default=defaults["logging"]["level"], choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging level (default: %(default)s)")
    common.add_argument("--log-file", help="log file (default: logs/simstab.log)")

    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="synthesize a compensator for a plant file")
    solve.add_argument("plants", nargs="?", help="plant file (JSON)")
    solve.add_argument("--job", help="job config file (JSON) instead of a plant file")
    solve.add_argument("--no-verify", action="store_true", help="skip the closed-loop λ sweep")

    verify = sub.add_parser("verify", parents=[common], help="closed-loop sweep of a stored compensator")
    verify.add_argument("plants", nargs="?", help="plant file (JSON)")
    verify.add_argument("--compensator", help="compensator file written by solve")
    verify.add_argument("--example", type=int, choices=[1, 2, 3, 4], help="use a built-in plant pair")
    verify.add_argument("--open-loop", action="store_true", help="sweep with k = 0 / K = 0")

    example = sub.add_parser("example", parents=[common], help="run a built-in example and compare with reference values")
    example.add_argument("example", type=int, choices=[1, 2, 3, 4])
    example.add_argument("--no-verify", action="store_true", help="skip the closed-loop λ sweep")

    sweep = sub.add_parser("sweep-sigma", parents=[common], help="solve and verify for a list of Σ")
    sweep.add_argument("plants", nargs="?", help="plant file (JSON)")
    sweep.add_argument("--example", type=int, choices=[1, 2, 3, 4], help="built-in pair with its Σ presets")
    sweep.add_argument("--sigma-list", help="JSON file with a list of Σ specs")
    return parser


def _finish(result: Dict[str, Any]) -> int:
    result.pop("compensator_object", None)
    if result.get("error"):
        print(f"Error: {result['error']}")
        return int(result.get("exit_code", 1))
    print(json.dumps(result, ensure_ascii=False, indent=2, default=str))
    return int(result.get("exit_code", 0))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Command-line interface
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level, log_file=args.log_file)

    opts = _opts_from_args(args)
    formats = _formats(args.format)
    try:
        sigma = _parse_sigma_arg(args.sigma)
        if args.command == "solve":
            verify = not args.no_verify
            lambda_grid = None
            output_dir = args.out
            if args.job:
                job = _load_job(args.job)
                pair = (create_plant_provider("json", file_path=job["plants"]) if job.get("plants")
                        else create_plant_provider("example", example_id=job["example"])).get_plant_pair()
                sigma = sigma if sigma is not None else job.get("sigma")
                opts.update(job.get("tolerances") or {})
                if "lambda_points" in job:
                    opts["lambda_points"] = job["lambda_points"]
                lambda_grid = job.get("lambda_grid")
                output_dir, formats, verify = job["output_dir"], job["formats"], verify and job["verify"]
            else:
                pair = _pair_from_args(args)
            return _finish(run_solve_task(pair, sigma, opts, output_dir, formats, verify, lambda_grid))

        if args.command == "verify":
            pair = _pair_from_args(args)
            if args.open_loop:
                comp = None
            elif args.compensator:
                comp = load_compensator(args.compensator)
            else:
                raise ValidationError("give --compensator or --open-loop", "compensator")
            return _finish(run_verify_task(pair, comp, opts, args.out, formats))

        if args.command == "example":
            pair = create_plant_provider("example", example_id=args.example).get_plant_pair()
            result = run_solve_task(pair, sigma, opts, args.out, formats, not args.no_verify)
            comp = result.get("compensator_object")
            if comp is not None and pair.example is not None:
                table = comparison_table(pair.example, comp)
                result["comparison"] = _writer(args.out, formats, opts).write_table(table, "comparison")
                print(table.to_string(index=False))
                result["reference"] = reference_verdict(table, bool(result.get("sweep", {}).get("stable")), opts)
                logger.info(f"reference coefficients: {result['reference']}")
            return _finish(result)

        if args.command == "sweep-sigma":
            pair = _pair_from_args(args)
            if args.sigma_list:
                with open(args.sigma_list, "r", encoding="utf-8") as handle:
                    sigmas = json.load(handle)
            elif args.example is not None:
                sigmas = sigma_preset(args.example)
            elif sigma is not None:
                sigmas = [sigma]
            else:
                sigmas = [pair.sigma]
            return _finish(run_sigma_sweep_task(pair, sigmas, opts, args.out, formats))

    except (SimStabError, ValidationError) as e:
        return _finish(_error_result(e))
    except (json.JSONDecodeError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}")
        return 2 if isinstance(e, json.JSONDecodeError) else 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
