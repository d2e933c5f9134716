#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Configuration settings for the simultaneous stabilization toolkit
"""

import copy
import os
from typing import Any, Dict, Optional

try:
    from dotenv import load_dotenv
    DOTENV_AVAILABLE = True
except ImportError:
    DOTENV_AVAILABLE = False

# Default configuration
DEFAULT_CONFIG = {
    # Logging configuration
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        "file": None  # None means logs/simstab.log
    },

    # Polynomial / rational algebra tolerances
    "tolerances": {
        "coeff_trim": 1e-13,        # relative, trailing coefficients dropped below this
        "cancel": 1e-8,             # common-root cancellation distance (relative to 1+|root|)
        "cluster": 1e-5,            # multiplicity clustering distance (relative to 1+|root|)
        "boundary_band": 1e-6,      # |Re s| band treated as imaginary-axis zero
        "real_part": 1e-9,          # imaginary parts below this are zeroed
        "pole": 1e-12,              # |den(s0)| below this is a pole
        "minimal": 1e-8,            # Krylov rank cut in minimal realizations, relative to the matrix norms
        "disc_band": 1e-9,          # classify_disc band around |z| = 1
    },

    # Interpolation problem construction
    "completion": {
        "alpha_min_exp": -3.0,
        "alpha_max_exp": 3.0,
        "alpha_points": 61,
        "rank_ratio": 1e-6,         # second/first singular value limit for Adj(M(s_i))
        "eig_cond": 1e8,            # eigenvector condition number limit in matrix square roots
        "cut_band": 1e-9,
        "aux_values": [0.5, 1.0, 0.25, 2.0, 0.1, 5.0],
        "pick_tol": 1e-12,
    },

    # Pinning δ₁/δ₀ at s = ∞ (scalar problems with a zero of x₀y₁ − x₁y₀ at infinity)
    "infinity": {
        "scale_min_exp": -2.0,      # anchor scale a searched on logspace(min, max, points)
        "scale_max_exp": 4.0,
        "scale_points": 61,
        "pick_ratio": 0.5,          # keep this share of the limiting smallest Pick eigenvalue
        "lead_cancel": 1e-9,        # relative size of leading coefficients that cancel at s = ∞
    },

    # CEE homotopy solver
    "homotopy": {
        "initial_step": 0.1,
        "max_step": 0.25,
        "min_step": 1e-6,
        "growth": 1.5,
        "corrector_xtol": 1e-13,
        "corrector_maxfev": 2000,
        "residual_tol": 1e-10,       # relative to 1 + ||P||_F
        "psd_tol": 1e-10,
        "hph_margin": 1e-9,
        "stability_margin": 1e-9,
        "realness_tol": 1e-9,
        "linear_cond": 1e12,
    },

    # Verification sweeps and grid checks
    "verification": {
        "lambda_points": 101,
        "margin_band": 1e-6,
        "loop_cancel": 1e-7,        # closed-loop pole/zero cancellation distance
        "cut_tol": 1e-9,
        "halfplane_points": 2048,
        "halfplane_radius": 1e3,
        "circle_points": 512,
        "circle_radius": 1.0 - 1e-6,
        "spectral_points": 128,
        "near_cancel_warn": 1e-4,
        "reference_rel_tol": 0.02,  # printed compensator coefficients
        "parallel": False,
        "workers": 4,
    },

    # Chart configuration
    "chart": {
        "figure_size": (6, 6),
        "marker_size": 12,
        "circle_color": "gray",
        "stable_color": "tab:blue",
        "unstable_color": "tab:red",
    },

    # Output configuration
    "output": {
        "writer": "files",          # result writer kind, see result_writer.create_result_writer
        "directory": "results",
        "formats": ["csv", "svg"],
        "float_format": "%.12g",
    },
}


def _override_float(section: Dict[str, Any], key: str, env_name: str) -> None:
    value = os.getenv(env_name)
    if value:
        try:
            section[key] = float(value)
        except ValueError:
            pass


def get_config() -> Dict[str, Any]:
    """
    Get configuration with environment variable overrides

    Returns:
        Configuration dictionary (a fresh deep copy on every call)
    """
    if DOTENV_AVAILABLE:
        load_dotenv()

    config = copy.deepcopy(DEFAULT_CONFIG)

    # Override with environment variables if they exist
    if os.getenv("SIMSTAB_LOG_LEVEL"):
        config["logging"]["level"] = os.getenv("SIMSTAB_LOG_LEVEL")

    _override_float(config["tolerances"], "cluster", "SIMSTAB_TOL_ROOT")
    _override_float(config["homotopy"], "residual_tol", "SIMSTAB_TOL_CEE")

    if os.getenv("SIMSTAB_LAMBDA_POINTS"):
        try:
            config["verification"]["lambda_points"] = int(os.getenv("SIMSTAB_LAMBDA_POINTS"))
        except ValueError:
            pass

    if os.getenv("SIMSTAB_OUTPUT_DIR"):
        config["output"]["directory"] = os.getenv("SIMSTAB_OUTPUT_DIR")

    return config


_active_config: Optional[Dict[str, Any]] = None


def active_config() -> Dict[str, Any]:
    """Process-wide configuration, loaded from the environment on first use"""
    global _active_config
    if _active_config is None:
        _active_config = get_config()
    return _active_config


def configure(config: Optional[Dict[str, Any]]) -> None:
    """Install a configuration (None reloads from the environment on next use)"""
    global _active_config
    _active_config = copy.deepcopy(config) if config is not None else None


def section(name: str, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Return one configuration section merged with per-call overrides

    Args:
        name: Section name in DEFAULT_CONFIG
        overrides: Optional dict of values replacing the defaults

    Returns:
        Merged section dictionary
    """
    merged = dict(active_config()[name])
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged
