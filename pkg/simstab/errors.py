#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Exception hierarchy for the simultaneous stabilization toolkit

Every error carries the CLI exit code it maps to.
"""


class SimStabError(Exception):
    """Base class for all toolkit errors"""
    exit_code = 1


# --- configuration / input errors (exit 2) ---

class ConfigError(SimStabError):
    exit_code = 2


class IdenticalPlants(ConfigError):
    pass


class PlantFileError(ConfigError):
    pass


class SigmaError(ConfigError):
    pass


class DimensionMismatch(ConfigError, ValueError):
    pass


class IndexSumMismatch(ConfigError, ValueError):
    pass


class UnsupportedWriter(ConfigError, ValueError):
    pass


# --- infeasible instances (exit 3) ---

class InfeasibleError(SimStabError):
    exit_code = 3


class NoSolution(InfeasibleError):
    pass


class HomotopyStalled(InfeasibleError):
    pass


class UnitCheckFailed(InfeasibleError):
    pass


class EigCutViolation(UnitCheckFailed):
    pass


class NonpositiveRealTarget(InfeasibleError):
    pass


class NoAdmissibleCompletion(InfeasibleError):
    pass


class SingularDataMatrix(InfeasibleError):
    pass


class UnstableRealization(InfeasibleError):
    pass


class SingularLoop(InfeasibleError):
    pass


# --- unsupported instances (exit 4) ---

class UnsupportedInstance(SimStabError):
    exit_code = 4


class BoundaryZero(UnsupportedInstance):
    pass


class NonSimpleZero(UnsupportedInstance):
    pass


class RankNotOne(UnsupportedInstance):
    pass


class DegenerateCommonZero(UnsupportedInstance):
    pass


class UnsupportedDimension(UnsupportedInstance):
    pass


class EigenvalueOnCut(UnsupportedInstance):
    pass


class NonFiniteData(UnsupportedInstance):
    """Coefficients or roots overflowed to inf or nan"""


class NondiagonalizableWithinTolerance(UnsupportedInstance):
    pass


# --- numeric plumbing ---

class ZeroPolynomial(SimStabError, ValueError):
    pass


class PoleAtEvaluationPoint(SimStabError, ZeroDivisionError):
    pass


class MapPole(SimStabError, ZeroDivisionError):
    pass


class ImproperSystem(SimStabError, ValueError):
    """No proper realization: improper entry or singular feedthrough"""


# Verification sweep found an unstable closed loop
EXIT_UNSTABLE = 5
