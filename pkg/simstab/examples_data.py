#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Built-in plant families

Four reference instances: two SISO pairs and two 2×2 MIMO pairs, each with
its default Σ, the printed reference coefficients the computed solution is
compared against, and the Σ presets used by sweep-sigma.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from .errors import ConfigError
from .problem import MimoPlant, Plant
from .ratfun import Poly, RatFun, RatMat


def _rf(zeros, poles, gain: float = 1.0) -> RatFun:
    return RatFun.from_roots(zeros, poles, gain)


def _q(num_desc, den_desc) -> RatFun:
    """Rational function from descending coefficient lists"""
    return RatFun(Poly(list(reversed(num_desc))), Poly(list(reversed(den_desc))))


@dataclass(frozen=True)
class ReferenceRatio:
    """Printed rational function: gain·Π(s − zeros) / den(s), den descending"""
    gain: float
    zeros: Tuple[float, ...]
    den_desc: Tuple[float, ...]

    def ratfun(self) -> RatFun:
        return RatFun(Poly.from_roots(self.zeros, self.gain), Poly(list(reversed(self.den_desc))))


@dataclass(frozen=True)
class ReferenceMatrix:
    """Printed entry numerators over one common denominator, all descending"""
    numerators: Tuple[Tuple[Tuple[float, ...], ...], ...]
    den_desc: Tuple[float, ...]

    def ratmat(self) -> RatMat:
        return RatMat([[_q(num, self.den_desc) for num in row] for row in self.numerators])


@dataclass(frozen=True)
class ExampleCase:
    id: int
    mode: str
    name: str
    plants: Union[Tuple[Plant, Plant], Tuple[MimoPlant, MimoPlant]]
    sigma: Dict[str, Any]
    unstable_zeros: Tuple[complex, ...]
    reference: Union[ReferenceRatio, ReferenceMatrix]
    sigma_sweep: List[Dict[str, Any]] = field(default_factory=list)
    notes: str = ""


# ---------------------------------------------------------------------------
# SISO
# ---------------------------------------------------------------------------

def example_1() -> ExampleCase:
    p0 = Plant(
        _rf([-12.0, 7.0], [-1.5, -4.2]),
        _rf([2.0, 1.0], [-2.5, -7.2]),
    )
    p1 = Plant(
        _rf([-3.6, 8.0], [-4.7, -5.1]),
        _rf([1.3, -4.0], [-3.3, -2.4]),
    )
    return ExampleCase(
        id=1,
        mode="siso",
        name="second-order SISO pair, two real unstable zeros",
        plants=(p0, p1),
        sigma={"roots": [0.5], "label": "z-0.5"},
        # printed as (6.8652, 1); the factors as given put them at 6.8572 and 1.2964
        unstable_zeros=(6.8572, 1.2964),
        reference=ReferenceRatio(93.342, (-0.1608, -0.1606), (1.0, 65.01, 1057.0)),
        sigma_sweep=[{"roots": [z0], "label": f"z-{z0:g}"} for z0 in (0.0, 0.2, 0.4, 0.6, 0.8, 0.99)],
        notes="reference printed for the anchored normalization; closed-loop verdict is binding",
    )


def example_2() -> ExampleCase:
    # x0's second zero is printed as "(s+-0.1)", read here as (s - 0.1)
    p0 = Plant(
        _rf([-0.7, 0.1], [-0.4, -0.9]),
        _rf([1.0, 1.0], [-0.5, -1.8]),
    )
    p1 = Plant(
        _rf([-1.7, 0.3], [-0.9, -1.4], 2.0),
        _rf([1.0, 1.0], [-1.2, -0.8]),
    )
    den = Poly([1.34, 0.917, 1.0])
    den_sq = den * den
    return ExampleCase(
        id=2,
        mode="siso",
        name="SISO pair with a double unstable zero shared by y0 and y1",
        plants=(p0, p1),
        sigma={"expression": "z*(z-0.1)", "label": "z*(z-0.1)"},
        unstable_zeros=(357.0 / 604.0, 1.0, 1.0),
        reference=ReferenceRatio(
            0.53942, (-3.69, -3.69, -0.1353, -0.1353), tuple(float(c) for c in den_sq.coeffs.real[::-1])
        ),
    )


# ---------------------------------------------------------------------------
# MIMO
# ---------------------------------------------------------------------------

def example_3() -> ExampleCase:
    P0 = MimoPlant(
        RatMat.from_constant([[1.1, 1.9], [2.9, 1.1]]),
        RatMat([[_rf([2.2], [-5.8]), 1.0], [3.0, _rf([2.6], [-9.7])]]),
    )
    P1 = MimoPlant(
        RatMat.from_constant([[1.0, 2.0], [4.0, 3.0]]),
        RatMat([[_rf([3.3], [-2.1]), 1.0], [6.0, _rf([7.8], [-0.9])]]),
    )
    sweep = {
        "a": [[-0.1, -0.9], [0.4, -0.6]],
        "b": [[0.4, 0.1], [0.5, 0.4]],
        "c": [[0.2, 0.35], [0.6, 0.4]],
        "d": [[-0.8, 0.1], [0.6, -0.2]],
        "e": [[-0.65, 0.22], [0.8, -0.2]],
        "f": [[0.8, -0.33], [0.9, 0.1]],
    }
    return ExampleCase(
        id=3,
        mode="mimo",
        name="2x2 MIMO pair with constant numerators",
        plants=(P0, P1),
        sigma={"Sigma": [[0.3, 0.0], [0.0, 0.5]], "label": "diag(0.3, 0.5)"},
        unstable_zeros=(17.21, 0.9769),
        reference=ReferenceMatrix(
            (
                ((1.091, 61.43, 857.6), (0.1289, 25.88, 754.7)),
                ((-0.5455, -24.62, -236.4), (0.4219, 59.38, 1474.0)),
            ),
            (1.0, 55.61, 745.3),
        ),
        sigma_sweep=[{"Sigma": m, "label": key} for key, m in sweep.items()],
    )


def example_4() -> ExampleCase:
    # the plant data is printed in z; the variable is read as s
    a = [1.0, 2.0, 10.0]
    b = [1.0, 2.0, 15.0]

    def over(num_desc, den_desc) -> RatFun:
        return _q(num_desc, den_desc)

    def times(scale: float, *roots: float) -> List[float]:
        return [float(c) for c in Poly.from_roots(roots, scale).coeffs.real[::-1]]

    P0 = MimoPlant(
        RatMat([[over(times(3.0, 1.0, 1.0), a), 5.0], [4.0, over(times(2.0, 4.0, 2.0), a)]]),
        RatMat([[over(times(2.0, 2.0, 3.0), a), -1.0], [3.0, over(times(1.0, 2.0, 2.0), a)]]),
    )
    P1 = MimoPlant(
        RatMat([[over(times(1.0, 1.0, -1.0), b), 6.0], [7.0, over(times(1.0, 8.0, 1.0), b)]]),
        RatMat([[over(times(1.0, 6.0, -2.0), b), 2.0], [-1.0, over(times(3.0, 5.0, 9.0), b)]]),
    )
    return ExampleCase(
        id=4,
        mode="mimo",
        name="2x2 MIMO pair with a complex pair of unstable zeros",
        plants=(P0, P1),
        sigma={"Sigma": [[0.4, 0.2], [0.3, -0.5], [0.8, -0.1], [0.6, -0.2]], "label": "4x2 printed"},
        unstable_zeros=(0.2322, complex(0.9862, 3.5291), complex(0.9862, -3.5291)),
        reference=ReferenceMatrix(
            (
                ((1.0, 0.923, 0.6752, 0.1567, 0.02193), (-0.325, 1.821, 0.3929, -0.0064, -0.0111)),
                ((-0.5581, 0.9026, -0.2138, -0.01, -0.03345), (0.2714, 3.214, 1.429, 0.1429, 0.017)),
            ),
            (1.0, 0.3846, 0.6211, 0.1852, 0.0186),
        ),
    )


EXAMPLES = {1: example_1, 2: example_2, 3: example_3, 4: example_4}


def get_example(example_id: int) -> ExampleCase:
    """
    Built-in example by number

    Raises:
        ConfigError: unknown example number
    """
    try:
        return EXAMPLES[int(example_id)]()
    except (KeyError, ValueError):
        raise ConfigError(f"unknown example {example_id!r}; choose from {sorted(EXAMPLES)}")


def sigma_preset(example_id: int) -> List[Dict[str, Any]]:
    """Σ list for sweep-sigma (falls back to the single default Σ)"""
    case = get_example(example_id)
    return list(case.sigma_sweep) or [case.sigma]
