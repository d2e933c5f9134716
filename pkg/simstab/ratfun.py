#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Polynomial and rational-function algebra

Dense ascending-coefficient polynomials (Poly), ratios of polynomials (RatFun),
matrix polynomials (MatPoly), matrices of rational functions (RatMat) and
Möbius variable changes (MobiusMap). Every value is immutable after
construction, so objects can be shared freely between sweep workers.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.polynomial.polynomial as npoly

from .config import section
from .errors import DimensionMismatch, MapPole, PoleAtEvaluationPoint, UnsupportedDimension
from .rootfind import RootCluster, cluster_roots, poly_roots
from .utils.logger import get_logger

logger = get_logger(__name__)

Scalar = Union[int, float, complex]

# cancellation threshold for coefficients produced by add/sub
_CANCEL_EPS = 1e-13
MAX_COFACTOR_DIM = 8


def _as_coeff_array(coeffs: Any) -> np.ndarray:
    if isinstance(coeffs, Poly):
        return coeffs.coeffs
    arr = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
    nonzero = np.flatnonzero(arr)
    if nonzero.size == 0:
        return arr[:0].copy()
    return arr[: nonzero[-1] + 1].copy()


class Poly:
    """
    Univariate polynomial with complex coefficients, ascending degree order

    The zero polynomial has an empty coefficient array and degree -1.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Any = ()):
        arr = _as_coeff_array(coeffs)
        arr.setflags(write=False)
        self._coeffs = arr

    # --- constructors ---

    @classmethod
    def constant(cls, c: Scalar) -> "Poly":
        return cls([c])

    @classmethod
    def from_roots(cls, roots: Iterable[complex], gain: Scalar = 1.0) -> "Poly":
        roots = list(roots)
        if not roots:
            return cls([gain])
        coeffs = npoly.polyfromroots(np.asarray(roots, dtype=complex)) * gain
        p = cls(coeffs)
        roots_arr = np.asarray(roots, dtype=complex)
        # conjugate-closed root sets give real polynomials
        if np.isrealobj(gain) or abs(np.imag(gain)) == 0:
            if np.allclose(np.sort_complex(roots_arr), np.sort_complex(roots_arr.conj()), atol=1e-12):
                p = cls(p.coeffs.real)
        return p

    @classmethod
    def from_clusters(cls, clusters: Sequence[RootCluster]) -> "Poly":
        roots: List[complex] = []
        for c in clusters:
            roots.extend([c.location] * c.multiplicity)
        return cls.from_roots(roots)

    # --- basic properties ---

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def degree(self) -> int:
        return len(self._coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self._coeffs) == 0

    @property
    def leading(self) -> complex:
        return complex(self._coeffs[-1]) if not self.is_zero else 0j

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self._coeffs))) if not self.is_zero else 0.0

    @property
    def is_real(self) -> bool:
        if self.is_zero:
            return True
        return bool(np.all(np.abs(self._coeffs.imag) <= 1e-12 * max(1.0, self.scale)))

    def as_real(self, tol: Optional[float] = None) -> "Poly":
        """Zero imaginary parts below tol; larger imaginary parts are an error"""
        if tol is None:
            tol = section("tolerances")["real_part"]
        if self.is_zero:
            return self
        worst = float(np.max(np.abs(self._coeffs.imag)))
        if worst > tol * max(1.0, self.scale):
            raise ValueError(f"polynomial is not real: imaginary residue {worst:.3g}")
        return Poly(self._coeffs.real)

    # --- evaluation ---

    def __call__(self, x: Any) -> Any:
        if self.is_zero:
            return np.zeros_like(np.asarray(x, dtype=complex)) if np.ndim(x) else 0j
        return npoly.polyval(x, self._coeffs)

    def derivative(self, order: int = 1) -> "Poly":
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        if order == 0 or self.is_zero:
            return self
        if order > self.degree:
            return Poly()
        return Poly(npoly.polyder(self._coeffs, order))

    def taylor(self, x0: complex, order: int) -> np.ndarray:
        """Coefficients t_k = p^(k)(x0)/k!, k = 0..order"""
        out = np.zeros(order + 1, dtype=complex)
        for k in range(min(order, self.degree) + 1):
            out[k] = self.derivative(k)(x0) / math.factorial(k)
        return out

    def roots(self) -> List[complex]:
        return poly_roots(self)

    # --- arithmetic ---

    def __neg__(self) -> "Poly":
        return Poly(-self._coeffs)

    def _combine(self, other: "Poly", sign: float, eps: float = _CANCEL_EPS) -> "Poly":
        a, b = self._coeffs, other._coeffs
        n = max(len(a), len(b))
        pa = np.zeros(n, dtype=complex)
        pb = np.zeros(n, dtype=complex)
        pa[: len(a)] = a
        pb[: len(b)] = sign * b
        total = pa + pb
        # trailing coefficients that cancelled to roundoff level are dropped
        magnitude = np.abs(pa) + np.abs(pb)
        last = n - 1
        while last >= 0 and abs(total[last]) <= eps * magnitude[last]:
            last -= 1
        return Poly(total[: last + 1])

    def __add__(self, other: Any) -> "Poly":
        if isinstance(other, (RatFun, RatMat)):
            return NotImplemented
        return self._combine(_as_poly(other), 1.0)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Poly":
        if isinstance(other, (RatFun, RatMat)):
            return NotImplemented
        return self._combine(_as_poly(other), -1.0)

    def __rsub__(self, other: Any) -> "Poly":
        return _as_poly(other)._combine(self, -1.0)

    def __mul__(self, other: Any) -> "Poly":
        if isinstance(other, (RatFun, RatMat)):
            return NotImplemented
        other = _as_poly(other)
        if self.is_zero or other.is_zero:
            return Poly()
        return Poly(npoly.polymul(self._coeffs, other._coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Poly([1.0])
        for _ in range(k):
            result = result * self
        return result

    def __truediv__(self, other: Any) -> Any:
        if isinstance(other, (int, float, complex, np.number)):
            return Poly(self._coeffs / other)
        return RatFun(self, other)

    def divmod(self, other: "Poly") -> Tuple["Poly", "Poly"]:
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero:
            return Poly(), Poly()
        quo, rem = npoly.polydiv(self._coeffs, other._coeffs)
        return Poly(quo), Poly(rem)

    def conj(self) -> "Poly":
        return Poly(self._coeffs.conj())

    def monic(self) -> "Poly":
        if self.is_zero:
            return self
        return Poly(self._coeffs / self._coeffs[-1])

    def allclose(self, other: "Poly", rtol: float = 1e-12) -> bool:
        if self.degree != other.degree:
            return False
        if self.is_zero:
            return True
        return bool(np.allclose(self._coeffs, other._coeffs, rtol=rtol, atol=rtol * self.scale))

    def deflate(self, factor: "Poly") -> Tuple["Poly", float]:
        """
        Divide out a known factor

        Returns:
            (quotient, relative remainder norm)
        """
        quo, rem = self.divmod(factor)
        residual = rem.scale / max(self.scale, 1e-300)
        return quo, residual

    def mobius_numerator(self, m: "MobiusMap", degree: int) -> "Poly":
        """Numerator of p(m(x)) after multiplying by (c x + d)^degree"""
        num = Poly([m.b, m.a])
        den = Poly([m.d, m.c])
        total = Poly()
        for i, c in enumerate(self._coeffs):
            if c != 0:
                total = total + (num ** i) * (den ** (degree - i)) * c
        return total

    def to_list(self) -> List[Any]:
        if self.is_real:
            return [float(c) for c in self._coeffs.real]
        return [[float(c.real), float(c.imag)] for c in self._coeffs]

    def __repr__(self) -> str:
        return f"Poly({np.array2string(self._coeffs, precision=6)})"


def _as_poly(value: Any) -> Poly:
    if isinstance(value, Poly):
        return value
    return Poly(value)


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    """
    Coefficient arithmetic on two polynomials

    Args:
        a, b: Operands
        op: "add", "sub" or "mul"
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown polynomial operation: {op}")


def poly_difference(a: Poly, b: Poly, rel_tol: float = _CANCEL_EPS) -> Poly:
    """a − b, dropping leading coefficients that cancel to rel_tol of the operands"""
    return a._combine(b, -1.0, rel_tol)


def poly_derivative(p: Poly, order: int) -> Poly:
    return p.derivative(order)


def poly_lcm(polys: Sequence[Poly], tol: Optional[float] = None) -> Poly:
    """
    Monic least common multiple of polynomials, built from clustered roots

    A root location common to several inputs appears with its largest multiplicity.
    """
    if tol is None:
        tol = section("tolerances")["cluster"]
    merged: List[RootCluster] = []
    all_real = True
    for p in polys:
        if p.is_zero:
            raise ZeroDivisionError("lcm with the zero polynomial")
        all_real = all_real and p.is_real
        if p.degree < 1:
            continue
        for c in cluster_roots(p.roots(), tol, real_input=p.is_real):
            for idx, m in enumerate(merged):
                if abs(m.location - c.location) <= tol * (1.0 + abs(c.location)):
                    if c.multiplicity > m.multiplicity:
                        merged[idx] = RootCluster(m.location, c.multiplicity, m.radius)
                    break
            else:
                merged.append(c)
    result = Poly.from_clusters(merged)
    return result.as_real() if all_real else result


class RatFun:
    """Ratio num/den of two polynomials"""

    __slots__ = ("num", "den")

    def __init__(self, num: Any = 0.0, den: Any = 1.0):
        num_p = _as_poly(num)
        den_p = _as_poly(den)
        if den_p.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        object.__setattr__(self, "num", num_p)
        object.__setattr__(self, "den", den_p)

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("RatFun is immutable")

    # --- constructors ---

    @classmethod
    def constant(cls, c: Scalar) -> "RatFun":
        return cls(Poly([c]), Poly([1.0]))

    @classmethod
    def variable(cls) -> "RatFun":
        return cls(Poly([0.0, 1.0]), Poly([1.0]))

    @classmethod
    def from_roots(
        cls,
        zeros: Sequence[complex],
        poles: Sequence[complex],
        gain: Scalar = 1.0
    ) -> "RatFun":
        return cls(Poly.from_roots(zeros, gain), Poly.from_roots(poles))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RatFun":
        return cls(_coeffs_from_json(data["num"]), _coeffs_from_json(data.get("den", [1.0])))

    # --- properties ---

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_real(self) -> bool:
        return self.num.is_real and self.den.is_real

    @property
    def relative_degree(self) -> int:
        if self.num.is_zero:
            return 10 ** 9
        return self.den.degree - self.num.degree

    @property
    def is_proper(self) -> bool:
        return self.relative_degree >= 0

    def value_at_infinity(self) -> complex:
        rel = self.relative_degree
        if rel > 0:
            return 0j
        if rel < 0:
            return complex(np.inf)
        return self.num.leading / self.den.leading

    def zeros(self) -> List[complex]:
        return self.num.roots() if self.num.degree >= 1 else []

    def poles(self) -> List[complex]:
        return self.den.roots() if self.den.degree >= 1 else []

    def as_real(self) -> "RatFun":
        return RatFun(self.num.as_real(), self.den.as_real())

    # --- evaluation ---

    def __call__(self, x: Any) -> Any:
        if np.ndim(x) == 0:
            d = self.den(x)
            tol = section("tolerances")["pole"] * max(1.0, self.den.scale)
            if abs(d) <= tol:
                raise PoleAtEvaluationPoint(f"denominator vanishes at {complex(x):.6g}")
            return self.num(x) / d
        return self.num(x) / self.den(x)

    def derivs(self, s0: complex, upto: int) -> np.ndarray:
        return ratfun_eval_derivs(self, s0, upto)

    def taylor(self, s0: complex, order: int) -> np.ndarray:
        """Taylor coefficients f^(k)(s0)/k!, k = 0..order"""
        n = self.num.taylor(s0, order)
        d = self.den.taylor(s0, order)
        tol = section("tolerances")["pole"] * max(1.0, self.den.scale)
        if abs(d[0]) <= tol:
            raise PoleAtEvaluationPoint(f"denominator vanishes at {complex(s0):.6g}")
        c = np.zeros(order + 1, dtype=complex)
        for k in range(order + 1):
            acc = n[k]
            for j in range(1, k + 1):
                acc -= d[j] * c[k - j]
            c[k] = acc / d[0]
        return c

    # --- arithmetic ---

    def _coerce(self, other: Any) -> "RatFun":
        if isinstance(other, RatFun):
            return other
        if isinstance(other, Poly):
            return RatFun(other, Poly([1.0]))
        return RatFun.constant(other)

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __add__(self, other: Any) -> "RatFun":
        if isinstance(other, RatMat):
            return NotImplemented
        other = self._coerce(other)
        if self.den.allclose(other.den):
            return RatFun(self.num + other.num, self.den)
        return RatFun(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "RatFun":
        if isinstance(other, RatMat):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "RatFun":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "RatFun":
        if isinstance(other, RatMat):
            return NotImplemented
        if isinstance(other, (int, float, complex, np.number)):
            return RatFun(self.num * other, self.den)
        other = self._coerce(other)
        return RatFun(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "RatFun":
        if isinstance(other, (int, float, complex, np.number)):
            return RatFun(self.num, self.den * other)
        other = self._coerce(other)
        if other.num.is_zero:
            raise ZeroDivisionError("division by the zero rational function")
        return RatFun(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other: Any) -> "RatFun":
        return self._coerce(other) / self

    def __pow__(self, k: int) -> "RatFun":
        if k < 0:
            return RatFun.constant(1.0) / (self ** (-k))
        return RatFun(self.num ** k, self.den ** k)

    # --- transformations ---

    def normalize(self, tol: Optional[float] = None) -> "RatFun":
        return ratfun_normalize(self, tol)

    def compose(self, m: "MobiusMap") -> "RatFun":
        return ratfun_mobius_compose(self, m)

    def conj(self) -> "RatFun":
        return RatFun(self.num.conj(), self.den.conj())

    def to_dict(self) -> Dict[str, Any]:
        return {"num": self.num.to_list(), "den": self.den.to_list()}

    def __repr__(self) -> str:
        return f"RatFun(num={self.num!r}, den={self.den!r})"


def _coeffs_from_json(values: Sequence[Any]) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            out.append(complex(v[0], v[1]))
        elif isinstance(v, dict):
            out.append(complex(v.get("re", 0.0), v.get("im", 0.0)))
        else:
            out.append(complex(v))
    return np.asarray(out, dtype=complex)


def ratfun_eval_derivs(f: RatFun, s0: complex, upto: int) -> np.ndarray:
    """
    Value and derivatives f(s0), f'(s0), ..., f^(upto)(s0)

    Uses the quotient recursion on Taylor coefficients (Leibniz rule applied to
    num = f * den).

    Raises:
        PoleAtEvaluationPoint: den(s0) is numerically zero
    """
    if upto < 0:
        raise ValueError("upto must be nonnegative")
    c = f.taylor(s0, upto)
    factorials = np.array([math.factorial(k) for k in range(upto + 1)], dtype=float)
    return c * factorials


@dataclass(frozen=True)
class NormalizationReport:
    cancelled: Tuple[complex, ...]
    near_pairs: Tuple[Tuple[complex, complex], ...]


def normalize_with_report(
    f: RatFun,
    tol: Optional[float] = None,
    warn: Optional[float] = None
) -> Tuple[RatFun, NormalizationReport]:
    """
    Cancel common roots of numerator and denominator

    Args:
        f: Rational function
        tol: Cancellation distance, scaled by (1 + |root|)
        warn: Pairs closer than this (but above tol) are reported as near cancellations

    Returns:
        (normalized rational function with monic denominator, report)
    """
    if tol is None:
        tol = section("tolerances")["cancel"]
    if warn is None:
        warn = section("verification")["near_cancel_warn"]
    real = f.is_real

    if f.num.is_zero:
        return RatFun(Poly(), Poly([1.0])), NormalizationReport((), ())

    num, den = f.num, f.den
    cancelled: List[complex] = []
    near: List[Tuple[complex, complex]] = []
    if num.degree >= 1 and den.degree >= 1:
        num_roots = num.roots()
        den_roots = den.roots()
        used = [False] * len(den_roots)
        for r in num_roots:
            best, best_dist = -1, np.inf
            for j, q in enumerate(den_roots):
                if not used[j]:
                    dist = abs(r - q)
                    if dist < best_dist:
                        best, best_dist = j, dist
            if best < 0:
                continue
            scale = 1.0 + abs(r)
            if best_dist <= tol * scale:
                used[best] = True
                cancelled.append(0.5 * (r + den_roots[best]))
            elif best_dist <= warn * scale:
                near.append((r, den_roots[best]))

    if cancelled:
        common = Poly.from_roots(cancelled)
        num, _ = num.deflate(common)
        den, _ = den.deflate(common)
        logger.debug(f"cancelled {len(cancelled)} common root(s)")
    for r, q in near:
        logger.warning(f"near pole/zero cancellation kept: zero {r:.6g}, pole {q:.6g}")

    lead = den.leading
    num, den = num / lead, den / lead
    if real:
        num, den = Poly(num.coeffs.real), Poly(den.coeffs.real)
    return RatFun(num, den), NormalizationReport(tuple(cancelled), tuple(near))


def ratfun_normalize(f: RatFun, tol: Optional[float] = None) -> RatFun:
    normalized, _ = normalize_with_report(f, tol)
    return normalized


@dataclass(frozen=True)
class MobiusMap:
    """Bilinear map w = (a x + b) / (c x + d)"""
    a: complex
    b: complex
    c: complex
    d: complex

    def __call__(self, x: complex) -> complex:
        x = complex(x)
        den = self.c * x + self.d
        if den == 0:
            raise MapPole(f"Möbius map has a pole at {x:.6g}")
        return (self.a * x + self.b) / den

    @property
    def pole(self) -> Optional[complex]:
        if self.c == 0:
            return None
        return complex(-self.d / self.c)

    def compose(self, inner: "MobiusMap") -> "MobiusMap":
        """self ∘ inner"""
        m = np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)
        n = np.array([[inner.a, inner.b], [inner.c, inner.d]], dtype=complex)
        p = m @ n
        return MobiusMap(*(complex(v) for v in p.ravel()))

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def as_ratfun(self) -> RatFun:
        return RatFun(Poly([self.b, self.a]), Poly([self.d, self.c]))

    def taylor(self, x0: complex, order: int) -> np.ndarray:
        return self.as_ratfun().taylor(x0, order)

    @classmethod
    def disc_automorphism(cls, center: complex) -> "MobiusMap":
        """z ↦ (z − center) / (1 − conj(center) z); sends center to 0"""
        center = complex(center)
        return cls(1.0 + 0j, -center, -center.conjugate(), 1.0 + 0j)


# z = (1 - s)/(1 + s) and its inverse s = (1 - z)/(1 + z) share coefficients
S_TO_Z = MobiusMap(-1.0 + 0j, 1.0 + 0j, 1.0 + 0j, 1.0 + 0j)
Z_TO_S = MobiusMap(-1.0 + 0j, 1.0 + 0j, 1.0 + 0j, 1.0 + 0j)
PLOT_MAP = MobiusMap(1.0 + 0j, 1.0 + 0j, -1.0 + 0j, 1.0 + 0j)

_DIRECTIONS = {"s_to_z": S_TO_Z, "z_to_s": Z_TO_S, "plot": PLOT_MAP}


def mobius(direction: str, v: complex) -> complex:
    """
    Scalar Möbius map

    Args:
        direction: "s_to_z" (z = (1-s)/(1+s)), "z_to_s" (s = (1-z)/(1+z)) or "plot"
        v: Point to map

    Raises:
        MapPole: v is the pole of the map
    """
    try:
        return _DIRECTIONS[direction](v)
    except KeyError:
        raise ValueError(f"unknown Möbius direction: {direction}") from None


def ratfun_mobius_compose(f: RatFun, direction: Union[str, MobiusMap]) -> RatFun:
    """
    Rational substitution g(x) = f(m(x))

    The common (c x + d)^N factor of numerator and denominator is cleared
    symbolically, N = max(deg num, deg den).
    """
    m = _DIRECTIONS[direction] if isinstance(direction, str) else direction
    degree = max(f.num.degree, f.den.degree, 0)
    num = f.num.mobius_numerator(m, degree) if not f.num.is_zero else Poly()
    den = f.den.mobius_numerator(m, degree)
    if den.is_zero:
        raise ZeroDivisionError("Möbius substitution annihilated the denominator")
    return RatFun(num, den)


class MatPoly:
    """Matrix polynomial sum_k C_k x^k with square ℓ×ℓ coefficients"""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Any):
        arr = np.asarray(coeffs, dtype=complex)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[1] < 1:
            raise DimensionMismatch(f"matrix polynomial coefficients must be k×ℓ×ℓ, got {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        self._coeffs = arr

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def dim(self) -> int:
        return self._coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self._coeffs.shape[0] - 1

    def __call__(self, x: complex) -> np.ndarray:
        result = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self._coeffs[::-1]:
            result = result * x + c
        return result

    def taylor(self, x0: complex, order: int) -> List[np.ndarray]:
        """Matrix Taylor coefficients C^(k)(x0)/k!, k = 0..order"""
        out = []
        for k in range(order + 1):
            acc = np.zeros((self.dim, self.dim), dtype=complex)
            for q in range(k, self.degree + 1):
                acc += math.comb(q, k) * x0 ** (q - k) * self._coeffs[q]
            out.append(acc)
        return out

    def entry(self, i: int, j: int) -> Poly:
        return Poly(self._coeffs[:, i, j])

    def grid(self) -> List[List[Poly]]:
        return [[self.entry(i, j) for j in range(self.dim)] for i in range(self.dim)]

    def __matmul__(self, other: "MatPoly") -> "MatPoly":
        if other.dim != self.dim:
            raise DimensionMismatch("matrix polynomial dimensions differ")
        out = np.zeros((self.degree + other.degree + 1, self.dim, self.dim), dtype=complex)
        for i, a in enumerate(self._coeffs):
            for j, b in enumerate(other._coeffs):
                out[i + j] += a @ b
        return MatPoly(out)

    def det(self) -> Poly:
        return _poly_det(self.grid())

    def adj(self) -> List[List[Poly]]:
        return _poly_adj(self.grid())


def _poly_det(grid: List[List[Poly]]) -> Poly:
    """Determinant by memoized Laplace expansion along rows"""
    n = len(grid)
    if n == 0:
        return Poly([1.0])
    if n > MAX_COFACTOR_DIM:
        raise UnsupportedDimension(f"cofactor expansion limited to dimension {MAX_COFACTOR_DIM}")

    @lru_cache(maxsize=None)
    def minor(row: int, cols: int) -> Poly:
        if row == n:
            return Poly([1.0])
        total = Poly()
        sign = 1.0
        for col in range(n):
            if cols & (1 << col):
                continue
            entry = grid[row][col]
            if not entry.is_zero:
                total = total + entry * minor(row + 1, cols | (1 << col)) * sign
            sign = -sign
        return total

    return minor(0, 0)


def _poly_adj(grid: List[List[Poly]]) -> List[List[Poly]]:
    n = len(grid)
    if n == 1:
        return [[Poly([1.0])]]
    adj = [[Poly() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [[grid[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            cof = _poly_det(sub)
            # adjugate is the transposed cofactor matrix
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return adj


class RatMat:
    """Rectangular grid of rational functions"""

    __slots__ = ("_grid",)

    def __init__(self, grid: Sequence[Sequence[Any]]):
        rows = [[e if isinstance(e, RatFun) else RatFun(_as_poly(e)) if isinstance(e, Poly)
                 else RatFun.constant(e) for e in row] for row in grid]
        if not rows or not rows[0] or any(len(r) != len(rows[0]) for r in rows):
            raise DimensionMismatch("RatMat requires a nonempty rectangular grid")
        object.__setattr__(self, "_grid", tuple(tuple(r) for r in rows))

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("RatMat is immutable")

    # --- constructors ---

    @classmethod
    def identity(cls, m: int) -> "RatMat":
        return cls.from_constant(np.eye(m))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RatMat":
        return cls.from_constant(np.zeros((rows, cols)))

    @classmethod
    def from_constant(cls, matrix: Any) -> "RatMat":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls([[RatFun.constant(v) for v in row] for row in matrix])

    @classmethod
    def block(cls, blocks: Sequence[Sequence["RatMat"]]) -> "RatMat":
        grid: List[List[RatFun]] = []
        for block_row in blocks:
            height = block_row[0].shape[0]
            if any(b.shape[0] != height for b in block_row):
                raise DimensionMismatch("block rows must share a height")
            for i in range(height):
                row: List[RatFun] = []
                for b in block_row:
                    row.extend(b.row(i))
                grid.append(row)
        return cls(grid)

    @classmethod
    def from_dict(cls, data: Sequence[Sequence[Dict[str, Any]]]) -> "RatMat":
        return cls([[RatFun.from_dict(e) for e in row] for row in data])

    # --- access ---

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self._grid), len(self._grid[0])

    @property
    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def __getitem__(self, index: Tuple[int, int]) -> RatFun:
        i, j = index
        return self._grid[i][j]

    def row(self, i: int) -> List[RatFun]:
        return list(self._grid[i])

    def entries(self) -> List[List[RatFun]]:
        return [list(r) for r in self._grid]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RatMat":
        return RatMat([[self._grid[i][j] for j in cols] for i in rows])

    def __call__(self, s: complex) -> np.ndarray:
        rows, cols = self.shape
        out = np.empty((rows, cols), dtype=complex)
        for i in range(rows):
            for j in range(cols):
                out[i, j] = self._grid[i][j](s)
        return out

    @property
    def is_real(self) -> bool:
        return all(e.is_real for row in self._grid for e in row)

    # --- algebra ---

    def map(self, fn) -> "RatMat":
        return RatMat([[fn(e) for e in row] for row in self._grid])

    def normalize(self, tol: Optional[float] = None) -> "RatMat":
        return self.map(lambda e: ratfun_normalize(e, tol))

    def transpose(self) -> "RatMat":
        rows, cols = self.shape
        return RatMat([[self._grid[i][j] for i in range(rows)] for j in range(cols)])

    def __add__(self, other: "RatMat") -> "RatMat":
        return ratmat_algebra(self, other, "add")

    def __sub__(self, other: "RatMat") -> "RatMat":
        return ratmat_algebra(self, other.scale(-1.0), "add")

    def __matmul__(self, other: "RatMat") -> "RatMat":
        return ratmat_algebra(self, other, "mul")

    def scale(self, factor: Union[Scalar, RatFun]) -> "RatMat":
        return self.map(lambda e: e * factor)

    def left_constant(self, matrix: np.ndarray) -> "RatMat":
        """Constant matrix times self, keeping shared denominators shared"""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        rows, cols = self.shape
        if matrix.shape[1] != rows:
            raise DimensionMismatch("constant factor is not conformable")
        grid = []
        for i in range(matrix.shape[0]):
            row = []
            for j in range(cols):
                acc = RatFun.constant(0.0)
                for k in range(rows):
                    if matrix[i, k] != 0:
                        acc = acc + self._grid[k][j] * complex(matrix[i, k])
                row.append(acc)
            grid.append(row)
        return RatMat(grid)

    def right_constant(self, matrix: np.ndarray) -> "RatMat":
        return self.transpose().left_constant(np.asarray(matrix).T).transpose()

    def adj_det(self, normalize: bool = True) -> Tuple["RatMat", RatFun]:
        return ratmat_adj_det(self, normalize=normalize)

    def common_denominator(self) -> Tuple[List[List[Poly]], Poly]:
        """(polynomial numerators, d) with self = numerators / d entrywise"""
        d = poly_lcm([e.den for row in self._grid for e in row])
        grid = []
        for row in self._grid:
            grid.append([_scale_to(e, d) for e in row])
        return grid, d

    def to_dict(self) -> List[List[Dict[str, Any]]]:
        return [[e.to_dict() for e in row] for row in self._grid]

    def __repr__(self) -> str:
        return f"RatMat(shape={self.shape})"


def _scale_to(f: RatFun, d: Poly) -> Poly:
    """Numerator of f over the common denominator d (d must be a multiple of f.den)"""
    factor, residual = d.deflate(f.den)
    if residual > 1e-6:
        logger.debug(f"common denominator division left relative remainder {residual:.2e}")
    return f.num * factor


def ratmat_algebra(A: RatMat, B: RatMat, op: str) -> RatMat:
    """
    Sum or product of two rational matrices

    Raises:
        DimensionMismatch: operands are not conformable
    """
    ra, ca = A.shape
    rb, cb = B.shape
    if op == "add":
        if (ra, ca) != (rb, cb):
            raise DimensionMismatch(f"cannot add {A.shape} and {B.shape}")
        return RatMat([[A[i, j] + B[i, j] for j in range(ca)] for i in range(ra)])
    if op == "mul":
        if ca != rb:
            raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
        grid = []
        for i in range(ra):
            row = []
            for j in range(cb):
                acc: Optional[RatFun] = None
                for k in range(ca):
                    if A[i, k].is_zero or B[k, j].is_zero:
                        continue
                    term = A[i, k] * B[k, j]
                    acc = term if acc is None else acc + term
                row.append(acc if acc is not None else RatFun.constant(0.0))
            grid.append(row)
        return RatMat(grid)
    raise ValueError(f"unknown matrix operation: {op}")


def ratmat_adj_det(M: RatMat, normalize: bool = True) -> Tuple[RatMat, RatFun]:
    """
    Adjugate and determinant of a square rational matrix

    Each row is first brought over its own least common denominator d_r so the
    cofactor expansion runs on polynomials only:
    det M = det Mp / prod d_r and Adj(M)_ij = adj(Mp)_ij / prod_{k≠j} d_k.

    Raises:
        DimensionMismatch: non-square input
        UnsupportedDimension: dimension above the cofactor limit
    """
    n, m = M.shape
    if n != m:
        raise DimensionMismatch(f"adjugate needs a square matrix, got {M.shape}")
    if n > MAX_COFACTOR_DIM:
        raise UnsupportedDimension(f"cofactor expansion limited to dimension {MAX_COFACTOR_DIM}")

    row_dens: List[Poly] = []
    poly_grid: List[List[Poly]] = []
    for i in range(n):
        d = poly_lcm([M[i, j].den for j in range(n)])
        row_dens.append(d)
        poly_grid.append([_scale_to(M[i, j], d) for j in range(n)])

    det_num = _poly_det(poly_grid)
    det_den = Poly([1.0])
    for d in row_dens:
        det_den = det_den * d
    det = RatFun(det_num, det_den)

    adj_poly = _poly_adj(poly_grid)
    grid = []
    for i in range(n):
        row = []
        for j in range(n):
            den = Poly([1.0])
            for k, d in enumerate(row_dens):
                if k != j:
                    den = den * d
            row.append(RatFun(adj_poly[i][j], den))
        grid.append(row)
    adj = RatMat(grid)

    if normalize:
        adj = adj.normalize()
        det = ratfun_normalize(det)
    return adj, det
