#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Root finding for the toolkit

Polynomial roots from the balanced companion matrix, multiplicity clustering,
and half-plane / unit-disc classification of the zeros that drive the
interpolation constraints.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.polynomial.polynomial as npoly
import scipy.linalg

from .config import section
from .errors import BoundaryZero, NonFiniteData, ZeroPolynomial
from .utils.logger import get_logger

if TYPE_CHECKING:
    from .ratfun import Poly, RatFun

logger = get_logger(__name__)

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"


@dataclass(frozen=True)
class RootCluster:
    """A group of numerically coincident roots"""
    location: complex
    multiplicity: int
    radius: float = 0.0

    @property
    def is_real(self) -> bool:
        return self.location.imag == 0.0

    def conjugate(self) -> "RootCluster":
        return RootCluster(self.location.conjugate(), self.multiplicity, self.radius)


def _coeff_array(p: Any) -> np.ndarray:
    coeffs = np.asarray(getattr(p, "coeffs", p), dtype=complex)
    nonzero = np.flatnonzero(coeffs)
    if nonzero.size == 0:
        return coeffs[:0]
    return coeffs[: nonzero[-1] + 1]


def _is_real_array(coeffs: np.ndarray, tol: float = 1e-12) -> bool:
    if coeffs.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    return bool(np.all(np.abs(coeffs.imag) <= tol * scale))


def poly_roots(p: "Poly", polish_steps: int = 2) -> List[complex]:
    """
    All roots of a polynomial, with repetition

    Args:
        p: Poly (or ascending coefficient array)
        polish_steps: Newton steps applied to every root on the original polynomial

    Returns:
        List of complex roots (degree-many)

    Raises:
        ZeroPolynomial: p is identically zero
        NonFiniteData: p has inf or nan coefficients
    """
    coeffs = _coeff_array(p)
    if not np.all(np.isfinite(coeffs)):
        raise NonFiniteData(f"polynomial of degree {coeffs.size - 1} has non-finite coefficients")
    if coeffs.size == 0:
        raise ZeroPolynomial("roots of the zero polynomial are undefined")
    if coeffs.size == 1:
        return []

    # Exact zeros at the origin are split off to keep the companion matrix well scaled
    n_zero = int(np.flatnonzero(coeffs)[0])
    reduced = coeffs[n_zero:]
    roots: List[complex] = [0j] * n_zero
    if reduced.size > 1:
        if _is_real_array(reduced):
            companion = npoly.polycompanion(reduced.real)
        else:
            companion = npoly.polycompanion(reduced)
        if not np.all(np.isfinite(companion)):
            raise NonFiniteData(f"companion matrix of a degree-{reduced.size - 1} polynomial overflows")
        # geev balances the matrix before the QR iteration
        eigs = scipy.linalg.eigvals(companion, check_finite=False)
        if not np.all(np.isfinite(eigs)):
            raise NonFiniteData(f"eigenvalue solver returned non-finite roots for degree {reduced.size - 1}")
        deriv = npoly.polyder(coeffs)
        for r in eigs:
            roots.append(_polish(coeffs, deriv, complex(r), polish_steps))

    if _is_real_array(coeffs):
        roots = _symmetrize(roots)
    return roots


def _polish(coeffs: np.ndarray, deriv: np.ndarray, r: complex, steps: int) -> complex:
    value = npoly.polyval(r, coeffs)
    for _ in range(steps):
        slope = npoly.polyval(r, deriv)
        if slope == 0:
            break
        candidate = r - value / slope
        candidate_value = npoly.polyval(candidate, coeffs)
        # keep the step only when it improves the residual (multiple roots stall otherwise)
        if abs(candidate_value) >= abs(value):
            break
        r, value = candidate, candidate_value
    return complex(r)


def _symmetrize(roots: List[complex], tol: float = 1e-9) -> List[complex]:
    """Force exact conjugate symmetry on the roots of a real polynomial"""
    out: List[complex] = []
    pending = sorted(roots, key=lambda r: (r.real, r.imag))
    used = [False] * len(pending)
    for i, r in enumerate(pending):
        if used[i]:
            continue
        used[i] = True
        if abs(r.imag) <= tol * (1.0 + abs(r)):
            out.append(complex(r.real, 0.0))
            continue
        # find the closest unused conjugate partner
        best, best_dist = -1, np.inf
        for j in range(i + 1, len(pending)):
            if used[j]:
                continue
            dist = abs(pending[j] - r.conjugate())
            if dist < best_dist:
                best, best_dist = j, dist
        if best >= 0 and best_dist <= 1e-6 * (1.0 + abs(r)):
            used[best] = True
            mid = 0.5 * (r + pending[best].conjugate())
            out.append(complex(mid.real, abs(mid.imag)))
            out.append(complex(mid.real, -abs(mid.imag)))
        else:
            out.append(r)
    return out


def cluster_roots(
    roots: Sequence[complex],
    tol: Optional[float] = None,
    real_input: bool = False
) -> List[RootCluster]:
    """
    Greedy multiplicity clustering

    Args:
        roots: Roots with repetition
        tol: Clustering distance, scaled by (1 + |root|)
        real_input: Snap near-real cluster centroids onto the real axis

    Returns:
        Clusters sorted by decreasing real part, then imaginary part

    Raises:
        NonFiniteData: a root is inf or nan
    """
    if tol is None:
        tol = section("tolerances")["cluster"]
    if not all(np.isfinite(complex(r)) for r in roots):
        raise NonFiniteData("cannot cluster non-finite roots")
    remaining = sorted((complex(r) for r in roots), key=lambda r: (-r.real, r.imag))
    clusters: List[RootCluster] = []
    while remaining:
        seed = remaining[0]
        limit = tol * (1.0 + abs(seed))
        members = [r for r in remaining if abs(r - seed) <= limit]
        remaining = [r for r in remaining if abs(r - seed) > limit]
        centroid = complex(np.mean(members))
        if real_input and abs(centroid.imag) <= limit:
            centroid = complex(centroid.real, 0.0)
        radius = float(max(abs(m - centroid) for m in members))
        clusters.append(RootCluster(centroid, len(members), radius))
    clusters.sort(key=lambda c: (-c.location.real, c.location.imag))
    return clusters


def split_zeros(
    f: "RatFun",
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[List[RootCluster], List[RootCluster]]:
    """
    Cluster the numerator roots of f into (unstable, stable) parts

    Raises:
        BoundaryZero: a root sits on the imaginary axis within the band
    """
    tol = section("tolerances", opts)
    coeffs = _coeff_array(f.num)
    if coeffs.size <= 1:
        return [], []
    real_input = _is_real_array(coeffs)
    clusters = cluster_roots(poly_roots(f.num), tol["cluster"], real_input=real_input)

    unstable: List[RootCluster] = []
    stable: List[RootCluster] = []
    for c in clusters:
        band = tol["boundary_band"] * (1.0 + abs(c.location))
        if abs(c.location.real) <= band:
            raise BoundaryZero(
                f"zero at s={c.location:.6g} lies on the imaginary axis; "
                f"boundary interpolation is not supported"
            )
        (unstable if c.location.real > 0 else stable).append(c)
    return unstable, stable


def unstable_zeros(f: "RatFun", opts: Optional[Dict[str, Any]] = None) -> List[RootCluster]:
    """
    Closed right-half-plane zero clusters of a rational function

    Args:
        f: Normalized rational function
        opts: Tolerance overrides ("cluster", "boundary_band")

    Returns:
        Clusters with Re(location) > 0, conjugate pairs preserved
    """
    unstable, stable = split_zeros(f, opts)
    logger.debug(
        f"numerator zeros: {len(unstable)} unstable cluster(s), {len(stable)} stable cluster(s)"
    )
    return unstable


def plot_map(s: complex) -> complex:
    """Pole-plotting map z = (1+s)/(1-s); s = 1 maps to infinity"""
    s = complex(s)
    if s == 1:
        return complex(np.inf, 0.0)
    return (1.0 + s) / (1.0 - s)


def classify_disc(s_value: complex, band: Optional[float] = None) -> str:
    """
    Classify the image z = (1+s)/(1-s) of an s-plane point against the unit circle

    Args:
        s_value: s-plane point
        band: Tolerance band around |z| = 1

    Returns:
        "inside", "boundary" or "outside"
    """
    if band is None:
        band = section("tolerances")["disc_band"]
    z = plot_map(s_value)
    modulus = abs(z)
    if not np.isfinite(modulus):
        return OUTSIDE
    if modulus < 1.0 - band:
        return INSIDE
    if modulus <= 1.0 + band:
        return BOUNDARY
    return OUTSIDE
