#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Interpolation problem construction

Turns a pair of plants into a normalized analytic interpolation problem:
unstable zeros of the plant-pair determinant become nodes in the unit disc,
the quotient data at those zeros become (square-rooted) targets, and a disc
automorphism plus a range congruence put the problem in the anchored form
(node at z = 0 with value ½I) the CEE solver expects.
"""

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .config import section
from .errors import (
    BoundaryZero,
    DegenerateCommonZero,
    DimensionMismatch,
    EigenvalueOnCut,
    IdenticalPlants,
    NoAdmissibleCompletion,
    NondiagonalizableWithinTolerance,
    NonpositiveRealTarget,
    NonSimpleZero,
    NoSolution,
    PlantFileError,
    RankNotOne,
)
from .ratfun import S_TO_Z, MobiusMap, Poly, RatFun, RatMat
from .rootfind import unstable_zeros
from .utils.logger import get_logger

logger = get_logger(__name__)

NODE_RADIUS_LIMIT = 1.0 - 1e-9


# ---------------------------------------------------------------------------
# plants
# ---------------------------------------------------------------------------

def _stable_poles(f: RatFun, band: float = 0.0) -> bool:
    return all(p.real < -band for p in f.poles())


@dataclass(frozen=True)
class Plant:
    """SISO plant p = x / y with x, y proper and stable"""
    x: RatFun
    y: RatFun

    def validate(self) -> "Plant":
        """
        Check the coprime-factor invariants

        Raises:
            PlantFileError: unstable poles, improper factors, or strictly proper y
        """
        for name, f in (("x", self.x), ("y", self.y)):
            if not f.is_proper:
                raise PlantFileError(f"{name} must be proper (deg num ≤ deg den)")
            if not _stable_poles(f):
                raise PlantFileError(f"{name} has poles outside the open left half-plane")
        if self.y.relative_degree != 0:
            raise PlantFileError("y must be proper but not strictly proper (y(∞) ≠ 0)")
        return self

    @property
    def transfer(self) -> RatFun:
        return (self.x / self.y).normalize()

    def blend(self, other: "Plant", lam: float) -> "Plant":
        """(1 − λ)·self + λ·other, factorwise"""
        return Plant(self.x * (1.0 - lam) + other.x * lam, self.y * (1.0 - lam) + other.y * lam)

    def to_dict(self) -> Dict[str, Any]:
        return {"x": self.x.to_dict(), "y": self.y.to_dict()}


@dataclass(frozen=True)
class MimoPlant:
    """MIMO plant P = N D⁻¹ with N, D square, proper and stable"""
    N: RatMat
    D: RatMat

    @property
    def dim(self) -> int:
        return self.N.shape[0]

    def validate(self, samples: int = 6) -> "MimoPlant":
        """
        Check shapes, stability of every entry, and generic right coprimeness

        Coprimeness is sampled: [N; D] must keep full column rank at points of ℂ₊.
        """
        if not self.N.is_square or self.N.shape != self.D.shape:
            raise DimensionMismatch(f"N {self.N.shape} and D {self.D.shape} must be equal square shapes")
        for label, mat in (("N", self.N), ("D", self.D)):
            for row in mat.entries():
                for f in row:
                    if not f.is_proper or not _stable_poles(f):
                        raise PlantFileError(f"{label} has an improper or unstable entry")
        stacked = RatMat.block([[self.N], [self.D]])
        m = self.dim
        for k in range(samples):
            s = complex(0.3 + 1.7 * k, 0.5 * k)
            sv = scipy.linalg.svdvals(stacked(s))
            if sv[m - 1] <= 1e-10 * max(sv[0], 1.0):
                raise PlantFileError(f"N and D lose rank at s={s:.3g}; factors are not coprime")
        return self

    def blend(self, other: "MimoPlant", lam: float) -> "MimoPlant":
        return MimoPlant(
            self.N.scale(1.0 - lam) + other.N.scale(lam),
            self.D.scale(1.0 - lam) + other.D.scale(lam),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N.to_dict(), "D": self.D.to_dict()}


# ---------------------------------------------------------------------------
# interpolation problems
# ---------------------------------------------------------------------------

def _as_matrix(value: Any) -> np.ndarray:
    return np.atleast_2d(np.asarray(value, dtype=complex)).copy()


@dataclass(frozen=True)
class InterpolationNode:
    """
    Node z in the disc with Taylor targets W[j] = F^(j)(z) / j!
    """
    z: complex
    W: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        mats = tuple(_as_matrix(w) for w in self.W)
        if not mats:
            raise ValueError("an interpolation node needs at least one target")
        shape = mats[0].shape
        if shape[0] != shape[1] or any(w.shape != shape for w in mats):
            raise DimensionMismatch("node targets must be equal square matrices")
        for w in mats:
            w.setflags(write=False)
        object.__setattr__(self, "W", mats)
        if abs(self.z) >= NODE_RADIUS_LIMIT:
            raise ValueError(f"interpolation node z={self.z:.6g} is not inside the unit disc")

    @property
    def n(self) -> int:
        return len(self.W)

    @property
    def ell(self) -> int:
        return self.W[0].shape[0]

    def conjugate(self) -> "InterpolationNode":
        return InterpolationNode(self.z.conjugate(), tuple(w.conj() for w in self.W))


@dataclass(frozen=True)
class Normalization:
    """
    Transforms applied by normalize_problem

    Domain: ζ = φ(z) = (z − center)/(1 − conj(center)·z).
    Range: F_n = T (F − iS) Tᴴ, so F = T⁻¹ F_n T⁻ᴴ + iS.
    """
    center: complex
    T: np.ndarray
    iS: np.ndarray
    auxiliary: bool = False
    aux_value: Optional[float] = None

    @property
    def domain_map(self) -> MobiusMap:
        return MobiusMap.disc_automorphism(self.center)

    @property
    def T_inv(self) -> np.ndarray:
        return np.linalg.inv(self.T)

    def range_forward(self, value: np.ndarray, order: int) -> np.ndarray:
        shifted = value - self.iS if order == 0 else value
        return self.T @ shifted @ self.T.conj().T

    def range_inverse(self, value: np.ndarray, order: int) -> np.ndarray:
        Ti = self.T_inv
        out = Ti @ value @ Ti.conj().T
        return out + self.iS if order == 0 else out


@dataclass(frozen=True)
class InterpolationProblem:
    """Analytic interpolation data for an ℓ×ℓ Carathéodory function"""
    ell: int
    nodes: Tuple[InterpolationNode, ...]
    normalization: Optional[Normalization] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        for node in self.nodes:
            if node.ell != self.ell:
                raise DimensionMismatch(f"node at {node.z:.4g} has size {node.ell}, expected {self.ell}")
        zs = [node.z for node in self.nodes]
        for i in range(len(zs)):
            for j in range(i + 1, len(zs)):
                if abs(zs[i] - zs[j]) <= 1e-12:
                    raise ValueError(f"duplicate interpolation node at z={zs[i]:.6g}")

    @property
    def n(self) -> int:
        """Degree budget Σ n_k − 1"""
        return sum(node.n for node in self.nodes) - 1

    @property
    def is_normalized(self) -> bool:
        if not self.nodes or self.nodes[0].z != 0:
            return False
        return bool(np.allclose(self.nodes[0].W[0], 0.5 * np.eye(self.ell), atol=1e-14))

    def find_node(self, z: complex, tol: float = 1e-12) -> Optional[InterpolationNode]:
        for node in self.nodes:
            if abs(node.z - z) <= tol:
                return node
        return None

    def is_conjugate_closed(self, tol: float = 1e-9) -> bool:
        for node in self.nodes:
            partner = self.find_node(node.z.conjugate(), tol)
            if partner is None or partner.n != node.n:
                return False
            for w, v in zip(node.W, partner.W):
                if np.max(np.abs(w - v.conj())) > tol * max(1.0, np.max(np.abs(w))):
                    return False
        return True

    def with_nodes(self, nodes: Sequence[InterpolationNode]) -> "InterpolationProblem":
        return replace(self, nodes=tuple(nodes))


def enforce_conjugate_symmetry(nodes: Sequence[InterpolationNode]) -> List[InterpolationNode]:
    """Replace each lower-half-plane node's data by the conjugate of its partner's"""
    out: List[InterpolationNode] = []
    for node in nodes:
        if node.z.imag < 0:
            for other in nodes:
                if other.z.imag > 0 and abs(other.z - node.z.conjugate()) <= 1e-9 * (1 + abs(node.z)):
                    node = InterpolationNode(other.z.conjugate(), tuple(w.conj() for w in other.W))
                    break
        elif node.z.imag == 0:
            node = InterpolationNode(node.z, tuple(
                w.real.astype(complex) if np.max(np.abs(w.imag)) <= 1e-12 * max(1.0, np.max(np.abs(w)))
                else w for w in node.W
            ))
        out.append(node)
    return out


# ---------------------------------------------------------------------------
# power series helpers
# ---------------------------------------------------------------------------

def compose_series(outer: Sequence[Any], inner: Sequence[complex]) -> List[Any]:
    """
    Taylor coefficients of F(z₀ + h(ζ)) truncated to len(outer) terms

    Args:
        outer: Coefficients of F at z₀ (scalars or matrices)
        inner: Coefficients of h at ζ₀, inner[0] ignored (treated as 0)
    """
    order = len(outer)
    h = np.zeros(order, dtype=complex)
    h[1:min(order, len(inner))] = np.asarray(inner, dtype=complex)[1:order]
    power = np.zeros(order, dtype=complex)
    power[0] = 1.0
    result = [outer[0] * 0 for _ in range(order)]
    for j in range(order):
        for m in range(order):
            if power[m] != 0:
                result[m] = result[m] + outer[j] * power[m]
        power = np.convolve(power, h)[:order]
    return result


def series_sqrt(h: Sequence[complex]) -> np.ndarray:
    """
    Principal square root of a power series

    Raises:
        NonpositiveRealTarget: h[0] lies on (−∞, 0]
    """
    h = np.asarray(h, dtype=complex)
    h0 = h[0]
    if h0 == 0 or (h0.real <= 0 and abs(h0.imag) <= 1e-12 * abs(h0)):
        raise NonpositiveRealTarget(f"target value {h0:.6g} lies on the nonpositive real axis")
    f = np.zeros_like(h)
    f[0] = np.sqrt(h0)
    for k in range(1, len(h)):
        acc = h[k] - sum(f[i] * f[k - i] for i in range(1, k))
        f[k] = acc / (2.0 * f[0])
    return f


# ---------------------------------------------------------------------------
# SISO constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SisoConstraint:
    """Derivatives 0..n−1 of δ₁/δ₀ required at an unstable zero s"""
    s: complex
    derivatives: Tuple[complex, ...]
    source: str  # "y1/y0" or "x1/x0"

    @property
    def n(self) -> int:
        return len(self.derivatives)

    def taylor(self) -> np.ndarray:
        return np.array([d / math.factorial(i) for i, d in enumerate(self.derivatives)])


def _conjugate_partner(done: Dict[complex, Any], s: complex) -> Any:
    if s.imag >= 0:
        return None
    for key, value in done.items():
        if abs(key - s.conjugate()) <= 1e-9 * (1.0 + abs(s)):
            return value
    return None


def _vanishes(f: RatFun, s: complex, tol: float) -> bool:
    if f.num.is_zero:
        return True
    magnitude = float(np.sum(np.abs(f.num.coeffs) * np.abs(s) ** np.arange(len(f.num.coeffs))))
    return abs(f.num(s)) <= tol * max(magnitude, 1e-300)


def _quotient(a: RatFun, b: RatFun) -> RatFun:
    return RatFun(a.num * b.den, a.den * b.num)


def siso_constraints(
    p0: Plant,
    p1: Plant,
    opts: Optional[Dict[str, Any]] = None
) -> List[SisoConstraint]:
    """
    Interpolation constraints on δ₁/δ₀ from the unstable zeros of x₀y₁ − x₁y₀

    At each zero s_j of multiplicity n_j the targets are the derivatives
    0..n_j−1 of y₁/y₀, or of x₁/x₀ when y₀ vanishes at s_j.

    Raises:
        IdenticalPlants: x₀y₁ − x₁y₀ vanishes identically
        BoundaryZero: a zero lies on the imaginary axis
        DegenerateCommonZero: x₀, x₁, y₀ and y₁ all vanish at s_j
        PlantFileError: x₀ and y₀ share s_j while x₁ or y₁ does not vanish there
    """
    tol = section("tolerances", opts)
    cross = p0.x * p1.y - p1.x * p0.y
    reference = (p0.x * p1.y).num.scale + (p1.x * p0.y).num.scale
    if cross.num.is_zero or cross.num.scale <= 1e-13 * max(reference, 1e-300):
        raise IdenticalPlants("plants coincide: x0*y1 - x1*y0 vanishes identically")

    clusters = unstable_zeros(cross.normalize(tol["cancel"]), opts)
    logger.info(f"x0*y1 - x1*y0 has {len(clusters)} unstable zero cluster(s)")

    computed: Dict[complex, SisoConstraint] = {}
    constraints: List[SisoConstraint] = []
    vanish_tol = 1e-7
    for cluster in clusters:
        s = cluster.location
        partner = _conjugate_partner(computed, s)
        if partner is not None:
            constraints.append(SisoConstraint(
                s, tuple(complex(d).conjugate() for d in partner.derivatives), partner.source
            ))
            continue
        if not _vanishes(p0.y, s, vanish_tol):
            quotient, source = _quotient(p1.y, p0.y), "y1/y0"
        elif not _vanishes(p0.x, s, vanish_tol):
            quotient, source = _quotient(p1.x, p0.x), "x1/x0"
        elif all(_vanishes(f, s, vanish_tol) for f in (p1.x, p1.y)):
            raise DegenerateCommonZero(f"x0, x1, y0 and y1 all vanish at s={s:.6g}")
        else:
            raise PlantFileError(f"x0 and y0 share the unstable zero s={s:.6g}; the first plant is not coprime")
        derivs = quotient.derivs(s, cluster.multiplicity - 1)
        if s.imag == 0:
            derivs = derivs.real.astype(complex)
        constraint = SisoConstraint(s, tuple(complex(d) for d in derivs), source)
        computed[s] = constraint
        constraints.append(constraint)
        logger.debug(f"constraint at s={s:.6g}: {cluster.multiplicity} order(s) from {source}")
    return constraints


def sqrt_transform(
    constraints: Sequence[SisoConstraint],
    direction_map: Union[str, MobiusMap] = "s_to_z"
) -> InterpolationProblem:
    """
    Scalar interpolation problem for f = √(δ₁/δ₀ ∘ s(z))

    Nodes are z_j = (1 − s_j)/(1 + s_j); targets are Taylor coefficients of the
    principal square root, obtained by composing through the inverse map.

    Raises:
        NonpositiveRealTarget: some order-0 target lies on (−∞, 0]
    """
    forward = S_TO_Z if direction_map == "s_to_z" else direction_map
    if not isinstance(forward, MobiusMap):
        raise ValueError(f"unsupported direction map: {direction_map}")
    backward = forward.inverse()

    nodes: List[InterpolationNode] = []
    for c in constraints:
        z = forward(c.s)
        inner = backward.taylor(z, c.n - 1)
        composed = compose_series(list(c.taylor()), inner)
        root = series_sqrt(composed)
        nodes.append(InterpolationNode(z, tuple(np.array([[w]]) for w in root)))
    return InterpolationProblem(1, tuple(enforce_conjugate_symmetry(nodes)))


def siso_problem(
    p0: Plant,
    p1: Plant,
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[InterpolationProblem, List[SisoConstraint], Optional["InfinityAnchor"]]:
    """Square-root interpolation data, rewritten through an InfinityAnchor when x₀y₁ − x₁y₀ vanishes at ∞"""
    constraints = siso_constraints(p0, p1, opts)
    problem = sqrt_transform(constraints)
    value = infinity_value(p0, p1, opts)
    if value is None:
        return problem, constraints, None
    problem, anchor = anchored_problem(problem, value, opts)
    return problem, constraints, anchor


# ---------------------------------------------------------------------------
# the point at infinity
# ---------------------------------------------------------------------------

def series_mul(a: Sequence[complex], b: Sequence[complex]) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return np.convolve(a, np.asarray(b, dtype=complex))[:len(a)]


def series_div(a: Sequence[complex], b: Sequence[complex]) -> np.ndarray:
    """a/b truncated to len(a) terms; b[0] must be nonzero"""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if b[0] == 0:
        raise ZeroDivisionError("power series division by a series vanishing at the expansion point")
    q = np.zeros_like(a)
    for k in range(len(a)):
        acc = a[k] - sum(b[i] * q[k - i] for i in range(1, min(k, len(b) - 1) + 1))
        q[k] = acc / b[0]
    return q


@dataclass(frozen=True)
class InfinityAnchor:
    """
    δ₁/δ₀(∞) = value, imposed when x₀y₁ − x₁y₀ vanishes at s = ∞

    The square root is written F = c·(s(F̃ + 1) + 2aF̃)/(s(F̃ + 1) + 2a) with
    c = √value and a = scale > 0. Every Carathéodory F̃ gives a Carathéodory F
    with F(∞) = c, so the interpolation runs on F̃.
    """
    value: float
    scale: float = 1.0

    @property
    def gain(self) -> float:
        return math.sqrt(self.value)

    def _edges(self, z: complex, order: int) -> Tuple[np.ndarray, np.ndarray]:
        # (1 + z)·(s + 2a) and (1 + z)·s as series in z
        two_a = 2.0 * self.scale
        L = np.zeros(order, dtype=complex)
        R = np.zeros(order, dtype=complex)
        L[0] = (1.0 + two_a) + (two_a - 1.0) * z
        R[0] = 1.0 - z
        if order > 1:
            L[1] = two_a - 1.0
            R[1] = -1.0
        return L, R

    def forward(self, node: InterpolationNode) -> InterpolationNode:
        """
        Node data of F̃ from the data of f = F ∘ s(z)

        Raises:
            NonpositiveRealTarget: the target maps to the pole of the inverse map
        """
        u = np.array([w[0, 0] for w in node.W]) / self.gain
        L, R = self._edges(node.z, node.n)
        den = L - series_mul(u, R)
        if abs(den[0]) <= 1e-14 * (abs(L[0]) + abs(u[0] * R[0])):
            raise NonpositiveRealTarget(f"target at z={node.z:.6g} has no preimage under the infinity anchor")
        tilde = series_div(series_mul(u, L) - R, den)
        return InterpolationNode(node.z, tuple(np.array([[w]]) for w in tilde))

    def restore(self, tilde: RatFun) -> RatFun:
        """F(s) from F̃(s)"""
        s = Poly([0.0, 1.0])
        two_a = 2.0 * self.scale
        total = tilde.num + tilde.den
        return RatFun((s * total + tilde.num * two_a) * self.gain, s * total + tilde.den * two_a)


def infinity_value(p0: Plant, p1: Plant, opts: Optional[Dict[str, Any]] = None) -> Optional[float]:
    """
    (y₁/y₀)(∞) when x₀y₁ − x₁y₀ has a zero at s = ∞, else None

    Raises:
        NonSimpleZero: the zero at ∞ has order two or more
        NonpositiveRealTarget: (y₁/y₀)(∞) is not a positive real number
    """
    tol = section("tolerances", opts)
    cross = (p0.x * p1.y - p1.x * p0.y).normalize(tol["cancel"])
    order = cross.relative_degree
    if order <= 0:
        return None
    if order > 1:
        raise NonSimpleZero(f"x0*y1 - x1*y0 has a zero of order {order} at infinity")
    value = complex(p1.y.value_at_infinity() / p0.y.value_at_infinity())
    if abs(value.imag) > tol["real_part"] * abs(value) or value.real <= 0:
        raise NonpositiveRealTarget(f"(y1/y0)(inf) = {value:.6g} is not a positive real number")
    logger.info(f"x0*y1 - x1*y0 vanishes at infinity; delta ratio pinned to {value.real:.6g} there")
    return float(value.real)


def _min_pick(problem: InterpolationProblem) -> float:
    return float(np.min(np.linalg.eigvalsh(pick_matrix(problem))))


def anchored_problem(
    raw: InterpolationProblem,
    value: float,
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[InterpolationProblem, InfinityAnchor]:
    """
    Square-root data rewritten for F̃, with the anchor scale a picked on a log grid

    The chosen a is the smallest grid value whose Pick matrix keeps
    `pick_ratio` of the smallest Pick eigenvalue of the a → ∞ limit (the data
    divided by √value); the largest feasible a is the fallback.

    Raises:
        NoSolution: no grid value gives a positive definite Pick matrix
    """
    cfg = section("infinity", opts)
    if not raw.nodes:
        return raw, InfinityAnchor(value)
    gain = math.sqrt(value)
    limit = raw.with_nodes([InterpolationNode(nd.z, tuple(w / gain for w in nd.W)) for nd in raw.nodes])
    reference = _min_pick(limit)
    if reference <= section("completion", opts)["pick_tol"]:
        raise NoSolution("the Pick matrix of the interpolation data is not positive definite")

    scales = np.logspace(cfg["scale_min_exp"], cfg["scale_max_exp"], int(cfg["scale_points"]))
    fallback: Optional[Tuple[InterpolationProblem, InfinityAnchor]] = None
    for a in scales:
        anchor = InfinityAnchor(value, float(a))
        try:
            trial = raw.with_nodes(enforce_conjugate_symmetry([anchor.forward(nd) for nd in raw.nodes]))
        except NonpositiveRealTarget:
            continue
        smallest = _min_pick(trial)
        if smallest <= 0:
            continue
        fallback = (trial, anchor)
        if smallest >= cfg["pick_ratio"] * reference:
            logger.info(f"infinity anchor scale a={a:.4g} (Pick {smallest:.3g} vs limit {reference:.3g})")
            return trial, anchor
    if fallback is None:
        raise NoSolution("no infinity anchor scale gives a positive definite Pick matrix")
    logger.warning(f"infinity anchor scale capped at a={fallback[1].scale:.4g}")
    return fallback


# ---------------------------------------------------------------------------
# MIMO constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MimoConstraint:
    """Simple unstable zero s of det M with the spanning column r = [r1; r2] of Adj(M(s))"""
    s: complex
    r1: np.ndarray
    r2: np.ndarray


def plant_pair_matrix(P0: MimoPlant, P1: MimoPlant) -> RatMat:
    """M(s) = [[N0, N1], [D0, D1]]"""
    return RatMat.block([[P0.N, P1.N], [P0.D, P1.D]])


def _phase_normalize(r: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(r)))
    r = r * (abs(r[k]) / r[k])
    return r / np.linalg.norm(r)


def mimo_constraints(
    P0: MimoPlant,
    P1: MimoPlant,
    opts: Optional[Dict[str, Any]] = None,
    pair_adj_det: Optional[Tuple[RatMat, RatFun]] = None
) -> List[MimoConstraint]:
    """
    Tangential data at the simple unstable zeros of det M(s)

    Raises:
        NonSimpleZero: a ℂ₊ zero of det M is repeated
        RankNotOne: Adj(M(s_i)) has numerical rank above one
        BoundaryZero: an imaginary-axis zero, or det M(∞) = 0
    """
    cfg = section("completion", opts)
    m = P0.dim
    adj, det = pair_adj_det or plant_pair_matrix(P0, P1).adj_det()
    if det.num.is_zero:
        raise IdenticalPlants("det M vanishes identically")
    if det.relative_degree != 0:
        raise BoundaryZero("det M(∞) = 0: zero at infinity is a boundary case")

    clusters = unstable_zeros(det, opts)
    logger.info(f"det M has {len(clusters)} unstable zero(s)")
    out: List[MimoConstraint] = []
    seen: Dict[complex, MimoConstraint] = {}
    for cluster in clusters:
        if cluster.multiplicity > 1:
            raise NonSimpleZero(f"det M has a zero of multiplicity {cluster.multiplicity} at s={cluster.location:.6g}")
        s = cluster.location
        partner = _conjugate_partner(seen, s)
        if partner is not None:
            out.append(MimoConstraint(s, partner.r1.conj(), partner.r2.conj()))
            continue
        U, sv, _ = scipy.linalg.svd(adj(s))
        if sv[0] == 0 or (len(sv) > 1 and sv[1] > cfg["rank_ratio"] * sv[0]):
            raise RankNotOne(f"Adj(M) at s={s:.6g} has singular values {sv[:2]}")
        r = _phase_normalize(U[:, 0])
        if s.imag == 0 and np.max(np.abs(r.imag)) <= 1e-9:
            r = r.real.astype(complex)
        constraint = MimoConstraint(s, r[:m].copy(), r[m:].copy())
        seen[s] = constraint
        out.append(constraint)
    return out


def matrix_sqrt_principal(M: np.ndarray, opts: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """
    Principal square root through the eigendecomposition

    Raises:
        EigenvalueOnCut: an eigenvalue lies on (−∞, 0]
        NondiagonalizableWithinTolerance: eigenvector matrix too ill conditioned
    """
    cfg = section("completion", opts)
    M = _as_matrix(M)
    w, V = scipy.linalg.eig(M)
    for lam in w:
        if lam.real <= 0 and abs(lam.imag) <= cfg["cut_band"] * max(1.0, abs(lam)):
            raise EigenvalueOnCut(f"eigenvalue {lam:.6g} lies on the branch cut")
    if np.linalg.cond(V) > cfg["eig_cond"]:
        raise NondiagonalizableWithinTolerance("eigenvector matrix is numerically singular")
    S = V @ np.diag(np.sqrt(w)) @ np.linalg.inv(V)
    if np.isrealobj(M) or np.max(np.abs(M.imag)) == 0:
        if np.max(np.abs(S.imag)) <= 1e-9 * max(1.0, np.max(np.abs(S))):
            S = S.real.astype(complex)
    return S


def _alpha_grid(opts: Optional[Dict[str, Any]] = None) -> List[float]:
    cfg = section("completion", opts)
    grid = np.logspace(cfg["alpha_min_exp"], cfg["alpha_max_exp"], int(cfg["alpha_points"]))
    return sorted(grid.tolist(), key=lambda a: (abs(math.log(a)), a))


def _completion(r1: np.ndarray, r2: np.ndarray, alpha: float) -> np.ndarray:
    ell = len(r2)
    r1 = np.asarray(r1, dtype=complex).reshape(ell, 1)
    r2 = np.asarray(r2, dtype=complex).reshape(ell, 1)
    return alpha * np.eye(ell) + (-r1 - alpha * r2) @ r2.conj().T / float(np.vdot(r2, r2).real)


def _admissible(Mi: np.ndarray, opts: Optional[Dict[str, Any]]) -> Optional[np.ndarray]:
    """Principal square root of Mi when it has positive definite Hermitian part, else None"""
    try:
        root = matrix_sqrt_principal(Mi, opts)
    except (EigenvalueOnCut, NondiagonalizableWithinTolerance):
        return None
    herm = 0.5 * (root + root.conj().T)
    if np.min(np.linalg.eigvalsh(herm)) <= 0:
        return None
    return root


def build_Mi(
    r1: np.ndarray,
    r2: np.ndarray,
    alpha: Optional[float] = None,
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[np.ndarray, Optional[float]]:
    """
    Complete the tangential condition M·r2 = −r1 to a full matrix

    M = α I + (−r1 − α r2) r2ᴴ / ‖r2‖², with α scanned over a log grid
    (closest to 1 first) unless given.

    Returns:
        (M_i, α used; None in the scalar case)

    Raises:
        NoAdmissibleCompletion: r2 = 0, or no α gives an admissible M_i
    """
    r1 = np.asarray(r1, dtype=complex).ravel()
    r2 = np.asarray(r2, dtype=complex).ravel()
    if np.linalg.norm(r2) == 0:
        raise NoAdmissibleCompletion("r2 vanishes; the tangential condition does not pin M")
    if len(r2) == 1:
        return np.array([[-r1[0] / r2[0]]]), None
    alphas = [alpha] if alpha is not None else _alpha_grid(opts)
    for a in alphas:
        Mi = _completion(r1, r2, a)
        if _admissible(Mi, opts) is not None:
            logger.debug(f"completion accepted with alpha={a:.4g}")
            return Mi, a
    raise NoAdmissibleCompletion("no completion in the alpha grid has admissible spectrum")


def mimo_problem(
    constraints: Sequence[MimoConstraint],
    alpha: Optional[float] = None,
    Mi_override: Optional[Sequence[np.ndarray]] = None,
    opts: Optional[Dict[str, Any]] = None,
    ell: Optional[int] = None
) -> Tuple[InterpolationProblem, List[np.ndarray], Optional[float]]:
    """
    Matrix interpolation problem F(z_i) = M_i^{1/2}

    A single α shared by all nodes is preferred, choosing the first that makes
    every completion admissible and the Pick matrix positive definite; per-node
    completion is the fallback.
    """
    if not constraints:
        return InterpolationProblem(ell or 1, ()), [], None
    ell = len(constraints[0].r2)

    def assemble(mats: Sequence[np.ndarray]) -> Optional[InterpolationProblem]:
        nodes = []
        for c, Mi in zip(constraints, mats):
            root = _admissible(Mi, opts)
            if root is None:
                return None
            nodes.append(InterpolationNode(S_TO_Z(c.s), (root,)))
        return InterpolationProblem(ell, tuple(enforce_conjugate_symmetry(nodes)))

    if Mi_override is not None:
        mats = [_as_matrix(Mi) for Mi in Mi_override]
        if len(mats) != len(constraints):
            raise DimensionMismatch("one M_i override per unstable zero is required")
        problem = assemble(mats)
        if problem is None:
            raise NoAdmissibleCompletion("supplied M_i do not have admissible square roots")
        return problem, mats, None

    if ell == 1:
        mats = [build_Mi(c.r1, c.r2, None, opts)[0] for c in constraints]
        problem = assemble(mats)
        if problem is None:
            raise NoAdmissibleCompletion("scalar M_i lies on the branch cut")
        return problem, mats, None

    alphas = [alpha] if alpha is not None else _alpha_grid(opts)
    for a in alphas:
        mats = [_completion(c.r1, c.r2, a) for c in constraints]
        problem = assemble(mats)
        if problem is not None and is_solvable(problem, opts):
            logger.info(f"shared completion alpha={a:.4g} gives a solvable problem")
            return problem, mats, a

    logger.warning("no shared alpha passed the Pick test; completing node by node")
    picked = [build_Mi(c.r1, c.r2, alpha, opts) for c in constraints]
    mats = [Mi for Mi, _ in picked]
    problem = assemble(mats)
    return problem, mats, None


# ---------------------------------------------------------------------------
# solvability and normalization
# ---------------------------------------------------------------------------

def pick_matrix(problem: InterpolationProblem) -> np.ndarray:
    """
    Hermite-Pick matrix of the data

    Blocks are the Taylor coefficients of (F(z) + F(w)ᴴ)/(1 − z w̄) at the node
    pairs; positive definiteness is the solvability condition.
    """
    ell = problem.ell
    nodes = problem.nodes
    offsets = np.cumsum([0] + [node.n for node in nodes])
    size = int(offsets[-1]) * ell
    P = np.zeros((size, size), dtype=complex)
    for i, ni in enumerate(nodes):
        for j, nj in enumerate(nodes):
            zi, wj = ni.z, nj.z.conjugate()
            c = 1.0 - zi * wj
            K = [[None] * nj.n for _ in range(ni.n)]
            for a in range(ni.n):
                for b in range(nj.n):
                    if a == 0 and b == 0:
                        rhs = ni.W[0] + nj.W[0].conj().T
                    elif b == 0:
                        rhs = ni.W[a].copy()
                    elif a == 0:
                        rhs = nj.W[b].conj().T.copy()
                    else:
                        rhs = np.zeros((ell, ell), dtype=complex)
                    if a > 0:
                        rhs = rhs + wj * K[a - 1][b]
                    if b > 0:
                        rhs = rhs + zi * K[a][b - 1]
                    if a > 0 and b > 0:
                        rhs = rhs + K[a - 1][b - 1]
                    K[a][b] = rhs / c
                    r0 = (int(offsets[i]) + a) * ell
                    c0 = (int(offsets[j]) + b) * ell
                    P[r0:r0 + ell, c0:c0 + ell] = K[a][b]
    return 0.5 * (P + P.conj().T)


def is_solvable(problem: InterpolationProblem, opts: Optional[Dict[str, Any]] = None) -> bool:
    if not problem.nodes:
        return True
    tol = section("completion", opts)["pick_tol"]
    return bool(np.min(np.linalg.eigvalsh(pick_matrix(problem))) > tol)


def _transform_node(node: InterpolationNode, m: MobiusMap) -> InterpolationNode:
    """Node data of F ∘ m⁻¹ given the data of F"""
    zeta = m(node.z)
    inner = m.inverse().taylor(zeta, node.n - 1)
    W = compose_series(list(node.W), inner)
    return InterpolationNode(zeta, tuple(W))


def _inverse_sqrt_psd(H: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    if np.min(w) <= 0:
        raise NoSolution("anchor target has a Hermitian part that is not positive definite")
    return (V * (1.0 / np.sqrt(w))) @ V.conj().T


def normalize_problem(
    raw: InterpolationProblem,
    opts: Optional[Dict[str, Any]] = None
) -> InterpolationProblem:
    """
    Move a node to z = 0 and its value to ½I

    The node closest to 0 is chosen (a real one when the data are conjugate
    closed). Without a usable node an auxiliary node at 0 with value c·I is
    added, c taken from the configured list as the first value keeping the
    Pick matrix positive definite.

    Raises:
        NoSolution: the data fail the Hermitian-part or Pick tests
    """
    cfg = section("completion", opts)
    ell = raw.ell if raw.nodes else max(raw.ell, 1)
    for node in raw.nodes:
        herm = 0.5 * (node.W[0] + node.W[0].conj().T)
        if np.min(np.linalg.eigvalsh(herm)) <= 0:
            raise NoSolution(f"target at z={node.z:.6g} has a Hermitian part that is not positive definite")

    real_data = raw.is_conjugate_closed()
    candidates = [nd for nd in raw.nodes if not real_data or nd.z.imag == 0]
    nodes = list(raw.nodes)
    auxiliary = False
    aux_value: Optional[float] = None

    if candidates:
        anchor = min(candidates, key=lambda nd: (abs(nd.z), nd.z.real))
        center = anchor.z
    else:
        center = 0j
        auxiliary = True
        for c in cfg["aux_values"]:
            trial = InterpolationProblem(ell, tuple([InterpolationNode(0j, (c * np.eye(ell),))] + nodes))
            if is_solvable(trial, opts):
                aux_value = float(c)
                break
        if aux_value is None:
            raise NoSolution("no auxiliary anchor value keeps the Pick matrix positive definite")
        nodes = [InterpolationNode(0j, (aux_value * np.eye(ell),))] + nodes
        logger.info(f"added auxiliary node at z=0 with value {aux_value:g}")

    m = MobiusMap.disc_automorphism(center)
    moved = [_transform_node(nd, m) if center != 0 else nd for nd in nodes]
    moved.sort(key=lambda nd: (abs(nd.z) > 1e-14, abs(nd.z), nd.z.real, nd.z.imag))
    anchor_node = moved[0]
    anchor_node = InterpolationNode(0j, anchor_node.W)

    W10 = anchor_node.W[0]
    herm = 0.5 * (W10 + W10.conj().T)
    iS = 0.5 * (W10 - W10.conj().T)
    T = _inverse_sqrt_psd(2.0 * herm)
    norm = Normalization(center=center, T=T, iS=iS, auxiliary=auxiliary, aux_value=aux_value)

    out: List[InterpolationNode] = []
    for idx, nd in enumerate([anchor_node] + moved[1:]):
        W = [norm.range_forward(w, j) for j, w in enumerate(nd.W)]
        if idx == 0:
            W[0] = 0.5 * np.eye(ell, dtype=complex)
        out.append(InterpolationNode(nd.z, tuple(W)))
    if real_data:
        out = enforce_conjugate_symmetry(out)
    problem = InterpolationProblem(ell, tuple(out), norm)
    if not is_solvable(problem, opts):
        raise NoSolution("the Pick matrix of the interpolation data is not positive definite")
    return problem


def denormalize_problem(problem: InterpolationProblem) -> InterpolationProblem:
    """Undo normalize_problem on the data (auxiliary node dropped)"""
    norm = problem.normalization
    if norm is None:
        return problem
    inverse = norm.domain_map.inverse()
    out: List[InterpolationNode] = []
    for idx, nd in enumerate(problem.nodes):
        if idx == 0 and norm.auxiliary:
            continue
        W = tuple(norm.range_inverse(w, j) for j, w in enumerate(nd.W))
        restored = InterpolationNode(nd.z, W)
        if norm.center != 0:
            restored = _transform_node(restored, inverse)
        out.append(restored)
    return InterpolationProblem(problem.ell, tuple(out))
