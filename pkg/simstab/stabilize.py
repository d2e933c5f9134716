#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Compensator synthesis

Runs problem construction and the CEE solver, squares the interpolant back in
the s-plane and assembles the simultaneously stabilizing compensator. Every
compensator is validated constructively: the characteristic units it produces
must have all their zeros in the open left half-plane.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cee import CeeSolution, Interpolant, SigmaParam, build_observer_form, solve_interpolation, spectral_factor
from .config import section
from .errors import DimensionMismatch, EigCutViolation, ImproperSystem, UnitCheckFailed
from .problem import (
    InfinityAnchor,
    MimoConstraint,
    MimoPlant,
    Plant,
    SisoConstraint,
    mimo_constraints,
    mimo_problem,
    normalize_problem,
    plant_pair_matrix,
    siso_problem,
)
from .ratfun import Poly, RatFun, RatMat, poly_difference, ratfun_normalize, _poly_det
from .realization import Realization, mcmillan_degree, realize
from .rootfind import poly_roots
from .utils.logger import get_logger

logger = get_logger(__name__)

SigmaInput = Union[None, SigmaParam, Any]


@dataclass(frozen=True)
class DeltaRatio:
    """δ₁/δ₀ (scalar) or Δ₀⁻¹Δ₁ = F₁² (matrix) as rational functions of s"""
    ratio: Union[RatFun, RatMat]
    root: Union[RatFun, RatMat]
    cut_margin: float

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.ratio, RatFun)


@dataclass
class UnitReport:
    """Per-λ worst real part of the zeros of δ_λ (or det Δ_λ)"""
    lambdas: List[float]
    worst_real_parts: List[float]

    @property
    def passed(self) -> bool:
        return all(r < 0 for r in self.worst_real_parts)

    @property
    def worst(self) -> float:
        return max(self.worst_real_parts) if self.worst_real_parts else -np.inf

    def failures(self) -> List[float]:
        return [lam for lam, r in zip(self.lambdas, self.worst_real_parts) if r >= 0]


@dataclass
class Compensator:
    """Synthesized compensator with its provenance"""
    scalar: Optional[RatFun] = None
    matrix: Optional[RatMat] = None
    x_c: Optional[RatFun] = None
    y_c: Optional[RatFun] = None
    N_c: Optional[RatMat] = None
    D_c: Optional[RatMat] = None
    delta: Optional[DeltaRatio] = None
    sigma: Optional[SigmaParam] = None
    interpolant: Optional[Interpolant] = None
    solution: Optional[CeeSolution] = None
    constraints: Sequence[Any] = ()
    unit_report: Optional[UnitReport] = None
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def is_scalar(self) -> bool:
        return self.scalar is not None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        if self.is_scalar:
            data["k"] = self.scalar.to_dict()
            if self.x_c is not None:
                data["x_c"] = self.x_c.to_dict()
                data["y_c"] = self.y_c.to_dict()
        else:
            data["K"] = self.matrix.to_dict()
            if self.N_c is not None:
                data["N_c"] = self.N_c.to_dict()
                data["D_c"] = self.D_c.to_dict()
        if self.delta is not None:
            key = "delta_ratio" if self.delta.is_scalar else "F1_squared"
            data[key] = self.delta.ratio.to_dict()
            data["F1"] = self.delta.root.to_dict()
        if self.sigma is not None:
            data["sigma"] = self.sigma.to_dict()
        data["residuals"] = {k: float(v) for k, v in self.residuals.items()}
        return data


# ---------------------------------------------------------------------------
# sampling grids
# ---------------------------------------------------------------------------

def halfplane_grid(opts: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """Closed right half-plane samples: imaginary axis (log-spaced) plus a large semicircle"""
    cfg = section("verification", opts)
    points = int(cfg["halfplane_points"])
    radius = float(cfg["halfplane_radius"])
    quarter = max(points // 4, 1)
    omega = np.logspace(-3, np.log10(radius), quarter)
    axis = np.concatenate([[0.0], omega, -omega]) * 1j
    theta = np.linspace(-np.pi / 2, np.pi / 2, points - axis.size)
    arc = radius * np.exp(1j * theta)
    return np.concatenate([axis, arc])


def _cut_margin(values: np.ndarray, cut_tol: float) -> float:
    """Smallest normalized distance of values from (−∞, 0]"""
    worst = np.inf
    for v in np.atleast_1d(values):
        if v.real > 0:
            d = 1.0
        else:
            d = abs(v.imag) / max(abs(v), 1e-300)
        worst = min(worst, d)
        if abs(v) <= cut_tol:
            return 0.0
    return float(worst)


# ---------------------------------------------------------------------------
# δ-ratio
# ---------------------------------------------------------------------------

def delta_ratio(
    f: Interpolant,
    opts: Optional[Dict[str, Any]] = None,
    anchor: Optional[InfinityAnchor] = None
) -> DeltaRatio:
    """
    δ₁/δ₀(s) = f((1 − s)/(1 + s))² (matrix case: F₁(s)²)

    With an anchor, f interpolates the rewritten data and the root is
    anchor.restore(f) before squaring.

    Raises:
        UnitCheckFailed: a value on the ℂ₊ sampling grid lands on the cut
            (EigCutViolation for the eigenvalues in the matrix case)
    """
    cfg = section("verification", opts)
    F1 = f.in_s()
    grid = halfplane_grid(opts)
    if f.ell == 1:
        root = F1[0, 0]
        if anchor is not None:
            root = ratfun_normalize(anchor.restore(root))
        ratio = ratfun_normalize(root * root)
        values = np.array([ratio(s) for s in grid])
        margin = _cut_margin(values, cfg["cut_tol"])
        if margin <= cfg["cut_tol"]:
            raise UnitCheckFailed("δ1/δ0 reaches the nonpositive real axis on the closed right half-plane")
        bad = [p for p in ratio.poles() + ratio.zeros() if p.real >= 0]
        if bad:
            raise UnitCheckFailed(f"δ1/δ0 has zeros or poles in the closed right half-plane: {bad}")
        return DeltaRatio(ratio, root, margin)

    ratio = (F1 @ F1).normalize()
    margin = np.inf
    for s in grid:
        margin = min(margin, _cut_margin(np.linalg.eigvals(ratio(s)), cfg["cut_tol"]))
    if margin <= cfg["cut_tol"]:
        raise EigCutViolation("an eigenvalue of F1(s)^2 reaches the nonpositive real axis on the closed right half-plane")
    return DeltaRatio(ratio, F1, float(margin))


# ---------------------------------------------------------------------------
# unit checks
# ---------------------------------------------------------------------------

def default_lambda_grid(opts: Optional[Dict[str, Any]] = None) -> np.ndarray:
    points = int(section("verification", opts)["lambda_points"])
    return np.linspace(0.0, 1.0, points)


def _worst_real_part(p: Poly) -> float:
    if p.is_zero:
        return np.inf
    roots = poly_roots(p) if p.degree >= 1 else []
    return max((r.real for r in roots), default=-np.inf)


def check_unit_conditions(
    delta: Union[Tuple[RatFun, RatFun], RatFun, RatMat, DeltaRatio],
    lambda_grid: Optional[Sequence[float]] = None,
    opts: Optional[Dict[str, Any]] = None
) -> UnitReport:
    """
    Zeros of λδ₁ + (1 − λ)δ₀ (matrix case: det(λΔ₁ + (1 − λ)Δ₀)) across λ

    Accepts a (δ₀, δ₁) pair, a scalar ratio δ₁/δ₀, or a matrix ratio Δ₀⁻¹Δ₁.
    """
    lambdas = [float(v) for v in (lambda_grid if lambda_grid is not None else default_lambda_grid(opts))]
    if isinstance(delta, DeltaRatio):
        delta = delta.ratio
    worst: List[float] = []

    if isinstance(delta, RatMat):
        grid, q = delta.common_denominator()
        m = delta.shape[0]
        for lam in lambdas:
            mat = [[grid[i][j] * lam + (q * (1.0 - lam) if i == j else Poly()) for j in range(m)] for i in range(m)]
            worst.append(_worst_real_part(_poly_det(mat)))
        return UnitReport(lambdas, worst)

    if isinstance(delta, RatFun):
        delta0, delta1 = RatFun.constant(1.0), delta
    else:
        delta0, delta1 = delta
    for lam in lambdas:
        combined = ratfun_normalize(delta1 * lam + delta0 * (1.0 - lam))
        worst.append(_worst_real_part(combined.num))
    return UnitReport(lambdas, worst)


# ---------------------------------------------------------------------------
# SISO
# ---------------------------------------------------------------------------

def _unstable_factor(points: Sequence[Tuple[complex, int]]) -> Poly:
    roots: List[complex] = []
    for s, mult in points:
        roots.extend([s] * mult)
    p = Poly.from_roots(roots)
    return p.as_real() if p.is_real else p


def resolve_sigma(sigma: SigmaInput, ell: int, n: int) -> SigmaParam:
    """SigmaParam for an (ℓ, n) problem from a SigmaParam, a spec dict/expression, or None"""
    obs = build_observer_form(ell, n)
    if sigma is None:
        return SigmaParam.default(obs)
    if isinstance(sigma, SigmaParam):
        if sigma.obs.ell != ell or sigma.obs.n != n:
            raise DimensionMismatch(f"Σ is sized for (ℓ={sigma.obs.ell}, n={sigma.obs.n}), problem needs (ℓ={ell}, n={n})")
        return sigma
    from .schemas import sigma_from_spec
    return sigma_from_spec(sigma, obs)


def _root_list(p: Poly) -> List[complex]:
    return list(p.roots()) if p.degree >= 1 else []


def _match_roots(
    a: Sequence[complex],
    b: Sequence[complex],
    tol: float
) -> Tuple[List[complex], List[complex], List[complex]]:
    """(shared, only in a, only in b) as multisets, matched within tol·(1 + |r|)"""
    rest = list(b)
    shared: List[complex] = []
    only_a: List[complex] = []
    for r in a:
        hit = next((j for j, q in enumerate(rest) if abs(r - q) <= tol * (1.0 + abs(r))), None)
        if hit is None:
            only_a.append(r)
        else:
            shared.append(r)
            rest.pop(hit)
    return shared, only_a, rest


def _monic_from(roots: Sequence[complex]) -> Poly:
    p = Poly.from_roots(roots)
    return p.as_real() if p.is_real else p


def siso_quotient(
    Q: RatFun,
    p0: Plant,
    p1: Plant,
    factor: Poly,
    opts: Optional[Dict[str, Any]] = None,
    lead_cancel: Optional[float] = None,
    residuals: Optional[Dict[str, float]] = None
) -> RatFun:
    """
    k = (y₁ − Q y₀)/(Q x₀ − x₁) with the plant denominators kept factored

    With x_i = X_i/(g a_i) and y_i = Y_i/(h b_i), where g and h are the factors
    shared by the two plants' denominators,
    k = (q_d Y₁ b₀ − q_n Y₀ b₁)·g a₀ a₁ / ((q_n X₀ a₁ − q_d X₁ a₀)·h b₀ b₁).
    Both brackets vanish at the unstable zeros, so `factor` is deflated from
    them; denominator factors common to both sides cancel by root matching.

    Args:
        lead_cancel: relative level at which leading coefficients of the
            brackets are treated as cancelled (Q pinned at s = ∞)
    """
    tol = section("tolerances", opts)["cancel"]
    x0, x1, y0, y1 = (ratfun_normalize(f) for f in (p0.x, p1.x, p0.y, p1.y))
    g, a0, a1 = _match_roots(_root_list(x0.den), _root_list(x1.den), tol)
    h, b0, b1 = _match_roots(_root_list(y0.den), _root_list(y1.den), tol)
    _, num_extra, den_extra = _match_roots(g + a0 + a1, h + b0 + b1, tol)
    A0, A1, B0, B1 = (_monic_from(r) for r in (a0, a1, b0, b1))

    eps = lead_cancel if lead_cancel is not None else 1e-13
    qn, qd = Q.num, Q.den
    num = poly_difference(qd * y1.num * B0, qn * y0.num * B1, eps)
    den = poly_difference(qn * x0.num * A1, qd * x1.num * A0, eps)
    if factor.degree >= 1:
        num, rn = num.deflate(factor)
        den, rd = den.deflate(factor)
        if residuals is not None:
            residuals["deflation_num"] = rn
            residuals["deflation_den"] = rd
        logger.debug(f"deflated compensator by degree-{factor.degree} factor (remainders {rn:.2e}, {rd:.2e})")
    if den.is_zero:
        raise UnitCheckFailed("compensator denominator vanishes identically")
    num = num * _monic_from(num_extra)
    den = den * _monic_from(den_extra)
    if num.is_real and den.is_real:
        num, den = num.as_real(), den.as_real()
    return ratfun_normalize(RatFun(num, den))


def siso_compensator(
    p0: Plant,
    p1: Plant,
    sigma: SigmaInput = None,
    opts: Optional[Dict[str, Any]] = None,
    lambda_grid: Optional[Sequence[float]] = None
) -> Compensator:
    """
    Scalar compensator k = (y₁ − Q y₀)/(Q x₀ − x₁), Q = δ₁/δ₀ = F̂²

    When x₀y₁ − x₁y₀ vanishes at s = ∞, Q(∞) is pinned to (y₁/y₀)(∞) through
    an InfinityAnchor so that k stays proper.

    Raises:
        UnitCheckFailed: δ₀ or δ₁ (or some δ_λ) has a closed-ℂ₊ zero, or k is improper
    """
    p0.validate()
    p1.validate()
    raw, constraints, anchor = siso_problem(p0, p1, opts)
    problem = normalize_problem(raw, opts)
    sig = resolve_sigma(sigma, 1, problem.n)
    interp, sol, sig = solve_interpolation(problem, sig, opts)
    delta = delta_ratio(interp, opts, anchor)
    Q = delta.ratio

    residuals: Dict[str, float] = dict(sol.residuals)
    factor = _unstable_factor([(c.s, c.n) for c in constraints])
    lead_cancel = section("infinity", opts)["lead_cancel"] if anchor is not None else None
    k = siso_quotient(Q, p0, p1, factor, opts, lead_cancel, residuals)
    if not k.is_proper:
        raise UnitCheckFailed(f"compensator is improper (relative degree {k.relative_degree})")
    if anchor is not None:
        residuals["infinity_scale"] = anchor.scale
        residuals["infinity_mismatch"] = abs(Q.value_at_infinity() - anchor.value) / anchor.value

    e = Poly.from_roots([-1.0] * k.den.degree)
    x_c = RatFun(k.num, e)
    y_c = RatFun(k.den, e)
    delta0 = ratfun_normalize(p0.x * x_c + p0.y * y_c)
    delta1 = ratfun_normalize(p1.x * x_c + p1.y * y_c)
    for label, d in (("delta0", delta0), ("delta1", delta1)):
        worst = _worst_real_part(d.num)
        residuals[f"{label}_worst_real"] = worst
        if worst >= 0:
            raise UnitCheckFailed(f"{label} has a zero with real part {worst:.6g}")
        if d.relative_degree != 0:
            raise UnitCheckFailed(f"{label} is not a unit (relative degree {d.relative_degree})")

    residuals["delta_interpolation"] = delta_interpolation_residual(Q, constraints)
    report = check_unit_conditions((delta0, delta1), lambda_grid, opts)
    if not report.passed:
        raise UnitCheckFailed(f"unit check fails for lambda in {report.failures()[:5]}")
    residuals["unit_worst_real"] = report.worst
    residuals["cut_margin"] = delta.cut_margin
    logger.info(f"SISO compensator of degree {k.den.degree} synthesized")
    return Compensator(
        scalar=k, x_c=x_c, y_c=y_c, delta=delta, sigma=sig, interpolant=interp, solution=sol,
        constraints=tuple(constraints), unit_report=report, residuals=residuals,
    )


def delta_interpolation_residual(Q: RatFun, constraints: Sequence[SisoConstraint]) -> float:
    """Worst relative mismatch between Q's derivatives and the constraint targets"""
    worst = 0.0
    for c in constraints:
        got = Q.derivs(c.s, c.n - 1)
        for g, target in zip(got, c.derivatives):
            worst = max(worst, abs(g - target) / max(1.0, abs(target)))
    return float(worst)


# ---------------------------------------------------------------------------
# MIMO
# ---------------------------------------------------------------------------

def coprime_compensator(
    root: RatMat,
    M: RatMat,
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[Realization, Realization]:
    """
    Minimal realizations of [N_c D_c] = [I Q]·M⁻¹ (Q = F₁²) and K = D_c⁻¹N_c

    The unstable poles of M⁻¹ are unobservable through [I Q] once Q meets
    the tangential conditions, so the minimal [N_c D_c] is stable.

    Raises:
        UnitCheckFailed: M(∞) or D_c(∞) is singular, or [N_c D_c] keeps an
            unstable mode
    """
    m = root.shape[0]
    root_ss = realize(root, opts)
    Q_ss = (root_ss @ root_ss).minimal(opts=opts)
    try:
        M_inv = realize(M, opts).inverse()
    except ImproperSystem as e:
        raise UnitCheckFailed(f"M(inf) is singular, no proper coprime factors: {e}") from e
    NcDc = (Realization.static(np.eye(m)).hstack(Q_ss) @ M_inv).minimal(opts=opts)
    unstable = [complex(p) for p in NcDc.poles() if p.real >= 0]
    if unstable:
        raise UnitCheckFailed(f"[N_c D_c] keeps unstable mode(s) {unstable}")
    try:
        K_ss = NcDc.left_fraction(m).minimal(opts=opts)
    except ImproperSystem as e:
        raise UnitCheckFailed(f"D_c(inf) is singular, the compensator is improper: {e}") from e
    return NcDc, K_ss


def mimo_compensator(
    P0: MimoPlant,
    P1: MimoPlant,
    sigma: SigmaInput = None,
    Mi_override: Optional[Sequence[np.ndarray]] = None,
    alpha: Optional[float] = None,
    opts: Optional[Dict[str, Any]] = None,
    lambda_grid: Optional[Sequence[float]] = None
) -> Compensator:
    """
    Matrix compensator K = D_c⁻¹N_c with [N_c D_c] = [I Q]·M⁻¹, Q = F₁²

    Raises:
        EigCutViolation: eigenvalues of F₁² reach the cut on ℂ₊
        UnitCheckFailed: det(λQ + (1 − λ)I) has a closed-ℂ₊ zero for some λ,
            or the coprime factors are not proper and stable
    """
    P0.validate()
    P1.validate()
    m = P0.dim
    M = plant_pair_matrix(P0, P1)
    adj, det = M.adj_det()
    constraints: List[MimoConstraint] = mimo_constraints(P0, P1, opts, (adj, det))
    raw, mats, used_alpha = mimo_problem(constraints, alpha, Mi_override, opts, ell=m)
    problem = normalize_problem(raw, opts)
    sig = resolve_sigma(sigma, m, problem.n)
    interp, sol, sig = solve_interpolation(problem, sig, opts)
    delta = delta_ratio(interp, opts)
    Q: RatMat = delta.ratio

    NcDc, K_ss = coprime_compensator(delta.root, M, opts)
    N_c = NcDc.columns(range(m)).to_ratmat()
    D_c = NcDc.columns(range(m, 2 * m)).to_ratmat()
    K = K_ss.to_ratmat()

    residuals: Dict[str, float] = dict(sol.residuals)
    bound = 2 * mcmillan_degree(delta.root, opts) + mcmillan_degree(M, opts) - len(constraints)
    residuals["mcmillan_coprime"] = NcDc.states
    residuals["mcmillan_K"] = K_ss.states
    residuals["mcmillan_bound"] = bound
    if K_ss.states > bound:
        logger.warning(f"compensator McMillan degree {K_ss.states} exceeds the bound {bound}")
    report = check_unit_conditions(Q, lambda_grid, opts)
    if not report.passed:
        raise UnitCheckFailed(f"unit check fails for lambda in {report.failures()[:5]}")
    residuals["unit_worst_real"] = report.worst
    residuals["cut_margin"] = delta.cut_margin
    if used_alpha is not None:
        residuals["alpha"] = used_alpha
    residuals["tangential"] = max(
        (float(np.max(np.abs(Mi @ c.r2 + c.r1))) for Mi, c in zip(mats, constraints)), default=0.0
    )
    residuals["spectral_identity"] = spectral_factor(sol, sig.obs, sig).identity_residual()
    logger.info(f"MIMO compensator synthesized for {len(constraints)} unstable zero(s)")
    return Compensator(
        matrix=K, N_c=N_c, D_c=D_c, delta=delta, sigma=sig, interpolant=interp, solution=sol,
        constraints=tuple(constraints), unit_report=report, residuals=residuals,
    )
