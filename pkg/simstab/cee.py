#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Covariance Extension Equation solver

Given a normalized interpolation problem (node at 0 with value ½I) and a monic
Schur matrix polynomial Σ(z), finds the unique admissible solution P of

    P = Γ(P − PHᴴHP)Γᴴ + G(P)G(P)ᴴ,   G(P) = u + U(Σ + ΓPHᴴ),   Γ = J − ΣH

by homotopy continuation in the targets, and assembles the interpolant
F(z) = ½Ã(z)⁻¹B̃(z) together with its spectral factor.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import root

from .config import section
from .errors import (
    DimensionMismatch,
    HomotopyStalled,
    IndexSumMismatch,
    NoSolution,
    SigmaError,
    SingularDataMatrix,
    UnstableRealization,
)
from .problem import InterpolationNode, InterpolationProblem, Normalization, compose_series, is_solvable
from .ratfun import S_TO_Z, MatPoly, MobiusMap, Poly, RatFun, RatMat, ratfun_mobius_compose
from .utils.logger import get_logger

logger = get_logger(__name__)


# ---------------------------------------------------------------------------
# observer canonical form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObserverForm:
    """(H, J) in observer canonical form with observability indices t_1..t_ℓ"""
    ell: int
    n: int
    indices: Tuple[int, ...]
    H: np.ndarray
    J: np.ndarray

    @property
    def dim(self) -> int:
        return self.n * self.ell

    @property
    def offsets(self) -> List[int]:
        return [int(v) for v in np.cumsum((0,) + self.indices[:-1])]

    def Pi(self, z: complex) -> np.ndarray:
        """Π(z) = diag(π_{t_i}(z)), π_ν(z) = (z^{ν−1}, …, z, 1)"""
        out = np.zeros((self.ell, self.dim), dtype=complex)
        for i, (off, t) in enumerate(zip(self.offsets, self.indices)):
            for q in range(t):
                out[i, off + q] = z ** (t - 1 - q)
        return out

    def Pi_rev(self, z: complex) -> np.ndarray:
        """Π̃(z) = diag(z, z², …, z^{t_i})"""
        out = np.zeros((self.ell, self.dim), dtype=complex)
        for i, (off, t) in enumerate(zip(self.offsets, self.indices)):
            for q in range(t):
                out[i, off + q] = z ** (q + 1)
        return out

    def Pi_rev_taylor(self, z0: complex, order: int) -> List[np.ndarray]:
        """Taylor coefficients of Π̃ at z0, orders 0..order"""
        out = [np.zeros((self.ell, self.dim), dtype=complex) for _ in range(order + 1)]
        for i, (off, t) in enumerate(zip(self.offsets, self.indices)):
            for q in range(t):
                power = q + 1
                for k in range(min(order, power) + 1):
                    out[k][i, off + q] = math.comb(power, k) * z0 ** (power - k)
        return out

    def D(self, z: complex) -> np.ndarray:
        return np.diag([z ** t for t in self.indices]).astype(complex)

    def matpoly(self, X: np.ndarray) -> MatPoly:
        """D(z) + Π(z)X"""
        deg = max(self.indices) if self.indices else 0
        coeffs = np.zeros((deg + 1, self.ell, self.ell), dtype=complex)
        for i, (off, t) in enumerate(zip(self.offsets, self.indices)):
            coeffs[t, i, i] += 1.0
            for q in range(t):
                coeffs[t - 1 - q, i, :] += X[off + q, :]
        return MatPoly(coeffs)

    def matpoly_rev(self, X: np.ndarray) -> MatPoly:
        """I + Π̃(z)X"""
        deg = max(self.indices) if self.indices else 0
        coeffs = np.zeros((deg + 1, self.ell, self.ell), dtype=complex)
        coeffs[0] = np.eye(self.ell)
        for i, (off, t) in enumerate(zip(self.offsets, self.indices)):
            for q in range(t):
                coeffs[q + 1, i, :] += X[off + q, :]
        return MatPoly(coeffs)


def build_observer_form(ell: int, n: int, indices: Optional[Sequence[int]] = None) -> ObserverForm:
    """
    Observer canonical pair (H, J)

    Raises:
        IndexSumMismatch: indices do not sum to nℓ
    """
    if ell < 1 or n < 0:
        raise ValueError(f"invalid dimensions ell={ell}, n={n}")
    indices = tuple(int(t) for t in indices) if indices is not None else (n,) * ell
    if len(indices) != ell or any(t < 0 for t in indices) or sum(indices) != n * ell:
        raise IndexSumMismatch(f"observability indices {indices} must be {ell} values summing to {n * ell}")
    dim = n * ell
    H = np.zeros((ell, dim))
    J = np.zeros((dim, dim))
    off = 0
    for i, t in enumerate(indices):
        if t > 0:
            H[i, off] = 1.0
            for q in range(t - 1):
                J[off + q, off + q + 1] = 1.0
        off += t
    return ObserverForm(ell, n, indices, H, J)


# ---------------------------------------------------------------------------
# Σ parameter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaParam:
    """Monic Schur matrix polynomial Σ(z) = D(z) + Π(z)Σ"""
    obs: ObserverForm
    Sigma: np.ndarray
    label: str = ""

    def __post_init__(self):
        Sigma = np.asarray(self.Sigma)
        Sigma = Sigma.reshape(self.obs.dim, self.obs.ell) if Sigma.size == self.obs.dim * self.obs.ell else Sigma
        if Sigma.shape != (self.obs.dim, self.obs.ell):
            raise SigmaError(f"Sigma must be {self.obs.dim}×{self.obs.ell}, got {Sigma.shape}")
        if np.iscomplexobj(Sigma) and np.max(np.abs(Sigma.imag), initial=0.0) == 0:
            Sigma = Sigma.real
        Sigma = Sigma.copy()
        Sigma.setflags(write=False)
        object.__setattr__(self, "Sigma", Sigma)
        radius = self.spectral_radius
        if radius >= 1.0 - 1e-12:
            raise SigmaError(f"Σ(z) is not Schur: a zero has modulus {radius:.6g}")

    @property
    def Gamma(self) -> np.ndarray:
        return self.obs.J - self.Sigma @ self.obs.H

    @property
    def roots(self) -> np.ndarray:
        """Zeros of det Σ(z) (spectral zeros)"""
        if self.obs.dim == 0:
            return np.zeros(0, dtype=complex)
        return scipy.linalg.eigvals(self.Gamma)

    @property
    def spectral_radius(self) -> float:
        r = self.roots
        return float(np.max(np.abs(r))) if r.size else 0.0

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.Sigma)

    @property
    def poly(self) -> MatPoly:
        return self.obs.matpoly(self.Sigma)

    @classmethod
    def default(cls, obs: ObserverForm) -> "SigmaParam":
        return cls(obs, np.zeros((obs.dim, obs.ell)), "central")

    @classmethod
    def from_roots(cls, roots: Sequence[complex], obs: ObserverForm) -> "SigmaParam":
        if obs.ell != 1:
            raise SigmaError("roots describe a scalar Σ; use a stacked matrix for ℓ > 1")
        if len(roots) != obs.n:
            raise SigmaError(f"Σ needs {obs.n} roots, got {len(roots)}")
        coeffs = Poly.from_roots(roots)
        label = "roots=" + ",".join(f"{complex(r).real:g}" if complex(r).imag == 0 else f"{complex(r):g}" for r in roots)
        return cls.from_coeffs(coeffs.coeffs, obs, label)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex], obs: ObserverForm, label: str = "") -> "SigmaParam":
        """Ascending coefficients, either monic of length n+1 or the n lower ones"""
        if obs.ell != 1:
            raise SigmaError("coefficients describe a scalar Σ; use a stacked matrix for ℓ > 1")
        c = np.asarray(coeffs, dtype=complex)
        if len(c) == obs.n + 1:
            if abs(c[-1] - 1.0) > 1e-12:
                raise SigmaError("Σ(z) must be monic")
            c = c[:-1]
        elif len(c) != obs.n:
            raise SigmaError(f"Σ needs {obs.n} or {obs.n + 1} coefficients, got {len(c)}")
        column = c[::-1].reshape(obs.n, 1)
        if np.max(np.abs(column.imag), initial=0.0) <= 1e-12:
            column = column.real
        return cls(obs, column, label or "coeffs=" + ",".join(f"{v.real:g}" for v in c))

    @classmethod
    def from_matrix(cls, Sigma: Any, obs: ObserverForm, label: str = "") -> "SigmaParam":
        return cls(obs, np.asarray(Sigma, dtype=float), label or "matrix")

    def to_dict(self) -> Dict[str, Any]:
        return {"Sigma": np.real_if_close(self.Sigma).tolist(), "label": self.label}


# ---------------------------------------------------------------------------
# (u, U)
# ---------------------------------------------------------------------------

def _vec(M: np.ndarray) -> np.ndarray:
    return M.reshape(-1, order="F")


def _unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return v.reshape((rows, cols), order="F")


def build_uU(
    problem: InterpolationProblem,
    obs: ObserverForm,
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Linear dependence of G on S = Σ + ΓPHᴴ

    With A = S − G and B = S + G each non-anchor condition reads
    Π̃(z)G(I + 2W(z)) + (I + Π̃(z)S)(I − 2W(z)) = O((z − z_k)^{n_k}); the
    Taylor coefficients give one square system in vec(G).

    Returns:
        (u, U) with vec(G) = vec(u) + U·vec(S)

    Raises:
        SingularDataMatrix: the stacked system is numerically singular
    """
    cfg = section("homotopy", opts)
    ell, dim = obs.ell, obs.dim
    if problem.ell != ell or problem.n != obs.n:
        raise DimensionMismatch(f"problem (ℓ={problem.ell}, n={problem.n}) does not match the observer form")
    if not problem.is_normalized:
        raise ValueError("build_uU needs a normalized problem (node at 0 with value ½I)")
    if dim == 0:
        return np.zeros((0, ell)), np.zeros((0, 0))

    eye = np.eye(ell)
    L_rows, r0_rows, R1_rows = [], [], []
    for k, node in enumerate(problem.nodes):
        Tpi = obs.Pi_rev_taylor(node.z, node.n - 1)
        c_plus = [eye + 2.0 * node.W[0]] + [2.0 * w for w in node.W[1:]]
        c_minus = [eye - 2.0 * node.W[0]] + [-2.0 * w for w in node.W[1:]]
        for p in range(node.n):
            if k == 0 and p == 0:
                continue  # anchor value holds for every G
            L_rows.append(sum(np.kron(c_plus[p - i].T, Tpi[i]) for i in range(p + 1)))
            R1_rows.append(-sum(np.kron(c_minus[p - i].T, Tpi[i]) for i in range(p + 1)))
            r0_rows.append(-_vec(c_minus[p]))

    L = np.vstack(L_rows)
    R1 = np.vstack(R1_rows)
    r0 = np.concatenate(r0_rows)
    cond = np.linalg.cond(L)
    if not np.isfinite(cond) or cond > cfg["linear_cond"]:
        raise SingularDataMatrix(f"interpolation data matrix is singular (condition {cond:.3g})")
    X = scipy.linalg.solve(L, np.column_stack([r0, R1]))
    u = _unvec(X[:, 0], dim, ell)
    U = X[:, 1:]

    scale = max(1.0, float(np.max(np.abs(X))))
    if np.max(np.abs(X.imag)) <= cfg["realness_tol"] * scale:
        u, U = u.real, U.real
    return u, U


def _deformed(problem: InterpolationProblem, tau: float) -> InterpolationProblem:
    """Targets moved a fraction τ from the constant ½I data toward the real data"""
    if tau == 1.0:
        return problem
    half = 0.5 * np.eye(problem.ell)
    nodes = []
    for node in problem.nodes:
        W = [(1.0 - tau) * half + tau * node.W[0]] + [tau * w for w in node.W[1:]]
        nodes.append(InterpolationNode(node.z, tuple(W)))
    return problem.with_nodes(nodes)


# ---------------------------------------------------------------------------
# CEE
# ---------------------------------------------------------------------------

class _HermitianPacker:
    """Real parameter vector ↔ symmetric (or Hermitian) matrix"""

    def __init__(self, dim: int, real: bool):
        self.dim = dim
        self.real = real
        self.iu = np.triu_indices(dim)
        self.iu_strict = np.triu_indices(dim, 1)

    def pack(self, M: np.ndarray) -> np.ndarray:
        if self.real:
            return np.real(M[self.iu]).astype(float)
        upper = M[self.iu_strict]
        return np.concatenate([np.real(np.diag(M)), upper.real, upper.imag])

    def unpack(self, v: np.ndarray) -> np.ndarray:
        d = self.dim
        if self.real:
            M = np.zeros((d, d))
            M[self.iu] = v
            return M + M.T - np.diag(np.diag(M))
        k = len(self.iu_strict[0])
        M = np.zeros((d, d), dtype=complex)
        M[self.iu_strict] = v[d:d + k] + 1j * v[d + k:]
        M = M + M.conj().T
        M[np.diag_indices(d)] = v[:d]
        return M


@dataclass
class CeeSolution:
    """Solution of the CEE and the coefficient matrices it determines"""
    P: np.ndarray
    G: np.ndarray
    A: np.ndarray
    B: np.ndarray
    R: np.ndarray
    S: np.ndarray
    u: np.ndarray
    U: np.ndarray
    residuals: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    problem: Optional[InterpolationProblem] = None
    sigma: Optional[SigmaParam] = None


def _coefficients(P, u, U, sigma: SigmaParam):
    obs = sigma.obs
    S = sigma.Sigma + sigma.Gamma @ P @ obs.H.conj().T
    G = u + _unvec(U @ _vec(S), obs.dim, obs.ell)
    return S, G, S - G, S + G


def _cee_residual(P, u, U, sigma: SigmaParam) -> np.ndarray:
    H = sigma.obs.H
    Gamma = sigma.Gamma
    _, G, _, _ = _coefficients(P, u, U, sigma)
    inner = P - P @ H.conj().T @ H @ P
    return P - Gamma @ inner @ Gamma.conj().T - G @ G.conj().T


def _admissible(P, u, U, sigma: SigmaParam, cfg: Dict[str, Any]) -> bool:
    obs = sigma.obs
    scale = max(1.0, float(np.linalg.norm(P)))
    if np.min(np.linalg.eigvalsh(P)) < -cfg["psd_tol"] * scale:
        return False
    hph = obs.H @ P @ obs.H.conj().T
    if np.max(np.linalg.eigvalsh(0.5 * (hph + hph.conj().T))) >= 1.0 - cfg["hph_margin"]:
        return False
    _, _, A, _ = _coefficients(P, u, U, sigma)
    F = obs.J - A @ obs.H
    return bool(np.max(np.abs(scipy.linalg.eigvals(F))) < 1.0 - cfg["stability_margin"])


def _correct(P0, u, U, sigma, packer, cfg, tol):
    def fun(v):
        P = packer.unpack(v)
        return packer.pack(_cee_residual(P, u, U, sigma))

    result = root(fun, packer.pack(P0), method="hybr",
                  options={"xtol": cfg["corrector_xtol"], "maxfev": int(cfg["corrector_maxfev"])})
    P = packer.unpack(result.x)
    res = float(np.linalg.norm(_cee_residual(P, u, U, sigma)))
    ok = bool(np.all(np.isfinite(result.x))) and res <= tol * (1.0 + np.linalg.norm(P))
    return ok, P, res


def _psd_projection(P: np.ndarray, tol: float) -> np.ndarray:
    P = 0.5 * (P + P.conj().T)
    w, V = np.linalg.eigh(P)
    if np.min(w) < -tol * max(1.0, float(np.max(np.abs(w)))):
        raise NoSolution(f"CEE solution is indefinite (eigenvalue {np.min(w):.3g})")
    w = np.clip(w, 0.0, None)
    out = (V * w) @ V.conj().T
    return out.real if np.isrealobj(P) else out


def _sqrt_psd(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    root_ = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
    return root_.real if np.isrealobj(M) else root_


def _kalman_rank(F: np.ndarray, X: np.ndarray, tol: float = 1e-8) -> int:
    blocks = [X]
    for _ in range(F.shape[0] - 1):
        blocks.append(F @ blocks[-1])
    K = np.hstack(blocks)
    sv = np.linalg.svd(K, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0] if sv.size else 0.0)))


def solve_cee(
    problem: InterpolationProblem,
    sigma: SigmaParam,
    opts: Optional[Dict[str, Any]] = None
) -> CeeSolution:
    """
    Solve the CEE for the given data and Σ

    The targets are deformed from ½I (where P = 0 is exact) toward the data;
    each step is corrected with a Powell hybrid solve on the packed P and
    accepted only if P stays admissible (P ⪰ 0, HPHᴴ ≺ I, J − AH stable).

    Raises:
        NoSolution: the data fail the Pick test or the final residual is too large
        HomotopyStalled: the continuation step fell below the floor
    """
    cfg = section("homotopy", opts)
    obs = sigma.obs
    if problem.ell != obs.ell or problem.n != obs.n:
        raise DimensionMismatch(f"Σ is sized for (ℓ={obs.ell}, n={obs.n}), problem has (ℓ={problem.ell}, n={problem.n})")
    if not is_solvable(problem, opts):
        raise NoSolution("the Pick matrix of the interpolation data is not positive definite")

    dim, ell = obs.dim, obs.ell
    if dim == 0:
        empty = np.zeros((0, ell))
        sol = CeeSolution(np.zeros((0, 0)), empty, empty, empty, np.eye(ell), empty, empty, np.zeros((0, 0)),
                          problem=problem, sigma=sigma)
        sol.residuals = {"riccati": 0.0, "b_minus_a_2g": 0.0, "interpolation": 0.0}
        sol.diagnostics = {"steps": 0, "minimal": True}
        return sol

    real = problem.is_conjugate_closed() and sigma.is_real
    packer = _HermitianPacker(dim, real)
    P = np.zeros((dim, dim)) if real else np.zeros((dim, dim), dtype=complex)

    def uU_at(tau):
        u, U = build_uU(_deformed(problem, tau), obs, opts)
        if real:
            u, U = np.real(u), np.real(U)
        return u, U

    tau, step, steps, rejected = 0.0, cfg["initial_step"], 0, 0
    loose = max(cfg["residual_tol"] * 100.0, 1e-8)
    while tau < 1.0:
        target = min(1.0, tau + step)
        try:
            u, U = uU_at(target)
            ok, P_new, res = _correct(P, u, U, sigma, packer, cfg, loose)
            ok = ok and _admissible(P_new, u, U, sigma, cfg)
        except (SingularDataMatrix, np.linalg.LinAlgError) as e:
            logger.debug(f"homotopy step to tau={target:.6g} failed: {e}")
            ok, res = False, float("nan")
        if ok:
            tau, P = target, P_new
            steps += 1
            step = min(cfg["max_step"], step * cfg["growth"])
            logger.debug(f"homotopy tau={tau:.6g} residual={res:.3g}")
        else:
            rejected += 1
            step *= 0.5
            if step < cfg["min_step"]:
                raise HomotopyStalled(f"continuation stalled at tau={tau:.6g}")

    u, U = uU_at(1.0)
    ok, P_final, res = _correct(P, u, U, sigma, packer, cfg, cfg["residual_tol"])
    if not ok or not _admissible(P_final, u, U, sigma, cfg):
        raise NoSolution(f"CEE residual {res:.3g} above tolerance at the end of the continuation")
    P = _psd_projection(P_final, cfg["psd_tol"])

    S, G, A, B = _coefficients(P, u, U, sigma)
    hph = obs.H @ P @ obs.H.conj().T
    R = _sqrt_psd(np.eye(ell) - hph)
    sol = CeeSolution(P, G, A, B, R, S, u, U, problem=problem, sigma=sigma)

    F = obs.J - A @ obs.H
    sol.residuals = {
        "riccati": float(np.linalg.norm(_cee_residual(P, u, U, sigma))),
        "b_minus_a_2g": float(np.linalg.norm(B - A - 2.0 * G)),
        "hph_max": float(np.max(np.linalg.eigvalsh(0.5 * (hph + hph.conj().T)))),
        "p_min_eig": float(np.min(np.linalg.eigvalsh(P))),
    }
    sol.diagnostics = {
        "steps": steps,
        "rejected_steps": rejected,
        "real": real,
        "controllability_rank": _kalman_rank(F, G),
        "observability_rank": _kalman_rank(F.conj().T, obs.H.conj().T),
        "riccati_gain": (sigma.Sigma - A) @ R,
    }
    sol.diagnostics["minimal"] = (sol.diagnostics["controllability_rank"] == dim
                                  and sol.diagnostics["observability_rank"] == dim)
    logger.info(f"CEE solved in {steps} step(s), residual {sol.residuals['riccati']:.3g}")
    return sol


# ---------------------------------------------------------------------------
# interpolant
# ---------------------------------------------------------------------------

def _realify(f: RatFun, tol: float = 1e-9) -> RatFun:
    try:
        return RatFun(f.num.as_real(tol), f.den.as_real(tol))
    except ValueError:
        return f


@dataclass(frozen=True)
class Interpolant:
    """F(z) = ½Ã(z)⁻¹B̃(z) = ½I + zH(I − zF)⁻¹G in normalized coordinates"""
    obs: ObserverForm
    A: np.ndarray
    B: np.ndarray
    G: np.ndarray
    normalization: Optional[Normalization] = None

    @property
    def ell(self) -> int:
        return self.obs.ell

    @property
    def A_poly(self) -> MatPoly:
        return self.obs.matpoly(self.A)

    @property
    def B_poly(self) -> MatPoly:
        return self.obs.matpoly(self.B)

    @property
    def A_rev(self) -> MatPoly:
        return self.obs.matpoly_rev(self.A)

    @property
    def B_rev(self) -> MatPoly:
        return self.obs.matpoly_rev(self.B)

    @property
    def F_matrix(self) -> np.ndarray:
        return self.obs.J - self.A @ self.obs.H

    @property
    def degree(self) -> int:
        """Scalar case: degree of the reduced rational interpolant"""
        f = self.ratmat()[0, 0].normalize()
        return max(f.num.degree, f.den.degree)

    def __call__(self, z: complex) -> np.ndarray:
        return 0.5 * np.linalg.solve(self.A_rev(z), self.B_rev(z))

    def phi_plus(self, w: complex) -> np.ndarray:
        return 0.5 * np.linalg.solve(self.A_poly(w), self.B_poly(w))

    def taylor(self, z0: complex, order: int) -> List[np.ndarray]:
        """F^(k)(z0)/k!, k = 0..order"""
        a = self.A_rev.taylor(z0, order)
        b = self.B_rev.taylor(z0, order)
        a0_inv = np.linalg.inv(a[0])
        out: List[np.ndarray] = []
        for p in range(order + 1):
            acc = 0.5 * b[p]
            for i in range(1, p + 1):
                acc = acc - a[i] @ out[p - i]
            out.append(a0_inv @ acc)
        return out

    def original(self, z: complex) -> np.ndarray:
        norm = self.normalization
        if norm is None:
            return self(z)
        return norm.range_inverse(self(norm.domain_map(z)), 0)

    def interpolation_residual(self, problem: InterpolationProblem) -> float:
        worst = 0.0
        for node in problem.nodes:
            got = self.taylor(node.z, node.n - 1)
            for w, g in zip(node.W, got):
                worst = max(worst, float(np.max(np.abs(w - g))) / (1.0 + float(np.max(np.abs(w)))))
        return worst

    def ratmat(self) -> RatMat:
        """Entries of F as rational functions of the normalized variable"""
        b_grid = self.B_rev.grid()
        adj = self.A_rev.adj()
        det = self.A_rev.det()
        ell = self.ell
        grid = []
        for i in range(ell):
            row = []
            for j in range(ell):
                num = Poly()
                for k in range(ell):
                    num = num + adj[i][k] * b_grid[k][j]
                row.append(RatFun(num * 0.5, det))
            grid.append(row)
        return RatMat(grid)

    def _denormalized(self, m: MobiusMap) -> RatMat:
        norm = self.normalization
        composed = self.ratmat().map(lambda f: ratfun_mobius_compose(f, m))
        if norm is not None:
            Ti = norm.T_inv
            composed = composed.left_constant(Ti).right_constant(Ti.conj().T)
            composed = composed + RatMat.from_constant(norm.iS)
        return composed.map(lambda f: _realify(f.normalize()))

    def original_ratmat(self) -> RatMat:
        """F as rational functions of the original disc variable"""
        norm = self.normalization
        m = norm.domain_map if norm is not None else MobiusMap(1.0, 0.0, 0.0, 1.0)
        return self._denormalized(m)

    def in_s(self, direction: MobiusMap = S_TO_Z) -> RatMat:
        """F₁(s) = F(z(s)) in the original coordinates"""
        norm = self.normalization
        inner = norm.domain_map.compose(direction) if norm is not None else direction
        return self._denormalized(inner)


def assemble_interpolant(
    sol: CeeSolution,
    obs: ObserverForm,
    sigma: SigmaParam,
    opts: Optional[Dict[str, Any]] = None
) -> Interpolant:
    """
    Raises:
        UnstableRealization: J − AH has an eigenvalue on or outside the circle
    """
    cfg = section("homotopy", opts)
    if obs.dim:
        radius = float(np.max(np.abs(scipy.linalg.eigvals(obs.J - sol.A @ obs.H))))
        if radius >= 1.0 - cfg["stability_margin"]:
            raise UnstableRealization(f"realization spectral radius {radius:.6g} is not below 1")
        gap = float(np.linalg.norm(sol.B - sol.A - 2.0 * sol.G))
        if gap > 1e-10 * max(1.0, float(np.linalg.norm(sol.B))):
            raise UnstableRealization(f"B − A − 2G = {gap:.3g}")
    norm = sol.problem.normalization if sol.problem is not None else None
    interp = Interpolant(obs, sol.A, sol.B, sol.G, norm)
    if sol.problem is not None:
        sol.residuals["interpolation"] = interp.interpolation_residual(sol.problem)
    return interp


# ---------------------------------------------------------------------------
# spectral factor and positivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralFactor:
    """V(w) = A(w)⁻¹Σ(w)R with V Vᴴ = Φ₊ + Φ₊ᴴ on the unit circle"""
    A_poly: MatPoly
    Sigma_poly: MatPoly
    R: np.ndarray
    interpolant: Interpolant
    zeros: np.ndarray

    def __call__(self, w: complex) -> np.ndarray:
        return np.linalg.solve(self.A_poly(w), self.Sigma_poly(w)) @ self.R

    def identity_residual(self, points: Optional[int] = None) -> float:
        if points is None:
            points = int(section("verification")["spectral_points"])
        worst = 0.0
        for theta in np.linspace(0.0, 2.0 * np.pi, points, endpoint=False):
            w = np.exp(1j * theta)
            V = self(w)
            phi = self.interpolant.phi_plus(w)
            worst = max(worst, float(np.max(np.abs(V @ V.conj().T - phi - phi.conj().T))))
        return worst


def spectral_factor(sol: CeeSolution, obs: ObserverForm, sigma: SigmaParam) -> SpectralFactor:
    interp = Interpolant(obs, sol.A, sol.B, sol.G, None)
    return SpectralFactor(obs.matpoly(sol.A), sigma.poly, sol.R, interp, sigma.roots)


def check_positive_real(interp: Interpolant, opts: Optional[Dict[str, Any]] = None) -> float:
    """Smallest eigenvalue of F(z) + F(z)ᴴ over a circle just inside the disc boundary"""
    cfg = section("verification", opts)
    radius = cfg["circle_radius"]
    margin = np.inf
    for theta in np.linspace(0.0, 2.0 * np.pi, int(cfg["circle_points"]), endpoint=False):
        F = interp(radius * np.exp(1j * theta))
        margin = min(margin, float(np.min(np.linalg.eigvalsh(F + F.conj().T))))
    return float(margin)


def solve_interpolation(
    problem: InterpolationProblem,
    sigma: Optional[SigmaParam] = None,
    opts: Optional[Dict[str, Any]] = None
) -> Tuple[Interpolant, CeeSolution, SigmaParam]:
    """solve_cee + assemble_interpolant with the default Σ when none is given"""
    obs = sigma.obs if sigma is not None else build_observer_form(problem.ell, problem.n)
    sigma = sigma or SigmaParam.default(obs)
    sol = solve_cee(problem, sigma, opts)
    interp = assemble_interpolant(sol, obs, sigma, opts)
    sol.residuals["positivity_margin"] = check_positive_real(interp, opts)
    return interp, sol, sigma
