#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
State-space realizations of proper rational matrices

Products, inverses and coprime-factor quotients of rational matrices are
formed on (A, B, C, D) quadruples and reduced to minimal order before they
are turned back into rational entries. Cascading the same operations on
entrywise numerators and denominators multiplies degrees and leaves
cancellations to root matching, which does not survive the 2×2 examples.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional

import numpy as np
import scipy.linalg

from .config import section
from .errors import ImproperSystem
from .ratfun import Poly, RatFun, RatMat, poly_difference
from .utils.logger import get_logger

logger = get_logger(__name__)


def _as_block(value: Any, rows: int, cols: int) -> np.ndarray:
    arr = np.asarray(value)
    if arr.size == 0:
        arr = np.zeros((rows, cols))
    arr = arr.reshape(rows, cols)
    if np.iscomplexobj(arr) and np.all(np.abs(arr.imag) <= 1e-14 * max(1.0, float(np.max(np.abs(arr), initial=0.0)))):
        arr = arr.real
    return arr.astype(complex) if np.iscomplexobj(arr) else arr.astype(float)


def _dtype(*arrays: np.ndarray) -> Any:
    return complex if any(np.iscomplexobj(a) for a in arrays) else float


def _diag_blocks(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=_dtype(a, b))
    out[:a.shape[0], :a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


@dataclass(frozen=True)
class Realization:
    """G(s) = D + C (sI − A)⁻¹ B"""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D))
        p, m = D.shape
        n = int(np.asarray(self.A).shape[0]) if np.asarray(self.A).size else 0
        object.__setattr__(self, "A", _as_block(self.A, n, n))
        object.__setattr__(self, "B", _as_block(self.B, n, m))
        object.__setattr__(self, "C", _as_block(self.C, p, n))
        object.__setattr__(self, "D", _as_block(D, p, m))

    # --- constructors ---

    @classmethod
    def static(cls, D: Any) -> "Realization":
        D = np.atleast_2d(np.asarray(D))
        p, m = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    @classmethod
    def from_ratfun(cls, f: RatFun) -> "Realization":
        """
        Controllable companion form of a proper scalar function

        Raises:
            ImproperSystem: deg num > deg den
        """
        if f.num.is_zero:
            return cls.static([[0.0]])
        if not f.is_proper:
            raise ImproperSystem(f"cannot realize an improper function (relative degree {f.relative_degree})")
        lead = f.den.leading
        a = f.den.coeffs / lead
        n = f.den.degree
        b = np.zeros(n + 1, dtype=complex)
        b[: len(f.num.coeffs)] = f.num.coeffs / lead
        d = b[n]
        if n == 0:
            return cls.static([[d]])
        r = b[:n] - d * a[:n]
        A = np.zeros((n, n), dtype=complex)
        A[np.arange(n - 1), np.arange(1, n)] = 1.0
        A[n - 1, :] = -a[:n]
        B = np.zeros((n, 1))
        B[n - 1, 0] = 1.0
        return cls(A, B, r.reshape(1, n), [[d]])

    @classmethod
    def from_ratmat(cls, R: RatMat) -> "Realization":
        """Entrywise companion forms stacked block-diagonally, then balanced"""
        p, m = R.shape
        parts = [[cls.from_ratfun(f) for f in row] for row in R.entries()]
        n = sum(part.states for row in parts for part in row)
        dtype = _dtype(*(x for row in parts for part in row for x in (part.A, part.C, part.D)))
        A = np.zeros((n, n), dtype=dtype)
        B = np.zeros((n, m), dtype=dtype)
        C = np.zeros((p, n), dtype=dtype)
        D = np.zeros((p, m), dtype=dtype)
        offset = 0
        for i, row in enumerate(parts):
            for j, part in enumerate(row):
                k = part.states
                A[offset:offset + k, offset:offset + k] = part.A
                B[offset:offset + k, j] = part.B[:, 0]
                C[i, offset:offset + k] = part.C[0]
                D[i, j] = part.D[0, 0]
                offset += k
        return cls(A, B, C, D).balanced()

    # --- shape ---

    @property
    def states(self) -> int:
        return self.A.shape[0]

    @property
    def inputs(self) -> int:
        return self.D.shape[1]

    @property
    def outputs(self) -> int:
        return self.D.shape[0]

    def __call__(self, s: complex) -> np.ndarray:
        if not self.states:
            return self.D.astype(complex)
        return self.D + self.C @ np.linalg.solve(s * np.eye(self.states) - self.A, self.B)

    # --- interconnections ---

    def series(self, after: "Realization") -> "Realization":
        """u → self → after → y, i.e. after·self"""
        if after.inputs != self.outputs:
            raise ValueError(f"cannot feed {self.outputs} output(s) into {after.inputs} input(s)")
        n1, n2 = self.states, after.states
        dtype = _dtype(self.A, after.A, self.C, after.B)
        A = np.zeros((n1 + n2, n1 + n2), dtype=dtype)
        A[:n1, :n1] = self.A
        A[n1:, n1:] = after.A
        A[n1:, :n1] = after.B @ self.C
        B = np.concatenate([self.B, after.B @ self.D], axis=0)
        C = np.concatenate([after.D @ self.C, after.C], axis=1)
        return Realization(A, B, C, after.D @ self.D)

    def __matmul__(self, other: "Realization") -> "Realization":
        return other.series(self)

    def __add__(self, other: "Realization") -> "Realization":
        if self.D.shape != other.D.shape:
            raise ValueError(f"cannot add {self.D.shape} and {other.D.shape} systems")
        A = _diag_blocks(self.A, other.A)
        B = np.concatenate([self.B, other.B], axis=0)
        C = np.concatenate([self.C, other.C], axis=1)
        return Realization(A, B, C, self.D + other.D)

    def scale(self, c: complex) -> "Realization":
        return Realization(self.A, self.B, self.C * c, self.D * c)

    def hstack(self, other: "Realization") -> "Realization":
        """[self other]: same outputs, stacked inputs"""
        if self.outputs != other.outputs:
            raise ValueError("systems need the same number of outputs")
        A = _diag_blocks(self.A, other.A)
        B = _diag_blocks(self.B, other.B)
        C = np.concatenate([self.C, other.C], axis=1)
        return Realization(A, B, C, np.concatenate([self.D, other.D], axis=1))

    def vstack(self, other: "Realization") -> "Realization":
        """[self; other]: same inputs, stacked outputs"""
        if self.inputs != other.inputs:
            raise ValueError("systems need the same number of inputs")
        A = _diag_blocks(self.A, other.A)
        B = np.concatenate([self.B, other.B], axis=0)
        C = _diag_blocks(self.C, other.C)
        return Realization(A, B, C, np.concatenate([self.D, other.D], axis=0))

    def columns(self, index: Iterable[int]) -> "Realization":
        index = list(index)
        return Realization(self.A, self.B[:, index], self.C, self.D[:, index])

    def rows(self, index: Iterable[int]) -> "Realization":
        index = list(index)
        return Realization(self.A, self.B, self.C[index, :], self.D[index, :])

    def _feedthrough_inverse(self, D: np.ndarray, what: str) -> np.ndarray:
        if D.shape[0] != D.shape[1]:
            raise ImproperSystem(f"{what}: feedthrough is {D.shape[0]}x{D.shape[1]}, not square")
        if np.linalg.cond(D) > 1e12:
            raise ImproperSystem(f"{what}: feedthrough matrix is singular")
        return np.linalg.inv(D)

    def inverse(self) -> "Realization":
        """
        G⁻¹ = (A − BD⁻¹C, BD⁻¹, −D⁻¹C, D⁻¹)

        Raises:
            ImproperSystem: D is singular, so G⁻¹ is not proper
        """
        Di = self._feedthrough_inverse(self.D, "inverse")
        return Realization(self.A - self.B @ Di @ self.C, self.B @ Di, -Di @ self.C, Di)

    def left_fraction(self, split: int) -> "Realization":
        """
        D_c⁻¹N_c for self = [N_c D_c], N_c being the first `split` inputs

        Uses the states of self directly, so the McMillan degree of the
        quotient never exceeds that of [N_c D_c].

        Raises:
            ImproperSystem: D_c(∞) is singular
        """
        Bn, Bd = self.B[:, :split], self.B[:, split:]
        Dn, Dd = self.D[:, :split], self.D[:, split:]
        Di = self._feedthrough_inverse(Dd, "left fraction")
        return Realization(self.A - Bd @ Di @ self.C, Bn - Bd @ Di @ Dn, Di @ self.C, Di @ Dn)

    # --- reduction ---

    def balanced(self) -> "Realization":
        if not self.states:
            return self
        A, T = scipy.linalg.matrix_balance(self.A, permute=False, separate=True)
        scale = T[0]
        return Realization(A, self.B / scale[:, None], self.C * scale[None, :], self.D)

    def minimal(self, tol: Optional[float] = None, opts: Optional[Dict[str, Any]] = None) -> "Realization":
        """
        Controllable part, then the observable part of that

        Both are orthonormal Krylov bases; a direction counts when its
        singular value exceeds tol·max(‖A‖, ‖B‖) (‖A‖, ‖C‖ for observability).
        """
        if tol is None:
            tol = section("tolerances", opts)["minimal"]
        if not self.states:
            return self
        V = _krylov_basis(self.A, self.B, tol)
        reduced = Realization(V.conj().T @ self.A @ V, V.conj().T @ self.B, self.C @ V, self.D)
        if not reduced.states:
            return reduced
        W = _krylov_basis(reduced.A.conj().T, reduced.C.conj().T, tol)
        out = Realization(W.conj().T @ reduced.A @ W, W.conj().T @ reduced.B, reduced.C @ W, reduced.D)
        if out.states < self.states:
            logger.debug(f"minimal realization: {self.states} -> {out.states} states")
        return out

    # --- spectra ---

    def poles(self) -> np.ndarray:
        if not self.states:
            return np.zeros(0, dtype=complex)
        return scipy.linalg.eigvals(self.A)

    def zeros(self) -> np.ndarray:
        """
        Zeros of a square G with invertible D: the poles of G⁻¹

        For a minimal realization these are the zeros of det G counted as
        transmission zeros.

        Raises:
            ImproperSystem: D is singular
        """
        return self.inverse().poles()

    # --- conversion ---

    def to_ratfun(self, tol: Optional[float] = None) -> RatFun:
        """Scalar transfer function of a 1×1 system from characteristic polynomials"""
        if self.D.shape != (1, 1):
            raise ValueError(f"to_ratfun needs a 1x1 system, got {self.D.shape}")
        sub = self.minimal(tol)
        d = complex(sub.D[0, 0])
        if not sub.states:
            return RatFun.constant(d)
        den = _charpoly(sub.A)
        # det(sI − A + BC) = det(sI − A)·(1 + C(sI − A)⁻¹B)
        strict = poly_difference(_charpoly(sub.A - sub.B @ sub.C), den, 1e-11)
        num = strict + den * d if d != 0 else strict
        f = RatFun(num, den)
        try:
            return f.as_real()
        except ValueError:
            return f

    def to_ratmat(self, tol: Optional[float] = None) -> RatMat:
        return RatMat([
            [Realization(self.A, self.B[:, [j]], self.C[[i], :], self.D[[i], [j]].reshape(1, 1)).to_ratfun(tol)
             for j in range(self.inputs)]
            for i in range(self.outputs)
        ])


def _charpoly(A: np.ndarray) -> Poly:
    """det(sI − A), ascending coefficients"""
    coeffs = np.poly(A)[::-1]
    p = Poly(coeffs)
    try:
        return p.as_real()
    except ValueError:
        return p


def _krylov_basis(A: np.ndarray, B: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of span[B, AB, A²B, …] by block Arnoldi with reorthogonalization"""
    n = A.shape[0]
    dtype = _dtype(A, B)
    reference = max(np.linalg.norm(A, 2) if n else 0.0, np.linalg.norm(B, 2) if B.size else 0.0, 1e-300)
    V = np.zeros((n, 0), dtype=dtype)
    W = B.astype(dtype)
    while V.shape[1] < n and W.shape[1]:
        for _ in range(2):
            W = W - V @ (V.conj().T @ W)
        U, sv, _ = np.linalg.svd(W, full_matrices=False)
        rank = min(int(np.sum(sv > tol * reference)), n - V.shape[1])
        if rank == 0:
            break
        U = U[:, :rank]
        V = np.concatenate([V, U], axis=1)
        W = A @ U
    return V


def realize(R: RatMat, opts: Optional[Dict[str, Any]] = None) -> Realization:
    """Minimal realization of a proper rational matrix"""
    return Realization.from_ratmat(R).minimal(opts=opts)


def mcmillan_degree(R: RatMat, opts: Optional[Dict[str, Any]] = None) -> int:
    return realize(R, opts).states

