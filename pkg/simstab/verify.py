#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Closed-loop verification

Forms the feedback loop for every plant of the family p_λ (P_λ), computes its
poles from explicit symbolic denominators, maps them to the disc through
z = (1 + s)/(1 − s) and emits the loci as CSV and SVG files.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .config import section
from .errors import ImproperSystem, SimStabError, SingularLoop
from .problem import MimoPlant, Plant
from .ratfun import Poly, RatFun, RatMat, _poly_det, normalize_with_report, ratfun_normalize
from .realization import realize
from .rootfind import plot_map
from .stabilize import Compensator
from .utils.logger import get_logger

logger = get_logger(__name__)

# Try to import matplotlib
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    MATPLOTLIB_AVAILABLE = True
except ImportError:
    MATPLOTLIB_AVAILABLE = False

LOCI_COLUMNS = ["lambda", "re_s", "im_s", "re_z", "im_z", "abs_z", "stable"]

Family = Union[Tuple[Plant, Plant], Tuple[MimoPlant, MimoPlant]]


def _multiset_difference(roots: Sequence[complex], remove: Sequence[complex], tol: float) -> List[complex]:
    """Roots left after greedily matching each element of remove"""
    remaining = list(roots)
    for r in remove:
        if not remaining:
            break
        dists = [abs(r - q) for q in remaining]
        j = int(np.argmin(dists))
        if dists[j] <= tol * (1.0 + abs(r)):
            remaining.pop(j)
    return remaining


# ---------------------------------------------------------------------------
# closed loops
# ---------------------------------------------------------------------------

@dataclass
class LoopPoles:
    poles: np.ndarray
    hidden: np.ndarray
    near_pairs: int = 0


def closedloop_siso(p: RatFun, k: RatFun, opts: Optional[Dict[str, Any]] = None) -> RatFun:
    """
    p(1 + kp)⁻¹, normalized

    Raises:
        SingularLoop: 1 + kp vanishes identically
    """
    return siso_loop(p, k, opts)[0]


def siso_loop(p: RatFun, k: RatFun, opts: Optional[Dict[str, Any]] = None) -> Tuple[RatFun, LoopPoles]:
    """Closed loop together with its poles and the hidden modes cancelled from it"""
    cfg = section("verification", opts)
    p = ratfun_normalize(p)
    k = ratfun_normalize(k)
    char = p.den * k.den + p.num * k.num
    reference = (p.den * k.den).scale + (p.num * k.num).scale
    if char.is_zero or char.scale <= 1e-13 * reference:
        raise SingularLoop("1 + k*p vanishes identically")
    loop, report = normalize_with_report(
        RatFun(p.num * k.den, char), tol=cfg["loop_cancel"], warn=cfg["near_cancel_warn"]
    )
    poles = np.array(loop.poles(), dtype=complex)
    char_roots = char.roots() if char.degree >= 1 else []
    hidden = np.array(_multiset_difference(char_roots, poles, 1e-6), dtype=complex)
    if hidden.size:
        logger.debug(f"{hidden.size} hidden mode(s) cancelled from the closed loop")
    return loop, LoopPoles(poles, hidden, len(report.near_pairs))


def closedloop_mimo(P: RatMat, K: RatMat, opts: Optional[Dict[str, Any]] = None) -> RatMat:
    """
    P(I + KP)⁻¹ via the adjugate

    Raises:
        SingularLoop: det(I + KP) vanishes identically
        UnsupportedDimension: dimension above the cofactor limit
    """
    m = P.shape[1]
    loop = RatMat.identity(m) + K @ P
    adj, det = loop.adj_det()
    if det.is_zero:
        raise SingularLoop("det(I + K*P) vanishes identically")
    return (P @ adj).scale(1.0 / det).normalize(section("verification", opts)["loop_cancel"])


def matrix_coprime_factors(K: RatMat) -> Tuple[RatMat, RatMat]:
    """Stable left factors K = D_c⁻¹N_c over the common denominator of K"""
    grid, d = K.common_denominator()
    e = Poly.from_roots([-1.0] * max(d.degree, 0))
    m = K.shape[0]
    N_c = RatMat([[RatFun(p, e) for p in row] for row in grid])
    D_c = RatMat([[RatFun(d if i == j else Poly(), e) for j in range(m)] for i in range(m)])
    return N_c, D_c


def mimo_characteristic_zeros(
    N_c: RatMat,
    D_c: RatMat,
    plant: MimoPlant,
    opts: Optional[Dict[str, Any]] = None
) -> np.ndarray:
    """
    Zeros of Δ = N_c N + D_c D, the closed-loop poles of P = N D⁻¹ under K = D_c⁻¹N_c

    Δ is realized as [N_c D_c]·[N; D] and reduced to minimal order, so the
    zeros are the poles of Δ⁻¹. A Δ with singular Δ(∞) falls back to the
    zeros of det Δ over the common denominator.

    Raises:
        SingularLoop: det Δ vanishes identically
    """
    left = realize(RatMat.block([[N_c, D_c]]), opts)
    right = realize(RatMat.block([[plant.N], [plant.D]]), opts)
    try:
        return (left @ right).minimal(opts=opts).zeros()
    except ImproperSystem:
        logger.debug("singular feedthrough in N_c N + D_c D, using the determinant")
    delta = N_c @ plant.N + D_c @ plant.D
    m = delta.shape[0]
    grid, d = delta.common_denominator()
    det = _poly_det(grid)
    if det.is_zero:
        raise SingularLoop("det(N_c N + D_c D) vanishes identically")
    f = ratfun_normalize(RatFun(det, d ** m))
    return np.array(f.zeros(), dtype=complex)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepEntry:
    lam: float
    poles: np.ndarray
    hidden: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    error: Optional[str] = None
    near_pairs: int = 0

    def max_abs_z(self) -> float:
        values = [abs(plot_map(s)) for s in np.concatenate([self.poles, self.hidden])]
        return float(max(values, default=0.0))

    def is_stable(self, band: float) -> bool:
        return self.error is None and self.max_abs_z() < 1.0 - band


@dataclass
class SweepReport:
    """Closed-loop poles of the feedback family across the λ grid"""
    entries: List[SweepEntry]
    margin_band: float = 1e-6
    open_loop: bool = False
    artifacts: Dict[str, str] = field(default_factory=dict)

    @property
    def lambda_values(self) -> List[float]:
        return [e.lam for e in self.entries]

    @property
    def stable(self) -> bool:
        return bool(self.entries) and all(e.is_stable(self.margin_band) for e in self.entries)

    @property
    def worst_margin(self) -> float:
        if any(e.error for e in self.entries):
            return -np.inf
        return float(1.0 - max((e.max_abs_z() for e in self.entries), default=0.0))

    def unstable_lambdas(self) -> List[float]:
        return [e.lam for e in self.entries if not e.is_stable(self.margin_band)]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for e in self.entries:
            for s in e.poles:
                z = plot_map(s)
                rows.append({
                    "lambda": e.lam,
                    "re_s": s.real,
                    "im_s": s.imag,
                    "re_z": z.real,
                    "im_z": z.imag,
                    "abs_z": abs(z),
                    "stable": int(abs(z) < 1.0 - self.margin_band),
                })
        df = pd.DataFrame(rows, columns=LOCI_COLUMNS)
        if df.empty:
            return df
        return df.sort_values(["lambda", "abs_z"], ascending=[True, False], kind="mergesort").reset_index(drop=True)

    def summary(self) -> Dict[str, Any]:
        return {
            "stable": self.stable,
            "worst_margin": self.worst_margin,
            "open_loop": self.open_loop,
            "lambda_points": len(self.entries),
            "unstable_lambdas": self.unstable_lambdas(),
            "hidden_modes": sum(int(e.hidden.size) for e in self.entries),
            "near_cancellations": sum(e.near_pairs for e in self.entries),
            "errors": {str(e.lam): e.error for e in self.entries if e.error},
            "artifacts": dict(self.artifacts),
        }


def map_ordered(fn: Callable[[Any], Any], items: Sequence[Any], cfg: Dict[str, Any]) -> List[Any]:
    """fn over items, on a thread pool when cfg enables it; results keep input order"""
    if cfg.get("parallel") and len(items) > 1:
        with ThreadPoolExecutor(max_workers=int(cfg["workers"])) as pool:
            return list(pool.map(fn, items))
    return [fn(v) for v in items]


def lambda_sweep(
    family: Family,
    comp: Optional[Compensator] = None,
    grid: Optional[Sequence[float]] = None,
    opts: Optional[Dict[str, Any]] = None
) -> SweepReport:
    """
    Closed-loop poles of p_λ (or P_λ) under one compensator for every λ in grid

    A missing compensator sweeps the open loop (k = 0 / K = 0).

    Raises:
        ValueError: empty grid or λ outside [0, 1]
    """
    cfg = section("verification", opts)
    lambdas = [float(v) for v in (grid if grid is not None else np.linspace(0.0, 1.0, int(cfg["lambda_points"])))]
    if not lambdas:
        raise ValueError("lambda grid is empty")
    if any(v < 0.0 or v > 1.0 for v in lambdas):
        raise ValueError("lambda grid must lie in [0, 1]")

    first, second = family
    open_loop = comp is None
    if isinstance(first, Plant):
        k = RatFun.constant(0.0) if open_loop else comp.scalar

        def entry(lam: float) -> SweepEntry:
            try:
                _, loop = siso_loop(first.blend(second, lam).transfer, k, opts)
                return SweepEntry(lam, loop.poles, loop.hidden, near_pairs=loop.near_pairs)
            except SimStabError as err:
                return SweepEntry(lam, np.zeros(0, dtype=complex), error=f"{type(err).__name__}: {err}")
    else:
        m = first.dim
        if open_loop:
            N_c, D_c = RatMat.zeros(m, m), RatMat.identity(m)
        elif comp.N_c is not None:
            N_c, D_c = comp.N_c, comp.D_c
        else:
            N_c, D_c = matrix_coprime_factors(comp.matrix)

        def entry(lam: float) -> SweepEntry:
            try:
                poles = mimo_characteristic_zeros(N_c, D_c, first.blend(second, lam), opts)
                return SweepEntry(lam, poles)
            except SimStabError as err:
                return SweepEntry(lam, np.zeros(0, dtype=complex), error=f"{type(err).__name__}: {err}")

    entries = map_ordered(entry, lambdas, cfg)
    report = SweepReport(entries, float(cfg["margin_band"]), open_loop)
    verdict = "stable" if report.stable else "UNSTABLE"
    logger.info(f"lambda sweep over {len(entries)} point(s): {verdict}, worst margin {report.worst_margin:.3g}")
    return report


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def plot_loci(report: SweepReport, out_path: str, opts: Optional[Dict[str, Any]] = None) -> Optional[str]:
    """Scatter of the z-domain poles over the unit circle"""
    if not MATPLOTLIB_AVAILABLE:
        logger.warning("matplotlib not found, skipping loci plot")
        return None
    chart = section("chart", opts)
    df = report.to_frame()
    finite = df[np.isfinite(df["abs_z"])] if not df.empty else df
    reach = max(1.0, float(finite["abs_z"].max()) if not finite.empty else 1.0) * 1.1

    fig, ax = plt.subplots(figsize=chart["figure_size"])
    theta = np.linspace(0.0, 2.0 * np.pi, 400)
    ax.plot(np.cos(theta), np.sin(theta), color=chart["circle_color"], linewidth=1.0)
    for flag, color in ((1, chart["stable_color"]), (0, chart["unstable_color"])):
        part = finite[finite["stable"] == flag] if not finite.empty else finite
        if not part.empty:
            ax.scatter(part["re_z"], part["im_z"], s=chart["marker_size"], color=color)
    ax.set_xlim(-reach, reach)
    ax.set_ylim(-reach, reach)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    title = "open-loop poles" if report.open_loop else "closed-loop poles"
    ax.set_title(f"{title}, {len(report.entries)} lambda value(s)")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def emit_loci(
    report: SweepReport,
    out_dir: str,
    formats: Sequence[str] = ("csv", "svg"),
    stem: str = "loci",
    opts: Optional[Dict[str, Any]] = None
) -> Dict[str, str]:
    """
    Write the loci CSV and/or SVG

    Raises:
        ValueError: empty report or unknown format
        OSError: the output directory cannot be written
    """
    if not report.entries:
        raise ValueError("cannot emit loci for an empty sweep")
    unknown = set(formats) - {"csv", "svg"}
    if unknown:
        raise ValueError(f"unsupported loci format(s): {sorted(unknown)}")
    os.makedirs(out_dir, exist_ok=True)
    float_format = section("output", opts)["float_format"]

    paths: Dict[str, str] = {}
    if "csv" in formats:
        path = os.path.join(out_dir, f"{stem}.csv")
        report.to_frame().to_csv(path, index=False, float_format=float_format)
        paths["csv"] = path
        logger.info(f"loci written to {path}")
    if "svg" in formats:
        path = plot_loci(report, os.path.join(out_dir, f"{stem}.svg"), opts)
        if path:
            paths["svg"] = path
    report.artifacts.update(paths)
    return paths
