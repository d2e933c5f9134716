# -*- coding: utf-8 -*-
import os

import numpy as np
import pandas as pd
import pytest

from simstab.errors import SingularLoop
from simstab.problem import MimoPlant, Plant
from simstab.ratfun import RatFun, RatMat
from simstab.stabilize import Compensator
from simstab.verify import (
    LOCI_COLUMNS,
    SweepEntry,
    SweepReport,
    closedloop_mimo,
    closedloop_siso,
    emit_loci,
    lambda_sweep,
    map_ordered,
    matrix_coprime_factors,
    mimo_characteristic_zeros,
    siso_loop,
)

GRID = np.linspace(0.0, 1.0, 11)


@pytest.fixture
def scaled_family(unstable_first_order):
    """p_λ = (1 + λ)/(s − 1)"""
    other = Plant(unstable_first_order.x * 2.0, unstable_first_order.y)
    return unstable_first_order, other


@pytest.fixture
def diagonal_plant():
    """P = diag(1/(s − 1), 2/(s − 2))"""
    N = RatMat([[RatFun.from_roots([], [-1.0]), 0.0], [0.0, RatFun.from_roots([], [-1.0], 2.0)]])
    D = RatMat([[RatFun.from_roots([1.0], [-1.0]), 0.0], [0.0, RatFun.from_roots([2.0], [-1.0])]])
    return MimoPlant(N, D)


class TestSisoLoop:

    def test_static_gain_moves_the_pole(self):
        p = RatFun.from_roots([], [1.0])
        loop = closedloop_siso(p, RatFun.constant(4.0))
        assert [complex(r) for r in loop.poles()] == pytest.approx([-3.0])
        assert loop(0.0) == pytest.approx(1.0 / 3.0)

    def test_hidden_mode_is_reported(self):
        p = RatFun.from_roots([0.5], [-1.0])
        k = RatFun.from_roots([], [0.5])
        _, poles = siso_loop(p, k)
        assert list(poles.poles) == pytest.approx([-2.0])
        assert list(poles.hidden) == pytest.approx([0.5])

    def test_singular_loop(self):
        p = RatFun.from_roots([], [-1.0])
        k = RatFun.from_roots([-1.0], [], -1.0)  # k = -(s + 1), so 1 + kp = 0
        with pytest.raises(SingularLoop):
            closedloop_siso(p, k)


class TestMimoLoop:

    def test_closed_loop_transfer(self):
        P = RatMat([[RatFun.from_roots([], [1.0]), 0.0], [0.0, RatFun.from_roots([], [2.0], 2.0)]])
        K = RatMat.from_constant(np.diag([4.0, 6.0]))
        loop = closedloop_mimo(P, K)
        assert np.allclose(loop(0.0), np.diag([1.0 / 3.0, 0.2]))

    def test_characteristic_zeros(self, diagonal_plant):
        N_c, D_c = matrix_coprime_factors(RatMat.from_constant(np.diag([4.0, 6.0])))
        zeros = mimo_characteristic_zeros(N_c, D_c, diagonal_plant)
        assert sorted(zeros.real) == pytest.approx([-10.0, -3.0])
        assert np.allclose(zeros.imag, 0.0)

    def test_coprime_factors_reproduce_the_compensator(self):
        K = RatMat([[RatFun.from_roots([], [-2.0]), 1.0], [0.0, RatFun.from_roots([-1.0], [-3.0])]])
        N_c, D_c = matrix_coprime_factors(K)
        s = 0.4 + 0.3j
        assert np.allclose(np.linalg.solve(D_c(s), N_c(s)), K(s))


class TestSweep:

    def test_stabilized_family(self, scaled_family):
        report = lambda_sweep(scaled_family, Compensator(scalar=RatFun.constant(4.0)), GRID)
        assert report.stable
        assert report.lambda_values == pytest.approx(list(GRID))
        poles = [e.poles[0].real for e in report.entries]
        assert poles == pytest.approx([-3.0 - 4.0 * lam for lam in GRID])
        assert report.worst_margin == pytest.approx(0.25)

    def test_open_loop_is_unstable(self, scaled_family):
        report = lambda_sweep(scaled_family, None, [0.0, 1.0])
        assert report.open_loop
        assert not report.stable
        assert report.unstable_lambdas() == [0.0, 1.0]

    def test_hidden_mode_fails_the_sweep(self):
        plant = Plant(RatFun.from_roots([0.5], [-1.0]), RatFun.constant(1.0))
        comp = Compensator(scalar=RatFun.from_roots([], [0.5]))
        report = lambda_sweep((plant, plant), comp, [0.0, 1.0])
        assert not report.stable
        assert report.summary()["hidden_modes"] == 2

    def test_mimo_family(self, diagonal_plant):
        comp = Compensator(matrix=RatMat.from_constant(np.diag([4.0, 6.0])))
        report = lambda_sweep((diagonal_plant, diagonal_plant), comp, [0.0, 0.5, 1.0])
        assert report.stable

    @pytest.mark.parametrize("grid", [[], [0.0, 1.5], [-0.1]])
    def test_invalid_grid(self, scaled_family, grid):
        with pytest.raises(ValueError):
            lambda_sweep(scaled_family, None, grid)

    def test_parallel_sweep_keeps_order(self, scaled_family):
        comp = Compensator(scalar=RatFun.constant(4.0))
        serial = lambda_sweep(scaled_family, comp, GRID)
        parallel = lambda_sweep(scaled_family, comp, GRID, {"parallel": True, "workers": 3})
        assert parallel.lambda_values == serial.lambda_values
        assert parallel.to_frame().equals(serial.to_frame())


def test_map_ordered_with_a_pool():
    items = list(range(20))
    assert map_ordered(lambda v: v * v, items, {"parallel": True, "workers": 4}) == [v * v for v in items]
    assert map_ordered(lambda v: -v, items, {"parallel": False}) == [-v for v in items]


class TestLoci:

    def _report(self):
        entries = [
            SweepEntry(0.5, np.array([-2.0 + 0j, -0.25 + 0j])),
            SweepEntry(0.0, np.array([-3.0 + 0j])),
        ]
        return SweepReport(entries)

    def test_frame_is_sorted_by_lambda_then_magnitude(self):
        df = self._report().to_frame()
        assert list(df.columns) == LOCI_COLUMNS
        assert list(df["lambda"]) == [0.0, 0.5, 0.5]
        assert list(df["re_s"]) == pytest.approx([-3.0, -0.25, -2.0])
        assert list(df["abs_z"]) == pytest.approx([0.5, 0.6, 1.0 / 3.0])
        assert set(df["stable"]) == {1}

    def test_csv_output(self, tmp_path):
        paths = emit_loci(self._report(), str(tmp_path), formats=("csv",), stem="loci")
        assert os.path.exists(paths["csv"])
        df = pd.read_csv(paths["csv"])
        assert list(df.columns) == LOCI_COLUMNS
        assert df.loc[0, "re_s"] == pytest.approx(-3.0)
        assert df.loc[0, "abs_z"] == pytest.approx(0.5)

    def test_empty_report(self, tmp_path):
        with pytest.raises(ValueError):
            emit_loci(SweepReport([]), str(tmp_path))

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_loci(self._report(), str(tmp_path), formats=("png",))
