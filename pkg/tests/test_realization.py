# -*- coding: utf-8 -*-
import numpy as np
import pytest

from simstab.errors import ImproperSystem
from simstab.ratfun import RatFun, RatMat
from simstab.realization import Realization, mcmillan_degree, realize

POINTS = [0.3 + 0.2j, -0.7 + 1.1j, 2.0, 5.0j]


def _agree(sys: Realization, R, points=POINTS) -> bool:
    return all(np.allclose(sys(s), np.atleast_2d(R(s))) for s in points)


class TestScalar:

    def test_companion_form_matches_the_function(self):
        f = RatFun.from_roots([-3.0, 0.5], [-1.0, -2.0, -4.0], 2.0)
        sys = Realization.from_ratfun(f)
        assert sys.states == 3
        assert _agree(sys, f)

    def test_biproper_function_keeps_its_feedthrough(self):
        f = RatFun.from_roots([1.0], [-2.0])
        sys = Realization.from_ratfun(f)
        assert sys.D[0, 0] == pytest.approx(1.0)
        assert _agree(sys, f)

    def test_constant(self):
        sys = Realization.from_ratfun(RatFun.constant(3.0))
        assert sys.states == 0
        assert sys(1.0)[0, 0] == pytest.approx(3.0)

    def test_improper_function_is_rejected(self):
        with pytest.raises(ImproperSystem):
            Realization.from_ratfun(RatFun.from_roots([-1.0, -2.0], [-3.0]))

    def test_transfer_function_round_trip(self):
        f = RatFun.from_roots([-3.0], [-1.0, -2.0], 4.0)
        g = Realization.from_ratfun(f).to_ratfun()
        assert g.den.degree == 2
        assert [g(s) for s in POINTS] == pytest.approx([f(s) for s in POINTS])


class TestInterconnection:

    def test_product(self):
        f = RatFun.from_roots([], [-1.0])
        g = RatFun.from_roots([2.0], [-3.0])
        sys = Realization.from_ratfun(f) @ Realization.from_ratfun(g)
        assert _agree(sys, f * g)

    def test_sum(self):
        f = RatFun.from_roots([], [-1.0])
        g = RatFun.from_roots([2.0], [-3.0])
        sys = Realization.from_ratfun(f) + Realization.from_ratfun(g)
        assert _agree(sys, f + g)

    def test_inverse(self):
        f = RatFun.from_roots([1.0, -5.0], [-2.0, -3.0], 2.0)
        sys = Realization.from_ratfun(f).inverse()
        assert _agree(sys, 1.0 / f, [0.3 + 0.2j, 2.0, 5.0j])

    def test_strictly_proper_function_has_no_proper_inverse(self):
        with pytest.raises(ImproperSystem):
            Realization.from_ratfun(RatFun.from_roots([], [-1.0])).inverse()

    def test_stacking(self):
        f = RatFun.from_roots([], [-1.0])
        g = RatFun.from_roots([2.0], [-3.0])
        row = Realization.from_ratfun(f).hstack(Realization.from_ratfun(g))
        col = Realization.from_ratfun(f).vstack(Realization.from_ratfun(g))
        s = 0.4 + 0.1j
        assert np.allclose(row(s), [[f(s), g(s)]])
        assert np.allclose(col(s), [[f(s)], [g(s)]])
        assert np.allclose(row.columns([1])(s), [[g(s)]])
        assert np.allclose(col.rows([0])(s), [[f(s)]])

    def test_left_fraction(self):
        N = RatMat([[RatFun.from_roots([], [-1.0]), 0.0], [1.0, RatFun.from_roots([-4.0], [-2.0])]])
        D = RatMat([[RatFun.from_roots([3.0], [-1.0]), 0.0], [0.0, RatFun.from_roots([-1.0], [-5.0])]])
        sys = realize(RatMat.block([[N, D]])).left_fraction(2)
        for s in POINTS:
            assert np.allclose(sys(s), np.linalg.solve(D(s), N(s)))


class TestMinimal:

    def test_cancelled_pair_is_removed(self):
        cancel = Realization.from_ratfun(RatFun.from_roots([1.0], [1.0]))
        lag = Realization.from_ratfun(RatFun.from_roots([], [-2.0]))
        sys = (cancel @ lag).minimal()
        assert sys.states == 1
        assert list(sys.poles()) == pytest.approx([-2.0])

    def test_repeated_entry_poles_share_states(self):
        R = RatMat([[RatFun.from_roots([], [-1.0]), RatFun.from_roots([], [-1.0], 2.0)]])
        assert Realization.from_ratmat(R).states == 2
        assert mcmillan_degree(R) == 1

    def test_diagonal_matrix(self):
        R = RatMat([[RatFun.from_roots([], [-1.0]), 0.0], [0.0, RatFun.from_roots([], [-1.0])]])
        assert mcmillan_degree(R) == 2

    def test_zeros_of_a_minimal_square_system(self):
        R = RatMat([[RatFun.from_roots([-3.0], [-1.0]), 0.0], [0.0, RatFun.from_roots([-10.0], [-1.0])]])
        assert sorted(realize(R).zeros().real) == pytest.approx([-10.0, -3.0])

    def test_matrix_round_trip(self):
        R = RatMat([
            [RatFun.from_roots([-3.0], [-1.0, -2.0]), RatFun.constant(1.0)],
            [RatFun.from_roots([], [-2.0], 0.5), RatFun.from_roots([-1.0], [-4.0])],
        ])
        back = realize(R).to_ratmat()
        assert back.shape == (2, 2)
        for s in POINTS:
            assert np.allclose(back(s), R(s))
        assert back.is_real
