# -*- coding: utf-8 -*-
import numpy as np
import pytest

from simstab.errors import (
    DegenerateCommonZero,
    DimensionMismatch,
    EigenvalueOnCut,
    IdenticalPlants,
    NonpositiveRealTarget,
    NonSimpleZero,
    NoSolution,
    PlantFileError,
)
from simstab.examples_data import get_example
from simstab.problem import (
    InfinityAnchor,
    InterpolationNode,
    InterpolationProblem,
    MimoPlant,
    Plant,
    SisoConstraint,
    anchored_problem,
    build_Mi,
    compose_series,
    denormalize_problem,
    infinity_value,
    is_solvable,
    matrix_sqrt_principal,
    mimo_constraints,
    normalize_problem,
    pick_matrix,
    series_sqrt,
    siso_constraints,
    sqrt_transform,
)
from simstab.ratfun import RatFun, RatMat, ratfun_mobius_compose


def _scalar_problem(*pairs):
    return InterpolationProblem(1, tuple(InterpolationNode(z, (np.array([[w]]),)) for z, w in pairs))


class TestPlants:

    def test_unstable_factor_is_rejected(self):
        plant = Plant(RatFun.from_roots([], [1.0]), RatFun.constant(1.0))
        with pytest.raises(PlantFileError):
            plant.validate()

    def test_strictly_proper_y_is_rejected(self):
        plant = Plant(RatFun.from_roots([], [-1.0]), RatFun.from_roots([], [-2.0]))
        with pytest.raises(PlantFileError):
            plant.validate()

    def test_blend_endpoints(self, unstable_first_order):
        other = Plant(RatFun.from_roots([], [-1.0], 3.0), unstable_first_order.y)
        s = 0.25 + 0.5j
        assert unstable_first_order.blend(other, 0.0).transfer(s) == pytest.approx(unstable_first_order.transfer(s))
        assert unstable_first_order.blend(other, 1.0).transfer(s) == pytest.approx(other.transfer(s))
        assert unstable_first_order.transfer(0.0) == pytest.approx(-1.0)

    def test_mimo_shape_mismatch(self):
        plant = MimoPlant(RatMat.identity(2), RatMat.identity(3))
        with pytest.raises(DimensionMismatch):
            plant.validate()


class TestSisoConstraints:

    def test_identical_plants(self, unstable_first_order):
        with pytest.raises(IdenticalPlants):
            siso_constraints(unstable_first_order, unstable_first_order)

    def test_first_example_has_two_simple_zeros(self):
        p0, p1 = get_example(1).plants
        constraints = siso_constraints(p0, p1)
        assert [c.n for c in constraints] == [1, 1]
        assert sorted(c.s.real for c in constraints) == pytest.approx([1.2964, 6.8572], abs=1e-3)
        assert all(c.source == "y1/y0" for c in constraints)
        for c in constraints:
            expected = (p1.y / p0.y)(c.s)
            assert c.derivatives[0] == pytest.approx(expected)

    def test_second_example_uses_x_ratio_at_the_shared_zero(self):
        p0, p1 = get_example(2).plants
        constraints = {round(c.s.real, 3): c for c in siso_constraints(p0, p1)}
        assert set(constraints) == {0.591, 1.0}
        assert constraints[0.591].n == 1
        assert constraints[0.591].source == "y1/y0"
        double = constraints[1.0]
        assert double.n == 2
        assert double.source == "x1/x0"
        ratio = p1.x / p0.x
        assert np.allclose(double.derivatives, ratio.derivs(1.0, 1), rtol=1e-5)

    def test_zero_shared_by_all_four_factors(self):
        p0 = Plant(RatFun.from_roots([2.0], [-1.0]), RatFun.from_roots([2.0], [-3.0]))
        p1 = Plant(RatFun.from_roots([2.0], [-2.0]), RatFun.from_roots([2.0], [-3.0], 2.0))
        with pytest.raises(DegenerateCommonZero):
            siso_constraints(p0, p1)

    def test_zero_shared_by_one_plant_only(self):
        p0 = Plant(RatFun.from_roots([2.0], [-1.0]), RatFun.from_roots([2.0], [-3.0]))
        p1 = Plant(RatFun.from_roots([], [-1.0]), RatFun.from_roots([-4.0], [-3.0]))
        with pytest.raises(PlantFileError, match="not coprime"):
            siso_constraints(p0, p1)


class TestInfinityAnchor:

    anchor = InfinityAnchor(4.0, 0.5)

    @property
    def tilde(self):
        return RatFun.from_roots([-2.0], [-1.0])

    def test_restored_root_takes_the_anchor_value_at_infinity(self):
        F = self.anchor.restore(self.tilde)
        assert complex(F.value_at_infinity()) == pytest.approx(2.0)
        assert self.anchor.gain == pytest.approx(2.0)

    @pytest.mark.parametrize("z0", [0.3, -0.45])
    def test_forward_data_belong_to_the_unrestored_function(self, z0):
        f = ratfun_mobius_compose(self.anchor.restore(self.tilde), "z_to_s")
        node = InterpolationNode(z0, tuple(np.array([[w]]) for w in f.taylor(z0, 1)))
        moved = self.anchor.forward(node)
        expected = ratfun_mobius_compose(self.tilde, "z_to_s").taylor(z0, 1)
        assert [complex(w[0, 0]) for w in moved.W] == pytest.approx(list(expected))

    def test_first_example_pins_the_ratio_at_infinity(self):
        p0, p1 = get_example(1).plants
        assert infinity_value(p0, p1) == pytest.approx(1.0)

    def test_second_example_has_no_zero_at_infinity(self):
        p0, p1 = get_example(2).plants
        assert infinity_value(p0, p1) is None

    def test_negative_ratio_at_infinity(self):
        p0 = Plant(RatFun.from_roots([], [-1.0]), RatFun.from_roots([1.0], [-1.0]))
        p1 = Plant(RatFun.from_roots([], [-2.0]), RatFun.from_roots([3.0], [-2.0], -1.0))
        with pytest.raises(NonpositiveRealTarget):
            infinity_value(p0, p1)

    def test_double_zero_at_infinity(self):
        p0 = Plant(RatFun.from_roots([], [-1.0]), RatFun.from_roots([1.0], [-1.0]))
        p1 = Plant(RatFun.from_roots([], [-2.0]), RatFun.from_roots([-3.0], [-2.0]))
        with pytest.raises(NonSimpleZero):
            infinity_value(p0, p1)

    def test_anchored_problem_keeps_the_pick_matrix_positive(self):
        p0, p1 = get_example(1).plants
        raw = sqrt_transform(siso_constraints(p0, p1))
        problem, anchor = anchored_problem(raw, 1.0)
        assert anchor.value == pytest.approx(1.0)
        assert anchor.scale > 0
        assert len(problem.nodes) == len(raw.nodes)
        assert is_solvable(problem)


class TestSeries:

    def test_series_sqrt(self):
        assert np.allclose(series_sqrt([4.0, 4.0, 1.0]), [2.0, 1.0, 0.0])

    def test_series_sqrt_on_the_cut(self):
        with pytest.raises(NonpositiveRealTarget):
            series_sqrt([-1.0, 0.0])

    def test_compose_series_scales_first_order(self):
        assert np.allclose(compose_series([3.0, 5.0], [0.0, 2.0]), [3.0, 10.0])

    def test_sqrt_transform_maps_node_and_value(self):
        problem = sqrt_transform([SisoConstraint(0.5, (4.0,), "y1/y0")])
        node = problem.nodes[0]
        assert node.z == pytest.approx(1.0 / 3.0)
        assert node.W[0][0, 0] == pytest.approx(2.0)


class TestPick:

    def test_single_anchor(self):
        assert np.allclose(pick_matrix(_scalar_problem((0.0, 0.5))), [[1.0]])

    @pytest.mark.parametrize("value, solvable", [(0.6, True), (10.0, False)])
    def test_two_nodes(self, value, solvable):
        problem = _scalar_problem((0.0, 0.5), (0.5, value))
        P = pick_matrix(problem)
        assert P[1, 1] == pytest.approx(2.0 * value / 0.75)
        assert P[0, 1] == pytest.approx(0.5 + value)
        assert is_solvable(problem) is solvable

    def test_node_outside_disc_is_rejected(self):
        with pytest.raises(ValueError):
            InterpolationNode(1.5, (np.eye(1),))


class TestNormalization:

    def test_anchor_at_origin_scales_range(self):
        problem = normalize_problem(_scalar_problem((0.0, 2.0), (0.5, 1.5)))
        assert problem.is_normalized
        assert problem.find_node(0.5).W[0][0, 0] == pytest.approx(0.375)
        restored = denormalize_problem(problem)
        assert restored.find_node(0.0).W[0][0, 0] == pytest.approx(2.0)
        assert restored.find_node(0.5).W[0][0, 0] == pytest.approx(1.5)

    def test_anchor_moves_to_origin(self):
        problem = normalize_problem(_scalar_problem((0.2, 1.0), (-0.3, 1.0)))
        assert problem.normalization.center == pytest.approx(0.2)
        moved = problem.find_node(-0.5 / 1.06, tol=1e-9)
        assert moved is not None
        assert moved.W[0][0, 0] == pytest.approx(0.5)
        restored = denormalize_problem(problem)
        assert restored.find_node(-0.3, tol=1e-9) is not None
        assert restored.find_node(0.2, tol=1e-9).W[0][0, 0] == pytest.approx(1.0)

    def test_auxiliary_anchor_for_complex_pair(self):
        problem = normalize_problem(_scalar_problem((0.3j, 1.0), (-0.3j, 1.0)))
        assert problem.normalization.auxiliary
        assert problem.normalization.aux_value == pytest.approx(1.0)
        assert len(problem.nodes) == 3
        assert problem.is_conjugate_closed()

    def test_nonpositive_hermitian_part(self):
        with pytest.raises(NoSolution):
            normalize_problem(_scalar_problem((0.0, -1.0)))

    def test_pick_failure(self):
        with pytest.raises(NoSolution):
            normalize_problem(_scalar_problem((0.0, 0.5), (0.5, 10.0)))


class TestMatrixCompletion:

    def test_scalar_completion(self):
        Mi, alpha = build_Mi(np.array([2.0]), np.array([1.0]))
        assert np.allclose(Mi, [[-2.0]])
        assert alpha is None

    def test_tangential_condition_holds(self):
        r1 = np.array([-2.0, -0.5])
        r2 = np.array([1.0, 0.0])
        Mi, alpha = build_Mi(r1, r2)
        assert alpha == pytest.approx(1.0)
        assert np.allclose(Mi @ r2, -r1)

    def test_principal_square_root(self):
        assert np.allclose(matrix_sqrt_principal(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
        with pytest.raises(EigenvalueOnCut):
            matrix_sqrt_principal(np.diag([4.0, -1.0]))

    @pytest.mark.parametrize("example_id, zeros", [
        (3, [0.9775, 17.2135]),
        (4, [0.2325, 0.9862, 0.9862]),
    ])
    def test_example_zeros(self, example_id, zeros):
        P0, P1 = get_example(example_id).plants
        constraints = mimo_constraints(P0, P1)
        assert sorted(c.s.real for c in constraints) == pytest.approx(zeros, abs=2e-3)
        for c in constraints:
            assert np.linalg.norm(np.concatenate([c.r1, c.r2])) == pytest.approx(1.0)
