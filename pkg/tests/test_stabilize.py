# -*- coding: utf-8 -*-
import numpy as np
import pytest

from simstab.cee import SigmaParam, build_observer_form, solve_interpolation
from simstab.errors import DimensionMismatch, SigmaError
from simstab.examples_data import get_example, sigma_preset
from simstab.problem import InterpolationNode, InterpolationProblem, SisoConstraint
from simstab.ratfun import RatFun, RatMat
from simstab.stabilize import (
    Compensator,
    check_unit_conditions,
    default_lambda_grid,
    delta_ratio,
    delta_interpolation_residual,
    halfplane_grid,
    mimo_compensator,
    resolve_sigma,
    siso_compensator,
)
from simstab.verify import lambda_sweep


def test_halfplane_grid_covers_closed_right_half_plane():
    grid = halfplane_grid({"halfplane_points": 400, "halfplane_radius": 100.0})
    assert grid.size == 400
    assert np.all(grid.real >= -1e-12)
    assert 0j in grid
    assert np.max(np.abs(grid)) == pytest.approx(100.0)


def test_default_lambda_grid():
    assert np.allclose(default_lambda_grid({"lambda_points": 5}), [0.0, 0.25, 0.5, 0.75, 1.0])


class TestUnitConditions:

    grid = [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_stable_pair(self):
        delta0 = RatFun.from_roots([-1.0], [-2.0])
        delta1 = RatFun.from_roots([-3.0], [-2.0])
        report = check_unit_conditions((delta0, delta1), self.grid)
        assert report.passed
        # λδ₁ + (1 − λ)δ₀ = (s + 1 + 2λ)/(s + 2) except at λ = ½, where it is the constant 1
        assert report.worst == pytest.approx(-1.0)
        assert report.worst_real_parts[:2] == pytest.approx([-1.0, -1.5])
        assert report.worst_real_parts[2] == -np.inf
        assert report.worst_real_parts[3:] == pytest.approx([-2.5, -3.0])

    def test_crossing_pair(self):
        delta0 = RatFun.from_roots([-1.0], [-2.0])
        delta1 = RatFun.from_roots([1.0], [-2.0])
        report = check_unit_conditions((delta0, delta1), self.grid)
        assert not report.passed
        assert report.failures() == [0.5, 0.75, 1.0]

    def test_scalar_ratio(self):
        report = check_unit_conditions(RatFun.from_roots([-3.0], [-1.0]), self.grid)
        assert report.passed

    def test_matrix_ratio(self):
        Q = RatMat([[RatFun.from_roots([-3.0], [-1.0]), 0.0], [0.0, RatFun.from_roots([-5.0], [-1.0])]])
        report = check_unit_conditions(Q, self.grid)
        assert report.passed
        assert report.worst == pytest.approx(-1.0)


class TestSigmaResolution:

    def test_default(self):
        sigma = resolve_sigma(None, 1, 2)
        assert sigma.label == "central"
        assert sigma.obs.n == 2

    def test_spec_forms(self):
        assert list(resolve_sigma({"roots": [0.5]}, 1, 1).roots) == pytest.approx([0.5])
        assert list(resolve_sigma("z-0.25", 1, 1).roots) == pytest.approx([0.25])

    def test_size_mismatch(self):
        sigma = SigmaParam.default(build_observer_form(1, 2))
        with pytest.raises(DimensionMismatch):
            resolve_sigma(sigma, 1, 1)
        with pytest.raises(SigmaError):
            resolve_sigma({"roots": [0.5, 0.1]}, 1, 1)


def test_delta_ratio_is_the_squared_interpolant():
    nodes = (InterpolationNode(0.0, (np.array([[0.5]]),)), InterpolationNode(0.5, (np.array([[0.6]]),)))
    interp, _, _ = solve_interpolation(InterpolationProblem(1, nodes))
    delta = delta_ratio(interp, {"halfplane_points": 200})
    assert delta.is_scalar
    assert delta.cut_margin > 0
    # s = 1 and s = 1/3 map to z = 0 and z = 0.5
    assert delta.ratio(1.0) == pytest.approx(0.25, abs=1e-9)
    assert delta.ratio(1.0 / 3.0) == pytest.approx(0.36, abs=1e-9)
    assert delta.root(1.0 / 3.0) == pytest.approx(0.6, abs=1e-9)


def test_delta_interpolation_residual():
    constraints = [SisoConstraint(0.5, (2.0,), "y1/y0")]
    assert delta_interpolation_residual(RatFun.constant(2.0), constraints) == pytest.approx(0.0)
    assert delta_interpolation_residual(RatFun.constant(3.0), constraints) == pytest.approx(0.5)


def test_compensator_dict_keys():
    comp = Compensator(scalar=RatFun.constant(4.0), residuals={"riccati": 1e-12})
    data = comp.to_dict()
    assert data["k"] == {"num": [4.0], "den": [1.0]}
    assert data["residuals"] == {"riccati": 1e-12}
    assert "K" not in data


@pytest.mark.slow
@pytest.mark.parametrize("example_id", [1, 2])
def test_siso_examples_are_simultaneously_stabilized(example_id):
    case = get_example(example_id)
    p0, p1 = case.plants
    comp = siso_compensator(p0, p1, case.sigma)
    assert comp.is_scalar
    assert comp.unit_report.passed
    assert comp.residuals["delta_interpolation"] < 1e-6
    assert comp.delta.cut_margin > 0
    report = lambda_sweep(case.plants, comp, np.linspace(0.0, 1.0, 21))
    assert report.stable, report.summary()


@pytest.mark.slow
@pytest.mark.parametrize("example_id", [3, 4])
def test_mimo_examples_are_simultaneously_stabilized(example_id):
    case = get_example(example_id)
    comp = mimo_compensator(*case.plants, sigma=case.sigma)
    assert comp.matrix.shape == (2, 2)
    assert comp.residuals["tangential"] < 1e-8
    assert comp.residuals["spectral_identity"] < 1e-6
    assert comp.residuals["mcmillan_K"] <= comp.residuals["mcmillan_bound"]
    assert comp.residuals["mcmillan_coprime"] <= comp.residuals["mcmillan_bound"]
    assert all(np.all(np.isfinite(f.den.coeffs)) for row in comp.matrix.entries() for f in row)
    report = lambda_sweep(case.plants, comp, np.linspace(0.0, 1.0, 21))
    assert report.stable, report.summary()


@pytest.mark.slow
def test_second_example_has_a_second_order_root():
    case = get_example(2)
    comp = siso_compensator(*case.plants, case.sigma)
    assert comp.interpolant.degree == 2
    assert comp.delta.root.normalize().den.degree == 2
    assert comp.delta.ratio.normalize().den.degree == 4
    assert sorted(c.n for c in comp.constraints) == [1, 2]
    assert comp.residuals["delta_interpolation"] < 1e-6
    assert comp.scalar.den.degree <= 8
    report = lambda_sweep(case.plants, comp, np.linspace(0.0, 1.0, 11))
    assert report.summary()["hidden_modes"] == 0


@pytest.mark.slow
def test_sigma_moves_the_siso_ratio_off_the_nodes():
    case = get_example(1)
    presets = sigma_preset(1)
    first = siso_compensator(*case.plants, presets[0])
    second = siso_compensator(*case.plants, presets[2])
    for c in first.constraints:
        assert abs(first.delta.ratio(c.s) - second.delta.ratio(c.s)) < 1e-8
    grid = [0.5j, 2.0j, 0.3 + 1.0j, 5.0]
    assert max(abs(first.delta.ratio(s) - second.delta.ratio(s)) for s in grid) > 1e-4


@pytest.mark.slow
def test_sigma_moves_the_matrix_ratio_off_the_nodes():
    case = get_example(3)
    presets = sigma_preset(3)
    first = mimo_compensator(*case.plants, sigma=presets[0])
    second = mimo_compensator(*case.plants, sigma=presets[1])
    for c in first.constraints:
        assert np.max(np.abs(first.delta.ratio(c.s) @ c.r2 - second.delta.ratio(c.s) @ c.r2)) < 1e-8
    grid = [0.5j, 2.0j, 0.3 + 1.0j, 5.0]
    assert max(np.max(np.abs(first.delta.ratio(s) - second.delta.ratio(s))) for s in grid) > 1e-4
