# -*- coding: utf-8 -*-
import numpy as np
import pytest

from simstab.cee import (
    SigmaParam,
    assemble_interpolant,
    build_observer_form,
    build_uU,
    check_positive_real,
    solve_cee,
    solve_interpolation,
    spectral_factor,
)
from simstab.errors import IndexSumMismatch, NoSolution, SigmaError
from simstab.problem import InterpolationNode, InterpolationProblem, normalize_problem


def _scalar(*pairs, normalized=True):
    nodes = [InterpolationNode(0.0, (np.array([[0.5]]),))] if normalized else []
    nodes += [InterpolationNode(z, (np.array([[w]]),)) for z, w in pairs]
    return InterpolationProblem(1, tuple(nodes))


def _random_problem(seed: int) -> InterpolationProblem:
    """Data sampled from F(z) = ½ + c·z/(1 − a·z) with |c| < ½(1 − |a|)"""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-0.5, 0.5)
    c = rng.uniform(-0.4, 0.4) * (1.0 - abs(a))
    count = int(rng.integers(1, 3))
    pool = [-0.6, -0.4, -0.2, 0.2, 0.4, 0.6]
    zs = rng.choice(pool, size=count, replace=False)
    return _scalar(*[(float(z), 0.5 + c * z / (1.0 - a * z)) for z in zs])


class TestObserverForm:

    def test_shapes(self):
        obs = build_observer_form(2, 3)
        assert obs.H.shape == (2, 6)
        assert obs.J.shape == (6, 6)
        assert obs.indices == (3, 3)

    def test_index_sum(self):
        with pytest.raises(IndexSumMismatch):
            build_observer_form(2, 2, indices=(1, 2))

    def test_matpoly_is_monic(self):
        obs = build_observer_form(1, 2)
        p = obs.matpoly(np.array([[0.3], [0.1]]))
        assert p(2.0)[0, 0] == pytest.approx(4.0 + 0.3 * 2.0 + 0.1)

    def test_basis_rows(self):
        obs = build_observer_form(1, 2)
        assert list(obs.Pi(3.0)[0]) == pytest.approx([3.0, 1.0])
        assert list(obs.Pi_rev(3.0)[0]) == pytest.approx([3.0, 9.0])
        assert np.allclose(obs.Pi_rev_taylor(3.0, 0)[0], obs.Pi_rev(3.0))


class TestSigma:

    def test_roots_round_trip(self):
        sigma = SigmaParam.from_roots([0.5, -0.2], build_observer_form(1, 2))
        assert sorted(sigma.roots.real) == pytest.approx([-0.2, 0.5])
        assert sigma.is_real

    def test_default_is_central(self):
        sigma = SigmaParam.default(build_observer_form(2, 1))
        assert np.all(sigma.Sigma == 0)
        assert sigma.spectral_radius == 0.0

    def test_not_schur(self):
        with pytest.raises(SigmaError):
            SigmaParam.from_roots([1.2], build_observer_form(1, 1))

    def test_wrong_count(self):
        with pytest.raises(SigmaError):
            SigmaParam.from_roots([0.1, 0.2], build_observer_form(1, 1))

    def test_monic_coefficients_required(self):
        with pytest.raises(SigmaError):
            SigmaParam.from_coeffs([0.1, 2.0], build_observer_form(1, 1))


class TestScalarSolution:
    """One node at z = a with value w besides the anchor, Σ(z) = z"""

    a, w = 0.5, 0.6

    @property
    def rho(self):
        return (1.0 - 2.0 * self.w) / (1.0 + 2.0 * self.w)

    def test_closed_form(self):
        problem = _scalar((self.a, self.w))
        sol = solve_cee(problem, SigmaParam.default(build_observer_form(1, 1)))
        assert sol.P[0, 0] == pytest.approx(self.rho ** 2 / self.a ** 2, rel=1e-8)
        assert sol.A[0, 0] == pytest.approx(self.rho / self.a, rel=1e-8)
        assert sol.residuals["riccati"] < 1e-10

    def test_closed_loop_matrix_is_stable(self):
        interp, sol, _ = solve_interpolation(_scalar((self.a, self.w)))
        assert abs(interp.F_matrix[0, 0]) == pytest.approx(abs(self.rho / self.a), rel=1e-8)
        assert np.max(np.abs(np.linalg.eigvals(interp.F_matrix))) < 1.0

    def test_linear_data(self):
        u, U = build_uU(_scalar((self.a, self.w)), build_observer_form(1, 1))
        assert u[0, 0] == pytest.approx(-self.rho / self.a)
        assert U[0, 0] == pytest.approx(-self.rho)

    def test_interpolant_meets_the_data(self):
        interp, sol, _ = solve_interpolation(_scalar((self.a, self.w)))
        assert interp(0.0)[0, 0] == pytest.approx(0.5)
        assert interp(self.a)[0, 0] == pytest.approx(self.w, abs=1e-9)
        assert sol.residuals["positivity_margin"] > 0
        assert sol.diagnostics["minimal"]

    def test_spectral_identity(self):
        sigma = SigmaParam.from_roots([0.5], build_observer_form(1, 1))
        interp, sol, sigma = solve_interpolation(_scalar((self.a, self.w)), sigma)
        factor = spectral_factor(sol, sigma.obs, sigma)
        assert factor.identity_residual(64) < 1e-9
        assert list(factor.zeros) == pytest.approx([0.5])

    def test_reassembled_interpolant(self):
        _, sol, sigma = solve_interpolation(_scalar((self.a, self.w)))
        interp = assemble_interpolant(sol, sigma.obs, sigma)
        assert interp(self.a)[0, 0] == pytest.approx(self.w, abs=1e-9)

    def test_unsolvable_data(self):
        with pytest.raises(NoSolution):
            solve_cee(_scalar((0.5, 10.0)), SigmaParam.default(build_observer_form(1, 1)))


def test_sigma_changes_the_interpolant_but_not_the_data():
    problem = _scalar((0.5, 0.9))
    central, _, _ = solve_interpolation(problem)
    shifted, _, _ = solve_interpolation(problem, SigmaParam.from_roots([0.5], build_observer_form(1, 1)))
    assert shifted(0.5)[0, 0] == pytest.approx(central(0.5)[0, 0], abs=1e-8)
    theta = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    gap = max(abs(shifted(0.95 * np.exp(1j * t))[0, 0] - central(0.95 * np.exp(1j * t))[0, 0]) for t in theta)
    assert gap > 1e-4


@pytest.mark.parametrize("seed", range(50))
def test_random_positive_real_data(seed):
    problem = _random_problem(seed)
    interp, sol, _ = solve_interpolation(problem)
    assert sol.residuals["interpolation"] < 1e-8
    assert sol.residuals["riccati"] < 1e-8 * (1.0 + np.linalg.norm(sol.P))
    assert sol.residuals["p_min_eig"] > -1e-10
    assert check_positive_real(interp) > 0


def test_covariance_does_not_depend_on_the_continuation_path():
    # F(z) = ½ + 0.2z/(1 − 0.3z)
    problem = _scalar(*[(z, 0.5 + 0.2 * z / (1.0 - 0.3 * z)) for z in (0.4, -0.5)])
    sigma = SigmaParam.default(build_observer_form(1, problem.n))
    coarse = solve_cee(problem, sigma, {"initial_step": 0.5, "max_step": 1.0})
    fine = solve_cee(problem, sigma, {"initial_step": 0.02, "max_step": 0.05})
    assert fine.diagnostics["steps"] > coarse.diagnostics["steps"]
    assert np.allclose(coarse.P, fine.P, atol=1e-8)


def test_matrix_problem_with_default_sigma():
    nodes = (
        InterpolationNode(0.0, (0.5 * np.eye(2),)),
        InterpolationNode(0.4, (np.diag([0.7, 0.6]),)),
    )
    interp, sol, sigma = solve_interpolation(InterpolationProblem(2, nodes))
    assert sigma.obs.ell == 2
    assert np.allclose(interp(0.4), np.diag([0.7, 0.6]), atol=1e-8)
    assert sol.residuals["positivity_margin"] > 0


def test_denormalized_interpolant_matches_original_data():
    raw = _scalar((0.2, 1.0), (-0.3, 0.8), normalized=False)
    interp, _, _ = solve_interpolation(normalize_problem(raw))
    assert interp.original(0.2)[0, 0] == pytest.approx(1.0, abs=1e-8)
    assert interp.original(-0.3)[0, 0] == pytest.approx(0.8, abs=1e-8)
    f = interp.original_ratmat()[0, 0]
    assert complex(f(0.2)).real == pytest.approx(1.0, abs=1e-7)
    assert complex(f(-0.3)).real == pytest.approx(0.8, abs=1e-7)
