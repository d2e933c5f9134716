# -*- coding: utf-8 -*-
import numpy as np
import pytest

from simstab.errors import BoundaryZero, NonFiniteData, SimStabError, ZeroPolynomial
from simstab.ratfun import Poly, RatFun
from simstab.rootfind import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    classify_disc,
    cluster_roots,
    plot_map,
    poly_roots,
    split_zeros,
    unstable_zeros,
)


def test_quadratic_roots():
    roots = sorted(r.real for r in poly_roots(Poly([-2.0, 0.0, 1.0])))
    assert np.allclose(roots, [-np.sqrt(2.0), np.sqrt(2.0)])


def test_zero_polynomial_has_no_roots():
    with pytest.raises(ZeroPolynomial):
        poly_roots(Poly())


def test_constant_has_no_roots():
    assert poly_roots(Poly([3.0])) == []


def test_roots_at_origin_are_exact():
    assert poly_roots(Poly([0.0, 0.0, 1.0])) == [0j, 0j]


def test_real_polynomial_gives_exact_conjugate_pairs():
    roots = poly_roots(Poly([5.0, 2.0, 1.0]))
    assert len(roots) == 2
    assert roots[0] == roots[1].conjugate()
    assert np.isclose(abs(roots[0].imag), 2.0)
    assert np.isclose(roots[0].real, -1.0)


def test_non_finite_coefficients_raise_a_typed_error():
    with pytest.raises(NonFiniteData) as info:
        poly_roots(np.array([1.0, np.nan, 1.0]))
    assert isinstance(info.value, SimStabError)
    assert info.value.exit_code == 4


def test_clustering_rejects_non_finite_roots():
    with pytest.raises(NonFiniteData):
        cluster_roots([1.0, complex(np.nan, np.nan)], tol=1e-5)


def test_clustering_nothing_gives_nothing():
    assert cluster_roots([], tol=1e-5) == []


def test_clusters_group_repeated_roots():
    clusters = cluster_roots([1.0, 1.0 + 1e-7, 2.0], tol=1e-5)
    assert [c.multiplicity for c in clusters] == [1, 2]
    assert clusters[0].location == pytest.approx(2.0)
    assert clusters[1].location == pytest.approx(1.0, abs=1e-6)


def test_double_root_is_one_cluster():
    clusters = unstable_zeros(RatFun(Poly.from_roots([1.0, 1.0, -3.0]), Poly.from_roots([-1.0, -2.0, -4.0])))
    assert len(clusters) == 1
    assert clusters[0].multiplicity == 2
    assert clusters[0].location.real == pytest.approx(1.0, abs=1e-6)


def test_split_zeros_by_half_plane():
    unstable, stable = split_zeros(RatFun(Poly.from_roots([1.0, 2.0, -3.0]), Poly([1.0])))
    assert sorted(c.location.real for c in unstable) == pytest.approx([1.0, 2.0])
    assert [c.location.real for c in stable] == pytest.approx([-3.0])


def test_imaginary_axis_zero_is_a_boundary_case():
    with pytest.raises(BoundaryZero):
        split_zeros(RatFun(Poly.from_roots([0.0, -1.0]), Poly([1.0])))
    with pytest.raises(BoundaryZero):
        split_zeros(RatFun(Poly([4.0, 0.0, 1.0]), Poly([1.0])))


def test_plot_map():
    assert plot_map(0.0) == pytest.approx(1.0)
    assert plot_map(-1.0) == pytest.approx(0.0)
    assert not np.isfinite(abs(plot_map(1.0)))


@pytest.mark.parametrize("s, expected", [
    (-0.5, INSIDE),
    (-3.0 + 2.0j, INSIDE),
    (0.5, OUTSIDE),
    (1.0, OUTSIDE),
    (1.0j, BOUNDARY),
])
def test_classify_disc(s, expected):
    assert classify_disc(s) == expected
