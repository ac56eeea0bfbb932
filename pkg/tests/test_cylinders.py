import math

import pytest

from flatspec.cylinders import (
    cylinders_in_direction,
    detect_cylinder,
    twist_equality_test,
)
from flatspec.geodesics import make_arc, torus_class
from flatspec.geom_kernel import SurfaceError
from flatspec.surfaces import octagon_surface, square_torus


@pytest.fixture(scope="module")
def torus():
    return square_torus()


def test_detect_primitive_classes(torus):
    rec = detect_cylinder(torus, torus_class(torus, 1, 0))
    assert rec is not None
    assert math.isclose(rec.circumference, 1.0)
    assert math.isclose(rec.height, 1.0)
    rec2 = detect_cylinder(torus, torus_class(torus, 1, 1))
    assert math.isclose(rec2.circumference, math.sqrt(2), rel_tol=1e-12)


def test_detect_rejects_arcs():
    s = square_torus(marked=True)
    arc = make_arc(s, [(0, 1, 1)], (0, 0), start_corner=(0, 1), end_corner=(1, 2))
    with pytest.raises(SurfaceError):
        detect_cylinder(s, arc)


def test_twist_equality_cylinder_case(torus):
    # on the torus every curve is a cylinder curve: strict inequality for
    # every power
    a = torus_class(torus, 1, 0)
    b = torus_class(torus, 0, 1)
    for n in (0, 1, 3):
        res = twist_equality_test(torus, a, b, n)
        assert not res["equal"]
        assert res["lhs"] < res["rhs"] - 1e-6
    res0 = twist_equality_test(torus, a, b, 0)
    assert math.isclose(res0["lhs"], math.sqrt(2) - 1.0, rel_tol=1e-12)
    assert math.isclose(res0["rhs"], 1.0, rel_tol=1e-12)


def test_twist_equality_rejects_disjoint(torus):
    a = torus_class(torus, 1, 1)
    b = torus_class(torus, 2, 2)
    with pytest.raises(SurfaceError):
        twist_equality_test(torus, a, b, 1)


def test_cylinders_in_direction_torus(torus):
    recs = cylinders_in_direction(torus, (1, 0), 2)
    assert len(recs) == 1
    assert math.isclose(recs[0].circumference, 1.0)
    assert math.isclose(recs[0].height, 1.0)
    recs2 = cylinders_in_direction(torus, (1, 1), 2)
    assert len(recs2) == 1
    assert math.isclose(recs2[0].circumference, math.sqrt(2), rel_tol=1e-9)


def test_cylinders_irrational_slope_empty(torus):
    recs = cylinders_in_direction(torus, (1.0, math.sqrt(2)), 10)
    assert recs == []


def test_cylinders_octagon_vertical():
    s = octagon_surface()
    recs = cylinders_in_direction(s, (0, 1), 4)
    assert len(recs) >= 1
    circs = sorted(round(r.circumference, 6) for r in recs)
    assert 3.0 in circs
    # every returned record's core re-tightens to the same cylinder
    from flatspec.geodesics import tighten

    for r in recs:
        rep = tighten(s, r.core)
        assert rep.kind == "cylinder"
        assert abs(rep.circumference - r.circumference) < 1e-12
        assert abs(rep.height - r.height) < 1e-12
