import math
from fractions import Fraction

import pytest

from flatspec.geom_kernel import (
    FlatSurface,
    Germ,
    ParseError,
    PlanarMatrix,
    SurfaceError,
    Triangle,
    apply_linear,
    develop_corridor,
    fan_walk_ccw,
    parse_surface,
    serialize_surface,
    surface_area,
    surface_to_dict,
    validate_surface,
)
from flatspec.surfaces import octagon_surface, square_torus


def test_square_torus_validates():
    s = square_torus()
    rep = validate_surface(s)
    assert rep.ok, rep.checks
    assert rep.genus == 1
    assert rep.cone_points == []  # the 2*pi vertex is regular
    assert s.num_vertex_classes == 1
    assert s.cone_multiple(0) == 2


def test_octagon_validates():
    s = octagon_surface()
    rep = validate_surface(s)
    assert rep.ok, rep.checks
    assert rep.genus == 2
    assert s.num_vertex_classes == 1
    assert s.cone_multiple(0) == 6
    assert rep.cone_points == [(0, 6, False)]
    # Gauss-Bonnet: sum(2 - k) = -4 = 4 - 4g with g = 2
    assert rep.gb_balance == -4


def test_areas():
    assert surface_area(square_torus()) == 1
    assert surface_area(octagon_surface()) == 7  # rational octagon


def pillowcase(marked=()):
    # [0,2]x[0,1] with folded top/bottom edges and translated sides:
    # the sphere with 4 cone points of angle pi
    one = Fraction(1)
    t0 = Triangle((one, 0), (-one, one), (0, -one))
    t1 = Triangle((0, one), (-one, 0), (one, -one))
    t2 = Triangle((one, 0), (-one, one), (0, -one))
    t3 = Triangle((0, one), (-one, 0), (one, -one))
    gl = [
        ((0, 1), (1, 2), 1),  # left diagonal
        ((1, 0), (2, 2), 1),  # middle vertical
        ((2, 1), (3, 2), 1),  # right diagonal
        ((0, 0), (2, 0), -1),  # bottom fold
        ((1, 1), (3, 1), -1),  # top fold
        ((0, 2), (3, 0), 1),  # left ~ right
    ]
    return FlatSurface([t0, t1, t2, t3], gl, marked=marked)


def test_marked_low_angle_allowed_only_when_marked():
    s = pillowcase()
    assert s.num_vertex_classes == 4
    rep = validate_surface(s)
    assert not rep.ok
    marked_all = pillowcase(marked=range(4))
    rep2 = validate_surface(marked_all)
    assert rep2.ok, rep2.checks
    assert rep2.genus == 0
    ks = sorted(k for (_, k, _) in rep2.cone_points)
    assert ks == [1, 1, 1, 1]


def test_parse_serialize_roundtrip():
    s = octagon_surface()
    text = serialize_surface(s)
    s2 = parse_surface(text)
    assert serialize_surface(s2) == text
    assert surface_to_dict(s2) == surface_to_dict(s)


def test_parse_rejects_bad_triangle():
    bad = (
        '{"version":1,"triangles":[{"edges":[[1,1,0,1],[0,1,1,1],[0,1,0,1]]}],'
        '"gluings":[],"marked":[]}'
    )
    with pytest.raises(ParseError):
        parse_surface(bad)


def test_apply_linear_scales_and_rejects():
    s = square_torus()
    m = PlanarMatrix.diagonal(Fraction(2), Fraction(1, 2))
    s2 = apply_linear(s, m)
    assert surface_area(s2) == 1
    assert s2.exact
    with pytest.raises(SurfaceError):
        apply_linear(s, PlanarMatrix.diagonal(1, -1))


def test_apply_linear_rotation_preserves_area():
    s = square_torus()
    s2 = apply_linear(s, PlanarMatrix.rotation(0.7))
    assert not s2.exact
    assert abs(float(surface_area(s2)) - 1.0) < 1e-12
    rep = validate_surface(s2)
    assert rep.ok, rep.checks


def test_develop_corridor_square_torus():
    s = square_torus()
    # crossing the right (vertical) edge of T0 once: land in T1
    cor = develop_corridor(s, [(0, 1, 1)])
    assert cor.tris == (0, 1)
    sign, trans = cor.placements[-1]
    assert sign == 1
    assert trans == (1, 0)


def test_develop_corridor_closed_horizontal():
    s = square_torus()
    # (1,0) line: cross the diagonal into T0, cross the right edge into T1
    cor = develop_corridor(s, [(1, 0, 1), (0, 1, 1)], closed=True)
    assert cor.holonomy == (1, (1, 0))


def test_develop_corridor_closed_diagonal():
    s = square_torus()
    # (1,1) line from T0: cross the right edge into T1, cross the top into T0
    cor = develop_corridor(s, [(0, 1, 1), (1, 1, 1)], closed=True)
    sign, trans = cor.holonomy
    assert sign == 1
    assert trans == (1, 1)
    assert math.isclose(math.hypot(*map(float, trans)), math.sqrt(2))


def test_develop_corridor_rejects_nonadjacent():
    s = square_torus()
    with pytest.raises(SurfaceError):
        develop_corridor(s, [(0, 1, 1), (0, 0, 1)])


def test_backtracking_corridor_is_valid():
    s = square_torus()
    cor = develop_corridor(s, [(0, 1, 1), (1, 2, 1)], closed=True)
    assert cor.holonomy == (1, (0, 0))


def test_holonomy_sign_squares_to_identity():
    s = pillowcase(marked=range(4))
    cor = develop_corridor(s, [(0, 0, 1)])
    sign, _ = cor.placements[-1]
    assert sign == -1
    cor2 = develop_corridor(s, [(0, 0, 1), (2, 0, 1)], closed=True)
    assert cor2.holonomy[0] == 1


def test_fan_walk_angles_on_torus():
    s = square_torus()
    # at the 2*pi vertex: from the ray (1,0) ccw to (0,1); the (0,1) ray
    # bounds T1's corner 0 (sector between the diagonal and the left edge)
    g1 = Germ((0, 0), (1, 0))
    g2 = Germ((1, 0), (0, 1))
    ang = fan_walk_ccw(s, g1, g2)
    assert ang.halfturns == 0
    assert math.isclose(ang.radians, math.pi / 2)
    back = fan_walk_ccw(s, g2, g1)
    assert back.halfturns == 1
    assert math.isclose(back.radians, 3 * math.pi / 2)
    # exact pi detection: (1,0) to (-1,0), anchored in T0's corner 1
    g3 = Germ((0, 1), (-1, 0))
    ang3 = fan_walk_ccw(s, g1, g3)
    assert ang3.exactly_pi(), ang3


def test_fan_walk_full_circle_octagon():
    s = octagon_surface()
    # from the trailing ray of corner (0,0) all the way round to its
    # leading ray: 6*pi minus one corner angle
    g = Germ((0, 0), (2, 1))
    g2 = Germ((0, 0), (1, 0))
    ang = fan_walk_ccw(s, g, g2)
    assert ang.halfturns == 5
    assert math.isclose(ang.radians, 6 * math.pi - math.atan2(1, 2))
