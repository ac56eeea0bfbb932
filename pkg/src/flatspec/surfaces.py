"""Stock surfaces used throughout the tests and the CLI."""

from __future__ import annotations

from fractions import Fraction

from .geom_kernel import FlatSurface, Triangle

__all__ = ["square_torus", "octagon_surface"]


def square_torus(marked: bool = False) -> FlatSurface:
    """Unit square with opposite sides glued by translations.

    Two triangles split along the (0,0)-(1,1) diagonal.  One vertex
    class of angle 2*pi; optionally flagged as a marked point.
    """
    one = Fraction(1)
    t0 = Triangle((one, 0), (0, one), (-one, -one))
    t1 = Triangle((one, one), (-one, 0), (0, -one))
    gl = [
        ((0, 2), (1, 0), 1),  # diagonal
        ((0, 0), (1, 1), 1),  # bottom ~ top
        ((0, 1), (1, 2), 1),  # right ~ left
    ]
    return FlatSurface([t0, t1], gl, marked=(0,) if marked else ())


def octagon_surface() -> FlatSurface:
    """Octagon with opposite sides identified by translations.

    Rational-coordinate stand-in for the regular octagon: same gluing
    pattern, hence genus two with a single cone point of angle 6*pi.
    Side vectors (1,0), (1,1), (0,1), (-1,1) and their negatives.
    """
    sides = [(1, 0), (1, 1), (0, 1), (-1, 1)]
    pts = [(Fraction(0), Fraction(0))]
    for v in sides + [(-a, -b) for a, b in sides]:
        last = pts[-1]
        pts.append((last[0] + v[0], last[1] + v[1]))
    assert pts[8] == pts[0]
    tris = []
    for i in range(6):
        p0, p1, p2 = pts[0], pts[i + 1], pts[i + 2]
        tris.append(
            Triangle(
                (p1[0] - p0[0], p1[1] - p0[1]),
                (p2[0] - p1[0], p2[1] - p1[1]),
                (p0[0] - p2[0], p0[1] - p2[1]),
            )
        )
    gl = [
        ((0, 0), (3, 1), 1),  # side 0 ~ side 4
        ((0, 1), (4, 1), 1),  # side 1 ~ side 5
        ((1, 1), (5, 1), 1),  # side 2 ~ side 6
        ((2, 1), (5, 2), 1),  # side 3 ~ side 7
        ((0, 2), (1, 0), 1),  # fan diagonals
        ((1, 2), (2, 0), 1),
        ((2, 2), (3, 0), 1),
        ((3, 2), (4, 0), 1),
        ((4, 2), (5, 0), 1),
    ]
    return FlatSurface(tris, gl)
