"""Cylinder detection, the twist-length test, and direction sweeps.

A closed curve is a cylinder curve when its geodesic representatives
foliate an embedded flat cylinder; the tightener reports this directly.
The twist test checks the length identity that holds after enough
twisting exactly when the twisting curve is not a cylinder curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geodesics import (
    CurveClass,
    CylinderRep,
    _sector_corner,
    _trace_leaf,
    flat_length,
    make_closed,
    tighten,
)
from .intersections import dehn_twist, intersection_number, is_simple
from .geom_kernel import (
    FlatSurface,
    SurfaceError,
    TraceHit,
    cross_sign,
    dot_sign,
    smul,
    trace_ray,
    vadd,
    vlen,
    vneg,
    vsub,
)

__all__ = [
    "CylinderRecord",
    "detect_cylinder",
    "twist_equality_test",
    "cylinders_in_direction",
]


@dataclass
class CylinderRecord:
    """A maximal flat cylinder on the surface."""

    direction: tuple  # holonomy vector of the core
    circumference: float
    height: float
    boundaries: tuple  # two lists of SaddleSeg
    core: CurveClass

    def theta(self) -> float:
        return math.atan2(float(self.direction[1]), float(self.direction[0])) % math.pi

    def to_dict(self) -> dict:
        return {
            "direction": [float(self.direction[0]), float(self.direction[1])],
            "theta": self.theta(),
            "circumference": self.circumference,
            "height": self.height,
            "boundary_lengths": [
                sum(s.length for s in b) for b in self.boundaries
            ],
        }


def _record_from_rep(rep: CylinderRep) -> CylinderRecord:
    core = make_closed(rep.surface, rep.core_seq)
    return CylinderRecord(
        rep.direction,
        rep.circumference,
        rep.height,
        rep.boundaries,
        core,
    )


def detect_cylinder(surface: FlatSurface, alpha: CurveClass):
    """CylinderRecord for a cylinder curve, None for a chain class."""
    if alpha.kind != "closed":
        raise SurfaceError("closed curves only")
    rep = tighten(surface, alpha)
    if rep.kind != "cylinder":
        return None
    return _record_from_rep(rep)


def twist_equality_test(
    surface: FlatSurface, alpha: CurveClass, beta: CurveClass, power: int, tol: float = 1e-9
) -> dict:
    """Compare l(T^(N+1) beta) - l(T^N beta) with l(alpha)*i(alpha, beta).

    Equality at some power characterizes non-cylinder twisting curves;
    for cylinder curves the difference stays strictly smaller.
    """
    inum = intersection_number(surface, alpha, beta)
    if inum == 0:
        raise SurfaceError("disjoint pair")
    if not is_simple(surface, alpha):
        raise SurfaceError("twisting curve is not simple")
    tn = dehn_twist(surface, alpha, beta, power)
    tn1 = dehn_twist(surface, alpha, beta, power + 1)
    lhs = flat_length(surface, tn1) - flat_length(surface, tn)
    rhs = flat_length(surface, alpha) * inum
    return {
        "lhs": lhs,
        "rhs": rhs,
        "power": power,
        "intersection": inum,
        "equal": abs(lhs - rhs) <= tol,
    }


def _direction_vector(direction):
    if isinstance(direction, (int, float)) and not isinstance(direction, bool):
        return (math.cos(float(direction)), math.sin(float(direction)))
    return tuple(direction)


def cylinders_in_direction(surface: FlatSurface, direction, length_bound) -> list:
    """All maximal cylinders with core direction ``direction`` and
    circumference at most ``length_bound``.

    Follows the line through every vertex class in the given direction;
    closed lines bound or carry cylinders, which are then extended to
    their maximal parallel families.
    """
    if float(length_bound) <= 0:
        raise SurfaceError("length bound must be positive")
    d0 = _direction_vector(direction)
    found = {}
    for vclass in range(surface.num_vertex_classes):
        for corner, d in _sector_copies(surface, vclass, d0):
            line = _follow_line(surface, vclass, corner, d, float(length_bound))
            if line is None:
                continue
            key, point_data = line
            if key in found:
                continue
            found[key] = point_data
    records = []
    seen = set()
    for key, (kind, payload) in found.items():
        recs = _cylinders_at_line(surface, kind, payload)
        for rep in recs:
            if rep.circumference > float(length_bound) * (1 + 1e-9):
                continue
            rkey = _cyl_key(rep)
            if rkey in seen:
                continue
            seen.add(rkey)
            records.append(_record_from_rep(rep))
    records.sort(key=lambda r: (r.circumference, r.height))
    return records


def _sector_copies(surface, vclass, d0):
    """Corners of the vertex whose sector contains the direction."""
    tol = surface.tol
    out = []
    cyc = surface.corner_cycle(vclass)
    s = 1
    d = tuple(d0)
    for t, j in cyc:
        a, b = surface.triangles[t].corner_rays(j)
        dd = smul(s, d)
        ca = cross_sign(a, dd, tol)
        da = dot_sign(a, dd, tol)
        cb = cross_sign(dd, b, tol)
        if (ca > 0 and cb > 0) or (ca == 0 and da > 0):
            out.append(((t, j), dd))
        s *= surface.sigma[(t, (j + 2) % 3)]
    return out


def _follow_line(surface, vclass, corner, d, bound):
    """Trace the line through a vertex; return a canonical key when it
    closes within the length bound."""
    from .geodesics import _dirs_eq

    corner, d = _sector_corner(surface, vclass, d, corner, "lead")
    start = (vclass, corner)
    start_dir = d
    t, j = corner
    p = surface.triangles[t].verts[j]
    total = 0.0
    passes = [(vclass, corner, _unit_key(surface, d))]
    through_cone = surface.cone_multiple(vclass) != 2 or surface.is_marked(vclass)
    for _ in range(20000):
        try:
            advanced = False
            for _, pin, pout, slot in trace_ray(surface, t, p, d):
                total += vlen(vsub(pout, pin))
                if total > bound * (1 + 1e-9) + 1e-9:
                    return None
                t2, sig, c = surface.transition(slot)
                p = smul(sig, vsub(pout, c))
                d = smul(sig, d)
                t = t2
                advanced = True
                break
            if not advanced:
                raise SurfaceError("line sweep stalled")
            continue
        except TraceHit as hit:
            total += vlen(vsub(hit.point, p))
            if total > bound * (1 + 1e-9) + 1e-9:
                return None
            hv = surface.vertex_class_of(hit.corner)
            out_corner, out_dir = _sector_corner(surface, hv, d, hit.corner, "lead")
            if hv == vclass and out_corner == corner and _dirs_eq(out_dir, start_dir, surface.tol):
                key = frozenset(passes)
                if through_cone:
                    return key, ("boundary", (vclass, corner, start_dir))
                return key, ("interior-line", (vclass, corner, start_dir))
            if surface.cone_multiple(hv) != 2 or surface.is_marked(hv):
                through_cone = True
            passes.append((hv, out_corner, _unit_key(surface, out_dir)))
            t, j = out_corner
            p = surface.triangles[t].verts[j]
            d = out_dir
    return None


def _unit_key(surface, d):
    s = abs(d[0]) + abs(d[1])
    x, y = d[0] / s, d[1] / s
    if surface.exact:
        return (x, y)
    return (round(float(x), 9), round(float(y), 9))


def _cylinders_at_line(surface, kind, payload):
    """Cylinders on either side of a closed line through a vertex."""
    from fractions import Fraction

    from .geodesics import _max_cylinder

    vclass, corner, d = payload
    reps = []
    for side in (1, -1):
        if side == 1:
            c2, d2 = _sector_corner(surface, vclass, d, corner, "lead")
            t, j = c2
            _, b = surface.triangles[t].corner_rays(j)
            other = b
        else:
            c2, d2 = _sector_corner(surface, vclass, d, corner, "trail")
            t, j = c2
            a, _ = surface.triangles[t].corner_rays(j)
            other = a
        v = surface.triangles[t].verts[j]
        sd = abs(d2[0]) + abs(d2[1])
        so = abs(other[0]) + abs(other[1])
        eps = Fraction(1, 64) if surface.exact else 1.0 / 64
        frac = Fraction(1, 4) if surface.exact else 0.25
        rep = None
        for _ in range(40):
            # direction strictly between the line and the sector boundary
            w = vadd(smul(1 / sd, d2), smul(frac / so, other))
            pt = vadd(v, smul(eps, w))
            if _inside(surface, t, pt):
                try:
                    rep = _max_cylinder(surface, t, pt, d2)
                    break
                except (SurfaceError, TraceHit):
                    pass
            eps = eps / 2
            frac = frac / 2
        if rep is not None:
            reps.append(rep)
    return reps


def _inside(surface, tri, pt):
    from .geodesics import _point_in_triangle

    return _point_in_triangle(surface.triangles[tri], pt, surface.tol)


def _cyl_key(rep: CylinderRep):
    """Identity of a cylinder: its boundary saddle data."""
    parts = []
    for b in rep.boundaries:
        for seg in b:
            parts.append((seg.start_vc, seg.end_vc, _round2(seg.vec)))
    return (round(rep.circumference, 9), round(rep.height, 9), frozenset(parts))


def _round2(v):
    return (round(float(v[0]), 9), round(float(v[1]), 9))
