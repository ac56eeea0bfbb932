"""Kernel for triangulated semi-translation surfaces.

A surface is a finite collection of positively oriented Euclidean
triangles, with the 3*F directed edge slots glued in pairs.  A gluing
carries a holonomy sign sigma in {+1, -1} and identifies edge vectors by
v' == -sigma * v, so every transition of the developed picture is a map
z -> sigma*z + c (a semi-translation).  Cone angles are therefore integer
multiples of pi and can be counted exactly.

Coordinates are exact rationals (fractions.Fraction) wherever possible;
surfaces produced by irrational linear maps fall back to floats, and the
predicates then use a small relative tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

__all__ = [
    "SurfaceError",
    "ParseError",
    "PlanarMatrix",
    "FlatSurface",
    "Corridor",
    "ValidationReport",
    "parse_surface",
    "serialize_surface",
    "validate_surface",
    "surface_area",
    "apply_linear",
    "develop_corridor",
]

# predicate tolerance (relative) for float-coordinate surfaces only
FLOAT_PRED_TOL = 1e-12


class SurfaceError(ValueError):
    pass


class ParseError(SurfaceError):
    pass


# ---------------------------------------------------------------------------
# scalar and planar helpers


def is_exact(x) -> bool:
    return not isinstance(x, float)


def as_float(x) -> float:
    return float(x)


def vadd(u, v):
    return (u[0] + v[0], u[1] + v[1])


def vsub(u, v):
    return (u[0] - v[0], u[1] - v[1])


def vneg(u):
    return (-u[0], -u[1])


def smul(s, u):
    return (s * u[0], s * u[1])


def cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def vlen(u) -> float:
    return math.hypot(float(u[0]), float(u[1]))


def _sgn(x, tol=0):
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


def cross_sign(u, v, tol: float = 0.0) -> int:
    """Sign of cross(u, v); for float data, zero within tol * |u||v|."""
    c = cross(u, v)
    if tol and isinstance(c, float):
        m = (abs(float(u[0])) + abs(float(u[1]))) * (abs(float(v[0])) + abs(float(v[1])))
        return _sgn(c, tol * m)
    return _sgn(c)


def dot_sign(u, v, tol: float = 0.0) -> int:
    d = dot(u, v)
    if tol and isinstance(d, float):
        m = (abs(float(u[0])) + abs(float(u[1]))) * (abs(float(v[0])) + abs(float(v[1])))
        return _sgn(d, tol * m)
    return _sgn(d)


def parallel(u, v, tol: float = 0.0) -> bool:
    return cross_sign(u, v, tol) == 0


def pt_eq(a, b, tol: float = 0.0) -> bool:
    """Point equality; tolerance-aware when the data is floating point."""
    if a == b:
        return True
    if not tol:
        return False
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    m = max(1.0, abs(ax), abs(ay), abs(bx), abs(by))
    return abs(ax - bx) <= tol * m and abs(ay - by) <= tol * m


@dataclass(frozen=True)
class PlanarMatrix:
    """2x2 real matrix acting R-linearly on edge vectors."""

    a: object
    b: object
    c: object
    d: object

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def apply(self, v):
        return (self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1])

    @staticmethod
    def diagonal(x, y) -> "PlanarMatrix":
        return PlanarMatrix(x, 0, 0, y)

    @staticmethod
    def rotation(theta: float) -> "PlanarMatrix":
        co, si = math.cos(theta), math.sin(theta)
        return PlanarMatrix(co, -si, si, co)


# ---------------------------------------------------------------------------
# triangles and surfaces


class Triangle:
    """Positively oriented triangle given by its three edge vectors.

    Intrinsic vertices: V0 = (0,0), V1 = e0, V2 = e0 + e1; edge slot j is
    the directed edge from Vj to V(j+1); slot vectors sum to zero.
    """

    __slots__ = ("edges", "verts")

    def __init__(self, e0, e1, e2):
        self.edges = (tuple(e0), tuple(e1), tuple(e2))
        v1 = self.edges[0]
        v2 = vadd(v1, self.edges[1])
        self.verts = ((0 * v1[0], 0 * v1[1]), v1, v2)

    def doubled_area(self):
        return cross(self.edges[0], self.edges[1])

    def corner_rays(self, j: int):
        """Rays from vertex j along the two incident edges: (a, b) with
        a = slot j direction, b = reversed slot j-1 direction; the corner
        angle is the ccw angle from a to b, in (0, pi)."""
        a = self.edges[j]
        b = vneg(self.edges[(j + 2) % 3])
        return a, b


Slot = tuple  # (triangle index, edge index)


class FlatSurface:
    """Immutable triangulated semi-translation surface."""

    def __init__(self, triangles: Sequence[Triangle], gluings, marked=(), labels=None):
        self.triangles = tuple(triangles)
        self.labels = dict(labels or {})
        self.partner: dict = {}
        self.sigma: dict = {}
        for item in gluings:
            (t, e), (t2, e2) = (tuple(item[0]), tuple(item[1]))
            sig = item[2] if len(item) > 2 and item[2] is not None else None
            a, b = (t, e), (t2, e2)
            if a in self.partner or b in self.partner:
                raise SurfaceError(f"slot glued twice: {a} or {b}")
            if a == b:
                raise SurfaceError(f"slot glued to itself: {a}")
            v = self.triangles[t].edges[e]
            v2 = self.triangles[t2].edges[e2]
            if sig is None:
                sig = self._infer_sigma(v, v2)
            self.partner[a] = b
            self.partner[b] = a
            self.sigma[a] = sig
            self.sigma[b] = sig
        for t in range(len(self.triangles)):
            for e in range(3):
                if (t, e) not in self.partner:
                    raise SurfaceError(f"unglued slot {(t, e)}")
        self.exact = all(
            is_exact(x) for tri in self.triangles for v in tri.edges for x in v
        )
        self.tol = 0.0 if self.exact else FLOAT_PRED_TOL
        self._corner_class: dict = {}
        self._classes: list = []
        self._build_vertex_classes()
        self.marked = frozenset(int(m) for m in marked)
        bad = [m for m in self.marked if not (0 <= m < len(self._classes))]
        if bad:
            raise SurfaceError(f"marked ids out of range: {bad}")
        self._tighten_cache: dict = {}

    # -- construction helpers

    def _infer_sigma(self, v, v2) -> int:
        tol = FLOAT_PRED_TOL if not (all(map(is_exact, v)) and all(map(is_exact, v2))) else 0.0
        if parallel(v, v2, tol) and dot_sign(v, v2, tol) < 0:
            return 1
        if parallel(v, v2, tol) and dot_sign(v, v2, tol) > 0:
            return -1
        raise SurfaceError(f"glued edges not parallel-equal: {v} vs {v2}")

    def transition(self, exit_slot: Slot):
        """Map from the entered triangle's frame into the exiting frame.

        Returns (t2, sigma, c) with psi(w) = sigma*w + c taking the
        partner triangle's intrinsic coordinates into exit-frame
        coordinates; psi matches the glued edge start/end crosswise.
        """
        t, e = exit_slot
        t2, e2 = self.partner[exit_slot]
        sig = self.sigma[exit_slot]
        b_pt = self.triangles[t].verts[(e + 1) % 3]
        a2_pt = self.triangles[t2].verts[e2]
        c = vsub(b_pt, smul(sig, a2_pt))
        return t2, sig, c

    # -- vertex classes

    def _next_corner_ccw(self, corner):
        t, j = corner
        t2, e2 = self.partner[(t, (j + 2) % 3)]
        return (t2, e2)

    def _build_vertex_classes(self):
        seen = set()
        cycles = []
        for t in range(len(self.triangles)):
            for j in range(3):
                if (t, j) in seen:
                    continue
                cyc = []
                c = (t, j)
                while c not in seen:
                    seen.add(c)
                    cyc.append(c)
                    c = self._next_corner_ccw(c)
                if c != cyc[0]:
                    raise SurfaceError(f"corner walk at {cyc[0]} does not close")
                cycles.append(cyc)
        cycles.sort(key=lambda cyc: min(cyc))
        self._classes = cycles
        for i, cyc in enumerate(cycles):
            for c in cyc:
                self._corner_class[c] = i

    @property
    def num_vertex_classes(self) -> int:
        return len(self._classes)

    def vertex_class_of(self, corner) -> int:
        return self._corner_class[tuple(corner)]

    def corner_cycle(self, vclass: int):
        return tuple(self._classes[vclass])

    def cone_multiple(self, vclass: int) -> int:
        """Exact k with cone angle == k*pi, via halfturn counting."""
        cached = getattr(self, "_cone_cache", None)
        if cached is None:
            cached = self._cone_cache = {}
        if vclass in cached:
            return cached[vclass]
        k = self._cone_multiple_uncached(vclass)
        cached[vclass] = k
        return k

    def _cone_multiple_uncached(self, vclass: int) -> int:
        rays = self._fan_rays(vclass)
        k = _count_halfturns(rays, self.tol)
        sign = 1
        for t, j in self._classes[vclass]:
            sign *= self.sigma[(t, (j + 2) % 3)]
        if (k % 2 == 0) != (sign == 1):
            raise SurfaceError(f"cone parity mismatch at class {vclass}")
        if self.exact:
            approx = sum(
                _corner_angle(self.triangles[t], j) for t, j in self._classes[vclass]
            )
            if abs(approx - k * math.pi) > 1e-9 * max(1, k):
                raise SurfaceError(f"cone angle drift at class {vclass}")
        return k

    def _fan_rays(self, vclass: int):
        """Developed outgoing-edge rays around a vertex, one full cycle.

        Returns [r_0 .. r_m] with r_m == (+-1) * r_0 and each consecutive
        step a ccw turn by one corner angle in (0, pi).
        """
        cyc = self._classes[vclass]
        s = 1
        rays = []
        first = None
        for t, j in cyc:
            a, b = self.triangles[t].corner_rays(j)
            if first is None:
                first = smul(s, a)
                rays.append(first)
            rays.append(smul(s, b))
            s *= self.sigma[(t, (j + 2) % 3)]
        return rays

    def is_marked(self, vclass: int) -> bool:
        return vclass in self.marked

    def area(self):
        tot = 0
        for tri in self.triangles:
            tot = tot + tri.doubled_area()
        return tot / 2 if isinstance(tot, float) else Fraction(tot, 2)

    # deterministic hash key for reports
    def digest(self) -> str:
        import hashlib

        return hashlib.sha256(serialize_surface(self).encode()).hexdigest()[:16]


def _corner_angle(tri: Triangle, j: int) -> float:
    a, b = tri.corner_rays(j)
    ang = math.atan2(float(cross(a, b)), float(dot(a, b)))
    return ang if ang >= 0 else ang + 2 * math.pi


def _count_halfturns(rays, tol: float) -> int:
    """Number of multiples of pi swept by a ccw ray walk.

    Each step r_i -> r_{i+1} must turn ccw by an angle in [0, pi); the
    count is the number of steps whose half-open sector (r_i, r_{i+1}]
    meets the line spanned by r_0.
    """
    u = rays[0]
    k = 0
    prev = u
    for r in rays[1:]:
        cs = cross_sign(prev, r, tol)
        if cs < 0:
            raise SurfaceError("fan walk turned clockwise (negative triangle?)")
        if cs == 0:
            if dot_sign(prev, r, tol) < 0:
                raise SurfaceError("fan walk step of exactly pi")
            continue  # zero step
        k += _step_crosses_line(prev, r, u, tol)
        prev = r
    return k


def _step_crosses_line(a, b, u, tol: float) -> int:
    """Does the ccw sector (a, b] (angle < pi) meet the line through u?"""
    for w in (u, vneg(u)):
        ca = cross_sign(a, w, tol)
        cb = cross_sign(w, b, tol)
        if ca > 0 and cb > 0:
            return 1
        if cb == 0 and dot_sign(w, b, tol) > 0 and ca > 0:
            return 1
    return 0


# ---------------------------------------------------------------------------
# fan walks between germs (exact angle predicates at a vertex)


@dataclass(frozen=True)
class Germ:
    """A direction at a vertex, anchored in a triangle corner's sector."""

    corner: tuple  # (tri, vertex index)
    direction: tuple  # intrinsic frame of that triangle; nonzero

    def __repr__(self):
        return f"Germ({self.corner}, {self.direction})"


@dataclass(frozen=True)
class FanAngle:
    """Exact representation of an angle swept at a vertex: k*pi + residual."""

    halfturns: int
    exact_multiple: bool  # residual == 0 exactly
    radians: float

    def at_least_pi(self) -> bool:
        return self.halfturns >= 1

    def exactly_pi(self) -> bool:
        return self.halfturns == 1 and self.exact_multiple

    def less_than_pi(self) -> bool:
        return self.halfturns == 0


def fan_walk_ccw(surface: FlatSurface, germ_from: Germ, germ_to: Germ) -> FanAngle:
    """Angle swept rotating ccw around the vertex from one germ to the other.

    Both germs must sit at the same vertex class, each inside (or on the
    boundary of) its corner's sector.  Exact for exact surfaces.
    """
    tol = surface.tol
    vclass = surface.vertex_class_of(germ_from.corner)
    if surface.vertex_class_of(germ_to.corner) != vclass:
        raise SurfaceError("fan walk endpoints at different vertices")
    cyc = surface.corner_cycle(vclass)
    n = len(cyc)
    i0 = cyc.index(tuple(germ_from.corner))
    u = tuple(germ_from.direction)
    rays = [u]
    s = 1
    target_dev = None
    idx = i0
    for step in range(n + 1):
        t, j = cyc[idx % n]
        a, b = surface.triangles[t].corner_rays(j)
        if tuple(germ_to.corner) == (t, j):
            cand = smul(s, tuple(germ_to.direction))
            # target must lie at-or-after the current last ray within this sector
            last = rays[-1]
            cs = cross_sign(last, cand, tol)
            in_rest = cs > 0 or (cs == 0 and dot_sign(last, cand, tol) > 0)
            # also must not lie beyond the sector's b ray
            bb = smul(s, b)
            cs2 = cross_sign(cand, bb, tol)
            before_b = cs2 > 0 or (cs2 == 0 and dot_sign(cand, bb, tol) > 0)
            if in_rest and before_b:
                rays.append(cand)
                target_dev = cand
                break
        rays.append(smul(s, b))
        s *= surface.sigma[(t, (j + 2) % 3)]
        idx += 1
    if target_dev is None:
        raise SurfaceError("fan walk did not reach target germ")
    k = _count_halfturns(rays, tol)
    anti = parallel(target_dev, u, tol) and dot_sign(target_dev, u, tol) < 0
    para = parallel(target_dev, u, tol) and dot_sign(target_dev, u, tol) > 0
    exact_multiple = anti or para
    theta = k * math.pi + _residual_angle(u, target_dev, k)
    return FanAngle(k, exact_multiple, theta)


def _residual_angle(u, w, k: int) -> float:
    """Angle of w past the k-th halfturn of u, in [0, pi)."""
    base = smul(1 if k % 2 == 0 else -1, u)
    ang = math.atan2(float(cross(base, w)), float(dot(base, w)))
    if ang < 0:
        ang += 2 * math.pi
    if ang >= math.pi:  # numerical spill; clamp
        ang -= math.pi if ang - math.pi < 1e-9 else 0.0
    return ang


def side_angles(surface: FlatSurface, germ_in: Germ, germ_out: Germ):
    """Angles on the two sides of a path through a vertex.

    ``germ_in`` points back along the incoming segment, ``germ_out``
    along the outgoing one.  Returns (ccw side, cw side) as FanAngle.
    """
    ccw = fan_walk_ccw(surface, germ_in, germ_out)
    cw = fan_walk_ccw(surface, germ_out, germ_in)
    return ccw, cw


# ---------------------------------------------------------------------------
# developing corridors


@dataclass
class Corridor:
    """A developed strip of triangles along a crossing sequence."""

    surface: FlatSurface
    crossings: tuple  # normalized exit slots
    tris: tuple  # triangle ids, len == len(crossings) + 1
    placements: tuple  # (sign, offset) per triangle, first is identity
    closed: bool

    @property
    def holonomy(self):
        """Closing isometry (sign, translation) for closed corridors."""
        if not self.closed:
            return None
        return self.placements[-1]

    def place(self, k: int, p):
        s, d = self.placements[k]
        return vadd(smul(s, p), d)

    def portal(self, k: int):
        """Developed crossed edge k (between strip triangles k and k+1),
        returned as (left, right) relative to the direction of travel."""
        t, e = self.crossings[k]
        tri = self.surface.triangles[t]
        a = self.place(k, tri.verts[e])
        b = self.place(k, tri.verts[(e + 1) % 3])
        return b, a  # travel crosses the directed edge left-to-right


def normalize_crossing(surface: FlatSurface, item) -> Slot:
    """Crossing spec (t, e, o) -> the exit slot actually crossed."""
    if len(item) == 2:
        return (int(item[0]), int(item[1]))
    t, e, o = item
    slot = (int(t), int(e))
    if int(o) == 1:
        return slot
    if int(o) == -1:
        return surface.partner[slot]
    raise SurfaceError(f"crossing orientation must be +-1: {item}")


def develop_corridor(surface: FlatSurface, crossings, closed: bool = False) -> Corridor:
    """Develop the strip of triangles along a crossing sequence.

    Consecutive crossings must chain: the triangle entered by one
    crossing is the triangle exited by the next.  For closed corridors
    the final transition re-enters the starting triangle and the last
    placement is the closing holonomy.
    """
    seq = [normalize_crossing(surface, c) for c in crossings]
    if not seq:
        raise SurfaceError("empty crossing sequence")
    tris = [seq[0][0]]
    for k, slot in enumerate(seq):
        if slot[0] != tris[-1]:
            raise SurfaceError(
                f"crossing {k} exits triangle {slot[0]} but corridor is in {tris[-1]}"
            )
        t2, _, _ = surface.transition(slot)
        tris.append(t2)
    if closed and tris[-1] != tris[0]:
        raise SurfaceError("closed corridor does not return to its start triangle")
    placements = [(1, (0, 0))]
    for slot in seq:
        _, sig, c = surface.transition(slot)
        s, d = placements[-1]
        placements.append((s * sig, vadd(smul(s, c), d)))
    return Corridor(surface, tuple(seq), tuple(tris), tuple(placements), closed)


def holonomy_sign(surface: FlatSurface, crossings) -> int:
    sign = 1
    for c in crossings:
        sign *= surface.sigma[normalize_crossing(surface, c)]
    return sign


# ---------------------------------------------------------------------------
# straight-line tracing


class TraceHit(Exception):
    """Internal: straight trace ran into a vertex."""

    def __init__(self, corner, point):
        self.corner = corner
        self.point = point
        super().__init__(f"hit vertex at corner {corner}")


def trace_ray(surface: FlatSurface, tri: int, point, direction, *, max_steps=100000):
    """Yield (tri, entry point, exit point, exit slot) per triangle crossed.

    Starts at ``point`` inside (or on the boundary of) triangle ``tri``
    and follows ``direction``; raises TraceHit when the ray runs into a
    triangle vertex.  The caller consumes as many steps as needed.
    """
    p = tuple(point)
    d = tuple(direction)
    tol = surface.tol
    if not all(is_exact(x) for x in (*p, *d)):
        tol = max(tol, FLOAT_PRED_TOL)
    t = tri
    for _ in range(max_steps):
        tri_obj = surface.triangles[t]
        best = None
        for e in range(3):
            a = tri_obj.verts[e]
            vec = tri_obj.edges[e]
            denom = cross(d, vec)
            if _sgn(denom) == 0:
                continue
            # p + s*d == a + r*vec
            ap = vsub(a, p)
            s_par = cross(ap, vec)
            r_par = cross(ap, d)
            s_val = s_par / denom
            r_val = r_par / denom
            if _is_positive(s_val, tol) and _in_unit(r_val, tol):
                if best is None or _lt(s_val, best[0], tol):
                    best = (s_val, e, r_val)
        if best is None:
            raise SurfaceError("trace_ray: no exit (degenerate direction?)")
        s_val, e, r_val = best
        q = vadd(p, smul(s_val, d))
        if _near_int(r_val, tol):
            corner = (t, e) if _close_to(r_val, 0, tol) else (t, (e + 1) % 3)
            raise TraceHit(corner, q)
        yield t, p, q, (t, e)
        t2, sig, c = surface.transition((t, e))
        # invert psi: w = sigma*(z - c)
        p = smul(sig, vsub(q, c))
        d = smul(sig, d)
        t = t2
    raise SurfaceError("trace_ray: step budget exceeded")


def _is_positive(x, tol):
    if isinstance(x, float):
        return x > tol
    return x > 0


def _in_unit(x, tol):
    if isinstance(x, float):
        return -tol <= x <= 1 + tol
    return 0 <= x <= 1


def _lt(x, y, tol):
    return x < y


def _near_int(x, tol):
    if isinstance(x, float):
        return abs(x) <= tol or abs(x - 1) <= tol
    return x == 0 or x == 1


def _close_to(x, v, tol):
    if isinstance(x, float):
        return abs(x - v) <= tol
    return x == v


def sector_corner_for(surface: FlatSurface, vclass: int, direction, prefer=None):
    """Find a corner of the vertex class whose sector contains ``direction``.

    The direction is interpreted in the intrinsic frame of the returned
    corner; the match is found by walking the fan and transporting the
    direction by the +-1 transitions, starting from ``prefer`` if given.
    """
    tol = surface.tol
    cyc = surface.corner_cycle(vclass)
    n = len(cyc)
    start = cyc.index(tuple(prefer)) if prefer else 0
    s = 1
    d = tuple(direction)
    for step in range(n):
        t, j = cyc[(start + step) % n]
        a, b = surface.triangles[t].corner_rays(j)
        dd = smul(s, d)
        ca = cross_sign(a, dd, tol)
        cb = cross_sign(dd, b, tol)
        if (ca > 0 or (ca == 0 and dot_sign(a, dd, tol) > 0)) and (
            cb > 0 or (cb == 0 and dot_sign(dd, b, tol) > 0)
        ):
            return (t, j), dd
        s *= surface.sigma[(t, (j + 2) % 3)]
    raise SurfaceError("direction not found in any sector (zero vector?)")


# ---------------------------------------------------------------------------
# file format


def _scalar_from_pair(num, den):
    if den == 0:
        raise ParseError("zero denominator")
    return Fraction(int(num), int(den))


def _scalar_to_pair(x):
    f = Fraction(x) if not isinstance(x, Fraction) else x
    return f.numerator, f.denominator


def surface_from_dict(data: dict) -> FlatSurface:
    try:
        if int(data.get("version", 1)) != 1:
            raise ParseError(f"unsupported version {data.get('version')}")
        tris = []
        for i, trec in enumerate(data["triangles"]):
            edges = trec["edges"]
            if len(edges) != 3:
                raise ParseError(f"triangle {i}: need 3 edges")
            evecs = []
            for e in edges:
                if len(e) != 4:
                    raise ParseError(f"triangle {i}: edge needs 4 ints [xn,xd,yn,yd]")
                evecs.append((_scalar_from_pair(e[0], e[1]), _scalar_from_pair(e[2], e[3])))
            sx = evecs[0][0] + evecs[1][0] + evecs[2][0]
            sy = evecs[0][1] + evecs[1][1] + evecs[2][1]
            if sx != 0 or sy != 0:
                raise ParseError(f"triangle {i}: edges do not sum to zero")
            tris.append(Triangle(*evecs))
        gl = []
        for item in data["gluings"]:
            if len(item) == 2:
                gl.append((tuple(item[0]), tuple(item[1]), None))
            else:
                gl.append((tuple(item[0]), tuple(item[1]), int(item[2])))
        return FlatSurface(tris, gl, marked=data.get("marked", ()), labels=data.get("labels"))
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed surface file: {exc}") from exc


def parse_surface(text: str) -> FlatSurface:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return surface_from_dict(data)


def surface_to_dict(s: FlatSurface) -> dict:
    tris = []
    for tri in s.triangles:
        edges = []
        for v in tri.edges:
            xn, xd = _scalar_to_pair(v[0])
            yn, yd = _scalar_to_pair(v[1])
            edges.append([xn, xd, yn, yd])
        tris.append({"edges": edges})
    gl = []
    seen = set()
    for slot, slot2 in sorted(s.partner.items()):
        if slot in seen:
            continue
        seen.add(slot)
        seen.add(slot2)
        gl.append([list(slot), list(slot2), s.sigma[slot]])
    return {
        "version": 1,
        "triangles": tris,
        "gluings": gl,
        "marked": sorted(s.marked),
        "labels": s.labels,
    }


def serialize_surface(s: FlatSurface) -> str:
    return json.dumps(surface_to_dict(s), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    checks: list  # (name, passed, detail)
    genus: Optional[int]
    marked_count: int
    cone_points: list  # (vclass, k, marked)
    gb_balance: Optional[int]
    area: Optional[float]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": n, "passed": p, "detail": d} for (n, p, d) in self.checks
            ],
            "genus": self.genus,
            "marked_count": self.marked_count,
            "cone_points": [
                {"vertex_class": v, "angle_multiple": k, "marked": m}
                for (v, k, m) in self.cone_points
            ],
            "gauss_bonnet_balance": self.gb_balance,
            "area": self.area,
        }


def validate_surface(s: FlatSurface) -> ValidationReport:
    """Run all invariants; diagnostics only, never raises."""
    checks = []
    ok = True

    def record(name, passed, detail=""):
        nonlocal ok
        checks.append((name, bool(passed), detail))
        ok = ok and bool(passed)

    tol = s.tol
    orient_ok = True
    for i, tri in enumerate(s.triangles):
        ssum = (
            tri.edges[0][0] + tri.edges[1][0] + tri.edges[2][0],
            tri.edges[0][1] + tri.edges[1][1] + tri.edges[2][1],
        )
        zero = (
            abs(float(ssum[0])) <= tol and abs(float(ssum[1])) <= tol
            if not s.exact
            else ssum == (0, 0)
        )
        if not zero or _sgn(tri.doubled_area()) <= 0:
            orient_ok = False
            record("triangles", False, f"triangle {i} degenerate or misoriented")
            break
    if orient_ok:
        record("triangles", True, f"{len(s.triangles)} positively oriented triangles")

    glue_ok = True
    for slot, slot2 in s.partner.items():
        v = s.triangles[slot[0]].edges[slot[1]]
        v2 = s.triangles[slot2[0]].edges[slot2[1]]
        want = smul(-s.sigma[slot], v)
        same = (
            v2 == want
            if s.exact
            else vlen(vsub(v2, want)) <= tol * max(1.0, vlen(v))
        )
        if not same:
            glue_ok = False
            record("gluings", False, f"slot {slot}: v' != -sigma*v")
            break
    if glue_ok:
        record("gluings", True, f"{len(s.partner) // 2} matched edge pairs")

    genus = None
    gb = None
    cone_points = []
    if orient_ok:
        try:
            ks = [s.cone_multiple(v) for v in range(s.num_vertex_classes)]
        except SurfaceError as exc:
            record("cone_angles", False, str(exc))
            ks = None
        if ks is not None:
            bad = [
                (v, k)
                for v, k in enumerate(ks)
                if (k < 1) or (k < 2 and not s.is_marked(v))
            ]
            record(
                "cone_angles",
                not bad,
                "all k >= 2 (marked >= 1)" if not bad else f"bad angles {bad}",
            )
            cone_points = [
                (v, k, s.is_marked(v)) for v, k in enumerate(ks) if k != 2 or s.is_marked(v)
            ]
            total = sum(2 - k for k in ks)
            n = len(s.marked)
            if total % 4 == 0 and total <= 4:
                genus = (4 - total) // 4
                gb = total - 2 * n
                record(
                    "gauss_bonnet",
                    gb == 2 * (2 - 2 * genus - n),
                    f"sum(2-k) = {total} = 4-4g; marked-adjusted balance {gb} = 2(2-2g-n)",
                )
            else:
                record("gauss_bonnet", False, f"sum(2-k) = {total} not of the form 4-4g")
    area_val = None
    if orient_ok:
        a = s.area()
        area_val = float(a)
        record("area", _sgn(a) > 0, f"total area {area_val}")
    return ValidationReport(
        ok=ok,
        checks=checks,
        genus=genus,
        marked_count=len(s.marked),
        cone_points=cone_points,
        gb_balance=gb,
        area=area_val,
    )


def surface_area(s: FlatSurface):
    """Total area; exact Fraction for exact surfaces."""
    return s.area()


def apply_linear(s: FlatSurface, m: PlanarMatrix) -> FlatSurface:
    """Apply an orientation-preserving linear map to every edge vector."""
    if _sgn(m.det) <= 0:
        raise SurfaceError("orientation-reversing or singular")
    tris = [Triangle(*(m.apply(v) for v in tri.edges)) for tri in s.triangles]
    gl = []
    seen = set()
    for slot, slot2 in s.partner.items():
        if slot in seen:
            continue
        seen.add(slot)
        seen.add(slot2)
        gl.append((slot, slot2, s.sigma[slot]))
    return FlatSurface(tris, gl, marked=s.marked, labels=s.labels)
