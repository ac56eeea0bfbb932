"""Tightening homotopy classes to flat geodesics.

The tightener iterates: develop the corridor of the current crossing
sequence, run an exact funnel pass in the developed strip (snapping to
developed vertices), audit the cone angle on both sides of every pinch,
and reroute around any unmarked vertex whose far side subtends less
than pi.  Closed curves whose in-strip geodesic is a straight loop, or
whose chain turns by exactly pi along one side, are promoted to
cylinder families and extended to the maximal parallel family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .geom_kernel import (
    Corridor,
    FanAngle,
    FlatSurface,
    Germ,
    SurfaceError,
    TraceHit,
    cross,
    cross_sign,
    develop_corridor,
    dot,
    dot_sign,
    fan_walk_ccw,
    holonomy_sign,
    normalize_crossing,
    pt_eq,
    sector_corner_for,
    smul,
    trace_ray,
    vadd,
    vlen,
    vneg,
    vsub,
)

__all__ = [
    "CurveClass",
    "ChainRep",
    "CylinderRep",
    "SaddleSeg",
    "TrivialCurveError",
    "make_closed",
    "make_arc",
    "tighten",
    "flat_length",
    "torus_class",
    "curve_from_dict",
    "curve_to_dict",
]

MAX_TIGHTEN_ROUNDS = 300
TRACE_BUDGET = 200000


class TrivialCurveError(SurfaceError):
    pass


# ---------------------------------------------------------------------------
# curve classes


@dataclass(frozen=True)
class CurveClass:
    """Combinatorial homotopy class: a sequence of directed edge crossings.

    Closed curves carry a cyclic sequence; arcs run between marked vertex
    classes.  Crossings are stored as normalized exit slots (tri, edge).
    """

    kind: str  # "closed" | "arc"
    crossings: tuple
    ends: Optional[tuple] = None  # (vclass, vclass) for arcs
    start_corner: Optional[tuple] = None
    end_corner: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("closed", "arc"):
            raise SurfaceError(f"bad curve kind {self.kind!r}")
        if self.kind == "arc" and self.ends is None:
            raise SurfaceError("arcs need endpoint vertex classes")

    def key(self):
        if self.kind == "arc":
            return ("arc", self.ends, self.crossings, self.start_corner, self.end_corner)
        return ("closed", _canonical_cyclic(self.crossings))


def _canonical_cyclic(seq: tuple) -> tuple:
    if not seq:
        return seq
    return min(seq[i:] + seq[:i] for i in range(len(seq)))


def make_closed(surface: FlatSurface, crossings) -> CurveClass:
    return CurveClass("closed", tuple(normalize_crossing(surface, c) for c in crossings))


def make_arc(surface, crossings, ends, start_corner=None, end_corner=None) -> CurveClass:
    seq = tuple(normalize_crossing(surface, c) for c in crossings)
    return CurveClass("arc", seq, tuple(ends), start_corner, end_corner)


def curve_from_dict(surface: FlatSurface, data: dict) -> CurveClass:
    crossings = [tuple(c) for c in data["crossings"]]
    if data["kind"] == "closed":
        return make_closed(surface, crossings)
    return make_arc(surface, crossings, tuple(data["ends"]))


def curve_to_dict(curve: CurveClass) -> dict:
    out = {"kind": curve.kind, "crossings": [[t, e, 1] for (t, e) in curve.crossings]}
    if curve.kind == "arc":
        out["ends"] = list(curve.ends)
    return out


def reduce_sequence(surface: FlatSurface, seq, cyclic: bool):
    """Cancel immediate backtracks (crossing an edge and straight back)."""
    seq = list(seq)
    changed = True
    while changed and seq:
        changed = False
        i = 0
        while i < len(seq) - 1:
            if surface.partner[seq[i]] == seq[i + 1]:
                del seq[i : i + 2]
                changed = True
                i = max(i - 1, 0)
            else:
                i += 1
        if cyclic and len(seq) >= 2 and surface.partner[seq[-1]] == seq[0]:
            seq = seq[1:-1]
            changed = True
    return tuple(seq)


# ---------------------------------------------------------------------------
# geodesic representatives


@dataclass
class SaddleSeg:
    """A straight segment of a geodesic chain, between vertex passes."""

    start_vc: int
    end_vc: int
    vec: tuple  # developed vector (sign conventions fixed per chain)
    crossings: tuple  # slots crossed strictly between the endpoints
    start_corner: tuple  # corner (tri, j) the segment leaves from
    start_dir: tuple  # direction in that triangle's intrinsic frame

    @property
    def length(self) -> float:
        return vlen(self.vec)


@dataclass
class ChainRep:
    """Concatenation of saddle connections; the generic geodesic."""

    surface: FlatSurface
    segments: list
    closed: bool
    halved: bool = False  # built from the squared class (flip holonomy)
    degenerate_at: Optional[int] = None  # zero-length class at a marked vertex

    kind = "chain"

    @property
    def length(self) -> float:
        tot = sum(seg.length for seg in self.segments)
        return tot / 2 if self.halved else tot

    @property
    def weight(self) -> float:
        """Multiplier for per-segment sums (length and pairings)."""
        return 0.5 if self.halved else 1.0

    @property
    def err(self) -> float:
        return 1e-14 * max(1.0, self.length) * max(1, len(self.segments))


@dataclass
class CylinderRep:
    """Family of parallel geodesic representatives filling a flat cylinder."""

    surface: FlatSurface
    direction: tuple  # holonomy translation of one leaf period
    circumference: float  # length of the class (leaf period * multiplicity)
    height: float
    boundaries: tuple  # two lists of SaddleSeg (equal when the family wraps)
    core_seq: tuple  # crossing sequence of an interior leaf
    core_point: tuple  # (tri, exact point) on that leaf
    multiplicity: int = 1

    kind = "cylinder"

    @property
    def length(self) -> float:
        return self.circumference

    @property
    def err(self) -> float:
        return 1e-14 * max(1.0, self.length)


def rep_segments(rep):
    """(segments, weight) so that length == weight * sum of segment data.

    Cylinder classes contribute their straight core as a single segment
    per wrap; used by the foliation pairings.
    """
    if rep.kind == "chain":
        return rep.segments, rep.weight
    seg = SaddleSeg(-1, -1, rep.direction, rep.core_seq, (-1, -1), rep.direction)
    return [seg] * rep.multiplicity, 1.0


# ---------------------------------------------------------------------------
# exact funnel over a developed portal list


def _orient(a, b, c, tol):
    return cross_sign(vsub(b, a), vsub(c, a), tol)


def _funnel(start, portals, end, tol):
    """Shortest path from start to end crossing the portals in order.

    Portals are (left, right) point pairs in developed coordinates.
    Returns interior corner points as (point, (portal index, side)).
    Vertices passed exactly in line are restored by _insert_collinear.
    """
    P = list(portals) + [(end, end)]
    apex, aref, ai = start, None, -1
    left = right = start
    lref = rref = None
    li = ri = -1
    out = []
    i = 0
    guard = 0
    limit = 8 * (len(P) + 2) * (len(P) + 2) + 64
    while i < len(P):
        guard += 1
        if guard > limit:
            raise SurfaceError("funnel did not terminate")
        L, R = P[i]
        if _orient(apex, right, R, tol) >= 0:  # R narrows or crosses
            if right == apex or _orient(apex, left, R, tol) < 0:
                right, ri, rref = R, i, (i, "R")
            else:
                out.append((left, lref))
                apex, aref, ai = left, lref, li
                left = right = apex
                lref = rref = aref
                li = ri = ai
                i = ai + 1
                continue
        if _orient(apex, left, L, tol) <= 0:  # L narrows or crosses
            if left == apex or _orient(apex, right, L, tol) > 0:
                left, li, lref = L, i, (i, "L")
            else:
                out.append((right, rref))
                apex, aref, ai = right, rref, ri
                left = right = apex
                lref = rref = aref
                li = ri = ai
                i = ai + 1
                continue
        i += 1
    # drop artifacts of the terminal pseudo-portal
    return [o for o in out if o[1] is not None and o[1][0] < len(portals)]


def _insert_collinear(start, inner, end, portals, tol):
    """Full path point list with exact pass-through vertices restored."""
    pts = [(start, None)] + list(inner) + [(end, None)]
    full = []
    for k in range(len(pts) - 1):
        (pa, ra), (pb, rb) = pts[k], pts[k + 1]
        full.append((pa, ra))
        ia = ra[0] if ra is not None else -1
        ib = rb[0] if rb is not None else len(portals)
        d = vsub(pb, pa)
        dd = dot(d, d)
        if not _is_pos(dd):
            continue
        hits = []
        for j in range(ia + 1, min(ib, len(portals))):
            for side, q in (("L", portals[j][0]), ("R", portals[j][1])):
                if pt_eq(q, pa, tol) or pt_eq(q, pb, tol):
                    continue
                if cross_sign(d, vsub(q, pa), tol) != 0:
                    continue
                tpar = dot(vsub(q, pa), d)
                if _is_pos(tpar) and _is_pos(dd - tpar):
                    hits.append((float(tpar), q, (j, side)))
        hits.sort(key=lambda h: h[0])
        seen = set()
        for _, q, ref in hits:
            if q in seen:
                continue
            seen.add(q)
            full.append((q, ref))
    full.append(pts[-1])
    return full


def _is_pos(x):
    return float(x) > 0 if isinstance(x, float) else x > 0


# ---------------------------------------------------------------------------
# pinch bookkeeping


@dataclass
class _Pinch:
    point: tuple  # developed
    portal: int  # first corridor portal ending at this vertex pass
    portal_end: int  # last such portal (a fan of portals can share the point)
    vclass: int
    in_corner: tuple = None
    in_dir: tuple = None  # intrinsic; points back along the incoming segment
    out_corner: tuple = None
    out_dir: tuple = None  # intrinsic; points along the outgoing segment
    ccw: FanAngle = None
    cw: FanAngle = None


def _portal_side(cor: Corridor, portal: int, point):
    tol = cor.surface.tol
    lpt, rpt = cor.portal(portal)
    if pt_eq(point, lpt, tol):
        return "L"
    if pt_eq(point, rpt, tol):
        return "R"
    return None


def _pinch_corner_before(cor: Corridor, portal: int, side: str):
    """Corner of the pinch vertex in the exited triangle."""
    t, e = cor.crossings[portal]
    return (t, e) if side == "R" else (t, (e + 1) % 3)


def _pinch_corner_after(cor: Corridor, portal: int, side: str):
    """Corner of the pinch vertex in the entered triangle."""
    slot = cor.crossings[portal]
    t2, e2 = cor.surface.partner[slot]
    return (t2, (e2 + 1) % 3) if side == "R" else (t2, e2)


def _portal_range(cor: Corridor, j: int, point, lo: int, hi: int):
    """Maximal run of portals [start .. end] sharing the developed point."""
    start = j
    while start - 1 >= lo and _portal_side(cor, start - 1, point) is not None:
        start -= 1
    end = j
    while end + 1 < hi and _portal_side(cor, end + 1, point) is not None:
        end += 1
    return start, end


def _make_pinches(surface, cor, path_refs, offset, hi):
    out = []
    lo = offset
    for pt, ref in path_refs:
        j_local, side = ref
        j = j_local + offset
        start, end = _portal_range(cor, j, pt, lo, hi)
        side0 = _portal_side(cor, start, pt)
        vc = surface.vertex_class_of(_pinch_corner_before(cor, start, side0))
        out.append(_Pinch(pt, start, end, vc))
        lo = end + 1
    return out


def _fill_germs(cor: Corridor, pinches, start_pt, end_pt):
    pts = [start_pt] + [p.point for p in pinches] + [end_pt]
    for k, p in enumerate(pinches):
        d_in = vsub(pts[k + 1], pts[k])
        d_out = vsub(pts[k + 2], pts[k + 1])
        side_in = _portal_side(cor, p.portal, p.point)
        side_out = _portal_side(cor, p.portal_end, p.point)
        s_before, _ = cor.placements[p.portal]
        s_after, _ = cor.placements[p.portal_end + 1]
        p.in_corner = _pinch_corner_before(cor, p.portal, side_in)
        p.in_dir = smul(s_before, vneg(d_in))
        p.out_corner = _pinch_corner_after(cor, p.portal_end, side_out)
        p.out_dir = smul(s_after, d_out)


def _audit(surface: FlatSurface, p: _Pinch):
    gi = Germ(p.in_corner, p.in_dir)
    go = Germ(p.out_corner, p.out_dir)
    p.ccw = fan_walk_ccw(surface, gi, go)
    p.cw = fan_walk_ccw(surface, go, gi)


def _find_reroute(surface, pinches):
    for p in pinches:
        _audit(surface, p)
    for p in pinches:
        if surface.is_marked(p.vclass):
            continue
        if p.ccw.less_than_pi():
            return p, "ccw"
        if p.cw.less_than_pi():
            return p, "cw"
    return None


def _vertex_patch(surface: FlatSurface, p: _Pinch, side: str):
    """Crossings routing around the pinch vertex on the given fan side.

    'ccw': fan from the incoming back-ray swept counterclockwise to the
    outgoing ray, crossing each corner's trailing edge; 'cw' mirrored.
    Boundary-aligned rays anchor so the path never crosses its own edge.
    """
    n = len(surface.corner_cycle(p.vclass))
    slots = []
    if side == "ccw":
        cur, _ = _sector_corner(surface, p.vclass, p.in_dir, p.in_corner, "lead")
        end, _ = _sector_corner(surface, p.vclass, p.out_dir, p.out_corner, "trail")
        for _ in range(n + 1):
            if cur == end:
                return tuple(slots)
            t, j = cur
            slots.append((t, (j + 2) % 3))
            t2, e2 = surface.partner[(t, (j + 2) % 3)]
            cur = (t2, e2)
    else:
        cur, _ = _sector_corner(surface, p.vclass, p.in_dir, p.in_corner, "trail")
        end, _ = _sector_corner(surface, p.vclass, p.out_dir, p.out_corner, "lead")
        for _ in range(n + 1):
            if cur == end:
                return tuple(slots)
            t, j = cur
            slots.append((t, j))
            t2, e2 = surface.partner[(t, j)]
            cur = (t2, (e2 + 1) % 3)
    raise SurfaceError(f"{side} patch walk failed at class {p.vclass}")


def _sector_corner(surface, vclass, direction, prefer, mode):
    """Corner whose sector holds ``direction``, with boundary resolution.

    mode 'lead': half-open [a, b) -- the sector starting at the ray;
    mode 'trail': half-open (a, b] -- the sector ending at the ray.
    """
    tol = surface.tol
    cyc = surface.corner_cycle(vclass)
    n = len(cyc)
    start = cyc.index(tuple(prefer)) if prefer in cyc else 0
    s = 1
    d = tuple(direction)
    for step in range(n):
        t, j = cyc[(start + step) % n]
        a, b = surface.triangles[t].corner_rays(j)
        dd = smul(s, d)
        ca = cross_sign(a, dd, tol)
        da = dot_sign(a, dd, tol)
        cb = cross_sign(dd, b, tol)
        db = dot_sign(dd, b, tol)
        on_a = ca == 0 and da > 0
        on_b = cb == 0 and db > 0
        inside = ca > 0 and cb > 0
        if mode == "lead" and (inside or on_a):
            return (t, j), dd
        if mode == "trail" and (inside or on_b):
            return (t, j), dd
        s *= surface.sigma[(t, (j + 2) % 3)]
    raise SurfaceError(f"no sector for {direction} at class {vclass} ({mode})")


# ---------------------------------------------------------------------------
# tighten


def tighten(surface: FlatSurface, curve: CurveClass):
    """Geodesic representative: a ChainRep, or a CylinderRep when the
    representatives foliate a flat cylinder."""
    key = curve.key()
    cached = surface._tighten_cache.get(key)
    if cached is not None:
        return cached
    if curve.kind == "closed":
        rep = _tighten_closed(surface, curve.crossings)
    else:
        rep = _tighten_arc(surface, curve)
    surface._tighten_cache[key] = rep
    return rep


def flat_length(surface: FlatSurface, curve: CurveClass) -> float:
    """Length of the geodesic representative."""
    return tighten(surface, curve).length


def _tighten_closed(surface: FlatSurface, seq):
    seq = reduce_sequence(surface, [normalize_crossing(surface, c) for c in seq], True)
    if not seq:
        raise TrivialCurveError("trivial class")
    if holonomy_sign(surface, seq) == -1:
        rep = _tighten_closed_plus(surface, seq + seq)
        if rep.kind == "chain":
            rep.halved = True
            return rep
        return CylinderRep(
            rep.surface,
            rep.direction,
            rep.circumference / 2,
            rep.height,
            rep.boundaries,
            rep.core_seq,
            rep.core_point,
            multiplicity=rep.multiplicity,
        )
    return _tighten_closed_plus(surface, seq)


def _tighten_closed_plus(surface: FlatSurface, seq):
    tol = surface.tol
    prev_len = math.inf
    for _ in range(MAX_TIGHTEN_ROUNDS):
        seq = reduce_sequence(surface, seq, True)
        if not seq:
            raise TrivialCurveError("trivial class")
        cor = develop_corridor(surface, seq, closed=True)
        sign, T = cor.holonomy
        if sign != 1:
            raise SurfaceError("internal: holonomy sign inside tighten")
        if _is_zero_vec(T, tol):
            return _zero_holonomy_rep(surface, seq)
        leaf_or_rot = _probe(surface, cor)
        if leaf_or_rot[0] == "leaf":
            _, tri, pt, dd = leaf_or_rot
            return _max_cylinder_guarded(surface, tri, pt, dd, period=dd)
        seq = leaf_or_rot[1]
        for _ in range(len(seq)):
            cor = develop_corridor(surface, seq, closed=True)
            outcome = _based_loop(surface, cor)
            if outcome[0] != "rotate":
                break
            back = outcome[1]
            seq = seq[len(seq) - back :] + seq[: len(seq) - back]
        else:
            raise SurfaceError("based-loop rotation did not settle")
        _, base, pinches, loop_len = outcome
        all_p = [base] + pinches
        reroute = _find_reroute(surface, all_p)
        if reroute is None:
            return _classify_closed(surface, cor, all_p)
        if loop_len >= prev_len * (1 - 1e-13) and not surface.exact:
            return _classify_closed(surface, cor, all_p)
        prev_len = loop_len
        p, side = reroute
        patch = _vertex_patch(surface, p, side)
        seq = _splice(cor.crossings, p.portal, p.portal_end, patch)
    raise SurfaceError("tighten did not converge")


def _splice(seq, start, end, patch):
    out = list(seq[:start])
    out.extend(patch)
    out.extend(seq[end + 1 :])
    return tuple(out)


def _is_zero_vec(v, tol):
    if isinstance(v[0], float) or isinstance(v[1], float):
        return abs(float(v[0])) <= tol and abs(float(v[1])) <= tol
    return v[0] == 0 and v[1] == 0


def _zero_holonomy_rep(surface: FlatSurface, seq):
    """Trivial holonomy: a loop around one vertex, or a trivial class."""
    common = None
    for t, e in seq:
        ends = {
            surface.vertex_class_of((t, e)),
            surface.vertex_class_of((t, (e + 1) % 3)),
        }
        common = ends if common is None else (common & ends)
    if common:
        v = min(common)
        if surface.is_marked(v):
            return ChainRep(surface, [], True, degenerate_at=v)
    raise TrivialCurveError("trivial class")


def _probe(surface: FlatSurface, cor: Corridor):
    """Funnel a point loop; detect an interior straight leaf or pick a base."""
    tol = surface.tol
    n = len(cor.crossings)
    _, T = cor.holonomy
    portals = [cor.portal(k) for k in range(1, n)]
    L0, R0 = cor.portal(0)
    for num, den in ((1, 2), (1, 3), (2, 5), (3, 7), (5, 11)):
        x = _affine(L0, R0, num, den)
        inner = _funnel(x, portals, vadd(x, T), tol)
        if not inner:
            s1, d1 = cor.placements[1]
            pt = smul(s1, vsub(x, d1))
            dd = smul(s1, T)
            if _interior_leaf_ok(surface, cor.tris[1], pt, dd):
                return ("leaf", cor.tris[1], pt, dd)
            continue  # straight but through a vertex: try another base point
        j_local, _ = inner[0][1]
        rot = j_local + 1
        return ("rot", cor.crossings[rot:] + cor.crossings[:rot])
    # straight loop but every probe line met a vertex: treat as based loop
    return ("rot", cor.crossings)


def _affine(a, b, num, den):
    lam = Fraction(num, den) if not (isinstance(a[0], float) or isinstance(b[0], float)) else num / den
    return vadd(a, smul(lam, vsub(b, a)))


def _interior_leaf_ok(surface, tri, pt, dd):
    try:
        _trace_leaf(surface, tri, pt, dd)
        return True
    except (SurfaceError, TraceHit):
        return False


def _based_loop(surface: FlatSurface, cor: Corridor):
    """Funnel the loop based at the R endpoint of corridor portal 0.

    Returns ("rotate", k) when trailing portals share the base point (the
    caller rotates the cyclic sequence so the base fan sits at the front),
    else ("ok", base pinch, interior pinches, loop length).
    """
    tol = surface.tol
    n = len(cor.crossings)
    _, T = cor.holonomy
    t0, e0 = cor.crossings[0]
    v_dev = cor.place(0, surface.triangles[t0].verts[e0])
    end = vadd(v_dev, T)
    back = 0
    while back < n - 1 and _portal_side(cor, n - 1 - back, end) is not None:
        back += 1
    if back:
        return ("rotate", back)
    base_vc = surface.vertex_class_of(_pinch_corner_before(cor, 0, "R"))
    base = _Pinch(v_dev, 0, _portal_range(cor, 0, v_dev, 0, n)[1], base_vc)
    offset = base.portal_end + 1
    portals = [cor.portal(k) for k in range(offset, n)]
    inner = _funnel(v_dev, portals, end, tol)
    full = _insert_collinear(v_dev, inner, end, portals, tol)
    pinches = _make_pinches(surface, cor, full[1:-1], offset, n)
    _fill_germs(cor, pinches, v_dev, end)
    pts = [v_dev] + [p.point for p in pinches] + [end]
    s_after, _ = cor.placements[base.portal_end + 1]
    side_out = _portal_side(cor, base.portal_end, v_dev)
    base.out_corner = _pinch_corner_after(cor, base.portal_end, side_out)
    base.out_dir = smul(s_after, vsub(pts[1], pts[0]))
    base.in_corner = _pinch_corner_before(cor, 0, "R")
    # the closing segment arrives in the holonomy copy of tris[0]; sign +1
    base.in_dir = vneg(vsub(pts[-1], pts[-2]))
    loop_len = sum(vlen(vsub(pts[k + 1], pts[k])) for k in range(len(pts) - 1))
    return ("ok", base, pinches, loop_len)


def _classify_closed(surface: FlatSurface, cor: Corridor, all_p):
    promote_ccw = all(p.ccw.exactly_pi() for p in all_p)
    promote_cw = all(p.cw.exactly_pi() for p in all_p)
    if promote_ccw or promote_cw:
        rep = _promote_boundary(surface, cor, all_p, promote_ccw)
        if rep is not None:
            return rep
    return ChainRep(surface, _chain_segments(surface, cor, all_p), True)


def _chain_segments(surface, cor, all_p):
    n = len(cor.crossings)
    _, T = cor.holonomy
    pts = [p.point for p in all_p] + [vadd(all_p[0].point, T)]
    starts = [p.portal_end for p in all_p]
    ends = [p.portal for p in all_p[1:]] + [n]
    segs = []
    for k in range(len(all_p)):
        vec = vsub(pts[k + 1], pts[k])
        crossings = tuple(cor.crossings[j] for j in range(starts[k] + 1, min(ends[k], n)))
        s_after, _ = cor.placements[starts[k] + 1]
        segs.append(
            SaddleSeg(
                all_p[k].vclass,
                all_p[(k + 1) % len(all_p)].vclass,
                vec,
                crossings,
                all_p[k].out_corner,
                smul(s_after, vec),
            )
        )
    return segs


# ---------------------------------------------------------------------------
# arcs


def _tighten_arc(surface: FlatSurface, curve: CurveClass):
    va, vb = curve.ends
    for v in (va, vb):
        if not surface.is_marked(v):
            raise SurfaceError(f"arc endpoint class {v} is not marked")
    seq = reduce_sequence(surface, curve.crossings, False)
    start_corner = curve.start_corner
    end_corner = curve.end_corner
    tol = surface.tol
    for _ in range(MAX_TIGHTEN_ROUNDS):
        if not seq:
            rep = _arc_in_triangle(surface, va, vb, start_corner, end_corner)
            if rep is not None:
                return rep
            raise TrivialCurveError("arc collapses into its endpoint")
        cor = develop_corridor(surface, seq, closed=False)
        n = len(seq)
        c_start = _arc_corner(surface, cor.tris[0], va, start_corner)
        c_end = _arc_corner(surface, cor.tris[-1], vb, end_corner)
        start = surface.triangles[cor.tris[0]].verts[c_start[1]]
        end = cor.place(n, surface.triangles[cor.tris[-1]].verts[c_end[1]])
        # skip leading/trailing portals incident to the endpoints
        lead = 0
        while lead < n and _portal_side(cor, lead, start) is not None:
            lead += 1
        stop = n
        while stop > lead and _portal_side(cor, stop - 1, end) is not None:
            stop -= 1
        portals = [cor.portal(k) for k in range(lead, stop)]
        inner = _funnel(start, portals, end, tol)
        full = _insert_collinear(start, inner, end, portals, tol)
        pinches = _make_pinches(surface, cor, full[1:-1], lead, stop)
        _fill_germs(cor, pinches, start, end)
        reroute = _find_reroute(surface, pinches)
        if reroute is None:
            return _arc_chain(surface, cor, full, pinches, va, vb, c_start, lead, stop)
        p, side = reroute
        patch = _vertex_patch(surface, p, side)
        seq = reduce_sequence(surface, _splice(cor.crossings, p.portal, p.portal_end, patch), False)
        start_corner = c_start
        end_corner = c_end
    raise SurfaceError("arc tighten did not converge")


def _arc_corner(surface, tri, vclass, explicit):
    if explicit is not None:
        ex = tuple(explicit)
        if surface.vertex_class_of(ex) == vclass and ex[0] == tri:
            return ex
    cands = [(tri, j) for j in range(3) if surface.vertex_class_of((tri, j)) == vclass]
    if not cands:
        raise SurfaceError(f"arc endpoint class {vclass} not on triangle {tri}")
    return cands[0]


def _arc_in_triangle(surface, va, vb, ca, cb):
    """Arc with empty reduced sequence: a straight segment in one triangle."""
    if ca is None or cb is None or ca == cb:
        found = None
        for t in range(len(surface.triangles)):
            classes = [surface.vertex_class_of((t, j)) for j in range(3)]
            for ja in range(3):
                for jb in range(3):
                    if ja != jb and classes[ja] == va and classes[jb] == vb:
                        found = ((t, ja), (t, jb))
                        break
                if found:
                    break
            if found:
                break
        if not found:
            return None
        ca, cb = found
    if ca == cb or ca[0] != cb[0]:
        return None
    tri = surface.triangles[ca[0]]
    vec = vsub(tri.verts[cb[1]], tri.verts[ca[1]])
    return ChainRep(surface, [SaddleSeg(va, vb, vec, (), ca, vec)], False)


def _arc_chain(surface, cor, full, pinches, va, vb, c_start, lead, stop):
    pts = [pt for pt, _ in full]
    n = len(cor.crossings)
    starts = [lead - 1] + [p.portal_end for p in pinches]
    ends = [p.portal for p in pinches] + [stop]
    vclasses = [va] + [p.vclass for p in pinches] + [vb]
    corners = [c_start] + [p.out_corner for p in pinches]
    segs = []
    for k in range(len(pts) - 1):
        vec = vsub(pts[k + 1], pts[k])
        crossings = tuple(cor.crossings[j] for j in range(starts[k] + 1, min(ends[k], n)))
        s_frame, _ = cor.placements[starts[k] + 1]
        segs.append(
            SaddleSeg(vclasses[k], vclasses[k + 1], vec, crossings, corners[k], smul(s_frame, vec))
        )
    return ChainRep(surface, segs, False)


# ---------------------------------------------------------------------------
# cylinders: leaf tracing and maximal extension


@dataclass
class _Leaf:
    seq: tuple  # closed crossing sequence; seq[0][0] is the frame triangle
    tri: int
    point: tuple  # exact point on the leaf, frame of ``tri``
    direction: tuple  # holonomy translation of one period, same frame


LEAF_BUDGET = 4000


def _trace_leaf(surface: FlatSurface, tri, point, direction) -> _Leaf:
    """Trace a closed nonsingular straight loop from a point on it."""
    seq = []
    t, p, d = tri, tuple(point), tuple(direction)
    pt0 = tuple(point)
    for _ in range(LEAF_BUDGET):
        advanced = False
        for _, pin, pout, slot in trace_ray(surface, t, p, d):
            if seq and t == tri and _dirs_eq(d, tuple(direction), surface.tol) and _on_segment(pin, pout, pt0, surface.tol):
                cor = develop_corridor(surface, tuple(seq), closed=True)
                sign, T = cor.holonomy
                if sign != 1:
                    raise SurfaceError("leaf closed with a flip")
                return _Leaf(tuple(seq), seq[0][0], pt0, T)
            seq.append(slot)
            t2, sig, c = surface.transition(slot)
            p = smul(sig, vsub(pout, c))
            d = smul(sig, d)
            t = t2
            advanced = True
            break
        if not advanced:
            raise SurfaceError("leaf trace stalled")
    raise SurfaceError("leaf did not close")


def _max_cylinder_guarded(surface, tri, pt, dd, period=None):
    try:
        return _max_cylinder(surface, tri, pt, dd, period)
    except TraceHit as th:
        raise SurfaceError(f"cylinder leaf hit a vertex: {th}")


def _class_multiplicity(period, leaf_dir) -> int:
    """How many leaf periods the class holonomy spans (by length ratio)."""
    if period is None:
        return 1
    m = vlen(period) / vlen(leaf_dir)
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9:
        raise SurfaceError(f"class holonomy is not a leaf multiple: {m}")
    return mi


def _max_cylinder(surface: FlatSurface, tri, point, direction, period=None):
    """Maximal parallel family through an interior closed leaf."""
    leaf = _trace_leaf(surface, tri, point, direction)
    multiplicity = _class_multiplicity(period, leaf.direction)
    circ = vlen(leaf.direction)
    up_off, up_chain = _extend_side(surface, leaf, 1)
    down_off, down_chain = _extend_side(surface, leaf, -1)
    area = surface.area()
    total = up_off + down_off
    if up_chain is None or down_chain is None or _cmp(total, area) >= 0:
        height = float(area) / circ
        chain = up_chain if up_chain is not None else down_chain
        boundaries = (chain or [], chain or [])
    else:
        height = float(total) / circ
        boundaries = (up_chain, down_chain)
    return CylinderRep(
        surface,
        leaf.direction,
        circ * multiplicity,
        height,
        boundaries,
        leaf.seq,
        (leaf.tri, leaf.point),
        multiplicity=multiplicity,
    )


def _cmp(a, b):
    fa, fb = float(a), float(b)
    if isinstance(a, float) or isinstance(b, float):
        if abs(fa - fb) <= 1e-12 * max(1.0, abs(fa), abs(fb)):
            return 0
        return -1 if fa < fb else 1
    return (a > b) - (a < b)


def _extend_side(surface: FlatSurface, leaf: _Leaf, side: int):
    """Extend the parallel family on one side of the leaf.

    Offsets are cross(T, .) against the leaf line, so a full wrap of the
    surface corresponds to a total offset equal to the area.  Returns
    (total offset, boundary chain or None when the family wrapped).
    """
    area = surface.area()
    total = 0 * leaf.point[0]
    cur = leaf
    for _ in range(256):
        cor = develop_corridor(surface, cur.seq, closed=True)
        offs = []
        for k in range(len(cor.tris)):
            t = cor.tris[k]
            for j in range(3):
                q = cor.place(k, surface.triangles[t].verts[j])
                off = cross(cur.direction, vsub(q, cur.point))
                offs.append((off, (k, j)))
        cands = [(o, kj) for (o, kj) in offs if _sgn_off(o) == side]
        if not cands:
            return total, None
        cstar = min((_abs(o) for o, _ in cands), key=float)
        at = [(o, kj) for (o, kj) in cands if _abs(o) == cstar]
        classes = {
            surface.vertex_class_of((cor.tris[k], j)) for _, (k, j) in at
        }
        blocked = any(
            surface.cone_multiple(v) != 2 or surface.is_marked(v) for v in classes
        )
        if blocked or _cmp(total + cstar, area) >= 0:
            if _cmp(total + cstar, area) >= 0 and not blocked:
                return total + cstar, None
            _, (k, j) = at[0]
            chain = _boundary_line(surface, cor, cur, (k, j))
            return total + cstar, chain
        nxt = _displaced_leaf(surface, cor, cur, at[0], side)
        if nxt is None:
            _, (k, j) = at[0]
            chain = _boundary_line(surface, cor, cur, (k, j))
            return total + cstar, chain
        total = total + cstar
        cur = nxt
    raise SurfaceError("cylinder extension did not terminate")


def _sgn_off(x):
    f = float(x)
    return 1 if f > 0 else (-1 if f < 0 else 0)


def _abs(x):
    return x if float(x) >= 0 else -x


def _displaced_leaf(surface, cor, cur, blocker, side):
    """A closed leaf just past a regular-vertex line on the given side."""
    off, (k, j) = blocker
    s_k, _ = cor.placements[k]
    d_intr = smul(s_k, cur.direction)
    vclass = surface.vertex_class_of((cor.tris[k], j))
    traced = _trace_line(surface, vclass, (cor.tris[k], j), d_intr)
    if traced is None:
        return None  # blocked by a cone point elsewhere on the same line
    seqline, passages, (c0, d0) = traced
    patch_side = "cw" if side == 1 else "ccw"
    insert_at = {}
    for (vc, hc, ind, oc, od, pos) in passages:
        insert_at.setdefault(pos, []).append((vc, hc, ind, oc, od))
    body = []
    for pos in range(len(seqline) + 1):
        for vc, hc, ind, oc, od in insert_at.get(pos, ()):
            p = _Pinch(None, -1, -1, vc, in_corner=hc, in_dir=ind, out_corner=oc, out_dir=od)
            body.extend(_vertex_patch(surface, p, patch_side))
        if pos < len(seqline):
            body.append(seqline[pos])
    base = _Pinch(None, -1, -1, vclass, in_corner=c0, in_dir=vneg(d0), out_corner=c0, out_dir=d0)
    base_patch = list(_vertex_patch(surface, base, patch_side))
    for cand in (base_patch + body, body + base_patch):
        new_seq = reduce_sequence(surface, tuple(cand), True)
        if not new_seq:
            continue
        try:
            leaf = _leaf_inside(surface, new_seq)
        except SurfaceError:
            continue
        if leaf is not None:
            return leaf
    return None


def _trace_line(surface, vclass, corner_pref, d_intr):
    """Trace the full line through a regular vertex until it closes.

    Returns (crossings, passages, start germ), or None when the line runs
    into a cone or marked point.  passages record every regular vertex
    the line passes through, with germ data and crossing-list position.
    """
    corner, d = _sector_corner(surface, vclass, d_intr, corner_pref, "lead")
    start = (vclass, corner, d)
    start_germ = (corner, d)
    t, j = corner
    p = surface.triangles[t].verts[j]
    seq = []
    passages = []
    for _ in range(TRACE_BUDGET):
        try:
            advanced = False
            for _, pin, pout, slot in trace_ray(surface, t, p, d):
                seq.append(slot)
                t2, sig, c = surface.transition(slot)
                p = smul(sig, vsub(pout, c))
                d = smul(sig, d)
                t = t2
                advanced = True
                break
            if not advanced:
                raise SurfaceError("line trace stalled")
            continue
        except TraceHit as hit:
            hc = hit.corner
            hv = surface.vertex_class_of(hc)
            if surface.cone_multiple(hv) != 2 or surface.is_marked(hv):
                return None
            in_dir = vneg(d)
            out_corner, out_dir = _sector_corner(surface, hv, d, hc, "lead")
            if hv == start[0] and out_corner == start[1] and _dirs_eq(out_dir, start[2], surface.tol):
                return tuple(seq), passages, start_germ
            passages.append((hv, hc, in_dir, out_corner, out_dir, len(seq)))
            t, j = out_corner
            p = surface.triangles[t].verts[j]
            d = out_dir
    raise SurfaceError("line trace budget exceeded")


def _leaf_inside(surface, seq):
    """Locate a closed leaf strictly inside the corridor of ``seq``."""
    cor = develop_corridor(surface, seq, closed=True)
    sign, T = cor.holonomy
    if sign != 1:
        return None
    L0, R0 = cor.portal(0)
    x = _affine(L0, R0, 1, 2)
    offs = []
    for k in range(len(cor.tris)):
        t = cor.tris[k]
        for j in range(3):
            q = cor.place(k, surface.triangles[t].verts[j])
            offs.append(cross(T, vsub(q, x)))
    pos = [o for o in offs if _sgn_off(o) > 0]
    neg = [o for o in offs if _sgn_off(o) < 0]
    if not pos or not neg:
        return None
    hi = min((_abs(o) for o in pos), key=float)
    lo = -min((_abs(o) for o in neg), key=float)
    half = Fraction(1, 2) if not isinstance(hi, float) else 0.5
    mid = (lo + hi) * half
    n = (-T[1], T[0])
    s1, d1 = cor.placements[1]
    tri1 = cor.tris[1]
    for _ in range(50):
        lam = mid / dot(T, T)
        pt_dev = vadd(x, smul(lam, n))
        pt = smul(s1, vsub(pt_dev, d1))
        try:
            return _trace_leaf(surface, tri1, pt, smul(s1, T))
        except (SurfaceError, TraceHit):
            pass
        mid = (lo + mid) * half
    return None


def _point_in_triangle(tri, pt, tol) -> bool:
    for e in range(3):
        a = tri.verts[e]
        if cross_sign(tri.edges[e], vsub(pt, a), tol) <= 0:
            return False
    return True


def _boundary_line(surface, cor, cur, strip_corner):
    """Boundary chain: the parallel line through the blocking vertex."""
    k, j = strip_corner
    s_k, _ = cor.placements[k]
    d_intr = smul(s_k, cur.direction)
    vclass = surface.vertex_class_of((cor.tris[k], j))
    return _trace_boundary(surface, vclass, (cor.tris[k], j), d_intr)


def _trace_boundary(surface, vclass, corner_pref, d_intr):
    """Closed line through cone points, split into saddle connections."""
    corner, d = _sector_corner(surface, vclass, d_intr, corner_pref, "lead")
    start = (vclass, corner, d)
    t, j = corner
    p = surface.triangles[t].verts[j]
    dev_sign, dev_off = 1, (0 * d[0], 0 * d[1])
    seg_start_dev = (0 * d[0], 0 * d[1])
    seg_crossings = []
    seg_start_vc, seg_start_corner, seg_start_dir = vclass, corner, d
    segs = []
    pos_dev = seg_start_dev
    for _ in range(TRACE_BUDGET):
        try:
            advanced = False
            for _, pin, pout, slot in trace_ray(surface, t, p, d):
                pos_dev = vadd(smul(dev_sign, pout), dev_off)
                seg_crossings.append(slot)
                t2, sig, c = surface.transition(slot)
                # update placement: new frame -> dev
                dev_off = vadd(smul(dev_sign, c), dev_off)
                dev_sign *= sig
                p = smul(sig, vsub(pout, c))
                d = smul(sig, d)
                t = t2
                advanced = True
                break
            if not advanced:
                raise SurfaceError("boundary trace stalled")
            continue
        except TraceHit as hit:
            hc = hit.corner
            hv = surface.vertex_class_of(hc)
            hit_dev = vadd(smul(dev_sign, hit.point), dev_off)
            if surface.cone_multiple(hv) == 2 and not surface.is_marked(hv):
                out_corner, out_dir = _sector_corner(surface, hv, d, hc, "lead")
                t, j = out_corner
                p = surface.triangles[t].verts[j]
                d = out_dir
                continue
            segs.append(
                SaddleSeg(
                    seg_start_vc,
                    hv,
                    vsub(hit_dev, seg_start_dev),
                    tuple(seg_crossings),
                    seg_start_corner,
                    seg_start_dir,
                )
            )
            out_corner, out_dir = _sector_corner(surface, hv, d, hc, "lead")
            if hv == start[0] and out_corner == start[1] and _dirs_eq(out_dir, start[2], surface.tol):
                return segs
            seg_start_dev = hit_dev
            seg_crossings = []
            seg_start_vc, seg_start_corner, seg_start_dir = hv, out_corner, out_dir
            t, j = out_corner
            p = surface.triangles[t].verts[j]
            d = out_dir
    raise SurfaceError("boundary line did not close")


def _walk_point(surface, tri, pt, direction, steps=16):
    """Walk across gluings to the triangle containing pt (frame of tri)."""
    t, p, d = tri, pt, direction
    for _ in range(steps):
        tri_obj = surface.triangles[t]
        bad = None
        for e in range(3):
            if cross_sign(tri_obj.edges[e], vsub(p, tri_obj.verts[e]), surface.tol) < 0:
                bad = e
                break
        if bad is None:
            return t, p, d
        t2, sig, c = surface.transition((t, bad))
        p = smul(sig, vsub(p, c))
        d = smul(sig, d)
        t = t2
    return None


def _promote_boundary(surface, cor, all_p, ccw_side):
    """Chain with angle pi along one side: slide into the flat cylinder."""
    _, T = cor.holonomy
    pts = [p.point for p in all_p] + [vadd(all_p[0].point, T)]
    a, b = pts[0], pts[1]
    vec = vsub(b, a)
    n = len(cor.crossings)
    next_portal = all_p[1].portal if len(all_p) > 1 else n
    between = [j for j in range(all_p[0].portal_end + 1, next_portal)]
    if between:
        lpt, rpt = cor.portal(between[0])
        cut = _segment_line_point(a, b, lpt, rpt)
        if cut is not None:
            b = cut
    mid = _affine(a, b, 1, 2)
    k_tri = all_p[0].portal_end + 1
    s_k, d_k = cor.placements[k_tri]
    normal = (-vec[1], vec[0]) if ccw_side else (vec[1], -vec[0])
    eps = Fraction(1, 16) if surface.exact else 1.0 / 16
    for _ in range(70):
        pt_dev = vadd(mid, smul(eps, normal))
        pt = smul(s_k, vsub(pt_dev, d_k))
        located = _walk_point(surface, cor.tris[k_tri], pt, smul(s_k, vec))
        if located is not None:
            t2, p2, d2 = located
            try:
                return _max_cylinder(surface, t2, p2, d2, period=smul(s_k, T))
            except (SurfaceError, TraceHit):
                pass
        eps = eps / 2
    return None


def _segment_line_point(a, b, lpt, rpt):
    d = vsub(b, a)
    e = vsub(rpt, lpt)
    den = cross(d, e)
    if float(den) == 0:
        return None
    tpar = cross(vsub(lpt, a), e) / den
    return vadd(a, smul(tpar, d))


# ---------------------------------------------------------------------------
# torus shorthand


def torus_class(surface: FlatSurface, p: int, q: int) -> CurveClass:
    """The (p, q) class on a one-vertex square torus, by exact tracing."""
    if p == 0 and q == 0:
        raise TrivialCurveError("(0,0) is trivial")
    g = math.gcd(abs(p), abs(q))
    p0, q0 = p // g, q // g
    bases = [
        (Fraction(1, 3), Fraction(1, 7)),
        (Fraction(1, 5), Fraction(1, 11)),
        (Fraction(2, 7), Fraction(1, 13)),
        (Fraction(1, 4), Fraction(1, 17)),
        (Fraction(3, 8), Fraction(1, 19)),
    ]
    for base in bases:
        tri0 = None
        for t in range(len(surface.triangles)):
            if _point_in_triangle(surface.triangles[t], base, surface.tol):
                tri0 = t
                break
        if tri0 is None:
            continue
        try:
            seq = _trace_closed_from(surface, tri0, base, (Fraction(p0), Fraction(q0)))
        except TraceHit:
            continue
        return CurveClass("closed", tuple(seq) * g)
    raise SurfaceError("could not trace the torus class")


def _dirs_eq(a, b, tol=0.0):
    return pt_eq(a, b, tol)


def _trace_closed_from(surface, tri0, pt0, direction):
    seq = []
    t, p, d = tri0, tuple(pt0), tuple(direction)
    pt0 = tuple(pt0)
    for _ in range(TRACE_BUDGET):
        advanced = False
        for _, pin, pout, slot in trace_ray(surface, t, p, d):
            if (
                seq
                and t == tri0
                and _dirs_eq(d, tuple(direction), surface.tol)
                and _on_segment(pin, pout, pt0, surface.tol)
            ):
                return seq
            seq.append(slot)
            t2, sig, c = surface.transition(slot)
            p = smul(sig, vsub(pout, c))
            d = smul(sig, d)
            t = t2
            advanced = True
            break
        if not advanced:
            raise SurfaceError("trace stalled")
    raise SurfaceError("closed trace budget exceeded")


def _on_segment(a, b, q, tol=0.0):
    d = vsub(b, a)
    w = vsub(q, a)
    c = cross(d, w)
    if isinstance(c, float):
        # positional error scales with the segment, not with |w|
        scale = (abs(float(d[0])) + abs(float(d[1]))) * max(
            1.0, abs(float(q[0])), abs(float(q[1]))
        )
        if abs(c) > tol * max(scale, 1.0):
            return False
    elif c != 0:
        return False
    t = dot(w, d)
    dd = dot(d, d)
    if isinstance(t, float) or isinstance(dd, float):
        slack = tol * max(1.0, float(dd))
        return -slack <= float(t) <= float(dd) + slack
    return 0 <= t <= dd
