"""Geometric intersection numbers, the perturbation oracle, Dehn twists.

Tightened representatives are turned into exact piecewise-linear curves
(per-triangle fragments).  Transverse crossings are counted fragment
pair by fragment pair and deduplicated by global parameter pairs, so a
crossing on a shared edge is counted once.  Crossings at cone points
come in two kinds, both resolved by exact fan-angle linking: co-passages
of the two geodesics through a vertex, and divergence at the two ends of
a maximal shared saddle-connection run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .geodesics import (
    ChainRep,
    CurveClass,
    CylinderRep,
    _Pinch,
    _sector_corner,
    _vertex_patch,
    make_closed,
    reduce_sequence,
    tighten,
)
from .geom_kernel import (
    FlatSurface,
    Germ,
    SurfaceError,
    TraceHit,
    cross,
    cross_sign,
    develop_corridor,
    dot,
    fan_walk_ccw,
    pt_eq,
    smul,
    trace_ray,
    vadd,
    vneg,
    vsub,
)

__all__ = [
    "intersection_number",
    "intersection_oracle",
    "dehn_twist",
    "self_intersection",
    "is_simple",
]


# ---------------------------------------------------------------------------
# PL curves on the surface


@dataclass
class _Frag:
    tri: int
    p: tuple
    q: tuple
    after_slot: tuple = None  # slot crossed after this fragment, if any
    at_vertex: bool = False  # fragment ends at a chain vertex


@dataclass
class PLCurve:
    surface: FlatSurface
    frags: list
    closed: bool
    weight: float = 1.0
    # passages[k]: (vclass, in back-germ, out germ) at the start vertex of
    # segment k; None for the free end of an open chain
    passages: list = field(default_factory=list)

    def by_triangle(self):
        d = {}
        for i, f in enumerate(self.frags):
            d.setdefault(f.tri, []).append((i, f))
        return d


def _trace_segment(surface, seg):
    """Per-triangle pieces of one saddle connection, plus the arrival germ."""
    t, j = seg.start_corner
    p = surface.triangles[t].verts[j]
    d = seg.start_dir
    frags = []
    for _ in range(10000):
        try:
            advanced = False
            for _, pin, pout, slot in trace_ray(surface, t, p, d):
                frags.append(_Frag(t, pin, pout, after_slot=slot))
                t2, sig, c = surface.transition(slot)
                p = smul(sig, vsub(pout, c))
                d = smul(sig, d)
                t = t2
                advanced = True
                break
            if not advanced:
                raise SurfaceError("segment trace stalled")
        except TraceHit as hit:
            frags.append(_Frag(t, p, hit.point, at_vertex=True))
            return frags, (hit.corner, vneg(d))
    raise SurfaceError("segment trace budget exceeded")


def pl_of_chain(surface, rep: ChainRep) -> PLCurve:
    frags = []
    arrivals = []
    for seg in rep.segments:
        fr, arrival = _trace_segment(surface, seg)
        frags.extend(fr)
        arrivals.append(arrival)
    n = len(rep.segments)
    passages = []
    for k in range(n):
        if not rep.closed and k == 0:
            passages.append(None)
            continue
        in_corner, in_dir = arrivals[(k - 1) % n]
        seg = rep.segments[k]
        passages.append(
            (
                seg.start_vc,
                Germ(in_corner, in_dir),
                Germ(seg.start_corner, seg.start_dir),
            )
        )
    return PLCurve(surface, frags, rep.closed, rep.weight, passages)


def pl_of_cylinder(surface, rep: CylinderRep) -> PLCurve:
    tri, pt = rep.core_point
    frags = []
    t, p, d = tri, pt, rep.direction
    for _ in range(len(rep.core_seq)):
        advanced = False
        for _, pin, pout, slot in trace_ray(surface, t, p, d):
            frags.append(_Frag(t, pin, pout, after_slot=slot))
            t2, sig, c = surface.transition(slot)
            p = smul(sig, vsub(pout, c))
            d = smul(sig, d)
            t = t2
            advanced = True
            break
        if not advanced:
            raise SurfaceError("core trace stalled")
    if t != tri:
        raise SurfaceError("core trace did not return to its triangle")
    # closing piece from the re-entry point back to the start of the leaf
    if not pt_eq(p, pt, surface.tol):
        frags.append(_Frag(t, p, pt))
    return PLCurve(surface, frags, True, float(rep.multiplicity), [])


def pl_of(surface, rep) -> PLCurve:
    if rep.kind == "chain":
        if rep.degenerate_at is not None:
            raise SurfaceError("degenerate (zero-length) class in intersection")
        return pl_of_chain(surface, rep)
    return pl_of_cylinder(surface, rep)


# ---------------------------------------------------------------------------
# transverse crossings


def _pkey(value, exact):
    return value if exact else round(float(value), 9)


def transverse_count(A: PLCurve, B: PLCurve, same=False) -> int:
    """Transverse crossings, deduplicated by global parameter pairs.

    Crossings sitting at chain vertices are excluded; those are resolved
    by the vertex-event machinery.
    """
    surface = A.surface
    exact = surface.exact
    tol = surface.tol
    byb = B.by_triangle()
    seen = set()
    for i, fa in enumerate(A.frags):
        for j, fb in byb.get(fa.tri, ()):
            if same and i == j:
                continue
            d1 = vsub(fa.q, fa.p)
            d2 = vsub(fb.q, fb.p)
            if cross_sign(d1, d2, tol) == 0:
                continue
            den = cross(d1, d2)
            w = vsub(fb.p, fa.p)
            t1 = cross(w, d2) / den
            t2 = cross(w, d1) / den
            if not (_in01(t1, tol) and _in01(t2, tol)):
                continue
            ga = _global_param(A, i, t1, exact)
            gb = _global_param(B, j, t2, exact)
            if ga is None or gb is None:
                continue  # at a chain vertex
            key = (ga, gb) if not same else tuple(sorted((ga, gb)))
            seen.add(key)
    return len(seen)


def _in01(t, tol):
    if isinstance(t, float):
        return -tol <= t <= 1 + tol
    return 0 <= t <= 1


def _global_param(C: PLCurve, i, t, exact):
    """Global position (frag, param) of a crossing; None at chain vertices."""
    f = C.frags[i]
    tf = float(t)
    at_end = (t == 1) if exact else tf >= 1 - 1e-9
    at_start = (t == 0) if exact else tf <= 1e-9
    n = len(C.frags)
    if at_end:
        if f.at_vertex:
            return None
        return ((i + 1) % n, _pkey(0, exact))
    if at_start:
        prev = C.frags[(i - 1) % n]
        if prev.at_vertex and (i > 0 or C.closed):
            return None
        return (i, _pkey(0, exact))
    return (i, _pkey(t, exact))


# ---------------------------------------------------------------------------
# vertex events: co-passages and shared runs


def _seg_keys(surface, rep: ChainRep):
    """Forward/backward identity keys for each saddle connection."""
    exact = surface.exact
    fwd, rev = [], []
    for seg in rep.segments:
        _, (arr_corner, arr_dir) = _trace_segment(surface, seg)
        lead_in, din = _sector_corner(
            surface, seg.start_vc, seg.start_dir, seg.start_corner, "lead"
        )
        end_vc = surface.vertex_class_of(arr_corner)
        lead_out, dout = _sector_corner(surface, end_vc, arr_dir, arr_corner, "lead")
        ln = _pkey(dot(seg.vec, seg.vec), exact)
        fwd.append((seg.start_vc, lead_in, _norm_dir(din, exact), ln))
        rev.append((end_vc, lead_out, _norm_dir(dout, exact), ln))
    return fwd, rev


def _norm_dir(d, exact):
    s = abs(d[0]) + abs(d[1])
    x, y = d[0] / s, d[1] / s
    if exact:
        return (x, y)
    return (round(float(x), 9), round(float(y), 9))


def _fan_pos(surface, cut: Germ, g: Germ):
    ang = fan_walk_ccw(surface, cut, g)
    return (ang.halfturns, ang.radians)


def _germ_eq(surface, g1: Germ, g2: Germ) -> bool:
    if tuple(g1.corner) != tuple(g2.corner):
        return False
    return (
        cross_sign(g1.direction, g2.direction, surface.tol) == 0
        and float(dot(g1.direction, g2.direction)) > 0
    )


def _canonical_germ(surface, g: Germ) -> Germ:
    vclass = surface.vertex_class_of(g.corner)
    corner, d = _sector_corner(surface, vclass, g.direction, g.corner, "lead")
    return Germ(corner, d)


def vertex_events(surface, repA: ChainRep, repB: ChainRep, same=False) -> int:
    """Essential intersections at vertices: co-passages and shared runs."""
    A = pl_of_chain(surface, repA)
    B = A if same else pl_of_chain(surface, repB)
    pa, pb = A.passages, B.passages
    fwdA, revA = _seg_keys(surface, repA)
    fwdB, revB = (fwdA, revA) if same else _seg_keys(surface, repB)
    nA, nB = len(repA.segments), len(repB.segments)
    total = 0
    matches = set()
    for i in range(nA):
        for j in range(nB):
            if fwdA[i] == fwdB[j] and not (same and i == j):
                matches.add((i, j, 1))
            if fwdA[i] == revB[j]:
                matches.add((i, j, -1))
    runs = _maximal_runs(matches, nA, nB, repA.closed, repB.closed)
    seen_runs = set()
    for run in runs:
        i0, j0, o, ln = run
        if ln >= max(nA, nB):
            continue  # full overlap: parallel classes never cross
        key = _run_key(run, nA, nB, same)
        if key in seen_runs:
            continue
        seen_runs.add(key)
        total += _run_crossing(surface, repA, repB, run, pa, pb)
    # co-passages not already on a shared segment
    for k, entry_a in enumerate(pa):
        if entry_a is None:
            continue
        va, ia, oa = entry_a
        ca_i = _canonical_germ(surface, ia)
        ca_o = _canonical_germ(surface, oa)
        for l, entry_b in enumerate(pb):
            if entry_b is None or (same and l <= k):
                continue
            vb, ib, ob = entry_b
            if va != vb:
                continue
            cb_i = _canonical_germ(surface, ib)
            cb_o = _canonical_germ(surface, ob)
            shared = any(
                _germ_eq(surface, x, y)
                for x in (ca_i, ca_o)
                for y in (cb_i, cb_o)
            )
            if shared:
                continue  # belongs to a run event
            total += _passage_linked(surface, ia, oa, ib, ob)
    return total


def _maximal_runs(matches, nA, nB, closedA, closedB):
    runs = set()
    for (i, j, o) in sorted(matches):
        bi, bj = i, j
        steps = 0
        while steps <= nA + nB:
            pi = (bi - 1) % nA if closedA else bi - 1
            pj = (bj - o) % nB if closedB else bj - o
            if pi < 0 or pj < 0 or pj >= nB or (pi, pj, o) not in matches:
                break
            if (pi, pj) == (i, j):
                break  # wrapped fully around
            bi, bj = pi, pj
            steps += 1
        fi, fj = bi, bj
        ln = 1
        while ln <= nA + nB:
            qi = (fi + 1) % nA if closedA else fi + 1
            qj = (fj + o) % nB if closedB else fj + o
            if qi >= nA or qj < 0 or qj >= nB or (qi, qj, o) not in matches:
                break
            if (qi, qj) == (bi, bj):
                break
            fi, fj = qi, qj
            ln += 1
        runs.add((bi, bj, o, ln))
    return runs


def _run_key(run, nA, nB, same):
    i0, j0, o, ln = run
    if not same:
        return (i0, j0, o, ln)
    endA = (i0 + ln - 1) % nA
    endB = (j0 + o * (ln - 1)) % nB
    if o == 1:
        return (min((i0, j0), (j0, i0)), o, ln)
    return (min((i0, j0), (endB, endA)), o, ln)


def _run_crossing(surface, repA, repB, run, pa, pb) -> int:
    """Linking of the four divergence germs at the ends of a shared run."""
    i0, j0, o, ln = run
    nA, nB = len(repA.segments), len(repB.segments)
    iE = (i0 + ln - 1) % nA
    jE = (j0 + o * (ln - 1)) % nB
    if not repA.closed and (i0 == 0 or iE == nA - 1):
        return 0
    if not repB.closed:
        lowB, hiB = (j0, jE) if o == 1 else (jE, j0)
        if lowB == 0 or hiB == nB - 1:
            return 0
    segA0 = repA.segments[i0]
    r_s = Germ(segA0.start_corner, segA0.start_dir)
    a_pre = pa[i0][1]
    b_pre = pb[j0][1] if o == 1 else pb[(j0 + 1) % nB][2]
    arr = _arrival_germ(surface, repA, iE)
    r_e = Germ(*arr)
    a_post = pa[(iE + 1) % nA][2]
    b_post = pb[(jE + 1) % nB][2] if o == 1 else pb[jE][1]
    ts_a = _fan_pos(surface, r_s, a_pre)
    ts_b = _fan_pos(surface, r_s, b_pre)
    te_a = _fan_pos(surface, r_e, a_post)
    te_b = _fan_pos(surface, r_e, b_post)
    return 1 if (ts_b > ts_a) == (te_b > te_a) else 0


def _arrival_germ(surface, rep, i):
    _, arrival = _trace_segment(surface, rep.segments[i])
    return arrival


def _passage_linked(surface, ia, oa, ib, ob) -> int:
    cut = ia
    t_ao = _fan_pos(surface, cut, oa)
    t_bi = _fan_pos(surface, cut, ib)
    t_bo = _fan_pos(surface, cut, ob)
    return 1 if (t_bi < t_ao) != (t_bo < t_ao) else 0


# ---------------------------------------------------------------------------
# public operations


def intersection_number(surface: FlatSurface, a: CurveClass, b: CurveClass) -> int:
    """Geometric intersection number of two homotopy classes."""
    ra = tighten(surface, a)
    rb = tighten(surface, b)
    if ra.kind == "cylinder" and rb.kind == "cylinder":
        if cross_sign(ra.direction, rb.direction, surface.tol) == 0:
            return 0
    A = pl_of(surface, ra)
    B = pl_of(surface, rb)
    count = transverse_count(A, B) * A.weight * B.weight
    if ra.kind == "chain" and rb.kind == "chain":
        count += vertex_events(surface, ra, rb) * A.weight * B.weight
    n = int(round(count))
    if abs(count - n) > 1e-9:
        raise SurfaceError(f"non-integer intersection count {count}")
    return n
def self_intersection(surface: FlatSurface, a: CurveClass) -> int:
    ra = tighten(surface, a)
    if ra.kind == "cylinder":
        return 0
    A = pl_of(surface, ra)
    count = transverse_count(A, A, same=True) * A.weight * A.weight
    count += vertex_events(surface, ra, ra, same=True) * A.weight * A.weight
    return int(round(count))


def is_simple(surface: FlatSurface, a: CurveClass) -> bool:
    return self_intersection(surface, a) == 0


# ---------------------------------------------------------------------------
# pushed-off representatives and the perturbation oracle


def pushed_pl(surface, rep: ChainRep, eps) -> PLCurve:
    """Exact PL copy of a closed chain pushed off to its left side.

    Fan crossings near each chain vertex sit at parameter eps along the
    portal from the vertex; segment crossings sit at the chain's own
    crossing point nudged eps to the left.
    """
    if not rep.closed:
        raise SurfaceError("pushed copies only for closed chains")
    pl = pl_of_chain(surface, rep)
    n = len(rep.segments)
    items = []  # (slot, kind, seg index)
    seg_pos = []  # corridor position where segment k starts
    for k, seg in enumerate(rep.segments):
        seg_pos.append(len(items))
        for slot in seg.crossings:
            items.append((slot, "seg", k))
        vclass, in_g, out_g = pl.passages[(k + 1) % n]
        p = _Pinch(
            None,
            -1,
            -1,
            vclass,
            in_corner=in_g.corner,
            in_dir=in_g.direction,
            out_corner=out_g.corner,
            out_dir=out_g.direction,
        )
        for slot in _vertex_patch(surface, p, "cw"):
            items.append((slot, "fan", k))
    seq = tuple(s for s, _, _ in items)
    cor = develop_corridor(surface, seq, closed=True)
    sign, T = cor.holonomy
    if sign != 1:
        raise SurfaceError("pushed corridor has a flip")
    # chain vertex positions: segment k starts at corridor position seg_pos[k]
    vdev = []
    for k, seg in enumerate(rep.segments):
        t, j = seg.start_corner
        if cor.tris[seg_pos[k]] != t:
            raise SurfaceError("pushed corridor misaligned with its chain")
        vdev.append(cor.place(seg_pos[k], surface.triangles[t].verts[j]))
    vdev.append(vadd(vdev[0], T))
    pts = []
    for idx, (slot, kind, k) in enumerate(items):
        lpt, rpt = cor.portal(idx)
        if kind == "fan":
            pts.append(vadd(rpt, smul(eps, vsub(lpt, rpt))))
        else:
            a, b = vdev[k], vdev[k + 1]
            x = _line_cross(a, b, lpt, rpt)
            if x is None:
                raise SurfaceError("pushed segment misses its portal")
            w = vsub(lpt, rpt)
            if float(cross(vsub(b, a), w)) < 0:
                w = vneg(w)
            scale = abs(w[0]) + abs(w[1])
            pts.append(vadd(x, smul(eps, smul(1 / scale, w))))
    m = len(items)
    frags = []
    for idx in range(m):
        a = pts[idx]
        b = pts[idx + 1] if idx + 1 < m else vadd(pts[0], T)
        s_k, d_k = cor.placements[idx + 1]
        pa = smul(s_k, vsub(a, d_k))
        pb = smul(s_k, vsub(b, d_k))
        frags.append(_Frag(cor.tris[idx + 1], pa, pb, after_slot=seq[(idx + 1) % m]))
    return PLCurve(surface, frags, True, rep.weight, [])


def _line_cross(a, b, lpt, rpt):
    d = vsub(b, a)
    e = vsub(rpt, lpt)
    den = cross(d, e)
    if float(den) == 0:
        return None
    tpar = cross(vsub(lpt, a), e) / den
    return vadd(a, smul(tpar, d))


def intersection_oracle(
    surface: FlatSurface, a: CurveClass, b: CurveClass, refinements: int = 6
) -> int:
    """Crossing count against a perturbed copy of b, accepted only when two
    successive perturbation scales agree."""
    ra = tighten(surface, a)
    rb = tighten(surface, b)
    A = pl_of(surface, ra)
    eps = Fraction(1, 64) if surface.exact else 1.0 / 64
    prev = None
    for _ in range(refinements):
        if rb.kind == "cylinder":
            Bp = pl_of_cylinder(surface, rb)
            cnt = transverse_count(A, Bp) * A.weight * Bp.weight
            n = int(round(cnt))
            if abs(cnt - n) > 1e-9:
                raise SurfaceError("unstable count")
            return n
        Bp = pushed_pl(surface, rb, eps)
        val = transverse_count(A, Bp) * A.weight * Bp.weight
        if prev is not None and val == prev:
            n = int(round(val))
            if abs(val - n) > 1e-9:
                raise SurfaceError("unstable count")
            return n
        prev = val
        eps = eps / 2
    raise SurfaceError("unstable count")


# ---------------------------------------------------------------------------
# Dehn twists


def dehn_twist(
    surface: FlatSurface, alpha: CurveClass, c: CurveClass, power: int = 1
) -> CurveClass:
    """Combinatorial representative of the twisted class T_alpha^power(c),
    built by splicing a copy of alpha at every essential crossing."""
    if power == 0:
        return c
    if not is_simple(surface, alpha):
        raise SurfaceError("twisting curve is not simple")
    ra = tighten(surface, alpha)
    rc = tighten(surface, c)
    eps = Fraction(1, 64) if surface.exact else 1.0 / 64
    expected = intersection_number(surface, alpha, c)
    for _ in range(10):
        try:
            Ap = _generic_pl(surface, ra, eps)
            Cp = _generic_pl(surface, rc, eps / 3)
            return _splice_twist(surface, Cp, Ap, power, expected)
        except _Degenerate:
            eps = eps / 2
    raise SurfaceError("could not find a generic perturbation for the twist")


class _Degenerate(Exception):
    pass


def _generic_pl(surface, rep, eps):
    """PL copy with multiplicity laid out as actual repeated fragments."""
    if rep.kind == "cylinder":
        base = pl_of_cylinder(surface, rep)
        frags = list(base.frags) * rep.multiplicity
        return PLCurve(surface, frags, True, 1.0, [])
    if rep.halved:
        raise SurfaceError("twisting through flip-holonomy classes is unsupported")
    return pushed_pl(surface, rep, eps)


def _reverse_pl(surface, A: PLCurve) -> PLCurve:
    n = len(A.frags)
    frags = []
    for k in range(n):
        src = A.frags[n - 1 - k]
        prev = A.frags[(n - 2 - k) % n]
        slot = surface.partner[prev.after_slot] if prev.after_slot else None
        frags.append(_Frag(src.tri, src.q, src.p, after_slot=slot))
    return PLCurve(surface, frags, A.closed, A.weight, [])


def _canon_event(n, i, t, exact):
    f = float(t)
    if (t == 1) if exact else f >= 1 - 1e-11:
        return ((i + 1) % n, 0 if exact else 0.0)
    if (t == 0) if exact else f <= 1e-11:
        return (i, 0 if exact else 0.0)
    return (i, t if exact else round(f, 11))


def _splice_twist(surface, C: PLCurve, A: PLCurve, power: int, expected: int):
    if power < 0:
        A = _reverse_pl(surface, A)
    tol = surface.tol
    exact = surface.exact
    bya = A.by_triangle()
    nC, nA = len(C.frags), len(A.frags)
    events = {}
    for i, fc in enumerate(C.frags):
        for j, fa in bya.get(fc.tri, ()):
            d1 = vsub(fc.q, fc.p)
            d2 = vsub(fa.q, fa.p)
            if cross_sign(d1, d2, tol) == 0:
                continue
            den = cross(d1, d2)
            w = vsub(fa.p, fc.p)
            t1 = cross(w, d2) / den
            t2 = cross(w, d1) / den
            if not (_in01(t1, tol) and _in01(t2, tol)):
                continue
            key = (_canon_event(nC, i, t1, exact), _canon_event(nA, j, t2, exact))
            events.setdefault(key, (i, t1, j))
    if len(events) != expected:
        # perturbed copies not in minimal position; caller shrinks eps
        raise _Degenerate()
    a_cycle = [f.after_slot for f in A.frags]
    by_frag = {}
    for (i, t1, j) in events.values():
        by_frag.setdefault(i, []).append((float(t1), j))
    seq = []
    for i, fc in enumerate(C.frags):
        for _, j in sorted(by_frag.get(i, ())):
            rot = a_cycle[j:] + a_cycle[:j]
            for _ in range(abs(power)):
                seq.extend(s for s in rot if s is not None)
        if fc.after_slot is not None:
            seq.append(fc.after_slot)
    seq = reduce_sequence(surface, tuple(seq), True)
    if not seq:
        raise SurfaceError("twist produced a trivial sequence")
    return make_closed(surface, seq)
