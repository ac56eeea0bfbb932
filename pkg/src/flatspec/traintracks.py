"""Train tracks: switch conditions, carried curves, magnetic verification.

A track is a branched 1-complex: branches with two ends each, every end
assigned to a switch with an incoming/outgoing tag.  Weight vectors of
carried curves satisfy the switch conditions (incoming sum == outgoing
sum); admissible length perturbations live in the row space of the
switch matrix, intersected with any extra linear constraints, and are
therefore exactly orthogonal to every weight vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .geodesics import SaddleSeg, _sector_corner, tighten
from .geom_kernel import FlatSurface, Germ, SurfaceError, fan_walk_ccw, vneg

__all__ = [
    "TrainTrack",
    "switch_matrix",
    "weight_space_basis",
    "carrying_weights",
    "carried_length",
    "check_magnetic",
    "admissible_perturbations",
    "rref",
    "nullspace",
]


# ---------------------------------------------------------------------------
# exact linear algebra over Q


def rref(rows):
    """Reduced row echelon form; returns (rref rows, pivot columns)."""
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows, ncols=None):
    """Basis of the rational null space of a matrix given by rows."""
    if ncols is None:
        if not rows:
            return []
        ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -red[r][f]
        basis.append(v)
    return basis


def rank(rows):
    red, pivots = rref(rows)
    return len(pivots)


# ---------------------------------------------------------------------------
# tracks


@dataclass
class TrainTrack:
    """Branches, switches, end assignments, lengths, optional embedding."""

    branches: tuple  # branch names
    switches: tuple  # switch names
    ends: dict  # branch -> ((switch, tag), (switch, tag)); tag "in"|"out"
    lengths: dict = field(default_factory=dict)  # branch -> exact or float
    surface: FlatSurface = None
    embedding: dict = field(default_factory=dict)  # branch -> [SaddleSeg]
    switch_vertex: dict = field(default_factory=dict)  # switch -> vclass

    def __post_init__(self):
        for b in self.branches:
            if b not in self.ends or len(self.ends[b]) != 2:
                raise SurfaceError(f"branch {b} needs exactly two ends")
        for sw in self.switches:
            tags = [
                tag
                for b in self.branches
                for (s, tag) in self.ends[b]
                if s == sw
            ]
            if "in" not in tags or "out" not in tags:
                raise SurfaceError(f"switch {sw} lacks an incoming or outgoing end")

    def branch_index(self, b):
        return self.branches.index(b)

    def length_vector(self):
        return [self.lengths[b] for b in self.branches]

    def to_dict(self):
        return {
            "branches": list(self.branches),
            "switches": [
                {
                    "name": sw,
                    "in": [
                        [b, k]
                        for b in self.branches
                        for k, (s, tag) in enumerate(self.ends[b])
                        if s == sw and tag == "in"
                    ],
                    "out": [
                        [b, k]
                        for b in self.branches
                        for k, (s, tag) in enumerate(self.ends[b])
                        if s == sw and tag == "out"
                    ],
                }
                for sw in self.switches
            ],
            "lengths": [
                _rat_str(self.lengths.get(b)) for b in self.branches
            ],
        }


def _rat_str(x):
    if x is None:
        return None
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def switch_matrix(track: TrainTrack):
    """Integer matrix (switches x branches): +1 per incoming end, -1 per
    outgoing end of the branch at that switch."""
    rows = []
    for sw in track.switches:
        row = []
        for b in track.branches:
            entry = 0
            for (s, tag) in track.ends[b]:
                if s == sw:
                    entry += 1 if tag == "in" else -1
            row.append(entry)
        rows.append(row)
    return rows


def weight_space_basis(track: TrainTrack):
    """Rational basis of the switch-condition solution space."""
    return nullspace(switch_matrix(track), len(track.branches))


def carried_length(track: TrainTrack, weights):
    """Dot product of a weight vector with the branch length vector."""
    vals = []
    for b, w in zip(track.branches, weights):
        if float(w) < 0:
            raise SurfaceError("negative branch weight")
        if b not in track.lengths:
            raise SurfaceError(f"branch {b} has no length")
        vals.append(w * track.lengths[b])
    return float(sum(vals))


def admissible_perturbations(track: TrainTrack, constraints=()):
    """Basis of (row space of the switch matrix) meet (constraint kernel).

    Constraints are rational vectors c with <c, d> == 0 required for every
    admissible direction d.  Every returned direction is exactly
    orthogonal to every weight vector.
    """
    S = [[Fraction(x) for x in row] for row in switch_matrix(track)]
    nb = len(track.branches)
    cons = [[Fraction(x) for x in c] for c in constraints]
    for c in cons:
        if len(c) != nb:
            raise SurfaceError("constraint length mismatch")
    # directions d = S^T y; constraints give (C S^T) y = 0
    m = []
    for c in cons:
        m.append([sum(c[j] * S[i][j] for j in range(nb)) for i in range(len(S))])
    ys = nullspace(m, len(S)) if m else [
        [Fraction(1) if i == k else Fraction(0) for i in range(len(S))]
        for k in range(len(S))
    ]
    dirs = []
    for y in ys:
        d = [sum(y[i] * S[i][j] for i in range(len(S))) for j in range(nb)]
        dirs.append(d)
    # keep an independent subset
    red, pivots = rref(dirs)
    if not red:
        return []
    out = [row for row in red]
    return out


# ---------------------------------------------------------------------------
# carrying


def _branch_step_keys(surface, segs):
    """Canonical germ keys identifying a saddle-connection path."""
    keys = []
    for seg in segs:
        corner, d = _sector_corner(surface, seg.start_vc, seg.start_dir, seg.start_corner, "lead")
        nd = _norm(d, surface.exact)
        from .geom_kernel import dot

        keys.append((seg.start_vc, corner, nd, _len_key(seg, surface.exact)))
    return tuple(keys)


def _len_key(seg, exact):
    from .geom_kernel import dot

    v = dot(seg.vec, seg.vec)
    return v if exact else round(float(v), 9)


def _norm(d, exact):
    s = abs(d[0]) + abs(d[1])
    x, y = d[0] / s, d[1] / s
    return (x, y) if exact else (round(float(x), 9), round(float(y), 9))


def _reversed_segs(surface, segs):
    """The same path traversed backwards, as synthetic saddle segments."""
    from .intersections import _trace_segment

    out = []
    for seg in reversed(segs):
        _, (arr_corner, arr_dir) = _trace_segment(surface, seg)
        end_vc = surface.vertex_class_of(arr_corner)
        out.append(
            SaddleSeg(end_vc, seg.start_vc, vneg(seg.vec), (), arr_corner, arr_dir)
        )
    return out


def carrying_weights(track: TrainTrack, curve):
    """Traversal counts per branch when the curve is carried; else None.

    Requires a magnetic embedding: the geodesic representative of a
    carried curve is a concatenation of full branch paths with legal
    (in-to-out) transitions at the switches.
    """
    surface = track.surface
    if surface is None or not track.embedding:
        raise SurfaceError("track has no embedding")
    rep = tighten(surface, curve)
    if rep.kind != "chain" or not rep.closed or rep.halved:
        return None
    # index branch paths by the key of their first step, both directions
    lookup = {}
    for b in track.branches:
        segs = track.embedding[b]
        fkeys = _branch_step_keys(surface, segs)
        rkeys = _branch_step_keys(surface, _reversed_segs(surface, segs))
        lookup.setdefault(fkeys[0], []).append((b, 0, fkeys))
        lookup.setdefault(rkeys[0], []).append((b, 1, rkeys))
    chain_keys = _branch_step_keys(surface, rep.segments)
    n = len(chain_keys)
    pos = 0
    traversals = []
    counts = {b: 0 for b in track.branches}
    guard = 0
    while pos < n:
        guard += 1
        if guard > n + 2:
            return None
        key = chain_keys[pos]
        hit = None
        for (b, endk, keys) in lookup.get(key, ()):
            ln = len(keys)
            if all(chain_keys[(pos + i) % n] == keys[i] for i in range(ln)):
                hit = (b, endk, ln)
                break
        if hit is None:
            return None
        b, endk, ln = hit
        traversals.append((b, endk))
        counts[b] += 1
        pos += ln
    if pos != n or not traversals:
        return None
    # legality at each switch: consecutive traversals must enter and leave
    # through ends with different tags
    for k in range(len(traversals)):
        b1, e1 = traversals[k]
        b2, e2 = traversals[(k + 1) % len(traversals)]
        arrive = track.ends[b1][1 - e1]  # the end reached at the switch
        depart = track.ends[b2][e2]
        if arrive[0] != depart[0]:
            return None
        if arrive[1] == depart[1]:
            return None  # illegal turn: same side of the switch
    return [counts[b] for b in track.branches]


# ---------------------------------------------------------------------------
# magnetic verification


def _end_germ(surface, track, b, endk):
    """Germ of branch b's end ``endk`` pointing away from its switch."""
    segs = track.embedding[b]
    if endk == 0:
        seg = segs[0]
        return Germ(seg.start_corner, seg.start_dir)
    from .intersections import _trace_segment

    _, (arr_corner, arr_dir) = _trace_segment(surface, segs[-1])
    return Germ(arr_corner, arr_dir)


def check_magnetic(surface: FlatSurface, track: TrainTrack, tol: float = 1e-9):
    """True when every legal switch turn subtends at least pi on both sides.

    Returns (verdict, witnesses); witnesses list the offending switch and
    branch-end pair with the measured angles.
    """
    if track.surface is not surface or not track.embedding:
        raise SurfaceError("track is not embedded on this surface")
    for b in track.branches:
        segs = track.embedding[b]
        if not segs:
            raise SurfaceError(f"branch {b} has an empty embedding")
        for k in range(len(segs) - 1):
            ends_ok = _interior_straightish(surface, track, b, k, tol)
            if not ends_ok:
                return False, [("branch interior", b, k)]
    witnesses = []
    for sw in track.switches:
        ins = []
        outs = []
        for b in track.branches:
            for endk, (s, tag) in enumerate(track.ends[b]):
                if s != sw:
                    continue
                (ins if tag == "in" else outs).append((b, endk))
        for (bi, ei) in ins:
            for (bo, eo) in outs:
                g_in = _end_germ(surface, track, bi, ei)
                g_out = _end_germ(surface, track, bo, eo)
                a1 = fan_walk_ccw(surface, g_in, g_out)
                a2 = fan_walk_ccw(surface, g_out, g_in)
                ok1 = a1.at_least_pi() or a1.radians >= math.pi - tol
                ok2 = a2.at_least_pi() or a2.radians >= math.pi - tol
                if not (ok1 and ok2):
                    witnesses.append(
                        (sw, (bi, ei), (bo, eo), a1.radians, a2.radians)
                    )
    return (not witnesses), witnesses


def _interior_straightish(surface, track, b, k, tol):
    """Angle condition at an interior junction of a branch path."""
    from .intersections import _trace_segment

    segs = track.embedding[b]
    _, (arr_corner, arr_dir) = _trace_segment(surface, segs[k])
    nxt = segs[k + 1]
    a1 = fan_walk_ccw(surface, Germ(arr_corner, arr_dir), Germ(nxt.start_corner, nxt.start_dir))
    a2 = fan_walk_ccw(surface, Germ(nxt.start_corner, nxt.start_dir), Germ(arr_corner, arr_dir))
    ok1 = a1.at_least_pi() or a1.radians >= math.pi - tol
    ok2 = a2.at_least_pi() or a2.radians >= math.pi - tol
    return ok1 and ok2
