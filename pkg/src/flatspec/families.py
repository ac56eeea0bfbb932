"""Block surfaces, iso-length-spectral deformations, degenerations.

The genus-g assembly glues g-1 copies of a genus-one block made of two
Euclidean cylinders.  Each block carries ten track branches (four gluing
circle halves, two core arcs, four diagonals) meeting at four switches of
cone angle 3*pi, and a two-parameter family of deformations that moves
the branch lengths inside the admissible space, so carried curves keep
their lengths while the cylinders' circumferences change.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .geodesics import (
    ChainRep,
    CurveClass,
    SaddleSeg,
    _Pinch,
    _sector_corner,
    _vertex_patch,
    flat_length,
    make_arc,
    make_closed,
    reduce_sequence,
    tighten,
)
from .geom_kernel import (
    FlatSurface,
    SurfaceError,
    Triangle,
    smul,
    vadd,
    validate_surface,
    vneg,
    vsub,
)
from .surfaces import square_torus
from .traintracks import TrainTrack

__all__ = [
    "BlockSpec",
    "AssembledFamily",
    "MixedStructure",
    "build_block",
    "assemble_closed",
    "deform",
    "verify_isospectral",
    "carried_panel",
    "torus_from_three_lengths",
    "two_tori_with_cylinder",
    "degeneration_family",
    "mixed_pairing",
    "mixed_self_pairing",
    "DELTA_CONSTRAINTS",
]

BRANCH_ORDER = ("A1", "A2", "B1", "B2", "al", "alp", "alpp", "be", "bep", "bepp")

# circumference constraints of the two cylinders: A1 + al = B1 + be and
# A2 + al = B2 + be, as vectors over BRANCH_ORDER
DELTA_CONSTRAINTS = (
    (1, 0, -1, 0, 1, 0, 0, -1, 0, 0),
    (0, 1, 0, -1, 1, 0, 0, -1, 0, 0),
)


@dataclass(frozen=True)
class BlockSpec:
    kind: str  # "sigma102" | "sigma101"
    t: object
    eps: object = 0
    delta: object = 0

    def __post_init__(self):
        if self.kind not in ("sigma102", "sigma101"):
            raise SurfaceError(f"unknown block kind {self.kind!r}")
        if float(self.t) <= 0:
            raise SurfaceError("block scale must be positive")
        if abs(float(self.eps)) + abs(float(self.delta)) >= float(self.t) / 4:
            raise SurfaceError("degenerate block: |eps|+|delta| must stay below t/4")


def branch_lengths(t, eps, delta):
    """Branch lengths of one block at deformation parameters (eps, delta)."""
    r2t = math.sqrt(2) * float(t)
    return {
        "A1": t + eps - delta,
        "A2": t - eps + delta,
        "B1": t + eps - delta,
        "B2": t - eps + delta,
        "al": t + eps + delta,
        "be": t + eps + delta,
        "alp": r2t + 2 * float(eps),
        "alpp": r2t + 2 * float(eps),
        "bep": r2t + 2 * float(delta),
        "bepp": r2t + 2 * float(delta),
    }


def build_block(spec: BlockSpec):
    """Metric data of one building block, plus its combinatorial track.

    For the two-boundary genus-one block this returns the branch length
    assignment and the cylinder realization parameters; the block is
    turned into surface triangles by assemble_closed.
    """
    if spec.kind == "sigma101":
        return _build_block_101(spec)
    t, eps, delta = spec.t, spec.eps, spec.delta
    lens = branch_lengths(t, eps, delta)
    h1sq = (math.sqrt(2) * float(t) + 2 * float(eps)) ** 2 - float(t + eps) ** 2
    h2sq = (math.sqrt(2) * float(t) + 2 * float(delta)) ** 2 - float(t + delta) ** 2
    if h1sq <= 0 or h2sq <= 0:
        raise SurfaceError("degenerate block: cylinder height collapsed")
    data = {
        "kind": "sigma102",
        "lengths": lens,
        "L1": 2 * t + 2 * eps,
        "L2": 2 * t + 2 * delta,
        "shear1": delta,
        "shear2": eps,
        "h1": _maybe_exact_sqrt(h1sq, t, eps),
        "h2": _maybe_exact_sqrt(h2sq, t, delta),
        "area": None,
    }
    data["area"] = float(data["L1"]) * float(data["h1"]) + float(data["L2"]) * float(data["h2"])
    return data


def _maybe_exact_sqrt(valsq: float, t, par):
    # the height is rational exactly when the deformation vanishes
    if float(par) == 0 and isinstance(t, Fraction):
        return t
    return math.sqrt(valsq)


def _build_block_101(spec: BlockSpec):
    """Once-holed torus block: a parallelogram with a slit (appendix piece).

    Provided for completeness of the block catalogue; the closed-surface
    assembly only consumes the two-boundary block.
    """
    t = Fraction(spec.t) if not isinstance(spec.t, float) else spec.t
    # unit-shape parallelogram scaled by t, slit of length t/2 along the
    # negative-slope diagonal direction from the corner
    lens = {
        "al": t,
        "be": t,
        "ga": t,
        "sigma": t / 2,
    }
    return {"kind": "sigma101", "lengths": lens, "boundary": 2 * (t / 2)}


@dataclass
class AssembledFamily:
    genus: int
    t: object
    params: tuple  # ((eps_0, delta_0), ...)
    surface: FlatSurface
    track: TrainTrack
    switch_corners: dict  # (name, block) -> corner
    block_data: list

    @property
    def area(self):
        return self.surface.area()


def _scalarize(x, exact):
    if exact:
        return Fraction(x)
    return float(x)


def assemble_closed(genus: int, params=None) -> AssembledFamily:
    """Glue g-1 blocks end to end into the closed genus-g family member.

    t is fixed by 4*t^2*(g-1) == 1 so the unperturbed assembly has unit
    area; blocks are glued along their boundary circles with a quarter
    twist, making every singular point a cone point of angle 3*pi.
    """
    if genus < 2:
        raise SurfaceError("assembly needs genus at least 2")
    m = genus - 1
    if params is None:
        params = tuple((0, 0) for _ in range(m))
    params = tuple((p[0], p[1]) for p in params)
    if len(params) != m:
        raise SurfaceError(f"parameter vector must have {m} (eps, delta) pairs")
    root = math.isqrt(m)
    exact_t = root * root == m
    t = Fraction(1, 2 * root) if exact_t else 1.0 / (2 * math.sqrt(m))
    zero = all(float(e) == 0 and float(d) == 0 for (e, d) in params)
    exact = exact_t and zero and all(
        not isinstance(x, float) for p in params for x in p
    )
    conv = (lambda x: Fraction(x)) if exact else float
    t = conv(t)
    eps = [conv(p[0]) for p in params]
    delta = [conv(p[1]) for p in params]
    for i in range(m):
        BlockSpec("sigma102", t, eps[i], delta[i])  # bounds check
    e = [eps[i] - delta[i] for i in range(m)]
    half = Fraction(1, 2) if exact else 0.5

    def q_mid1(i):
        return t * half + (e[i] - e[(i + 1) % m]) * half

    def q_bot(i):
        return t * half + (e[i] + e[(i + 1) % m]) * half

    def q_mid2(i):
        return t * half + (e[(i + 1) % m] - e[i]) * half

    def q_top(i):
        return t * half - (e[i] + e[(i + 1) % m]) * half

    tris = []
    gl = []
    block_data = []
    sqrt2t = math.sqrt(2) * float(t)
    for i in range(m):
        la = t + eps[i] + delta[i]
        L1 = 2 * t + 2 * eps[i]
        L2 = 2 * t + 2 * delta[i]
        s1, s2 = delta[i], eps[i]
        if exact:
            h1 = t
            h2 = t
        else:
            h1 = math.sqrt((sqrt2t + 2 * float(eps[i])) ** 2 - float(t + eps[i]) ** 2)
            h2 = math.sqrt((sqrt2t + 2 * float(delta[i])) ** 2 - float(t + delta[i]) ** 2)
        ip = (i - 1) % m
        # cylinder C1
        B0 = (0 * t, 0 * t)
        B1p = (la, 0 * t)
        B2p = (la + q_mid1(i), 0 * t)
        B3 = (L1, 0 * t)
        T0 = (s1, h1)
        T1 = (s1 + la, h1)
        T2 = (s1 + la + q_bot(ip), h1)
        T3 = (s1 + L1, h1)
        tris.extend(_fan_triangles(B0, B1p, B2p, B3, T0, T1, T2, T3))
        # cylinder C2
        C0 = (0 * t, 0 * t)
        C1v = (la, 0 * t)
        C2v = (la + q_mid1(ip), 0 * t)
        C3 = (L2, 0 * t)
        U0 = (s2, h2)
        U1 = (s2 + la, h2)
        U2 = (s2 + la + q_top(i), h2)
        U3 = (s2 + L2, h2)
        tris.extend(_fan_triangles(C0, C1v, C2v, C3, U0, U1, U2, U3))
        block_data.append(
            {
                "lengths": branch_lengths(t, eps[i], delta[i]),
                "L1": L1,
                "L2": L2,
                "h1": h1,
                "h2": h2,
            }
        )
    for i in range(m):
        b = 12 * i
        b2 = 12 * ((i + 1) % m)
        gl += [
            # inside C1
            ((b + 0, 1), (b + 3, 2), None),
            ((b + 1, 0), (b + 4, 0), None),
            ((b + 1, 2), (b + 2, 0), None),
            ((b + 2, 2), (b + 3, 0), None),
            ((b + 4, 2), (b + 5, 0), None),
            ((b + 0, 2), (b + 5, 2), None),
            # inside C2
            ((b + 6, 1), (b + 9, 2), None),
            ((b + 7, 0), (b + 10, 0), None),
            ((b + 7, 2), (b + 8, 0), None),
            ((b + 8, 2), (b + 9, 0), None),
            ((b + 10, 2), (b + 11, 0), None),
            ((b + 6, 2), (b + 11, 2), None),
            # core arcs between the two cylinders
            ((b + 3, 1), (b + 6, 0), None),
            ((b + 0, 0), (b + 9, 1), None),
            # quarter-twisted gluing circle to the next block
            ((b + 4, 1), (b2 + 10, 1), None),
            ((b + 5, 1), (b2 + 2, 1), None),
            ((b + 7, 1), (b2 + 1, 1), None),
            ((b + 8, 1), (b2 + 11, 1), None),
        ]
    surface = FlatSurface(tris, gl)
    track, switch_corners = _build_track(surface, genus, block_data)
    return AssembledFamily(genus, t, params, surface, track, switch_corners, block_data)


def _fan_triangles(B0, B1p, B2p, B3, T0, T1, T2, T3):
    def tri(a, b, c):
        return Triangle(vsub(b, a), vsub(c, b), vsub(a, c))

    return [
        tri(B0, B1p, T0),
        tri(B1p, T3, T2),
        tri(B1p, T2, T1),
        tri(B1p, T1, T0),
        tri(T3, B1p, B2p),
        tri(T3, B2p, B3),
    ]


_EMBED = {
    "A1": (((2, 1, -1), (1, 1, -1))),
    "A2": (((11, 1, -1), (10, 1, -1))),
    "B1": (((4, 1, 1), (5, 1, 1))),
    "B2": (((7, 1, 1), (8, 1, 1))),
    "al": ((3, 1, 1),),
    "be": ((0, 0, 1),),
    "alp": ((0, 1, -1),),
    "alpp": ((1, 0, -1),),
    "bep": ((6, 1, 1),),
    "bepp": ((7, 0, 1),),
}

_ENDS = {
    # per block: branch -> ((switch, tag), (switch, tag))
    "A1": (("a1", "out"), ("a2", "in")),
    "A2": (("a2", "out"), ("a1", "in")),
    "B1": (("b1", "in"), ("b2", "out")),
    "B2": (("b2", "in"), ("b1", "out")),
    "al": (("a1", "in"), ("a2", "in")),
    "be": (("b2", "in"), ("b1", "in")),
    "alp": (("a2", "in"), ("b1", "in")),
    "alpp": (("a2", "in"), ("b1", "in")),
    "bep": (("a1", "in"), ("b2", "in")),
    "bepp": (("a1", "in"), ("b2", "in")),
}

_SWITCH_CORNER = {"a1": (3, 1), "a2": (3, 2), "b1": (0, 1), "b2": (0, 0)}


def _descriptor_segment(surface, tri, slot, orient):
    v = surface.triangles[tri].edges[slot]
    if orient == 1:
        corner = (tri, slot)
        d = v
        other = (tri, (slot + 1) % 3)
    else:
        corner = (tri, (slot + 1) % 3)
        d = vneg(v)
        other = (tri, slot)
    return SaddleSeg(
        surface.vertex_class_of(corner),
        surface.vertex_class_of(other),
        d,
        (),
        corner,
        d,
    )


def _build_track(surface, genus, block_data):
    m = genus - 1
    branches = []
    ends = {}
    lengths = {}
    embedding = {}
    switches = []
    switch_corners = {}
    for i in range(m):
        for sw in ("a1", "a2", "b1", "b2"):
            switches.append(f"{sw}[{i}]")
            t_loc, j = _SWITCH_CORNER[sw]
            corner = (12 * i + t_loc, j)
            switch_corners[f"{sw}[{i}]"] = corner
        for name in BRANCH_ORDER:
            bname = f"{name}[{i}]"
            branches.append(bname)
            (s0, t0), (s1, t1) = _ENDS[name]
            ends[bname] = ((f"{s0}[{i}]", t0), (f"{s1}[{i}]", t1))
            lengths[bname] = block_data[i]["lengths"][name]
            descs = _EMBED[name]
            embedding[bname] = [
                _descriptor_segment(surface, 12 * i + d[0], d[1], d[2]) for d in descs
            ]
    switch_vertex = {
        sw: surface.vertex_class_of(c) for sw, c in switch_corners.items()
    }
    track = TrainTrack(
        tuple(branches),
        tuple(switches),
        ends,
        lengths,
        surface,
        embedding,
        switch_vertex,
    )
    return track, switch_corners


def deform(fam: AssembledFamily, params) -> AssembledFamily:
    """Rebuild the family member at new (eps, delta) parameters.

    The branch length changes are admissible by construction (they lie in
    the row space of the switch matrix and respect the circumference
    constraints), so carried lengths stay fixed.
    """
    return assemble_closed(fam.genus, params)


def verify_isospectral(famA: AssembledFamily, famB: AssembledFamily, panel) -> dict:
    """Per-curve length deltas between two family members.

    Panel entries are (name, CurveClass, carried_flag); the report keeps
    the max delta over the carried sub-panel and the non-carried
    witnesses whose lengths moved.
    """
    if famA.genus != famB.genus:
        raise SurfaceError("families have different combinatorics")
    rows = []
    for name, curve, carried in panel:
        la = flat_length(famA.surface, curve)
        lb = flat_length(famB.surface, curve)
        rows.append(
            {"name": name, "carried": bool(carried), "length_a": la, "length_b": lb, "delta": abs(la - lb)}
        )
    carried_deltas = [r["delta"] for r in rows if r["carried"]]
    witness = [r for r in rows if not r["carried"] and r["delta"] > 1e-3]
    return {
        "rows": rows,
        "max_carried_delta": max(carried_deltas) if carried_deltas else 0.0,
        "witnesses": [r["name"] for r in witness],
        "isometry_suspected": all(r["delta"] < 1e-12 for r in rows),
    }


# ---------------------------------------------------------------------------
# carried circuits


def legal_circuits(track: TrainTrack, count: int, rng: random.Random, max_len=40):
    """Closed legal walks on the track: lists of (branch, start end)."""
    state_space = [(b, e) for b in track.branches for e in (0, 1)]
    circuits = []
    seen = set()
    guard = 0
    while len(circuits) < count and guard < 200 * count:
        guard += 1
        state = rng.choice(state_space)
        walk = []
        visited = {}
        for _ in range(max_len):
            visited[state] = len(walk)
            walk.append(state)
            b, e = state
            arrive = track.ends[b][1 - e]
            sw, tag = arrive
            options = []
            for b2 in track.branches:
                for e2 in (0, 1):
                    s2, t2 = track.ends[b2][e2]
                    if s2 == sw and t2 != tag:
                        options.append((b2, e2))
            if not options:
                break
            state = rng.choice(options)
            if state in visited:
                cyc = tuple(walk[visited[state] :])
                key = min(cyc[i:] + cyc[:i] for i in range(len(cyc)))
                if key not in seen:
                    seen.add(key)
                    circuits.append(cyc)
                break
    # pad with multiples of found circuits when the track is starved
    k = 2
    base = list(circuits)
    while len(circuits) < count and base:
        for cyc in base:
            if len(circuits) >= count:
                break
            key = min((cyc * k)[i:] + (cyc * k)[:i] for i in range(len(cyc) * k))
            if key not in seen:
                seen.add(key)
                circuits.append(cyc * k)
        k += 1
        if k > count:
            break
    return circuits[:count]


def circuit_weights(track: TrainTrack, circuit):
    counts = {b: 0 for b in track.branches}
    for b, _ in circuit:
        counts[b] += 1
    return [counts[b] for b in track.branches]


def circuit_class(track: TrainTrack, circuit) -> CurveClass:
    """Homotopy class of a carried circuit, via its pushed-off sequence."""
    from .intersections import _pushed_sequence
    from .traintracks import _reversed_segs

    surface = track.surface
    segs = []
    for b, e in circuit:
        path = track.embedding[b]
        segs.extend(path if e == 0 else _reversed_segs(surface, path))
    rep = ChainRep(surface, segs, True)
    seq = reduce_sequence(surface, _pushed_sequence(surface, rep), True)
    return make_closed(surface, seq)


def carried_panel(fam: AssembledFamily, count: int, seed: int = 0):
    """(name, CurveClass, weights) triples for a panel of carried circuits."""
    rng = random.Random(seed)
    circuits = legal_circuits(fam.track, count, rng)
    out = []
    for k, cyc in enumerate(circuits):
        out.append(
            (
                "circuit%02d:%s" % (k, "+".join(b for b, _ in cyc)),
                circuit_class(fam.track, cyc),
                circuit_weights(fam.track, cyc),
            )
        )
    return out


def cylinder_core_class(fam: AssembledFamily, block: int = 0) -> CurveClass:
    """Core class of cylinder C1 of one block (a non-carried witness)."""
    from .geodesics import _trace_leaf

    base = 12 * block
    tri = base + 0  # inside cylinder C1
    t0 = fam.surface.triangles[tri]
    # interior point of the first fan triangle, pushed toward its centroid
    cx = (t0.verts[0][0] + t0.verts[1][0] + t0.verts[2][0]) / 3
    cy = (t0.verts[0][1] + t0.verts[1][1] + t0.verts[2][1]) / 3
    one = Fraction(1) if fam.surface.exact else 1.0
    leaf = _trace_leaf(fam.surface, tri, (cx, cy), (one, 0 * one))
    return make_closed(fam.surface, leaf.seq)


# ---------------------------------------------------------------------------
# torus rigidity


def torus_from_three_lengths(classes, lengths, tol: float = 1e-9):
    """Unit-area flat torus from three primitive curve lengths.

    Solves l_i == |p_i + q_i*tau| / sqrt(y) for tau = x + iy in the upper
    half plane; each constraint is a horocycle, and three in general
    position meet in at most one point.  Returns tau or None.
    """
    cl = [tuple(map(int, c)) for c in classes]
    ls = [float(x) for x in lengths]
    if len(cl) < 3 or len(ls) != len(cl):
        raise SurfaceError("under-determined: need three classes with lengths")
    for i in range(len(cl)):
        for j in range(i + 1, len(cl)):
            (p, q), (r, s) = cl[i], cl[j]
            if p * s - q * r == 0:
                raise SurfaceError("under-determined: proportional classes")
    if any(l <= 0 for l in ls):
        raise SurfaceError("lengths must be positive")

    # constraint: q^2*(x^2+y^2) + 2*p*q*x - l^2*y + p^2 == 0
    def coeffs(c, l):
        p, q = c
        return (q * q, 2.0 * p * q, -l * l, float(p * p))

    candidates = []

    # normalize to x^2+y^2 + b x + c y + d = 0 when the class winds (q != 0)
    def normalized(a):
        A, B, C, D = a
        if A == 0:
            return None
        return (B / A, C / A, D / A)

    lines = []
    specials = []  # y = const constraints
    norms = []
    for k in range(3):
        nk = normalized(coeffs(cl[k], ls[k]))
        if nk is None:
            p, q = cl[k]
            specials.append(p * p / (ls[k] ** 2))
        else:
            norms.append(nk)
    if len(norms) >= 2:
        b1v, c1v, d1v = norms[0]
        b2v, c2v, d2v = norms[1]
        lines.append((b1v - b2v, c1v - c2v, d1v - d2v))
    for yconst in specials:
        lines.append((0.0, 1.0, -yconst))
    if len(norms) >= 1:
        b, c, d = norms[0]
        circle = (b, c, d)
    else:
        return None
    # intersect the first line with the circle x^2+y^2+bx+cy+d=0
    if not lines:
        return None
    (lb, lc, ld) = lines[0]
    if abs(lb) < 1e-14 and abs(lc) < 1e-14:
        return None
    sols = _line_circle(lb, lc, ld, *circle)
    for (x, y) in sols:
        if y <= 0:
            continue
        ok = True
        for (p, q), l in zip(cl, ls):
            val = math.hypot(p + q * x, q * y) / math.sqrt(y)
            if abs(val - l) > tol * max(1.0, l):
                ok = False
                break
        if ok:
            candidates.append((x, y))
    if not candidates:
        return None
    return complex(*candidates[0])


def _line_circle(lb, lc, ld, b, c, d):
    # line lb*x + lc*y + ld = 0 with circle x^2+y^2+bx+cy+d = 0
    out = []
    if abs(lc) >= abs(lb):
        # y = -(lb*x + ld)/lc
        A = 1 + (lb / lc) ** 2
        B = b + 2 * lb * ld / lc**2 - c * lb / lc
        C = d + (ld / lc) ** 2 - c * ld / lc
        disc = B * B - 4 * A * C
        if disc < 0:
            return out
        for sgn in (1, -1):
            x = (-B + sgn * math.sqrt(disc)) / (2 * A)
            y = -(lb * x + ld) / lc
            out.append((x, y))
    else:
        A = 1 + (lc / lb) ** 2
        B = c + 2 * lc * ld / lb**2 - b * lc / lb
        C = d + (ld / lb) ** 2 - b * ld / lb
        disc = B * B - 4 * A * C
        if disc < 0:
            return out
        for sgn in (1, -1):
            y = (-B + sgn * math.sqrt(disc)) / (2 * A)
            x = -(lc * y + ld) / lb
            out.append((x, y))
    return out


def torus_length(cls, tau) -> float:
    p, q = cls
    return math.hypot(p + q * tau.real, q * tau.imag) / math.sqrt(tau.imag)


# ---------------------------------------------------------------------------
# mixed structures and the degeneration family


@dataclass
class MixedStructure:
    """Flat pieces plus a weighted multicurve, evaluated through pairings."""

    pieces: list  # FlatSurface with marked slit sites
    lam: list  # (name, weight)
    registrations: dict = field(default_factory=dict)

    def register(self, name, lam_crossings, piece_arcs):
        """Declare a test class: its crossings with each lambda curve and
        its arc/curve decomposition into the flat pieces."""
        self.registrations[name] = {
            "lam": dict(lam_crossings),
            "pieces": list(piece_arcs),
        }

    def total_area(self) -> float:
        return sum(float(p.area()) for p in self.pieces)


def mixed_pairing(eta: MixedStructure, name: str) -> float:
    """I(eta, c) = sum of s_i * i(alpha_i, c) + flat lengths in the pieces."""
    if name not in eta.registrations:
        raise SurfaceError(f"declare decomposition for {name!r} first")
    reg = eta.registrations[name]
    lam_w = dict(eta.lam)
    total = 0.0
    for lname, crossings in reg["lam"].items():
        total += float(lam_w[lname]) * crossings
    for piece_idx, curve in reg["pieces"]:
        total += flat_length(eta.pieces[piece_idx], curve)
    return total


def mixed_self_pairing(eta: MixedStructure, mode: str = "exact", quad_n: int = 10000, normalize: bool = True) -> float:
    """I(eta, eta): pi/2 times the (normalized) total flat area.

    The multicurve part is simple and disjoint from the pieces, so only
    the Liouville self-pairings of the pieces contribute.
    """
    from .foliations import LiouvillePairing, liouville_pairing

    area = eta.total_area()
    scale = 1.0 / area if normalize else 1.0
    total = 0.0
    for p in eta.pieces:
        L = LiouvillePairing(p, mode, quad_n)
        total += liouville_pairing(L, L) * scale
    return total


def _slit_torus_triangles(Ls):
    """Unit square torus with a vertical slit of length Ls at the vertex."""
    z = 0 * Ls
    one = Ls / Ls
    V0 = (z, z)
    V1 = (one, z)
    S1 = (one, Ls)
    V2 = (one, one)
    V3 = (z, one)
    S0 = (z, Ls)

    def tri(a, b, c):
        return Triangle(vsub(b, a), vsub(c, b), vsub(a, c))

    return [tri(S0, V0, V1), tri(S0, V1, S1), tri(S0, S1, V2), tri(S0, V2, V3)]


def two_tori_with_cylinder(s_height, n: int):
    """The degeneration member q_n: two unit tori joined by a thin cylinder.

    Each torus is slit vertically at its marked vertex over length 1/n^2;
    a Euclidean cylinder of height s and circumference 2/n^2 is glued in
    between the slits.  Returns (surface, core class, junction classes).
    """
    if n < 1:
        raise SurfaceError("n must be at least 1")
    exact = not isinstance(s_height, float)
    Ls = Fraction(1, n * n) if exact else 1.0 / (n * n)
    s = Fraction(s_height) if exact else float(s_height)
    tris = []
    for _ in range(2):
        tris.extend(_slit_torus_triangles(Ls))
    z = 0 * Ls

    def tri(a, b, c):
        return Triangle(vsub(b, a), vsub(c, b), vsub(a, c))

    L0 = (z, z)
    R0 = (s, z)
    R1 = (s, Ls)
    R2 = (s, 2 * Ls)
    L2 = (z, 2 * Ls)
    L1 = (z, Ls)
    tris += [tri(L0, R0, R1), tri(L0, R1, L1), tri(L1, R1, R2), tri(L1, R2, L2)]
    gl = []
    for k in (0, 4):
        gl += [
            ((k + 0, 1), (k + 3, 1), None),  # bottom ~ top
            ((k + 2, 1), (k + 3, 2), None),  # right-upper ~ left-upper
            ((k + 0, 2), (k + 1, 0), None),
            ((k + 1, 2), (k + 2, 0), None),
            ((k + 2, 2), (k + 3, 0), None),
        ]
    gl += [
        ((8, 0), (11, 1), None),  # cylinder bottom ~ top
        ((8, 2), (9, 0), None),
        ((9, 1), (10, 0), None),
        ((10, 2), (11, 0), None),
        # torus 0 lips onto the cylinder's left boundary circle
        ((0, 0), (9, 2), None),
        ((1, 1), (11, 2), None),
        # torus 1 lips onto the right boundary circle
        ((4, 0), (8, 1), None),
        ((5, 1), (10, 1), None),
    ]
    surface = FlatSurface(tris, gl)
    # mark the four junction classes (slit tips and slit feet)
    junction = {
        "V0": surface.vertex_class_of((0, 1)),
        "S0": surface.vertex_class_of((0, 0)),
        "V1": surface.vertex_class_of((4, 1)),
        "S1": surface.vertex_class_of((4, 0)),
    }
    surface = FlatSurface(
        [surface.triangles[i] for i in range(len(surface.triangles))],
        [(a, b, surface.sigma[a]) for a, b in _gl_pairs(surface)],
        marked=sorted(set(junction.values())),
    )
    junction = {
        "V0": surface.vertex_class_of((0, 1)),
        "S0": surface.vertex_class_of((0, 0)),
        "V1": surface.vertex_class_of((4, 1)),
        "S1": surface.vertex_class_of((4, 0)),
    }
    core = make_closed(surface, [(8, 2), (9, 1), (10, 2), (11, 1)])
    return surface, core, junction


def _gl_pairs(surface):
    seen = set()
    out = []
    for slot, slot2 in sorted(surface.partner.items()):
        if slot in seen:
            continue
        seen.add(slot)
        seen.add(slot2)
        out.append((slot, slot2))
    return out


def degeneration_family(eta: MixedStructure, n: int):
    """Realize the n-th flat surface converging to the mixed structure.

    Implemented for the two-square-tori, single-curve multicurve case of
    the boundary construction; the slit sits at each torus's marked
    vertex, in the vertical direction.
    """
    if len(eta.pieces) != 2 or len(eta.lam) != 1:
        raise SurfaceError("degeneration builder supports two tori and one curve")
    for p in eta.pieces:
        if len(p.triangles) != 2 or abs(float(p.area()) - 1.0) > 1e-12:
            raise SurfaceError("flat pieces must be marked unit square tori")
        if not p.marked:
            raise SurfaceError("slit sites must be marked")
    _, weight = eta.lam[0]
    surface, core, junction = two_tori_with_cylinder(weight, n)
    return surface, core, junction


# ---------------------------------------------------------------------------
# composite classes on the degeneration member


def _open_chain_sequence(surface, rep: ChainRep):
    """Crossing sequence of an open chain, patching interior vertex passes."""
    from .intersections import pl_of_chain

    seq = []
    pl = pl_of_chain(surface, rep)
    n = len(rep.segments)
    for k, seg in enumerate(rep.segments):
        seq.extend(seg.crossings)
        if k + 1 < n:
            vclass, in_g, out_g = pl.passages[k + 1]
            p = _Pinch(None, -1, -1, vclass, in_corner=in_g.corner, in_dir=in_g.direction,
                       out_corner=out_g.corner, out_dir=out_g.direction)
            seq.extend(_vertex_patch(surface, p, "cw"))
    return seq


def _arrival(surface, rep: ChainRep):
    from .intersections import _trace_segment

    _, (corner, d) = _trace_segment(surface, rep.segments[-1])
    return corner, d


def compose_arcs(surface, arcs, closed: bool = False):
    """Concatenate tightened arcs at their shared marked endpoints.

    The junctions are rounded on a fixed side, which changes the class at
    most by loops around the marked points; those carry no length in the
    degeneration limit.
    """
    reps = [tighten(surface, a) for a in arcs]
    seq = []
    njoin = len(reps) if closed else len(reps) - 1
    for k, rep in enumerate(reps):
        seq.extend(_open_chain_sequence(surface, rep))
        if k < njoin:
            nxt = reps[(k + 1) % len(reps)]
            corner, d = _arrival(surface, rep)
            vclass = surface.vertex_class_of(corner)
            seg0 = nxt.segments[0]
            if seg0.start_vc != vclass:
                raise SurfaceError("arc endpoints do not match")
            p = _Pinch(None, -1, -1, vclass, in_corner=corner, in_dir=d,
                       out_corner=seg0.start_corner, out_dir=seg0.start_dir)
            seq.extend(_vertex_patch(surface, p, "cw"))
    seq = tuple(seq)
    if closed:
        seq = reduce_sequence(surface, seq, True)
        return make_closed(surface, seq)
    seq = reduce_sequence(surface, seq, False)
    va = arcs[0].ends[0]
    vb = arcs[-1].ends[1]
    first = reps[0].segments[0]
    return make_arc(surface, seq, (va, vb), start_corner=first.start_corner)
