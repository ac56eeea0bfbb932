"""Directional foliations and the Liouville pairing.

A directional foliation is straight in direction theta with transverse
measure the Euclidean distance between leaves; it pairs with a curve as
the sum of l(w)*|sin(theta - phi_w)| over the saddle connections of the
geodesic representative.  The Liouville pairing is the angular average
(1/2) integral of the directional pairings over [0, pi); with a curve it
returns the flat length, with itself pi/2 times the area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesics import CurveClass, rep_segments, tighten
from .geom_kernel import FlatSurface, SurfaceError

__all__ = [
    "DirectionalFoliation",
    "LiouvillePairing",
    "foliation_curve_pairing",
    "foliation_foliation_pairing",
    "length_from_foliations",
    "liouville_pairing",
]


@dataclass(frozen=True)
class DirectionalFoliation:
    """Foliation by straight lines in direction theta (mod pi)."""

    surface: FlatSurface
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", self.theta % math.pi)


@dataclass(frozen=True)
class LiouvillePairing:
    """The Liouville current of a surface, represented by its pairings."""

    surface: FlatSurface
    mode: str = "exact"  # "exact" | "quadrature"
    quad_n: int = 10000

    def __post_init__(self):
        if self.mode not in ("exact", "quadrature"):
            raise SurfaceError(f"unknown Liouville mode {self.mode!r}")
        if self.quad_n < 2:
            raise SurfaceError("quadrature needs at least 2 samples")


def _segment_data(surface, c: CurveClass):
    """(lengths, angles, weight) over the geodesic representative."""
    rep = tighten(surface, c)
    segs, weight = rep_segments(rep)
    lengths = np.array([float(s.length) for s in segs])
    angles = np.array([math.atan2(float(s.vec[1]), float(s.vec[0])) for s in segs])
    return lengths, angles, weight


def foliation_curve_pairing(f: DirectionalFoliation, c: CurveClass) -> float:
    """Transverse measure of the curve class against the foliation."""
    lengths, angles, weight = _segment_data(f.surface, c)
    return float(weight * np.sum(lengths * np.abs(np.sin(f.theta - angles))))


def foliation_foliation_pairing(f: DirectionalFoliation, g: DirectionalFoliation) -> float:
    """area * |sin(theta - phi)| for two foliations of one surface."""
    if f.surface is not g.surface:
        raise SurfaceError("foliations live on different surfaces")
    area = float(f.surface.area())
    return area * abs(math.sin(f.theta - g.theta))


def _integral_abs_sin(a: float, b: float) -> float:
    """Exact antiderivative of |sin| on [a, b] (piecewise -cos with kinks)."""
    if b < a:
        return -_integral_abs_sin(b, a)
    k0 = math.ceil(a / math.pi)
    k1 = math.floor(b / math.pi)
    if k0 > k1:
        sign = 1.0 if math.sin((a + b) / 2) >= 0 else -1.0
        return sign * (math.cos(a) - math.cos(b))

    def up_to(x, k):
        # integral from k*pi to x, for x in [k*pi, (k+1)*pi]
        return abs(math.cos(k * math.pi) - math.cos(x))

    total = up_to(k0 * math.pi, k0 - 1) - up_to(a, k0 - 1)
    total += 2.0 * (k1 - k0)
    total += up_to(b, k1)
    return total


def length_from_foliations(surface: FlatSurface, c: CurveClass, mode: str = "exact", quad_n: int = 10000):
    """Flat length recovered as the angular average of foliation pairings.

    exact: per-segment closed form of (1/2) * integral of |sin|;
    quadrature: midpoint rule with quad_n samples on [0, pi).
    Returns (value, error bound).
    """
    lengths, angles, weight = _segment_data(surface, c)
    if mode == "exact":
        val = 0.0
        for ln, phi in zip(lengths, angles):
            val += ln * 0.5 * _integral_abs_sin(-phi, math.pi - phi)
        return weight * val, 1e-12 * max(1.0, float(np.sum(lengths)))
    if mode == "quadrature":
        if quad_n < 2:
            raise SurfaceError("quadrature needs at least 2 samples")
        thetas = (np.arange(quad_n) + 0.5) * math.pi / quad_n
        vals = np.abs(np.sin(thetas[:, None] - angles[None, :]))
        integral = vals.dot(lengths).sum() * (math.pi / quad_n)
        err = float(np.sum(lengths)) * math.pi / quad_n
        return weight * 0.5 * integral, err
    raise SurfaceError(f"unknown mode {mode!r}")


def liouville_pairing(L: LiouvillePairing, x) -> float:
    """Pair the Liouville current with a curve, a foliation, or itself."""
    s = L.surface
    if isinstance(x, CurveClass):
        val, _ = length_from_foliations(s, x, L.mode, L.quad_n)
        return val
    if isinstance(x, DirectionalFoliation):
        if x.surface is not s:
            raise SurfaceError("pairing across different surfaces")
        area = float(s.area())
        if L.mode == "exact":
            # (1/2) integral over theta of area*|sin(theta - phi)| == area
            return area * 0.5 * _integral_abs_sin(-x.theta, math.pi - x.theta)
        n = L.quad_n
        thetas = (np.arange(n) + 0.5) * math.pi / n
        return float(area * 0.5 * np.sum(np.abs(np.sin(thetas - x.theta))) * math.pi / n)
    if isinstance(x, LiouvillePairing):
        if x.surface is not s:
            raise SurfaceError("pairing across different surfaces")
        area = float(s.area())
        if L.mode == "exact":
            return math.pi / 2 * area
        n = L.quad_n
        thetas = (np.arange(n) + 0.5) * math.pi / n
        inner = np.empty(n)
        for k in range(n):
            inner[k] = area * np.sum(np.abs(np.sin(thetas - thetas[k]))) * (math.pi / n) * 0.5
        return float(0.5 * np.sum(inner) * math.pi / n)
    raise SurfaceError(f"cannot pair Liouville current with {type(x).__name__}")
