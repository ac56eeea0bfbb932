import math

import pytest

from flatspec.foliations import (
    DirectionalFoliation,
    LiouvillePairing,
    foliation_curve_pairing,
    foliation_foliation_pairing,
    length_from_foliations,
    liouville_pairing,
)
from flatspec.geodesics import flat_length, torus_class
from flatspec.geom_kernel import SurfaceError
from flatspec.surfaces import octagon_surface, square_torus


@pytest.fixture(scope="module")
def torus():
    return square_torus()


def test_pairing_basics(torus):
    c10 = torus_class(torus, 1, 0)
    f_vert = DirectionalFoliation(torus, math.pi / 2)
    assert math.isclose(foliation_curve_pairing(f_vert, c10), 1.0, rel_tol=1e-12)
    f_par = DirectionalFoliation(torus, 0.0)
    assert abs(foliation_curve_pairing(f_par, c10)) < 1e-12


def test_pairing_lipschitz(torus):
    # |pairing(t1) - pairing(t0)| <= l(c) * |t1 - t0|
    c = torus_class(torus, 2, 1)
    ln = flat_length(torus, c)
    thetas = [k * math.pi / 17 for k in range(17)]
    for t0, t1 in zip(thetas, thetas[1:]):
        f0 = DirectionalFoliation(torus, t0)
        f1 = DirectionalFoliation(torus, t1)
        d = abs(foliation_curve_pairing(f1, c) - foliation_curve_pairing(f0, c))
        assert d <= ln * abs(t1 - t0) + 1e-12


def test_length_from_foliations_exact(torus):
    for p, q in [(1, 0), (1, 1), (2, 1), (3, 2)]:
        c = torus_class(torus, p, q)
        val, err = length_from_foliations(torus, c, "exact")
        assert abs(val - math.hypot(p, q)) < 1e-12


def test_length_from_foliations_quadrature(torus):
    c = torus_class(torus, 1, 1)
    val, err = length_from_foliations(torus, c, "quadrature", quad_n=10000)
    assert abs(val - math.sqrt(2)) < 1e-4


def test_quadrature_error_decreases(torus):
    c = torus_class(torus, 2, 1)
    exact = math.hypot(2, 1)
    e1 = abs(length_from_foliations(torus, c, "quadrature", quad_n=500)[0] - exact)
    e2 = abs(length_from_foliations(torus, c, "quadrature", quad_n=1000)[0] - exact)
    e3 = abs(length_from_foliations(torus, c, "quadrature", quad_n=2000)[0] - exact)
    assert e3 <= e1 + 1e-12
    assert max(e1, e2, e3) < 1e-4


def test_length_from_foliations_octagon():
    s = octagon_surface()
    from flatspec.geodesics import make_closed

    c = make_closed(s, [(0, 0, 1), (3, 0, 1), (2, 0, 1), (1, 0, 1)])
    val, _ = length_from_foliations(s, c, "exact")
    assert abs(val - flat_length(s, c)) < 1e-12


def test_foliation_foliation(torus):
    f0 = DirectionalFoliation(torus, 0.0)
    f1 = DirectionalFoliation(torus, math.pi / 2)
    assert math.isclose(foliation_foliation_pairing(f0, f1), 1.0)
    assert abs(foliation_foliation_pairing(f0, f0)) < 1e-15
    other = square_torus()
    with pytest.raises(SurfaceError):
        foliation_foliation_pairing(f0, DirectionalFoliation(other, 0.3))


def test_foliation_foliation_average_is_area(torus):
    # (1/2) integral of pairing(theta, phi) over phi equals the area
    f0 = DirectionalFoliation(torus, 0.7)
    n = 20000
    acc = 0.0
    for k in range(n):
        phi = (k + 0.5) * math.pi / n
        acc += foliation_foliation_pairing(f0, DirectionalFoliation(torus, phi))
    val = 0.5 * acc * math.pi / n
    assert abs(val - 1.0) < 1e-6


def test_foliation_foliation_grid_oracle(torus):
    # independent check of area*|sin| against a leaf-counting estimate
    # on the unit square: leaves of spacing h in two directions cross
    # about area*|sin(d_theta)|/h^2 times
    import numpy as np

    theta, phi = 0.3, 1.2
    h = 0.01
    # count crossings inside the unit square fundamental domain
    # leaves: x*sin(t) - y*cos(t) = k*h
    def leaf_lines(t):
        n_vec = (math.sin(t), -math.cos(t))
        offs = []
        kmin = int(math.floor(-2 / h))
        for k in range(kmin, -kmin):
            offs.append(k * h)
        return n_vec, offs

    (n1, o1) = leaf_lines(theta)
    (n2, o2) = leaf_lines(phi)
    det = n1[0] * n2[1] - n1[1] * n2[0]
    count = 0
    for a in o1:
        for b in o2:
            x = (a * n2[1] - b * n1[1]) / det
            y = (n1[0] * b - n2[0] * a) / det
            if 0 <= x < 1 and 0 <= y < 1:
                count += 1
    estimate = count * h * h
    f = foliation_foliation_pairing(
        DirectionalFoliation(torus, theta), DirectionalFoliation(torus, phi)
    )
    assert abs(estimate - f) < 0.05


def test_liouville_identities(torus):
    L = LiouvillePairing(torus, "exact")
    for p, q in [(1, 0), (1, 1), (2, 1)]:
        c = torus_class(torus, p, q)
        assert abs(liouville_pairing(L, c) - math.hypot(p, q)) < 1e-9
    for k in range(8):
        f = DirectionalFoliation(torus, (k + 0.3) * math.pi / 8)
        assert abs(liouville_pairing(L, f) - 1.0) < 1e-9
    assert math.isclose(liouville_pairing(L, L), math.pi / 2, rel_tol=1e-12)


def test_liouville_self_quadrature(torus):
    L = LiouvillePairing(torus, "quadrature", quad_n=2000)
    assert abs(liouville_pairing(L, L) - math.pi / 2) < 1e-5


def test_liouville_homogeneity(torus):
    from fractions import Fraction

    from flatspec.geom_kernel import PlanarMatrix, apply_linear

    s2 = apply_linear(torus, PlanarMatrix.diagonal(Fraction(3, 2), Fraction(3, 2)))
    L2 = LiouvillePairing(s2, "exact")
    c = torus_class(torus, 1, 1)
    assert abs(liouville_pairing(L2, c) - 1.5 * math.sqrt(2)) < 1e-9
