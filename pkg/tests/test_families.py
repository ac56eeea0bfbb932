import math
import random
from fractions import Fraction

import pytest

from flatspec.families import (
    BRANCH_ORDER,
    DELTA_CONSTRAINTS,
    AssembledFamily,
    BlockSpec,
    assemble_closed,
    build_block,
    carried_panel,
    circuit_class,
    circuit_weights,
    cylinder_core_class,
    deform,
    legal_circuits,
    torus_from_three_lengths,
    torus_length,
    two_tori_with_cylinder,
    verify_isospectral,
)
from flatspec.geodesics import flat_length, tighten
from flatspec.geom_kernel import SurfaceError, surface_area, validate_surface
from flatspec.traintracks import (
    admissible_perturbations,
    carried_length,
    carrying_weights,
    check_magnetic,
    nullspace,
    rank,
    switch_matrix,
    weight_space_basis,
)

PUBLISHED = {
    "a1": (-1, 1, 0, 0, 1, 0, 0, 0, 1, 1),
    "a2": (1, -1, 0, 0, 1, 1, 1, 0, 0, 0),
    "b1": (0, 0, 1, -1, 0, 1, 1, 1, 0, 0),
    "b2": (0, 0, -1, 1, 0, 0, 0, 1, 1, 1),
}


@pytest.fixture(scope="module")
def fam2():
    return assemble_closed(2)


def test_block_basics():
    data = build_block(BlockSpec("sigma102", Fraction(1, 2)))
    assert math.isclose(data["area"], 1.0)
    lens = data["lengths"]
    assert lens["al"] == Fraction(1, 2)
    assert math.isclose(float(lens["alp"]), math.sqrt(2) / 2)
    vals = {round(float(v), 12) for v in lens.values()}
    assert vals == {0.5, round(math.sqrt(2) / 2, 12)}
    with pytest.raises(SurfaceError):
        BlockSpec("sigma102", 0)
    with pytest.raises(SurfaceError):
        BlockSpec("sigma102", Fraction(1, 2), Fraction(1, 8), Fraction(1, 100))


def test_assembly_genus2_validates(fam2):
    s = fam2.surface
    assert s.exact
    rep = validate_surface(s)
    assert rep.ok, rep.checks
    assert rep.genus == 2
    ks = sorted(k for (_, k, _) in rep.cone_points)
    assert ks == [3, 3, 3, 3]
    assert surface_area(s) == 1


def test_assembly_genus3_validates():
    fam = assemble_closed(3)
    rep = validate_surface(fam.surface)
    assert rep.ok, rep.checks
    assert rep.genus == 3
    ks = [k for (_, k, _) in rep.cone_points]
    assert ks == [3] * 8
    assert abs(float(surface_area(fam.surface)) - 1.0) < 1e-12


def test_switch_matrix_matches_published(fam2):
    track = fam2.track
    mat = switch_matrix(track)
    rows = {sw: tuple(row) for sw, row in zip(track.switches, mat)}
    for sw_name, expected in PUBLISHED.items():
        assert rows[f"{sw_name}[0]"] == expected, sw_name


def test_weight_space_dimension(fam2):
    mat = switch_matrix(fam2.track)
    assert rank(mat) == 4
    basis = weight_space_basis(fam2.track)
    assert len(basis) == 10 - 4


def test_admissible_dimension_and_orthogonality(fam2):
    dirs = admissible_perturbations(fam2.track, DELTA_CONSTRAINTS)
    assert len(dirs) == 2
    weights = weight_space_basis(fam2.track)
    for d in dirs:
        for w in weights:
            assert sum(a * b for a, b in zip(d, w)) == 0


def test_paper_table_direction_is_not_admissible(fam2):
    # the published perturbation table fails the row-space test; the
    # corrected direction (circle entries sign-flipped) passes
    from flatspec.traintracks import rref

    mat = [[Fraction(x) for x in row] for row in switch_matrix(fam2.track)]
    published_eps = [-1, 1, -1, 1, 1, 2, 2, 1, 0, 0]
    corrected_eps = [1, -1, 1, -1, 1, 2, 2, 1, 0, 0]

    def in_rowspace(vec):
        base_rank = rank(mat)
        return rank(mat + [vec]) == base_rank

    assert not in_rowspace([Fraction(x) for x in published_eps])
    assert in_rowspace([Fraction(x) for x in corrected_eps])


def test_branch_lengths_match_embedding(fam2):
    track = fam2.track
    for b in track.branches:
        expected = float(track.lengths[b])
        got = sum(seg.length for seg in track.embedding[b])
        assert abs(expected - got) < 1e-12, b


def test_magnetic_at_base(fam2):
    ok, witnesses = check_magnetic(fam2.surface, fam2.track)
    assert ok, witnesses


def test_carried_circuits_lengths(fam2):
    rng = random.Random(4)
    circuits = legal_circuits(fam2.track, 12, rng)
    assert circuits
    for cyc in circuits:
        w = circuit_weights(fam2.track, cyc)
        cls = circuit_class(fam2.track, cyc)
        lw = carried_length(fam2.track, w)
        lf = flat_length(fam2.surface, cls)
        assert abs(lw - lf) < 1e-9, cyc
        got = carrying_weights(fam2.track, cls)
        assert got == w, (cyc, got, w)


def test_gluing_circle_is_geodesic_of_length_one(fam2):
    # the circuit A1.A2 runs around the gluing circle: length 2t = 1
    track = fam2.track
    cyc = (("A1[0]", 0), ("A2[0]", 0))
    cls = circuit_class(track, cyc)
    rep = tighten(fam2.surface, cls)
    assert abs(rep.length - 1.0) < 1e-12
    assert rep.kind == "chain"


def test_core_cylinder_class(fam2):
    cls = cylinder_core_class(fam2, 0)
    rep = tighten(fam2.surface, cls)
    assert rep.kind == "cylinder"
    assert abs(rep.circumference - 1.0) < 1e-12
    assert abs(rep.height - 0.5) < 1e-12


def test_deform_keeps_carried_lengths(fam2):
    panel = carried_panel(fam2, 10, seed=2)
    fam_b = deform(fam2, [(0.01, -0.008)])
    assert not fam_b.surface.exact
    for name, cls, w in panel:
        la = flat_length(fam2.surface, cls)
        lb = flat_length(fam_b.surface, cls)
        assert abs(la - lb) < 1e-9, name
    # non-carried witness: the C1 core circumference moves by 2*eps
    wit = cylinder_core_class(fam2, 0)
    la = flat_length(fam2.surface, wit)
    lb = flat_length(fam_b.surface, wit)
    assert abs((lb - la) - 2 * 0.01) < 1e-9


def test_deform_magnetic_and_report(fam2):
    fam_b = deform(fam2, [(0.012, 0.01)])
    ok, wit = check_magnetic(fam_b.surface, fam_b.track)
    assert ok, wit
    panel = carried_panel(fam2, 6, seed=9)
    rows = [(name, cls, True) for name, cls, _ in panel]
    rows.append(("witness", cylinder_core_class(fam2, 0), False))
    report = verify_isospectral(fam2, fam_b, rows)
    assert report["max_carried_delta"] < 1e-9
    assert "witness" in report["witnesses"]


def test_torus_solver_roundtrip():
    rng = random.Random(1)
    classes = [(1, 0), (0, 1), (1, 1)]
    for _ in range(100):
        x = rng.uniform(-2, 2)
        y = rng.uniform(0.2, 5)
        tau = complex(x, y)
        lens = [torus_length(c, tau) for c in classes]
        sol = torus_from_three_lengths(classes, lens)
        assert sol is not None
        assert abs(sol - tau) < 1e-9


def test_torus_solver_cases():
    sol = torus_from_three_lengths(
        [(1, 0), (0, 1), (1, 1)], [1.0, 1.0, math.sqrt(2)]
    )
    assert abs(sol - complex(0, 1)) < 1e-9
    assert torus_from_three_lengths([(1, 0), (0, 1), (1, 1)], [1.0, 1.0, 10.0]) is None
    with pytest.raises(SurfaceError):
        torus_from_three_lengths([(1, 0), (2, 0), (0, 1)], [1, 2, 1])
    with pytest.raises(SurfaceError):
        torus_from_three_lengths([(1, 0), (0, 1)], [1, 1])


def test_two_tori_with_cylinder_shape():
    surface, core, junction = two_tori_with_cylinder(Fraction(1), 5)
    rep = validate_surface(surface)
    assert rep.ok, rep.checks
    assert rep.genus == 2
    ks = sorted(k for (_, k, _) in rep.cone_points)
    assert ks == [3, 3, 3, 3]
    assert all(m for (_, _, m) in rep.cone_points)
    crep = tighten(surface, core)
    assert crep.kind == "cylinder"
    assert abs(crep.circumference - 2 / 25) < 1e-15
    assert abs(crep.height - 1.0) < 1e-12
