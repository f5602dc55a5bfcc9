import numpy as np
import pytest
from hypothesis import given, strategies as st

from ministokes.errors import DegenerateTriangleError, MeshRepairError
from ministokes.mesh import (
    UNIT_SQUARE, Mesh, Rectangle, count_corner_triangles, fix_corner_triangles, generate_mesh,
    mesh_parameter_h, quality_measures, quality_report, read_mesh, validate_conformity, write_mesh,
)

from conftest import cached_mesh

SQRT3 = np.sqrt(3.0)


def two_triangle_square():
    v = [[0, 0], [1, 0], [1, 1], [0, 1]]
    return Mesh(v, [[0, 1, 2], [0, 2, 3]], [True] * 4, UNIT_SQUARE)


def four_triangle_square():
    # centre vertex: no triangle has two boundary edges
    v = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]
    t = [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]
    return Mesh(v, t, [True] * 4 + [False], UNIT_SQUARE)


# --- quality -----------------------------------------------------------------

def test_quality_equilateral():
    q1, q2 = quality_measures([[0, 0], [1, 0], [0.5, SQRT3 / 2]])
    assert q1 == pytest.approx(1.0, abs=1e-14)
    assert q2 == pytest.approx(1.0, abs=1e-14)


def test_quality_right_isoceles():
    q1, q2 = quality_measures([[0, 0], [1, 0], [0, 1]])
    assert q1 == pytest.approx((2 - np.sqrt(2)) * np.sqrt(2), abs=1e-14)
    assert q2 == pytest.approx(SQRT3 / 2, abs=1e-14)


def test_quality_sliver_tends_to_zero():
    q = [quality_measures([[0, 0], [1, 0], [0.5, eps]]) for eps in (1e-2, 1e-4, 1e-6)]
    assert q[0][0] > q[1][0] > q[2][0]
    assert q[2][0] < 1e-10 and q[2][1] < 1e-5


def test_quality_zero_area_raises():
    with pytest.raises(DegenerateTriangleError):
        quality_measures([[0, 0], [1, 1], [2, 2]])


@given(st.floats(0, 2 * np.pi), st.floats(0.01, 100), st.floats(-10, 10), st.floats(-10, 10),
       st.integers(0, 10**6))
def test_quality_invariant_under_similarity(theta, scale, tx, ty, seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0, 1, (3, 2))
    d1, d2 = c[1] - c[0], c[2] - c[0]
    if abs(d1[0] * d2[1] - d1[1] * d2[0]) < 1e-3:
        return
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    c2 = scale * c @ rot.T + [tx, ty]
    q, q2 = quality_measures(c), quality_measures(c2)
    assert q2[0] == pytest.approx(q[0], abs=1e-9)
    assert q2[1] == pytest.approx(q[1], abs=1e-9)
    assert 0 <= q[0] <= 1 and 0 <= q[1] <= 1


# --- h ------------------------------------------------------------------------

def test_mesh_parameter_small_cases():
    single = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [True] * 3, Rectangle(0, 1, 0, 1))
    assert mesh_parameter_h(single) == pytest.approx(np.sqrt(2))
    assert mesh_parameter_h(two_triangle_square()) == pytest.approx(np.sqrt(2))


def test_mesh_parameter_for_h0_01(mesh01):
    assert 0.1 <= mesh_parameter_h(mesh01) <= 0.2


# --- generation ---------------------------------------------------------------

@pytest.mark.parametrize("h0", [0.2, 0.1, 0.05, 0.025])
def test_generated_meshes_are_valid(h0):
    mesh = cached_mesh(h0)
    assert validate_conformity(mesh) == []
    assert count_corner_triangles(mesh) == 0
    assert abs(mesh.areas().sum() - 1.0) <= 1e-12
    for corner in UNIT_SQUARE.corners():
        assert np.any(np.all(mesh.vertices == corner, axis=1))
    q = quality_report(mesh)
    assert min(q.min_q1, q.min_q2) >= 0.7


def test_colliding_flow_domain():
    dom = Rectangle(-1.0, 1.0, -1.0, 1.0)
    mesh = cached_mesh(0.1, dom)
    assert validate_conformity(mesh) == []
    assert abs(mesh.areas().sum() - 4.0) <= 4e-12
    assert quality_report(mesh).min_q1 >= 0.7


def test_counts_near_reference_mesh():
    # reference mesh of 554 vertices / 1014 triangles, +-15%
    mesh = cached_mesh(0.046)
    assert abs(mesh.n_vertices - 554) <= 0.15 * 554
    assert abs(mesh.n_triangles - 1014) <= 0.15 * 1014


def test_generation_is_deterministic():
    a = generate_mesh(UNIT_SQUARE, 0.2)
    b = generate_mesh(UNIT_SQUARE, 0.2)
    assert a == b
    c = generate_mesh(UNIT_SQUARE, 0.2, seed=3)
    assert c == generate_mesh(UNIT_SQUARE, 0.2, seed=3)


def test_boundary_flags(mesh01):
    on = np.abs(UNIT_SQUARE.signed_distance(mesh01.vertices)) <= 1e-12
    np.testing.assert_array_equal(on, mesh01.boundary)
    bnd = mesh01.boundary_edges()
    assert np.all(mesh01.boundary[bnd])


@pytest.mark.parametrize("h0", [0.3, 0.4, 0.45, 0.6, 0.9])
def test_very_coarse_meshes_keep_corners(h0):
    # the corner relaxation reaches every corner here; none may move
    mesh = generate_mesh(UNIT_SQUARE, h0)
    assert validate_conformity(mesh) == []
    for corner in UNIT_SQUARE.corners():
        assert np.any(np.all(mesh.vertices == corner, axis=1))
    assert count_corner_triangles(mesh) == 0


@pytest.mark.parametrize("h0", [0.0, -0.1, 1.0, 2.0, np.nan])
def test_invalid_h0(h0):
    with pytest.raises(ValueError):
        generate_mesh(UNIT_SQUARE, h0)


# --- corner repair ------------------------------------------------------------

def test_two_triangle_square_cannot_be_repaired():
    with pytest.raises(MeshRepairError) as info:
        fix_corner_triangles(two_triangle_square())
    assert info.value.triangle is not None


def test_repair_is_identity_without_corner_triangles():
    m = four_triangle_square()
    assert count_corner_triangles(m) == 0
    assert fix_corner_triangles(m) is m


def test_repair_flips_a_corner_triangle():
    # 3x3 vertex grid split uniformly: two corners carry corner triangles
    xs = np.linspace(0, 1, 3)
    X, Y = np.meshgrid(xs, xs)
    v = np.column_stack([X.ravel(), Y.ravel()])
    t = []
    for j in range(2):
        for i in range(2):
            a, b, c, d = j * 3 + i, j * 3 + i + 1, (j + 1) * 3 + i + 1, (j + 1) * 3 + i
            t += [[a, b, c], [a, c, d]]
    flags = np.abs(UNIT_SQUARE.signed_distance(v)) <= 1e-12
    m = Mesh(v, t, flags, UNIT_SQUARE)
    assert count_corner_triangles(m) == 2
    fixed = fix_corner_triangles(m)
    assert count_corner_triangles(fixed) == 0
    assert validate_conformity(fixed) == []
    assert np.all(fixed.areas() > 0)


# --- validation ---------------------------------------------------------------

def test_validate_reports_clockwise_triangle():
    m = four_triangle_square()
    t = m.triangles.copy()
    t[1] = t[1][[0, 2, 1]]
    bad = Mesh(m.vertices, t, m.boundary, m.domain)
    assert any(s.startswith("orientation") for s in validate_conformity(bad))


def test_validate_reports_hanging_node():
    # vertex 4 sits on the diagonal of the left triangle but only the right
    # side is split: a hanging node
    v = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]
    t = [[0, 1, 4], [1, 2, 4], [0, 2, 3]]
    m = Mesh(v, t, [True] * 4 + [False], UNIT_SQUARE)
    assert any(s.startswith("conformity") for s in validate_conformity(m))


def test_validate_reports_missing_cover():
    v = [[0, 0], [1, 0], [1, 1], [0, 1]]
    m = Mesh(v, [[0, 1, 2]], [True] * 4, UNIT_SQUARE)
    assert any(s.startswith("cover") for s in validate_conformity(m))


# --- file format --------------------------------------------------------------

def test_round_trip(tmp_path, mesh01):
    path = tmp_path / "m.txt"
    write_mesh(mesh01, path)
    text = path.read_text().splitlines()
    assert text[0] == "mesh2d 1"
    assert text[1] == f"vertices {mesh01.n_vertices}"
    back = read_mesh(path, UNIT_SQUARE)
    assert back == mesh01
    write_mesh(back, tmp_path / "m2.txt")
    assert (tmp_path / "m2.txt").read_text() == path.read_text()


def test_read_rejects_other_formats(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("mesh3d 1\n")
    with pytest.raises(ValueError):
        read_mesh(p)
