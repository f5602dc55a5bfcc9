from types import SimpleNamespace

import numpy as np
import pytest
import scipy.sparse as sps
import sympy as sp
from hypothesis import given, strategies as st

from ministokes.benchmarks import problem
from ministokes.errors import DegenerateTriangleError, SingularMatrixError
from ministokes.femspace import (
    DofMap, apply_dirichlet, assemble_divergence, assemble_load, assemble_pressure_mean,
    assemble_scalar_stiffness, assemble_stiffness, barycentric_gradients, build_saddle_system, eval_basis,
    ilu_ordering, solve,
)
from ministokes.mesh import UNIT_SQUARE, Mesh
from ministokes.quadrature import rule_for_degree
from ministokes.solver import direct_solve

from conftest import cached_mesh, random_triangle

X, Y = sp.symbols("x y")
UNIT_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def single_triangle_mesh(corners=UNIT_TRI):
    return Mesh(corners, [[0, 1, 2]], [True] * 3, UNIT_SQUARE)


def reference_integrals():
    # exact element integrals on the unit right triangle via sympy
    lam = [1 - X - Y, X, Y]
    funcs = lam + [lam[0] * lam[1] * lam[2]]
    grads = [(sp.diff(f, X), sp.diff(f, Y)) for f in funcs]
    tri = lambda e: sp.integrate(sp.integrate(e, (Y, 0, 1 - X)), (X, 0, 1))
    K = [[tri(gi[0] * gj[0] + gi[1] * gj[1]) for gj in grads] for gi in grads]
    # B[i][j][c] = -int lam_i d(psi_j)/dx_c
    Bx = [[-tri(lam[i] * grads[j][0]) for j in range(4)] for i in range(3)]
    By = [[-tri(lam[i] * grads[j][1]) for j in range(4)] for i in range(3)]
    M = [tri(f) for f in funcs]
    return (np.array(K, dtype=float), np.array(Bx, dtype=float), np.array(By, dtype=float),
            np.array(M, dtype=float))


REF_K, REF_BX, REF_BY, REF_MASS = reference_integrals()


def linear_problem(a, b, p0, ux=(1.0, 0.0, 0.0), uy=(0.0, 0.0, -1.0)):
    """u = (ux0 + ux1 y .., ...) divergence free linear field, p = p0 + a x + b y."""
    vx = lambda x, y: ux[0] * x + ux[1] * y + ux[2] + 0 * y
    vy = lambda x, y: uy[0] * x + uy[1] + uy[2] * y + 0 * x
    return SimpleNamespace(
        id=None, polynomial=True, load_degree=3,
        forcing=lambda x, y: (np.full(np.shape(x), a), np.full(np.shape(x), b)),
        boundary_velocity=lambda x, y: (vx(x, y), vy(x, y)),
        velocity=(vx, vy), pressure=lambda x, y: p0 + a * x + b * y,
    )


# --- basis ---------------------------------------------------------------------

def test_eval_basis_at_centroid():
    v = eval_basis(UNIT_TRI, [1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(v.phi, [1 / 3] * 3)
    assert v.bubble == pytest.approx(1 / 27)
    np.testing.assert_allclose(v.grad_bubble, [0.0, 0.0], atol=1e-16)
    np.testing.assert_allclose(v.grad_phi, [[-1, -1], [1, 0], [0, 1]])


def test_eval_basis_bubble_vanishes_on_edges():
    for bary in ([1, 0, 0], [0.5, 0.5, 0], [0, 0.3, 0.7]):
        assert eval_basis(UNIT_TRI, bary).bubble == 0.0


def test_eval_basis_rejects_bad_input():
    with pytest.raises(ValueError):
        eval_basis(UNIT_TRI, [0.5, 0.5, 0.5])
    with pytest.raises(DegenerateTriangleError):
        eval_basis([[0, 0], [1, 1], [2, 2]], [1 / 3] * 3)
    with pytest.raises(DegenerateTriangleError):
        eval_basis(UNIT_TRI[[0, 2, 1]], [1 / 3] * 3)


@given(st.integers(0, 10**6))
def test_barycentric_gradients_partition_of_unity(seed):
    tri = random_triangle(np.random.default_rng(seed), 1.0)
    g, area = barycentric_gradients(tri[None])
    np.testing.assert_allclose(g[0].sum(axis=0), 0.0, atol=1e-9 * np.abs(g).max())
    # grad l_i . (x_j - x_k) = delta_ij - delta_ik
    for i in range(3):
        for j in range(3):
            assert g[0, i] @ (tri[j] - tri[0]) == pytest.approx(float(i == j) - float(i == 0), abs=1e-8)


# --- element matrices -----------------------------------------------------------

def test_p1_stiffness_on_unit_triangle():
    K = assemble_scalar_stiffness(single_triangle_mesh()).toarray()
    np.testing.assert_allclose(K[:3, :3], [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)
    np.testing.assert_allclose(K, REF_K, atol=1e-14)
    assert K[3, 3] == pytest.approx(1 / 90)


def test_divergence_on_unit_triangle():
    B = assemble_divergence(single_triangle_mesh()).toarray()
    # columns: ux vertices, ux bubble, uy vertices, uy bubble
    np.testing.assert_allclose(B[:, :4], REF_BX, atol=1e-15)
    np.testing.assert_allclose(B[:, 4:], REF_BY, atol=1e-15)


def test_load_of_constant_forcing():
    F = assemble_load(single_triangle_mesh(), lambda x, y: (np.ones_like(x), 2 * np.ones_like(x)),
                      rule_for_degree(4))
    np.testing.assert_allclose(F[:4], REF_MASS, atol=1e-15)
    np.testing.assert_allclose(F[4:], 2 * REF_MASS, atol=1e-15)
    assert REF_MASS[3] == pytest.approx(0.5 / 60)


@given(st.integers(0, 10**6), st.floats(0.01, 10))
def test_nodal_bubble_decoupling(seed, scale):
    tri = random_triangle(np.random.default_rng(seed), scale)
    K = assemble_scalar_stiffness(single_triangle_mesh(tri)).toarray()
    assert np.max(np.abs(K[:3, 3])) <= 1e-12 * np.max(np.abs(K))
    np.testing.assert_allclose(K[:3, :3].sum(axis=1), 0.0, atol=1e-12 * np.max(np.abs(K)))
    np.testing.assert_allclose(K, K.T, atol=0)


# --- global assembly ----------------------------------------------------------

@pytest.fixture(scope="module")
def sys01():
    return build_saddle_system(cached_mesh(0.1), problem(1))


def test_dofmap_counts(mesh01):
    dm = DofMap.from_mesh(mesh01)
    nv, nt = mesh01.n_vertices, mesh01.n_triangles
    assert dm.n_scalar == nv + nt and dm.n_velocity == 2 * (nv + nt) and dm.n_pressure == nv
    assert len(dm.free) + len(dm.constrained) == dm.n_velocity
    assert len(np.intersect1d(dm.free, dm.constrained)) == 0
    assert dm.vertex_dof(1, 0) == nv + nt and dm.bubble_dof(1, 0) == 2 * nv + nt
    assert dm.bubble_dof(0, nt - 1) == nv + nt - 1


def test_rows_of_mean_vector(mesh01):
    c = assemble_pressure_mean(mesh01)
    assert c.sum() == pytest.approx(1.0, abs=1e-14)
    # c_q equals a third of the incident triangle areas
    q = 5
    inc = np.any(mesh01.triangles == q, axis=1)
    assert c[q] == pytest.approx(mesh01.areas()[inc].sum() / 3)


def test_divergence_annihilates_constants(mesh01):
    B = assemble_divergence(mesh01)
    dm = DofMap.from_mesh(mesh01)
    one = np.ones(dm.n_pressure)
    BT1 = B.T @ one
    interior = np.flatnonzero(~mesh01.boundary)
    bubbles = np.concatenate([dm.bubble_dof(0, np.arange(dm.n_triangles)), dm.bubble_dof(1, np.arange(dm.n_triangles))])
    assert np.max(np.abs(BT1[bubbles])) <= 1e-15
    assert np.max(np.abs(BT1[dm.vertex_dof(0, interior)])) <= 1e-15
    assert np.max(np.abs(BT1[dm.vertex_dof(1, interior)])) <= 1e-15
    # constant velocity is divergence free
    u = np.zeros(dm.n_velocity)
    u[dm.vertex_dof(0, np.arange(dm.n_vertices))] = 2.0
    u[dm.vertex_dof(1, np.arange(dm.n_vertices))] = -1.0
    assert np.max(np.abs(B @ u)) <= 1e-14


def test_stiffness_symmetric_positive_definite(sys01):
    nu = sys01.n_free_velocity
    Aff = sys01.matrix[:nu, :nu]
    assert abs(Aff - Aff.T).max() == 0
    np.linalg.cholesky(Aff.toarray())
    assert sys01.A.shape == (sys01.dofmap.n_velocity,) * 2
    assert sps.isspmatrix_csr(sys01.matrix) and sys01.matrix.has_sorted_indices


def test_augmented_structure(sys01):
    K = sys01.matrix
    dm = sys01.dofmap
    nu, npr = sys01.n_free_velocity, dm.n_pressure
    assert K.shape == (nu + npr + 1,) * 2
    np.testing.assert_allclose(K[nu:nu + npr, -1].toarray().ravel(), sys01.c)
    assert abs(K - K.T).max() == 0
    # the pressure-pressure block is empty
    assert K[nu:nu + npr, nu:nu + npr].nnz == 0


def test_unaugmented_system_is_singular(sys01):
    K = sys01.saddle_matrix(augmented=False)
    with pytest.raises(SingularMatrixError):
        direct_solve(K, np.ones(K.shape[0]))


def test_apply_dirichlet_lifting(mesh01):
    dm = DofMap.from_mesh(mesh01)
    A, B = assemble_stiffness(mesh01), assemble_divergence(mesh01)
    rng = np.random.default_rng(0)
    F = rng.standard_normal(dm.n_velocity)
    g = np.zeros(dm.n_velocity)
    g[dm.constrained] = rng.standard_normal(len(dm.constrained))
    A_ff, B_f, ru, rp = apply_dirichlet(A, B, F, dm, g)
    # any u with u_D = g_D: full residual equals lifted residual on free rows
    u = g.copy()
    u[dm.free] = rng.standard_normal(len(dm.free))
    np.testing.assert_allclose((F - A @ u)[dm.free], ru - A_ff @ u[dm.free], atol=1e-12)
    np.testing.assert_allclose(-(B @ u), rp - B_f @ u[dm.free], atol=1e-12)


def test_ilu_ordering_swaps_last_two(sys01):
    perm = ilu_ordering(sys01)
    n = sys01.size
    assert sorted(perm) == list(range(n))
    assert perm[-1] == n - 2 and perm[-2] == n - 1


# --- solutions ------------------------------------------------------------------

@pytest.mark.parametrize("seed", [None, 4])
def test_patch_linear_velocity_linear_pressure(seed):
    # linear u and p lie in the discrete space, so the solve is exact
    prob = linear_problem(1.0, -2.0, 0.5, ux=(1.0, 0.5, 0.2), uy=(0.3, -0.1, -1.0))
    mesh = cached_mesh(0.2, seed=seed)
    sol = solve(build_saddle_system(mesh, prob))
    x, y = mesh.vertices.T
    vx, vy = prob.velocity
    np.testing.assert_allclose(sol.nodal_velocity[:, 0], vx(x, y), atol=1e-10)
    np.testing.assert_allclose(sol.nodal_velocity[:, 1], vy(x, y), atol=1e-10)
    np.testing.assert_allclose(sol.bubble_velocity, 0.0, atol=1e-10)
    p = prob.pressure(x, y)
    p = p - assemble_pressure_mean(mesh) @ p
    np.testing.assert_allclose(sol.p, p, atol=1e-10)


def test_solution_satisfies_discrete_equations(sys01):
    sol = solve(sys01)
    assert sol.report.converged
    assert abs(sys01.c @ sol.p) <= 1e-12
    # discrete incompressibility on the full vector
    assert np.max(np.abs(sys01.B @ sol.u)) <= 1e-11
    # momentum: A u + B^T p = F on free rows
    r = sys01.F - sys01.A @ sol.u - sys01.B.T @ sol.p
    assert np.max(np.abs(r[sys01.dofmap.free])) <= 1e-11 * max(1, np.max(np.abs(sys01.F)))
    assert abs(sol.multiplier) <= 1e-10


def test_galerkin_orthogonality(sys01):
    # the energy error is orthogonal to discrete divergence-free test functions:
    # for v = any solution of B v = 0 with v_D = 0, a(u_h, v) = F(v)
    sol = solve(sys01)
    nu = sys01.n_free_velocity
    K = sys01.matrix.toarray()
    rng = np.random.default_rng(1)
    rhs = np.concatenate([rng.standard_normal(nu), np.zeros(K.shape[0] - nu)])
    w = np.linalg.solve(K, rhs)[:nu]  # a discretely divergence free field
    v = np.zeros(sys01.dofmap.n_velocity)
    v[sys01.dofmap.free] = w
    assert np.max(np.abs(sys01.B @ v)) <= 1e-10
    lhs = v @ (sys01.A @ sol.u)
    assert lhs == pytest.approx(v @ sys01.F, rel=1e-9, abs=1e-12)


def test_nonhomogeneous_boundary_is_imposed():
    mesh = cached_mesh(0.2, domain=problem(7).domain)
    system = build_saddle_system(mesh, problem(7))
    sol = solve(system)
    bv = mesh.boundary
    gx, gy = problem(7).exact_velocity(*mesh.vertices[bv].T)
    np.testing.assert_array_equal(sol.nodal_velocity[bv, 0], gx)
    np.testing.assert_array_equal(sol.nodal_velocity[bv, 1], gy)


def test_rejects_non_finite_boundary_data(mesh01):
    prob = linear_problem(0, 0, 0)
    prob.boundary_velocity = lambda x, y: (np.full_like(x, np.nan), np.zeros_like(x))
    with pytest.raises(ValueError):
        build_saddle_system(mesh01, prob)


def test_rejects_bad_viscosity(mesh01):
    with pytest.raises(ValueError):
        assemble_scalar_stiffness(mesh01, mu=0.0)
