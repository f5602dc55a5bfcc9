"""MINI element (P1 + cubic bubble velocity, P1 pressure) assembly.

Velocity unknowns are numbered component by component. Within a component
the vertices come first, then one bubble per triangle::

    [ux at vertices | ux bubbles | uy at vertices | uy bubbles]

Pressure has one unknown per vertex. The discrete system is closed with a
Lagrange multiplier enforcing zero pressure mean, so the solved matrix is

    [[A_ff, B_f^T, 0],
     [B_f,  0,     c],
     [0,    c^T,   0]]

over the free (non-Dirichlet) velocity unknowns, the pressures and the
multiplier.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriangleError
from .quadrature import rule_for_degree, select_degree

STIFFNESS_DEGREE = 4
DIVERGENCE_DEGREE = 4


@dataclass(frozen=True)
class MiniBasisValues:
    phi: np.ndarray  # (..., 3)
    grad_phi: np.ndarray  # (3, 2)
    bubble: np.ndarray  # (...)
    grad_bubble: np.ndarray  # (..., 2)


def barycentric_gradients(corners):
    """Gradients of the three barycentric coordinates and the triangle areas.

    Parameters
    ----------
    corners : ndarray, shape (m, 3, 2)

    Returns
    -------
    grads : ndarray, shape (m, 3, 2)
    areas : ndarray, shape (m,)
    """
    p = np.asarray(corners, dtype=float)
    x, y = p[..., 0], p[..., 1]
    det = (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - (x[..., 2] - x[..., 0]) * (y[..., 1] - y[..., 0])
    if np.any(~(det > 0)):
        bad = np.flatnonzero(~(np.atleast_1d(det) > 0))
        raise DegenerateTriangleError(f"triangle(s) {bad[:5].tolist()} have non-positive area")
    g = np.empty(p.shape)
    g[..., 0, 0] = y[..., 1] - y[..., 2]
    g[..., 0, 1] = x[..., 2] - x[..., 1]
    g[..., 1, 0] = y[..., 2] - y[..., 0]
    g[..., 1, 1] = x[..., 0] - x[..., 2]
    g[..., 2, 0] = y[..., 0] - y[..., 1]
    g[..., 2, 1] = x[..., 1] - x[..., 0]
    g /= det[..., None, None]
    return g, 0.5 * det


def _bubble_factors(bary):
    """d(l0*l1*l2)/d(l_k) at barycentric points, shape (..., 3)."""
    l0, l1, l2 = bary[..., 0], bary[..., 1], bary[..., 2]
    return np.stack([l1 * l2, l0 * l2, l0 * l1], axis=-1)


def eval_basis(corners, bary):
    """Evaluate the MINI basis of one triangle at barycentric point(s).

    Parameters
    ----------
    corners : array_like, shape (3, 2)
    bary : array_like, shape (3,) or (n, 3)
        Barycentric coordinates; each row must sum to one.
    """
    bary = np.asarray(bary, dtype=float)
    if not np.allclose(bary.sum(axis=-1), 1.0, rtol=0, atol=1e-12):
        raise ValueError("barycentric coordinates must sum to 1")
    g, _ = barycentric_gradients(np.asarray(corners, dtype=float)[None])
    g = g[0]
    return MiniBasisValues(
        phi=bary.copy(),
        grad_phi=g,
        bubble=bary[..., 0] * bary[..., 1] * bary[..., 2],
        grad_bubble=_bubble_factors(bary) @ g,
    )


def _element_gradients(corners, rule):
    """Basis gradients at the rule points: shape (m, nq, 4, 2), plus areas."""
    g, area = barycentric_gradients(corners)
    nq = len(rule)
    grads = np.empty((len(area), nq, 4, 2))
    grads[:, :, :3, :] = g[:, None, :, :]
    grads[:, :, 3, :] = np.einsum("qk,mkd->mqd", _bubble_factors(rule.points), g)
    return grads, area


def _basis_values(rule):
    """Nodal and bubble values at the rule points: shape (nq, 4)."""
    b = rule.points
    return np.column_stack([b, b[:, 0] * b[:, 1] * b[:, 2]])


@dataclass(frozen=True)
class DofMap:
    n_vertices: int
    n_triangles: int
    boundary_vertices: np.ndarray

    @classmethod
    def from_mesh(cls, mesh):
        bv = np.flatnonzero(mesh.boundary)
        bv.setflags(write=False)
        return cls(mesh.n_vertices, mesh.n_triangles, bv)

    @property
    def n_scalar(self):
        return self.n_vertices + self.n_triangles

    @property
    def n_velocity(self):
        return 2 * self.n_scalar

    @property
    def n_pressure(self):
        return self.n_vertices

    def vertex_dof(self, comp, vertex):
        return comp * self.n_scalar + np.asarray(vertex)

    def bubble_dof(self, comp, tri):
        return comp * self.n_scalar + self.n_vertices + np.asarray(tri)

    def element_dofs(self, triangles):
        """Scalar-block indices per triangle: 3 vertices then the bubble."""
        t = np.asarray(triangles)
        return np.column_stack([t, self.n_vertices + np.arange(len(t))])

    @property
    def constrained(self):
        bv = self.boundary_vertices
        return np.concatenate([self.vertex_dof(0, bv), self.vertex_dof(1, bv)])

    @property
    def free(self):
        mask = np.ones(self.n_velocity, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)


def _scatter(rows, cols, vals, shape):
    m = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def assemble_scalar_stiffness(mesh, mu=1.0, rule=None):
    """Stiffness matrix of one velocity component over vertices and bubbles."""
    if not mu > 0:
        raise ValueError("viscosity must be positive")
    rule = rule or rule_for_degree(STIFFNESS_DEGREE)
    grads, area = _element_gradients(mesh.corners(), rule)
    kloc = mu * area[:, None, None] * np.einsum("q,mqid,mqjd->mij", rule.weights, grads, grads)
    kloc = 0.5 * (kloc + kloc.transpose(0, 2, 1))  # exact symmetry
    dofs = DofMap.from_mesh(mesh).element_dofs(mesh.triangles)
    n = mesh.n_vertices + mesh.n_triangles
    rows = np.repeat(dofs[:, :, None], 4, axis=2)
    cols = np.repeat(dofs[:, None, :], 4, axis=1)
    return _scatter(rows, cols, kloc, (n, n))


def assemble_stiffness(mesh, mu=1.0, rule=None):
    """Velocity-velocity block: the scalar stiffness repeated per component."""
    k = assemble_scalar_stiffness(mesh, mu, rule)
    return sp.block_diag([k, k], format="csr")


def assemble_divergence(mesh, rule=None):
    """Pressure-velocity block with entries -integral(q div v)."""
    rule = rule or rule_for_degree(DIVERGENCE_DEGREE)
    dm = DofMap.from_mesh(mesh)
    grads, area = _element_gradients(mesh.corners(), rule)
    lam = rule.points  # pressure basis values, (nq, 3)
    # (m, 3 pressure, 4 scalar, 2 components)
    bloc = -area[:, None, None, None] * np.einsum("q,qi,mqjc->mijc", rule.weights, lam, grads)
    sdofs = dm.element_dofs(mesh.triangles)
    vcols = np.stack([sdofs, sdofs + dm.n_scalar], axis=-1)  # (m, 4, 2)
    rows = np.broadcast_to(mesh.triangles[:, :, None, None], bloc.shape)
    cols = np.broadcast_to(vcols[:, None, :, :], bloc.shape)
    return _scatter(rows, cols, bloc, (dm.n_pressure, dm.n_velocity))


def assemble_load(mesh, forcing, rule=None):
    """Load vector F_v = integral(rho*f . psi_v).

    Parameters
    ----------
    forcing : callable
        ``forcing(x, y) -> (fx, fy)``.
    rule : QuadratureRule, optional
        Defaults to the highest tabulated degree.
    """
    rule = rule or rule_for_degree(select_degree(False))
    dm = DofMap.from_mesh(mesh)
    corners = mesh.corners()
    _, area = barycentric_gradients(corners)
    xy = rule.cartesian(corners)
    fx, fy = forcing(xy[..., 0], xy[..., 1])
    psi = _basis_values(rule)
    wpsi = rule.weights[:, None] * psi  # (nq, 4)
    sdofs = dm.element_dofs(mesh.triangles)
    F = np.zeros(dm.n_velocity)
    for comp, f in enumerate((fx, fy)):
        floc = area[:, None] * (np.broadcast_to(f, xy.shape[:2]) @ wpsi)
        np.add.at(F, sdofs + comp * dm.n_scalar, floc)
    return F


def assemble_pressure_mean(mesh):
    """Vector c with c_q = integral of the pressure basis function q."""
    _, area = barycentric_gradients(mesh.corners())
    c = np.zeros(mesh.n_vertices)
    np.add.at(c, mesh.triangles, np.repeat(area[:, None] / 3.0, 3, axis=1))
    return c


def boundary_values(mesh, boundary_velocity):
    """Full-length velocity vector holding g at boundary vertices, zero elsewhere."""
    dm = DofMap.from_mesh(mesh)
    bv = dm.boundary_vertices
    gx, gy = boundary_velocity(mesh.vertices[bv, 0], mesh.vertices[bv, 1])
    g = np.zeros(dm.n_velocity)
    g[dm.vertex_dof(0, bv)] = gx
    g[dm.vertex_dof(1, bv)] = gy
    if not np.all(np.isfinite(g)):
        raise ValueError("boundary data is not finite at every boundary vertex")
    return g


def apply_dirichlet(A, B, F, dofmap, g):
    """Eliminate the Dirichlet unknowns.

    Returns the free blocks ``A_ff``, ``B_f`` and the lifted right-hand
    sides ``F_f - A_fD g_D`` (momentum) and ``-B_D g_D`` (continuity).
    """
    free, fixed = dofmap.free, dofmap.constrained
    gD = g[fixed]
    A = A.tocsr()
    B = B.tocsc()
    A_ff = A[free][:, free]
    rhs_u = F[free] - A[free][:, fixed] @ gD
    rhs_p = -(B[:, fixed] @ gD)
    return A_ff, B[:, free].tocsr(), rhs_u, rhs_p


@dataclass(frozen=True)
class AssembledSystem:
    mesh: object
    dofmap: DofMap
    A: sp.csr_matrix
    B: sp.csr_matrix
    c: np.ndarray
    F: np.ndarray
    g: np.ndarray  # prescribed velocity on constrained DOFs, zeros elsewhere
    lifting: np.ndarray  # A @ g
    matrix: sp.csr_matrix  # augmented system on free DOFs
    rhs: np.ndarray
    mu: float = 1.0
    problem_id: int = None

    @property
    def n_free_velocity(self):
        return len(self.dofmap.free)

    @property
    def size(self):
        return self.matrix.shape[0]

    def saddle_matrix(self, augmented=True):
        """The assembled matrix, optionally without the mean-value row and column."""
        if augmented:
            return self.matrix
        n = self.size - 1
        return self.matrix[:n, :n].tocsr()


def augment(A_ff, B_f, c):
    nu, npr = A_ff.shape[0], B_f.shape[0]
    cc = sp.csr_matrix(np.asarray(c, float)[:, None])
    K = sp.bmat([[A_ff, B_f.T, None],
                 [B_f, None, cc],
                 [None, cc.T, None]], format="csr")
    if K.shape != (nu + npr + 1, nu + npr + 1):
        raise AssertionError("augmented system has unexpected shape")
    K.sort_indices()
    return K


def build_saddle_system(mesh, prob, mu=1.0, load_rule=None):
    """Assemble the augmented Stokes system for a benchmark problem on a mesh."""
    dm = DofMap.from_mesh(mesh)
    A = assemble_stiffness(mesh, mu)
    B = assemble_divergence(mesh)
    c = assemble_pressure_mean(mesh)
    if load_rule is None:
        load_rule = rule_for_degree(select_degree(prob.polynomial, prob.load_degree))
    F = assemble_load(mesh, prob.forcing, load_rule)
    g = boundary_values(mesh, prob.boundary_velocity)
    A_ff, B_f, rhs_u, rhs_p = apply_dirichlet(A, B, F, dm, g)
    K = augment(A_ff, B_f, c)
    rhs = np.concatenate([rhs_u, rhs_p, [0.0]])
    return AssembledSystem(mesh, dm, A, B, c, F, g, A @ g, K, rhs, mu, getattr(prob, "id", None))


@dataclass
class DiscreteSolution:
    mesh: object
    dofmap: DofMap
    u: np.ndarray  # full velocity vector, constrained entries included
    p: np.ndarray
    multiplier: float
    report: object = None
    extra: dict = field(default_factory=dict)

    @property
    def nodal_velocity(self):
        """Vertex values, shape (n_vertices, 2)."""
        dm = self.dofmap
        return np.column_stack([self.u[dm.vertex_dof(0, np.arange(dm.n_vertices))],
                                self.u[dm.vertex_dof(1, np.arange(dm.n_vertices))]])

    @property
    def bubble_velocity(self):
        """Bubble coefficients, shape (n_triangles, 2)."""
        dm = self.dofmap
        t = np.arange(dm.n_triangles)
        return np.column_stack([self.u[dm.bubble_dof(0, t)], self.u[dm.bubble_dof(1, t)]])


def solution_from_vector(system, x, report=None):
    """Expand a solution of the augmented system to full velocity and pressure."""
    dm = system.dofmap
    nu = system.n_free_velocity
    u = system.g.copy()
    u[dm.free] = x[:nu]
    p = np.array(x[nu:nu + dm.n_pressure])
    return DiscreteSolution(system.mesh, dm, u, p, float(x[-1]), report)


def ilu_ordering(system):
    """Symmetric permutation giving the augmented matrix nonzero leading minors.

    The multiplier is moved in front of the last pressure unknown: every
    proper subset of the pressures sees a definite Schur complement, and the
    multiplier then pins the constant mode before the last pressure.
    """
    n = system.size
    nu = system.n_free_velocity
    perm = np.arange(n)
    perm[n - 2], perm[n - 1] = n - 1, n - 2
    if n - 2 < nu:
        raise ValueError("system has no pressure unknowns")
    return perm


def solve(system, config=None):
    """Solve an assembled system with preconditioned GMRES (direct fallback)."""
    from .solver import SolverConfig, solve_linear

    config = config or SolverConfig()
    perm = ilu_ordering(system)
    Kp = system.matrix[perm][:, perm].tocsr()
    y, report = solve_linear(Kp, system.rhs[perm], config)
    x = np.empty_like(y)
    x[perm] = y
    return solution_from_vector(system, x, report)
