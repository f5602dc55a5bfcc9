"""Uniform unstructured triangulations of rectangles.

Meshes are produced by the truss-equilibrium method of Persson and Strang
(DistMesh) with a uniform size function, then post-processed so that no
triangle has two edges on the boundary.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import Delaunay

from .errors import DegenerateTriangleError, MeshGenerationError, MeshRepairError

FSCALE = 1.2
DELTAT = 0.2
TTOL = 0.1
DPTOL = 1e-3
MAX_ITER = 20000

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Rectangle:
    ax: float
    bx: float
    ay: float
    by: float

    def __post_init__(self):
        if not (self.bx > self.ax and self.by > self.ay):
            raise ValueError(f"empty rectangle {self}")

    @property
    def width(self):
        return self.bx - self.ax

    @property
    def height(self):
        return self.by - self.ay

    @property
    def area(self):
        return self.width * self.height

    @property
    def extent(self):
        return max(abs(self.ax), abs(self.bx), abs(self.ay), abs(self.by), self.width, self.height)

    def corners(self):
        return np.array([[self.ax, self.ay], [self.bx, self.ay], [self.bx, self.by], [self.ax, self.by]])

    def signed_distance(self, p):
        x, y = p[:, 0], p[:, 1]
        return -np.minimum(np.minimum(np.minimum(y - self.ay, self.by - y), x - self.ax), self.bx - x)


UNIT_SQUARE = Rectangle(0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conformal triangulation of a rectangle.

    ``vertices`` is (N, 2), ``triangles`` is (M, 3) with counterclockwise
    vertex order, ``boundary`` flags vertices lying on the rectangle sides.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    domain: Rectangle
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name, dtype in (("vertices", float), ("triangles", np.int64), ("boundary", bool)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def corners(self):
        """Vertex coordinates per triangle, shape (M, 3, 2)."""
        return self.vertices[self.triangles]

    def areas(self):
        c = self.corners()
        return 0.5 * ((c[:, 1, 0] - c[:, 0, 0]) * (c[:, 2, 1] - c[:, 0, 1])
                      - (c[:, 2, 0] - c[:, 0, 0]) * (c[:, 1, 1] - c[:, 0, 1]))

    def edges(self):
        """Unique edges (sorted vertex pairs) and the triangle-to-edge map.

        Local edge ``k`` of a triangle is the one opposite local vertex ``k``.
        """
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1).reshape(-1, 2)
        local = np.sort(local, axis=1)
        edges, inverse = np.unique(local, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    def boundary_edges(self):
        edges, tri_edges = self.edges()
        counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
        return edges[counts == 1]

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (self.domain == other.domain
                and np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.boundary, other.boundary))

    __hash__ = None


@dataclass
class MeshQualityReport:
    q1: np.ndarray
    q2: np.ndarray
    bins: np.ndarray
    q1_hist: np.ndarray
    q2_hist: np.ndarray

    @property
    def min_q1(self):
        return float(self.q1.min())

    @property
    def min_q2(self):
        return float(self.q2.min())

    @property
    def mean_q1(self):
        return float(self.q1.mean())

    @property
    def mean_q2(self):
        return float(self.q2.mean())

    def summary(self):
        return (f"q1 min {self.min_q1:.4f} mean {self.mean_q1:.4f}; "
                f"q2 min {self.min_q2:.4f} mean {self.mean_q2:.4f}")


def _side_lengths(corners):
    c = np.asarray(corners, dtype=float)
    a = np.linalg.norm(c[..., 2, :] - c[..., 1, :], axis=-1)
    b = np.linalg.norm(c[..., 0, :] - c[..., 2, :], axis=-1)
    cc = np.linalg.norm(c[..., 1, :] - c[..., 0, :], axis=-1)
    return a, b, cc


def _signed_areas(corners):
    c = np.asarray(corners, dtype=float)
    return 0.5 * ((c[..., 1, 0] - c[..., 0, 0]) * (c[..., 2, 1] - c[..., 0, 1])
                  - (c[..., 2, 0] - c[..., 0, 0]) * (c[..., 1, 1] - c[..., 0, 1]))


def quality_measures(corners):
    """Radius-ratio (q1) and area-to-edge (q2) quality of triangles.

    Both equal 1 for an equilateral triangle and tend to 0 as the
    triangle degenerates. ``corners`` may be a single (3, 2) triangle or a
    stack (M, 3, 2); orientation is ignored.
    """
    a, b, c = _side_lengths(corners)
    area = np.abs(_signed_areas(corners))
    if np.any(~(area > 0)):
        raise DegenerateTriangleError("quality of a zero-area triangle is undefined")
    q1 = (b + c - a) * (c + a - b) * (a + b - c) / (a * b * c)
    q2 = 4.0 * np.sqrt(3.0) * area / (a * a + b * b + c * c)
    q1 = np.clip(q1, 0.0, 1.0)
    q2 = np.clip(q2, 0.0, 1.0)
    if np.ndim(q1) == 0:
        return float(q1), float(q2)
    return q1, q2


def quality_report(mesh, nbins=20):
    q1, q2 = quality_measures(mesh.corners())
    bins = np.linspace(0.0, 1.0, nbins + 1)
    return MeshQualityReport(q1, q2, bins, np.histogram(q1, bins)[0], np.histogram(q2, bins)[0])


def mesh_parameter_h(mesh):
    """Longest edge over all triangles."""
    edges, _ = mesh.edges()
    d = mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]]
    return float(np.sqrt((d * d).sum(axis=1)).max())


def _bars(t):
    b = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    return np.unique(np.sort(b, axis=1), axis=0)


def _triangulate(p, domain, geps):
    t = Delaunay(p).simplices
    pmid = p[t].mean(axis=1)
    return t[domain.signed_distance(pmid) < -geps]


def generate_mesh(domain, h0, seed=None, max_iter=MAX_ITER):
    """Generate a uniform triangulation of a rectangle.

    Parameters
    ----------
    domain : Rectangle or sequence (ax, bx, ay, by)
    h0 : float
        Target edge length.
    seed : int, optional
        Perturbs the initial lattice by at most ``0.01 * h0``.
    max_iter : int
        Iteration cap for the force-equilibrium loop.

    Returns
    -------
    Mesh
        Corner triangles have already been removed.
    """
    if not isinstance(domain, Rectangle):
        domain = Rectangle(*domain)
    if not (np.isfinite(h0) and 0 < h0 < min(domain.width, domain.height)):
        raise ValueError(f"h0={h0!r} must lie in (0, {min(domain.width, domain.height)})")

    fd = domain.signed_distance
    geps = 1e-3 * h0
    deps = np.sqrt(_EPS) * h0

    xs = np.arange(domain.ax, domain.bx + geps, h0)
    ys = np.arange(domain.ay, domain.by + geps, h0 * np.sqrt(3.0) / 2.0)
    X, Y = np.meshgrid(xs, ys)
    X[1::2, :] += h0 / 2.0
    p = np.column_stack([X.ravel(), Y.ravel()])
    p = p[fd(p) < geps]
    if seed is not None:
        rng = np.random.default_rng(seed)
        p = p + rng.uniform(-0.01 * h0, 0.01 * h0, size=p.shape)
    pfix = domain.corners()
    # lattice points that coincide with a corner give way to the fixed point
    near_fixed = np.min(np.linalg.norm(p[:, None, :] - pfix[None, :, :], axis=2), axis=1) < geps
    p = np.vstack([pfix, p[~near_fixed]])
    nfix = len(pfix)

    pold = np.full_like(p, np.inf)
    bars = None
    move = np.inf
    for it in range(1, max_iter + 1):
        if np.max(np.sqrt(((p - pold) ** 2).sum(axis=1))) / h0 > TTOL:
            pold = p.copy()
            bars = _bars(_triangulate(p, domain, geps))

        barvec = p[bars[:, 0]] - p[bars[:, 1]]
        L = np.sqrt((barvec ** 2).sum(axis=1))
        # target bar length follows the current mean bar length, so the
        # truss stays slightly compressed regardless of the point count
        F = np.maximum(FSCALE * np.sqrt(np.mean(L * L)) - L, 0.0)
        Fvec = (F / L)[:, None] * barvec
        Ftot = np.zeros_like(p)
        np.add.at(Ftot, bars[:, 0], Fvec)
        np.add.at(Ftot, bars[:, 1], -Fvec)
        Ftot[:nfix] = 0.0
        p = p + DELTAT * Ftot

        d = fd(p)
        out = d > 0
        if out.any():
            q = p[out]
            gx = (fd(q + [deps, 0.0]) - d[out]) / deps
            gy = (fd(q + [0.0, deps]) - d[out]) / deps
            g2 = gx * gx + gy * gy
            p[out] -= (d[out] / g2)[:, None] * np.column_stack([gx, gy])

        inside = d < -geps
        move = np.max(np.sqrt(((DELTAT * Ftot[inside]) ** 2).sum(axis=1))) / h0 if inside.any() else 0.0
        if move < DPTOL:
            break
    else:
        raise MeshGenerationError(
            f"mesh generation did not converge in {max_iter} iterations (last move {move:.3e} h0)",
            iterations=max_iter, last_move=move)

    p = _snap_to_boundary(p, domain, geps)
    t = _triangulate(p, domain, geps)
    t = _orient(p, t)
    scale = domain.extent
    on_boundary = np.abs(fd(p)) <= 1e-12 * scale
    used = np.unique(t)
    if len(used) != len(p):
        remap = np.full(len(p), -1)
        remap[used] = np.arange(len(used))
        p, on_boundary, t = p[used], on_boundary[used], remap[t]

    mesh = Mesh(p, t, on_boundary, domain, info={"iterations": it, "h0": h0, "seed": seed})
    mesh = smooth_corners(fix_corner_triangles(mesh))
    problems = validate_conformity(mesh)
    if problems:
        raise MeshGenerationError("generated mesh is invalid: " + "; ".join(problems), iterations=it)
    return mesh


def _snap_to_boundary(p, domain, tol):
    p = p.copy()
    for col, lo, hi in ((0, domain.ax, domain.bx), (1, domain.ay, domain.by)):
        p[np.abs(p[:, col] - lo) < tol, col] = lo
        p[np.abs(p[:, col] - hi) < tol, col] = hi
        np.clip(p[:, col], lo, hi, out=p[:, col])
    return p


def _orient(p, t):
    t = t.copy()
    neg = _signed_areas(p[t]) < 0
    t[neg] = t[neg][:, [0, 2, 1]]
    return t


def _edge_map(triangles):
    """Map each sorted edge to the list of triangles containing it."""
    emap = {}
    for ti, tri in enumerate(triangles):
        for k in range(3):
            e = tuple(sorted((tri[(k + 1) % 3], tri[(k + 2) % 3])))
            emap.setdefault(e, []).append(ti)
    return emap


def _corner_vertex(tri, emap):
    """Local index of the vertex shared by two boundary edges, else None."""
    on_bnd = [len(emap[tuple(sorted((tri[(k + 1) % 3], tri[(k + 2) % 3])))]) == 1 for k in range(3)]
    if sum(on_bnd) < 2:
        return None
    if all(on_bnd):
        return -1
    # the corner vertex is opposite the single interior edge
    return on_bnd.index(False)


def fix_corner_triangles(mesh):
    """Remove triangles with two boundary edges by diagonal exchange.

    Triangles are scanned in index order; each corner triangle is flipped
    with its neighbour across its interior edge, and the scan restarts
    until none remain.
    """
    tris = [list(map(int, t)) for t in mesh.triangles]
    p = mesh.vertices
    changed = False
    while True:
        emap = _edge_map(tris)
        for ti, tri in enumerate(tris):
            k = _corner_vertex(tri, emap)
            if k is None:
                continue
            if k == -1:
                raise MeshRepairError(f"triangle {ti} has no interior edge to flip", triangle=ti)
            v0, v1, v2 = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            nbrs = [tj for tj in emap[tuple(sorted((v1, v2)))] if tj != ti]
            tj = nbrs[0]
            d = next(v for v in tris[tj] if v not in (v1, v2))
            new_a, new_b = [v0, v1, d], [v0, d, v2]
            if _signed_areas(p[new_a]) <= 0 or _signed_areas(p[new_b]) <= 0:
                raise MeshRepairError(f"flipping corner triangle {ti} would invert an element", triangle=ti)
            tris[ti], tris[tj] = new_a, new_b
            emap = _edge_map(tris)
            if _corner_vertex(new_a, emap) is not None or _corner_vertex(new_b, emap) is not None:
                raise MeshRepairError(f"diagonal exchange cannot repair corner triangle {ti}", triangle=ti)
            changed = True
            break
        else:
            break
    if not changed:
        return mesh
    return Mesh(p, np.array(tris), mesh.boundary, mesh.domain, info=dict(mesh.info))


def _corner_patch_objective(p, t, patch):
    c = p[t[patch]]
    if np.any(_signed_areas(c) <= 0):
        return 1e6
    q1, _ = quality_measures(c)
    return float(np.sum(q1 ** -4))


def smooth_corners(mesh, rings=2):
    """Relax vertices near the rectangle corners to improve element quality.

    Diagonal exchange leaves two fairly obtuse triangles at a corner. The
    vertices within `rings` edge-rings of each corner (the corner itself
    excluded) are moved to minimise the sum of ``q1**-4`` over the touched
    triangles; boundary vertices slide along their side. Topology is kept.
    """
    p = mesh.vertices.copy()
    t = mesh.triangles
    dom = mesh.domain
    tol = 1e-12 * dom.extent
    # on coarse meshes one corner's rings reach the others; all stay fixed
    fixed = {int(np.argmin(np.linalg.norm(p - c, axis=1))) for c in dom.corners()}
    lo, hi = np.array([dom.ax, dom.ay]), np.array([dom.bx, dom.by])
    for corner in dom.corners():
        ci = int(np.argmin(np.linalg.norm(p - corner, axis=1)))
        ring = {ci}
        for _ in range(rings):
            ring |= set(t[np.isin(t, list(ring)).any(axis=1)].ravel().tolist())
        free = sorted(ring - fixed)
        if not free:
            continue
        patch = np.flatnonzero(np.isin(t, free).any(axis=1))
        # per free vertex: which coordinates may move
        axes = []
        for v in free:
            x, y = p[v]
            if not mesh.boundary[v]:
                axes.append((0, 1))
            elif abs(x - dom.ax) <= tol or abs(x - dom.bx) <= tol:
                axes.append((1,))
            else:
                axes.append((0,))

        def unpack(z, base=p):
            q = base.copy()
            k = 0
            for v, ax in zip(free, axes):
                for a in ax:
                    q[v, a] = z[k]
                    k += 1
            return q

        def objective(z):
            q = unpack(z)
            if np.any(q[free] < lo) or np.any(q[free] > hi):
                return 1e300
            return _corner_patch_objective(q, t, patch)

        z0 = np.array([p[v, a] for v, ax in zip(free, axes) for a in ax])
        f0 = _corner_patch_objective(p, t, patch)
        res = minimize(objective, z0, method="Nelder-Mead",
                       options={"maxiter": 20000, "xatol": 1e-10, "fatol": 1e-12})
        res = minimize(objective, res.x, method="Powell")
        if res.fun < f0:
            p = unpack(res.x)
    return Mesh(p, t, mesh.boundary, dom, info=dict(mesh.info))


def count_corner_triangles(mesh):
    emap = _edge_map(mesh.triangles.tolist())
    return sum(_corner_vertex(t, emap) is not None for t in mesh.triangles.tolist())


def validate_conformity(mesh):
    """List every violated mesh invariant; an empty list means valid."""
    findings = []
    p, t = mesh.vertices, mesh.triangles
    if t.size == 0:
        return ["mesh has no triangles"]
    if t.min() < 0 or t.max() >= len(p):
        return ["triangle references a missing vertex"]
    if not np.all(np.isfinite(p)):
        findings.append("non-finite vertex coordinates")
    repeated = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
    for ti in np.flatnonzero(repeated):
        findings.append(f"orientation: triangle {ti} repeats a vertex")
    areas = mesh.areas()
    for ti in np.flatnonzero(~repeated & (areas <= 0)):
        findings.append(f"orientation: triangle {ti} is clockwise or degenerate")

    edges, tri_edges = mesh.edges()
    counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
    for e in edges[counts > 2]:
        findings.append(f"conformity: edge {tuple(e)} shared by more than two triangles")
    dom = mesh.domain
    tol = 1e-12 * dom.extent
    bnd = edges[counts == 1]
    dist = np.abs(dom.signed_distance(p))
    for e in bnd:
        a, b = p[e[0]], p[e[1]]
        on_side = (dist[e[0]] <= tol and dist[e[1]] <= tol
                   and (abs(a[0] - b[0]) <= tol or abs(a[1] - b[1]) <= tol))
        if not on_side:
            findings.append(f"conformity: free edge {tuple(e)} is not on the domain boundary")
        if not (mesh.boundary[e[0]] and mesh.boundary[e[1]]):
            findings.append(f"boundary flag missing on edge {tuple(e)}")

    total = np.abs(areas).sum()
    if abs(total - dom.area) > 1e-12 * dom.area:
        findings.append(f"cover: triangle areas sum to {total!r}, domain area is {dom.area!r}")
    n_corner = count_corner_triangles(mesh)
    if n_corner:
        findings.append(f"corner triangles: {n_corner} triangle(s) with two boundary edges")
    return findings


def write_mesh(mesh, path):
    """Write the plain-text ``mesh2d 1`` format."""
    lines = ["mesh2d 1", f"vertices {mesh.n_vertices}"]
    for i, ((x, y), b) in enumerate(zip(mesh.vertices, mesh.boundary)):
        lines.append(f"{i} {x:.17g} {y:.17g} {int(b)}")
    lines.append(f"triangles {mesh.n_triangles}")
    for i, (a, b, c) in enumerate(mesh.triangles):
        lines.append(f"{i} {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path, domain=None):
    """Read a ``mesh2d 1`` file. The domain defaults to the vertex bounding box."""
    tokens = Path(path).read_text().split("\n")
    lines = [ln.split() for ln in tokens if ln.strip()]
    if lines[0] != ["mesh2d", "1"]:
        raise ValueError(f"{path}: not a mesh2d version 1 file")
    if lines[1][0] != "vertices":
        raise ValueError(f"{path}: expected 'vertices' header")
    nv = int(lines[1][1])
    vrows = lines[2:2 + nv]
    xy = np.array([[float(r[1]), float(r[2])] for r in vrows])
    flags = np.array([r[3] == "1" for r in vrows])
    hdr = lines[2 + nv]
    if hdr[0] != "triangles":
        raise ValueError(f"{path}: expected 'triangles' header")
    nt = int(hdr[1])
    tri = np.array([[int(r[1]), int(r[2]), int(r[3])] for r in lines[3 + nv:3 + nv + nt]], dtype=np.int64)
    if domain is None:
        domain = Rectangle(xy[:, 0].min(), xy[:, 0].max(), xy[:, 1].min(), xy[:, 1].max())
    elif not isinstance(domain, Rectangle):
        domain = Rectangle(*domain)
    return Mesh(xy, tri, flags, domain)
