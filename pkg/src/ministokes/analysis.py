"""Error norms, interpolants and convergence-rate fitting.

Fields are compared triangle by triangle at quadrature points. Three kinds
of field are understood:

* ``ExactField``: a closed-form function with an optional gradient,
* ``P1Field``: vertex values interpolated linearly,
* ``MiniVelocity``: vertex values plus one bubble coefficient per triangle.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateReportError
from .femspace import _bubble_factors, barycentric_gradients
from .quadrature import rule_for_degree, select_degree

# columns of the rate table, in display order
RATE_COLUMNS = ("err_u_L2", "err_u_H1", "err_p_L2", "err_ihu_L2", "err_ihu_H1", "err_ul_L2", "err_ul_H1")
DIV_COLUMNS = ("div_uh", "div_uhl")

# published rates per problem, same column order as RATE_COLUMNS
REFERENCE_RATES = {
    1: (2.11, 1.06, 1.48, 2.17, 1.53, 2.09, 1.03),
    2: (2.13, 1.07, 1.51, 2.18, 1.55, 2.12, 1.04),
    3: (2.09, 1.05, 1.53, 2.22, 1.66, 2.08, 1.02),
    4: (2.13, 1.07, 1.50, 2.17, 1.51, 2.12, 1.04),
    5: (2.10, 1.06, 1.41, 2.07, 1.45, 2.09, 1.04),
    6: (2.09, 1.05, 1.59, 2.09, 1.67, 2.09, 1.03),
    7: (1.96, 1.02, 1.41, 1.95, 1.32, 1.95, 1.00),
}

DEFAULT_H0 = (0.2, 0.1, 0.05, 0.025)
INTERPOLANT_DEGREE = 2
DIV_DEGREE = 4


class ExactField:
    """Closed-form field; ``value`` returns an array or a tuple of components."""

    def __init__(self, value, gradient=None):
        self.value = value
        self.gradient = gradient

    def evaluate(self, mesh, rule, grad=False):
        xy = rule.cartesian(mesh.corners())
        v = self.value(xy[..., 0], xy[..., 1])
        v = np.stack(v, axis=-1) if isinstance(v, tuple) else np.asarray(v)[..., None]
        if not grad:
            return v, None
        if self.gradient is None:
            raise ValueError("field has no gradient")
        g = np.asarray(self.gradient(xy[..., 0], xy[..., 1]))
        if g.ndim == v.ndim:  # scalar field: (..., 2) -> (..., 1, 2)
            g = g[..., None, :]
        return v, g


@dataclass
class P1Field:
    mesh: object
    values: np.ndarray  # (n_vertices,) or (n_vertices, 2)

    def _vals(self):
        v = np.asarray(self.values, dtype=float)
        return v[:, None] if v.ndim == 1 else v

    def evaluate(self, mesh, rule, grad=False):
        vt = self._vals()[self.mesh.triangles]  # (m, 3, c)
        v = np.einsum("qk,mkc->mqc", rule.points, vt)
        if not grad:
            return v, None
        g, _ = barycentric_gradients(self.mesh.corners())
        gv = np.einsum("mkc,mkd->mcd", vt, g)
        return v, np.broadcast_to(gv[:, None], (len(g), len(rule), *gv.shape[1:]))

    def __call__(self, tri, bary):
        """Value inside triangle ``tri`` at barycentric point(s)."""
        return np.asarray(bary) @ self._vals()[self.mesh.triangles[tri]]


@dataclass
class MiniVelocity:
    mesh: object
    nodal: np.ndarray  # (n_vertices, 2)
    bubble: np.ndarray  # (n_triangles, 2)

    def linear_part(self):
        return P1Field(self.mesh, self.nodal)

    def bubble_part(self):
        return MiniVelocity(self.mesh, np.zeros_like(self.nodal), self.bubble)

    def evaluate(self, mesh, rule, grad=False):
        lin = self.linear_part()
        v, g = lin.evaluate(mesh, rule, grad)
        b = rule.points[:, 0] * rule.points[:, 1] * rule.points[:, 2]
        v = v + b[None, :, None] * self.bubble[:, None, :]
        if not grad:
            return v, None
        gl, _ = barycentric_gradients(self.mesh.corners())
        gb = np.einsum("qk,mkd->mqd", _bubble_factors(rule.points), gl)  # (m, nq, 2)
        return v, g + self.bubble[:, None, :, None] * gb[:, :, None, :]

    def __call__(self, tri, bary):
        bary = np.asarray(bary, dtype=float)
        b = bary[..., 0] * bary[..., 1] * bary[..., 2]
        return bary @ self.nodal[self.mesh.triangles[tri]] + b[..., None] * self.bubble[tri]


def as_field(obj):
    if hasattr(obj, "evaluate"):
        return obj
    if callable(obj):
        return ExactField(obj)
    raise TypeError(f"cannot evaluate {type(obj).__name__} as a field")


def nodal_interpolant(f, mesh):
    """P1 interpolant: the field's values at the mesh vertices."""
    v = f(mesh.vertices[:, 0], mesh.vertices[:, 1])
    v = np.column_stack(v) if isinstance(v, tuple) else np.asarray(v, dtype=float)
    return P1Field(mesh, v)


def split_velocity(solution, dofmap=None):
    """Split a MINI velocity into its P1 part and its bubble coefficients."""
    return P1Field(solution.mesh, solution.nodal_velocity), solution.bubble_velocity


def discrete_velocity(solution):
    return MiniVelocity(solution.mesh, solution.nodal_velocity, solution.bubble_velocity)


def _weights(mesh, rule):
    _, area = barycentric_gradients(mesh.corners())
    return area[:, None] * rule.weights[None, :]


def error_L2(a, b, mesh, rule):
    """L2 norm of a - b."""
    va, _ = as_field(a).evaluate(mesh, rule)
    vb, _ = as_field(b).evaluate(mesh, rule)
    d = va - vb
    return float(np.sqrt(np.sum(_weights(mesh, rule) * np.sum(d * d, axis=-1))))


def error_H1(a, b, mesh, rule, mode="norm"):
    """H1 norm (``mode="norm"``) or semi-norm (``mode="semi"``) of a - b."""
    if mode not in ("norm", "semi"):
        raise ValueError("mode must be 'norm' or 'semi'")
    va, ga = as_field(a).evaluate(mesh, rule, grad=True)
    vb, gb = as_field(b).evaluate(mesh, rule, grad=True)
    w = _weights(mesh, rule)
    dg = ga - gb
    total = np.sum(w * np.sum(dg * dg, axis=(-2, -1)))
    if mode == "norm":
        d = va - vb
        total += np.sum(w * np.sum(d * d, axis=-1))
    return float(np.sqrt(total))


def div_L2(v, mesh, rule=None):
    """L2 norm of the divergence of a vector field."""
    rule = rule or rule_for_degree(DIV_DEGREE)
    _, g = as_field(v).evaluate(mesh, rule, grad=True)
    div = g[..., 0, 0] + g[..., 1, 1]
    return float(np.sqrt(np.sum(_weights(mesh, rule) * div * div)))


def fit_rate(pairs):
    """Least-squares slope of log(error) against log(h).

    Parameters
    ----------
    pairs : sequence of (h, error)
        At least three pairs, all positive.
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
        raise ValueError("need at least three (h, error) pairs")
    if np.any(~(arr > 0)):
        raise ValueError("h and error must be positive to fit a power law")
    slope, _ = np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)
    return float(slope)


@dataclass
class ErrorReport:
    h: float
    err_u_L2: float
    err_u_H1: float
    err_p_L2: float
    err_ihu_L2: float
    err_ihu_H1: float
    err_ul_L2: float
    err_ul_H1: float
    div_uh: float
    div_uhl: float
    err_u_H1_semi: float = None
    err_ihu_H1_semi: float = None
    err_ul_H1_semi: float = None
    h0: float = None
    n_vertices: int = None
    n_triangles: int = None
    n_unknowns: int = None
    q1_min: float = None
    q2_min: float = None
    iterations: int = None
    residual: float = None
    converged: bool = None
    method: str = None
    droptol: float = None
    pressure_mean: float = None

    def as_dict(self):
        return asdict(self)


def error_ratios(report):
    """Ratios of the full MINI velocity error to that of its linear part."""
    pairs = {"H1": (report.err_u_H1, report.err_ul_H1), "L2": (report.err_u_L2, report.err_ul_L2),
             "div": (report.div_uh, report.div_uhl)}
    out = {}
    for key, (num, den) in pairs.items():
        if den == 0:
            raise DegenerateReportError(f"{key} ratio has a zero denominator")
        out[key] = num / den
    return out


def evaluate_errors(prob, solution, h=None):
    """All error norms of one discrete solution against the exact one."""
    from .mesh import mesh_parameter_h

    mesh = solution.mesh
    u = ExactField(prob.exact_velocity, prob.exact_velocity_gradient)
    p = ExactField(prob.exact_pressure)
    uh = discrete_velocity(solution)
    uhl = uh.linear_part()
    ihu = nodal_interpolant(prob.exact_velocity, mesh)
    ph = P1Field(mesh, solution.p)

    ru = rule_for_degree(select_degree(prob.polynomial, prob.velocity_error_degree))
    rp = rule_for_degree(select_degree(prob.polynomial, prob.pressure_error_degree))
    ri = rule_for_degree(INTERPOLANT_DEGREE)
    rd = rule_for_degree(DIV_DEGREE)
    return ErrorReport(
        h=mesh_parameter_h(mesh) if h is None else h,
        err_u_L2=error_L2(u, uh, mesh, ru),
        err_u_H1=error_H1(u, uh, mesh, ru),
        err_p_L2=error_L2(p, ph, mesh, rp),
        err_ihu_L2=error_L2(ihu, uhl, mesh, ri),
        err_ihu_H1=error_H1(ihu, uhl, mesh, ri),
        err_ul_L2=error_L2(u, uhl, mesh, ru),
        err_ul_H1=error_H1(u, uhl, mesh, ru),
        div_uh=div_L2(uh, mesh, rd),
        div_uhl=div_L2(uhl, mesh, rd),
        err_u_H1_semi=error_H1(u, uh, mesh, ru, "semi"),
        err_ihu_H1_semi=error_H1(ihu, uhl, mesh, ri, "semi"),
        err_ul_H1_semi=error_H1(u, uhl, mesh, ru, "semi"),
        n_vertices=mesh.n_vertices,
        n_triangles=mesh.n_triangles,
    )


def run_level(prob, h0, seed=None, config=None, mesh=None):
    """Mesh, assemble, solve and measure one refinement level."""
    from .femspace import build_saddle_system, solve
    from .mesh import generate_mesh, quality_report
    from .solver import SolverConfig, tolerance_for

    mesh = mesh if mesh is not None else generate_mesh(prob.domain, h0, seed=seed)
    config = config or SolverConfig(tol=tolerance_for(prob.id))
    system = build_saddle_system(mesh, prob)
    sol = solve(system, config)
    rep = evaluate_errors(prob, sol)
    q = quality_report(mesh)
    rep.h0, rep.n_unknowns = h0, system.size
    rep.q1_min, rep.q2_min = q.min_q1, q.min_q2
    r = sol.report
    rep.iterations, rep.residual, rep.converged = r.iterations, r.residual, r.converged
    rep.method, rep.droptol = r.method, r.droptol
    rep.pressure_mean = float(system.c @ sol.p)
    return rep


@dataclass
class ConvergenceStudy:
    problem: int
    reports: list
    rates: dict = field(default_factory=dict)

    def __post_init__(self):
        hs = [r.h for r in self.reports]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("mesh parameters must strictly decrease across levels")
        if len(self.reports) >= 3 and not self.rates:
            for col in RATE_COLUMNS + DIV_COLUMNS:
                self.rates[col] = fit_rate([(r.h, getattr(r, col)) for r in self.reports])

    def ratios(self):
        return [error_ratios(r) for r in self.reports]


def run_study(prob, h0s=DEFAULT_H0, seed=None, config=None):
    reports = [run_level(prob, h0, seed, config) for h0 in sorted(h0s, reverse=True)]
    return ConvergenceStudy(prob.id, reports)
