"""Manufactured Stokes problems with closed-form solutions.

Seven problems are provided: four enclosed vortices (1-4), a lid-driven
cavity with smooth lid (5), a corner flow (6) and a colliding flow (7).
Viscosity and density are both 1; forcing is the combined field rho*f.

Every field takes coordinate arrays ``x, y`` and broadcasts over them.
Vector fields return a tuple ``(fx, fy)``; the velocity gradient returns
an array of shape ``x.shape + (2, 2)`` with ``G[..., i, j] = d u_i / d x_j``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import qmc

from .mesh import Rectangle, UNIT_SQUARE

MU = 1.0
PI = np.pi
P6_MEAN = 0.9460830703671845
VERIFY_TOL = {"div": 1e-10, "momentum": 1e-8, "mean": 1e-8, "boundary": 1e-12}


def _grad(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


@dataclass(frozen=True)
class BenchmarkProblem:
    id: int
    name: str
    domain: Rectangle
    velocity: object
    pressure: object
    velocity_gradient: object
    forcing_fn: object
    boundary_fn: object
    polynomial: bool
    velocity_degree: int = None
    pressure_degree: int = None
    forcing_degree: int = None
    homogeneous: bool = True

    def exact_velocity(self, x, y):
        return self.velocity(np.asarray(x, float), np.asarray(y, float))

    def exact_pressure(self, x, y):
        return self.pressure(np.asarray(x, float), np.asarray(y, float))

    def exact_velocity_gradient(self, x, y):
        return self.velocity_gradient(np.asarray(x, float), np.asarray(y, float))

    def forcing(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        fx, fy = self.forcing_fn(x, y)
        return np.broadcast_to(fx, np.broadcast(x, y).shape), np.broadcast_to(fy, np.broadcast(x, y).shape)

    def boundary_velocity(self, x, y):
        """Prescribed velocity on the boundary; NaN away from it."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self.boundary_fn(x, y, self.domain)

    # quadrature degrees for polynomial integrands, None if non-polynomial
    @property
    def load_degree(self):
        return self.forcing_degree + 3 if self.polynomial else None

    @property
    def velocity_error_degree(self):
        return 2 * max(self.velocity_degree, 3) if self.polynomial else None

    @property
    def pressure_error_degree(self):
        return 2 * max(self.pressure_degree, 1) if self.polynomial else None


def _sides(x, y, dom, tol=1e-12):
    scale = tol * dom.extent
    return (np.abs(y - dom.by) <= scale, np.abs(x - dom.bx) <= scale,
            np.abs(y - dom.ay) <= scale, np.abs(x - dom.ax) <= scale)


def _zero_boundary(x, y, dom):
    on = np.logical_or.reduce(_sides(x, y, dom))
    z = np.where(on, 0.0, np.nan)
    return z, z.copy()


# --- problem 1 -------------------------------------------------------------

def _p1_velocity(x, y):
    ux = x**2 * (1 - x)**2 * 2 * y * (1 - y) * (2 * y - 1)
    uy = y**2 * (1 - y)**2 * 2 * x * (1 - x) * (1 - 2 * x)
    return ux, uy


def _p1_gradient(x, y):
    X, dX, d2X = x**2 * (1 - x)**2, 2 * x * (1 - x) * (1 - 2 * x), 2 * (1 - 6 * x + 6 * x**2)
    W, dW, d2W = y**2 * (1 - y)**2, 2 * y * (1 - y) * (1 - 2 * y), 2 * (1 - 6 * y + 6 * y**2)
    return _grad(-dX * dW, -X * d2W, W * d2X, dW * dX)


def _p1_pressure(x, y):
    return x * (1 - x) * (1 - y) - 1.0 / 12.0


def _p1_forcing(x, y):
    fx = (-MU * (4 * y * (1 - y) * (2 * y - 1) * ((1 - 2 * x)**2 - 2 * x * (1 - x))
                 + 12 * x**2 * (1 - x)**2 * (1 - 2 * y))
          + (1 - 2 * x) * (1 - y))
    fy = (-MU * (4 * x * (1 - x) * (1 - 2 * x) * ((1 - 2 * y)**2 - 2 * y * (1 - y))
                 + 12 * y**2 * (1 - y)**2 * (2 * x - 1))
          - x * (1 - x))
    return fx, fy


# --- problem 2 -------------------------------------------------------------

def _p2_velocity(x, y):
    ux = (x**2 - 2 * x**3 + x**4) * (2 * y - 6 * y**2 + 4 * y**3)
    uy = -(2 * x - 6 * x**2 + 4 * x**3) * (y**2 - 2 * y**3 + y**4)
    return ux, uy


def _p2_gradient(x, y):
    X, dX, d2X = x**2 - 2 * x**3 + x**4, 2 * x - 6 * x**2 + 4 * x**3, 2 - 12 * x + 12 * x**2
    W, dW, d2W = y**2 - 2 * y**3 + y**4, 2 * y - 6 * y**2 + 4 * y**3, 2 - 12 * y + 12 * y**2
    return _grad(dX * dW, X * d2W, -d2X * W, -dX * dW)


def _p2_pressure(x, y):
    return (x + y - 1) / 24.0


def _p2_forcing(x, y):
    fx = -MU * ((2 - 12 * x + 12 * x**2) * (2 * y - 6 * y**2 + 4 * y**3)
                + (x**2 - 2 * x**3 + x**4) * (-12 + 24 * y)) + 1.0 / 24.0
    fy = MU * ((2 - 12 * y + 12 * y**2) * (2 * x - 6 * x**2 + 4 * x**3)
               + (y**2 - 2 * y**3 + y**4) * (-12 + 24 * x)) + 1.0 / 24.0
    return fx, fy


# --- problem 3 -------------------------------------------------------------

def _p3_velocity(x, y):
    ux = np.sin(2 * PI * y) * (1 - np.cos(2 * PI * x))
    uy = np.sin(2 * PI * x) * (np.cos(2 * PI * y) - 1)
    return ux, uy


def _p3_gradient(x, y):
    sx, cx, sy, cy = np.sin(2 * PI * x), np.cos(2 * PI * x), np.sin(2 * PI * y), np.cos(2 * PI * y)
    w = 2 * PI
    return _grad(w * sy * sx, w * cy * (1 - cx), w * cx * (cy - 1), -w * sx * sy)


def _p3_pressure(x, y):
    return 2 * PI * (np.cos(2 * PI * y) - np.cos(2 * PI * x))


def _p3_forcing(x, y):
    fx = -4 * PI**2 * MU * np.sin(2 * PI * y) * (2 * np.cos(2 * PI * x) - 1) + 4 * PI**2 * np.sin(2 * PI * x)
    fy = 4 * PI**2 * MU * np.sin(2 * PI * x) * (2 * np.cos(2 * PI * y) - 1) - 4 * PI**2 * np.sin(2 * PI * y)
    return fx, fy


# --- problem 4 -------------------------------------------------------------
# u_y is the divergence-free partner of u_x; the printed form carries an
# extra factor x that breaks incompressibility.

def _p4_velocity(x, y):
    ex = np.exp(x)
    ux = 2 * ex * (x - 1)**2 * x**2 * (y**2 - y) * (2 * y - 1)
    uy = -ex * (x**2 - x) * (x**2 + 3 * x - 2) * (y - 1)**2 * y**2
    return ux, uy


def _p4_gradient(x, y):
    ex = np.exp(x)
    A = ex * x**2 * (x - 1)**2
    C = ex * (x**4 + 2 * x**3 - 5 * x**2 + 2 * x)  # dA/dx
    dC = ex * (x**4 + 6 * x**3 + x**2 - 8 * x + 2)
    V, dV = 2 * y**3 - 3 * y**2 + y, 6 * y**2 - 6 * y + 1
    S = y**2 * (y - 1)**2
    return _grad(2 * C * V, 2 * A * dV, -dC * S, -2 * C * V)


def _p4_pressure(x, y):
    ex = np.exp(x)
    return (-424 + 156 * np.e
            + (y**2 - y) * (-456 + ex * (x**4 * (y**2 - y + 12) + 2 * x**3 * (y**2 - y - 36)
                                         + x**2 * (-5 * y**2 + 5 * y + 228)
                                         + 2 * x * (y**2 - y - 228) + 456)))


def _p4_printed_forcing(x, y):
    ex = np.exp(x)
    fx = (-MU * (2 * ex * ((x**2 + x - 1) * (x**2 + 3 * x - 2) + (x**2 - x) * (2 * x + 3)) * (y**2 - y) * (2 * y - 1)
                 + 2 * ex * (x - 1)**2 * x**2 * (12 * y - 6))
          + (y**2 - y) * ex * (x**4 * (y**2 - y + 12) + 6 * x**3 * (y**2 - y - 4) + x**2 * (y**2 - y + 12)
                               + 8 * x * (y - y**2) + 2 * y**2 - 2 * y))
    fy = (-MU * (-ex * (x**4 + 10 * x**3 + 19 * x**2 - 6 * x - 6) * (y - 1)**2 * y**2
                 - 2 * ex * (x**2 - x) * (x**2 + 3 * x - 2) * (6 * y**2 - 6 * y + 1))
          + (2 * y - 1) * (-456 + ex * (x**4 * (y**2 - y + 12) + 2 * x**3 * (y**2 - y - 36)
                                        + x**2 * (-5 * y**2 + 5 * y + 228) + 2 * x * (y**2 - y - 228) + 456))
          + ex * (x**4 + 2 * x**3 - 5 * x**2 + 2 * x) * (2 * y - 1) * (y**2 - y))
    return fx, fy


class _DerivedForcing:
    """rho*f = -mu*lap(u) + grad(P), built symbolically on first use."""

    @cached_property
    def _fn(self):
        import sympy as sp

        x, y = sp.symbols("x y")
        ex = sp.exp(x)
        ux = 2 * ex * (x - 1)**2 * x**2 * (y**2 - y) * (2 * y - 1)
        uy = -ex * (x**2 - x) * (x**2 + 3 * x - 2) * (y - 1)**2 * y**2
        P = (-424 + 156 * sp.E
             + (y**2 - y) * (-456 + ex * (x**4 * (y**2 - y + 12) + 2 * x**3 * (y**2 - y - 36)
                                          + x**2 * (-5 * y**2 + 5 * y + 228) + 2 * x * (y**2 - y - 228) + 456)))
        lap = lambda f: sp.diff(f, x, 2) + sp.diff(f, y, 2)  # noqa: E731
        fx = sp.simplify(-MU * lap(ux) + sp.diff(P, x))
        fy = sp.simplify(-MU * lap(uy) + sp.diff(P, y))
        return sp.lambdify((x, y), (fx, fy), "numpy")

    def __call__(self, x, y):
        return self._fn(x, y)


# --- problem 5 -------------------------------------------------------------

def _p5_velocity(x, y):
    ux = (x**4 - 2 * x**3 + x**2) * (2 * y**3 - y)
    uy = -(2 * x**3 - 3 * x**2 + x) * (y**4 - y**2)
    return ux, uy


def _p5_gradient(x, y):
    X, dX = x**4 - 2 * x**3 + x**2, 4 * x**3 - 6 * x**2 + 2 * x
    H, dH = 2 * x**3 - 3 * x**2 + x, 6 * x**2 - 6 * x + 1
    R, dR = 2 * y**3 - y, 6 * y**2 - 1
    T, dT = y**4 - y**2, 4 * y**3 - 2 * y
    return _grad(dX * R, X * dR, -dH * T, -H * dT)


def _p5_pressure(x, y):
    return MU * ((4 * x**3 - 6 * x**2 + 2 * x) * (2 * y**3 - y) + 0.4 * (6 * x**5 - 15 * x**4 + 10 * x**3) * y - 0.1)


def _p5_forcing(x, y):
    fy = MU * ((12 * x - 6) * (y**4 - y**2) + (8 * x**3 - 12 * x**2 + 4 * x) * (6 * y**2 - 1)
               + 0.4 * (6 * x**5 - 15 * x**4 + 10 * x**3))
    return np.zeros_like(fy), fy


def _p5_boundary(x, y, dom):
    top, right, bottom, left = _sides(x, y, dom)
    on = top | right | bottom | left
    ux = np.where(top, x**4 - 2 * x**3 + x**2, 0.0)
    uy = np.zeros_like(ux)
    return np.where(on, ux, np.nan), np.where(on, uy, np.nan)


# --- problem 6 -------------------------------------------------------------

def _p6_velocity(x, y):
    s = np.sin(x * y)
    return -s * x, s * y


def _p6_gradient(x, y):
    s, c = np.sin(x * y), np.cos(x * y)
    return _grad(-s - x * y * c, -x**2 * c, y**2 * c, s + x * y * c)


def _p6_pressure(x, y):
    return np.cos(x * y) - P6_MEAN


def _p6_forcing(x, y):
    s, c = np.sin(x * y), np.cos(x * y)
    fx = -MU * (s * x * (x**2 + y**2) - 2 * c * y) - s * y
    fy = MU * (s * y * (x**2 + y**2) - 2 * c * x) - s * x
    return fx, fy


def _p6_boundary(x, y, dom):
    top, right, bottom, left = _sides(x, y, dom)
    ux = np.select([top, right, bottom | left], [-x * np.sin(x), -np.sin(y), 0.0], np.nan)
    uy = np.select([top, right, bottom | left], [np.sin(x), y * np.sin(y), 0.0], np.nan)
    return ux, uy


# --- problem 7 -------------------------------------------------------------

def _p7_velocity(x, y):
    return 20 * x * y**4 - 4 * x**5, 20 * x**4 * y - 4 * y**5


def _p7_gradient(x, y):
    return _grad(20 * y**4 - 20 * x**4, 80 * x * y**3, 80 * x**3 * y, 20 * x**4 - 20 * y**4)


def _p7_pressure(x, y):
    return MU * (120 * x**2 * y**2 - 20 * x**4 - 20 * y**4 - 32.0 / 6.0)


def _p7_forcing(x, y):
    z = np.zeros(np.broadcast(x, y).shape)
    return z, z.copy()


def _p7_boundary(x, y, dom):
    top, right, bottom, left = _sides(x, y, dom)
    conds = [top, right, bottom, left]
    ux = np.select(conds, [20 * x - 4 * x**5, 20 * y**4 - 4, 20 * x - 4 * x**5, -20 * y**4 + 4], np.nan)
    uy = np.select(conds, [20 * x**4 - 4, 20 * y - 4 * y**5, -20 * x**4 + 4, 20 * y - 4 * y**5], np.nan)
    return ux, uy


_PROBLEMS = {
    1: BenchmarkProblem(1, "enclosed vortex (polynomial)", UNIT_SQUARE, _p1_velocity, _p1_pressure, _p1_gradient,
                        _p1_forcing, _zero_boundary, True, 7, 3, 5),
    2: BenchmarkProblem(2, "enclosed vortex (polynomial)", UNIT_SQUARE, _p2_velocity, _p2_pressure, _p2_gradient,
                        _p2_forcing, _zero_boundary, True, 7, 1, 5),
    3: BenchmarkProblem(3, "enclosed vortex (trigonometric)", UNIT_SQUARE, _p3_velocity, _p3_pressure,
                        _p3_gradient, _p3_forcing, _zero_boundary, False),
    4: BenchmarkProblem(4, "asymmetric enclosed vortex (exponential)", UNIT_SQUARE, _p4_velocity, _p4_pressure,
                        _p4_gradient, _DerivedForcing(), _zero_boundary, False),
    5: BenchmarkProblem(5, "lid-driven cavity (smooth lid)", UNIT_SQUARE, _p5_velocity, _p5_pressure,
                        _p5_gradient, _p5_forcing, _p5_boundary, True, 7, 6, 5, homogeneous=False),
    6: BenchmarkProblem(6, "corner flow", UNIT_SQUARE, _p6_velocity, _p6_pressure, _p6_gradient,
                        _p6_forcing, _p6_boundary, False, homogeneous=False),
    7: BenchmarkProblem(7, "colliding flow", Rectangle(-1.0, 1.0, -1.0, 1.0), _p7_velocity, _p7_pressure,
                        _p7_gradient, _p7_forcing, _p7_boundary, True, 5, 4, 0, homogeneous=False),
}

PROBLEM_IDS = tuple(_PROBLEMS)

# the forcing as typeset for problem 4, kept for comparison with the derived one
P4_PRINTED_FORCING = _p4_printed_forcing


def problem(pid):
    try:
        return _PROBLEMS[int(pid)]
    except (KeyError, ValueError, TypeError):
        raise KeyError(f"unknown benchmark problem {pid!r}; choose from {list(_PROBLEMS)}") from None


# --- verification ----------------------------------------------------------

def _ridders(g, h0, nlev=10, shrink=1.4):
    """Richardson-extrapolated central differences (Ridders' tableau).

    ``g(h)`` returns a second-order central difference with step ``h``
    (an array over sample points). Returns the extrapolated value and its
    error estimate, per point.
    """
    c2 = shrink * shrink
    tab = [g(h0)]
    best = tab[0]
    err = np.full_like(best, np.inf)
    h = h0
    for i in range(1, nlev):
        h /= shrink
        new = [g(h)]
        fac = c2
        for j in range(1, i + 1):
            new.append((new[j - 1] * fac - tab[j - 1]) / (fac - 1.0))
            fac *= c2
            e = np.maximum(np.abs(new[j] - new[j - 1]), np.abs(new[j] - tab[j - 1]))
            better = e <= err
            err = np.where(better, e, err)
            best = np.where(better, new[j], best)
        tab = new
    return best, err


def fd_velocity_gradient(prob, x, y, h0=None):
    """Velocity gradient by extrapolated central differences."""
    h0 = 0.05 * max(prob.domain.width, prob.domain.height) if h0 is None else h0
    out = np.empty(np.shape(x) + (2, 2))
    for i in range(2):
        out[..., i, 0], _ = _ridders(lambda h: (prob.exact_velocity(x + h, y)[i] - prob.exact_velocity(x - h, y)[i]) / (2 * h), h0)
        out[..., i, 1], _ = _ridders(lambda h: (prob.exact_velocity(x, y + h)[i] - prob.exact_velocity(x, y - h)[i]) / (2 * h), h0)
    return out


def fd_momentum_residual(prob, x, y, mu=MU, h0=None):
    """-mu*lap(u) + grad(P) - rho*f with all derivatives taken numerically."""
    h0 = 0.05 * max(prob.domain.width, prob.domain.height) if h0 is None else h0
    u0 = prob.exact_velocity(x, y)
    fx, fy = prob.forcing(x, y)
    res = []
    for i, f in enumerate((fx, fy)):
        def lap(h, i=i):
            return ((prob.exact_velocity(x + h, y)[i] + prob.exact_velocity(x - h, y)[i]
                     + prob.exact_velocity(x, y + h)[i] + prob.exact_velocity(x, y - h)[i] - 4 * u0[i]) / (h * h))
        if i == 0:
            def dp(h):
                return (prob.exact_pressure(x + h, y) - prob.exact_pressure(x - h, y)) / (2 * h)
        else:
            def dp(h):
                return (prob.exact_pressure(x, y + h) - prob.exact_pressure(x, y - h)) / (2 * h)
        lap_u, _ = _ridders(lap, h0)
        grad_p, _ = _ridders(dp, h0)
        res.append(-mu * lap_u + grad_p - f)
    return np.stack(res, axis=-1)


def _domain_rule_points(dom, n=8, degree=20):
    """Quadrature nodes and weights for a rectangle split into 2*n*n triangles."""
    from .quadrature import rule_for_degree

    rule = rule_for_degree(degree)
    xs = np.linspace(dom.ax, dom.bx, n + 1)
    ys = np.linspace(dom.ay, dom.by, n + 1)
    tris = []
    for i in range(n):
        for j in range(n):
            a, b = (xs[i], ys[j]), (xs[i + 1], ys[j])
            c, d = (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])
            tris += [(a, b, c), (a, c, d)]
    tris = np.array(tris)
    pts = rule.cartesian(tris)
    area = dom.area / len(tris)
    w = np.broadcast_to(rule.weights * area, pts.shape[:2])
    return pts.reshape(-1, 2), w.ravel()


def domain_integral(f, dom, n=8, degree=20):
    pts, w = _domain_rule_points(dom, n, degree)
    return float(np.dot(w, f(pts[:, 0], pts[:, 1])))


@dataclass
class VerificationReport:
    problem: int
    n_samples: int
    max_div: float
    max_div_analytic: float
    max_momentum: float
    pressure_mean: float
    max_boundary_mismatch: float
    max_gradient_mismatch: float

    def ok(self, tol=VERIFY_TOL):
        return (self.max_div <= tol["div"] and self.max_div_analytic <= tol["div"]
                and self.max_momentum <= tol["momentum"] and abs(self.pressure_mean) <= tol["mean"]
                and self.max_boundary_mismatch <= tol["boundary"])


def verify_manufactured(prob, n_samples=10_000, mu=MU):
    """Check a problem's fields against the Stokes equations pointwise.

    Samples are a Halton sequence over the domain interior; boundary data is
    compared with the exact velocity at points spread along each side.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    dom = prob.domain
    # stencils may step outside the domain; all fields extend smoothly
    margin = 1e-3 * max(dom.width, dom.height)
    u = qmc.Halton(d=2, scramble=False).random(n_samples + 1)[1:]
    x = dom.ax + margin + u[:, 0] * (dom.width - 2 * margin)
    y = dom.ay + margin + u[:, 1] * (dom.height - 2 * margin)

    G_fd = fd_velocity_gradient(prob, x, y)
    G = prob.exact_velocity_gradient(x, y)
    mom = fd_momentum_residual(prob, x, y, mu)

    mean = domain_integral(prob.exact_pressure, dom) / dom.area

    s = np.linspace(0.0, 1.0, max(n_samples // 4, 2))
    bx = np.concatenate([dom.ax + s * dom.width, np.full_like(s, dom.bx), dom.ax + s * dom.width, np.full_like(s, dom.ax)])
    by = np.concatenate([np.full_like(s, dom.by), dom.ay + s * dom.height, np.full_like(s, dom.ay), dom.ay + s * dom.height])
    gx, gy = prob.boundary_velocity(bx, by)
    ex, ey = prob.exact_velocity(bx, by)
    bnd = np.max(np.maximum(np.abs(gx - ex), np.abs(gy - ey)))

    return VerificationReport(
        problem=prob.id,
        n_samples=n_samples,
        max_div=float(np.max(np.abs(G_fd[:, 0, 0] + G_fd[:, 1, 1]))),
        max_div_analytic=float(np.max(np.abs(G[:, 0, 0] + G[:, 1, 1]))),
        max_momentum=float(np.max(np.abs(mom))),
        pressure_mean=mean,
        max_boundary_mismatch=float(bnd),
        max_gradient_mismatch=float(np.max(np.abs(G - G_fd))),
    )
