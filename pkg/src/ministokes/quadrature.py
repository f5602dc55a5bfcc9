"""Symmetric Gaussian quadrature on triangles.

Rules are stored in barycentric form with weights summing to one, so that

    integral over T of f  ~=  area(T) * sum_i w_i f(x(p_i))

for any triangle ``T``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._dunavant import ORBITS
from .errors import DegenerateTriangleError, UnsupportedDegreeError

MAX_DEGREE = 20


@dataclass(frozen=True)
class QuadratureRule:
    degree: int
    points: np.ndarray  # (n, 3) barycentric coordinates
    weights: np.ndarray  # (n,)

    def __len__(self):
        return len(self.weights)

    def cartesian(self, corners):
        """Map the rule points onto triangle(s) with the given corners.

        ``corners`` has shape (3, 2) or (m, 3, 2); the result has shape
        (n, 2) or (m, n, 2) respectively.
        """
        corners = np.asarray(corners, dtype=float)
        return np.einsum("qk,...kd->...qd", self.points, corners)


def _expand(orbits):
    points, weights = [], []
    for orbit in orbits:
        w = orbit[0]
        if len(orbit) == 1:
            perms = [(1 / 3, 1 / 3, 1 / 3)]
        elif len(orbit) == 2:
            a = orbit[1]
            c = 1.0 - 2.0 * a
            perms = [(a, a, c), (a, c, a), (c, a, a)]
        else:
            a, b = orbit[1], orbit[2]
            c = 1.0 - a - b
            perms = [(a, b, c), (b, a, c), (a, c, b), (c, a, b), (b, c, a), (c, b, a)]
        points.extend(perms)
        weights.extend([w] * len(perms))
    return np.array(points), np.array(weights)


@lru_cache(maxsize=None)
def rule_for_degree(degree):
    """Return the tabulated rule of lowest degree that is exact up to `degree`."""
    if int(degree) != degree or not 1 <= degree <= MAX_DEGREE:
        raise UnsupportedDegreeError(f"no triangle rule for degree {degree!r}; valid range is 1..{MAX_DEGREE}")
    degree = int(degree)
    points, weights = _expand(ORBITS[degree])
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(degree, points, weights)


def triangle_area(corners):
    """Signed area of a triangle (positive for counterclockwise vertices)."""
    (x0, y0), (x1, y1), (x2, y2) = np.asarray(corners, dtype=float)
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def integrate(f, corners, rule):
    """Integrate ``f(x, y)`` over one triangle.

    Parameters
    ----------
    f : callable
        Vectorised scalar field, called with coordinate arrays.
    corners : array_like, shape (3, 2)
        Triangle vertices.
    rule : QuadratureRule
    """
    area = triangle_area(corners)
    if not area > 0:
        raise DegenerateTriangleError(f"triangle has non-positive area {area!r}")
    xy = rule.cartesian(corners)
    return area * np.dot(rule.weights, f(xy[:, 0], xy[:, 1]))


def select_degree(polynomial, degree=None):
    """Pick a rule degree for an integrand.

    Polynomial integrands get the smallest rule that integrates them
    exactly; anything else gets the highest tabulated rule.
    """
    if not polynomial:
        return MAX_DEGREE
    if degree is None:
        raise ValueError("polynomial integrand needs a degree")
    if degree > MAX_DEGREE:
        raise UnsupportedDegreeError(f"polynomial degree {degree} exceeds the highest rule ({MAX_DEGREE})")
    return min(max(int(degree), 1), MAX_DEGREE)
