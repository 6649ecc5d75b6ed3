"""
Quadrature rules on triangles in barycentric form.

Weights are normalised to sum to 1, so an element integral is
area * sum_q w_q f(x_q).
"""

import math
from typing import Dict

import numpy as np

from core.errors import ConfigurationError


class QuadratureRule:
    def __init__(self, order: int, barycentric, weights, name: str):
        self.order = order
        self.barycentric = np.asarray(barycentric, dtype=float).reshape(-1, 3)
        self.weights = np.asarray(weights, dtype=float)
        self.name = name
        self.barycentric.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def point_count(self) -> int:
        return len(self.weights)

    def interior(self) -> bool:
        """True when every point lies strictly inside the triangle"""
        return bool(np.all(self.barycentric > 0.0))

    def points(self, corners: np.ndarray) -> np.ndarray:
        """Physical points for (M, 3, 2) triangle corners -> (M, Q, 2)"""
        return np.einsum("qk,mkd->mqd", self.barycentric, corners)

    def __repr__(self) -> str:
        return f"QuadratureRule(order={self.order}, points={self.point_count})"


def _permutations(a: float, b: float):
    return [(b, a, a), (a, b, a), (a, a, b)]


def _build_rules() -> Dict[int, QuadratureRule]:
    third = 1.0 / 3.0
    rules = {
        1: QuadratureRule(1, [(third, third, third)], [1.0], "centroid"),
        2: QuadratureRule(2, _permutations(1.0 / 6.0, 2.0 / 3.0), [third] * 3, "3-point"),
    }

    vertices = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    midpoints = [(0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)]
    rules[3] = QuadratureRule(3, vertices + midpoints + [(third, third, third)],
                              [1.0 / 20.0] * 3 + [2.0 / 15.0] * 3 + [9.0 / 20.0], "7-point")

    root15 = math.sqrt(15.0)
    a1, b1 = (6.0 - root15) / 21.0, (9.0 + 2.0 * root15) / 21.0
    a2, b2 = (6.0 + root15) / 21.0, (9.0 - 2.0 * root15) / 21.0
    rules[5] = QuadratureRule(
        5,
        [(third, third, third)] + _permutations(a1, b1) + _permutations(a2, b2),
        [9.0 / 40.0] + [(155.0 - root15) / 1200.0] * 3 + [(155.0 + root15) / 1200.0] * 3,
        "7-point interior",
    )
    return rules


RULES = _build_rules()


def get_rule(order: int) -> QuadratureRule:
    """Rule exact for polynomials up to the given degree"""
    if order not in RULES:
        raise ConfigurationError(f"no quadrature rule of order {order}; choose from {sorted(RULES)}",
                                 path="quad_order")
    return RULES[order]
