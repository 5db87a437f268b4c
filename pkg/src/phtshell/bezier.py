"""Cubic Bernstein/Hermite helpers used by the spline space."""
from __future__ import annotations

import numpy as np


def bernstein3(u):
    """Cubic Bernstein values and first two derivatives at local coords ``u``.

    Returns an array of shape ``(3, len(u), 4)``: values, d/du, d2/du2.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = 1.0 - u
    b = np.stack([v ** 3, 3 * u * v ** 2, 3 * u ** 2 * v, u ** 3], axis=-1)
    db = np.stack([-3 * v ** 2, 3 * v ** 2 - 6 * u * v, 6 * u * v - 3 * u ** 2, 3 * u ** 2], axis=-1)
    d2b = np.stack([6 * v, -12 * v + 6 * u, 6 * v - 12 * u, 6 * u], axis=-1)
    return np.stack([b, db, d2b])


def hermite_to_bezier(h: float) -> np.ndarray:
    """Map ``[f0, f0', f1, f1']`` on an interval of length ``h`` to Bezier points."""
    return np.array([[1.0, 0.0, 0.0, 0.0],
                     [1.0, h / 3.0, 0.0, 0.0],
                     [0.0, 0.0, 1.0, -h / 3.0],
                     [0.0, 0.0, 1.0, 0.0]])


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def spline_pair(h_left: float, h_right: float) -> np.ndarray:
    """Hermite data at the shared knot of the two C1 cubic B-splines of a vertex.

    Rows are the two functions (left-leaning, right-leaning), columns are
    value and first derivative.  ``h_left``/``h_right`` are the widths of the
    two knot spans; a zero width is the clamped one-sided case.
    """
    total = h_left + h_right
    return np.array([[h_right / total, -3.0 / total],
                     [h_left / total, 3.0 / total]])


def spline_pair_bezier(h_left: float, h_right: float) -> tuple[np.ndarray, np.ndarray]:
    """Bezier points of the same two functions on the left and right spans."""
    total = h_left + h_right
    a, b = h_right / total, h_left / total
    left = np.array([[0.0, 0.0, 1.0, a], [0.0, 0.0, 0.0, b]])
    right = np.array([[a, 0.0, 0.0, 0.0], [b, 1.0, 0.0, 0.0]])
    return left, right
