"""Tiny anchor graphs used throughout the tests and docs."""

from __future__ import annotations

from .graph import Graph


def k2() -> Graph:
    """Two vertices joined by a unit edge."""
    return Graph(2, [(0, 1, 1.0)])


def triangle() -> Graph:
    """Unit-weight triangle on vertices 0, 1, 2."""
    return Graph(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


def path3() -> Graph:
    """Unit-weight path 0 - 1 - 2."""
    return Graph(3, [(0, 1, 1.0), (1, 2, 1.0)])


def barbell6() -> Graph:
    """Two unit-weight triangles {0,1,2} and {3,4,5} joined by the bridge (2,3)."""
    return Graph(
        6,
        [
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (3, 4, 1.0),
            (3, 5, 1.0),
            (4, 5, 1.0),
        ],
    )
