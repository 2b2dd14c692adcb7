"""Built-in example frameworks.

The ``heptagon-1`` start is rounded to two decimals and is only a rough
starting point; the two saddle tables carry full precision.
"""
from __future__ import annotations

import numpy as np

from .framework import Framework

LETTERS = "ABCDEFG"


def four_bar(theta1: float = 0.35, theta2: float = 0.2) -> Framework:
    """Four-bar ``A B C D`` with ``AB = CD = 1``, ``BC = DA = 2`` and free edge ``CD``.

    ``A = (0, 0)`` and ``B = (1, 0)``; ``theta1`` rotates ``AD`` about
    ``A`` and ``theta2`` rotates ``BC`` about ``B``. Pins: both
    coordinates of ``A`` and the second coordinate of ``B``. Both angles
    zero (or both ``pi``) is the collinear configuration with ``CD = 1``.
    """
    pts = four_bar_points(theta1, theta2)
    edges = [(2, 3), (0, 1), (1, 2), (3, 0)]
    return Framework.from_points(pts, edges, 0, rest_lengths=[1.0, 1.0, 2.0, 2.0],
                                 pins=[(0, 0), (0, 1), (1, 1)])


def four_bar_points(theta1: float, theta2: float) -> np.ndarray:
    return np.array([
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0 + 2.0 * np.cos(theta2), 2.0 * np.sin(theta2)],
        [2.0 * np.cos(theta1), 2.0 * np.sin(theta1)],
    ])


# free edge BF first, then the nine fixed bars
HEPTAGON_1_EDGES = ["BF", "AB", "BC", "CD", "DE", "EF", "FG", "GA", "AC", "DG"]
HEPTAGON_2_EDGES = ["BF", "AB", "BC", "CD", "DE", "EF", "FG", "GA", "AE", "CG"]

HEPTAGON_1_START = {
    "A": (0.0, 0.0), "B": (-1.2, 1.34), "C": (-1.11, 2.63), "D": (0.39, 5.23),
    "E": (2.56, 3.98), "F": (3.62, 2.92), "G": (1.0, 0.0),
}
HEPTAGON_1_SADDLE = {
    "A": (0.0, 0.0),
    "B": (0.776635405826052, 1.62383418070239),
    "C": (2.01192626375719, 2.02887306317142),
    "D": (3.35090912329313, 4.71348195495975),
    "E": (1.61101477589929, 2.91827509782407),
    "F": (0.465391046208262, 3.88654482779027),
    "G": (1.0, 0.0),
}
HEPTAGON_2_SADDLE = {
    "A": (0.0, 0.0),
    "B": (-0.0291611389336360, 1.79976377004764),
    "C": (-0.674484071819545, 2.92828417849913),
    "D": (1.15521103685379, 2.12068538621620),
    "E": (2.75549472728296, 0.921063733299569),
    "F": (3.70391276750481, 1.23808616307659),
    "G": (1.0, 0.0),
}


def _heptagon(coords: dict, edge_names: list) -> Framework:
    idx = {c: i for i, c in enumerate(LETTERS)}
    pts = [coords[c] for c in LETTERS]
    edges = [(idx[e[0]], idx[e[1]]) for e in edge_names]
    # pins: x_A, y_A, y_G
    return Framework.from_points(pts, edges, 0, pins=[(0, 0), (0, 1), (6, 1)])


def heptagon_1() -> Framework:
    return _heptagon(HEPTAGON_1_START, HEPTAGON_1_EDGES)


def heptagon_1_saddle() -> Framework:
    return _heptagon(HEPTAGON_1_SADDLE, HEPTAGON_1_EDGES)


def heptagon_2() -> Framework:
    return _heptagon(HEPTAGON_2_SADDLE, HEPTAGON_2_EDGES)


def triangle() -> Framework:
    return Framework.from_points([(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)], [(0, 1), (1, 2), (2, 0)], 0)


FIXTURES = {
    "four-bar": (four_bar, list("ABCD"), {"step_size": 0.05}),
    "heptagon-1": (heptagon_1, list(LETTERS), {"step_size": 0.1}),
    "heptagon-1-saddle": (heptagon_1_saddle, list(LETTERS), {"step_size": 0.1}),
    "heptagon-2": (heptagon_2, list(LETTERS), {"step_size": 0.1}),
    "triangle": (triangle, list("ABC"), {}),
}


def load_fixture(name: str) -> tuple:
    """``(framework, labels, recommended search options)``."""
    try:
        factory, labels, opts = FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
    return factory(), labels, dict(opts)
