"""The ten built-in load cases and their stand-in mid-surfaces.

The published cases only show their geometries as pictures, so every case
is paired with an analytic surface of a similar kind.  Loads and supports
follow the published parametric coordinates.  Forces point along -z.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .shellfea import LoadCase
from .shellgeom import BUILTIN_SURFACES, MidSurface, builtin_surface

DEFAULT_SIZE = 100.0
LINE_POINTS = 33

CORNERS = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
MIDPOINTS = [(0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)]
CENTER = [(0.5, 0.5)]


@dataclass
class CaseSpec:
    name: str
    geometry: str
    geometry_params: dict = field(default_factory=dict)
    loads: list = field(default_factory=list)
    fixed_points: list = field(default_factory=list)
    volume_fraction: float = 0.3
    description: str = ""
    support: str = "anchor"

    def __post_init__(self):
        if self.geometry not in BUILTIN_SURFACES and not str(self.geometry).endswith(".txt"):
            raise ConfigurationError(f"case {self.name}: unknown geometry {self.geometry!r}")
        if not 0 < self.volume_fraction < 1:
            raise ConfigurationError(f"case {self.name}: volume fraction must lie in (0, 1)")
        self.loads = [((float(p[0]), float(p[1])), tuple(float(g) for g in f)) for p, f in self.loads]
        self.fixed_points = [(float(p[0]), float(p[1])) for p in self.fixed_points]
        self.load_case()  # validates coordinates

    def load_case(self) -> LoadCase:
        return LoadCase(list(self.loads), list(self.fixed_points), self.support)

    def surface(self, nx: int, ny: int | None = None, h: float = 5.0) -> MidSurface:
        return builtin_surface(self.geometry, nx, ny, h=h, **self.geometry_params)


def _down(g):
    return (0.0, 0.0, -float(g))


def point_loads(points, g):
    return [((s, t), _down(g)) for s, t in points]


def cross_line_loads(g: float, n: int = LINE_POINTS):
    """``g`` spread over ``n`` evenly spaced points on each of s=1/2 and t=1/2."""
    u = np.linspace(0.0, 1.0, n)
    pts = [(0.5, float(x)) for x in u] + [(float(x), 0.5) for x in u]
    return point_loads(pts, g / n)


def _cases(size=DEFAULT_SIZE, line_points=LINE_POINTS):
    flat = {"size": size}
    cyl = {"size": size, "angle": float(np.pi / 3)}
    sad = {"size": size, "rise": 0.2}
    cap = {"size": size, "radius_factor": 1.5}
    wav = {"size": size, "amplitude": 0.15}
    c7 = [(0.2, 0.5), (0.5, 0.2), (0.2, 0.8), (0.8, 0.2), (0.5, 0.5)]
    c8 = [(0, 0), (0, 1), (1, 0), (1, 1), (0.5, 0.5)]
    c9 = [(0.2, 0.3), (0.8, 0.7), (0.2, 0.7), (0.8, 0.3)]
    g1 = [(0.25, 0.33), (0.25, 0.67), (0.75, 0.33), (0.75, 0.67)]
    g2 = [(0, 0), (0, 1), (1, 0), (1, 1), (0.25, 0), (0.75, 0), (0.25, 1), (0.75, 1),
          (0, 0.4), (0, 0.6), (1, 0.4), (1, 0.6)]
    lines = cross_line_loads(10.0, line_points)
    return [
        CaseSpec("case1", "flat_plate", flat, point_loads(CENTER, 100), CORNERS,
                 description="flat plate, centre load"),
        CaseSpec("case2", "cylindrical_panel", cyl, point_loads(CENTER, 100), CORNERS,
                 description="cylindrical panel, centre load"),
        CaseSpec("case3", "flat_plate", flat, lines, CORNERS, description="flat plate, cross line loads"),
        CaseSpec("case4", "saddle", sad, lines, CORNERS, description="hyperbolic paraboloid, cross line loads"),
        CaseSpec("case5", "spherical_cap", cap, lines, CORNERS, description="spherical cap, cross line loads"),
        CaseSpec("case6", "wavy", wav, lines, CORNERS, description="wavy shell, cross line loads"),
        CaseSpec("case7", "cylindrical_panel", cyl, point_loads(c7, 100), CORNERS,
                 description="cylindrical panel, five point loads"),
        CaseSpec("case8", "saddle", sad, point_loads(c8, 100), MIDPOINTS,
                 description="hyperbolic paraboloid, corner and centre loads, edge midpoints fixed"),
        CaseSpec("case9", "spherical_cap", cap, point_loads(c9, 100), CORNERS,
                 description="spherical cap, four point loads"),
        CaseSpec("case10", "wavy", wav, point_loads(g1, 100) + point_loads(g2, 30), CENTER,
                 description="wavy shell, two load groups, centre fixed"),
    ]


BUILTIN_CASES = {c.name: c for c in _cases()}


def load_case(name: str, size: float = DEFAULT_SIZE, line_points: int = LINE_POINTS) -> CaseSpec:
    if size != DEFAULT_SIZE or line_points != LINE_POINTS:
        table = {c.name: c for c in _cases(size, line_points)}
    else:
        table = BUILTIN_CASES
    try:
        return copy.deepcopy(table[name])
    except KeyError:
        raise ConfigurationError(f"unknown case {name!r}; available: {', '.join(table)}") from None
