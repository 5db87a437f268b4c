"""Mid-surface geometry, local frames and the volumetric shell map.

The mid-surface is a PHT-spline field with three components over a fixed
level-0 space.  Analytic stand-in surfaces are turned into such fields by
Hermite interpolation of their geometric information at the basis vertices.

Handedness: ``v2 = v1 x v3`` as prescribed, so ``(v1, v2, v3)`` is a
left-handed triad (``v1 x v2 = -v3``).  The rotation ``alpha`` turns about
``v1`` and ``beta`` about ``v2`` with the displacement ``zeta*h/2*(-alpha*v2
+ beta*v1)``; flipping the triad would flip both rotation signs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateGeometryError
from .phtspace import Field, PhtSpace, interpolate
from .tmesh import HierTMesh

AXES = np.eye(3)


def _unit(a, da_list, what, pts, tol=1e-12):
    n = np.linalg.norm(a, axis=-1)
    bad = n < tol
    if np.any(bad):
        p = pts[np.argmax(bad)] if pts is not None else None
        raise DegenerateGeometryError(f"degenerate {what} at parameter point {p}")
    u = a / n[:, None]
    outs = []
    for da in da_list:
        outs.append((da - u * np.einsum("pi,pi->p", u, da)[:, None]) / n[:, None])
    return u, outs, n


@dataclass
class LocalFrame:
    """Orthonormal shell frame at a batch of points (all arrays ``(P, 3)``)."""

    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    dv1_ds: np.ndarray
    dv1_dt: np.ndarray
    dv2_ds: np.ndarray
    dv2_dt: np.ndarray
    dv3_ds: np.ndarray
    dv3_dt: np.ndarray


def frame_from_derivatives(D: np.ndarray, axis: int, pts=None) -> LocalFrame:
    """Frame from surface derivatives ``D`` of shape (P, 6, 3).

    ``D[:, k]`` holds ``S, S_s, S_t, S_st, S_ss, S_tt``.
    """
    Ss, St, Sst, Sss, Stt = D[:, 1], D[:, 2], D[:, 3], D[:, 4], D[:, 5]
    n = np.cross(Ss, St)
    n_s = np.cross(Sss, St) + np.cross(Ss, Sst)
    n_t = np.cross(Sst, St) + np.cross(Ss, Stt)
    v3, (v3s, v3t), _ = _unit(n, [n_s, n_t], "surface normal", pts)
    a = AXES[axis]
    w = np.cross(v3, a)
    v1, (v1s, v1t), _ = _unit(w, [np.cross(v3s, a), np.cross(v3t, a)], "tangent frame", pts)
    v2 = np.cross(v1, v3)
    v2s = np.cross(v1s, v3) + np.cross(v1, v3s)
    v2t = np.cross(v1t, v3) + np.cross(v1, v3t)
    return LocalFrame(v1, v2, v3, v1s, v1t, v2s, v2t, v3s, v3t)


@dataclass
class MidSurface:
    """Shell mid-surface with constant thickness ``h``.

    ``axis`` is the global axis (0, 1, 2) crossed with the normal to get
    ``v1``.  It is chosen once per surface, see :func:`choose_axis`.
    """

    geometry: Field
    h: float = 5.0
    axis: int | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry.d != 3:
            raise ConfigurationError("mid-surface geometry needs 3 components per control point")
        if not self.h > 0:
            raise ConfigurationError(f"thickness must be positive, got {self.h}")
        if self.axis is None:
            self.axis = choose_axis(self)

    def derivatives(self, points) -> np.ndarray:
        return self.geometry.evaluate(points, "hessian")

    def __call__(self, points) -> np.ndarray:
        return self.geometry(points)

    def frame(self, points) -> LocalFrame:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return frame_from_derivatives(self.derivatives(pts), self.axis, pts)


def _normals(surf: MidSurface, pts):
    D = surf.derivatives(pts)
    n = np.cross(D[:, 1], D[:, 2])
    nn = np.linalg.norm(n, axis=1)
    if np.any(nn < 1e-12):
        raise DegenerateGeometryError(f"degenerate surface normal at {pts[np.argmin(nn)]}")
    return n / nn[:, None]


def choose_axis(surf: MidSurface, samples: int = 21) -> int:
    """Global axis least parallel to the normal over the whole surface.

    Minimises ``max |v3 . a|`` over a sample grid; ties prefer x, then y, then z.
    """
    g = (np.arange(samples) + 0.5) / samples
    pts = np.array([(s, t) for t in g for s in g])
    v3 = _normals(surf, pts)
    worst = np.abs(v3).max(axis=0)
    best = worst.min()
    return int(np.flatnonzero(worst <= best + 1e-12)[0])


def frame(surf: MidSurface, p) -> LocalFrame:
    return surf.frame(p)


def shell_map(surf: MidSurface, p, zeta):
    """Shell position ``X``, Jacobian ``J`` (rows d/ds, d/dt, d/dzeta) and det J.

    ``p`` is one point or an array of points; ``zeta`` broadcasts against it.
    """
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    zeta = np.broadcast_to(np.asarray(zeta, dtype=float), (len(pts),))
    if np.any(np.abs(zeta) > 1):
        raise ConfigurationError("zeta must lie in [-1, 1]")
    D = surf.derivatives(pts)
    fr = frame_from_derivatives(D, surf.axis, pts)
    half = 0.5 * surf.h
    z = zeta[:, None]
    X = D[:, 0] + z * half * fr.v3
    J = np.stack([D[:, 1] + z * half * fr.dv3_ds,
                  D[:, 2] + z * half * fr.dv3_dt,
                  half * fr.v3 + 0 * z], axis=1)
    det = np.linalg.det(J)
    scale = np.linalg.norm(J, axis=(1, 2)) ** 3
    if np.any(np.abs(det) < 1e-14 * scale):
        raise DegenerateGeometryError(f"singular shell Jacobian at {pts[np.argmin(np.abs(det))]}")
    if np.ndim(p) == 1:
        return X[0], J[0], det[0]
    return X, J, det


# ---------------------------------------------------------------- built-ins
def _flat_plate(size=1.0):
    L = float(size)

    def f(s, t):
        return [[L * s, L * t, 0.0], [L, 0.0, 0.0], [0.0, L, 0.0], [0.0, 0.0, 0.0]]
    return f


def _cylindrical_panel(size=1.0, angle=np.pi / 3):
    """Circular arc in s (radius ``size``, opening ``angle``), straight in t."""
    R, L, phi = float(size), float(size), float(angle)

    def f(s, t):
        th = phi * (s - 0.5)
        c, sn = np.cos(th), np.sin(th)
        return [[R * sn, L * t, R * c], [R * phi * c, 0.0, -R * phi * sn], [0.0, L, 0.0], [0.0, 0.0, 0.0]]
    return f


def _half_cylinder(radius=1.0, length=1.0):
    R, L = float(radius), float(length)

    def f(s, t):
        c, sn = np.cos(np.pi * s), np.sin(np.pi * s)
        return [[R * c, R * sn, L * t], [-np.pi * R * sn, np.pi * R * c, 0.0], [0.0, 0.0, L], [0.0, 0.0, 0.0]]
    return f


def _saddle(size=1.0, rise=0.2):
    """Hyperbolic paraboloid ``z = rise*L*((s-1/2)^2 - (t-1/2)^2) * 4``."""
    L, c = float(size), 4.0 * float(rise) * float(size)

    def f(s, t):
        a, b = s - 0.5, t - 0.5
        return [[L * s, L * t, c * (a * a - b * b)], [L, 0.0, 2 * c * a], [0.0, L, -2 * c * b], [0.0, 0.0, 0.0]]
    return f


def _spherical_cap(size=1.0, radius_factor=1.5):
    """Plan-square cap of a sphere with radius ``radius_factor*size``."""
    L = float(size)
    R = float(radius_factor) * L

    def f(s, t):
        x, y = L * (s - 0.5), L * (t - 0.5)
        q = np.sqrt(R * R - x * x - y * y)
        z = q - np.sqrt(R * R - 0.5 * L * L)
        zs = -x * L / q
        zt = -y * L / q
        zst = -x * y * L * L / q ** 3
        return [[L * s, L * t, z], [L, 0.0, zs], [0.0, L, zt], [0.0, 0.0, zst]]
    return f


def _wavy(size=1.0, amplitude=0.15):
    L, A = float(size), float(amplitude) * float(size)
    pi = np.pi

    def f(s, t):
        ss, cs, st, ct = np.sin(pi * s), np.cos(pi * s), np.sin(pi * t), np.cos(pi * t)
        return [[L * s, L * t, A * ss * st], [L, 0.0, A * pi * cs * st], [0.0, L, A * pi * ss * ct],
                [0.0, 0.0, A * pi * pi * cs * ct]]
    return f


BUILTIN_SURFACES = {
    "flat_plate": _flat_plate,
    "cylindrical_panel": _cylindrical_panel,
    "half_cylinder": _half_cylinder,
    "saddle": _saddle,
    "spherical_cap": _spherical_cap,
    "wavy": _wavy,
}


def analytic_info(name: str, **params):
    """Callable ``(s, t) -> (4, 3)`` geometric information of a built-in surface."""
    try:
        maker = BUILTIN_SURFACES[name]
    except KeyError:
        raise ConfigurationError(f"unknown geometry {name!r}; available: {', '.join(BUILTIN_SURFACES)}") from None
    return maker(**params)


def builtin_surface(name: str, nx: int, ny: int | None = None, h: float = 5.0, **params) -> MidSurface:
    """Interpolate a built-in analytic surface on an ``nx x ny`` level-0 space."""
    space = PhtSpace(HierTMesh(nx, ny or nx))
    geom = interpolate(space, analytic_info(name, **params))
    return MidSurface(geom, h=h, name=name, params=dict(params))


def surface_from_control_net(space: PhtSpace, text: str, h: float = 5.0) -> MidSurface:
    """Mid-surface from ``s t slot x y z`` control-net lines."""
    from .phtspace import field_from_text
    return MidSurface(field_from_text(space, text), h=h, name="control_net")
