import numpy as np
import pytest

from phtshell.errors import ConfigurationError, DegenerateGeometryError
from phtshell.phtspace import Field, PhtSpace
from phtshell.shellgeom import (BUILTIN_SURFACES, MidSurface, builtin_surface, choose_axis, frame,
                                shell_map)
from phtshell.tmesh import HierTMesh


def test_flat_plate_frame():
    surf = builtin_surface("flat_plate", 2)
    fr = frame(surf, [[0.3, 0.7]])
    assert np.allclose(fr.v3, [[0, 0, 1]], atol=1e-14)
    for d in (fr.dv1_ds, fr.dv1_dt, fr.dv2_ds, fr.dv2_dt, fr.dv3_ds, fr.dv3_dt):
        assert np.abs(d).max() < 1e-14


def test_left_handed_triad():
    fr = frame(builtin_surface("flat_plate", 1), [[0.5, 0.5]])
    assert np.allclose(np.cross(fr.v1, fr.v2), -fr.v3)
    assert np.allclose(fr.v2, np.cross(fr.v1, fr.v3))


def test_half_cylinder_radial_at_vertices():
    n = 8
    surf = builtin_surface("half_cylinder", n, 2)
    s = np.arange(n + 1) / n
    pts = np.column_stack([s, np.full(n + 1, 0.5)])
    v3 = frame(surf, pts).v3
    radial = np.column_stack([np.cos(np.pi * s), np.sin(np.pi * s), np.zeros(n + 1)])
    # Hermite data is exact at the vertices; the sign follows S_s x S_t
    assert np.abs(np.abs(np.einsum("pi,pi->p", v3, radial)) - 1).max() < 1e-12


def test_half_cylinder_radial_between_vertices(rng):
    surf = builtin_surface("half_cylinder", 16, 2)
    pts = rng.random((50, 2))
    v3 = frame(surf, pts).v3
    radial = np.column_stack([np.cos(np.pi * pts[:, 0]), np.sin(np.pi * pts[:, 0]), np.zeros(50)])
    assert np.abs(np.cross(v3, radial)).max() < 1e-4


@pytest.mark.parametrize("name", sorted(BUILTIN_SURFACES))
def test_orthonormal_and_jacobian(name, rng):
    surf = builtin_surface(name, 4, size=100.0) if name != "half_cylinder" else builtin_surface(name, 4)
    pts = rng.random((1000, 2))
    fr = surf.frame(pts)
    for a in (fr.v1, fr.v2, fr.v3):
        assert np.abs(np.linalg.norm(a, axis=1) - 1).max() < 1e-12
    for a, b in ((fr.v1, fr.v2), (fr.v2, fr.v3), (fr.v1, fr.v3)):
        assert np.abs(np.einsum("pi,pi->p", a, b)).max() < 1e-12
    for z in (-1.0, 0.0, 1.0):
        _, _, det = shell_map(surf, pts, z)
        assert np.all(np.abs(det) > 0)


@pytest.mark.parametrize("name", ["cylindrical_panel", "saddle", "spherical_cap", "wavy"])
def test_frame_derivatives_match_fd(name, rng):
    surf = builtin_surface(name, 4, size=100.0)
    pts = 0.05 + 0.9 * rng.random((20, 2))
    fr = surf.frame(pts)
    h = 1e-5
    # components that vanish are compared against the overall derivative size
    scale = max(np.abs(getattr(fr, a)).max() for a in ("dv1_ds", "dv1_dt", "dv2_ds", "dv2_dt", "dv3_ds", "dv3_dt"))
    for k, (a, b) in enumerate((("dv1_ds", "dv1_dt"), ("dv2_ds", "dv2_dt"), ("dv3_ds", "dv3_dt"))):
        name_v = ("v1", "v2", "v3")[k]
        for d, (attr, step) in enumerate(((a, [h, 0]), (b, [0, h]))):
            plus = getattr(surf.frame(pts + step), name_v)
            minus = getattr(surf.frame(pts - step), name_v)
            fd = (plus - minus) / (2 * h)
            an = getattr(fr, attr)
            assert np.abs(fd - an).max() / scale < 1e-6


def test_flat_plate_shell_map():
    surf = builtin_surface("flat_plate", 1, size=1.0, h=5.0)
    X, J, det = shell_map(surf, [0.25, 0.5], 0.0)
    assert np.allclose(X, [0.25, 0.5, 0])
    assert np.allclose(J, np.diag([1.0, 1.0, 2.5]))
    assert det == pytest.approx(2.5)
    assert shell_map(surf, [0.25, 0.5], 0.6)[2] == pytest.approx(shell_map(surf, [0.25, 0.5], -0.6)[2])


def test_midsurface_at_zeta_zero(rng):
    surf = builtin_surface("wavy", 4, size=100.0)
    pts = rng.random((20, 2))
    X, _, _ = shell_map(surf, pts, 0.0)
    assert np.allclose(X, surf(pts))


def test_thickness_collapse(rng):
    """Summing h/2 N_i over the basis equals the constant h/2."""
    surf = builtin_surface("saddle", 3, size=100.0)
    pts = rng.random((100, 2))
    N = surf.geometry.space.basis_matrix(pts)[0]
    X, _, _ = shell_map(surf, pts, 0.8)
    Xsum = surf(pts) + 0.8 * (N @ np.full(N.shape[1], surf.h / 2))[:, None] * surf.frame(pts).v3
    assert np.abs(X - Xsum).max() < 1e-12 * 100


def test_axis_choice():
    assert choose_axis(builtin_surface("flat_plate", 1)) == 0
    assert builtin_surface("half_cylinder", 4).axis == 2


def test_degenerate_surface():
    sp = PhtSpace(HierTMesh(1, 1))
    geom = Field(sp, np.zeros((16, 3)))
    with pytest.raises(DegenerateGeometryError):
        MidSurface(geom)


def test_bad_inputs():
    surf = builtin_surface("flat_plate", 1)
    with pytest.raises(ConfigurationError):
        shell_map(surf, [0.5, 0.5], 1.5)
    with pytest.raises(ConfigurationError):
        MidSurface(surf.geometry, h=-1.0)
    with pytest.raises(ConfigurationError):
        builtin_surface("torus", 2)
