import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phtshell import shellfea as sf
from phtshell.errors import ConfigurationError, UsageError
from phtshell.phtspace import PhtSpace, refine
from phtshell.simpopt import (DesignVector, MmaState, all_design_coords, compliance_sensitivity,
                              design_var_coords, filter_matrix, filter_sensitivities, mma_update,
                              shepard_weight, volume_sensitivity)
from phtshell.tmesh import HierTMesh

from conftest import random_space

CORNERS = [(0, 0), (1, 0), (0, 1), (1, 1)]


def refined_2x2():
    sp = PhtSpace(HierTMesh(2, 2))
    e = next(e for e in sp.elements if sp.mesh.element_rect(e) == (0, 0, 0.5, 0.5))
    return refine(sp, [e])


class TestCoords:
    def test_quarter_vertex(self):
        sp = refined_2x2()
        v = sp.mesh.key_of(0.25, 0.25)
        c = design_var_coords(sp, v)
        assert np.allclose(c[0], [1 / 6, 1 / 6])
        assert np.allclose(c[2], [1 / 3, 1 / 3])
        assert len({tuple(x) for x in c}) == 4
        assert np.all((c >= 0) & (c <= 0.5))

    def test_not_basis_vertex(self):
        sp = refined_2x2()
        tj = next(v for v, c in sp.mesh.vertices.items() if not c.is_basis)
        with pytest.raises(UsageError):
            design_var_coords(sp, tj)

    def test_coords_inside_support(self, rng):
        sp = random_space(rng, max_n=3, max_levels=2)
        coords = all_design_coords(sp)
        for i in range(sp.dim):
            x0, x1, y0, y1 = sp.mesh.support_mesh(sp.anchor(i)[0])
            s, t = coords[i] * [sp.mesh.ds, sp.mesh.dt]
            assert x0 <= s <= x1 and y0 <= t <= y1

    def test_design_vector(self):
        sp = PhtSpace(HierTMesh(2, 2))
        d = DesignVector(sp, np.ones(sp.dim))
        assert d.coords.shape == (sp.dim, 2)
        with pytest.raises(ConfigurationError):
            DesignVector(sp, np.ones(3))


class TestSensitivities:
    def test_sign_and_zero_density(self, plate):
        sp = PhtSpace(HierTMesh(3, 3))
        lc = sf.LoadCase([((0.5, 0.5), (0, 0, -100.0))], CORNERS)
        mat = sf.MaterialParams()
        system = sf.assemble(plate, sp, np.full(sp.dim, 0.5), mat, lc)
        dc = compliance_sensitivity(system, sf.solve(system), mat)
        assert np.all(dc <= 0)
        system = sf.assemble(plate, sp, np.zeros(sp.dim), mat, lc)
        assert np.all(compliance_sensitivity(system, sf.solve(system), mat) == 0)

    def test_finite_difference_small(self, plate, rng):
        sp = PhtSpace(HierTMesh(3, 3))
        lc = sf.LoadCase([((0.5, 0.5), (0, 0, -100.0))], CORNERS)
        mat = sf.MaterialParams()
        disc = sf.Discretization(plate, sp, mat)
        rho = rng.uniform(0.3, 0.9, sp.dim)

        def C(r):
            s = sf.assemble(plate, sp, r, mat, lc, disc=disc)
            return sf.compliance(s, sf.solve(s))
        s = sf.assemble(plate, sp, rho, mat, lc, disc=disc)
        dc = compliance_sensitivity(s, sf.solve(s), mat)
        for i in rng.choice(sp.dim, 5, replace=False):
            e = np.zeros(sp.dim)
            e[i] = 1e-6
            fd = (C(rho + e) - C(rho - e)) / 2e-6
            assert fd == pytest.approx(dc[i], rel=1e-3)

    def test_volume_sensitivity(self, plate):
        sp = refined_2x2()
        disc = sf.Discretization(plate, sp)
        dv = volume_sensitivity(sp, disc.V0)
        assert np.all(dv > 0)
        assert dv.sum() == pytest.approx(disc.V0.sum(), rel=1e-12)


class TestFilter:
    def test_weights(self):
        assert np.allclose(shepard_weight([0, 0.5, 1, 1.5]), [3, 0.32421875, 0, 0])

    def test_uniform_values(self):
        sp = PhtSpace(HierTMesh(4, 4))
        out = filter_sensitivities(np.full(sp.dim, -2.0), np.full(sp.dim, 0.5), sp)
        assert np.allclose(out, -2.0, atol=1e-14)

    def test_self_included(self):
        sp = PhtSpace(HierTMesh(3, 3))
        W = filter_matrix(sp)
        assert np.allclose(W.diagonal(), 3.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_sign_and_bounds(self, seed):
        rng = np.random.default_rng(seed)
        sp = random_space(rng, max_n=3, max_levels=1)
        W = filter_matrix(sp)
        raw = -rng.random(sp.dim)
        rho = rng.uniform(0.0, 1.0, sp.dim)
        out = filter_sensitivities(raw, rho, W=W)
        assert np.all(out <= 0)
        q = rho * raw
        for i in range(sp.dim):
            nb = W[i].indices
            lo, hi = q[nb].min(), q[nb].max()
            den = max(rho[i], 1e-3)
            assert lo / den - 1e-12 <= out[i] <= hi / den + 1e-12

    def test_needs_space_or_matrix(self):
        with pytest.raises(UsageError):
            filter_sensitivities(np.ones(3), np.ones(3))


class TestMma:
    def test_one_dimensional(self):
        for x0 in (1.0, 0.5, 0.05):
            st_ = MmaState(1)
            x = np.array([x0])
            for _ in range(30):
                x = mma_update(x, np.array([-1.0]), 2.0 * x[0], np.array([2.0]), 0.6, st_)
            assert abs(x[0] - 0.3) < 1e-6

    def test_zero_gradient_feasible_is_stationary(self):
        st_ = MmaState(3)
        x = np.array([0.2, 0.3, 0.1])
        assert np.abs(mma_update(x, np.zeros(3), 0.6, np.ones(3), 1.0, st_) - x).max() < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_box_move_and_feasibility(self, seed):
        rng = np.random.default_rng(seed)
        n = 20
        dV = rng.uniform(0.5, 1.5, n)
        Vs = 0.4 * dV.sum()
        x = rng.uniform(0, 1, n)
        x *= min(1.0, 0.9 * Vs / (dV @ x))  # start feasible
        st_ = MmaState(n)
        for _ in range(5):
            xn = mma_update(x, -rng.random(n), dV @ x, dV, Vs, st_)
            assert np.all((xn >= 0) & (xn <= 1))
            assert np.abs(xn - x).max() <= 0.5 + 1e-12
            assert dV @ xn <= Vs * (1 + 1e-9)
            x = xn

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            mma_update(np.ones(2), np.ones(2), 1.0, np.ones(2), 0.0, MmaState(2))
        with pytest.raises(UsageError):
            mma_update(np.ones(2), np.ones(3), 1.0, np.ones(2), 1.0, MmaState(2))

    def test_reset_on_size_change(self):
        st_ = MmaState(2)
        mma_update(np.full(2, 0.5), -np.ones(2), 1.0, np.ones(2), 1.0, st_)
        out = mma_update(np.full(3, 0.5), -np.ones(3), 1.5, np.ones(3), 1.5, st_)
        assert st_.n == 3 and st_.iteration == 1 and out.shape == (3,)
