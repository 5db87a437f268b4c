"""Design variables, SIMP sensitivities, the Shepard sensitivity filter and MMA."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .errors import ConfigurationError, UsageError
from .phtspace import SLOT_FACTORS, PhtSpace
from .shellfea import AssembledSystem, MaterialParams

RHO_FLOOR = 1e-3


# ------------------------------------------------------------- coordinates
def design_var_coords(space: PhtSpace, v) -> np.ndarray:
    """Parametric coordinates (4, 2) of the four variables of basis vertex ``v``.

    Each variable sits one third of the way from ``v`` towards the corner of
    its support mesh in the direction of its slot.
    """
    mesh = space.mesh
    if v not in space.vertex_index:
        raise UsageError(f"{mesh.param(v)} is not a basis vertex")
    x0, x1, y0, y1 = mesh.support_mesh(v)
    x, y = v
    sx = ((x0 + 2 * x) / 3, (2 * x + x1) / 3)
    sy = ((y0 + 2 * y) / 3, (2 * y + y1) / 3)
    return np.array([[sx[a] / mesh.ds, sy[b] / mesh.dt] for a, b in SLOT_FACTORS])


def all_design_coords(space: PhtSpace) -> np.ndarray:
    """Coordinates of every design variable, (dim, 2), in basis order."""
    return np.concatenate([design_var_coords(space, v) for v in space.vertices])


@dataclass
class DesignVector:
    """Density coefficients of one space with their filter coordinates."""

    space: PhtSpace
    values: np.ndarray
    coords: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.dim,):
            raise ConfigurationError(f"expected {self.space.dim} coefficients, got {self.values.shape}")
        if self.coords is None:
            self.coords = all_design_coords(self.space)


# ----------------------------------------------------------- sensitivities
def compliance_sensitivity(system: AssembledSystem, U, material: MaterialParams) -> np.ndarray:
    """Raw dC/drho_i from element energies at the element-centre densities."""
    disc = system.disc
    energy = disc.element_energies(U)
    dc_e = -material.dyoung(system.rho_e) * energy
    return disc.center.T @ dc_e


def volume_sensitivity(space: PhtSpace, V0) -> np.ndarray:
    return space.center_matrix().T @ np.asarray(V0, dtype=float)


# ------------------------------------------------------------------ filter
def shepard_weight(r):
    r = np.asarray(r, dtype=float)
    return np.where(r < 1.0, np.clip(1.0 - r, 0.0, None) ** 6 * (35 * r * r + 18 * r + 3), 0.0)


def filter_matrix(space: PhtSpace, radius: float | None = None):
    """Sparse Shepard weight matrix W (dim x dim).

    The neighbours of a variable are the variables of all basis vertices
    inside (or on) its support-mesh rectangle.  Distances are normalised by
    the largest neighbour distance unless an absolute ``radius`` is given.
    """
    mesh = space.mesh
    coords = all_design_coords(space)
    vx = np.array([v[0] for v in space.vertices])
    vy = np.array([v[1] for v in space.vertices])
    rows, cols, vals = [], [], []
    for k, v in enumerate(space.vertices):
        x0, x1, y0, y1 = mesh.support_mesh(v)
        inside = np.flatnonzero((vx >= x0) & (vx <= x1) & (vy >= y0) & (vy <= y1))
        nb = (4 * inside[:, None] + np.arange(4)).ravel()
        for i in range(4 * k, 4 * k + 4):
            d = np.hypot(*(coords[nb] - coords[i]).T)
            scale = radius if radius is not None else d.max()
            w = shepard_weight(d / scale) if scale > 0 else np.full(len(nb), 3.0)
            keep = w > 0
            rows.append(np.full(keep.sum(), i))
            cols.append(nb[keep])
            vals.append(w[keep])
    return sps.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(space.dim, space.dim))


def filter_sensitivities(raw, rho, space: PhtSpace | None = None, W=None, eps: float = RHO_FLOOR):
    """Shepard-filtered sensitivities with the ``1/max(rho_i, eps)`` scaling."""
    if W is None:
        if space is None:
            raise UsageError("filter_sensitivities needs a space or a weight matrix")
        W = filter_matrix(space)
    raw = np.asarray(raw, dtype=float)
    rho = np.asarray(rho, dtype=float)
    wsum = np.asarray(W.sum(axis=1)).ravel()
    return (W @ (rho * raw)) / (wsum * np.maximum(rho, eps))


# --------------------------------------------------------------------- MMA
@dataclass
class MmaState:
    n: int
    move: float = 0.5
    asyinit: float = 0.5
    asyincr: float = 1.2
    asydecr: float = 0.7
    albefa: float = 0.1
    raa0: float = 1e-5
    kkt_tol: float = 1e-9
    low: np.ndarray | None = None
    upp: np.ndarray | None = None
    xold1: np.ndarray | None = None
    xold2: np.ndarray | None = None
    iteration: int = 0
    constraint: float = 0.0
    constraint_grad: np.ndarray | None = None
    multiplier: float = 0.0

    def reset(self, n: int | None = None):
        """Forget history, e.g. after the design space changed."""
        if n is not None:
            self.n = n
        self.low = self.upp = self.xold1 = self.xold2 = None
        self.iteration = 0


def _asymptotes(x, st: MmaState, xmin, xmax):
    rng = xmax - xmin
    if st.iteration <= 2 or st.xold2 is None:
        low = x - st.asyinit * rng
        upp = x + st.asyinit * rng
    else:
        sgn = (x - st.xold1) * (st.xold1 - st.xold2)
        gamma = np.where(sgn > 0, st.asyincr, np.where(sgn < 0, st.asydecr, 1.0))
        low = x - gamma * (st.xold1 - st.low)
        upp = x + gamma * (st.upp - st.xold1)
        low = np.clip(low, x - 10 * rng, x - 0.01 * rng)
        upp = np.clip(upp, x + 0.01 * rng, x + 10 * rng)
    return low, upp


def _pq(grad, x, low, upp, raa0, rng):
    gp, gm = np.maximum(grad, 0.0), np.maximum(-grad, 0.0)
    p = (upp - x) ** 2 * (1.001 * gp + 0.001 * gm + raa0 / rng)
    q = (x - low) ** 2 * (0.001 * gp + 1.001 * gm + raa0 / rng)
    return p, q


def mma_update(rho, dC, V: float, dV, V_star: float, state: MmaState,
               xmin: float = 0.0, xmax: float = 1.0) -> np.ndarray:
    """One MMA step for ``min C`` subject to ``V <= V_star``.

    ``V`` and ``V_star`` must use the same units (e.g. both absolute volume).
    The objective gradient is rescaled by its largest entry; the single dual
    multiplier is found by bisection.
    """
    if not V_star > 0:
        raise ConfigurationError("volume bound must be positive")
    x = np.asarray(rho, dtype=float).copy()
    dC, dV = np.asarray(dC, dtype=float), np.asarray(dV, dtype=float)
    if not (x.shape == dC.shape == dV.shape):
        raise UsageError("design vector and sensitivities differ in length")
    if state.n != len(x):
        state.reset(len(x))
    state.iteration += 1
    rng = xmax - xmin
    scale = np.abs(dC).max()
    df = dC / scale if scale > 0 else np.zeros_like(dC)
    g = V / V_star - 1.0
    dg = dV / V_star

    low, upp = _asymptotes(x, state, xmin, xmax)
    alpha = np.maximum.reduce([np.full_like(x, xmin), low + state.albefa * (x - low), x - state.move * rng])
    beta = np.minimum.reduce([np.full_like(x, xmax), upp - state.albefa * (upp - x), x + state.move * rng])
    p0, q0 = _pq(df, x, low, upp, state.raa0, rng)
    p1, q1 = _pq(dg, x, low, upp, state.raa0, rng)
    b = np.sum(p1 / (upp - x) + q1 / (x - low)) - g

    def primal(lam):
        P = np.sqrt(p0 + lam * p1)
        Q = np.sqrt(q0 + lam * q1)
        return np.clip((P * low + Q * upp) / (P + Q), alpha, beta)

    def constraint(xn):
        return np.sum(p1 / (upp - xn) + q1 / (xn - low)) - b

    lam = 0.0
    xn = primal(0.0)
    cscale = 1.0 + abs(b)
    if constraint(xn) > state.kkt_tol * cscale:
        hi = 1.0
        while constraint(primal(hi)) > 0 and hi < 1e15:
            hi *= 4.0
        lo = 0.0
        for _ in range(300):
            lam = 0.5 * (lo + hi)
            c = constraint(primal(lam))
            if abs(c) <= state.kkt_tol * cscale or hi - lo <= 1e-15 * hi:
                break
            if c > 0:
                lo = lam
            else:
                hi = lam
        lam = hi if constraint(primal(lam)) > 0 else lam
        xn = primal(lam)

    state.xold2 = state.xold1
    state.xold1 = x
    state.low, state.upp = low, upp
    state.constraint, state.constraint_grad, state.multiplier = g, dg, lam
    return xn
