"""Reissner-Mindlin degenerated-solid shell analysis on a PHT-spline space.

Each basis function carries five unknowns: three translations and the two
rotations ``alpha`` (about v1) and ``beta`` (about v2).  Element matrices are
computed once per space for unit Young's modulus; SIMP scaling is applied
during assembly through a sparse element-to-entry map, so an optimisation
iteration only costs one sparse mat-vec plus the linear solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .bezier import bernstein3, gauss_legendre
from .errors import ConfigurationError, ConsistencyError, DegenerateGeometryError, SolverError
from .phtspace import Field, PhtSpace
from .shellgeom import LocalFrame, MidSurface, frame_from_derivatives

log = logging.getLogger(__name__)

NDOF = 5

# (u_x, u_y, u_z, v_x, ..., w_z) -> engineering strains (xx, yy, zz, xy, yz, zx)
H_MATRIX = np.zeros((6, 9))
for _r, _cols in enumerate([(0,), (4,), (8,), (1, 3), (5, 7), (2, 6)]):
    H_MATRIX[_r, list(_cols)] = 1.0

# unit engineering strain -> symmetric tensor, and back
_E2T = np.zeros((6, 3, 3))
_T2E = np.zeros((6, 3, 3))
for _k, (_i, _j) in enumerate([(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)]):
    if _i == _j:
        _E2T[_k, _i, _i] = 1.0
        _T2E[_k, _i, _i] = 1.0
    else:
        _E2T[_k, _i, _j] = _E2T[_k, _j, _i] = 0.5
        _T2E[_k, _i, _j] = _T2E[_k, _j, _i] = 1.0


@dataclass(frozen=True)
class MaterialParams:
    E0: float = 2100.0
    Emin: float = 1e-5
    nu: float = 0.3
    p: float = 5.0
    shear_correction: float = 5.0 / 6.0

    def __post_init__(self):
        if not self.E0 > 0 or not 0 < self.Emin < self.E0:
            raise ConfigurationError("need 0 < Emin < E0")
        if not -1.0 < self.nu < 0.5:
            raise ConfigurationError(f"Poisson ratio {self.nu} outside (-1, 0.5)")
        if not self.p >= 1:
            raise ConfigurationError("SIMP penalty must be >= 1")
        if not self.shear_correction > 0:
            raise ConfigurationError("shear correction factor must be positive")

    def young(self, rho):
        return self.Emin + np.asarray(rho) ** self.p * (self.E0 - self.Emin)

    def dyoung(self, rho):
        return self.p * np.asarray(rho) ** (self.p - 1) * (self.E0 - self.Emin)


@dataclass(frozen=True)
class Quadrature:
    n_surface: int = 4
    n_thickness: int = 2


def constitutive_matrix(nu: float, kappa: float = 5.0 / 6.0) -> np.ndarray:
    """Local 6x6 matrix for unit modulus with zero normal stress."""
    D = np.zeros((6, 6))
    c = 1.0 / (1.0 - nu * nu)
    D[0, 0] = D[1, 1] = c
    D[0, 1] = D[1, 0] = c * nu
    g = 0.5 / (1.0 + nu)
    D[3, 3] = g
    D[4, 4] = D[5, 5] = kappa * g
    return D


def strain_rotation(theta: np.ndarray) -> np.ndarray:
    """Voigt matrix ``T`` mapping global engineering strains to frame strains.

    ``theta`` has shape (Q, 3, 3) with columns v1, v2, v3.
    """
    rot = np.einsum("qca,kcd,qdb->qkab", theta, _E2T, theta)
    return np.einsum("lab,qkab->qlk", _T2E, rot)


def _displacement_gradient_map(N, fr, zeta, h):
    """``R`` of shape (E, Q, 9, 5m).

    ``N`` holds (N, N_s, N_t) each of shape (E, m, Q); frame arrays are
    (E, Q, 3) and ``zeta`` is (Q,).
    """
    N0, Ns, Nt = N
    E, m, Q = N0.shape
    half = 0.5 * h
    z = zeta[None, :, None, None]
    R = np.zeros((E, Q, 3, 3, m, NDOF))
    for c in range(3):
        R[:, :, c, 0, :, c] = Ns.transpose(0, 2, 1)
        R[:, :, c, 1, :, c] = Nt.transpose(0, 2, 1)

    def prod(vec, M):
        return np.einsum("eqc,emq->eqcm", vec, M)
    l, mm = fr.v1, fr.v2
    R[:, :, :, 0, :, 3] = -z * half * (prod(fr.dv2_ds, N0) + prod(mm, Ns))
    R[:, :, :, 0, :, 4] = z * half * (prod(fr.dv1_ds, N0) + prod(l, Ns))
    R[:, :, :, 1, :, 3] = -z * half * (prod(fr.dv2_dt, N0) + prod(mm, Nt))
    R[:, :, :, 1, :, 4] = z * half * (prod(fr.dv1_dt, N0) + prod(l, Nt))
    R[:, :, :, 2, :, 3] = -half * prod(mm, N0)
    R[:, :, :, 2, :, 4] = half * prod(l, N0)
    return R.reshape(E, Q, 9, m * NDOF)


def _element_points(space: PhtSpace, eid: int, u, w):
    s0, t0, s1, t1 = space.mesh.element_rect(eid)
    return np.column_stack([s0 + (s1 - s0) * u, t0 + (t1 - t0) * w])


def _batch_basis(space: PhtSpace, eids, u, w):
    """(N, N_s, N_t), each (E, m, Q), for elements sharing the function count m."""
    bs, bt = bernstein3(u), bernstein3(w)
    Bord = np.stack([space.elem_ord[e] for e in eids])
    size = np.array([space.mesh.element_size(e) for e in eids])
    N0 = np.einsum("qi,emij,qj->emq", bs[0], Bord, bt[0], optimize=True)
    Ns = np.einsum("qi,emij,qj->emq", bs[1], Bord, bt[0], optimize=True) / size[:, 0, None, None]
    Nt = np.einsum("qi,emij,qj->emq", bs[0], Bord, bt[1], optimize=True) / size[:, 1, None, None]
    return N0, Ns, Nt


def _batch_b(surf: MidSurface, space: PhtSpace, eids, u, w, zeta, D=None):
    """B (E, Q, 6, 5m) and det J (E, Q) at shared local points ``(u, w, zeta)``."""
    u, w, zeta = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (u, w, zeta))
    E, Q = len(eids), len(u)
    if D is None:
        pts = np.concatenate([_element_points(space, e, u, w) for e in eids])
        D = surf.derivatives(pts)
    D = D.reshape(E * Q, 6, 3)
    fr = frame_from_derivatives(D, surf.axis)
    half = 0.5 * surf.h
    z = np.tile(zeta, E)[:, None]
    J = np.stack([D[:, 1] + z * half * fr.dv3_ds, D[:, 2] + z * half * fr.dv3_dt,
                  np.broadcast_to(half * fr.v3, D[:, 1].shape)], axis=1)
    det = np.linalg.det(J)
    if np.any(np.abs(det) < 1e-14 * np.linalg.norm(J, axis=(1, 2)) ** 3):
        raise DegenerateGeometryError("singular shell Jacobian at a quadrature point")
    Jinv = np.linalg.inv(J).reshape(E, Q, 3, 3)
    frb = LocalFrame(*(a.reshape(E, Q, 3) for a in (fr.v1, fr.v2, fr.v3, fr.dv1_ds, fr.dv1_dt,
                                                   fr.dv2_ds, fr.dv2_dt, fr.dv3_ds, fr.dv3_dt)))
    R = _displacement_gradient_map(_batch_basis(space, eids, u, w), frb, zeta, surf.h)
    # Gamma is block-diagonal with J^-1 in each displacement component block
    GR = np.einsum("eqjk,eqckb->eqcjb", Jinv, R.reshape(E, Q, 3, 3, -1), optimize=True)
    theta = np.stack([fr.v1, fr.v2, fr.v3], axis=2)
    TH = (strain_rotation(theta) @ H_MATRIX).reshape(E, Q, 6, 9)
    B = TH @ GR.reshape(E, Q, 9, -1)
    return B, det.reshape(E, Q)


def strain_displacement(surf: MidSurface, space: PhtSpace, eid: int, u: float, w: float, zeta: float):
    """B matrix (6, 5m) at local element coordinates ``(u, w)`` and ``zeta``."""
    B, _ = _batch_b(surf, space, [eid], [u], [w], [zeta])
    return B[0, 0]


class _Rule:
    def __init__(self, quad: Quadrature):
        g, gw = gauss_legendre(quad.n_surface, 0.0, 1.0)
        z, zw = gauss_legendre(quad.n_thickness, -1.0, 1.0)
        uu, ww = np.meshgrid(g, g, indexing="ij")
        self.u2, self.w2 = uu.ravel(), ww.ravel()
        nz = len(z)
        self.nz = nz
        self.u = np.repeat(self.u2, nz)
        self.w = np.repeat(self.w2, nz)
        self.z = np.tile(z, len(self.u2))
        self.wt = np.repeat(np.outer(gw, gw).ravel(), nz) * np.tile(zw, len(self.u2))


def _batch_stiffness(surf, space, eids, nu, kappa, rule, D=None):
    """Unit-modulus stiffness (E, 5m, 5m) and volumes (E,) for a same-m batch."""
    if D is not None:
        D = np.repeat(D, rule.nz, axis=1)
    B, det = _batch_b(surf, space, eids, rule.u, rule.w, rule.z, D)
    size = np.array([space.mesh.element_size(e) for e in eids])
    wq = rule.wt[None, :] * np.abs(det) * (size[:, 0] * size[:, 1])[:, None]
    CB = (constitutive_matrix(nu, kappa) @ B) * wq[:, :, None, None]
    n = B.shape[-1]
    K = np.swapaxes(B.reshape(len(eids), -1, n), 1, 2) @ CB.reshape(len(eids), -1, n)
    return 0.5 * (K + np.swapaxes(K, 1, 2)), wq.sum(axis=1)


def element_stiffness_K0(surf: MidSurface, space: PhtSpace, eid: int, nu: float = 0.3,
                         kappa: float = 5.0 / 6.0, quad: Quadrature = Quadrature()):
    """Unit-modulus element stiffness (5m x 5m) and element volume."""
    K, V = _batch_stiffness(surf, space, [eid], nu, kappa, _Rule(quad))
    return K[0], float(V[0])


SUPPORTS = ("anchor", "pin")


@dataclass
class LoadCase:
    """Point loads ``((s, t), (gx, gy, gz))`` and supported parameter points.

    ``support="anchor"`` clamps all DOFs of the four functions at the nearest
    basis vertex. ``"pin"`` fixes only the translations of the functions that
    are nonzero there, which at a domain corner is an exact point pin.
    """

    point_loads: list = field(default_factory=list)
    fixed_points: list = field(default_factory=list)
    support: str = "anchor"

    def __post_init__(self):
        for p, g in self.point_loads:
            if len(p) != 2 or len(g) != 3:
                raise ConfigurationError("point load needs (s, t) and a 3-vector")
        for p in list(self.fixed_points) + [p for p, _ in self.point_loads]:
            if not (0 <= p[0] <= 1 and 0 <= p[1] <= 1):
                raise ConfigurationError(f"point {p} outside the parameter domain")
        if not self.fixed_points:
            raise ConfigurationError("load case has no supports")
        if self.support not in SUPPORTS:
            raise ConfigurationError(f"support must be one of {SUPPORTS}, got {self.support!r}")


def nearest_basis_vertex(space: PhtSpace, p) -> tuple[int, int]:
    xy = np.array([space.mesh.param(v) for v in space.vertices])
    d = np.hypot(xy[:, 0] - p[0], xy[:, 1] - p[1])
    return space.vertices[int(np.argmin(d))]


class Discretization:
    """Per-space cache: unit element matrices, volumes and the assembly map."""

    BATCH = 128

    def __init__(self, surf: MidSurface, space: PhtSpace, material: MaterialParams = MaterialParams(),
                 quad: Quadrature = Quadrature()):
        self.surf, self.space, self.material, self.quad = surf, space, material, quad
        self.elements = list(space.elements)
        self.n_dof = NDOF * space.dim
        rule = _Rule(quad)
        pts = np.concatenate([_element_points(space, e, rule.u2, rule.w2) for e in self.elements])
        Dall = surf.derivatives(pts).reshape(len(self.elements), len(rule.u2), 6, 3)
        self.V0 = np.empty(len(self.elements))
        self.elem_dofs = [(NDOF * space.elem_ids[e][:, None] + np.arange(NDOF)).ravel()
                          for e in self.elements]
        groups: dict[int, list[int]] = {}
        for k, e in enumerate(self.elements):
            groups.setdefault(len(space.elem_ids[e]), []).append(k)
        rows, cols, vals, owner = [], [], [], []
        for m in sorted(groups):
            for chunk in np.array_split(groups[m], max(1, len(groups[m]) // self.BATCH)):
                eids = [self.elements[k] for k in chunk]
                K0, self.V0[chunk] = _batch_stiffness(surf, space, eids, material.nu,
                                                      material.shear_correction, rule, Dall[chunk])
                dofs = np.stack([self.elem_dofs[k] for k in chunk])
                r = np.broadcast_to(dofs[:, :, None], K0.shape)
                c = np.broadcast_to(dofs[:, None, :], K0.shape)
                keep = r <= c
                rows.append(r[keep])
                cols.append(c[keep])
                vals.append(K0[keep])
                owner.append(np.broadcast_to(chunk[:, None, None], K0.shape)[keep])
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        key = rows.astype(np.int64) * self.n_dof + cols
        ukey, pos = np.unique(key, return_inverse=True)
        self._rows = (ukey // self.n_dof).astype(np.int64)
        self._cols = (ukey % self.n_dof).astype(np.int64)
        self.A = sps.csr_matrix((np.concatenate(vals), (pos, np.concatenate(owner))),
                                shape=(len(ukey), len(self.elements)))
        self._energy_weight = np.where(self._rows == self._cols, 1.0, 2.0)
        self.center = space.center_matrix()

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_density(self, rho):
        return self.center @ np.asarray(rho, dtype=float)

    def element_energies(self, U, absolute: bool = False):
        """``U_e^T K0_e U_e`` for every element (unit modulus).

        ``absolute=True`` gives ``|U_e|^T |K0_e| |U_e|``, the scale of the
        rounding error in the plain sum.
        """
        U = np.asarray(U).ravel()
        if absolute:
            U = np.abs(U)
            return abs(self.A).T @ (U[self._rows] * U[self._cols] * self._energy_weight)
        return self.A.T @ (U[self._rows] * U[self._cols] * self._energy_weight)

    def stiffness(self, E_e, free=None):
        """Full symmetric stiffness for element moduli ``E_e``.

        With ``free`` (sorted dof indices) only the free-free block is built.
        """
        data = self.A @ np.asarray(E_e, dtype=float)
        r, c, n = self._rows, self._cols, self.n_dof
        if free is not None:
            remap = np.full(n, -1)
            remap[free] = np.arange(len(free))
            keep = (remap[r] >= 0) & (remap[c] >= 0)
            r, c, data, n = remap[r[keep]], remap[c[keep]], data[keep], len(free)
        up = sps.csr_matrix((data, (r, c)), shape=(n, n))
        return (up + up.T - sps.diags(up.diagonal())).tocsc()


@dataclass
class AssembledSystem:
    disc: Discretization
    rho_e: np.ndarray
    E_e: np.ndarray
    F: np.ndarray
    fixed: np.ndarray
    free: np.ndarray
    K_ff: sps.csc_matrix

    @property
    def K(self):
        """Global stiffness with constrained rows/columns replaced by identity."""
        n = self.disc.n_dof
        P = sps.csr_matrix((np.ones(len(self.free)), (self.free, np.arange(len(self.free)))),
                           shape=(n, len(self.free)))
        Id = sps.csr_matrix((np.ones(len(self.fixed)), (self.fixed, self.fixed)), shape=(n, n))
        return (P @ self.K_ff @ P.T + Id).tocsr()


def load_vector(space: PhtSpace, loads: LoadCase) -> np.ndarray:
    F = np.zeros(NDOF * space.dim)
    if not loads.point_loads:
        return F
    pts = np.array([p for p, _ in loads.point_loads], dtype=float)
    G = np.array([g for _, g in loads.point_loads], dtype=float)
    N = space.basis_matrix(pts, 0)[0]
    for c in range(3):
        F[c::NDOF] += N.T @ G[:, c]
    return F


def constrained_dofs(space: PhtSpace, loads: LoadCase) -> np.ndarray:
    fixed = set()
    for p in loads.fixed_points:
        v = nearest_basis_vertex(space, p)
        funcs = space.vertex_functions(v)
        if loads.support == "anchor":
            dofs = np.arange(NDOF)
        else:
            N = space.basis_matrix(np.array([space.mesh.param(v)], dtype=float))[0]
            funcs = [i for i in funcs if abs(N[0, i]) > 1e-12]
            dofs = np.arange(3)
        for i in funcs:
            fixed.update(NDOF * int(i) + dofs)
    return np.array(sorted(fixed), dtype=np.int64)


def assemble(surf: MidSurface, space: PhtSpace, rho, material: MaterialParams = MaterialParams(),
             loads: LoadCase | None = None, disc: Discretization | None = None,
             quad: Quadrature = Quadrature()) -> AssembledSystem:
    """Assemble the SIMP-scaled system for nodal design variables ``rho``.

    ``disc`` may be reused between calls on the same space.
    """
    if loads is None:
        raise ConfigurationError("assemble needs a load case")
    if disc is None:
        disc = Discretization(surf, space, material, quad)
    elif disc.space is not space:
        raise ConfigurationError("discretization belongs to another space")
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (space.dim,):
        raise ConfigurationError(f"expected {space.dim} design variables, got shape {rho.shape}")
    rho_e = disc.element_density(rho)
    lo, hi = rho_e.min(), rho_e.max()
    if lo < -1e-12 or hi > 1 + 1e-12:
        log.warning("element densities outside [0, 1] (min %.3g, max %.3g); clamping", lo, hi)
    rho_e = np.clip(rho_e, 0.0, 1.0)
    E_e = material.young(rho_e)
    fixed = constrained_dofs(space, loads)
    free = np.setdiff1d(np.arange(disc.n_dof), fixed)
    F = load_vector(space, loads)
    F[fixed] = 0.0
    return AssembledSystem(disc, rho_e, E_e, F, fixed, free, disc.stiffness(E_e, free))


class SparseSolver:
    """Direct SPD solver with factor reuse across optimisation iterations.

    Uses CHOLMOD (through cvxopt) when available and SuperLU otherwise.  The
    symbolic analysis is kept while the sparsity pattern is unchanged.  With
    ``reuse`` enabled the last numeric factor preconditions a conjugate-gradient
    solve; the matrix is refactored whenever that fails to converge within
    ``max_pcg`` iterations.  Everything is deterministic.
    """

    def __init__(self, reuse: bool = True, max_pcg: int = 25, backend: str | None = None):
        self.reuse, self.max_pcg = reuse, max_pcg
        if backend is None:
            backend = "cholmod" if _cholmod is not None else "superlu"
        if backend == "cholmod" and _cholmod is None:
            raise ConfigurationError("CHOLMOD backend requested but cvxopt is not installed")
        self.backend = backend
        self._pattern = None
        self._symbolic = None
        self._factor = None
        self.n_factorizations = 0

    def _factorize(self, K):
        if self.backend == "cholmod":
            Kc = K.tocoo()
            A = _cvxopt.spmatrix(Kc.data, Kc.row.astype(int), Kc.col.astype(int), K.shape)
            key = (K.shape, K.indptr.tobytes(), K.indices.tobytes())
            if self._symbolic is None or self._pattern != key:
                self._symbolic = _cholmod.symbolic(A, uplo="L")
                self._pattern = key
            try:
                _cholmod.numeric(A, self._symbolic)
            except ArithmeticError as exc:
                raise SolverError(f"Cholesky factorisation failed: {exc}") from exc
            sym = self._symbolic

            def apply(b):
                x = _cvxopt.matrix(np.asarray(b, dtype=float).reshape(-1, 1))
                _cholmod.solve(sym, x)
                return np.array(x).ravel()
        else:
            try:
                lu = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A")
            except RuntimeError as exc:
                raise SolverError(f"sparse factorisation failed: {exc}") from exc
            apply = lu.solve
        self.n_factorizations += 1
        self._factor = (K.shape, apply)
        return apply

    def _pcg(self, K, b, apply, target):
        """Preconditioned CG from the factor solution; (best x, reached target)."""
        x = apply(b)
        r = b - K @ x
        best, best_res = x.copy(), np.linalg.norm(r)
        if best_res <= target:
            return best, True
        z = apply(r)
        p = z.copy()
        rz = r @ z
        for _ in range(self.max_pcg):
            Kp = K @ p
            pKp = p @ Kp
            if not pKp > 0:
                break
            a = rz / pKp
            x = x + a * p
            r = r - a * Kp
            res = np.linalg.norm(r)
            if res < best_res:
                best, best_res = x.copy(), res
            if res <= target:
                return best, True
            z = apply(r)
            rz, rz_old = r @ z, rz
            p = z + (rz / rz_old) * p
        return best, False

    def solve(self, K, b, rtol: float = 1e-9):
        b = np.asarray(b, dtype=float)
        bn = np.linalg.norm(b)
        if bn == 0.0:
            return np.zeros_like(b)
        target = 0.1 * rtol * bn
        if self.reuse and self._factor is not None and self._factor[0] == K.shape:
            apply = self._factor[1]
            x, ok = self._pcg(K, b, apply, max(target, roundoff_floor(K, apply(b))))
            if ok:
                return x
        apply = self._factorize(K)
        x, _ = self._pcg(K, b, apply, max(target, roundoff_floor(K, apply(b))))
        return x


def roundoff_floor(K, x) -> float:
    """Size of the residual that float64 rounding alone produces for ``K x``."""
    return 16.0 * np.finfo(float).eps * float(np.linalg.norm(abs(K) @ np.abs(x)))


try:
    import cvxopt as _cvxopt
    import cvxopt.cholmod as _cholmod
    _cholmod.options["supernodal"] = 2
except ImportError:  # pragma: no cover
    _cvxopt = _cholmod = None


def solve(system: AssembledSystem, rtol: float = 1e-9, solver: SparseSolver | None = None) -> np.ndarray:
    """Displacement vector (5 per basis function); raises SolverError on failure."""
    Kff, Ff = system.K_ff, system.F[system.free]
    if solver is None:
        solver = SparseSolver(reuse=False)
    x = solver.solve(Kff, Ff, rtol)
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite displacements")
    res = np.linalg.norm(Kff @ x - Ff)
    scale = np.linalg.norm(Ff)
    # relative residual, or the rounding floor when SIMP contrast puts that higher
    if res > max(rtol * scale, roundoff_floor(Kff, x)):
        raise SolverError(f"relative residual {res / max(scale, 1e-300):.2e} exceeds {rtol:g}")
    U = np.zeros(system.disc.n_dof)
    U[system.free] = x
    return U


def displacement_field(space: PhtSpace, U) -> Field:
    return Field(space, np.asarray(U).reshape(space.dim, NDOF))


def compliance(system: AssembledSystem, U, rtol: float = 1e-8) -> float:
    """``F.U`` checked against the sum of element energies.

    The two differ by exactly ``U.r`` for the solver residual ``r``, so that
    term is allowed on top of the relative tolerance, together with the
    rounding bound of the energy sum.
    """
    U = np.asarray(U)
    c_load = float(system.F @ U)
    c_energy = float(system.E_e @ system.disc.element_energies(U))
    uf = U[system.free]
    slack = abs(float(uf @ (system.K_ff @ uf - system.F[system.free])))
    slack += 64 * np.finfo(float).eps * float(np.abs(system.E_e) @ system.disc.element_energies(U, True))
    if abs(c_load - c_energy) > rtol * max(abs(c_load), abs(c_energy)) + 2.0 * slack:
        raise ConsistencyError(f"compliance mismatch: F.U={c_load:.12g}, energy={c_energy:.12g}")
    return c_load


def volume(space: PhtSpace, rho, surf: MidSurface | None = None, disc: Discretization | None = None):
    """Material volume ``sum rho_e V0_e`` and the element volumes ``V0_e``."""
    if disc is None:
        if surf is None:
            raise ConfigurationError("volume needs a surface or a discretization")
        disc = Discretization(surf, space)
    rho_e = disc.element_density(rho)
    return float(rho_e @ disc.V0), disc.V0
