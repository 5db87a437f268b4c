"""Adaptive optimisation loop: analyse, filter, MMA update, refine, inherit."""
from __future__ import annotations

import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .phtspace import Field, PhtSpace, field_to_text, inherit, refine
from .shellfea import (Discretization, LoadCase, MaterialParams, SparseSolver, assemble,
                       compliance, solve)
from .shellgeom import MidSurface
from .simpopt import (MmaState, compliance_sensitivity, filter_matrix, filter_sensitivities,
                      mma_update)
from .tmesh import LMAX, HierTMesh

log = logging.getLogger(__name__)

MODES = ("adaptive", "tensor-global")
INHERITANCE = ("inherit", "reset")
RCC_DIRECTIONS = ("above", "below")
C_OLD_SEED = 1e-5
CSV_COLUMNS = ("iter", "level", "C", "V", "ch", "RCC", "count", "n_basis", "n_elements", "seconds")


@dataclass
class RunConfig:
    nx: int = 10
    ny: int = 10
    volume_fraction: float = 0.3
    material: MaterialParams = field(default_factory=MaterialParams)
    tol_c: float = 0.01
    tol_ref: float = 0.025
    tol_rcc: float = 0.15
    rho_l: float = 0.1
    rho_u: float = 0.9
    max_iters: int = 300
    max_levels: int = 4
    mode: str = "adaptive"
    inheritance: str = "inherit"
    rcc_direction: str = "above"
    filter_radius: float | None = None
    move: float = 0.5
    seed: int = 0
    inherit_check_points: int = 1000
    record_timing: bool = True
    checkpoint_every: int = 0

    def __post_init__(self):
        if not (isinstance(self.nx, int) and isinstance(self.ny, int) and self.nx >= 1 and self.ny >= 1):
            raise ConfigurationError("initial mesh needs positive integer nx, ny")
        if not 0 < self.volume_fraction < 1:
            raise ConfigurationError("volume fraction must lie in (0, 1)")
        if not 0 < self.rho_l < self.rho_u < 1:
            raise ConfigurationError("need 0 < rho_l < rho_u < 1")
        for name in ("tol_c", "tol_ref", "tol_rcc", "move"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.max_iters < 1 or self.max_levels < 0:
            raise ConfigurationError("max_iters >= 1 and max_levels >= 0 required")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if self.inheritance not in INHERITANCE:
            raise ConfigurationError(f"inheritance must be one of {INHERITANCE}")
        if self.rcc_direction not in RCC_DIRECTIONS:
            raise ConfigurationError(f"rcc_direction must be one of {RCC_DIRECTIONS}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class IterationRecord:
    iter: int
    level: int
    C: float
    V: float
    ch: float
    RCC: float
    count: int
    n_basis: int
    n_elements: int
    seconds: float

    def row(self) -> list[str]:
        return [repr(v) if isinstance(v, float) else str(v) for v in dataclasses.astuple(self)]


@dataclass
class RefinementEvent:
    iter: int
    level: int
    n_marked: int
    n_refined: int
    n_basis_before: int
    n_basis_after: int
    inherit_error: float


@dataclass
class RunResult:
    rho: Field
    space: PhtSpace
    records: list[IterationRecord]
    events: list[RefinementEvent]
    converged: bool
    volume: float
    compliance: float


# ------------------------------------------------------------- pure pieces
def mark_gray(space: PhtSpace, rho, rho_l: float = 0.1, rho_u: float = 0.9) -> set[int]:
    """Elements whose centre density lies strictly inside (rho_l, rho_u)."""
    rho_e = space.center_matrix() @ np.asarray(rho, dtype=float)
    return {e for e, r in zip(space.elements, rho_e) if rho_l < r < rho_u}


def expand_marks(mesh: HierTMesh, marked) -> set[int]:
    """Marked cells plus every active cell sharing an edge or a vertex with one."""
    out = set(marked)
    for e in marked:
        out |= mesh.neighbors(e)
    return out


def rcc(C_new: float, C_old: float) -> float:
    if not C_old > 0:
        C_old = C_OLD_SEED
    return abs(C_new - C_old) / C_old


def refinement_triggered(count: int, rcc_value: float, tol_rcc: float, direction: str = "above") -> bool:
    if count != 3:
        return False
    return rcc_value > tol_rcc if direction == "above" else rcc_value < tol_rcc


class GuardState:
    """Counter, C_old and level bookkeeping of the refinement test, without FE."""

    def __init__(self, tol_ref: float = 0.025, tol_rcc: float = 0.15, direction: str = "above"):
        self.tol_ref, self.tol_rcc, self.direction = tol_ref, tol_rcc, direction
        self.count = 0
        self.level = 0
        self.C_old = C_OLD_SEED
        self._first_on_level = False

    def observe_compliance(self, C_new: float):
        if self._first_on_level:
            self.C_old = C_new
            self._first_on_level = False

    def step(self, ch: float, C_new: float) -> tuple[float, bool]:
        """Feed one iteration's ``ch`` and compliance; returns (RCC, refine?)."""
        self.observe_compliance(C_new)
        value = rcc(C_new, self.C_old)
        if ch < self.tol_ref:
            self.count += 1
        return value, refinement_triggered(self.count, value, self.tol_rcc, self.direction)

    def refined(self):
        self.count = 0
        self.level += 1
        self._first_on_level = True


# -------------------------------------------------------------- main loop
class _Level:
    """Everything that depends only on the current space."""

    def __init__(self, surf, space, material, radius):
        self.space = space
        self.disc = Discretization(surf, space, material)
        self.W = filter_matrix(space, radius)
        self.dV = self.disc.center.T @ self.disc.V0
        self.V_solid = float(self.disc.V0.sum())
        self.solver = SparseSolver()


def _sample_points(rng, n):
    return rng.random((n, 2))


def optimize(config: RunConfig, surf: MidSurface, case: LoadCase, out_dir: str | Path | None = None,
             callback=None) -> RunResult:
    """Run the optimisation described by ``config`` on ``surf`` under ``case``.

    With ``out_dir`` the iteration log is written to ``log.csv`` as it grows
    and density checkpoints go next to it.
    """
    mat = config.material
    adaptive = config.mode == "adaptive"
    rng = np.random.default_rng(config.seed)
    space = PhtSpace(HierTMesh(config.nx, config.ny))
    lvl = _Level(surf, space, mat, config.filter_radius)
    rho = np.ones(space.dim)
    mma = MmaState(space.dim, move=config.move)
    guard = GuardState(config.tol_ref, config.tol_rcc, config.rcc_direction)
    records: list[IterationRecord] = []
    events: list[RefinementEvent] = []
    writer = fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        fh = open(out_dir / "log.csv", "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
    t0 = time.perf_counter()
    ch = 1.0
    it = 0
    C_new = float("nan")
    warned_cap = False
    try:
        while ch >= config.tol_c and it < config.max_iters:
            it += 1
            system = assemble(surf, space, rho, mat, case, disc=lvl.disc)
            U = solve(system, solver=lvl.solver)
            C_new = compliance(system, U)
            V = float(system.rho_e @ lvl.disc.V0)
            raw = compliance_sensitivity(system, U, mat)
            dc = filter_sensitivities(raw, rho, W=lvl.W)
            rho_new = mma_update(rho, dc, V, lvl.dV, config.volume_fraction * lvl.V_solid, mma)
            ch = float(np.max(np.abs(rho_new - rho)))
            rho = rho_new
            if adaptive:
                value, trigger = guard.step(ch, C_new)
            else:
                value, trigger = 0.0, False
            rec = IterationRecord(it, guard.level, C_new, V / lvl.V_solid, ch, value, guard.count,
                                  space.dim, len(space.elements),
                                  time.perf_counter() - t0 if config.record_timing else 0.0)
            records.append(rec)
            if writer is not None:
                writer.writerow(rec.row())
                fh.flush()
            if callback is not None:
                callback(rec)
            if config.checkpoint_every and out_dir is not None and it % config.checkpoint_every == 0:
                write_checkpoint(out_dir / f"checkpoint_{it:04d}.txt", Field(space, rho), it)
            if not trigger:
                continue
            if guard.level >= config.max_levels:
                if not warned_cap:
                    log.warning("refinement skipped at iteration %d: max_levels=%d reached", it, config.max_levels)
                    warned_cap = True
                continue
            marked = mark_gray(space, rho, config.rho_l, config.rho_u)
            cells = expand_marks(space.mesh, marked)
            too_deep = {e for e in cells if space.mesh.elements[e].level >= LMAX}
            if too_deep:
                log.warning("%d elements already at maximum depth; not refined", len(too_deep))
                cells -= too_deep
            if not cells:
                log.warning("refinement triggered at iteration %d but no gray elements", it)
                continue
            old = Field(space, rho)
            if out_dir is not None:
                write_checkpoint(out_dir / f"level_{guard.level}.txt", old, it)
            space = refine(space, sorted(cells))
            if config.inheritance == "inherit":
                new = inherit(old, space)
            else:
                new = Field(space, np.ones((space.dim, 1)))
            pts = _sample_points(rng, config.inherit_check_points)
            err = float(np.abs(old(pts) - new(pts)).max())
            events.append(RefinementEvent(it, guard.level, len(marked), len(cells), old.space.dim, space.dim, err))
            log.info("iteration %d: refined %d cells (%d gray), basis %d -> %d, inheritance error %.2e",
                     it, len(cells), len(marked), old.space.dim, space.dim, err)
            rho = new.coeffs[:, 0].copy()
            lvl = _Level(surf, space, mat, config.filter_radius)
            mma.reset(space.dim)
            guard.refined()
            # the change measure restarts on the new space
            ch = 1.0
    finally:
        if fh is not None:
            fh.close()
    rho_final = Field(space, rho)
    V_final = float(lvl.disc.element_density(rho) @ lvl.disc.V0) / lvl.V_solid
    if out_dir is not None:
        write_checkpoint(out_dir / "final.txt", rho_final, it)
    return RunResult(rho_final, space, records, events, ch < config.tol_c, V_final, C_new)


def final_compliance(result: RunResult, surf: MidSurface, case: LoadCase, material=MaterialParams()) -> float:
    """Compliance of the returned design (one extra analysis)."""
    system = assemble(surf, result.space, result.rho.coeffs[:, 0], material, case)
    return compliance(system, solve(system))


# ------------------------------------------------------------- checkpoints
def write_checkpoint(path, rho: Field, iteration: int = 0):
    text = f"# phtshell checkpoint iter={iteration}\n" + rho.space.mesh.dump() + field_to_text(rho)
    Path(path).write_text(text)


def read_checkpoint(path) -> Field:
    from .phtspace import field_from_text
    text = Path(path).read_text()
    lines = text.splitlines()
    try:
        start = next(i for i, ln in enumerate(lines) if ln.startswith("# tmesh"))
        split = next(i for i, ln in enumerate(lines) if ln.startswith("# field"))
    except StopIteration:
        raise ConfigurationError(f"{path}: not a checkpoint file") from None
    mesh = HierTMesh.from_dump("\n".join(lines[start:split]))
    return field_from_text(PhtSpace(mesh), "\n".join(lines[split:]))
