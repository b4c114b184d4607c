"""Deterministic finite-volume solver for the supercooled Stefan frontier.

The temperature lives on cell averages u_i over cells [i*dx, (i+1)*dx) of
[0, x_max]; the frontier sits on cell faces.  Each step is an implicit Euler
solve of u_t = u_xx / 2 on the alive cells (temperature pinned to zero at the
frontier face, no flux through the right wall), followed by a frontier
advance driven by exact mass balance,

    lam = alpha * (1 - dx * sum(u)),

rather than by the boundary-gradient law; the two agree in the limit and the
balance form keeps |lam/alpha + mass - 1| at rounding level by construction.
After the smooth advance the jump rule is scanned against the discrete
temperature CDF, so genuine frontier discontinuities are resolved within the
same step.  The stopped-mass weight nu is recorded the moment a cell freezes:
1/alpha for cells frozen by the smooth advance, the pre-jump temperature for
cells swallowed by a jump.  A cell's weight is never overwritten.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from stefanlab.errors import ConfigError, TruncationError
from stefanlab.fields import Field, FrontierPath, JumpRecord, WeightField
from stefanlab.jump_rule import ScanSpec, continuum_jump

# Default ceiling on the mass allowed in the cell adjacent to the right wall;
# beyond it the truncated domain no longer represents the half-line problem.
WALL_GUARD = 1e-6


@dataclass
class GridState:
    """Finite-volume state: cell averages, frontier face, recorded weights."""

    x: np.ndarray            # cell centers, spacing dx
    u: np.ndarray            # cell-average temperatures
    j: int                   # frontier face index: cells < j are frozen
    lam: float               # exact mass-balance frontier position
    t: float
    alpha: float
    dx: float
    nu: np.ndarray = field(default=None)
    nu_recorded: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.nu is None:
            self.nu = np.zeros_like(self.u)
        if self.nu_recorded is None:
            self.nu_recorded = np.zeros(len(self.u), dtype=bool)

    @property
    def mass(self) -> float:
        return float(np.sum(self.u[self.j:]) * self.dx)

    def wall_cell_mass(self) -> float:
        return float(self.u[-1] * self.dx)


def diffuse_step(state: GridState, dt: float) -> GridState:
    """Implicit Euler step of u_t = u_xx / 2 on the alive cells.

    Dirichlet u = 0 at the frontier face (ghost cell -u_j), homogeneous
    Neumann at the right wall (ghost cell u_{n-1}).  Unconditionally stable
    and positivity-preserving; mass leaves only through the frontier face.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    n = len(state.u)
    a = state.j
    m = n - a
    if m <= 0:
        state.t += dt
        return state
    r = 0.5 * dt / state.dx ** 2
    # rows: (1 + 2r) on the diagonal, -r off-diagonal; the frontier row gets
    # +r from the reflected ghost (-u_a), the wall row -r (ghost u_{n-1}).
    # A single surviving cell carries both corrections.
    diag = np.full(m, 1.0 + 2.0 * r)
    diag[0] += r
    diag[-1] -= r
    ab = np.zeros((3, m))
    ab[0, 1:] = -r
    ab[1, :] = diag
    ab[2, :-1] = -r
    state.u[a:] = solve_banded((1, 1), ab, state.u[a:])
    state.t += dt
    return state


def _discrete_cdf(state: GridState):
    """Swept-mass CDF above the frontier face, exact for cell-constant u."""
    a = state.j
    x0 = a * state.dx
    cum = np.concatenate([[0.0], np.cumsum(state.u[a:]) * state.dx])

    def fn(x):
        s = (np.asarray(x, dtype=float) - x0) / state.dx
        k = np.clip(np.floor(s).astype(int), 0, len(cum) - 2)
        frac = np.clip(s - k, 0.0, 1.0)
        out = np.where(s <= 0, 0.0,
                       np.where(s >= len(cum) - 1, cum[-1],
                                cum[k] + frac * (cum[k + 1] - cum[k])))
        return out if out.ndim else float(out)

    return fn


def _freeze_cells(state: GridState, j_new: int, weights: np.ndarray | None) -> float:
    """Freeze cells [state.j, j_new); returns the mass removed.

    weights = None records the smooth-advance weight 1/alpha; otherwise the
    given per-cell values (the pre-jump temperatures).  Never overwrites.
    """
    j_old = state.j
    if j_new <= j_old:
        return 0.0
    removed = float(np.sum(state.u[j_old:j_new]) * state.dx)
    w = np.full(j_new - j_old, 1.0 / state.alpha) if weights is None else weights
    fresh = ~state.nu_recorded[j_old:j_new]
    state.nu[j_old:j_new][fresh] = w[fresh]
    state.nu_recorded[j_old:j_new] = True
    state.u[j_old:j_new] = 0.0
    state.j = j_new
    return removed


def advance_front(state: GridState, jump_threshold: float = 0.0,
                  scan_x_max: float | None = None) -> list[JumpRecord]:
    """Move the frontier by mass balance, then resolve any jump.

    The smooth advance iterates lam = alpha * (1 - mass) against the freezing
    of swallowed cells until the face index is stable, mirroring the particle
    cascade.  Then the jump rule is scanned against the discrete temperature
    CDF at resolution dx (no bisection: sampled data).  Jump records beyond
    jump_threshold are returned.  alpha = 0 leaves the frontier at 0.
    """
    if state.alpha == 0.0:
        state.lam = 0.0
        return []
    records: list[JumpRecord] = []
    n = len(state.u)
    for _ in range(n + 2):
        moved = False
        # smooth advance: freeze cells the balance frontier has swept past
        lam = state.alpha * (1.0 - state.mass)
        j_target = int(round(lam / state.dx))
        if j_target > state.j:
            _freeze_cells(state, min(j_target, n), None)
            lam = state.alpha * (1.0 - state.mass)
            moved = True
        # jump scan from the current face
        x_face = state.j * state.dx
        upper = scan_x_max if scan_x_max is not None else state.alpha + 2 * state.dx
        upper = max(state.dx, min(upper, (n - state.j) * state.dx))
        res = continuum_jump(_discrete_cdf(state), x_face, state.alpha,
                             ScanSpec(h_scan=state.dx, x_max=upper, refine=False))
        if res.delta > 0 and res.absorbed_mass > 0:
            j_jump = min(int(round((x_face + res.delta) / state.dx)), n)
            if j_jump > state.j:
                lam_minus = lam
                pre_vals = state.u[state.j:j_jump].copy()
                boundary_val = float(pre_vals[0])
                removed = _freeze_cells(state, j_jump, pre_vals)
                lam = state.alpha * (1.0 - state.mass)
                if lam - lam_minus > jump_threshold:
                    records.append(JumpRecord(state.t, lam_minus, lam, mass=removed,
                                              pre_jump_boundary_value=boundary_val))
                moved = True
        if not moved:
            break
    state.lam = state.alpha * (1.0 - state.mass)
    if state.j >= n:
        raise TruncationError("frontier reached the right wall; enlarge x_max")
    return records


def run_grid(d, alpha: float, t_end: float, dt: float, dx: float, x_max: float,
             sample_every: int = 1, jump_threshold: float = 0.0,
             wall_guard: float = WALL_GUARD, stop_mass: float | None = None,
             ) -> tuple[FrontierPath, Field, WeightField]:
    """Full grid simulation from a Density.

    The t=0 jump is resolved against the exact density CDF (with bisection)
    before any diffusion; afterwards each step is diffuse_step followed by
    advance_front.  The run aborts with TruncationError when the mass in the
    wall cell exceeds wall_guard (the truncated domain stopped being a faithful
    picture of the half-line).  stop_mass ends the run early once the
    surviving mass drops below it.  Returns the frontier path, the sampled
    temperature field, and the recorded stopped-mass weight.
    """
    if alpha < 0:
        raise ConfigError("alpha must be nonnegative")
    if t_end <= 0 or dt <= 0 or dx <= 0:
        raise ConfigError("t_end, dt, dx must be positive")
    if x_max < alpha + d.support_max:
        raise ConfigError(f"x_max must cover alpha + support = {alpha + d.support_max}")
    if sample_every < 1:
        raise ConfigError("sample_every must be >= 1")

    n = int(round(x_max / dx))
    if abs(n * dx - x_max) > 1e-9 * max(1.0, x_max):
        raise ConfigError("x_max must be an integer multiple of dx")
    edges = np.arange(n + 1) * dx
    x = 0.5 * (edges[:-1] + edges[1:])
    u = d.cell_averages(edges)
    state = GridState(x=x, u=u, j=0, lam=0.0, t=0.0, alpha=alpha, dx=dx)

    jumps: list[JumpRecord] = []
    if alpha > 0:
        gap = float(np.min(np.diff(d.breaks)))
        h0 = min(dx, 0.5 * gap, alpha / 64)
        res0 = continuum_jump(d.cdf, 0.0, alpha,
                              ScanSpec(h_scan=h0, x_max=alpha + h0, refine=True))
        if res0.delta > 0:
            j0 = min(int(round(res0.delta / dx)), n)
            pre_vals = state.u[0:j0].copy()
            removed = _freeze_cells(state, j0, pre_vals)
            state.lam = alpha * (1.0 - state.mass)
            if state.lam > jump_threshold:
                jumps.append(JumpRecord(0.0, 0.0, state.lam, mass=removed,
                                        pre_jump_boundary_value=float(d.value_at(0.5 * h0))))
    # settle any residual smooth advance from discretization of the jump
    jumps.extend(advance_front(state, jump_threshold=jump_threshold))

    times = [0.0]
    lams = [state.lam]
    fidx = [state.j]
    rows = [state.u.copy()]

    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ConfigError("t_end shorter than one step")
    for k in range(1, n_steps + 1):
        diffuse_step(state, dt)
        jumps.extend(advance_front(state, jump_threshold=jump_threshold))
        if state.wall_cell_mass() >= wall_guard:
            raise TruncationError(
                f"mass {state.wall_cell_mass():.3e} in the wall cell at t={state.t:.4f} "
                f"exceeds the guard {wall_guard:.1e}; enlarge x_max")
        if k % sample_every == 0 or k == n_steps:
            times.append(state.t)
            lams.append(state.lam)
            fidx.append(state.j)
            rows.append(state.u.copy())
        if stop_mass is not None and state.mass < stop_mass:
            if k % sample_every != 0 and k != n_steps:
                times.append(state.t)
                lams.append(state.lam)
                fidx.append(state.j)
                rows.append(state.u.copy())
            break

    path = FrontierPath(times=np.array(times), lam=np.array(lams), alpha=alpha,
                        jumps=jumps,
                        meta={"method": "grid", "dt": dt, "dx": dx, "x_max": x_max,
                              "sample_every": sample_every})
    fld = Field(x=x, t=np.array(times), values=np.array(rows),
                frontier_index=np.array(fidx), lam=np.array(lams), alpha=alpha,
                meta={"method": "grid", "dt": dt, "dx": dx})
    weights = WeightField(x=x, nu=state.nu.copy(), alpha=alpha,
                          recorded=state.nu_recorded.copy())
    return path, fld, weights
