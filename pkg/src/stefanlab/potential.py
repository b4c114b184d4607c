"""Time-tail potential of the temperature and its obstacle-problem structure.

The potential w(x, t) integrates the temperature over (t, t_end].  Where the
liquid has fully frozen inside the horizon the truncation is exact and w obeys
a weighted obstacle problem: w >= 0, w nonincreasing in t, and
w_t - w_xx/2 = -nu on {w > 0} with the stopped-mass weight nu.  Columns still
liquid at t_end carry an unknown tail, which every consumer here must either
avoid or flag.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from stefanlab.errors import ConfigError
from stefanlab.fields import Field, WeightField


def default_eps_w(dx: float, alpha: float) -> float:
    """Positivity floor for w: below this, sign information is noise.

    Set by the quadratic vanishing of w at a continuously-freezing frontier
    point, where w ~ (distance)^2 / alpha: one cell of distance gives
    dx^2/alpha, kept with a factor-10 safety margin.
    """
    return 10.0 * dx * dx / alpha


@dataclass
class PotentialField:
    """Sampled w on the field's space-time lattice.

    tail_bound holds, per column, the temperature at the final sample: zero
    exactly where the column froze inside the horizon, positive where a
    truncated time tail was discarded (no extrapolated tail is ever added in).
    """

    x: np.ndarray
    t: np.ndarray
    w: np.ndarray                     # shape (nt, nx)
    tail_bound: np.ndarray            # shape (nx,)
    alpha: float
    meta: dict = dc_field(default_factory=dict)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 0.0

    @property
    def dt_median(self) -> float:
        return float(np.median(np.diff(self.t))) if len(self.t) > 1 else 0.0

    def eps_w(self) -> float:
        return default_eps_w(self.dx, self.alpha)

    def freeze_index(self, eps: float | None = None) -> np.ndarray:
        """Per column, index of the first sample with w <= eps (len(t) if none).

        For columns frozen from the start this is 0; for columns positive
        through the horizon it is len(t), the caller's out-of-range marker.
        """
        eps = self.eps_w() if eps is None else eps
        below = self.w <= eps
        idx = np.argmax(below, axis=0)
        never = ~below.any(axis=0)
        idx = idx.astype(np.int64)
        idx[never] = len(self.t)
        return idx


def compute_w(field: Field, require_low_tail: bool = False,
              tail_cap: float = 1e-3) -> PotentialField:
    """Integrate the temperature tail by trapezoid from each sample to the end.

    The tail beyond the final sample is dropped, not modeled; the surviving
    mass at the final sample is reported per column as tail_bound.  With
    require_low_tail the call refuses fields whose surviving mass is above
    tail_cap, the precondition for obstacle-problem analysis.
    """
    t = np.asarray(field.t, dtype=float)
    u = np.asarray(field.values, dtype=float)
    if u.ndim != 2 or u.shape[0] != len(t):
        raise ConfigError("field values must be (len(t), len(x))")
    surviving = float(np.sum(u[-1]) * field.dx)
    if require_low_tail and surviving >= tail_cap:
        raise ConfigError(
            f"surviving mass {surviving:.3e} >= {tail_cap:.0e};"
            " run longer before potential analysis")
    dt_steps = np.diff(t)
    # reverse cumulative trapezoid: w[k] = sum_{j>=k} (u[j] + u[j+1])/2 * dt_j
    increments = 0.5 * (u[:-1] + u[1:]) * dt_steps[:, None]
    w = np.zeros_like(u)
    w[:-1] = np.cumsum(increments[::-1], axis=0)[::-1]
    tail = u[-1].copy()
    return PotentialField(x=field.x.copy(), t=t.copy(), w=w, tail_bound=tail,
                          alpha=field.alpha,
                          meta=dict(field.meta, surviving_mass=surviving))


@dataclass
class ResidualReport:
    """Interior misfit of w against the weighted obstacle equation."""

    l1: float                          # integral of |residual| over the region
    linf: float
    n_nodes: int
    eps_w: float
    margin: float
    count_w_negative: int              # w < -eps_w anywhere on the lattice
    count_w_t_positive: int            # centered w_t > eps_w in the region
    count_positive_after_freeze: int   # w > eps_w at nodes past their freeze
    complementarity_max: float = 0.0   # max |min(w, w_t - w_xx/2 + nu)|

    def to_dict(self) -> dict:
        return {
            "l1": self.l1, "linf": self.linf, "n_nodes": self.n_nodes,
            "eps_w": self.eps_w, "margin": self.margin,
            "count_w_negative": self.count_w_negative,
            "count_w_t_positive": self.count_w_t_positive,
            "count_positive_after_freeze": self.count_positive_after_freeze,
            "complementarity_max": self.complementarity_max,
        }


def obstacle_residual(w: PotentialField, nu: WeightField, interior_margin: float,
                      eps_w: float | None = None,
                      tail_free_only: bool = True,
                      tail_tol: float = 1e-12) -> ResidualReport:
    """Discrete residual w_t - w_xx/2 + nu * (w > eps_w) on a safe interior.

    The region keeps margin away from t = 0, t = t_end, each column's own
    freezing time, and the frontier in space.  With tail_free_only (the
    default) it is further restricted to columns whose three-point stencil
    is frozen at the final sample (tail_bound at most tail_tol): columns
    still liquid at t_end carry a missing time tail that would offset the
    residual by minus the final temperature.
    """
    if interior_margin <= 0:
        raise ConfigError("interior_margin must be positive")
    eps = w.eps_w() if eps_w is None else eps_w
    t, x, W = w.t, w.x, w.w
    nt, nx = W.shape
    if len(nu.nu) != nx:
        raise ConfigError("weight grid does not match potential grid")
    if nt < 3 or nx < 3:
        raise ConfigError("potential too small for centered differences")
    dt_steps = np.diff(t)
    dx = w.dx

    # per-column freeze time read where w first hits exact zero: w is
    # monotone in t and frozen cells hold exact zeros, so this is the true
    # s(x) on solver output (an eps crossing would sit far too early on
    # slowly-creeping frontiers, gutting the liquid-phase region)
    fidx = w.freeze_index(0.0)
    s_col = np.where(fidx < nt, t[np.minimum(fidx, nt - 1)], np.inf)
    t_hi = t[-1] - interior_margin

    col_ok = np.zeros(nx, dtype=bool)
    col_ok[1:-1] = True
    if tail_free_only:
        dead = w.tail_bound <= tail_tol
        col_ok[1:-1] &= dead[:-2] & dead[1:-1] & dead[2:]

    # frontier position per row: first strictly positive column.  Frozen
    # cells hold exact zeros, so w > 0 marks the true interface; the floor
    # eps would misplace it by the sub-threshold band, which is still liquid.
    front_col = np.argmax(W > 0, axis=1)
    has_liquid = (W > 0).any(axis=1)
    lam_row = np.where(has_liquid, x[np.minimum(front_col, nx - 1)], np.inf)

    rows = np.arange(1, nt - 1)
    w_t = (W[2:] - W[:-2]) / (t[2:] - t[:-2])[:, None]
    w_xx = (W[1:-1, :-2] - 2.0 * W[1:-1, 1:-1] + W[1:-1, 2:]) / dx ** 2
    chi = W[1:-1, 1:-1] > eps
    resid = w_t[:, 1:-1] - 0.5 * w_xx + nu.nu[None, 1:-1] * chi

    tt = t[rows][:, None]
    xx = x[None, 1:-1]
    region = (
        (tt >= interior_margin) & (tt <= t_hi)
        & (np.abs(tt - s_col[None, 1:-1]) >= interior_margin)
        & (np.abs(xx - lam_row[rows][:, None]) >= interior_margin)
        & col_ok[None, 1:-1]
    )

    n = int(np.sum(region))
    if n == 0:
        l1 = linf = comp_max = 0.0
    else:
        vals = np.abs(resid[region])
        cell = dx * float(np.median(dt_steps))
        l1 = float(np.sum(vals) * cell)
        linf = float(np.max(vals))
        # complementarity slack: on the liquid side the operator misfit
        # vanishes, on the frozen side w itself does, so the pointwise
        # minimum of the two must vanish throughout the region
        slack = w_t[:, 1:-1] - 0.5 * w_xx + nu.nu[None, 1:-1]
        comp = np.abs(np.minimum(W[1:-1, 1:-1], slack))
        comp_max = float(np.max(comp[region]))

    count_neg = int(np.sum(W < -eps))
    count_wt_pos = int(np.sum((w_t[:, 1:-1] > eps) & region))
    # nodes one full margin past their own freezing time must sit at zero
    past = (tt - s_col[None, 1:-1]) >= interior_margin
    count_pos_frozen = int(np.sum((W[1:-1, 1:-1] > eps) & past & col_ok[None, 1:-1]))

    return ResidualReport(l1=l1, linf=linf, n_nodes=n, eps_w=eps,
                          margin=interior_margin, count_w_negative=count_neg,
                          count_w_t_positive=count_wt_pos,
                          count_positive_after_freeze=count_pos_frozen,
                          complementarity_max=comp_max)


def residual_l1_window(w: PotentialField, nu: WeightField, window: tuple,
                       eps_w: float | None = None) -> tuple[float, int]:
    """Weighted L1 of the parabolic residual over a fixed space-time box.

    Unlike obstacle_residual, which carves its region out of each run's own
    frontier geometry, the box here is level independent, so the returned
    number is comparable across refinement levels. Callers pick a box that
    stays clear of the domain edges; nodes whose centered stencils fall off
    the array are dropped.
    """
    x_lo, x_hi, t_lo, t_hi = window
    if t_hi <= t_lo or x_hi <= x_lo:
        raise ConfigError("window must be a nonempty box")
    W, t, x, dx = w.w, w.t, w.x, w.dx
    if W.shape[0] < 3 or W.shape[1] < 3:
        raise ConfigError("potential field too small for the stencils")
    eps = w.eps_w() if eps_w is None else eps_w

    w_t = (W[2:] - W[:-2]) / (t[2:] - t[:-2])[:, None]
    w_xx = (W[1:-1, :-2] - 2.0 * W[1:-1, 1:-1] + W[1:-1, 2:]) / dx ** 2
    chi = W[1:-1, 1:-1] > eps
    resid = w_t[:, 1:-1] - 0.5 * w_xx + nu.nu[None, 1:-1] * chi

    tt = t[1:-1, None]
    xx = x[None, 1:-1]
    box = (tt >= t_lo) & (tt <= t_hi) & (xx >= x_lo) & (xx <= x_hi)
    cell = dx * w.dt_median
    return float(np.sum(np.abs(resid[box])) * cell), int(np.sum(box))


@dataclass
class BoundReport:
    """One-sided difference-quotient extrema over a space-time window."""

    window: tuple                      # (x_lo, x_hi, t_lo, t_hi)
    pad: float
    max_w_t: float                     # should be <= 0 up to quadrature noise
    max_abs_w_xx: float
    max_u_t: float                     # forward quotient, liquid side only
    max_u_xx: float                    # centered, liquid side only (signed)
    min_u_x: float                     # centered, liquid side only
    near_front_max_abs_u_xx: float     # unsigned, inside the pad band
    n_liquid_nodes: int

    def to_dict(self) -> dict:
        return {
            "window": list(self.window), "pad": self.pad,
            "max_w_t": self.max_w_t, "max_abs_w_xx": self.max_abs_w_xx,
            "max_u_t": self.max_u_t, "max_u_xx": self.max_u_xx,
            "min_u_x": self.min_u_x,
            "near_front_max_abs_u_xx": self.near_front_max_abs_u_xx,
            "n_liquid_nodes": self.n_liquid_nodes,
        }


def bound_suite(field: Field, w: PotentialField | None, window: tuple,
                pad: float = 0.0) -> BoundReport:
    """Extrema of the discrete quotients that the theory bounds one-sidedly.

    u quantities are restricted to nodes whose whole stencil stays strictly
    liquid and at least pad above the frontier; the same stencil within the
    pad band feeds the unsigned curvature report, the negative control that
    is allowed to blow up at the frontier.
    """
    x_lo, x_hi, t_lo, t_hi = window
    if t_lo < 0 or t_hi <= t_lo or x_hi <= x_lo:
        raise ConfigError("window must be a nonempty box with t_lo >= 0")
    t, x, u = field.t, field.x, field.values
    nt, nx = u.shape
    if nt < 3 or nx < 3:
        raise ConfigError("field too small for the difference stencils")
    dx = field.dx
    lam = field.lam

    in_x = (x >= x_lo) & (x <= x_hi)
    in_t = (t >= t_lo) & (t <= t_hi)

    max_w_t = -np.inf
    max_abs_w_xx = 0.0
    if w is not None:
        wt = (w.w[2:] - w.w[:-2]) / (w.t[2:] - w.t[:-2])[:, None]
        wxx = (w.w[:, :-2] - 2.0 * w.w[:, 1:-1] + w.w[:, 2:]) / w.dx ** 2
        w_in_x = (w.x >= x_lo) & (w.x <= x_hi)
        box_t = wt[(w.t[1:-1] >= t_lo) & (w.t[1:-1] <= t_hi)][:, w_in_x]
        if box_t.size:
            max_w_t = float(np.max(box_t))
        box_xx = wxx[(w.t >= t_lo) & (w.t <= t_hi)][:, w_in_x[1:-1]]
        if box_xx.size:
            max_abs_w_xx = float(np.max(np.abs(box_xx)))

    # liquid-stencil masks
    dist = x[None, :] - lam[:, None]
    liquid = (u > 0) & (dist > 0)
    core = liquid & (dist >= pad)

    max_u_t = -np.inf
    max_u_xx = -np.inf
    min_u_x = np.inf
    near_max = 0.0
    n_nodes = 0

    rows = np.where(in_t)[0]
    rows = rows[(rows >= 1) & (rows < nt - 1)]
    cols = np.where(in_x)[0]
    cols = cols[(cols >= 1) & (cols < nx - 1)]
    if len(rows) and len(cols):
        r = rows[:, None]
        c = cols[None, :]
        stencil_core = core[r, c] & core[r, c - 1] & core[r, c + 1] & core[r + 1, c]
        stencil_near = (liquid[r, c] & liquid[r, c - 1] & liquid[r, c + 1]
                        & (dist[r, c] < pad))
        u_t = (u[r + 1, c] - u[r, c]) / (t[r + 1] - t[r])
        u_xx = (u[r, c - 1] - 2.0 * u[r, c] + u[r, c + 1]) / dx ** 2
        u_x = (u[r, c + 1] - u[r, c - 1]) / (2.0 * dx)
        n_nodes = int(np.sum(stencil_core))
        if n_nodes:
            max_u_t = float(np.max(u_t[stencil_core]))
            max_u_xx = float(np.max(u_xx[stencil_core]))
            min_u_x = float(np.min(u_x[stencil_core]))
        if np.any(stencil_near):
            near_max = float(np.max(np.abs(u_xx[stencil_near])))

    return BoundReport(window=(x_lo, x_hi, t_lo, t_hi), pad=pad,
                       max_w_t=max_w_t, max_abs_w_xx=max_abs_w_xx,
                       max_u_t=max_u_t, max_u_xx=max_u_xx, min_u_x=min_u_x,
                       near_front_max_abs_u_xx=near_max, n_liquid_nodes=n_nodes)
