"""Spatial profiles with one tracked discontinuity, and the interface state.

A profile is stored as samples on a uniform grid plus an optional tracked
point (``jump_pos``) carrying exact one-sided limits.  The tracked point is a
real number decoupled from the grid, so the height-2 jump of the solution is
represented exactly instead of being smeared over a cell.  Beyond the grid a
whole-line profile continues linearly with its end slopes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

WHOLE_LINE = "whole-line"
BOUNDED_NEUMANN = "bounded-neumann"

# relative cell fraction below which a point counts as sitting on a node
_NODE_SNAP = 1e-9


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [left, right] including both endpoints."""

    kind: str
    left: float
    right: float
    n_cells: int

    def __post_init__(self):
        if self.kind not in (WHOLE_LINE, BOUNDED_NEUMANN):
            raise ProfileError(f"unknown grid kind: {self.kind!r}")
        if not self.left < self.right:
            raise ProfileError("grid needs left < right")
        if self.n_cells < 2:
            raise ProfileError("grid needs at least 2 cells")

    @property
    def h(self) -> float:
        return (self.right - self.left) / self.n_cells

    @property
    def n_points(self) -> int:
        return self.n_cells + 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.left, self.right, self.n_points)

    @classmethod
    def from_spacing(cls, kind: str, left: float, right: float, h: float) -> "Grid":
        n = round((right - left) / h)
        if n < 2 or abs(n * h - (right - left)) > 1e-9 * max(1.0, abs(right - left)):
            raise ProfileError(f"spacing {h} does not tile [{left}, {right}]")
        return cls(kind, left, right, n)

    def require_resolves(self, eps: float) -> None:
        if self.h > eps / 4 + 1e-12 * eps:
            raise ProfileError(
                f"grid spacing {self.h:g} too coarse for eps={eps:g}; need h <= eps/4"
            )


def sign_offset(x, xi: float, snap: float):
    """+1 right of xi, -1 left, 0 on a coincident node (midpoint convention)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > xi, 1.0, -1.0)
    out = np.where(np.abs(x - xi) <= snap, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Profile:
    """Grid samples plus at most one tracked point with exact one-sided limits.

    A tracked point with equal limits marks a kink (used for the continuous
    field p, whose interface value is pinned exactly); unequal limits mark a
    jump.  Samples at a node coinciding with the tracked point hold the
    midpoint of the two limits.
    """

    grid: Grid
    values: np.ndarray
    jump_pos: float | None = None
    left_limit: float | None = None
    right_limit: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ProfileError("values shape does not match grid")
        if not np.all(np.isfinite(v)):
            raise ProfileError("profile samples must be finite")
        object.__setattr__(self, "values", v)
        if self.jump_pos is not None:
            if self.left_limit is None or self.right_limit is None:
                raise ProfileError("tracked point needs both one-sided limits")
            if not (self.grid.left <= self.jump_pos <= self.grid.right):
                raise ProfileError("tracked point outside the grid")
        elif self.left_limit is not None or self.right_limit is not None:
            raise ProfileError("one-sided limits require jump_pos")

    @property
    def jump_height(self) -> float:
        if self.jump_pos is None:
            return 0.0
        return self.right_limit - self.left_limit

    @property
    def node_snap(self) -> float:
        return self.grid.h * _NODE_SNAP

    def interp(self, x):
        """Piecewise-linear value of the samples; linear tails beyond the grid.

        The tracked point is ignored here; exact interface values must be read
        from the stored limits.
        """
        x = np.asarray(x, dtype=float)
        g = self.grid
        out = np.interp(x, g.x, self.values)
        lo = x < g.left
        hi = x > g.right
        if np.any(lo):
            out = np.where(lo, self.values[0] + self.tail_slopes()[0] * (x - g.left), out)
        if np.any(hi):
            out = np.where(hi, self.values[-1] + self.tail_slopes()[1] * (x - g.right), out)
        return out if out.ndim else float(out)

    def tail_slopes(self) -> tuple[float, float]:
        h = self.grid.h
        v = self.values
        return (v[1] - v[0]) / h, (v[-1] - v[-2]) / h

    def growth_witnesses(self) -> tuple[float, float]:
        """Constants (a, b) with |f(x)| <= a + b |x| for the whole-line extension."""
        a = float(np.max(np.abs(self.values)))
        if self.jump_pos is not None:
            a = max(a, abs(self.left_limit), abs(self.right_limit))
        sl, sr = self.tail_slopes()
        a += max(abs(sl) * abs(self.grid.left), abs(sr) * abs(self.grid.right))
        return a, max(abs(sl), abs(sr))

    def with_values(self, values: np.ndarray) -> "Profile":
        return replace(self, values=np.asarray(values, dtype=float))

    def without_jump(self) -> "Profile":
        return Profile(self.grid, self.values)


@dataclass(frozen=True)
class SimState:
    """Interface state: solution profile, interface position, step index, majorant slope."""

    u: Profile
    xi: float
    alpha: float
    n: int = 0
    mode_last: str | None = None

    def __post_init__(self):
        if self.u.jump_pos is None:
            raise ProfileError("state profile must track its interface jump")
        if abs(self.u.jump_pos - self.xi) > self.u.node_snap:
            raise ProfileError("state xi must coincide with the tracked jump")
        if self.alpha <= 0:
            raise ProfileError("majorant slope alpha must be positive")

    @property
    def time(self) -> float:
        return self.n  # scaled by eps**2 at call sites that know eps

    def p_at_xi(self) -> float:
        """Interface value of p = u - sgn(. - xi), pinned by the left limit."""
        return self.u.left_limit + 1.0


@dataclass(frozen=True)
class ConditionReport:
    passed: bool
    worst: float
    where: float | None


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per-condition outcome of the admissible-state check.

    Conditions: 1 regularity (finite samples), 2 jump of height 2,
    3 sign bounds (-2 <= u <= 0 left, u >= 0 right), 4 linear majorant
    u <= alpha (x - xi) + 2 on the right.
    """

    conditions: tuple[ConditionReport, ConditionReport, ConditionReport, ConditionReport]
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def worst_violations(self) -> list[float]:
        return [c.worst for c in self.conditions]

    def summary(self) -> str:
        marks = ["ok" if c.passed else f"FAIL({c.worst:.3g}@{c.where})" for c in self.conditions]
        return "jump2={1} sign={2} majorant={3} regularity={0}".format(*marks)


def to_p(state: SimState, tol: float = 1e-8) -> Profile:
    """p = u - sgn(. - xi).  Continuous when the jump is 2; the interface value
    is carried as a tracked kink so the conversion round-trips exactly."""
    u = state.u
    if abs(u.jump_height - 2.0) > tol:
        raise ProfileError(
            f"interface jump {u.jump_height:.6g} != 2: p would stay discontinuous"
        )
    snap = u.node_snap
    p_vals = u.values - sign_offset(u.grid.x, state.xi, snap)
    p_ifc = 0.5 * ((u.left_limit + 1.0) + (u.right_limit - 1.0))
    return Profile(u.grid, p_vals, jump_pos=state.xi, left_limit=p_ifc, right_limit=p_ifc)


def from_p(p: Profile, xi: float) -> Profile:
    """Rebuild u = p + sgn(. - xi) with its exact height-2 interface jump."""
    if p.jump_pos is not None and abs(p.jump_pos - xi) <= p.node_snap:
        p_ifc = 0.5 * (p.left_limit + p.right_limit)
    else:
        p_ifc = p.interp(xi)
    snap = p.node_snap
    u_vals = p.values + sign_offset(p.grid.x, xi, snap)
    return Profile(p.grid, u_vals, jump_pos=xi, left_limit=p_ifc - 1.0, right_limit=p_ifc + 1.0)


def _tail_probes(grid: Grid, eps: float | None) -> tuple[np.ndarray, np.ndarray]:
    if grid.kind != WHOLE_LINE:
        return np.empty(0), np.empty(0)
    reach = 40.0 * (eps if eps else 10.0 * grid.h)
    left = grid.left - np.array([0.25, 0.5, 1.0]) * reach
    right = grid.right + np.array([0.25, 0.5, 1.0]) * reach
    return left, right


def check_admissible(state: SimState, tol: float = 1e-8, eps: float | None = None) -> AdmissibilityReport:
    """Evaluate the four admissibility conditions on the grid and at the exact limits.

    Whole-line profiles are additionally probed on their linear tails, where a
    too-steep right tail breaks the majorant and a descending left tail breaks
    the lower sign bound.
    """
    u = state.u
    x = u.grid.x
    v = u.values
    xi = state.xi
    snap = u.node_snap

    finite = np.all(np.isfinite(v)) and np.isfinite(u.left_limit) and np.isfinite(u.right_limit)
    c1 = ConditionReport(bool(finite), 0.0 if finite else np.inf, None)

    jump_err = abs(u.jump_height - 2.0)
    c2 = ConditionReport(jump_err <= tol, jump_err, xi)

    tails_l, tails_r = _tail_probes(u.grid, eps)
    left_x = np.concatenate([tails_l, x[x < xi - snap], [xi]])
    left_v = np.concatenate([u.interp(tails_l), v[x < xi - snap], [u.left_limit]])
    right_x = np.concatenate([[xi], x[x > xi + snap], tails_r])
    right_v = np.concatenate([[u.right_limit], v[x > xi + snap], u.interp(tails_r)])

    viol3 = np.concatenate([
        np.maximum(left_v - 0.0, 0.0),
        np.maximum(-2.0 - left_v, 0.0),
        np.maximum(-right_v, 0.0),
    ])
    loc3 = np.concatenate([left_x, left_x, right_x])
    k3 = int(np.argmax(viol3))
    c3 = ConditionReport(viol3[k3] <= tol, float(viol3[k3]), float(loc3[k3]))

    maj = state.alpha * (right_x - xi) + 2.0
    viol4 = np.maximum(right_v - maj, 0.0)
    k4 = int(np.argmax(viol4))
    c4 = ConditionReport(viol4[k4] <= tol, float(viol4[k4]), float(right_x[k4]))

    return AdmissibilityReport((c1, c2, c3, c4), tol)


def min_alpha(state: SimState) -> float:
    """Smallest valid majorant slope: sup of (u(x) - 2)/(x - xi) right of xi,
    clamped at 0.  Whole-line profiles include their right tail slope, which
    the quotient approaches at infinity."""
    u = state.u
    x = u.grid.x
    mask = x > state.xi + u.node_snap
    if not np.any(mask):
        return 0.0
    quot = (u.values[mask] - 2.0) / (x[mask] - state.xi)
    best = float(np.max(quot))
    if u.grid.kind == WHOLE_LINE:
        best = max(best, u.tail_slopes()[1])
    return max(best, 0.0)


def save_profile(path: str | Path, profile: Profile, alpha: float | None = None) -> None:
    """Write samples as CSV (columns x,value) plus a JSON sidecar with the
    tracked-point data."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for xi_, vi in zip(profile.grid.x, profile.values):
            w.writerow([f"{xi_:.17g}", f"{vi:.17g}"])
    sidecar = {
        "kind": profile.grid.kind,
        "jump_pos": profile.jump_pos,
        "left_limit": profile.left_limit,
        "right_limit": profile.right_limit,
        "alpha": alpha,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n"
    )


def load_profile(path: str | Path) -> tuple[Profile, float | None]:
    path = Path(path)
    xs, vs = [], []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x"]))
            vs.append(float(row["value"]))
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    x = np.asarray(xs)
    grid = Grid(meta.get("kind", WHOLE_LINE), x[0], x[-1], len(x) - 1)
    prof = Profile(
        grid,
        np.asarray(vs),
        jump_pos=meta["jump_pos"],
        left_limit=meta["left_limit"],
        right_limit=meta["right_limit"],
    )
    return prof, meta.get("alpha")
