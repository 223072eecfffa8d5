"""One iteration of the interface scheme and the full time march.

Each step smooths the current profile, classifies the interface from the
smoothed value there (left-moving above +1, right-moving below -1, standing
inside the closed band), relocates the interface by a leftward cell scan plus
bisection, and rebuilds the profile by adding the decaying jump layer at the
new position.  The one-sided limits are set analytically from the smoothed
interface value, so the height-2 jump is exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convolve import Smoothed, make_convolver
from .kernels import jump_layer
from .profile import (
    WHOLE_LINE,
    AdmissibilityReport,
    Grid,
    Profile,
    SimState,
    check_admissible,
)

LM = "LM"
RM = "RM"
ST = "ST"
NO_MODE = "none"

__all__ = [
    "LM",
    "RM",
    "ST",
    "NO_MODE",
    "DomainExhausted",
    "AdmissibilityError",
    "classify",
    "relocate_interface",
    "step",
    "run",
    "StepOutcome",
    "Trajectory",
    "RunResult",
]


class DomainExhausted(RuntimeError):
    """No level crossing for the relocated interface inside the domain."""


class AdmissibilityError(RuntimeError):
    """Initial state rejected under strict admissibility checking."""


def classify(u_tilde_at_xi: float) -> str:
    """Propagation mode from the smoothed interface value.

    Thresholds are exact: the standing band is the closed interval [-1, 1].
    """
    v = float(u_tilde_at_xi)
    if math.isnan(v):
        raise ValueError("cannot classify NaN interface value")
    if v > 1.0:
        return LM
    if v < -1.0:
        return RM
    return ST


def _bisect(f, lo: float, hi: float, tol: float, max_iter: int = 100) -> tuple[float, float]:
    """Root of f in [lo, hi] with f(lo) <= 0 < f(hi); returns (root, |f(root)|)."""
    flo = f(lo)
    if flo == 0.0:
        return lo, 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) <= tol or (hi - lo) <= 1e-16 * max(1.0, abs(mid)):
            return mid, abs(fmid)
        if fmid <= 0.0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return mid, abs(f(mid))


def _scan_left(eval_fn, nodes, values, xi_old: float, level: float, tol: float,
               extend: int) -> tuple[float, float]:
    """Rightmost crossing of `level` left of xi_old, at cell resolution.

    Walks nodes leftward for the first sign change of eval - level, then
    bisects inside the bracketing cell.  `extend` > 0 appends that many
    virtual cells beyond the left end (whole-line evaluators stay valid
    there).
    """
    phi = values - level
    mask = (nodes <= xi_old) & (phi <= 0.0)
    if np.any(mask):
        j = int(np.max(np.nonzero(mask)[0]))
        right = min(nodes[j + 1], xi_old) if j + 1 < len(nodes) else xi_old
        return _bisect(lambda z: eval_fn(z) - level, nodes[j], right, tol)
    if extend > 0:
        h = nodes[1] - nodes[0]
        right = nodes[0]
        for m in range(1, extend + 1):
            left = nodes[0] - m * h
            if eval_fn(left) - level <= 0.0:
                return _bisect(lambda z: eval_fn(z) - level, left, right, tol)
            right = left
    raise DomainExhausted(
        f"no crossing of level {level} left of xi={xi_old:.6g} inside the domain"
    )


def relocate_interface(smoothed: Smoothed, xi_old: float, mode: str, tol: float,
                       eps: float | None = None) -> tuple[float, float]:
    """New interface position for a moving mode.

    Left-moving: the maximal xi' < xi_old with value +1, found by the leftward
    cell scan.  Right-moving: the minimal xi' > xi_old with value -1, realized
    by mirror symmetry (x -> 2 xi_old - x, u -> -u) on the left-moving path.
    Whole-line evaluators are widened once by 40 kernel widths before the scan
    gives up; bounded grids fail immediately.
    """
    if mode == ST:
        return xi_old, 0.0
    g = smoothed.grid
    extend = 0
    if g.kind == WHOLE_LINE:
        reach = 40.0 * eps if eps else 10.0 * (g.right - g.left)
        extend = int(np.ceil(reach / g.h))
    nodes = g.x
    if mode == LM:
        return _scan_left(smoothed.eval, nodes, smoothed.samples, xi_old, 1.0, tol, extend)
    if mode == RM:
        m_nodes = (2.0 * xi_old - nodes)[::-1]
        m_values = -smoothed.samples[::-1]
        root, resid = _scan_left(lambda z: -smoothed.eval(2.0 * xi_old - z),
                                 m_nodes, m_values, xi_old, 1.0, tol, extend)
        return 2.0 * xi_old - root, resid
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class StepOutcome:
    state_next: SimState
    mode: str
    u_tilde_at_xi: float
    xi_shift: float
    root_residual: float


def step(state: SimState, convolver, eps: float, root_tol: float = 1e-12) -> StepOutcome:
    """One scheme iteration: smooth, classify, relocate, rebuild."""
    smoothed = convolver.smooth(state.u)
    v = float(smoothed.eval(state.xi))
    mode = classify(v)
    if mode == ST:
        xi_new, resid = state.xi, 0.0
        ifc = v
    else:
        xi_new, resid = relocate_interface(smoothed, state.xi, mode, root_tol, eps=eps)
        ifc = float(smoothed.eval(xi_new))

    x = state.u.grid.x
    layer = jump_layer(eps, x - xi_new)
    layer = np.where(np.abs(x - xi_new) <= state.u.node_snap, 0.0, layer)
    u_next = Profile(
        state.u.grid,
        smoothed.samples + layer,
        jump_pos=xi_new,
        left_limit=ifc - 1.0,
        right_limit=ifc + 1.0,
    )
    state_next = SimState(u_next, xi_new, state.alpha, state.n + 1, mode)
    return StepOutcome(state_next, mode, v, state.xi - xi_new, resid)


@dataclass
class Trajectory:
    """Per-step record of the march: interface curve, modes, interface p values."""

    eps: float
    alpha: float
    times: np.ndarray
    xis: np.ndarray
    modes: list[str]
    p_at_xi: np.ndarray
    shifts: np.ndarray
    root_residuals: np.ndarray
    jump_errors: np.ndarray
    snapshots: dict[int, Profile] = field(default_factory=dict)
    snapshot_times: dict[int, float] = field(default_factory=dict)
    admissibility: list[AdmissibilityReport] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def mode_of_step(self, n: int) -> str:
        """Mode of the transition n -> n+1 (recorded on the arrival index)."""
        return self.modes[n + 1]


@dataclass
class RunResult:
    trajectory: Trajectory
    ledger: object | None
    warnings: list[str]


def run(
    initial: SimState,
    eps: float,
    t_final: float,
    *,
    snapshot_times: tuple[float, ...] = (),
    ledger=None,
    strict: bool = False,
    adm_tol: float = 1e-8,
    root_tol: float = 1e-12,
) -> RunResult:
    """March the scheme for floor(t_final / eps**2) steps.

    Snapshots are taken at the nearest step time not exceeding each requested
    time.  Admissibility is evaluated every step; violations are recorded as
    warnings unless strict, in which case a failing initial state aborts.
    """
    eps2 = eps * eps
    if eps2 > t_final + 1e-15:
        raise ValueError("time step eps**2 exceeds the final time")
    n_steps = int(math.floor(t_final / eps2 + 1e-9))
    convolver = make_convolver(eps, initial.u.grid)

    report0 = check_admissible(initial, adm_tol, eps=eps)
    warnings: list[str] = []
    if not report0.passed:
        msg = f"initial state fails admissibility: {report0.summary()}"
        if strict:
            raise AdmissibilityError(msg)
        warnings.append(msg)

    snap_at: dict[int, float] = {}
    for t_req in snapshot_times:
        n_req = min(int(math.floor(t_req / eps2 + 1e-9)), n_steps)
        snap_at[n_req] = t_req

    times = np.arange(n_steps + 1) * eps2
    xis = np.empty(n_steps + 1)
    p_ifc = np.empty(n_steps + 1)
    shifts = np.zeros(n_steps + 1)
    resids = np.zeros(n_steps + 1)
    jump_errs = np.zeros(n_steps + 1)
    modes: list[str] = [NO_MODE]
    reports: list[AdmissibilityReport] = [report0]
    snapshots: dict[int, Profile] = {}
    snapshot_times_out: dict[int, float] = {}

    if ledger is not None:
        ledger.start(initial)

    state = initial
    xis[0] = state.xi
    p_ifc[0] = state.p_at_xi()
    jump_errs[0] = abs(state.u.jump_height - 2.0)
    if 0 in snap_at:
        snapshots[0] = state.u
        snapshot_times_out[0] = times[0]

    for n in range(n_steps):
        outcome = step(state, convolver, eps, root_tol)
        state = outcome.state_next
        k = n + 1
        xis[k] = state.xi
        p_ifc[k] = state.p_at_xi()
        shifts[k] = outcome.xi_shift
        resids[k] = outcome.root_residual
        jump_errs[k] = abs(state.u.jump_height - 2.0)
        modes.append(outcome.mode)
        reports.append(check_admissible(state, adm_tol, eps=eps))
        if ledger is not None:
            ledger.record(outcome, convolver)
        if k in snap_at:
            snapshots[k] = state.u
            snapshot_times_out[k] = times[k]

    traj = Trajectory(
        eps=eps,
        alpha=initial.alpha,
        times=times,
        xis=xis,
        modes=modes,
        p_at_xi=p_ifc,
        shifts=shifts,
        root_residuals=resids,
        jump_errors=jump_errs,
        snapshots=snapshots,
        snapshot_times=snapshot_times_out,
        admissibility=reports,
    )
    return RunResult(traj, ledger, warnings)
