"""Convergence harness, limit-model residuals, and kernel-gap studies.

The limit model couples linear bulk diffusion of p to the Stefan relation
2 xi' + [d_x p] = 0 and a hysteretic flow rule (motion only at p = 1 at the
interface).  None of its constants are known a priori, so the checks here are
stability and decay measurements across a step-size sweep rather than
absolute thresholds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .convolve import kernel_power
from .fluctuations import FluctuationLedger, essential_fluctuation_at, split_fluctuations
from .kernels import fourier_gap_integrals, heat_kernel
from .profile import WHOLE_LINE, Grid, Profile
from .scheme import LM, RM, ST, Trajectory

__all__ = [
    "heat_solution",
    "stefan_residual",
    "interface_slope_jump",
    "flow_rule_violations",
    "depinning_time",
    "holder_quotients",
    "kernel_gap_study",
    "bulk_residual",
    "SweepConfig",
    "DiagnosticsReport",
]


def _ramp_primitive(z, t: float):
    """Heat evolution of the unit ramp (x)_+ evaluated at offset z."""
    z = np.asarray(z, dtype=float)
    s = 2.0 * math.sqrt(t)
    return 0.5 * z * (1.0 + erf(z / s)) + math.sqrt(t / math.pi) * np.exp(-(z / s) ** 2)


def heat_solution(p_ini: Profile, t: float, x):
    """Exact heat evolution of a piecewise-linear profile with linear tails.

    The profile decomposes into a line plus one ramp per kink; lines are
    invariant and each ramp evolves to an erf/Gaussian pair.  Kink weights
    below rounding are dropped.
    """
    if t <= 0:
        raise ValueError("heat_solution needs t > 0")
    x = np.asarray(x, dtype=float)
    g = p_ini.grid
    v = p_ini.values
    h = g.h
    slopes = np.diff(v) / h
    kinks = np.diff(slopes)
    scale = max(1.0, float(np.max(np.abs(slopes))))
    out = (v[0] + slopes[0] * (x - g.x[0])).astype(float)
    for j in np.nonzero(np.abs(kinks) > 1e-12 * scale)[0]:
        out += kinks[j] * _ramp_primitive(x - g.x[j + 1], t)
    return out if out.ndim else float(out)


def second_derivative_mass(p_ini: Profile) -> float:
    """Total variation of the slope (sum of |kink| weights) of the initial p."""
    slopes = np.diff(p_ini.values) / p_ini.grid.h
    return float(np.sum(np.abs(np.diff(slopes))))


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def _one_sided_slopes(ledger: FluctuationLedger, n: int, xi: float, probe: float):
    x = ledger.grid.x
    p = ledger.p_hist[n]
    right = (x >= xi + probe) & (x <= xi + 2.0 * probe)
    left = (x >= xi - 2.0 * probe) & (x <= xi - probe)
    if right.sum() < 3 or left.sum() < 3:
        raise ValueError("probe window leaves the grid")
    return _fit_slope(x[left], p[left]), _fit_slope(x[right], p[right])


def interface_slope_jump(ledger: FluctuationLedger, traj: Trajectory, t: float,
                         probe: float) -> float:
    """Jump of d_x p across the interface, from least-squares slopes fitted
    on [xi + probe, xi + 2 probe] and its mirror."""
    n = ledger.index_of(t)
    sl, sr = _one_sided_slopes(ledger, n, float(traj.xis[n]), probe)
    return sr - sl


def interface_speed(traj: Trajectory, t: float, window: int = 10) -> float:
    """Centered difference of the interface curve over `window` steps."""
    eps2 = traj.eps ** 2
    n = int(round(t / eps2))
    half = window // 2
    lo, hi = n - half, n + half
    if lo < 0 or hi > traj.n_steps:
        raise ValueError("speed window leaves the recorded time range")
    return float((traj.xis[hi] - traj.xis[lo]) / (window * eps2))


def stefan_residual(traj: Trajectory, ledger: FluctuationLedger, t: float,
                    probe: float) -> float:
    """|2 xi' + [d_x p]| with the speed from a 10-step window and slopes fitted
    outside the probe collar (>= 3 eps keeps the jump layer below e**-3)."""
    if probe < 3.0 * traj.eps:
        raise ValueError("probe distance must be at least 3 eps")
    speed = interface_speed(traj, t)
    jump = interface_slope_jump(ledger, traj, t, probe)
    return abs(2.0 * speed + jump)


@dataclass(frozen=True)
class FlowRuleViolation:
    n: int
    t: float
    mode: str
    reason: str
    magnitude: float


def flow_rule_violations(traj: Trajectory, tol: float) -> list[FlowRuleViolation]:
    """Hysteresis and monotonicity audit of a trajectory.

    Standing steps keep the interface p value inside [-1 - tol, 1 + tol];
    left-moving steps pin it to 1 within tol; the interface never increases;
    right-moving never fires from admissible data.
    """
    out: list[FlowRuleViolation] = []
    for n in range(1, len(traj.times)):
        t = float(traj.times[n])
        mode = traj.modes[n]
        p = float(traj.p_at_xi[n])
        if mode == ST:
            if abs(p) > 1.0 + tol:
                out.append(FlowRuleViolation(n, t, mode, "standing p outside [-1,1]", abs(p) - 1.0))
        elif mode == LM:
            if abs(p - 1.0) > tol:
                out.append(FlowRuleViolation(n, t, mode, "moving p != 1", abs(p - 1.0)))
        elif mode == RM:
            out.append(FlowRuleViolation(n, t, mode, "right-moving step", 1.0))
        if traj.xis[n] > traj.xis[n - 1] + 1e-12:
            out.append(FlowRuleViolation(n, t, mode, "interface moved right",
                                         float(traj.xis[n] - traj.xis[n - 1])))
    return out


def depinning_time(traj: Trajectory) -> float:
    """First step time with a left-moving transition; inf when pinned forever."""
    for n, mode in enumerate(traj.modes):
        if mode == LM:
            return float(traj.times[n])
    return math.inf


def holder_quotients(ledger: FluctuationLedger, gamma: float, n_pairs: int,
                     rng: np.random.Generator, t_max: float,
                     x_window: tuple[float, float]) -> tuple[float, float]:
    """Empirical Hoelder quotients of the essential fluctuation stage.

    Time quotient: sup |f(t2,x) - f(t1,x)| / |t2 - t1|**gamma over random
    triples; space quotient: sup |f(t,x2) - f(t,x1)| / sqrt|x2 - x1|.
    """
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    xis = ledger.xis
    eps = ledger.eps
    t1 = rng.uniform(0.0, t_max, n_pairs)
    t2 = rng.uniform(0.0, t_max, n_pairs)
    t_lo, t_hi = np.minimum(t1, t2), np.maximum(t1, t2)
    keep = t_hi - t_lo > 1e-12
    x = rng.uniform(x_window[0], x_window[1], n_pairs)
    df = np.abs(essential_fluctuation_at(xis, eps, t_hi[keep], x[keep])
                - essential_fluctuation_at(xis, eps, t_lo[keep], x[keep]))
    time_q = float(np.max(df / (t_hi[keep] - t_lo[keep]) ** gamma)) if np.any(keep) else 0.0

    t = rng.uniform(0.0, t_max, n_pairs)
    x1 = rng.uniform(x_window[0], x_window[1], n_pairs)
    x2 = rng.uniform(x_window[0], x_window[1], n_pairs)
    keep = np.abs(x2 - x1) > 1e-12
    df = np.abs(essential_fluctuation_at(xis, eps, t[keep], x2[keep])
                - essential_fluctuation_at(xis, eps, t[keep], x1[keep]))
    space_q = float(np.max(df / np.sqrt(np.abs(x2[keep] - x1[keep])))) if np.any(keep) else 0.0
    return time_q, space_q


def kernel_gap_study(eps: float, n_list: list[int], q_ini: Profile | None = None,
                     spacing: float | None = None) -> dict:
    """Sup-norm gap between n-fold powers of the exponential kernel and the
    Gaussian, raw and normalized by eps n**1.5; optionally the same gap after
    convolving a data profile, normalized by sqrt(n)/eps.

    Includes the bounding frequency-side integrals for the standard n sweep.
    """
    n_list = sorted(int(n) for n in n_list)
    n_max = n_list[-1]
    h = spacing if spacing else eps / 20.0
    reach = 20.0 * eps * math.sqrt(n_max) + 10.0 * h
    grid = Grid.from_spacing(WHOLE_LINE, -reach, reach, h)

    from .convolve import WholeLineConvolver
    from .kernels import exp_kernel

    conv = WholeLineConvolver(eps, grid)
    cur = Profile(grid, exp_kernel(eps, grid.x))
    rows = []
    want = set(n_list)
    gaps = {}
    if 1 in want:
        gaps[1] = float(np.max(np.abs(cur.values - heat_kernel(eps * eps, grid.x))))
    for n in range(2, n_max + 1):
        cur = conv.smooth(cur).as_profile()
        if n in want:
            gaps[n] = float(np.max(np.abs(cur.values - heat_kernel(n * eps * eps, grid.x))))

    data_gaps = {}
    if q_ini is not None:
        # run on a grid wide enough for the diffusion width at n_max; the
        # piecewise-linear data extend exactly through their linear tails
        span = max(abs(q_ini.grid.left), abs(q_ini.grid.right))
        d_reach = h * math.ceil((reach + span) / h)
        d_grid = Grid.from_spacing(WHOLE_LINE, -d_reach, d_reach, h)
        dconv = WholeLineConvolver(eps, d_grid)
        dcur = Profile(d_grid, q_ini.interp(d_grid.x))
        for n in range(1, n_max + 1):
            dcur = dconv.smooth(dcur).as_profile()
            if n in want:
                # the compact profile describes the same function; its kink
                # list is free of resampling noise
                data_gaps[n] = float(np.max(np.abs(
                    dcur.values - heat_solution(q_ini, n * eps * eps, d_grid.x))))

    for n in n_list:
        row = {
            "n": n,
            "sup_gap": gaps[n],
            "normalized_gap": gaps[n] * eps * n ** 1.5,
        }
        if data_gaps:
            row["data_gap"] = data_gaps[n]
            row["normalized_data_gap"] = data_gaps[n] * math.sqrt(n) / eps
        rows.append(row)

    integrals = []
    for n in (1, 10, 100, 1000):
        i_b, i_bs2 = fourier_gap_integrals(n)
        integrals.append({"n": n, "int_b": i_b, "int_b_over_s2": i_bs2})
    return {"eps": eps, "rows": rows, "frequency_integrals": integrals}


def bulk_residual(ledger: FluctuationLedger, t: float, collar: float) -> float:
    """Max |forward time difference - centered second space difference| of p
    outside a collar around the interface: the bulk diffusion residual."""
    n = ledger.index_of(t)
    if n + 1 > ledger.filled:
        raise ValueError("bulk residual needs one step past t")
    x = ledger.grid.x
    h = ledger.grid.h
    e2 = ledger.eps ** 2
    p_now, p_next = ledger.p_hist[n], ledger.p_hist[n + 1]
    dt_term = (p_next - p_now) / e2
    dxx = np.zeros_like(p_next)
    dxx[1:-1] = (p_next[2:] - 2.0 * p_next[1:-1] + p_next[:-2]) / h ** 2
    keep = (np.abs(x - ledger.xis[n + 1]) > collar) & (np.abs(x - ledger.xis[n]) > collar)
    keep[[0, -1]] = False
    return float(np.max(np.abs(dt_term[keep] - dxx[keep])))


def empirical_order(errors: list[float], eps_list: list[float]) -> list[float]:
    """Richardson-style orders log(e_i/e_{i+1}) / log(eps_i/eps_{i+1})."""
    out = []
    for (e1, e2), (a1, a2) in zip(zip(errors, errors[1:]), zip(eps_list, eps_list[1:])):
        if e1 <= 0 or e2 <= 0:
            out.append(math.nan)
        else:
            out.append(math.log(e1 / e2) / math.log(a1 / a2))
    return out


@dataclass
class SweepConfig:
    """Step-size sweep: strictly decreasing eps values over one experiment."""

    eps_list: list[float]
    gamma: float = 0.25
    comparison_times: tuple[float, ...] = (0.03, 0.06, 0.10, 0.15, 0.20)
    q_check_time: float = 0.10
    holder_pairs: int = 2000
    seed: int = 0

    def __post_init__(self):
        if len(self.eps_list) < 2:
            raise ValueError("sweep needs at least 2 eps values")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        if not 0.0 < self.gamma < 0.5:
            raise ValueError("gamma must lie in (0, 1/2)")


@dataclass
class DiagnosticsReport:
    """Merged sweep measurements; every entry is finite by construction."""

    eps_list: list[float]
    seed: int
    depinning_times: list[float] = field(default_factory=list)
    xi_distances: list[float] = field(default_factory=list)
    p_distances: list[float] = field(default_factory=list)
    q_errors: list[float] = field(default_factory=list)
    stefan_residuals: list[float] = field(default_factory=list)
    holder_time: list[float] = field(default_factory=list)
    holder_space: list[float] = field(default_factory=list)
    flow_rule_violation_counts: list[int] = field(default_factory=list)
    rate_estimates: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {k: v for k, v in self.__dict__.items()}
        return json.dumps(payload, indent=2, sort_keys=True, default=float)


def _piecewise_constant_xi(traj: Trajectory, t_fine: np.ndarray) -> np.ndarray:
    idx = np.clip((t_fine / traj.eps ** 2).astype(int), 0, traj.n_steps)
    return traj.xis[idx]


def run_convergence_sweep(make_state, t_final: float, sweep: SweepConfig) -> DiagnosticsReport:
    """Run the experiment once per eps and measure cross-eps distances.

    make_state(eps) must build the initial state on a common grid so profiles
    compare collocated.  Distances for both the interface curve and p act as a
    Cauchy proxy: the limit is unique, so the whole family converging shows up
    as strictly decreasing consecutive distances.
    """
    from .scheme import run as run_scheme

    report = DiagnosticsReport(eps_list=list(sweep.eps_list), seed=sweep.seed)
    members = []
    for eps in sweep.eps_list:
        state = make_state(eps)
        n_steps = int(math.floor(t_final / eps ** 2 + 1e-9))
        ledger = FluctuationLedger(n_steps)
        result = run_scheme(state, eps, t_final, ledger=ledger)
        members.append((eps, result.trajectory, ledger))

    eps_min = sweep.eps_list[-1]
    t_fine = np.arange(0.0, t_final, 0.5 * eps_min ** 2)
    for (ea, ta, la), (eb, tb, lb) in zip(members, members[1:]):
        report.xi_distances.append(float(np.max(np.abs(
            _piecewise_constant_xi(ta, t_fine) - _piecewise_constant_xi(tb, t_fine)))))
        dist = 0.0
        for t in sweep.comparison_times:
            pa = la.p_hist[la.index_of(t)]
            pb = lb.p_hist[lb.index_of(t)]
            dist = max(dist, float(np.max(np.abs(pa - pb))))
        report.p_distances.append(dist)

    for eps, traj, ledger in members:
        report.depinning_times.append(depinning_time(traj))
        n_q = ledger.index_of(sweep.q_check_time)
        q_exact = heat_solution(ledger.p_initial, n_q * eps ** 2, ledger.grid.x)
        report.q_errors.append(float(np.max(np.abs(ledger.q_hist[n_q] - q_exact))))

        t_dep = depinning_time(traj)
        window = 5 * eps ** 2
        if math.isfinite(t_dep):
            t_lo = t_dep + 10 * eps ** 2
        else:
            t_lo = 10 * eps ** 2  # pinned run: residual is the decaying slope jump
            report.notes.append(f"eps={eps:g}: interface never depinned")
        t_hi = t_final - window
        samples = np.linspace(t_lo, t_hi, 9)
        resids = [stefan_residual(traj, ledger, float(t), 3.0 * eps) for t in samples]
        report.stefan_residuals.append(float(np.mean(resids)))

        rng = np.random.default_rng(sweep.seed)
        xi_lo = float(np.min(traj.xis))
        tq, xq = holder_quotients(ledger, sweep.gamma, sweep.holder_pairs, rng,
                                  t_final, (xi_lo - 0.5, float(traj.xis[0]) + 0.5))
        report.holder_time.append(tq)
        report.holder_space.append(xq)
        tol = 1e-6 if ledger.grid.kind == WHOLE_LINE else 10.0 * ledger.grid.h
        report.flow_rule_violation_counts.append(len(flow_rule_violations(traj, tol)))

    report.rate_estimates = {
        "q_vs_heat": empirical_order(report.q_errors, report.eps_list),
        "xi_cauchy": empirical_order(report.xi_distances, report.eps_list[:-1])
        if len(report.xi_distances) > 1 else [],
        "p_cauchy": empirical_order(report.p_distances, report.eps_list[:-1])
        if len(report.p_distances) > 1 else [],
    }
    return report
