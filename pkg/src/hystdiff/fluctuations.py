"""Decomposition of the continuous field p into a regular part and fluctuations.

Each interface shift injects a positive, strongly localized pulse (the local
fluctuation r).  The regular part q evolves by pure smoothing from the initial
p, the global fluctuation f accumulates the pulses through the same smoothing
operator, and p = q - f holds identically.  For the continuum analysis f is
further split four times into an essential part (Hoelder continuous in time
and space) and negligible remainders of size O(eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convolve import kernel_power
from .kernels import exp_kernel, heat_kernel, ramp_heat_kernel
from .profile import WHOLE_LINE, Grid, Profile, SimState, to_p
from .scheme import StepOutcome

__all__ = [
    "local_fluctuation",
    "local_fluctuation_model",
    "local_fluctuation_mass",
    "diffuse_regular_part",
    "FluctuationLedger",
    "FluctuationSplit",
    "split_fluctuations",
    "essential_fluctuation_at",
]


def _require_shift(xi_old: float, xi_new: float) -> None:
    if xi_new > xi_old + 1e-15:
        raise ValueError("interface shift must be leftward: xi_new <= xi_old")


def local_fluctuation(eps: float, xi_old: float, xi_new: float, x):
    """Pulse injected by one interface shift from xi_old to xi_new <= xi_old.

    Continuous, nonnegative, exponentially localized around the shift
    interval; identically zero for a standing step.
    """
    _require_shift(xi_old, xi_new)
    x = np.asarray(x, dtype=float)
    if xi_new == xi_old:
        out = np.zeros_like(x)
        return out if out.ndim else float(out)
    out = np.where(
        x <= xi_new,
        np.exp((x - xi_new) / eps) - np.exp((x - xi_old) / eps),
        np.where(
            x >= xi_old,
            np.exp(-(x - xi_old) / eps) - np.exp(-(x - xi_new) / eps),
            2.0 - np.exp((x - xi_old) / eps) - np.exp(-(x - xi_new) / eps),
        ),
    )
    return out if out.ndim else float(out)


def local_fluctuation_model(eps: float, xi_old: float, xi_new: float, x):
    """Scaled and shifted smoothing kernel matching the pulse: mass
    2 (xi_old - xi_new) centered at the shift midpoint, peak (xi_old - xi_new)/eps."""
    _require_shift(xi_old, xi_new)
    x = np.asarray(x, dtype=float)
    mid = 0.5 * (xi_old + xi_new)
    out = 2.0 * (xi_old - xi_new) * exp_kernel(eps, x - mid)
    return out if out.ndim else float(out)


def local_fluctuation_mass(eps: float, xi_old: float, xi_new: float) -> float:
    """Whole-line integral of the pulse, as the sum of its three branch
    integrals (each one elementary); equals 2 (xi_old - xi_new)."""
    _require_shift(xi_old, xi_new)
    delta = xi_old - xi_new
    wing = eps * (1.0 - math.exp(-delta / eps))
    middle = 2.0 * delta - 2.0 * eps * (1.0 - math.exp(-delta / eps))
    return wing + middle + wing


def diffuse_regular_part(q: Profile, convolver) -> Profile:
    """One smoothing pass of the regular part (initialized with the initial p)."""
    return convolver.smooth(q).as_profile()


class FluctuationLedger:
    """Per-run bookkeeping of p, q, f histories and the injected pulses.

    q starts from the initial p and is smoothed once per step; f obeys
    f_next = smooth(f) + r through the same operator, so p = q - f holds to
    rounding on the exact whole-line backend.  Histories are dense (step index
    by grid node) to keep every diagnostic time available.
    """

    def __init__(self, n_steps: int, record_pulses: bool = False):
        self.n_steps = n_steps
        self.record_pulses = record_pulses
        self.eps: float | None = None
        self.grid: Grid | None = None
        self.p_hist: np.ndarray | None = None
        self.q_hist: np.ndarray | None = None
        self.f_hist: np.ndarray | None = None
        self.xis: np.ndarray | None = None
        self.identity_errors: np.ndarray | None = None
        self.pulse_masses: list[tuple[int, float, float]] = []
        self.pulses: dict[int, np.ndarray] = {}
        self.p_initial: Profile | None = None
        self._k = 0

    def start(self, state: SimState) -> None:
        self.grid = state.u.grid
        m = self.grid.n_points
        n = self.n_steps
        self.p_hist = np.empty((n + 1, m))
        self.q_hist = np.empty((n + 1, m))
        self.f_hist = np.zeros((n + 1, m))
        self.xis = np.empty(n + 1)
        self.identity_errors = np.zeros(n + 1)
        p0 = to_p(state, tol=np.inf)
        self.p_initial = p0
        self.p_hist[0] = p0.values
        self.q_hist[0] = p0.values
        self.xis[0] = state.xi
        self._k = 0

    def record(self, outcome: StepOutcome, convolver) -> None:
        k = self._k + 1
        if k > self.n_steps:
            raise RuntimeError("ledger capacity exceeded")
        if self.eps is None:
            self.eps = convolver.eps
        x = self.grid.x
        xi_old = float(self.xis[k - 1])
        xi_new = outcome.state_next.xi

        q_prev = Profile(self.grid, self.q_hist[k - 1])
        f_prev = Profile(self.grid, self.f_hist[k - 1])
        r = local_fluctuation(self.eps, xi_old, xi_new, x)
        self.q_hist[k] = convolver.smooth(q_prev).samples
        self.f_hist[k] = convolver.smooth(f_prev).samples + r
        self.p_hist[k] = to_p(outcome.state_next, tol=np.inf).values
        self.xis[k] = xi_new
        self.identity_errors[k] = float(
            np.max(np.abs(self.p_hist[k] - (self.q_hist[k] - self.f_hist[k])))
        )
        if outcome.xi_shift > 0.0:
            self.pulse_masses.append(
                (k, outcome.xi_shift, local_fluctuation_mass(self.eps, xi_old, xi_new))
            )
            if self.record_pulses:
                self.pulses[k - 1] = r
        self._k = k

    @property
    def filled(self) -> int:
        return self._k

    def index_of(self, t: float) -> int:
        """Step index n with t in [n eps**2, (n+1) eps**2)."""
        n = int(math.floor(t / self.eps ** 2 + 1e-9))
        if n < 0 or n > self._k:
            raise ValueError(f"time {t} outside the recorded range")
        return n


@dataclass(frozen=True)
class FluctuationSplit:
    """Four essential stages and the four matching negligible remainders.

    f = ess4 + neg1 + neg2 + neg3 + neg4 holds exactly by construction:
    the stages replace, in turn, the pulses by their kernel model, the kernel
    powers by Gaussians, the step-quantized times by continuous time, and the
    Gaussian by its ramped regularization (which also absorbs the newest
    pulse).
    """

    t: float
    x: np.ndarray
    f: np.ndarray
    ess: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    neg: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    @property
    def ess4(self) -> np.ndarray:
        return self.ess[3]

    @property
    def neg_total(self) -> np.ndarray:
        return self.neg[0] + self.neg[1] + self.neg[2] + self.neg[3]


def _shift_terms(xis: np.ndarray, upto: int):
    deltas = xis[:-1] - xis[1:]
    mids = 0.5 * (xis[:-1] + xis[1:])
    return deltas[:upto], mids[:upto]


def split_fluctuations(ledger: FluctuationLedger, t: float,
                       power_grid: Grid | None = None) -> FluctuationSplit:
    """Evaluate the four-stage essential/negligible split at continuous time t.

    Needs the interface history up to index n+1 where t is in
    [n eps**2, (n+1) eps**2).
    """
    eps = ledger.eps
    e2 = eps * eps
    n = ledger.index_of(t)
    if n + 1 > ledger.filled:
        raise ValueError("split needs the interface history one step past t")
    x = ledger.grid.x
    xis = ledger.xis
    f = ledger.f_hist[n]

    deltas, mids = _shift_terms(xis, n)
    active = deltas > 0.0

    ess1 = np.zeros_like(x)
    ess2 = np.zeros_like(x)
    ess3 = np.zeros_like(x)
    ess4 = np.zeros_like(x)

    if np.any(active):
        if power_grid is None:
            h = ledger.grid.h
            reach = h * math.ceil((20.0 * eps * math.sqrt(max(n, 1)) + 1.0) / h)
            power_grid = Grid.from_spacing(WHOLE_LINE, -reach, reach, h)
        powers = kernel_power("exp", eps, max(n, 1), power_grid, keep_all=True)
        px = power_grid.x
        for i in np.nonzero(active)[0]:
            # pulse from step i -> i+1, entering the sums with weight 2*delta
            k = n - (i + 1) + 1
            w = 2.0 * deltas[i]
            z = x - mids[i]
            ess1 += w * np.interp(z, px, powers[k - 1].values)
            ess2 += w * heat_kernel(k * e2, z)
            ess3 += w * heat_kernel(t - (i + 1) * e2 + e2, z)
            ess4 += w * ramp_heat_kernel(eps, t - (i + 1) * e2 + e2, z)
    # the (n+1)-th pulse enters only the ramped stage
    if n + 1 <= ledger.filled and xis[n] - xis[n + 1] > 0.0:
        w = 2.0 * (xis[n] - xis[n + 1])
        mid = 0.5 * (xis[n] + xis[n + 1])
        ess4 += w * ramp_heat_kernel(eps, t - n * e2, x - mid)

    neg1 = f - ess1
    neg2 = ess1 - ess2
    neg3 = ess2 - ess3
    neg4 = ess3 - ess4
    return FluctuationSplit(t, x, f, (ess1, ess2, ess3, ess4), (neg1, neg2, neg3, neg4))


def essential_fluctuation_at(xis: np.ndarray, eps: float, t, x):
    """Pointwise value of the final essential stage at continuous (t, x).

    Vectorized over broadcast (t, x); used by the Hoelder-quotient sampler.
    """
    e2 = eps * eps
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    out = np.zeros(t.shape, dtype=float)
    deltas = xis[:-1] - xis[1:]
    mids = 0.5 * (xis[:-1] + xis[1:])
    for i in np.nonzero(deltas > 0.0)[0]:
        tau = t - (i + 1) * e2 + e2
        out += 2.0 * deltas[i] * ramp_heat_kernel(eps, tau, x - mids[i])
    return out if out.ndim else float(out)
