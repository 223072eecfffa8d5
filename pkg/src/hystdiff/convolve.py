"""Backends for the implicit diffusion step u~ = (I - eps**2 d_xx)^-1 u.

Whole-line backend: for a piecewise-linear profile the convolution with the
exponential kernel is available in closed form,

    exp_kernel * (x - y)_+ = (x - y)_+ + (eps/2) exp(-|x - y|/eps),

so the result is the profile itself plus one exponential term per kink plus
the closed-form layer of the tracked jump.  Node values come from O(M) prefix
recursions and the result stays exactly evaluable at arbitrary points, which
the interface root finding relies on.  The tracked jump contributes through
its height; between nodes the continuous part (profile minus the step) is
interpolated linearly.

Bounded backend: second-order finite differences with homogeneous Neumann
rows, one tridiagonal solve per step, matching the usual grid treatment where
the jump lives in the sampled values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded
from scipy.signal import lfilter

from .kernels import exp_kernel, heat_kernel, smoothed_sign
from .profile import BOUNDED_NEUMANN, WHOLE_LINE, Grid, Profile, ProfileError, sign_offset

__all__ = [
    "Smoothed",
    "WholeLineConvolver",
    "NeumannConvolver",
    "make_convolver",
    "convolve",
    "kernel_power",
]


@dataclass(frozen=True)
class Smoothed:
    """Result of one smoothing pass: node samples plus a pointwise evaluator."""

    grid: Grid
    samples: np.ndarray
    eval: Callable[[np.ndarray | float], np.ndarray | float]

    def __call__(self, x):
        return self.eval(x)

    def as_profile(self) -> Profile:
        return Profile(self.grid, self.samples)


class WholeLineConvolver:
    """Exact convolution with exp_kernel for piecewise-linear profiles with
    linear tails and at most one tracked jump."""

    def __init__(self, eps: float, grid: Grid):
        if grid.kind != WHOLE_LINE:
            raise ProfileError("whole-line backend needs a whole-line grid")
        grid.require_resolves(eps)
        self.eps = eps
        self.grid = grid
        self._decay = np.exp(-grid.h / eps)

    def smooth(self, profile: Profile) -> Smoothed:
        eps = self.eps
        g = self.grid
        x = g.x
        h = g.h
        d = self._decay

        jump = profile.jump_height
        xi = profile.jump_pos
        if jump != 0.0:
            cont = profile.values - 0.5 * jump * sign_offset(x, xi, profile.node_snap)
        else:
            cont = profile.values.astype(float, copy=True)

        slopes = np.diff(cont) / h
        kinks = np.zeros_like(cont)
        kinks[1:-1] = np.diff(slopes)

        # prefix[i] = sum_{j<=i} kinks[j] d**(i-j), suffix mirrored
        prefix = lfilter([1.0], [1.0, -d], kinks)
        suffix = lfilter([1.0], [1.0, -d], kinks[::-1])[::-1]
        node_sum = prefix + suffix - kinks
        samples_cont = cont + 0.5 * eps * node_sum

        left_val, right_val = cont[0], cont[-1]
        left_slope, right_slope = slopes[0], slopes[-1]
        pre_end = prefix[-1]
        suf_start = suffix[0]

        def eval_point(xq):
            xq = np.asarray(xq, dtype=float)
            scalar = xq.ndim == 0
            xq = np.atleast_1d(xq)
            out = np.empty_like(xq)

            inside = (xq >= g.left) & (xq <= g.right)
            if np.any(inside):
                xin = xq[inside]
                k = np.clip(((xin - g.left) / h).astype(int), 0, g.n_cells - 1)
                base = np.interp(xin, x, cont)
                s = (np.exp(-(xin - x[k]) / eps) * prefix[k]
                     + np.exp(-(x[k + 1] - xin) / eps) * suffix[k + 1])
                out[inside] = base + 0.5 * eps * s
            lo = xq < g.left
            if np.any(lo):
                xl = xq[lo]
                out[lo] = (left_val + left_slope * (xl - g.left)
                           + 0.5 * eps * np.exp(-(g.left - xl) / eps) * suf_start)
            hi = xq > g.right
            if np.any(hi):
                xr = xq[hi]
                out[hi] = (right_val + right_slope * (xr - g.right)
                           + 0.5 * eps * np.exp(-(xr - g.right) / eps) * pre_end)
            if jump != 0.0:
                out += 0.5 * jump * smoothed_sign(eps, xq - xi)
            return float(out[0]) if scalar else out

        samples = samples_cont
        if jump != 0.0:
            samples = samples + 0.5 * jump * smoothed_sign(eps, x - xi)
        return Smoothed(g, samples, eval_point)


class NeumannConvolver:
    """Tridiagonal solve of (I - eps**2 D_xx) u~ = u with homogeneous Neumann rows."""

    def __init__(self, eps: float, grid: Grid):
        if grid.kind != BOUNDED_NEUMANN:
            raise ProfileError("bounded backend needs a bounded-neumann grid")
        grid.require_resolves(eps)
        self.eps = eps
        self.grid = grid
        lam = eps * eps / grid.h ** 2
        n = grid.n_points
        ab = np.zeros((3, n))
        ab[0, 1:] = -lam
        ab[1, :] = 1.0 + 2.0 * lam
        ab[2, :-1] = -lam
        # ghost-point Neumann: mirrored neighbor doubles the off-diagonal
        ab[0, 1] = -2.0 * lam
        ab[2, -2] = -2.0 * lam
        self._ab = ab

    def smooth(self, profile: Profile) -> Smoothed:
        g = self.grid
        samples = solve_banded((1, 1), self._ab, profile.values)
        x = g.x

        def eval_point(xq):
            return np.interp(xq, x, samples)

        return Smoothed(g, samples, eval_point)


def make_convolver(eps: float, grid: Grid):
    if grid.kind == WHOLE_LINE:
        return WholeLineConvolver(eps, grid)
    return NeumannConvolver(eps, grid)


def convolve(profile: Profile, eps: float) -> Profile:
    """One smoothing pass, dispatched on the grid kind; returns grid samples."""
    return make_convolver(eps, profile.grid).smooth(profile).as_profile()


def kernel_power(kind: str, eps: float, n: int, grid: Grid, keep_all: bool = False):
    """n-fold self-convolution of a kernel, sampled on a whole-line grid.

    heat: exactly the Gaussian at time n eps**2.  exp: n - 1 smoothing passes
    applied to the exactly sampled kernel (one pass applied to a point mass is
    the kernel itself), so the route stays consistent with the simulation
    backend.  With keep_all, all powers 1..n are returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind not in ("exp", "heat"):
        raise ValueError("kernel kind must be 'exp' or 'heat'")
    need = 20.0 * eps * np.sqrt(n)
    if grid.left > -need or grid.right < need:
        raise ProfileError(
            f"grid [{grid.left}, {grid.right}] too narrow for {n}-fold power; "
            f"need at least [-{need:g}, {need:g}]"
        )
    x = grid.x
    if kind == "heat":
        if not keep_all:
            return Profile(grid, heat_kernel(n * eps * eps, x))
        return [Profile(grid, heat_kernel(k * eps * eps, x)) for k in range(1, n + 1)]

    conv = WholeLineConvolver(eps, grid)
    cur = Profile(grid, exp_kernel(eps, x))
    out = [cur]
    for _ in range(n - 1):
        cur = conv.smooth(cur).as_profile()
        if keep_all:
            out.append(cur)
    return out if keep_all else cur
