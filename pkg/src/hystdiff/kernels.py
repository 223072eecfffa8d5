"""Closed-form kernels of the implicit diffusion step.

The implicit step with time increment eps**2 inverts (I - eps**2 d_xx); its
Green's function is the two-sided exponential ``exp_kernel``.  The layer added
at a relocated interface is ``jump_layer``.  ``heat_kernel`` is the Gaussian
that the n-fold self-convolution of ``exp_kernel`` approaches, and
``ramp_heat_kernel`` is its time-regularized variant (linear ramp on
[0, eps**2]) used by the fluctuation split.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "exp_kernel",
    "jump_layer",
    "smoothed_sign",
    "heat_kernel",
    "ramp_heat_kernel",
    "fourier_gap_profile",
    "fourier_gap_integrals",
]


def exp_kernel(eps: float, x):
    """Green's function of (I - eps**2 d_xx): exp(-|x|/eps) / (2 eps).

    Even, strictly positive, unit mass.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    out = np.exp(-np.abs(x) / eps) / (2.0 * eps)
    return out if out.ndim else float(out)


def jump_layer(eps: float, x):
    """Decaying layer sgn - exp_kernel * sgn: -exp(x/eps) for x <= 0, exp(-x/eps) for x > 0.

    Jump of height 2 at the origin; |value| <= 1.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, np.exp(-np.clip(x, 0.0, None) / eps),
                   -np.exp(np.clip(x, None, 0.0) / eps))
    return out if out.ndim else float(out)


def smoothed_sign(eps: float, x):
    """exp_kernel * sgn = sgn(x) * (1 - exp(-|x|/eps)).  Continuous and odd."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * (1.0 - np.exp(-np.abs(x) / eps))
    return out if out.ndim else float(out)


def heat_kernel(t: float, x):
    """Gaussian exp(-x**2 / (4 t)) / sqrt(4 pi t) for t > 0."""
    if t <= 0:
        raise ValueError("heat_kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    out = np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
    return out if out.ndim else float(out)


def ramp_heat_kernel(eps: float, t, x):
    """Heat kernel with a linear ramp on [0, eps**2]; zero for t <= 0.

    Continuous in (t, x) jointly, which removes the temporal jumps that the
    plain Gaussian produces when summands enter a time series one by one.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    e2 = eps * eps
    out = np.zeros(t.shape, dtype=float)
    ramp = (t > 0) & (t <= e2)
    if np.any(ramp):
        out[ramp] = (t[ramp] / e2) * heat_kernel(e2, x[ramp])
    late = t > e2
    if np.any(late):
        out[late] = np.exp(-x[late] ** 2 / (4.0 * t[late])) / np.sqrt(4.0 * np.pi * t[late])
    return out if out.ndim else float(out)


def fourier_gap_profile(n: int, s):
    """B_n(s) = n * |(1 + s**2/n)**(-n) - exp(-s**2)|.

    Frequency-side gap between the n-th power of the exponential kernel's
    symbol and the Gaussian limit, in the self-similar variable s.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.asarray(s, dtype=float)
    a_n = (1.0 + s * s / n) ** (-float(n))
    out = n * np.abs(a_n - np.exp(-s * s))
    return out if out.ndim else float(out)


def fourier_gap_integrals(n: int) -> tuple[float, float]:
    """Whole-line integrals of B_n and s**-2 B_n.

    Both stay positive and bounded uniformly in n.  The body [0, s_cut] uses a
    fine trapezoid; the algebraic tail of (1 + s**2/n)**(-n) (fat for small n)
    is integrated exactly after the substitution u = 1/s, where the Gaussian
    part is already negligible.
    """
    s_cut = 30.0
    s = np.linspace(0.0, s_cut, 600_001)
    b = fourier_gap_profile(n, s)
    int_b = np.trapezoid(b, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        bs2 = np.where(s > 0, b / np.maximum(s * s, 1e-300), 0.0)
    int_bs2 = np.trapezoid(bs2, s)

    u = np.linspace(1e-12, 1.0 / s_cut, 20_001)
    tail_b = n * (1.0 + 1.0 / (n * u * u)) ** (-float(n)) / (u * u)
    int_b += np.trapezoid(tail_b, u)
    int_bs2 += np.trapezoid(tail_b * u * u, u)

    return 2.0 * float(int_b), 2.0 * float(int_bs2)
