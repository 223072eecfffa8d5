"""Independent numerical oracles used to pin expected values.

These deliberately avoid the package's convolution code paths: plain
quadrature, dense matrix/sparse time stepping, and brute-force scans.
"""

import numpy as np
from scipy.sparse import csc_matrix, diags
from scipy.sparse.linalg import splu


def trapz_mass(f, a, b, n=400_001):
    x = np.linspace(a, b, n)
    return float(np.trapezoid(f(x), x)), x


def quad_convolve_at(kernel, f, x, reach, n=200_001):
    """(kernel * f)(x) by composite trapezoid over [x - reach, x + reach]."""
    y = np.linspace(x - reach, x + reach, n)
    return float(np.trapezoid(kernel(x - y) * f(y), y))


def discrete_convolve(f_vals, g_vals, dx):
    """Trapezoid-weight discrete convolution of two sampled functions."""
    return np.convolve(f_vals, g_vals, mode="same") * dx


def crank_nicolson_heat(p0_fn, left, right, h, dt, t_end):
    """Crank-Nicolson march of the heat equation with Dirichlet walls pinned
    at the initial values (valid while the walls stay outside the diffusion
    range of the kinks)."""
    x = np.arange(left, right + h / 2, h)
    m = len(x)
    u = p0_fn(x)
    lam = dt / h ** 2
    off = np.full(m - 1, -lam / 2)
    a = diags([off, np.full(m, 1.0 + lam), off], [-1, 0, 1], format="csc").tolil()
    b = diags([-off, np.full(m, 1.0 - lam), -off], [-1, 0, 1], format="csc").tolil()
    for row in (0, m - 1):
        for mat in (a, b):
            mat.rows[row] = [row]
            mat.data[row] = [1.0]
    lu = splu(csc_matrix(a))
    b = csc_matrix(b)
    n_steps = int(round(t_end / dt))
    for _ in range(n_steps):
        u = lu.solve(b @ u)
    return x, u


def rightmost_crossing(fn, level, lo, hi, n=2_000_001):
    """Brute-force scan for the rightmost crossing of `level` in [lo, hi]."""
    x = np.linspace(lo, hi, n)
    v = fn(x) - level
    sign_change = np.nonzero(v[:-1] * v[1:] <= 0.0)[0]
    if len(sign_change) == 0:
        return None
    j = sign_change[-1]
    # linear refinement inside the bracketing cell
    x0, x1, v0, v1 = x[j], x[j + 1], v[j], v[j + 1]
    if v1 == v0:
        return 0.5 * (x0 + x1)
    return float(x0 - v0 * (x1 - x0) / (v1 - v0))
