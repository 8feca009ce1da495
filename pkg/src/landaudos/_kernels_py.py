"""Pure numpy versions of the compiled kernels (same signatures and results)."""

import numpy as np

BACKEND = "python"


def gc_table(s, n):
    """Signed guiding-center Laguerre functions, shape (len(s), n, n).

    See the compiled version for the definition.
    """
    s = np.ascontiguousarray(s, dtype=float)
    out = np.zeros((s.size, n, n))
    start = np.exp(-0.5 * s)
    for p in range(n):
        if p > 0:
            start = start * np.sqrt(s / p)
        g = start
        gprev = np.zeros_like(s)
        sgn = -1.0 if p % 2 else 1.0
        for j in range(n - p):
            out[:, j, j + p] = g
            if p > 0:
                out[:, j + p, j] = sgn * g
            gnext = ((2 * j + 1 + p - s) * g - np.sqrt(j * (j + p)) * gprev) / np.sqrt(
                (j + 1) * (j + p + 1)
            )
            gprev, g = g, gnext
    return out


def field_matrix(s, psi, u, v, n):
    """Hermitian n x n matrix of a superposition of plane-wave modes.

    See the compiled version for the definition.
    """
    s = np.ascontiguousarray(s, dtype=float)
    out = np.zeros((n, n), dtype=complex)
    start = np.exp(-0.5 * s)
    sq = np.sqrt(s)
    for p in range(n):
        if p > 0:
            start = start * sq / np.sqrt(p)
        ang = p * psi
        ca = np.cos(ang)
        sa = np.sin(ang)
        if p % 2 == 0:
            cre = u * ca
            cim = u * sa
        else:
            cre = -v * sa
            cim = v * ca
        g = start
        gprev = np.zeros_like(s)
        for j in range(n - p):
            val = np.dot(cre, g) + 1j * np.dot(cim, g)
            out[j, j + p] = val
            if p > 0:
                out[j + p, j] = np.conj(val)
            gnext = ((2 * j + 1 + p - s) * g - np.sqrt(j * (j + p)) * gprev) / np.sqrt(
                (j + 1) * (j + p + 1)
            )
            gprev, g = g, gnext
    return out
