"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``QMFS_DISABLE_NUMBA=1`` to force the numpy path. Both paths are always
importable under explicit names (``*_numpy`` / ``*_numba``) so they can be
compared; the unsuffixed names point at the selected one.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

_DISABLED = os.environ.get("QMFS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------------------
# transfer functions: r(w) = h (-i w I - A)^{-1} B + f

def transfer_numpy(A, h, B, f, omegas):
    n = A.shape[0]
    M = -1j * omegas[:, None, None] * np.eye(n)[None] - A[None].astype(complex)
    # solve M^T y = h^T for every frequency
    rhs = np.broadcast_to(h.astype(complex), (len(omegas), n))[..., None]
    y = np.linalg.solve(np.transpose(M, (0, 2, 1)), rhs)[..., 0]
    return y @ B + f[None, :]


def psd_numpy(A, h, B, f, noise, omegas):
    r = transfer_numpy(A, h, B, f, omegas)
    return (np.abs(r) ** 2) @ noise


if HAVE_NUMBA:
    @numba.njit(cache=True)
    def _solve_inplace(M, y):
        # Gaussian elimination with partial pivoting; M and y are overwritten
        n = M.shape[0]
        for k in range(n):
            p = k
            best = abs(M[k, k])
            for i in range(k + 1, n):
                v = abs(M[i, k])
                if v > best:
                    best, p = v, i
            if p != k:
                for j in range(n):
                    M[k, j], M[p, j] = M[p, j], M[k, j]
                y[k], y[p] = y[p], y[k]
            inv = 1.0 / M[k, k]
            for i in range(k + 1, n):
                fac = M[i, k] * inv
                if fac != 0:
                    for j in range(k + 1, n):
                        M[i, j] -= fac * M[k, j]
                    y[i] -= fac * y[k]
        for i in range(n - 1, -1, -1):
            acc = y[i]
            for j in range(i + 1, n):
                acc -= M[i, j] * y[j]
            y[i] = acc / M[i, i]

    @numba.njit(cache=True)
    def transfer_numba(A, h, B, f, omegas):
        n = A.shape[0]
        m = B.shape[1]
        out = np.empty((omegas.shape[0], m), dtype=np.complex128)
        M = np.empty((n, n), dtype=np.complex128)
        y = np.empty(n, dtype=np.complex128)
        for k in range(omegas.shape[0]):
            for i in range(n):
                for j in range(n):
                    M[i, j] = -A[j, i]
                M[i, i] += -1j * omegas[k]
                y[i] = h[i]
            _solve_inplace(M, y)
            for c in range(m):
                acc = f[c]
                for i in range(n):
                    acc += y[i] * B[i, c]
                out[k, c] = acc
        return out

    @numba.njit(cache=True)
    def psd_numba(A, h, B, f, noise, omegas):
        r = transfer_numba(A, h, B, f, omegas)
        out = np.zeros(omegas.shape[0])
        for k in range(omegas.shape[0]):
            s = 0.0
            for c in range(noise.shape[0]):
                s += (r[k, c].real ** 2 + r[k, c].imag ** 2) * noise[c]
            out[k] = s
        return out
else:  # pragma: no cover
    transfer_numba = psd_numba = None


# ---------------------------------------------------------------------------
# two Lorentzians on a shared floor
#   p = (floor, c1, w1, a1, c2, w2, a2);  L = a w / ((x - c)^2 + w^2 / 4)
# a is the area in units of integral dx / (2 pi).

def lorentz2_numpy(x, p):
    floor, c1, w1, a1, c2, w2, a2 = p
    y = np.full(x.shape, floor, dtype=float)
    jac = np.empty((x.shape[0], 7))
    jac[:, 0] = 1.0
    for col, (c, w, a) in ((1, (c1, w1, a1)), (4, (c2, w2, a2))):
        d = x - c
        den = d * d + 0.25 * w * w
        y += a * w / den
        jac[:, col] = 2.0 * a * w * d / den ** 2
        jac[:, col + 1] = a / den - 0.5 * a * w * w / den ** 2
        jac[:, col + 2] = w / den
    return y, jac


if HAVE_NUMBA:
    @numba.njit(cache=True)
    def lorentz2_numba(x, p):
        y = np.empty(x.shape[0])
        jac = np.empty((x.shape[0], 7))
        for i in range(x.shape[0]):
            y[i] = p[0]
            jac[i, 0] = 1.0
            for col in (1, 4):
                c, w, a = p[col], p[col + 1], p[col + 2]
                d = x[i] - c
                den = d * d + 0.25 * w * w
                y[i] += a * w / den
                jac[i, col] = 2.0 * a * w * d / (den * den)
                jac[i, col + 1] = a / den - 0.5 * a * w * w / (den * den)
                jac[i, col + 2] = w / den
        return y, jac
else:  # pragma: no cover
    lorentz2_numba = None


if USE_NUMBA:
    transfer, psd, lorentz2 = transfer_numba, psd_numba, lorentz2_numba
else:
    transfer, psd, lorentz2 = transfer_numpy, psd_numpy, lorentz2_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
