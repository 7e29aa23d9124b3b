"""Independent reference spectra: Bessel zeros for disks and a finite-difference radial solver.

Nothing here touches the FEM or collocation code, so it can be used to check them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .potential import RadialPotential

SERIES_LIMIT = 2.0


def _bessel_series(n: int, x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    term = half ** n / math.factorial(n)
    total = term.copy()
    q = -half * half
    for k in range(1, 60):
        term = term * q / (k * (k + n))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _bessel_miller(n: int, x: np.ndarray) -> np.ndarray:
    """Backward recurrence normalised with ``J_0 + 2 sum J_2k = 1``."""
    xmax = float(np.max(x))
    start = int(max(n, xmax) + 30 + 2 * math.sqrt(40 * max(n, xmax)))
    start += start % 2
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    result = np.zeros_like(x)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{k-1}
        if k - 1 == n:
            result = j_cur.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur *= scale
            j_next *= scale
            result *= scale
            norm *= scale
    norm += j_cur
    return result / norm


def bessel_j(n: int, x):
    """``J_n(x)`` for integer ``n >= 0`` and ``x >= 0``.

    Ascending series below ``x = 2``, Miller's backward recurrence above.
    Accurate to about 1e-13 absolute for ``x <= 50``; slowly degrades beyond.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"order must be a non-negative integer, got {n}")
    n = int(n)
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(arr < 0):
        raise ValueError("argument must be non-negative")
    out = np.empty_like(arr)
    small = arr <= SERIES_LIMIT
    if np.any(small):
        out[small] = _bessel_series(n, arr[small])
    if np.any(~small):
        out[~small] = _bessel_miller(n, arr[~small])
    return out if np.ndim(x) else float(out[0])


def _bisect(f, a, b, tol=1e-13):
    fa = f(a)
    while b - a > tol * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def bessel_zeros(n: int, count: int, step: float = 0.5) -> np.ndarray:
    """First ``count`` positive zeros of ``J_n``.

    Sign changes are bracketed on a grid of width ``step`` starting at ``n``
    (no zero of ``J_n`` lies below ``n``, and consecutive zeros are more than
    ``step`` apart), then bisected.
    """
    f = lambda t: bessel_j(n, t)
    zeros = []
    a = max(float(n), 1e-3)
    fa = f(a)
    while len(zeros) < count:
        b = a + step
        fb = f(b)
        if fa == 0.0:
            zeros.append(a)
        elif (fa > 0) != (fb > 0):
            zeros.append(_bisect(f, a, b))
        a, fa = b, fb
    return np.array(zeros[:count])


def bessel_zero(n: int, k: int) -> float:
    """k-th positive zero of ``J_n`` (k >= 1)."""
    if k < 1:
        raise ValueError(f"zero index must be >= 1, got {k}")
    return float(bessel_zeros(n, k)[-1])


@dataclass
class DiskEntry:
    lam: float
    n: int
    k: int
    multiplicity: int


@dataclass
class DiskSpectrum:
    R: float
    c: float
    entries: list

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    def with_multiplicity(self) -> np.ndarray:
        return np.repeat(self.eigenvalues, [e.multiplicity for e in self.entries])


def disk_spectrum(R: float, c: float, K: float) -> DiskSpectrum:
    """All Dirichlet eigenvalues ``c + (j_{n,k}/R)^2 <= K`` of ``-Lap + c`` on the disk."""
    if c < 1.0 or K <= c:
        raise ValueError(f"need c >= 1 and K > c, got c={c}, K={K}")
    kmax = R * math.sqrt(K - c)
    entries = []
    n = 0
    # j_{n,1} > n, so orders beyond kmax have no admissible zeros
    while n <= kmax:
        k = 1
        while True:
            z = bessel_zero(n, k)
            if z > kmax:
                break
            entries.append(DiskEntry(c + (z / R) ** 2, n, k, 1 if n == 0 else 2))
            k += 1
        n += 1
    entries.sort(key=lambda e: e.lam)
    return DiskSpectrum(R, c, entries)


@dataclass
class FDSpectrum:
    j: int
    N_fd: int
    eigenvalues: np.ndarray


def fd_radial_spectrum(j: int, V: RadialPotential, R: float, N_fd: int, count: int) -> FDSpectrum:
    """Lowest eigenvalues of a flux-form central-difference discretisation of the radial ODE.

    ``-(r u')'/r + (j^2/r^2 + V) u = lam u`` with ``u(R) = 0``.  For ``j = 0`` the
    unknowns sit at ``(i - 1/2) h`` so the zero flux at ``r = 0`` encodes
    ``u'(0) = 0``; for ``j >= 1`` they sit at ``i h`` with ``u(0) = 0``.
    """
    if N_fd < 100:
        raise ValueError(f"N_fd must be >= 100, got {N_fd}")
    if j == 0:
        h = R / (N_fd + 0.5)
        r = (np.arange(1, N_fd + 1) - 0.5) * h
    else:
        h = R / (N_fd + 1)
        r = np.arange(1, N_fd + 1) * h
    face_lo = r - 0.5 * h
    face_hi = r + 0.5 * h
    diag = (face_lo + face_hi) / h ** 2 + r * (j * j / r ** 2 + V(r))
    off = -face_hi[:-1] / h ** 2
    # symmetrise A u = lam diag(r) u
    s = 1.0 / np.sqrt(r)
    diag = diag * s * s
    off = off * s[:-1] * s[1:]
    vals = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, count - 1))
    return FDSpectrum(j, N_fd, np.sort(vals))
