"""(r, t) grids for rotation-invariant fields on tube segments.

Fields are arrays of shape (..., Nr, Nt); leading axes are batch axes.  The
axial direction is periodic (a tube is a quotient along its core geodesic).
Three discretisations share one interface (``dr``, ``dt``, ``integrate``):

* :class:`FDGrid` -- uniform grid, second-order finite differences;
* :class:`ChebGrid` -- Chebyshev-Lobatto collocation in r, fields t-independent;
* :class:`FDGrid` with ``wavenumber`` -- a single axial Fourier mode e^{ikt}.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["FDGrid", "ChebGrid", "cheb_nodes_matrix", "clenshaw_curtis_weights"]


class _GridBase:
    r: np.ndarray
    t: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.r.size, self.t.size)

    @property
    def rr(self) -> np.ndarray:
        """r as a broadcastable (Nr, 1) column."""
        return self.r[:, None]

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.shape, dtype=dtype)

    def volume_density(self, n: int) -> np.ndarray:
        # angular volume of S^{n-2} folded into a constant
        r = self.rr
        return np.sinh(r) ** (n - 2) * np.cosh(r) * np.ones(self.shape)

    def integrate(self, f, n: int):
        """Integral of f over the segment against sinh^{n-2} r cosh r dr dt."""
        w = self.weights * self.volume_density(n)
        return np.sum(np.asarray(f) * w, axis=(-2, -1))


class FDGrid(_GridBase):
    """Uniform r-grid on [r0, r1], periodic uniform t-grid of period Lt.

    ``Lt = 0`` (or a single t-node) means fields are t-independent.
    """

    def __init__(self, r0: float, r1: float, dr: float, Lt: float = 0.0,
                 dt: float | None = None, wavenumber: int | None = None):
        if r0 <= 0:
            raise ValueError("r0 must be positive (the axis is a coordinate singularity)")
        nr = int(round((r1 - r0) / dr)) + 1
        if nr < 8:
            raise ValueError("grid too coarse: fewer than 8 radial nodes")
        self.r = np.linspace(r0, r1, nr)
        self.hr = self.r[1] - self.r[0]
        self.Lt = float(Lt)
        self.wavenumber = wavenumber
        if Lt > 0 and wavenumber is None:
            dt = self.hr if dt is None else dt
            nt = max(int(round(Lt / dt)), 1)
            self.t = np.arange(nt) * (Lt / nt)
            self.ht = Lt / nt
        else:
            self.t = np.zeros(1)
            self.ht = 1.0 if Lt <= 0 else Lt
        wr = np.full(nr, self.hr)
        wr[0] = wr[-1] = 0.5 * self.hr
        self.weights = wr[:, None] * np.full((1, self.t.size), self.ht)

    kind = "fd"

    def refined(self, factor: int = 2) -> "FDGrid":
        dt = None if self.t.size == 1 else self.ht / factor
        return FDGrid(self.r[0], self.r[-1], self.hr / factor, self.Lt, dt, self.wavenumber)

    def dr(self, f):
        return np.gradient(f, self.hr, axis=-2, edge_order=2)

    def dt(self, f):
        if self.wavenumber is not None:
            return (1j * self.wavenumber * 2.0 * math.pi / self.Lt) * f
        if self.t.size == 1:
            return np.zeros_like(f)
        return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * self.ht)


def cheb_nodes_matrix(N: int):
    """Chebyshev-Lobatto nodes x_j = cos(pi j / N) and differentiation matrix."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def clenshaw_curtis_weights(N: int) -> np.ndarray:
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N ** 2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
        v -= np.cos(N * theta[inner]) / (N ** 2 - 1)
    else:
        w[0] = w[N] = 1.0 / N ** 2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
    w[inner] = 2.0 * v / N
    return w


class ChebGrid(_GridBase):
    """Chebyshev collocation in r on [r0, r1]; t-independent fields.

    Nodes are stored in increasing r.
    """

    kind = "cheb"

    def __init__(self, r0: float, r1: float, N: int, Lt: float = 1.0):
        if r0 <= 0:
            raise ValueError("r0 must be positive")
        x, D = cheb_nodes_matrix(N)
        x, D = x[::-1], D[::-1, ::-1]
        half = 0.5 * (r1 - r0)
        self.r = r0 + half * (x + 1.0)
        self.D = D / half
        self.t = np.zeros(1)
        self.Lt = float(Lt)
        self.wavenumber = None
        wr = clenshaw_curtis_weights(N)[::-1] * half
        self.weights = wr[:, None] * Lt

    def dr(self, f):
        return np.einsum("ij,...jk->...ik", self.D, f)

    def dt(self, f):
        return np.zeros_like(f)
