"""Canonical form of special orthogonal matrices.

Every A in SO(d) is conjugate by an orthogonal q to a block-diagonal matrix of
plane rotations R(theta_j), followed by +1 entries (fixed directions) and -1
entries (flips, always an even number).  ``q`` has the invariant planes as
column pairs, then the fixed columns, then the flip columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["RotationNormalForm", "so_normal_form", "plane_rotation", "random_so"]

# 2x2 Schur blocks with |sin| below this are treated as real eigenvalues
_BLOCK_TOL = 1e-12


def plane_rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RotationNormalForm:
    q: np.ndarray
    angles: np.ndarray
    fixed_dims: int
    flip_dims: int

    @property
    def m(self) -> int:
        return len(self.angles)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def block_matrix(self) -> np.ndarray:
        d = self.dim
        b = np.zeros((d, d))
        for j, a in enumerate(self.angles):
            b[2 * j:2 * j + 2, 2 * j:2 * j + 2] = plane_rotation(a)
        k = 2 * self.m
        b[k:k + self.fixed_dims, k:k + self.fixed_dims] = np.eye(self.fixed_dims)
        k += self.fixed_dims
        b[k:, k:] = -np.eye(self.flip_dims)
        return b

    def reconstruct(self) -> np.ndarray:
        return self.q @ self.block_matrix() @ self.q.T

    def plane_weights(self, v: np.ndarray):
        """Squared norms of v's components: per rotation plane, fixed, flip.

        Accepts v of shape (..., d); returns (planes (..., m), fixed (...), flip (...)).
        """
        w = np.asarray(v) @ self.q
        k = 2 * self.m
        planes = w[..., 0:k:2] ** 2 + w[..., 1:k:2] ** 2
        fixed = np.sum(w[..., k:k + self.fixed_dims] ** 2, axis=-1)
        flip = np.sum(w[..., k + self.fixed_dims:] ** 2, axis=-1)
        return planes, fixed, flip


def so_normal_form(rot) -> RotationNormalForm:
    """Rotation angles of ``rot`` in (-pi, pi], sorted by decreasing |theta|."""
    a = np.asarray(rot, dtype=float)
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError("rotation must be square")
    if np.max(np.abs(a.T @ a - np.eye(d))) > 1e-9:
        raise ValueError("matrix is not orthogonal")
    if np.linalg.det(a) < 0:
        raise ValueError("matrix has determinant -1")

    # a is normal, so its real Schur form is block diagonal up to round-off
    t, z = scipy.linalg.schur(a, output="real")
    planes, fixed, flips = [], [], []
    i = 0
    while i < d:
        if i + 1 < d and abs(t[i + 1, i]) > _BLOCK_TOL:
            blk = t[i:i + 2, i:i + 2]
            # standardized block [[c, b], [-b', c]] with b*b' > 0; orient columns
            # so that the block reads as plane_rotation(theta)
            theta = float(np.arctan2(blk[1, 0], 0.5 * (blk[0, 0] + blk[1, 1])))
            cols = z[:, i:i + 2].copy()
            if theta < 0:
                theta = -theta
                cols[:, 1] *= -1.0
            planes.append((theta, cols))
            i += 2
        else:
            col = z[:, i:i + 1]
            (fixed if t[i, i] > 0 else flips).append(col)
            i += 1

    # re-derive each plane angle from the oriented basis; accurate and signed
    angles, blocks = [], []
    for _, cols in planes:
        u, v = cols[:, 0], cols[:, 1]
        au = a @ u
        theta = float(np.arctan2(v @ au, u @ au))
        angles.append(theta)
        blocks.append(cols)
    order = sorted(range(len(angles)), key=lambda j: -abs(angles[j]))
    angles = [angles[j] for j in order]
    blocks = [blocks[j] for j in order]

    q = np.hstack(blocks + fixed + flips) if d else np.zeros((0, 0))
    return RotationNormalForm(q=q, angles=np.array(angles, dtype=float),
                              fixed_dims=len(fixed), flip_dims=len(flips))


def random_so(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(d)."""
    m = rng.standard_normal((d, d))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
