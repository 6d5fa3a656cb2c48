"""Weighted eigendecomposition of the pooled covariance and score extraction.

The continuous eigenproblem is discretized with the grid's quadrature
weights: with W = diag(weights), the symmetric problem
W^{1/2} K W^{1/2} = U diag(lambda) U^T is solved and eigenfunctions are
recovered as W^{-1/2} u_l, which makes them orthonormal in the weighted
(quadrature) inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, DegenerateVariance, NumericalError
from .fdata import FunctionalDataset, MeanEstimate, PooledCovariance, TimeGrid

__all__ = ["EigenBasis", "ScoreSet", "eigendecompose", "select_truncation", "compute_scores"]

# Eigenvalues below this fraction of the leading one are treated as exact
# zeros (covers negative floating-point residues of a PSD kernel).
_SPECTRUM_FLOOR = 1e-12


@dataclass(frozen=True)
class EigenBasis:
    """Nonnegative eigenvalues (descending) and grid-sampled eigenfunctions."""

    eigenvalues: np.ndarray  # (L',)
    eigenfunctions: np.ndarray  # (L', T)
    grid: TimeGrid

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        ef = np.asarray(self.eigenfunctions, dtype=float)
        if ev.ndim != 1 or ef.ndim != 2 or ef.shape[0] != len(ev):
            raise ValueError("eigenvalues and eigenfunctions must align")
        if ef.shape[1] != self.grid.size:
            raise ValueError("eigenfunctions must be sampled on the grid")
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        if np.any(ev < -1e-10):
            raise ValueError("eigenvalues must be nonnegative")
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "eigenfunctions", ef)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def variance_fractions(self) -> np.ndarray:
        """Cumulative share of total variance captured by the first l values."""
        total = self.eigenvalues.sum()
        if total <= 0:
            raise DegenerateSpectrum("all eigenvalues are zero")
        return np.cumsum(self.eigenvalues) / total


@dataclass(frozen=True)
class ScoreSet:
    """Quadrature scores with per-basis covariance and correlation matrices."""

    scores: np.ndarray  # (L, n, p)
    covariances: np.ndarray  # (L, p, p)
    correlations: np.ndarray  # (L, p, p)

    def __post_init__(self):
        s, c, r = self.scores, self.covariances, self.correlations
        if s.ndim != 3 or c.ndim != 3 or r.ndim != 3:
            raise ValueError("scores (L,n,p), covariances/correlations (L,p,p)")
        if c.shape != r.shape or c.shape[0] != s.shape[0] or c.shape[1] != s.shape[2]:
            raise ValueError("inconsistent score/covariance shapes")
        if np.max(np.abs(c - c.transpose(0, 2, 1))) > 1e-10:
            raise ValueError("covariances must be symmetric")
        diags = r[:, np.arange(r.shape[1]), np.arange(r.shape[1])]
        if np.any(diags != 1.0):
            raise ValueError("correlation diagonals must be exactly one")
        if np.max(np.abs(r)) > 1.0 + 1e-10:
            raise ValueError("correlations must lie in [-1, 1]")

    @property
    def n_bases(self) -> int:
        return self.scores.shape[0]


def eigendecompose(kernel: PooledCovariance | np.ndarray, grid: TimeGrid) -> EigenBasis:
    """Solve the weighted eigenproblem of a covariance kernel on the grid.

    Returns all eigenvalues sorted descending with sub-floor values clamped
    to zero, and eigenfunctions normalized so that the entry of largest
    magnitude is positive.
    """
    K = kernel.kernel if isinstance(kernel, PooledCovariance) else np.asarray(kernel, dtype=float)
    if not np.all(np.isfinite(K)):
        raise NumericalError("covariance kernel has non-finite entries")
    if K.shape != (grid.size, grid.size):
        raise ValueError("kernel must be T x T for the grid")
    sw = np.sqrt(grid.weights)
    B = sw[:, None] * K * sw[None, :]
    B = (B + B.T) / 2.0
    lam, U = np.linalg.eigh(B)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    U = U[:, order]

    floor = _SPECTRUM_FLOOR * max(lam[0], 0.0)
    lam = np.where(lam < floor, 0.0, lam)

    phi = (U / sw[:, None]).T  # rows are eigenfunctions
    peak = np.argmax(np.abs(phi), axis=1)
    flip = phi[np.arange(len(phi)), peak] < 0
    phi[flip] *= -1.0
    return EigenBasis(lam, phi, grid)


def select_truncation(basis: EigenBasis, threshold: float) -> int:
    """Smallest L whose leading eigenvalues reach the variance threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    fractions = basis.variance_fractions()
    return int(np.argmax(fractions >= threshold)) + 1


def compute_scores(
    data: FunctionalDataset,
    mean: MeanEstimate,
    basis: EigenBasis,
    L: int,
) -> ScoreSet:
    """Project centered curves on the first L eigenfunctions.

    scores[l, i, j] = sum_k w_k (X_ij(t_k) - mean_j(t_k)) phi_l(t_k); the
    per-basis covariance uses divisor n and the correlation rescales it to
    unit diagonal.
    """
    if not 1 <= L <= len(basis):
        raise ValueError(f"L={L} outside 1..{len(basis)}")
    centered = data.values - mean.values[None, :, :]
    weighted = centered * basis.grid.weights[None, None, :]
    theta = np.einsum("ijk,lk->lij", weighted, basis.eigenfunctions[:L])

    n = data.n_subjects
    cov = np.einsum("lij,lik->ljk", theta, theta) / n
    diag = cov[:, np.arange(cov.shape[1]), np.arange(cov.shape[1])]
    bad = np.argwhere(diag <= 1e-12)
    if len(bad):
        l, j = bad[0]
        raise DegenerateVariance(
            f"score variance vanished for basis {l + 1}, component {j + 1}; "
            "L is too large for the data",
            basis_index=int(l) + 1,
            component=int(j) + 1,
        )
    scale = 1.0 / np.sqrt(diag)
    corr = cov * scale[:, :, None] * scale[:, None, :]
    corr[:, np.arange(corr.shape[1]), np.arange(corr.shape[1])] = 1.0
    return ScoreSet(theta, cov, corr)
