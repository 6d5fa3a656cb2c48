"""Plausibility checks for the shared-basis (pooled) expansion.

Two complementary views: split-sample variance explained, comparing the
pooled basis against per-component functional PCA, and the absolute
correlation matrix of stacked scores, whose off-block mass measures how
far the data are from having uncorrelated score vectors across basis
functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigenbasis import EigenBasis, ScoreSet, eigendecompose
from .errors import DegenerateVariance
from .fdata import FunctionalDataset, component_covariance, estimate_mean, pooled_covariance

__all__ = [
    "UnivariateFpca",
    "SplitRecord",
    "SplitReport",
    "BlockCorrelation",
    "univariate_fpca",
    "variance_explained_split",
    "cross_correlation_blocks",
]


@dataclass(frozen=True)
class UnivariateFpca:
    """Eigenbasis of one component's own covariance, with its scores."""

    component: int
    basis: EigenBasis
    scores: np.ndarray  # (n, L)


@dataclass(frozen=True)
class SplitRecord:
    """Variance explained of one method at one truncation in one split."""

    rep: int
    method: str  # "pooled" or "univariate"
    L: int
    in_ve: float
    out_ve: float
    ratio: float


@dataclass(frozen=True)
class SplitReport:
    """All split-sample records plus logged irregularities."""

    records: tuple
    events: tuple = ()

    def __post_init__(self):
        for r in self.records:
            if not (-1e-8 <= r.in_ve <= 1.0 + 1e-8 and -1e-8 <= r.out_ve <= 1.0 + 1e-8):
                raise ValueError(f"variance explained outside [0, 1]: {r}")


@dataclass(frozen=True)
class BlockCorrelation:
    """Absolute correlations of stacked scores in basis-first order."""

    matrix: np.ndarray  # (L*p, L*p)
    n_bases: int
    n_components: int

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.n_bases * self.n_components,) * 2:
            raise ValueError("matrix must be (L*p, L*p)")
        if np.max(np.abs(m - m.T)) > 1e-10 or np.any(m < 0) or np.any(m > 1 + 1e-10):
            raise ValueError("matrix must be symmetric with entries in [0, 1]")

    def leading_blocks(self, count: int = 7) -> np.ndarray:
        """Upper-left view of the first ``count`` basis blocks."""
        k = min(count, self.n_bases) * self.n_components
        return self.matrix[:k, :k]

    def off_block_mean(self) -> float:
        """Mean absolute correlation between scores of different bases."""
        L, p = self.n_bases, self.n_components
        basis_of = np.repeat(np.arange(L), p)
        mask = basis_of[:, None] != basis_of[None, :]
        return float(self.matrix[mask].mean())


def univariate_fpca(data: FunctionalDataset, j: int, L: int) -> UnivariateFpca:
    """Eigenbasis and scores of component j's own covariance kernel.

    Uses the same quadrature and sign conventions as the pooled basis.
    """
    mean = estimate_mean(data)
    kernel = component_covariance(data, mean, j)
    basis = eigendecompose(kernel, data.grid)
    if not 1 <= L <= len(basis):
        raise ValueError(f"L={L} outside 1..{len(basis)}")
    centered = data.values[:, j - 1, :] - mean.values[j - 1][None, :]
    scores = (centered * data.grid.weights[None, :]) @ basis.eigenfunctions[:L].T
    return UnivariateFpca(component=j, basis=basis, scores=scores)


def _cumulative_energy(
    centered: np.ndarray, weights: np.ndarray, phi: np.ndarray
) -> np.ndarray:
    """Cumulative squared projections of (n, T) curves on basis rows."""
    scores = (centered * weights[None, :]) @ phi.T
    return np.cumsum(scores**2, axis=1)


def variance_explained_split(
    data: FunctionalDataset,
    L_max: int,
    reps: int,
    rng: np.random.Generator,
) -> SplitReport:
    """Split-sample variance explained for pooled and per-component bases.

    Each replication splits subjects in half at random (for odd n the
    training half is larger, logged once), estimates means and bases on
    the training half, and reports the fraction of centered curve energy
    captured by the first L basis functions on both halves, for
    L = 1..L_max. The pooled method projects every component on the same
    L functions; the per-component method gives each component its own.
    """
    n = data.n_subjects
    if n < 4:
        raise ValueError("need at least 4 subjects to split")
    if not 1 <= L_max <= data.grid.size:
        raise ValueError("L_max must lie in 1..T")
    w = data.grid.weights
    events: list[str] = []
    if n % 2:
        events.append("odd subject count: training half is larger")

    records: list[SplitRecord] = []
    for rep in range(1, reps + 1):
        perm = rng.permutation(n)
        n_train = (n + 1) // 2
        train = FunctionalDataset(data.grid, data.values[perm[:n_train]])
        valid_values = data.values[perm[n_train:]]

        mean = estimate_mean(train)
        pooled_basis = eigendecompose(pooled_covariance(train, mean), data.grid)

        for method in ("pooled", "univariate"):
            num_in = np.zeros(L_max)
            num_out = np.zeros(L_max)
            den_in = den_out = 0.0
            for j in range(1, data.n_components + 1):
                c_in = train.values[:, j - 1, :] - mean.values[j - 1][None, :]
                c_out = valid_values[:, j - 1, :] - mean.values[j - 1][None, :]
                if method == "pooled":
                    phi = pooled_basis.eigenfunctions[:L_max]
                else:
                    kernel = component_covariance(train, mean, j)
                    phi = eigendecompose(kernel, data.grid).eigenfunctions[:L_max]
                num_in += _cumulative_energy(c_in, w, phi).sum(axis=0)
                num_out += _cumulative_energy(c_out, w, phi).sum(axis=0)
                den_in += float(np.einsum("ik,k,ik->", c_in, w, c_in))
                den_out += float(np.einsum("ik,k,ik->", c_out, w, c_out))
            for L in range(1, L_max + 1):
                in_ve = num_in[L - 1] / den_in
                out_ve = num_out[L - 1] / den_out
                records.append(
                    SplitRecord(
                        rep=rep,
                        method=method,
                        L=L,
                        in_ve=float(in_ve),
                        out_ve=float(out_ve),
                        ratio=float(out_ve / in_ve) if in_ve > 0 else float("nan"),
                    )
                )
    return SplitReport(tuple(records), tuple(events))


def cross_correlation_blocks(scores, L: int) -> BlockCorrelation:
    """Absolute correlation matrix of scores stacked basis-first.

    ``scores`` is either a ScoreSet or an (n, L*p) array already in
    basis-first column order (all components of basis 1, then basis 2,
    and so on).
    """
    if isinstance(scores, ScoreSet):
        if not 1 <= L <= scores.n_bases:
            raise ValueError(f"L={L} outside 1..{scores.n_bases}")
        stacked = scores.scores[:L].transpose(1, 0, 2)
        n = stacked.shape[0]
        p = stacked.shape[2]
        columns = stacked.reshape(n, L * p)
    else:
        columns = np.asarray(scores, dtype=float)
        if columns.ndim != 2 or columns.shape[1] % L:
            raise ValueError("stacked scores must be (n, L*p)")
        p = columns.shape[1] // L

    sd = columns.std(axis=0)
    dead = np.flatnonzero(sd <= 0)
    if len(dead):
        idx = int(dead[0])
        raise DegenerateVariance(
            f"zero-variance score column {idx} (basis {idx // p + 1}, "
            f"component {idx % p + 1})",
            basis_index=idx // p + 1,
            component=idx % p + 1,
        )
    corr = np.abs(np.corrcoef(columns, rowvar=False))
    corr = np.clip((corr + corr.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return BlockCorrelation(matrix=corr, n_bases=L, n_components=p)
