"""Synthetic benchmark generator: sparse graph, per-basis precision blocks,
block covariance models, and noisy functional samples.

A ground-truth graph with a power-law degree profile is split into M
per-basis edge sets; each edge set is turned into a diagonally dominant
precision matrix; the model covariance either keeps the blocks
independent ("ps") or couples adjacent blocks through a block-banded
precision matrix ("non-ps"). Curves are synthesized on a uniform grid in
the Fourier basis and observed under additive white noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .fdata import FunctionalDataset, TimeGrid
from .graphs import EdgeSet, union_edges

__all__ = [
    "SimConfig",
    "TrueModel",
    "gen_power_law_graph",
    "partition_edges",
    "gen_precision",
    "build_sigma",
    "fourier_basis",
    "generate_model",
    "gen_samples",
    "simulate",
]

DECAY_EXPONENT = 1.8
DECAY_SCALE = 3.0


@dataclass(frozen=True)
class SimConfig:
    """Knobs of one synthetic run."""

    p: int
    n: int
    pi: float
    tau: float
    model: str = "ps"
    seed: int = 0
    M: int = 20
    T: int = 30
    noise_frac: float = 0.05

    def __post_init__(self):
        if self.p < 3:
            raise ValueError("p must be at least 3")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.M < 1 or self.T < 2:
            raise ValueError("need M >= 1 and T >= 2")
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie in (0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.model not in ("ps", "non-ps"):
            raise ValueError("model must be 'ps' or 'non-ps'")
        if self.noise_frac < 0:
            raise ValueError("noise_frac must be nonnegative")


@dataclass(frozen=True)
class TrueModel:
    """Ground truth of one synthetic run."""

    graph: EdgeSet
    edge_sets: tuple
    common: EdgeSet
    precisions: np.ndarray  # (M, p, p)
    sigma_blocks: np.ndarray  # (M, p, p)
    full_sigma: np.ndarray  # (M*p, M*p)
    noise_var: float
    events: tuple = ()

    def __post_init__(self):
        if union_edges(list(self.edge_sets)).edges != self.graph.edges:
            raise ValueError("per-basis edge sets must union to the graph")
        for es in self.edge_sets:
            if not self.common.edges <= es.edges:
                raise ValueError("common edges must belong to every edge set")
        np.linalg.cholesky(self.full_sigma)  # PD or raise


def gen_power_law_graph(p: int, pi: float, rng: np.random.Generator) -> EdgeSet:
    """Graph with a heavy-tailed degree profile and exact edge density pi.

    Grown by preferential attachment (each new node attaches once, with
    probability proportional to degree + 1), then edges are added or
    removed uniformly at random to reach round(pi * p(p-1)/2) edges.
    """
    max_edges = p * (p - 1) // 2
    target = int(round(pi * max_edges))
    if pi * max_edges < 1.0:
        raise ValueError("expected edge count must be at least one")

    degree = np.zeros(p)
    edges: set[tuple[int, int]] = set()
    for v in range(1, p):
        weights = degree[:v] + 1.0
        u = int(rng.choice(v, p=weights / weights.sum()))
        edges.add((u + 1, v + 1))
        degree[u] += 1.0
        degree[v] += 1.0

    if len(edges) > target:
        ordered = sorted(edges)
        drop = rng.choice(len(ordered), size=len(edges) - target, replace=False)
        for i in drop:
            edges.discard(ordered[int(i)])
    elif len(edges) < target:
        absent = [
            (j + 1, k + 1)
            for j in range(p)
            for k in range(j + 1, p)
            if (j + 1, k + 1) not in edges
        ]
        add = rng.choice(len(absent), size=target - len(edges), replace=False)
        for i in add:
            edges.add(absent[int(i)])
    return EdgeSet(p, frozenset(edges))


def partition_edges(
    E: EdgeSet, M: int, tau: float, rng: np.random.Generator
) -> tuple[EdgeSet, list[EdgeSet]]:
    """Split a graph into M edge sets sharing a common core.

    A random core of round(tau*|E|) edges joins every set; the rest are
    dealt round-robin over a window that grows by one set per cycle (and
    caps at M), which makes the private set sizes nonincreasing.
    """
    edges = sorted(E.edges)
    n_common = int(round(tau * len(edges)))
    common_idx = set()
    if n_common:
        common_idx = {int(i) for i in rng.choice(len(edges), size=n_common, replace=False)}
    common = frozenset(edges[i] for i in common_idx)
    remaining = [e for i, e in enumerate(edges) if i not in common_idx]

    private: list[set] = [set() for _ in range(M)]
    order = rng.permutation(len(remaining))
    slot, window = 0, 1
    for i in order:
        private[slot].add(remaining[int(i)])
        slot += 1
        if slot >= window:
            slot = 0
            window = min(window + 1, M)

    common_set = EdgeSet(E.p, common)
    sets = [EdgeSet(E.p, common | frozenset(tilde)) for tilde in private]
    return common_set, sets


def gen_precision(E_l: EdgeSet, rng: np.random.Generator) -> np.ndarray:
    """Diagonally dominant precision matrix with support on the edge set.

    Lower-triangle entries for edges are drawn uniformly from
    [-2/3, -1/3] union [1/3, 2/3]; each row's off-diagonal entries are
    divided by 1.5 times the row's off-diagonal absolute sum; the matrix
    is then symmetrized and the diagonal reset to one. The resulting
    off-diagonal row sums are at most 2/3, so positive definiteness is
    guaranteed with margin 1/3.
    """
    p = E_l.p
    om = np.eye(p)
    edges = sorted(E_l.edges)
    if edges:
        mags = rng.uniform(1.0 / 3.0, 2.0 / 3.0, size=len(edges))
        signs = rng.integers(0, 2, size=len(edges)) * 2 - 1
        for (j, k), val in zip(edges, mags * signs):
            om[k - 1, j - 1] = val
    off = om - np.eye(p)
    row_sums = np.abs(off).sum(axis=1)
    active = row_sums > 0
    off[active] /= (1.5 * row_sums[active])[:, None]
    om = np.eye(p) + off
    om = (om + om.T) / 2.0
    np.fill_diagonal(om, 1.0)
    return om


def decay_factors(M: int) -> np.ndarray:
    """Block scale factors 3 * l**-1.8 for l = 1..M."""
    return DECAY_SCALE * np.arange(1, M + 1, dtype=float) ** (-DECAY_EXPONENT)


def build_sigma(
    config: SimConfig, precisions: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """Scale inverted precision blocks and assemble the full covariance.

    Returns (sigma_blocks, full_sigma, order, events). ``order`` is the
    block permutation applied when the decay factors fail to make the
    block traces strictly decreasing (identity otherwise); callers must
    permute per-block companions the same way. For the "non-ps" model a
    block-tridiagonal precision couples adjacent blocks; if it is not
    positive definite a logged ridge is added, and its inverse is
    rescaled to carry exactly the block-diagonal marginal variances.
    """
    M, p = config.M, config.p
    try:
        inverses = np.linalg.inv(precisions)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular precision block") from exc
    blocks = decay_factors(M)[:, None, None] * inverses

    events: list[str] = []
    traces = np.trace(blocks, axis1=1, axis2=2)
    order = np.arange(M)
    if np.any(np.diff(traces) >= 0):
        order = np.argsort(-traces, kind="stable")
        blocks = blocks[order]
        events.append("resorted blocks by decreasing trace")

    if config.model == "ps":
        full = np.zeros((M * p, M * p))
        for l in range(M):
            full[l * p : (l + 1) * p, l * p : (l + 1) * p] = blocks[l]
        return blocks, full, order, events

    perm_precisions = precisions[order]
    hollow = perm_precisions.copy()
    idx = np.arange(p)
    hollow[:, idx, idx] = 0.0
    omega = np.zeros((M * p, M * p))
    for l in range(M):
        sl = slice(l * p, (l + 1) * p)
        omega[sl, sl] = perm_precisions[l]
        if l + 1 < M:
            sn = slice((l + 1) * p, (l + 2) * p)
            band = 0.5 * (hollow[l] + hollow[l + 1])
            omega[sl, sn] = band
            omega[sn, sl] = band
    min_eig = float(np.linalg.eigvalsh(omega)[0])
    if min_eig <= 0:
        ridge = abs(min_eig) + 1e-3
        omega += ridge * np.eye(M * p)
        events.append(f"added ridge {ridge:.6g} to the banded precision")
    raw = np.linalg.inv(omega)
    raw = (raw + raw.T) / 2.0
    corr_scale = 1.0 / np.sqrt(np.diag(raw))
    target_sd = np.sqrt(np.concatenate([np.diag(b) for b in blocks]))
    scale = target_sd * corr_scale
    full = raw * scale[:, None] * scale[None, :]
    return blocks, full, order, events


def fourier_basis(M: int, points: np.ndarray) -> np.ndarray:
    """First M Fourier functions on [0, 1]: 1, then sqrt(2)*sin/cos pairs."""
    phi = np.empty((M, len(points)))
    phi[0] = 1.0
    for l in range(2, M + 1):
        m = l // 2
        angle = 2.0 * np.pi * m * points
        phi[l - 1] = np.sqrt(2.0) * (np.sin(angle) if l % 2 == 0 else np.cos(angle))
    return phi


def generate_model(config: SimConfig, rng: np.random.Generator) -> TrueModel:
    """Draw the full ground truth for one run."""
    graph = gen_power_law_graph(config.p, config.pi, rng)
    common, edge_sets = partition_edges(graph, config.M, config.tau, rng)
    precisions = np.stack([gen_precision(es, rng) for es in edge_sets])
    blocks, full, order, events = build_sigma(config, precisions)
    edge_sets = [edge_sets[int(i)] for i in order]
    precisions = precisions[order]
    noise_var = config.noise_frac * float(np.trace(blocks, axis1=1, axis2=2).sum()) / config.p
    return TrueModel(
        graph=graph,
        edge_sets=tuple(edge_sets),
        common=common,
        precisions=precisions,
        sigma_blocks=blocks,
        full_sigma=full,
        noise_var=noise_var,
        events=tuple(events),
    )


def gen_samples(
    model: TrueModel, config: SimConfig, rng: np.random.Generator
) -> tuple[FunctionalDataset, TrueModel]:
    """Draw noisy curves from the model on a uniform grid.

    Scores are Gaussian with the model covariance (block-wise Cholesky for
    the block-diagonal model), curves combine them in the Fourier basis,
    and white noise with the model's noise variance is added pointwise.
    """
    M, p, n, T = config.M, config.p, config.n, config.T
    points = np.linspace(0.0, 1.0, T)
    phi = fourier_basis(M, points)
    z = rng.standard_normal((n, M * p))
    if config.model == "ps":
        theta = np.empty((n, M, p))
        for l in range(M):
            chol = np.linalg.cholesky(model.sigma_blocks[l])
            theta[:, l, :] = z[:, l * p : (l + 1) * p] @ chol.T
    else:
        chol = np.linalg.cholesky(model.full_sigma)
        theta = (z @ chol.T).reshape(n, M, p)

    curves = np.einsum("ilj,lk->ijk", theta, phi)
    if model.noise_var > 0:
        curves = curves + rng.normal(0.0, np.sqrt(model.noise_var), size=curves.shape)
    return FunctionalDataset(TimeGrid(points), curves), model


def simulate(config: SimConfig) -> tuple[FunctionalDataset, TrueModel]:
    """Seeded end-to-end draw: ground truth plus observed dataset."""
    rng = np.random.default_rng(config.seed)
    model = generate_model(config, rng)
    return gen_samples(model, config, rng)
