"""Edge sets, union graphs, and recovery metrics (confusion, ROC, AUC).

Nodes are labelled 1..p and edges are unordered pairs (j, k) with j < k.
ROC curves are built from raw penalty-sweep points: ties on the false
positive rate are collapsed to the best true positive rate, the endpoints
(0,0) and (1,1) are always present, and areas are trapezoidal integrals.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateTruth, DimensionMismatch, RangeError
from .jgl import JGLProblem, JGLSolution, PenaltyConfig, gamma_max, solve_path

__all__ = [
    "EdgeSet",
    "RocCurve",
    "extract_edges",
    "union_edges",
    "confusion",
    "roc_curve",
    "auc",
    "auc15",
    "gamma_grid",
    "SweepResult",
    "sweep_alpha",
    "roc_analysis",
    "DEFAULT_ALPHAS",
]

DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class EdgeSet:
    """Undirected graph on nodes 1..p stored as pairs (j, k), j < k."""

    p: int
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for j, k in self.edges:
            if not (1 <= j < k <= self.p):
                raise ValueError(f"edge ({j}, {k}) invalid for p={self.p}")

    @classmethod
    def from_pairs(cls, p: int, pairs) -> "EdgeSet":
        """Build an edge set, normalizing pair order and dropping duplicates."""
        normalized = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"self-loop ({a}, {b}) not allowed")
            normalized.add((min(a, b), max(a, b)))
        return cls(p, frozenset(normalized))

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def max_edges(self) -> int:
        return self.p * (self.p - 1) // 2

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency matrix (p, p)."""
        A = np.zeros((self.p, self.p), dtype=int)
        for j, k in self.edges:
            A[j - 1, k - 1] = A[k - 1, j - 1] = 1
        return A


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points sorted by fpr, containing (0,0) and (1,1)."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(f), float(t)) for f, t in self.points)
        fprs = [f for f, _ in pts]
        if fprs != sorted(fprs):
            raise ValueError("points must be sorted by fpr")
        if pts[0][0] != 0.0 or pts[-1][0] != 1.0:
            raise ValueError("curve must span fpr 0..1")
        object.__setattr__(self, "points", pts)


def extract_edges(solution: JGLSolution) -> list[EdgeSet]:
    """Per-matrix edge sets read from the exact zeros of the consensus copies."""
    p = solution.z.shape[1]
    out = []
    for zl in solution.z:
        rows, cols = np.nonzero(np.triu(zl, k=1))
        out.append(EdgeSet(p, frozenset((int(r) + 1, int(c) + 1) for r, c in zip(rows, cols))))
    return out


def union_edges(sets: list[EdgeSet]) -> EdgeSet:
    """Union of edge sets sharing the same node count."""
    if not sets:
        raise ValueError("need at least one edge set")
    p = sets[0].p
    for s in sets:
        if s.p != p:
            raise DimensionMismatch(f"edge sets disagree on p ({s.p} vs {p})")
    merged: frozenset = frozenset()
    for s in sets:
        merged = merged | s.edges
    return EdgeSet(p, merged)


def confusion(estimated: EdgeSet, truth: EdgeSet) -> tuple[float, float]:
    """True and false positive rates of the estimate against the truth."""
    if estimated.p != truth.p:
        raise DimensionMismatch("estimate and truth disagree on p")
    n_true = len(truth)
    n_non = truth.max_edges - n_true
    if n_true == 0:
        raise DegenerateTruth("empty reference edge set: tpr undefined")
    if n_non == 0:
        raise DegenerateTruth("complete reference edge set: fpr undefined")
    tp = len(estimated.edges & truth.edges)
    fp = len(estimated.edges - truth.edges)
    return tp / n_true, fp / n_non


def roc_curve(points) -> RocCurve:
    """Normalize sweep points into a curve: endpoints added, fpr ties collapsed."""
    cleaned = []
    for f, t in points:
        if not (0.0 <= f <= 1.0 and 0.0 <= t <= 1.0):
            raise RangeError(f"rate ({f}, {t}) outside [0, 1]")
        cleaned.append((float(f), float(t)))
    cleaned.extend([(0.0, 0.0), (1.0, 1.0)])
    best: dict[float, float] = {}
    for f, t in cleaned:
        best[f] = max(best.get(f, 0.0), t)
    pts = sorted(best.items())
    return RocCurve(tuple(pts))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve over fpr in [0, 1]."""
    f = np.array([p[0] for p in curve.points])
    t = np.array([p[1] for p in curve.points])
    return float(np.trapezoid(t, f))


def auc15(curve: RocCurve, cutoff: float = 0.15) -> float:
    """Trapezoidal area over fpr in [0, cutoff], normalized to maximum 1."""
    f = np.array([p[0] for p in curve.points])
    t = np.array([p[1] for p in curve.points])
    t_cut = float(np.interp(cutoff, f, t))
    keep = f < cutoff
    f_part = np.append(f[keep], cutoff)
    t_part = np.append(t[keep], t_cut)
    return float(np.trapezoid(t_part, f_part)) / cutoff


def gamma_grid(gmax: float, count: int = 50, floor_ratio: float = 1e-3) -> np.ndarray:
    """Logarithmically spaced penalty levels from gmax down to floor_ratio*gmax."""
    if gmax <= 0:
        raise ValueError("gmax must be positive")
    return np.geomspace(gmax, floor_ratio * gmax, count)


@dataclass(frozen=True)
class SweepResult:
    """Outcome of one penalty sweep at a fixed mixing parameter."""

    alpha: float
    gammas: np.ndarray
    rates: tuple  # (fpr, tpr) per gamma, in sweep order
    curve: RocCurve
    auc: float
    auc15: float
    edge_counts: np.ndarray  # (n_gammas, L) per-matrix edge counts
    monotonicity_violations: int
    all_converged: bool


def sweep_alpha(
    problem: JGLProblem,
    truth: EdgeSet,
    alpha: float,
    config: PenaltyConfig | None = None,
    n_gammas: int = 50,
    floor_ratio: float = 1e-3,
) -> SweepResult:
    """Warm-started penalty sweep: union-graph recovery rates per level.

    The sweep starts at the smallest penalty that empties the graph and
    descends geometrically; each solution seeds the next.
    """
    if config is None:
        config = PenaltyConfig(gamma=1.0, alpha=alpha, adapt_rho=True)
    config = replace(config, alpha=alpha, track_objective=False)
    gmax = gamma_max(problem, alpha)
    if gmax == 0.0:
        raise DegenerateTruth("all off-diagonal correlations are zero; sweep is empty")
    gammas = gamma_grid(gmax, count=n_gammas, floor_ratio=floor_ratio)
    solutions = solve_path(problem, gammas, config)

    rates = []
    counts = np.zeros((len(gammas), problem.n_matrices), dtype=int)
    for g_idx, sol in enumerate(solutions):
        per_l = extract_edges(sol)
        counts[g_idx] = [len(e) for e in per_l]
        tpr, fpr = confusion(union_edges(per_l), truth)
        rates.append((fpr, tpr))

    # Edge counts typically grow as the penalty decreases; count exceptions.
    violations = int(np.sum(np.diff(counts, axis=0) < 0))
    curve = roc_curve(rates)
    return SweepResult(
        alpha=alpha,
        gammas=gammas,
        rates=tuple(rates),
        curve=curve,
        auc=auc(curve),
        auc15=auc15(curve),
        edge_counts=counts,
        monotonicity_violations=violations,
        all_converged=all(s.converged for s in solutions),
    )


def roc_analysis(
    problem: JGLProblem,
    truth: EdgeSet,
    alphas=DEFAULT_ALPHAS,
    config: PenaltyConfig | None = None,
    n_gammas: int = 50,
    floor_ratio: float = 1e-3,
    threads: int = 1,
) -> tuple[list[SweepResult], int]:
    """Sweep every mixing value and report the index of the best AUC."""

    def run(alpha: float) -> SweepResult:
        return sweep_alpha(problem, truth, alpha, config, n_gammas, floor_ratio)

    if threads > 1 and len(alphas) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, alphas))
    else:
        results = [run(a) for a in alphas]
    best = int(np.argmax([r.auc for r in results]))
    return results, best
