"""ADMM solver for jointly sparse inverse correlation matrices.

Given L symmetric correlation matrices R_l with unit diagonal, solves

    min_{Theta_l > 0}  sum_l [ trace(R_l Theta_l) - logdet Theta_l ]
        + gamma * [ alpha * sum_l sum_{j != k} |Theta_ljk|
                    + (1 - alpha) * sum_{j != k} sqrt(sum_l Theta_ljk^2) ]

via consensus ADMM. The Theta iterates stay positive definite (dense);
the consensus copies Z carry the exact zeros produced by the proximal
step, so edge patterns are read from Z without thresholding. Diagonals
are never penalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError

__all__ = [
    "PenaltyConfig",
    "JGLProblem",
    "JGLSolution",
    "prox_penalty",
    "solve",
    "solve_path",
    "kkt_residual",
    "objective_value",
    "gamma_max",
]


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty level, lasso/group mixing and ADMM controls."""

    gamma: float
    alpha: float
    rho: float = 1.0
    eps_abs: float = 1e-6
    eps_rel: float = 1e-5
    max_iter: int = 2000
    adapt_rho: bool = False
    track_objective: bool = True

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class JGLProblem:
    """Stack of L symmetric correlation matrices with unit diagonal."""

    correlations: np.ndarray  # (L, p, p)

    def __post_init__(self):
        R = np.asarray(self.correlations, dtype=float)
        if R.ndim == 2:
            R = R[None, :, :]
        if R.ndim != 3 or R.shape[1] != R.shape[2]:
            raise ValueError("correlations must be a stack of square matrices")
        if np.max(np.abs(R - R.transpose(0, 2, 1))) > 1e-10:
            raise ValueError("correlation matrices must be symmetric within 1e-10")
        diag = R[:, np.arange(R.shape[1]), np.arange(R.shape[1])]
        if np.any(diag != 1.0):
            raise ValueError("correlation diagonals must be exactly one")
        object.__setattr__(self, "correlations", R)

    @property
    def n_matrices(self) -> int:
        return self.correlations.shape[0]

    @property
    def dim(self) -> int:
        return self.correlations.shape[1]


@dataclass(frozen=True)
class JGLSolution:
    """Converged (or truncated) ADMM state.

    ``xi`` holds the positive definite estimates, ``z`` the consensus
    copies whose exact zero pattern defines the estimated edges.
    """

    xi: np.ndarray  # (L, p, p), positive definite
    z: np.ndarray  # (L, p, p), exact zeros
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    objective_increases: int = 0
    scaled_dual: np.ndarray | None = None  # U, kept for warm starts
    rho_final: float = 1.0

    def __post_init__(self):
        np.linalg.cholesky(self.xi)  # raises LinAlgError if any block is not PD
        if np.max(np.abs(self.z - self.z.transpose(0, 2, 1))) > 1e-8:
            raise ValueError("consensus matrices must be symmetric")
        pattern = self.z != 0.0
        if not np.array_equal(pattern, pattern.transpose(0, 2, 1)):
            raise ValueError("zero pattern of z must be exactly symmetric")


def prox_penalty(v: np.ndarray, gamma: float, alpha: float, rho: float) -> np.ndarray:
    """Proximal map of the combined lasso + group penalty for one (j, k) group.

    Elementwise soft-threshold at gamma*alpha/rho, then shrink the whole
    vector toward zero by the group threshold gamma*(1-alpha)/rho.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    v = np.asarray(v, dtype=float)
    shrunk = np.sign(v) * np.maximum(np.abs(v) - gamma * alpha / rho, 0.0)
    group = gamma * (1.0 - alpha) / rho
    if group > 0:
        norm = np.sqrt(np.sum(shrunk * shrunk))
        scale = max(0.0, 1.0 - group / norm) if norm > 0 else 0.0
        shrunk = shrunk * scale
    return shrunk


def _prox_offdiag(A: np.ndarray, kappa1: float, kappa2: float) -> np.ndarray:
    """Apply the two-stage shrinkage to every entry of a (L, p, p) stack."""
    S = np.sign(A) * np.maximum(np.abs(A) - kappa1, 0.0)
    if kappa2 > 0:
        norms = np.sqrt(np.einsum("ljk,ljk->jk", S, S))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(norms > 0, np.maximum(0.0, 1.0 - kappa2 / norms), 0.0)
        S = S * scale[None, :, :]
    return S


def _penalty_value(M: np.ndarray, gamma: float, alpha: float) -> float:
    d = np.arange(M.shape[1])
    l1 = np.abs(M).sum() - np.abs(M[:, d, d]).sum()
    group = np.sqrt(np.einsum("ljk,ljk->jk", M, M))
    l2 = group.sum() - group[d, d].sum()
    return gamma * (alpha * l1 + (1.0 - alpha) * l2)


def objective_value(problem: JGLProblem, matrices: np.ndarray, gamma: float, alpha: float) -> float:
    """Penalized negative log-likelihood at a stack of PD matrices."""
    R = problem.correlations
    sign, logdet = np.linalg.slogdet(matrices)
    if np.any(sign <= 0):
        raise NumericalError("objective requires positive definite matrices")
    smooth = float(np.einsum("ljk,ljk->", R, matrices) - logdet.sum())
    return smooth + _penalty_value(matrices, gamma, alpha)


def solve(
    problem: JGLProblem,
    config: PenaltyConfig,
    init: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> JGLSolution:
    """Run ADMM until the primal and dual residuals pass their tolerances.

    ``init`` may carry (Theta, Z, U) from a previous solve for warm starts;
    cold starts use the identity. Returns converged=False (with residuals)
    when max_iter is exhausted.
    """
    R = problem.correlations
    L, p, _ = R.shape
    if init is None:
        Theta = np.tile(np.eye(p), (L, 1, 1))
        Z = Theta.copy()
        U = np.zeros_like(Theta)
    else:
        Theta, Z, U = (np.array(part, dtype=float) for part in init)
        if Theta.shape != R.shape or Z.shape != R.shape or U.shape != R.shape:
            raise ValueError("warm start arrays must match the problem shape")

    rho = config.rho
    gamma, alpha = config.gamma, config.alpha
    scale_n = np.sqrt(L * p * p)
    d_idx = np.arange(p)
    trace: list[float] = []
    increases = 0
    r_norm = s_norm = np.inf
    converged = False
    it = 0

    for it in range(1, config.max_iter + 1):
        A = rho * (Z - U) - R
        lam, Q = np.linalg.eigh(A)
        d = (lam + np.sqrt(lam * lam + 4.0 * rho)) / (2.0 * rho)
        Theta = (Q * d[:, None, :]) @ Q.transpose(0, 2, 1)
        Theta = (Theta + Theta.transpose(0, 2, 1)) / 2.0

        if config.track_objective:
            smooth = float(np.einsum("ljk,ljk->", R, Theta) - np.log(d).sum())
            obj = smooth + _penalty_value(Theta, gamma, alpha)
            if trace and obj > trace[-1] + 1e-8 * abs(trace[-1]):
                increases += 1
            trace.append(obj)

        M = Theta + U
        Z_prev = Z
        Z = _prox_offdiag(M, gamma * alpha / rho, gamma * (1.0 - alpha) / rho)
        Z[:, d_idx, d_idx] = M[:, d_idx, d_idx]
        U = U + Theta - Z

        r_norm = float(np.linalg.norm((Theta - Z).ravel()))
        s_norm = rho * float(np.linalg.norm((Z - Z_prev).ravel()))
        if not (np.isfinite(r_norm) and np.isfinite(s_norm)):
            raise NumericalError(f"non-finite ADMM iterate at iteration {it}")
        eps_pri = scale_n * config.eps_abs + config.eps_rel * max(
            float(np.linalg.norm(Theta.ravel())), float(np.linalg.norm(Z.ravel()))
        )
        eps_dual = scale_n * config.eps_abs + config.eps_rel * rho * float(
            np.linalg.norm(U.ravel())
        )
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break

        if config.adapt_rho and r_norm > 10.0 * s_norm:
            rho *= 2.0
            U = U / 2.0
        elif config.adapt_rho and s_norm > 10.0 * r_norm:
            rho /= 2.0
            U = U * 2.0

    return JGLSolution(
        xi=Theta,
        z=Z,
        iterations=it,
        primal_residual=r_norm,
        dual_residual=s_norm,
        converged=converged,
        objective_trace=np.array(trace),
        objective_increases=increases,
        scaled_dual=U,
        rho_final=rho,
    )


def solve_path(
    problem: JGLProblem,
    gammas: np.ndarray,
    config: PenaltyConfig,
) -> list[JGLSolution]:
    """Solve a penalty path, warm-starting each level from the previous one.

    ``gammas`` should be ordered from largest to smallest so the cheap,
    heavily shrunk solutions seed the expensive dense ones. The iterates
    (Theta, Z, U) and, when adaptation is on, the step size carry over
    between levels.
    """
    solutions: list[JGLSolution] = []
    init = None
    rho = config.rho
    for gamma in gammas:
        sol = solve(problem, replace(config, gamma=float(gamma), rho=rho), init=init)
        solutions.append(sol)
        init = (sol.xi, sol.z, sol.scaled_dual)
        if config.adapt_rho:
            rho = sol.rho_final
    return solutions


def kkt_residual(problem: JGLProblem, solution: JGLSolution, config: PenaltyConfig) -> float:
    """Largest violation of the stationarity conditions at the solution.

    The gradient of the smooth part is evaluated at the positive definite
    estimates; the penalty subgradient is taken at the consensus copies,
    with dual-ball conditions for zero entries and zero groups.
    """
    R = problem.correlations
    Theta, Z = solution.xi, solution.z
    gamma, alpha = config.gamma, config.alpha
    try:
        inv = np.linalg.inv(Theta)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular estimate in stationarity check") from exc
    if not np.all(np.isfinite(inv)):
        raise NumericalError("non-finite inverse in stationarity check")
    G = R - inv

    L, p, _ = R.shape
    d_idx = np.arange(p)
    viol = float(np.max(np.abs(G[:, d_idx, d_idx])))

    off_mask = ~np.eye(p, dtype=bool)
    if gamma == 0.0:
        return max(viol, float(np.max(np.abs(G[:, off_mask]))) if p > 1 else viol)

    norms = np.sqrt(np.einsum("ljk,ljk->jk", Z, Z))
    soft = np.sign(G) * np.maximum(np.abs(G) - gamma * alpha, 0.0)

    # Groups that are entirely zero: the soft-thresholded gradient must fit
    # inside the group dual ball of radius gamma*(1-alpha).
    zero_group = (norms == 0.0) & off_mask
    if np.any(zero_group):
        group_norms = np.sqrt(np.einsum("ljk,ljk->jk", soft, soft))
        excess = group_norms[zero_group] - gamma * (1.0 - alpha)
        viol = max(viol, float(np.max(np.maximum(excess, 0.0), initial=0.0)))

    live_group = (norms > 0.0) & off_mask
    if np.any(live_group):
        with np.errstate(divide="ignore", invalid="ignore"):
            direction = np.where(norms > 0, Z / norms[None, :, :], 0.0)
        stat = G + gamma * alpha * np.sign(Z) + gamma * (1.0 - alpha) * direction
        live_entries = (Z != 0.0) & live_group[None, :, :]
        if np.any(live_entries):
            viol = max(viol, float(np.max(np.abs(stat[live_entries]))))
        dead_entries = (Z == 0.0) & live_group[None, :, :]
        if np.any(dead_entries):
            slack = np.abs(G[dead_entries]) - gamma * alpha
            viol = max(viol, float(np.max(np.maximum(slack, 0.0), initial=0.0)))
    return viol


def gamma_max(problem: JGLProblem, alpha: float, tol: float = 1e-12) -> float:
    """Smallest penalty level at which the whole estimate is diagonal.

    With unit-diagonal inputs the fully shrunk solution is the identity,
    so emptiness is certified by the stationarity condition at the
    identity; the threshold is located by bisection.
    """
    R = problem.correlations
    p = problem.dim
    off = ~np.eye(p, dtype=bool)
    G = R * off[None, :, :]  # gradient R - I^{-1} off the diagonal

    def excess(gamma: float) -> float:
        soft = np.sign(G) * np.maximum(np.abs(G) - gamma * alpha, 0.0)
        group_norms = np.sqrt(np.einsum("ljk,ljk->jk", soft, soft))
        return float(np.max(group_norms)) - gamma * (1.0 - alpha)

    hi = float(np.max(np.sqrt(np.einsum("ljk,ljk->jk", G, G))))
    if hi == 0.0:
        return 0.0
    while excess(hi) > 0:
        hi *= 2.0
    lo = 0.0
    while hi - lo > tol * max(hi, 1.0):
        mid = (lo + hi) / 2.0
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi
