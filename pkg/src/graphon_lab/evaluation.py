"""Error metrics and theoretical reference quantities.

Provides the mean-squared error on the mean matrix, the lift of a matrix
to a piecewise-constant graphon, a computable sort-aligned proxy for the
graphon distance (an upper bound for the true infimum over
measure-preserving bijections), the known-clusters oracle estimator with
its Bernoulli closed-form risk, and the theoretical rate curve used as a
reference in the experiments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import AssignmentMatrix, BlockModel, Graphon, NoiseModel
from .estimation import q_step

__all__ = [
    "MetricReport",
    "mse_theta",
    "lift_to_graphon",
    "pc_l2_sq_distance",
    "delta_tilde",
    "oracle_fit",
    "oracle_risk_bernoulli",
    "rate_bound",
    "psi_condition",
]

DEFAULT_DELTA_GRID = 1000


@dataclass(frozen=True)
class MetricReport:
    """Per-run error summary; entries are nonnegative and finite."""

    mse_theta: float
    delta_tilde_sq: Optional[float] = None
    oracle_mse: Optional[float] = None
    rate_bound: Optional[float] = None

    def __post_init__(self):
        for name in ("mse_theta", "delta_tilde_sq", "oracle_mse", "rate_bound"):
            v = getattr(self, name)
            if v is None:
                continue
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be nonnegative and finite")


def mse_theta(theta_hat: np.ndarray, theta_star: np.ndarray) -> float:
    """Normalized squared error ``||Theta_hat - Theta*||_F^2 / (n m)``."""
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    theta_star = np.asarray(theta_star, dtype=np.float64)
    diff = theta_hat - theta_star
    return float(np.einsum("ij,ij->", diff, diff) / diff.size)


def lift_to_graphon(theta: np.ndarray) -> Graphon:
    """The piecewise-constant graphon of a matrix on the regular n x m grid.

    ``W(u, v) = theta[i, j]`` on ``[(i-1)/n, i/n) x [(j-1)/m, j/m)``.  The
    lift is an isometry up to scale:
    ``||W_A - W_B||_{L2} = ||A - B||_F / sqrt(n m)`` for same-shape
    matrices.  Lifted estimates may leave ``[0, rho]``, so bound checking
    is disabled.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n, m = theta.shape
    rho = max(float(np.abs(theta).max()), np.finfo(float).tiny)
    return Graphon.piecewise_constant(
        np.linspace(0.0, 1.0, n + 1),
        np.linspace(0.0, 1.0, m + 1),
        theta,
        rho=rho,
        validate=False,
    )


def pc_l2_sq_distance(g1: Graphon, g2: Graphon) -> float:
    """Exact squared L2 distance between two piecewise-constant graphons.

    Integrates cell by cell on the common refinement of the two grids, so
    the result carries no quadrature error.
    """
    if g1.family != "piecewise_constant" or g2.family != "piecewise_constant":
        raise ValueError("both graphons must be piecewise constant")
    au = np.union1d(g1.breaks_u, g2.breaks_u)
    av = np.union1d(g1.breaks_v, g2.breaks_v)
    mid_u = (au[:-1] + au[1:]) / 2
    mid_v = (av[:-1] + av[1:]) / 2
    diff = g1.evaluate_grid(mid_u, mid_v) - g2.evaluate_grid(mid_u, mid_v)
    areas = np.outer(np.diff(au), np.diff(av))
    return float((diff * diff * areas).sum())


def _rank_of(x: np.ndarray) -> np.ndarray:
    """Rank (0-based) of each entry in the sorted order; stable on ties."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty_like(order)
    ranks[order] = np.arange(len(x))
    return ranks


def _cell_integrals(
    graphon: Graphon, n: int, m: int, grid_res: int
) -> Tuple[np.ndarray, float]:
    """Midpoint-rule integrals of W over the regular n x m rectangles.

    Returns the n x m matrix of rectangle integrals together with the
    squared L2 norm of W on the same global grid.
    """
    g = (np.arange(grid_res) + 0.5) / grid_res
    W = graphon.evaluate_grid(g, g)
    w_sq = float((W * W).mean())
    row_bins = np.minimum((g * n).astype(np.int64), n - 1)
    col_bins = np.minimum((g * m).astype(np.int64), m - 1)
    # bins are nondecreasing in g, so rectangle sums are differences of
    # cumulative sums at the bin boundaries (empty bins come out zero)
    cum = np.vstack([np.zeros((1, grid_res)), np.cumsum(W, axis=0)])
    starts = np.searchsorted(row_bins, np.arange(n), side="left")
    ends = np.searchsorted(row_bins, np.arange(n), side="right")
    row_acc = cum[ends] - cum[starts]
    cum2 = np.hstack([np.zeros((n, 1)), np.cumsum(row_acc, axis=1)])
    cs = np.searchsorted(col_bins, np.arange(m), side="left")
    ce = np.searchsorted(col_bins, np.arange(m), side="right")
    cells = (cum2[:, ce] - cum2[:, cs]) / grid_res**2
    return cells, w_sq


def delta_tilde(
    theta_hat: np.ndarray,
    graphon: Graphon,
    U: np.ndarray,
    V: np.ndarray,
    grid_res: int = DEFAULT_DELTA_GRID,
) -> float:
    """Sort-aligned upper proxy of the graphon distance.

    Both axes of the truth are rearranged by the measure-preserving maps
    that sort the latent positions; the estimate's lift is then compared
    cell by cell.  Writing ``s1, s2`` for the rank maps of ``U, V``:

        delta^2 = ||W||_{L2}^2
                  - 2 sum_ij theta_hat[i, j] * Int(W over R[s1(i), s2(j)])
                  + ||theta_hat||_F^2 / (n m),

    with ``R[a, b] = [a/n, (a+1)/n) x [b/m, (b+1)/m)``.  Integrals use a
    midpoint rule on a ``grid_res x grid_res`` global grid; ``grid_res``
    should comfortably exceed ``max(n, m)``.  The true distance is an
    infimum over all rearrangements, so the returned value bounds it from
    above.  Returns ``sqrt(max(value, 0))``.
    """
    if grid_res < 100:
        raise ValueError("grid_res must be at least 100")
    if U is None or V is None:
        raise ValueError("latent positions are required")
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    n, m = theta_hat.shape
    cells, w_sq = _cell_integrals(graphon, n, m, grid_res)
    r1 = _rank_of(np.asarray(U, dtype=np.float64))
    r2 = _rank_of(np.asarray(V, dtype=np.float64))
    cross = float(np.einsum("ij,ij->", theta_hat, cells[np.ix_(r1, r2)]))
    theta_sq = float(np.einsum("ij,ij->", theta_hat, theta_hat)) / (n * m)
    return float(np.sqrt(max(w_sq - 2.0 * cross + theta_sq, 0.0)))


def oracle_fit(
    H: np.ndarray,
    true_z_rows: AssignmentMatrix,
    true_z_cols: AssignmentMatrix,
) -> BlockModel:
    """Block averages computed with the true clusters.

    A performance floor for any clustering-based estimator.  If a true
    cluster happens to be empty (possible with random latents), the
    affected block values fall back to the global mean and a warning is
    emitted.
    """
    H = np.asarray(H, dtype=np.float64)
    if true_z_rows.min_size() == 0 or true_z_cols.min_size() == 0:
        warnings.warn(
            "empty true cluster; affected oracle blocks use the global mean"
        )
        Q = q_step(H, true_z_rows, true_z_cols, on_empty="fill")
    else:
        Q = q_step(H, true_z_rows, true_z_cols)
    return BlockModel(Q, true_z_rows, true_z_cols)


def oracle_risk_bernoulli(Q_star: np.ndarray, n: int, m: int) -> float:
    """Closed-form oracle risk under Bernoulli noise with exact clusters.

    ``sum_kl Q*[k, l] (1 - Q*[k, l]) / (n m)``; equivalently
    ``rho (||Q~||_{1,1} - rho ||Q~||_F^2) / (n m)`` for ``Q~ = Q*/rho``.
    """
    Q = np.asarray(Q_star, dtype=np.float64)
    if Q.min() < 0 or Q.max() > 1:
        raise ValueError("Bernoulli block values must lie in [0, 1]")
    return float((Q * (1.0 - Q)).sum() / (n * m))


def rate_bound(
    noise: NoiseModel, rho: float, n: int, m: int, K: int, L: int
) -> float:
    """Squared theoretical remainder ``(25 s^2 + 4 b rho) * r_{n,m}(K, L)^2``.

    ``r_{n,m}(K, L)^2 = 3KL/(nm) + log(K)/m + log(L)/n`` and ``(s^2, b)``
    are the noise model's moment parameters.  This is an MSE-scale
    quantity, matching how the experiment plots report errors.
    """
    if K < 2 or L < 2:
        raise ValueError("K and L must be at least 2")
    sigma2, b = noise.bernstein_params(rho)
    r_sq = 3.0 * K * L / (n * m) + np.log(K) / m + np.log(L) / n
    return float((25.0 * sigma2 + 4.0 * b * rho) * r_sq)


def psi_condition(n: int, m: int, n0: int, m0: int) -> float:
    """The size-regime statistic ``3/m0 log(en/n0) + 3/n0 log(em/m0)``.

    The risk bound for the size-constrained estimator applies when this
    value is at most ``(sigma/b)^2``; callers record whether that regime
    holds for a given run.
    """
    if n0 < 3 or m0 < 3:
        raise ValueError("n0 and m0 must be at least 3")
    if n0 > n or m0 > m:
        raise ValueError("n0 <= n and m0 <= m are required")
    return float(
        3.0 / m0 * np.log(np.e * n / n0) + 3.0 / n0 * np.log(np.e * m / m0)
    )
