"""Alternating-minimization fit of bipartite block models.

The least-squares problem over block-constant matrices is combinatorial,
so the fit alternates exact coordinate minimizations: block averaging for
the value matrix, nearest-block-row reassignment for the unconstrained
cluster updates, and an exact network-flow assignment when minimum
cluster sizes are enforced.  Every step can only decrease the cost, so
the recorded cost trajectory is non-increasing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import (
    AssignmentMatrix,
    BlockModel,
    EmptyClusterError,
    group_sums,
)
from .flow import min_cost_assignment
from .synthesis import substream

__all__ = [
    "FitConfig",
    "FitReport",
    "q_step",
    "assignment_costs",
    "z_step_unconstrained",
    "z_step_unconstrained_cols",
    "z_step_constrained",
    "z_step_constrained_cols",
    "kmeans",
    "spectral_init",
    "lloyd_fit",
]

DEFAULT_MAX_ITERS = 40
DEFAULT_TOL_GAMMA = 1e-3

_KMEANS_RESTARTS = 5
_KMEANS_MAX_ITERS = 50


# --------------------------------------------------------------------------
# Coordinate steps
# --------------------------------------------------------------------------


def q_step(
    H: np.ndarray,
    z_rows: AssignmentMatrix,
    z_cols: AssignmentMatrix,
    on_empty: str = "raise",
) -> np.ndarray:
    """Block-average value matrix: ``Q[k, l]`` is the mean of H over block (k, l).

    With ``on_empty="raise"`` an empty row or column cluster raises
    :class:`EmptyClusterError`; with ``on_empty="fill"`` blocks touching an
    empty cluster are filled with the global mean of ``H`` instead.
    """
    H = np.asarray(H, dtype=np.float64)
    K, L = z_rows.K, z_cols.K
    row_counts = z_rows.counts()
    col_counts = z_cols.counts()
    if on_empty == "raise":
        if row_counts.min() == 0:
            raise EmptyClusterError("row", int(np.argmin(row_counts)))
        if col_counts.min() == 0:
            raise EmptyClusterError("col", int(np.argmin(col_counts)))
    row_sums = group_sums(H, z_rows.labels, K, axis=0)  # K x m
    block_sums = group_sums(row_sums, z_cols.labels, L, axis=1)  # K x L
    sizes = np.outer(row_counts, col_counts).astype(np.float64)
    Q = np.divide(block_sums, sizes, out=np.zeros((K, L)), where=sizes > 0)
    if on_empty == "fill" and (sizes == 0).any():
        Q[sizes == 0] = H.mean()
    return Q


def assignment_costs(
    H: np.ndarray, Q: np.ndarray, fixed_cols: AssignmentMatrix
) -> np.ndarray:
    """Per-row assignment costs for the row update, given column clusters.

    Entry ``(i, k)`` is ``-2 (H Z_c Q^T)_{ik} + (Q D Q^T)_{kk}`` with
    ``D = diag(column cluster sizes)``.  Adding the row-wise constant
    ``sum_j H_ij^2`` turns the row minimum into the least-squares cost of
    assigning row i to cluster k, so argmin rows of this matrix are the
    exact coordinate update.
    """
    H = np.asarray(H, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    L = fixed_cols.K
    D = fixed_cols.counts().astype(np.float64)
    if D.min() == 0:
        raise EmptyClusterError("col", int(np.argmin(D)))
    col_sums = group_sums(H, fixed_cols.labels, L, axis=1)  # n x L
    quad = (Q * Q) @ D  # length K
    return -2.0 * col_sums @ Q.T + quad[None, :]


def z_step_unconstrained(
    H: np.ndarray, Q: np.ndarray, fixed_cols: AssignmentMatrix
) -> AssignmentMatrix:
    """Reassign every row to its nearest block row; ties to the lowest index."""
    c = assignment_costs(H, Q, fixed_cols)
    labels = np.argmin(c, axis=1)
    return AssignmentMatrix(c.shape[0], Q.shape[0], labels)


def z_step_unconstrained_cols(
    H: np.ndarray, Q: np.ndarray, fixed_rows: AssignmentMatrix
) -> AssignmentMatrix:
    """Column counterpart of :func:`z_step_unconstrained`."""
    return z_step_unconstrained(np.asarray(H).T, np.asarray(Q).T, fixed_rows)


def z_step_constrained(
    H: np.ndarray,
    Q: np.ndarray,
    fixed_cols: AssignmentMatrix,
    n0: int,
) -> AssignmentMatrix:
    """Row update under the constraint that every cluster keeps ``n0`` rows.

    Returns an integral minimizer of the linearized objective over binary
    assignments with column sums at least ``n0``; the optimal value
    coincides with the linear-programming relaxation.
    """
    c = assignment_costs(H, Q, fixed_cols)
    labels = min_cost_assignment(c, n0)
    return AssignmentMatrix(c.shape[0], Q.shape[0], labels)


def z_step_constrained_cols(
    H: np.ndarray,
    Q: np.ndarray,
    fixed_rows: AssignmentMatrix,
    m0: int,
) -> AssignmentMatrix:
    """Column counterpart of :func:`z_step_constrained`."""
    return z_step_constrained(np.asarray(H).T, np.asarray(Q).T, fixed_rows, m0)


# --------------------------------------------------------------------------
# k-means (used by the spectral initializer)
# --------------------------------------------------------------------------


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (
        (points * points).sum(axis=1)[:, None]
        - 2.0 * points @ centers.T
        + (centers * centers).sum(axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = _sq_dists(points, centers[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = points[idx]
        d2 = np.minimum(d2, _sq_dists(points, centers[j : j + 1]).ravel())
    return centers


def kmeans(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Lloyd k-means with k-means++ seeding, best of 5 restarts by WCSS.

    Empty clusters are re-seeded to the point farthest from its assigned
    center.  Returns the labels of the best restart.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k > n:
        raise ValueError("cannot form more clusters than points")
    best_labels, best_wcss = None, np.inf
    for r in range(_KMEANS_RESTARTS):
        rng = substream(seed, 50 + r)
        centers = _kmeans_pp(points, k, rng)
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(_KMEANS_MAX_ITERS):
            d2 = _sq_dists(points, centers)
            new_labels = np.argmin(d2, axis=1)
            assigned = d2[np.arange(n), new_labels]
            counts = np.bincount(new_labels, minlength=k)
            for empty in np.flatnonzero(counts == 0):
                far = int(np.argmax(assigned))
                new_labels[far] = empty
                assigned[far] = 0.0
                counts = np.bincount(new_labels, minlength=k)
            if np.array_equal(new_labels, labels):
                labels = new_labels
                break
            labels = new_labels
            for j in range(k):
                members = labels == j
                if members.any():
                    centers[j] = points[members].mean(axis=0)
        wcss = float(_sq_dists(points, centers)[np.arange(n), labels].sum())
        if wcss < best_wcss - 1e-12:
            best_labels, best_wcss = labels, wcss
    return best_labels


# --------------------------------------------------------------------------
# Initialization
# --------------------------------------------------------------------------


def _degree_trim(H: np.ndarray) -> np.ndarray:
    """Rescale rows/columns with more than twice the average absolute mass."""
    out = np.array(H, dtype=np.float64, copy=True)
    for axis in (0, 1):
        mass = np.abs(out).sum(axis=1 - axis)
        avg = mass.mean()
        if avg <= 0:
            continue
        heavy = mass > 2 * avg
        if heavy.any():
            scale = np.ones_like(mass)
            scale[heavy] = avg / mass[heavy]
            out *= scale[:, None] if axis == 0 else scale[None, :]
    return out


def _random_labels(
    n: int, K: int, rng: np.random.Generator, min_size: int
) -> np.ndarray:
    for _ in range(1000):
        labels = rng.integers(0, K, size=n)
        if min_size == 0 or np.bincount(labels, minlength=K).min() >= min_size:
            return labels
    raise RuntimeError("could not draw an initial labeling with the required sizes")


def spectral_init(
    H: np.ndarray, K: int, L: int, seed: int = 0
) -> Tuple[AssignmentMatrix, AssignmentMatrix]:
    """Initial clusters from the truncated SVD of a degree-trimmed matrix.

    Rows are clustered by k-means on the ``K`` leading left singular
    vectors (scaled by their singular values), columns on the ``L``
    leading right singular vectors.  If the SVD fails the initializer
    falls back to random labels with a warning.
    """
    H = np.asarray(H, dtype=np.float64)
    n, m = H.shape
    if K > min(n, m) or L > min(n, m):
        raise ValueError("truncation ranks must not exceed min(n, m)")
    kseed_r, kseed_c = (
        int(s)
        for s in np.random.SeedSequence(
            entropy=int(seed), spawn_key=(8,)
        ).generate_state(2, dtype=np.uint64)
    )
    try:
        U, s, Vt = np.linalg.svd(_degree_trim(H), full_matrices=False)
    except np.linalg.LinAlgError:
        warnings.warn("SVD failed; falling back to random initialization")
        rng = substream(seed, 97)
        return (
            AssignmentMatrix(n, K, _random_labels(n, K, rng, 1)),
            AssignmentMatrix(m, L, _random_labels(m, L, rng, 1)),
        )
    row_emb = U[:, :K] * s[:K]
    col_emb = Vt[:L].T * s[:L]
    row_labels = kmeans(row_emb, K, seed=kseed_r)
    col_labels = kmeans(col_emb, L, seed=kseed_c)
    return AssignmentMatrix(n, K, row_labels), AssignmentMatrix(m, L, col_labels)


# --------------------------------------------------------------------------
# The alternating-minimization loop
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of one alternating-minimization fit.

    ``init`` is one of ``"spectral"``, ``"random"`` (multi-restart with
    ``restarts`` independent seeds) or ``"given"`` (explicit initial
    labels in ``init_labels``).  Iteration stops when the cost decreases
    by at most ``tol_gamma``, when the labels reach a fixed point, or
    after ``max_iters`` rounds.
    """

    K: int
    L: int
    n0: int = 0
    m0: int = 0
    init: str = "spectral"
    restarts: int = 10
    max_iters: int = DEFAULT_MAX_ITERS
    tol_gamma: float = DEFAULT_TOL_GAMMA
    seed: int = 0
    init_labels: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if self.K < 2 or self.L < 2:
            raise ValueError("K and L must be at least 2")
        if self.n0 < 0 or self.m0 < 0:
            raise ValueError("minimum sizes must be nonnegative")
        if self.init not in ("spectral", "random", "given"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "given" and self.init_labels is None:
            raise ValueError("init='given' needs init_labels")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol_gamma < 0:
            raise ValueError("tol_gamma must be nonnegative")

    def validate_for(self, n: int, m: int) -> None:
        if self.K > n or self.L > m:
            raise ValueError("more clusters than rows/columns")
        if self.K * self.n0 > n:
            raise ValueError(f"infeasible row sizes: {self.K} * {self.n0} > {n}")
        if self.L * self.m0 > m:
            raise ValueError(f"infeasible column sizes: {self.L} * {self.m0} > {m}")


@dataclass(frozen=True)
class FitReport:
    """Outcome of a fit: the model plus the run's bookkeeping.

    ``cost_trajectory[t]`` is the squared error after iteration ``t`` with
    that iteration's value matrix; the returned model re-averages blocks
    for the final labels, so its cost is at most ``cost_trajectory[-1]``
    (equal whenever the run stopped at a label fixed point).
    """

    model: BlockModel
    cost_trajectory: Sequence[float]
    iterations: int
    init_used: str
    restart_index: int
    seed: int
    # tightest (row, col) size floors every step of this run was an exact
    # constrained minimizer for (0 on iterations that needed a repair)
    traj_min_sizes: Tuple[int, int] = field(default=(0, 0))

    @property
    def final_cost(self) -> float:
        return self.cost_trajectory[-1]


def _repair_empty_rows(
    H: np.ndarray, row_labels: np.ndarray, z_cols: AssignmentMatrix, K: int
) -> np.ndarray:
    """Move the largest-residual row into each empty row cluster."""
    labels = row_labels.copy()
    while True:
        counts = np.bincount(labels, minlength=K)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return labels
        zr = AssignmentMatrix(len(labels), K, labels)
        Q = q_step(H, zr, z_cols, on_empty="fill")
        theta = Q[np.ix_(labels, z_cols.labels)]
        residuals = ((H - theta) ** 2).sum(axis=1)
        movable = counts[labels] >= 2
        residuals = np.where(movable, residuals, -np.inf)
        labels[int(np.argmax(residuals))] = empties[0]


def _lloyd_run(
    H: np.ndarray,
    row_labels: np.ndarray,
    col_labels: np.ndarray,
    cfg: FitConfig,
) -> Tuple[BlockModel, list, Tuple[int, int]]:
    n, m = H.shape
    Ht = np.ascontiguousarray(H.T)
    H_sq = float(np.einsum("ij,ij->", H, H))
    zr = AssignmentMatrix(n, cfg.K, _repair_empty_rows(
        H, np.asarray(row_labels, dtype=np.int64),
        AssignmentMatrix(m, cfg.L, np.asarray(col_labels, dtype=np.int64)),
        cfg.K,
    ))
    zc = AssignmentMatrix(m, cfg.L, _repair_empty_rows(
        Ht, np.asarray(col_labels, dtype=np.int64), zr, cfg.L
    ))
    traj: list = []
    min_row = n
    min_col = m
    for _ in range(cfg.max_iters):
        start = (zr.labels, zc.labels)
        Q = q_step(H, zr, zc)
        # row update; a repaired step is only an exact minimizer for floor 0,
        # so the recorded per-step floor is the pre-repair minimum size
        c = assignment_costs(H, Q, zc)
        if cfg.n0 >= 1:
            zr = AssignmentMatrix(n, cfg.K, min_cost_assignment(c, cfg.n0))
            row_floor = zr.min_size()
        else:
            zr = AssignmentMatrix(n, cfg.K, np.argmin(c, axis=1))
            row_floor = zr.min_size()
            if row_floor == 0:
                zr = AssignmentMatrix(
                    n, cfg.K, _repair_empty_rows(H, zr.labels, zc, cfg.K)
                )
                Q = q_step(H, zr, zc)
        # column update (same step on the transpose)
        c = assignment_costs(Ht, Q.T, zr)
        if cfg.m0 >= 1:
            zc = AssignmentMatrix(m, cfg.L, min_cost_assignment(c, cfg.m0))
            col_floor = zc.min_size()
        else:
            zc = AssignmentMatrix(m, cfg.L, np.argmin(c, axis=1))
            col_floor = zc.min_size()
            if col_floor == 0:
                zc = AssignmentMatrix(
                    m, cfg.L, _repair_empty_rows(Ht, zc.labels, zr, cfg.L)
                )
                Q = q_step(H, zr, zc)
                c = assignment_costs(Ht, Q.T, zr)
        # the linearized objective differs from the squared error by ||H||_F^2
        phi = float(c[np.arange(m), zc.labels].sum())
        traj.append(max(H_sq + phi, 0.0))
        min_row = min(min_row, row_floor)
        min_col = min(min_col, col_floor)
        if np.array_equal(start[0], zr.labels) and np.array_equal(start[1], zc.labels):
            break
        if len(traj) >= 2 and abs(traj[-1] - traj[-2]) <= cfg.tol_gamma:
            break
    model = BlockModel(q_step(H, zr, zc), zr, zc)
    return model, traj, (min_row, min_col)


def lloyd_fit(H: np.ndarray, config: FitConfig) -> FitReport:
    """Alternating minimization with the configured initialization.

    With ``init="random"`` the best of ``config.restarts`` independently
    seeded runs (by final cost) is returned.
    """
    H = np.asarray(H, dtype=np.float64)
    n, m = H.shape
    config.validate_for(n, m)

    starts = []
    if config.init == "spectral":
        init_seed = int(
            np.random.SeedSequence(
                entropy=int(config.seed), spawn_key=(7,)
            ).generate_state(1, dtype=np.uint64)[0]
        )
        zr, zc = spectral_init(H, config.K, config.L, seed=init_seed)
        starts.append((zr.labels, zc.labels))
    elif config.init == "random":
        for r in range(config.restarts):
            rng = substream(config.seed, 20 + r)
            starts.append(
                (
                    _random_labels(n, config.K, rng, min(config.n0, 1)),
                    _random_labels(m, config.L, rng, min(config.m0, 1)),
                )
            )
    else:
        rl, cl = config.init_labels
        starts.append((np.asarray(rl, dtype=np.int64), np.asarray(cl, dtype=np.int64)))

    best = None
    for idx, (rl, cl) in enumerate(starts):
        model, traj, min_sizes = _lloyd_run(H, rl, cl, config)
        if best is None or traj[-1] < best[1][-1] - 1e-12:
            best = (model, traj, min_sizes, idx)
    model, traj, min_sizes, idx = best
    return FitReport(
        model=model,
        cost_trajectory=traj,
        iterations=len(traj),
        init_used=config.init,
        restart_index=idx,
        seed=config.seed,
        traj_min_sizes=min_sizes,
    )
