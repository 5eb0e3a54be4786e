"""Shared domain types and elementary block-matrix algebra.

The central objects are bipartite block models: an ``n x m`` mean matrix
that is constant on the blocks induced by a clustering of the rows into
``K`` groups and a clustering of the columns into ``L`` groups.  Cluster
memberships are stored as label vectors; the 0/1 assignment-matrix form
is available as a view when the algebra calls for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = [
    "AssignmentMatrix",
    "BlockModel",
    "Graphon",
    "NoiseModel",
    "ObservationSet",
    "DimensionMismatch",
    "EmptyClusterError",
    "induced_mean",
    "frobenius_cost",
    "group_sums",
    "block_sums",
    "block_inner",
    "induced_sq_norm",
]


class DimensionMismatch(ValueError):
    """Raised when matrix shapes and cluster counts do not line up."""


class EmptyClusterError(RuntimeError):
    """Raised when an operation needs every cluster to be populated.

    Carries the axis ("row" or "col") and the offending cluster index so
    the caller can repair the assignment and retry.
    """

    def __init__(self, axis: str, index: int):
        self.axis = axis
        self.index = index
        super().__init__(f"empty {axis} cluster {index}")


@dataclass(frozen=True)
class AssignmentMatrix:
    """Hard clustering of ``n`` items into ``K`` clusters.

    ``labels[i]`` is the 0-based cluster of item ``i``.  The equivalent
    binary matrix ``Z`` (one 1 per row) is exposed by :meth:`onehot`.
    Single-cluster assignments are legal here (handy for grand-mean
    models); the estimator's feasible sets separately require ``K >= 2``.

    Parameters
    ----------
    n : int
        Number of items (rows of the implied 0/1 matrix).
    K : int
        Number of clusters.
    labels : np.ndarray
        Integer vector of length ``n`` with values in ``{0, ..., K-1}``.
    """

    n: int
    K: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        object.__setattr__(self, "labels", labels)
        if self.n < 1:
            raise ValueError("need at least one item")
        if self.K < 1:
            raise ValueError("need at least one cluster")
        if labels.shape != (self.n,):
            raise DimensionMismatch(
                f"labels has shape {labels.shape}, expected ({self.n},)"
            )
        if labels.min() < 0 or labels.max() >= self.K:
            raise ValueError("labels must lie in {0, ..., K-1}")
        labels.setflags(write=False)

    def counts(self) -> np.ndarray:
        """Cluster sizes as a length-``K`` integer vector."""
        return np.bincount(self.labels, minlength=self.K)

    def min_size(self) -> int:
        return int(self.counts().min())

    def satisfies_min_size(self, n0: int) -> bool:
        """Whether every cluster has at least ``n0`` members."""
        return self.min_size() >= n0

    def onehot(self) -> np.ndarray:
        """The ``n x K`` binary assignment matrix (a dense view)."""
        Z = np.zeros((self.n, self.K))
        Z[np.arange(self.n), self.labels] = 1.0
        return Z

    def relabeled(self, perm: np.ndarray) -> "AssignmentMatrix":
        """Apply a cluster permutation: new label of item i is perm[old]."""
        perm = np.asarray(perm, dtype=np.int64)
        return AssignmentMatrix(self.n, self.K, perm[self.labels])


@dataclass(frozen=True)
class BlockModel:
    """Block-value matrix plus row and column assignments.

    The induced mean matrix is ``Theta[i, j] = Q[z_rows(i), z_cols(j)]``;
    it is constant on every block and takes at most ``K * L`` distinct
    values.
    """

    Q: np.ndarray
    z_rows: AssignmentMatrix
    z_cols: AssignmentMatrix

    def __post_init__(self):
        Q = np.array(self.Q, dtype=np.float64, copy=True)
        object.__setattr__(self, "Q", Q)
        if Q.ndim != 2:
            raise DimensionMismatch("Q must be a 2-d matrix")
        if Q.shape != (self.z_rows.K, self.z_cols.K):
            raise DimensionMismatch(
                f"Q has shape {Q.shape}, expected "
                f"({self.z_rows.K}, {self.z_cols.K})"
            )
        Q.setflags(write=False)

    @property
    def n(self) -> int:
        return self.z_rows.n

    @property
    def m(self) -> int:
        return self.z_cols.n

    @property
    def K(self) -> int:
        return self.z_rows.K

    @property
    def L(self) -> int:
        return self.z_cols.K

    def induced_mean(self) -> np.ndarray:
        return induced_mean(self)


def induced_mean(model: BlockModel) -> np.ndarray:
    """Materialize the ``n x m`` block-constant mean matrix of a model."""
    return model.Q[np.ix_(model.z_rows.labels, model.z_cols.labels)]


def frobenius_cost(H: np.ndarray, model: BlockModel) -> float:
    """Squared Frobenius distance between ``H`` and the model mean.

    This is the least-squares objective: ``|| H - Z_r Q Z_c^T ||_F^2``.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.shape != (model.n, model.m):
        raise DimensionMismatch(
            f"H has shape {H.shape}, expected ({model.n}, {model.m})"
        )
    diff = H - induced_mean(model)
    return float(np.einsum("ij,ij->", diff, diff))


def block_sums(M: np.ndarray, model: BlockModel) -> np.ndarray:
    """``K x L`` sums of ``M`` over the model's blocks."""
    rows = group_sums(np.asarray(M, dtype=np.float64), model.z_rows.labels, model.K, axis=0)
    return group_sums(rows, model.z_cols.labels, model.L, axis=1)


def block_inner(M: np.ndarray, model: BlockModel) -> float:
    """Inner product of ``M`` with the induced mean, without materializing it."""
    return float((model.Q * block_sums(M, model)).sum())


def induced_sq_norm(model: BlockModel) -> float:
    """Squared Frobenius norm of the induced mean matrix."""
    sizes = np.outer(model.z_rows.counts(), model.z_cols.counts())
    return float((sizes * model.Q * model.Q).sum())


def group_sums(H: np.ndarray, labels: np.ndarray, K: int, axis: int) -> np.ndarray:
    """Sum the rows (axis=0) or columns (axis=1) of ``H`` by cluster label.

    Returns a ``K x m`` (axis=0) or ``n x K`` (axis=1) matrix; empty
    clusters produce zero rows/columns.
    """
    H = np.asarray(H, dtype=np.float64)
    if axis == 0:
        out = np.zeros((K, H.shape[1]))
        for k in range(K):
            rows = labels == k
            if rows.any():
                out[k] = H[rows].sum(axis=0)
        return out
    out = np.zeros((H.shape[0], K))
    for k in range(K):
        cols = labels == k
        if cols.any():
            out[:, k] = H[:, cols].sum(axis=1)
    return out


# --------------------------------------------------------------------------
# Graphons
# --------------------------------------------------------------------------

_VALIDATION_GRID = 512
_VALIDATION_TOL = 1e-12


@dataclass(frozen=True)
class Graphon:
    """A bivariate mean function on the unit square, bounded by ``rho``.

    Two families are supported.  A piecewise-constant graphon is given by
    breakpoints ``0 = a_0 < ... < a_K = 1`` and ``0 = b_0 < ... < b_L = 1``
    together with a ``K x L`` value matrix; the function equals
    ``values[k, l]`` on the half-open cell ``[a_k, a_{k+1}) x [b_l, b_{l+1})``
    (the last cell on each axis is closed).  An analytic graphon is given
    by a vectorized evaluator together with Hoelder smoothness metadata
    ``(hoelder_alpha, hoelder_L)``.

    ``rho`` is the sup-norm bound; values are validated against
    ``[0, rho]`` on construction (analytic graphons on a 512 x 512 grid,
    since the exact supremum is unavailable).  Pass ``validate=False``
    for derived graphons that may step outside the band, e.g. lifts of
    estimated matrices.
    """

    rho: float
    family: str  # "piecewise_constant" or "analytic"
    breaks_u: Optional[np.ndarray] = None
    breaks_v: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    evaluator: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    hoelder_alpha: Optional[float] = None
    hoelder_L: Optional[float] = None
    validate: bool = field(default=True, repr=False)

    @staticmethod
    def piecewise_constant(
        breaks_u, breaks_v, values, rho: float, validate: bool = True
    ) -> "Graphon":
        return Graphon(
            rho=rho,
            family="piecewise_constant",
            breaks_u=np.asarray(breaks_u, dtype=np.float64),
            breaks_v=np.asarray(breaks_v, dtype=np.float64),
            values=np.asarray(values, dtype=np.float64),
            validate=validate,
        )

    @staticmethod
    def analytic(
        evaluator, rho: float, hoelder_alpha: float, hoelder_L: float
    ) -> "Graphon":
        return Graphon(
            rho=rho,
            family="analytic",
            evaluator=evaluator,
            hoelder_alpha=hoelder_alpha,
            hoelder_L=hoelder_L,
        )

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.family == "piecewise_constant":
            self._check_piecewise()
        elif self.family == "analytic":
            self._check_analytic()
        else:
            raise ValueError(f"unknown graphon family {self.family!r}")

    def _check_piecewise(self):
        if self.breaks_u is None or self.breaks_v is None or self.values is None:
            raise ValueError("piecewise-constant graphon needs breaks and values")
        object.__setattr__(self, "breaks_u", np.array(self.breaks_u, dtype=np.float64, copy=True))
        object.__setattr__(self, "breaks_v", np.array(self.breaks_v, dtype=np.float64, copy=True))
        object.__setattr__(self, "values", np.array(self.values, dtype=np.float64, copy=True))
        a, b, V = self.breaks_u, self.breaks_v, self.values
        for name, br in (("breaks_u", a), ("breaks_v", b)):
            if br[0] != 0.0 or br[-1] != 1.0 or np.any(np.diff(br) <= 0):
                raise ValueError(f"{name} must increase strictly from 0 to 1")
        if V.shape != (len(a) - 1, len(b) - 1):
            raise DimensionMismatch(
                f"values has shape {V.shape}, expected "
                f"({len(a) - 1}, {len(b) - 1})"
            )
        if self.validate and (V.min() < -_VALIDATION_TOL or V.max() > self.rho + _VALIDATION_TOL):
            raise ValueError("graphon values fall outside [0, rho]")
        a.setflags(write=False)
        b.setflags(write=False)
        V.setflags(write=False)

    def _check_analytic(self):
        if self.evaluator is None:
            raise ValueError("analytic graphon needs an evaluator")
        if self.hoelder_alpha is None or not (0 < self.hoelder_alpha <= 1):
            raise ValueError("hoelder_alpha must lie in (0, 1]")
        if self.hoelder_L is None or self.hoelder_L <= 0:
            raise ValueError("hoelder_L must be positive")
        if self.validate:
            g = (np.arange(_VALIDATION_GRID) + 0.5) / _VALIDATION_GRID
            vals = self.evaluate_grid(g, g)
            if vals.min() < -_VALIDATION_TOL or vals.max() > self.rho + _VALIDATION_TOL:
                raise ValueError("graphon values fall outside [0, rho] on the validation grid")

    @property
    def K(self) -> Optional[int]:
        return None if self.breaks_u is None else len(self.breaks_u) - 1

    @property
    def L(self) -> Optional[int]:
        return None if self.breaks_v is None else len(self.breaks_v) - 1

    def min_cell_widths(self) -> Tuple[float, float]:
        """Smallest cell width on each axis (piecewise-constant only)."""
        if self.family != "piecewise_constant":
            raise ValueError("only defined for piecewise-constant graphons")
        return float(np.diff(self.breaks_u).min()), float(np.diff(self.breaks_v).min())

    def cell_indices(self, u: np.ndarray, axis: int) -> np.ndarray:
        """Cell index of each coordinate along one axis (0 = rows, 1 = cols)."""
        breaks = self.breaks_u if axis == 0 else self.breaks_v
        if breaks is None:
            raise ValueError("only defined for piecewise-constant graphons")
        u = np.asarray(u, dtype=np.float64)
        idx = np.searchsorted(breaks, u, side="right") - 1
        return np.clip(idx, 0, len(breaks) - 2)

    def evaluate_grid(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Evaluate on the product grid: returns the matrix ``W(u_i, v_j)``."""
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        if self.family == "piecewise_constant":
            iu = self.cell_indices(u, axis=0)
            iv = self.cell_indices(v, axis=1)
            return self.values[np.ix_(iu, iv)]
        return np.asarray(self.evaluator(u[:, None], v[None, :]), dtype=np.float64)

    def __call__(self, u: float, v: float) -> float:
        return float(self.evaluate_grid([u], [v])[0, 0])


# --------------------------------------------------------------------------
# Noise models
# --------------------------------------------------------------------------

_NOISE_KINDS = ("bernoulli", "binomial", "scaled_poisson", "gaussian")


@dataclass(frozen=True)
class NoiseModel:
    """Conditional distribution of the observed entries given their mean.

    ``bernoulli``       - H_ij in {0, 1} with mean Theta_ij.
    ``binomial(N)``     - N*H_ij ~ Binomial(N, Theta_ij); H_ij is a frequency.
    ``scaled_poisson(T)`` - T*H_ij ~ Poisson(T*Theta_ij); H_ij is a rate.
    ``gaussian(sigma2)``  - H_ij ~ N(Theta_ij, sigma2).

    :meth:`bernstein_params` returns the moment-condition pair
    ``(sigma2, b)`` that drives all risk-bound constants:
    bernoulli -> (rho, 1/3), binomial -> (rho/N, 1/(3N)),
    scaled_poisson -> (rho/T, 1/(3T)), gaussian -> (sigma2, 0).
    """

    kind: str
    N: Optional[int] = None
    T: Optional[float] = None
    sigma2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "binomial" and (self.N is None or self.N < 1):
            raise ValueError("binomial noise needs a positive integer N")
        if self.kind == "scaled_poisson" and (self.T is None or self.T <= 0):
            raise ValueError("scaled_poisson noise needs a positive T")
        if self.kind == "gaussian" and (self.sigma2 is None or self.sigma2 <= 0):
            raise ValueError("gaussian noise needs a positive sigma2")

    @staticmethod
    def bernoulli() -> "NoiseModel":
        return NoiseModel("bernoulli")

    @staticmethod
    def binomial(N: int) -> "NoiseModel":
        return NoiseModel("binomial", N=int(N))

    @staticmethod
    def scaled_poisson(T: float) -> "NoiseModel":
        return NoiseModel("scaled_poisson", T=float(T))

    @staticmethod
    def gaussian(sigma2: float) -> "NoiseModel":
        return NoiseModel("gaussian", sigma2=float(sigma2))

    def bernstein_params(self, rho: float) -> Tuple[float, float]:
        """The ``(sigma2, b)`` pair for mean matrices bounded by ``rho``."""
        if self.kind == "bernoulli":
            return rho, 1.0 / 3.0
        if self.kind == "binomial":
            return rho / self.N, 1.0 / (3.0 * self.N)
        if self.kind == "scaled_poisson":
            return rho / self.T, 1.0 / (3.0 * self.T)
        return self.sigma2, 0.0

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.N is not None:
            d["N"] = self.N
        if self.T is not None:
            d["T"] = self.T
        if self.sigma2 is not None:
            d["sigma2"] = self.sigma2
        return d

    @staticmethod
    def from_dict(d: dict) -> "NoiseModel":
        return NoiseModel(
            d["kind"], N=d.get("N"), T=d.get("T"), sigma2=d.get("sigma2")
        )


# --------------------------------------------------------------------------
# Observations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservationSet:
    """One synthetic draw: data matrix plus optional companions.

    ``H`` holds the raw observations.  When a missingness mask is present,
    entries with ``mask == 0`` are unobserved and downstream code should
    work with :meth:`adjusted`, the inverse-probability-weighted matrix
    ``H * mask / p`` whose conditional mean is still the truth.
    """

    H: np.ndarray
    noise: NoiseModel
    H_prime: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    p: Optional[float] = None
    latents: Optional[Tuple[np.ndarray, np.ndarray]] = None
    theta_star: Optional[np.ndarray] = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64)
        object.__setattr__(self, "H", H)
        for name in ("H_prime", "mask", "theta_star"):
            M = getattr(self, name)
            if M is not None:
                M = np.asarray(M, dtype=np.float64)
                if M.shape != H.shape:
                    raise DimensionMismatch(f"{name} must match H's shape")
                object.__setattr__(self, name, M)
        if (self.mask is None) != (self.p is None):
            raise ValueError("mask and p must be given together")
        if self.p is not None and not (0 < self.p <= 1):
            raise ValueError("observation probability p must lie in (0, 1]")
        if self.latents is not None:
            U, V = self.latents
            U = np.asarray(U, dtype=np.float64)
            V = np.asarray(V, dtype=np.float64)
            if U.shape != (H.shape[0],) or V.shape != (H.shape[1],):
                raise DimensionMismatch("latent vectors must match H's shape")
            object.__setattr__(self, "latents", (U, V))

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.H.shape[1]

    def adjusted(self) -> np.ndarray:
        """``H * mask / p`` when a mask is present, otherwise ``H``."""
        if self.mask is None:
            return self.H
        return self.H * self.mask / self.p
