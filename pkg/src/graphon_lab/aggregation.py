"""Exponentially weighted aggregation of block-model fits.

A collection of candidate estimates of the mean matrix is combined into a
convex mixture whose weights are exponential in how well each candidate
explains an independent second copy of the data:

    w_l  proportional to  exp(-||H' - Theta_l||_F^2 / beta).

Smaller temperatures ``beta`` concentrate the mixture on the best-fitting
candidate; larger temperatures flatten it toward the uniform average.
Weights are computed with a log-sum-exp shift so that residuals spanning
many orders of magnitude remain well normalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import BlockModel, NoiseModel

__all__ = [
    "HyperGrid",
    "EwaResult",
    "default_grid",
    "temperature",
    "ewa_aggregate",
    "ewa_weights",
]


@dataclass(frozen=True)
class HyperGrid:
    """A set of fit hyperparameters ``(K, L, n0, m0)`` to aggregate over."""

    entries: Tuple[Tuple[int, int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple(tuple(int(x) for x in e) for e in self.entries)
        )
        for K, L, n0, m0 in self.entries:
            if K < 2 or L < 2:
                raise ValueError("grid entries need K, L >= 2")
            if n0 < 0 or m0 < 0:
                raise ValueError("grid entries need nonnegative n0, m0")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def validate_for(self, n: int, m: int) -> None:
        for K, L, n0, m0 in self.entries:
            if K > n or L > m or K * n0 > n or L * m0 > m:
                raise ValueError(
                    f"grid entry (K={K}, L={L}, n0={n0}, m0={m0}) is "
                    f"infeasible for an {n} x {m} matrix"
                )


def _geometric_halfsteps(base_exp: float, limit: float) -> List[int]:
    """Deduplicated floors of 2**(base_exp + l/2) while <= limit."""
    out: List[int] = []
    step = 0
    while True:
        val = int(np.floor(2 ** (base_exp + step / 2)))
        if val > limit:
            break
        if not out or val != out[-1]:
            out.append(val)
        step += 1
    return out


def default_grid(n: int, m: int) -> HyperGrid:
    """The geometric hyperparameter grid used for aggregation.

    Cluster counts are ``K_i = floor(2^(1 + i/2))`` for
    ``0 <= i <= 2*log2(n/10)`` (same for ``L_j`` in ``m``); for each pair
    the minimum sizes range over ``floor(2^(2 + l/2))`` subject to
    ``n0 <= n / K`` and ``m0 <= m / L``.  Duplicate quadruplets produced
    by the floors are removed.
    """
    if n < 10 or m < 10:
        raise ValueError("the default grid needs n, m >= 10")

    def cluster_counts(size: int) -> List[int]:
        i_max = int(np.floor(2 * np.log2(size / 10) + 1e-12))
        vals: List[int] = []
        for i in range(i_max + 1):
            v = int(np.floor(2 ** (1 + i / 2)))
            if v not in vals:
                vals.append(v)
        return vals

    entries = []
    seen = set()
    for K in cluster_counts(n):
        for L in cluster_counts(m):
            for n0 in _geometric_halfsteps(2.0, n / K):
                for m0 in _geometric_halfsteps(2.0, m / L):
                    e = (K, L, n0, m0)
                    if e not in seen:
                        seen.add(e)
                        entries.append(e)
    return HyperGrid(tuple(entries))


def temperature(noise: NoiseModel) -> float:
    """The aggregation temperature with known guarantees per noise family.

    Bernoulli -> 8/3, binomial(N) -> 8/(3N), gaussian(sigma2) -> 4*sigma2.
    No supported temperature exists for the scaled-Poisson model.
    """
    if noise.kind == "bernoulli":
        return 8.0 / 3.0
    if noise.kind == "binomial":
        return 8.0 / (3.0 * noise.N)
    if noise.kind == "gaussian":
        return 4.0 * noise.sigma2
    raise ValueError(
        "no aggregation temperature is available for the scaled-Poisson model"
    )


@dataclass(frozen=True)
class EwaResult:
    """Aggregation outcome: weights, the mixed matrix, and bookkeeping."""

    weights: np.ndarray
    aggregate: np.ndarray
    beta: float
    per_entry_fits: Sequence

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if abs(w.sum() - 1.0) > 1e-9 or w.min() < 0:
            raise ValueError("weights must form a probability vector")


def ewa_weights(sq_residuals: np.ndarray, beta: float) -> np.ndarray:
    """Normalized weights ``exp(-r_l / beta)`` via a log-sum-exp shift."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    r = np.asarray(sq_residuals, dtype=np.float64)
    if r.size == 0:
        raise ValueError("need at least one candidate")
    logw = -r / beta
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def _materialize(fit) -> np.ndarray:
    if isinstance(fit, BlockModel):
        return fit.induced_mean()
    return np.asarray(fit, dtype=np.float64)


def ewa_aggregate(fits: Sequence, H_prime: np.ndarray, beta: float) -> EwaResult:
    """Exponentially weighted aggregate of candidate mean matrices.

    Parameters
    ----------
    fits : sequence
        Candidate estimates; each entry is an ``n x m`` array or a
        :class:`BlockModel` (materialized on the fly).  The candidates
        must have been computed independently of ``H_prime`` - that
        contract is the caller's.
    H_prime : np.ndarray
        The held-out copy of the data used for the weights.
    beta : float
        Positive temperature.

    Returns
    -------
    EwaResult
        Weights, the entrywise convex combination, and the fit references.
    """
    if len(fits) == 0:
        raise ValueError("need at least one fit to aggregate")
    H_prime = np.asarray(H_prime, dtype=np.float64)
    residuals = np.empty(len(fits))
    for i, fit in enumerate(fits):
        diff = H_prime - _materialize(fit)
        residuals[i] = np.einsum("ij,ij->", diff, diff)
    w = ewa_weights(residuals, beta)
    aggregate = np.zeros_like(H_prime)
    for wi, fit in zip(w, fits):
        if wi > 0.0:
            aggregate += wi * _materialize(fit)
    return EwaResult(weights=w, aggregate=aggregate, beta=beta, per_entry_fits=list(fits))
