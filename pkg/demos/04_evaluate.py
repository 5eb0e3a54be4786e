"""Error metrics: matrix error, graphon distance proxy, reference curves.

Estimating the function W is only defined up to rearrangements of the
unit square, so errors on W are measured after aligning by the sorted
latent positions.  Matrix-level errors need no alignment.
"""

import numpy as np

from graphon_lab import (
    AssignmentMatrix,
    FitConfig,
    NoiseModel,
    SynthConfig,
    delta_tilde,
    induced_mean,
    lift_to_graphon,
    lloyd_fit,
    make_standard_graphon,
    mse_theta,
    oracle_fit,
    oracle_risk_bernoulli,
    psi_condition,
    rate_bound,
    synthesize,
    true_assignments,
)

n, m, K, L = 300, 150, 4, 4
rho = 0.6
graphon = make_standard_graphon("rand", K=K, L=L, rho=rho, seed=2)
noise = NoiseModel.bernoulli()
obs = synthesize(SynthConfig(n, m, graphon, noise, seed=31))

report = lloyd_fit(obs.H, FitConfig(K=K, L=L, init="spectral", seed=0))
theta_hat = induced_mean(report.model)

# Matrix-level mean squared error.
print(f"fit MSE: {mse_theta(theta_hat, obs.theta_star):.3e}")

# The oracle knows the true clusters and only averages within blocks; no
# clustering-based method can beat it systematically.
r, c = true_assignments(graphon, *obs.latents)
oracle = oracle_fit(obs.H, AssignmentMatrix(n, K, r), AssignmentMatrix(m, L, c))
print(f"oracle MSE: {mse_theta(induced_mean(oracle), obs.theta_star):.3e}")

# For Bernoulli data the oracle risk has a closed form.
print(f"closed-form oracle risk: {oracle_risk_bernoulli(graphon.values, n, m):.3e}")

# The theoretical remainder, an MSE-scale reference curve.
print(f"rate bound: {rate_bound(noise, rho, n, m, K, L):.3e}")

# The size-floor regime statistic used to check when the guarantees apply.
sigma2, b = noise.bernstein_params(rho)
psi = psi_condition(n, m, 10, 10)
print(f"psi(10, 10) = {psi:.3f} vs (sigma/b)^2 = {(np.sqrt(sigma2)/b)**2:.3f}")

# Function-level error: lift the fitted matrix to a piecewise-constant
# graphon and compare with the truth through the sort-aligned proxy (an
# upper bound on the true rearrangement distance).
lifted = lift_to_graphon(theta_hat)
d = delta_tilde(theta_hat, graphon, *obs.latents, grid_res=1000)
print(f"\nlift is piecewise constant on a {n} x {m} grid "
      f"(first cell value {lifted(0.0, 0.0):.3f})")
print(f"sort-aligned distance proxy: {d:.4f}")
