"""Simulating block-structured interaction matrices.

Every data set starts from a graphon W on the unit square: rows and
columns get latent uniform positions, the conditional mean of entry
(i, j) is W(U_i, V_j), and a noise model turns means into observations.
"""

import numpy as np

from graphon_lab import (
    NoiseModel,
    SynthConfig,
    apply_missingness,
    make_standard_graphon,
    synthesize,
)

# Three built-in graphon families.  "rand" draws block values at random,
# "cos" uses a deterministic oscillating pattern, "hoelder" is a smooth bump.
rand_g = make_standard_graphon("rand", K=4, L=4, rho=0.6, seed=1)
cos_g = make_standard_graphon("cos", K=4, L=4, rho=0.6)
bump = make_standard_graphon("hoelder", rho=0.6)

print("rand-graphon block values:\n", np.round(rand_g.values, 3))
print("cos-graphon block values:\n", np.round(cos_g.values, 3))
print("smooth bump at the center:", bump(0.5, 0.5))

# A full observation set: latents, the mean matrix Theta*, and noisy H.
config = SynthConfig(
    n=12, m=8, graphon=cos_g, noise=NoiseModel.bernoulli(), seed=42,
    with_second_copy=True,
)
obs = synthesize(config)
print("\nlatent row positions:", np.round(obs.latents[0], 2))
print("one Bernoulli draw:\n", obs.H.astype(int))
print("independent second copy differs:", not np.array_equal(obs.H, obs.H_prime))

# The same seed always gives the same data, entry for entry.
again = synthesize(config)
print("bit-identical rerun:", np.array_equal(obs.H, again.H))

# Other noise families: scaled counts keep the same mean but shrink the
# variance by N (binomial) or T (scaled Poisson).
for noise in (NoiseModel.binomial(10), NoiseModel.scaled_poisson(5.0),
              NoiseModel.gaussian(0.01)):
    o = synthesize(SynthConfig(200, 100, cos_g, noise, seed=7))
    print(f"{noise.kind:>15}: mean {o.H.mean():.3f} vs truth {o.theta_star.mean():.3f}")

# Missing completely at random: each entry is revealed with probability p
# and the revealed values are scaled by 1/p, which preserves the mean.
H_adj, mask = apply_missingness(obs.H, p=0.5, seed=3)
print("\nobserved fraction:", mask.mean())
print("adjusted values take 1/p-scaled values:",
      [float(v) for v in np.unique(H_adj)])
