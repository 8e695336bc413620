"""Optimal-scaling laboratory for Metropolis-Hastings chains on rough
random-environment targets.

Modules:
    fbm_env: fractional Brownian motion environments on a uniform grid.
    gauss_moments: exact Gaussian moments from (proper) pairings.
    targets: one-dimensional marginal targets and their tables.
    mh_core: RWM and MALA product-target kernels and the chain runner.
    diagnostics: run summaries, limiting variances, CLT and decay probes.
    scaling: optimal acceptance rates and ell sweeps.
    config, experiments, cli: experiment specs, orchestration and the CLI.
"""

__version__ = "0.1.0"
