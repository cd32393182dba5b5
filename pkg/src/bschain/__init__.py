"""Numerical laboratory for a harmonic oscillator chain with exchange noise.

The chain carries real values eta(x) on a periodic lattice of N sites and
evolves by two mechanisms: an exactly integrable shear flow
d(eta)/dt = a * (eta(x+1) - eta(x-1)) of strength a = alpha * N^(2-kappa),
and nearest-neighbor swaps driven by Poisson clocks of rate N^2 per bond.
Both mechanisms conserve the total volume sum(eta) and energy sum(eta^2).

Subpackages and modules:

- ``lattice``: torus index arithmetic, discrete difference operators, DFT.
- ``chain``: exact event-driven simulation and initial-measure samplers.
- ``moments``: closed linear evolution of first and second moments.
- ``continuum``: spectral solvers for the limiting parabolic systems.
- ``walks``: the reflected two-dimensional walk, its one-dimensional
  projection, local times, and closed-form transition probabilities.
- ``sobolev``: discrete negative Sobolev norms, fluctuation fields and
  quadratic-variation estimators.
- ``harness``: config-driven experiments E1-E9 with reproducible reports.
"""

__version__ = "0.1.0"
