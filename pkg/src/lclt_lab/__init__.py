"""Exact desk-scale verification of local-CLT machinery for lattice spin systems.

Subpackages cover the full constructive chain: finite-box Gibbs models with
boundary fields (`model`), exhaustive-enumeration observables (`exactengine`),
labeled-graph combinatorics (`combinatorics`), the polymer-gas representation
of characteristic functions with cluster and tree-graph bounds (`polymer`),
the inequality verifier with its constants bundle (`verifier`), and a
Metropolis sampler for boxes beyond enumeration reach (`montecarlo`).

Everything here is exact or certified: enumeration sums are compensated,
truncations carry explicit tail bounds, and every analytic inequality is
checked against independently computed quantities.
"""

from . import combinatorics, exactengine, model, montecarlo, polymer, verifier
from .errors import CapacityError, DegenerateDistributionError, DomainError, PreconditionError

__all__ = [
    "model",
    "exactengine",
    "combinatorics",
    "polymer",
    "verifier",
    "montecarlo",
    "CapacityError",
    "DomainError",
    "PreconditionError",
    "DegenerateDistributionError",
]

__version__ = "0.1.0"
