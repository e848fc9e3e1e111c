"""Random walk loop soup sampling and occupation fields.

The sampler uses the minimal-vertex decomposition: sweeping vertices in
lexicographic order, the loops rooted at x_i with exactly k first
returns form a Poisson(theta r_i^k / k) family, where r_i is the first
return probability in the domain punctured at all earlier vertices;
each loop concatenates k rejection-sampled first-return excursions.
The continuous-time field adds an Exp(mean 1/4) holding time per visit
plus an independent Gamma(theta, 1/4) trivial-loop field per vertex.
End to end this is pinned by the master oracle: occupation(x) / G(x,x)
is Gamma(theta, 1) at every vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend as default_backend
from .graph import LatticeDomain, green_function, return_probabilities


@dataclass
class DiscreteLoop:
    """Closed lattice walk; ``visits`` starts and ends at ``root``."""

    visits: np.ndarray
    root: int
    returns: int


@dataclass
class LoopSoupSample:
    theta: float
    domain: LatticeDomain
    offsets: np.ndarray        # (n_loops + 1,) into visits/holdings
    visits: np.ndarray         # concatenated closed walks
    returns: np.ndarray        # per-loop first-return count k
    holdings: np.ndarray       # per-visit Exp(1/4) durations (loop walks only)
    trivial_field: np.ndarray  # per-vertex Gamma(theta, 1/4)
    occupation: np.ndarray     # per-vertex total occupation

    @property
    def n_loops(self) -> int:
        return self.offsets.shape[0] - 1

    def loop(self, j: int) -> DiscreteLoop:
        lo, hi = self.offsets[j], self.offsets[j + 1]
        return DiscreteLoop(visits=self.visits[lo:hi],
                            root=int(self.visits[lo]),
                            returns=int(self.returns[j]))

    def loop_holdings(self, j: int) -> np.ndarray:
        lo, hi = self.offsets[j], self.offsets[j + 1]
        return self.holdings[lo - j:hi - (j + 1)]

    def loop_vertex_sets(self) -> list[np.ndarray]:
        return [np.unique(self.visits[self.offsets[j]:self.offsets[j + 1]])
                for j in range(self.n_loops)]


@dataclass
class ThickLoop:
    base: int
    a: float
    offsets: np.ndarray
    visits: np.ndarray

    @property
    def n_bridges(self) -> int:
        return self.offsets.shape[0] - 1

    def bridge(self, b: int) -> np.ndarray:
        return self.visits[self.offsets[b]:self.offsets[b + 1]]

    def vertex_set(self) -> np.ndarray:
        return np.unique(self.visits)


def sample_loop_soup(domain: LatticeDomain, theta: float, state,
                     kernels=None) -> LoopSoupSample:
    """One soup realization at intensity theta, advancing ``state``."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    kern = kernels if kernels is not None else default_backend
    rets = return_probabilities(domain)
    offsets, visits, returns, holdings, trivial, occupation = \
        kern.sample_soup(state, domain.nbr, rets, theta)
    return LoopSoupSample(theta=theta, domain=domain, offsets=offsets,
                          visits=visits, returns=returns, holdings=holdings,
                          trivial_field=trivial, occupation=occupation)


def full_domain_return_probability(domain: LatticeDomain, x: int,
                                   green=None) -> float:
    """First-return probability at x in the unpunctured domain.

    r_x = 1 - 1/(4 G(x,x)); the Green diagonal comes from the supplied
    table or a single on-demand solve.
    """
    key = ("rfull", x)
    if key not in domain._cache:
        if green is None:
            green = green_function(domain, mode="iterative")
        gxx = green.diag(x)
        domain._cache[key] = max(0.0, 1.0 - 1.0 / (4.0 * gxx))
    return domain._cache[key]


def sample_thick_loop(domain: LatticeDomain, x: int, a: float, state,
                      kernels=None, green=None, n_bridges: int = -1) -> ThickLoop:
    """a-thick loop at vertex x: Poisson(a r/(1-r)) bridges, each a
    Geometric(1-r) concatenation of first-return excursions.

    ``n_bridges >= 0`` forces the bridge count (conditioned estimators).
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if domain.exit_degree[x] == 4:
        raise ValueError("x has no interior neighbors")
    kern = kernels if kernels is not None else default_backend
    r = full_domain_return_probability(domain, x, green)
    offsets, visits = kern.sample_thick_loop(state, domain.nbr, x, r, a,
                                             n_bridges=n_bridges)
    return ThickLoop(base=x, a=a, offsets=offsets, visits=visits)


def occupation_field(sample: LoopSoupSample, verify: bool = False) -> np.ndarray:
    """The per-vertex occupation; with ``verify`` recompute from parts."""
    if verify:
        # mirror the sampler's accumulation order exactly: loop holdings
        # chronologically, trivial field last
        recomputed = np.zeros_like(sample.occupation)
        for j in range(sample.n_loops):
            lo, hi = sample.offsets[j], sample.offsets[j + 1]
            vis = sample.visits[lo:hi - 1]
            hold = sample.holdings[lo - j:hi - (j + 1)]
            np.add.at(recomputed, vis, hold)
        recomputed += sample.trivial_field
        if not np.array_equal(recomputed, sample.occupation):
            raise AssertionError("stored occupation does not match loops")
    return sample.occupation
