"""Metropolis sampling of the spin models, as a cross-check on enumeration.

Single-site Metropolis updates run in a deterministic color order: sites
are greedy-colored so no two coupled sites share a color, and each sweep
updates one color class at a time, vectorized across sites and chains.
Within a class the neighbor sums are constant, so the block update is
exactly a sequence of single-site updates and the chain keeps the Gibbs
measure invariant.

Randomness is counter-based: every (sweep, color block) pair gets its own
Philox stream derived from the seed, so results depend only on the spec,
never on execution order. Errors are estimated by batch means across
chains, which also yields the effective sample size reported alongside
every estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model as m
from ._system import build_system
from .errors import DegenerateDistributionError, DomainError

BATCH_TARGET = 30


@dataclass(frozen=True)
class ChainSpec:
    seed: int
    burn_in: int
    samples: int
    thinning: int = 1
    chains: int = 2

    def __post_init__(self):
        if self.samples < 100:
            raise DomainError(f"need at least 100 retained samples per chain, got {self.samples}")
        if self.chains < 2:
            raise DomainError(f"need at least 2 chains, got {self.chains}")
        if self.burn_in < 0:
            raise DomainError(f"burn-in must be nonnegative, got {self.burn_in}")
        if self.thinning < 1:
            raise DomainError(f"thinning must be at least 1, got {self.thinning}")


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_effective: float


def _greedy_coloring(n: int, coupling: np.ndarray) -> list[np.ndarray]:
    degree = (coupling != 0.0).sum(axis=1)
    order = sorted(range(n), key=lambda i: (-degree[i], i))
    color = [-1] * n
    for i in order:
        taken = {color[j] for j in range(n) if color[j] >= 0 and coupling[i, j] != 0.0}
        c = 0
        while c in taken:
            c += 1
        color[i] = c
    classes = []
    for c in range(max(color) + 1):
        classes.append(np.array([i for i in range(n) if color[i] == c], dtype=np.intp))
    return classes


def _block_rng(seed: int, sweep: int, block: int) -> np.random.Generator:
    # (sweep, block) goes into the Philox key, not the counter: a stream's
    # counter advances as values are drawn, so counter-indexed streams for
    # consecutive sweeps would overlap. Distinct keys never share output.
    mixed = (seed & 0xFFFFFFFFFFFFFFFF) ^ 0x9E3779B97F4A7C15
    key = np.array([mixed, (sweep << 32) | block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def total_spin_samples(model: m.GibbsModel, spec: ChainSpec, region="box", omega=None) -> np.ndarray:
    """Retained total-spin samples, shape (chains, samples)."""
    system = build_system(model, region, omega)
    n = system.site_count
    values = system.value_array
    q = len(values)
    fields = system.field_array
    coupling = system.pair_matrix()
    blocks = _greedy_coloring(n, coupling)

    init = _block_rng(spec.seed, 0, len(blocks))
    state = init.integers(0, q, size=(spec.chains, n))
    out = np.empty((spec.chains, spec.samples))
    total_sweeps = spec.burn_in + spec.samples * spec.thinning
    kept = 0
    for sweep in range(total_sweeps):
        for b, block in enumerate(blocks):
            rng = _block_rng(spec.seed, sweep + 1, b)
            cur = state[:, block]
            # Uniform over all q states, current included: the 1/q self-loop
            # keeps the chain aperiodic even when every move is accepted
            # (a field-free two-state site would otherwise alternate forever).
            prop = rng.integers(0, q, size=cur.shape)
            spins = values[state]
            neigh = spins @ coupling[:, block]
            delta = (values[prop] - values[cur]) * (fields[block] + neigh)
            accept = rng.random(size=cur.shape) < np.exp(np.minimum(delta, 0.0))
            state[:, block] = np.where(accept, prop, cur)
        if sweep >= spec.burn_in and (sweep - spec.burn_in) % spec.thinning == 0:
            out[:, kept] = values[state].sum(axis=1)
            kept += 1
    assert kept == spec.samples
    return out


def _batch_means(series_by_chain: np.ndarray, per_chain_batches: int) -> np.ndarray:
    chains, samples = series_by_chain.shape
    usable = samples - samples % per_chain_batches
    trimmed = series_by_chain[:, :usable]
    return trimmed.reshape(chains, per_chain_batches, -1).mean(axis=2).reshape(-1)


def _estimate_from_series(series: np.ndarray, chains: int, samples: int) -> Estimate:
    per_chain = max(2, BATCH_TARGET // chains)
    means = _batch_means(series, per_chain)
    value = float(series.mean())
    se = float(means.std(ddof=1) / math.sqrt(len(means)))
    if se == 0.0:
        return Estimate(value=value, std_error=0.0, n_effective=float(chains * samples))
    n_eff = float(series.var(ddof=1) / se**2)
    n_eff = min(n_eff, float(chains * samples))
    return Estimate(value=value, std_error=se, n_effective=max(n_eff, 1.0))


def sample_statistics(model: m.GibbsModel, spec: ChainSpec, region="box", omega=None) -> dict:
    """Batch-means estimates of the total-spin mean and variance."""
    s = total_spin_samples(model, spec, region, omega)
    mean_est = _estimate_from_series(s, spec.chains, spec.samples)
    centered = (s - s.mean()) ** 2
    var_est = _estimate_from_series(centered, spec.chains, spec.samples)
    return {"mean": mean_est, "variance": var_est}


def sample_pmf_gap(model: m.GibbsModel, spec: ChainSpec, region="box", omega=None) -> dict:
    """Sampled worst deviation sup_p |sqrt(D) pi(p) - gaussian(z_p)|.

    The pmf, mean, and variance all come from the same samples. The error
    bar is the multinomial error of the worst cell at the batch-means
    effective sample size, scaled by sqrt(D).
    """
    s = total_spin_samples(model, spec, region, omega)
    flat = s.reshape(-1)
    var = float(flat.var(ddof=1))
    if var <= 1e-12:
        raise DegenerateDistributionError(
            f"sampled total-spin variance {var!r} is too small for a local-CLT gap"
        )
    mu = float(flat.mean())
    root_d = math.sqrt(var)

    ps = np.rint(flat).astype(np.int64)
    p_min, p_max = int(ps.min()), int(ps.max())
    counts = np.bincount(ps - p_min, minlength=p_max - p_min + 1)
    freq = counts / len(flat)
    support = np.arange(p_min, p_max + 1)
    z = (support - mu) / root_d
    gauss = np.exp(-z * z / 2.0) / math.sqrt(2.0 * math.pi)
    dev = np.abs(root_d * freq - gauss)
    worst = int(np.argmax(dev))

    n_eff = _estimate_from_series(s, spec.chains, spec.samples).n_effective
    pi_hat = float(freq[worst])
    se = root_d * math.sqrt(max(pi_hat * (1.0 - pi_hat), 1.0 / len(flat)) / n_eff)
    return {"gap": Estimate(value=float(dev[worst]), std_error=se, n_effective=n_eff)}


def state_occupancy(model: m.GibbsModel, spec: ChainSpec, region="box", omega=None) -> dict:
    """Sampled distribution of the total spin, for stationarity diagnostics."""
    s = total_spin_samples(model, spec, region, omega).reshape(-1)
    ps = np.rint(s).astype(np.int64)
    p_min = int(ps.min())
    counts = np.bincount(ps - p_min)
    return {int(p_min + i): float(c / len(ps)) for i, c in enumerate(counts) if c}
