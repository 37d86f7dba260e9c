"""Polymer-gas representation of decimated characteristic functions.

The decimated Gibbs expectation of e^{itS} factors through a gas of
nonempty site subsets ("polymers") with complex activities. Writing
p_x for the single-site measure tied to the conditioning spins, the gas
partition function

    Xi(t) = sum over configs of prod_x p_x(s_x) e^{i t s_x}
            prod over pairs of e^{J_xy s_x s_y}

equals 1 + sum over families of pairwise disjoint polymers of the product
of their activities, where a polymer of one site carries E_x(e^{its}) - 1
and a larger polymer carries the spin average of its phase factors times
the connected-graph Mayer sum of its internal couplings. A dressing
exponent c > 0 multiplies each activity by e^{c|R|} and removes the
single-site polymers; that variant is exactly the factor left over after
pulling e^{-c} out of every free site's characteristic function.

Everything here is evaluated two independent ways wherever the structure
allows it: partition functions by direct spin enumeration and by the
polymer recursion, connected sums by subset convolution and by graph
enumeration. Weights w0 (and its e^{ck}-dressed variants) majorize the
activities and their first two t-derivatives and feed the convergence
conditions and tail certificates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, combinations_with_replacement

import numpy as np

from . import model as m
from ._system import System, build_system
from .combinatorics import (
    connected_sum,
    connected_sum_by_enumeration,
    ursell_hardcore,
)
from .errors import CapacityError, DomainError, PreconditionError

SPIN_GRID_BUDGET = 1 << 20
GRAPH_SUM_BUDGET = 1 << 25
POLYMER_REGION_CAP = 14
CLUSTER_TERM_BUDGET = 1 << 22

MAX_POLYMER_SIZE = 8
# The gas recursion must carry every connected subset of a coupling
# component or the identity it certifies silently breaks; its private cap
# is therefore a little above the public per-polymer one.
RECURSION_POLYMER_CAP = 10


@dataclass(frozen=True)
class Polymer:
    """Nonempty set of sites, the unit of the gas."""

    sites: tuple[m.Site, ...]

    def __post_init__(self):
        if not self.sites:
            raise DomainError("a polymer needs at least one site")
        ordered = tuple(sorted(set(self.sites)))
        if ordered != self.sites:
            object.__setattr__(self, "sites", ordered)

    def __len__(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class ActivityParams:
    """Fourier variable t, dressing exponent c, and the delta cap used by weights."""

    t: float
    c: float = 0.0
    delta_cap: float | None = None

    def __post_init__(self):
        if self.c < 0:
            raise DomainError(f"dressing exponent must be nonnegative, got {self.c}")
        if self.delta_cap is not None and self.delta_cap <= 0:
            raise DomainError(f"delta cap must be positive, got {self.delta_cap}")


@dataclass(frozen=True)
class ClusterSeriesResult:
    """Order-truncated cluster series for log Xi.

    partial_sums[j] is the series through clusters of j+1 polymers;
    dominating_tail, when certifiable, bounds everything beyond the
    truncation order for the absolute series.
    """

    truncation_order: int
    partial_sums: tuple[complex, ...]
    by_order: tuple[complex, ...]
    dominating_tail: float | None
    damping: float | None


@dataclass(frozen=True)
class ConvergenceCheck:
    satisfied: bool
    lhs: float
    rhs: float


@dataclass(frozen=True)
class TreeGraphBounds:
    """Mayer sum against its tree and coupling-norm majorants.

    lhs, rhs_trees, rhs_j are evaluated at the spin configuration
    maximizing lhs; the margins are minima of rhs - lhs over every
    configuration; stability_lhs is the least pair energy against its
    stability floor.
    """

    lhs: float
    rhs_trees: float
    rhs_j: float
    margin_trees: float
    margin_chain: float
    margin_j: float
    stability_lhs: float
    stability_floor: float

    @property
    def holds(self) -> bool:
        return (
            self.margin_trees >= -1e-12
            and self.margin_chain >= -1e-12
            and self.margin_j >= -1e-12
            and self.stability_lhs >= self.stability_floor - 1e-12
        )


class _Gas:
    """Per-region tables: single-site measures, couplings, spin grids."""

    def __init__(self, system: System):
        self.system = system
        self.sites = system.sites
        self.values = np.array(system.values, dtype=float)
        self.q = len(system.values)
        self.index = {x: i for i, x in enumerate(system.sites)}
        fields = system.field_array
        logits = np.outer(fields, self.values)
        logits -= logits.max(axis=1, keepdims=True)
        weights = np.exp(logits)
        self.probs = weights / weights.sum(axis=1, keepdims=True)
        self.coupling = system.pair_matrix()
        self.sigma = int(max(abs(v) for v in system.values))
        n = len(self.sites)
        self.adjacency = [0] * n
        for i, j, v in system.pairs:
            if v != 0.0:
                self.adjacency[i] |= 1 << j
                self.adjacency[j] |= 1 << i


@lru_cache(maxsize=256)
def _gas_for_system(system: System) -> _Gas:
    return _Gas(system)


def _gas(model: m.GibbsModel, region, omega) -> _Gas:
    return _gas_for_system(build_system(model, region, omega))


def _polymer_sites(polymer) -> tuple[m.Site, ...]:
    if isinstance(polymer, Polymer):
        return polymer.sites
    return Polymer(tuple(polymer)).sites


def _indices(gas: _Gas, polymer) -> tuple[int, ...]:
    sites = _polymer_sites(polymer)
    try:
        return tuple(sorted(gas.index[x] for x in sites))
    except KeyError as err:
        raise DomainError(f"site {err.args[0]} is not in the region") from None


@lru_cache(maxsize=64)
def _digit_grid(q: int, k: int) -> np.ndarray:
    """(k, q^k) matrix whose column c holds the base-q digits of c."""
    cols = q**k
    if cols > SPIN_GRID_BUDGET:
        raise CapacityError(f"spin grid needs {q}^{k} = {cols} columns, budget is {SPIN_GRID_BUDGET}")
    d = np.empty((k, cols), dtype=np.intp)
    for i in range(k):
        d[i] = np.tile(np.repeat(np.arange(q), q**i), q ** (k - 1 - i))
    d.setflags(write=False)
    return d


def _config_tables(gas: _Gas, idx: tuple[int, ...]):
    """Spin values (k, M), joint product measure (M,), per-pair couplings."""
    k = len(idx)
    digits = _digit_grid(gas.q, k)
    values = gas.values[digits]
    probs = np.ones(digits.shape[1])
    for row, i in enumerate(idx):
        probs *= gas.probs[i][digits[row]]
    return values, probs


def _edge_factors(gas: _Gas, idx: tuple[int, ...], values: np.ndarray) -> np.ndarray:
    k = len(idx)
    ef = np.zeros((k, k, values.shape[1]))
    for a in range(k):
        for b in range(a + 1, k):
            j = gas.coupling[idx[a], idx[b]]
            if j != 0.0:
                ef[a, b] = ef[b, a] = np.expm1(j * values[a] * values[b])
    return ef


def _mask_connected(mask: int, adjacency) -> bool:
    reach = mask & -mask
    while True:
        grown = reach
        probe = reach
        while probe:
            v = (probe & -probe).bit_length() - 1
            grown |= adjacency[v] & mask
            probe &= probe - 1
        if grown == reach:
            return reach == mask
        reach = grown


def _activity_from_indices(
    gas: _Gas, idx: tuple[int, ...], t: float, c: float, cap: int = MAX_POLYMER_SIZE
) -> complex:
    k = len(idx)
    if k == 1:
        if c != 0.0:
            raise DomainError("the dressed representation has no single-site polymers")
        i = idx[0]
        return complex(np.dot(gas.probs[i], np.exp(1j * t * gas.values) - 1.0))
    if k > cap:
        raise CapacityError(f"polymer of {k} sites exceeds the cap of {cap}")
    values, probs = _config_tables(gas, idx)
    csum = connected_sum(_edge_factors(gas, idx, values))
    phases = np.exp(1j * t * values.sum(axis=0))
    return math.exp(c * k) * complex(np.dot(probs * csum, phases))


def activity(model: m.GibbsModel, params: ActivityParams, polymer, region="decimated", omega=None) -> complex:
    """Gas activity of one polymer at the given t and dressing.

    One site: E_x(e^{its}) - 1 (undressed only). Two or more sites:
    e^{c|R|} times the spin average of the phase product against the
    connected Mayer sum of the internal couplings.
    """
    gas = _gas(model, region, omega)
    return _activity_from_indices(gas, _indices(gas, polymer), params.t, params.c)


def activity_by_graph_enumeration(
    model: m.GibbsModel, params: ActivityParams, polymer, region="decimated", omega=None
) -> complex:
    """Activity with the Mayer sum expanded over explicit connected graphs.

    Independent oracle for activity(); cost grows with the connected-graph
    count of |R|, so keep polymers small.
    """
    gas = _gas(model, region, omega)
    idx = _indices(gas, polymer)
    if len(idx) == 1:
        return _activity_from_indices(gas, idx, params.t, params.c)
    values, probs = _config_tables(gas, idx)
    csum = connected_sum_by_enumeration(_edge_factors(gas, idx, values))
    phases = np.exp(1j * params.t * values.sum(axis=0))
    return math.exp(params.c * len(idx)) * complex(np.dot(probs * csum, phases))


def activity_derivative(
    model: m.GibbsModel, params: ActivityParams, polymer, order: int = 1, region="decimated", omega=None
) -> complex:
    """Analytic d/dt or d2/dt2 of the activity at params.t.

    Differentiating the phase product inserts (i S_R) per order, with
    S_R the total spin of the polymer.
    """
    if order not in (1, 2):
        raise DomainError(f"derivative order must be 1 or 2, got {order}")
    gas = _gas(model, region, omega)
    idx = _indices(gas, polymer)
    t, c = params.t, params.c
    if len(idx) == 1:
        if c != 0.0:
            raise DomainError("the dressed representation has no single-site polymers")
        i = idx[0]
        vals = gas.values
        phases = np.exp(1j * t * vals)
        if order == 1:
            return complex(1j * np.dot(gas.probs[i], vals * phases))
        return complex(-np.dot(gas.probs[i], vals * vals * phases))
    values, probs = _config_tables(gas, idx)
    csum = connected_sum(_edge_factors(gas, idx, values))
    total = values.sum(axis=0)
    base = probs * csum * np.exp(1j * t * total)
    factor = (1j * total) if order == 1 else -(total * total)
    return math.exp(c * len(idx)) * complex(np.dot(base, factor))


def site_char_fn(model: m.GibbsModel, x: m.Site, t: float, region="decimated", omega=None) -> complex:
    """E_x(e^{its}) under the single-site measure of the region's conditioning."""
    gas = _gas(model, region, omega)
    if x not in gas.index:
        raise DomainError(f"site {x} is not in the region")
    return complex(np.dot(gas.probs[gas.index[x]], np.exp(1j * t * gas.values)))


def _partition_direct(gas: _Gas, t: float, c: float) -> complex:
    n = len(gas.sites)
    if c == 0.0:
        # Every site carries its phase factor; this is plain enumeration.
        values, probs = _config_tables(gas, tuple(range(n)))
        energy = np.zeros(values.shape[1])
        for i in range(n):
            for j in range(i + 1, n):
                jij = gas.coupling[i, j]
                if jij != 0.0:
                    energy += jij * values[i] * values[j]
        phases = np.exp(1j * t * values.sum(axis=0))
        return complex(np.dot(probs * np.exp(energy), phases))

    # Dressed variant: sum over all graphs, each weighted by e^{c|support|}
    # and phase factors on the support only.
    values, probs = _config_tables(gas, tuple(range(n)))
    edges = [
        (i, j, gas.coupling[i, j])
        for i in range(n)
        for j in range(i + 1, n)
        if gas.coupling[i, j] != 0.0
    ]
    cols = values.shape[1]
    if (1 << len(edges)) * cols > GRAPH_SUM_BUDGET:
        raise CapacityError(
            f"graph sum needs 2^{len(edges)} masks over {cols} configs, "
            f"budget is {GRAPH_SUM_BUDGET}"
        )
    u = [np.expm1(j * values[a] * values[b]) for a, b, j in edges]
    site_phase = [np.exp(1j * t * values[i]) for i in range(n)]
    phase_cache: dict[int, np.ndarray] = {0: np.ones(cols, dtype=complex)}

    def support_phase(mask: int) -> np.ndarray:
        got = phase_cache.get(mask)
        if got is None:
            low = mask & -mask
            got = support_phase(mask ^ low) * site_phase[low.bit_length() - 1]
            phase_cache[mask] = got
        return got

    total = np.zeros(cols, dtype=complex)

    def walk(e: int, prod: np.ndarray, support: int):
        if e == len(edges):
            total.__iadd__(prod * (math.exp(c * support.bit_count()) * support_phase(support)))
            return
        walk(e + 1, prod, support)
        a, b, _ = edges[e]
        walk(e + 1, prod * u[e], support | (1 << a) | (1 << b))

    walk(0, np.ones(cols), 0)
    return complex(np.dot(probs, total))


def _component_sizes(adjacency) -> list[int]:
    n = len(adjacency)
    seen = 0
    sizes = []
    for i in range(n):
        if seen >> i & 1:
            continue
        frontier = 1 << i
        comp = 0
        while frontier:
            comp |= frontier
            grown = 0
            probe = frontier
            while probe:
                v = (probe & -probe).bit_length() - 1
                grown |= adjacency[v]
                probe &= probe - 1
            frontier = grown & ~comp
        seen |= comp
        sizes.append(comp.bit_count())
    return sizes


def _partition_polymer_sum(gas: _Gas, t: float, c: float) -> complex:
    n = len(gas.sites)
    if n > POLYMER_REGION_CAP:
        raise CapacityError(
            f"polymer recursion over {n} sites walks 3^{n} subset pairs, cap is {POLYMER_REGION_CAP} sites"
        )
    # Every connected subset of a coupling component contributes; dropping
    # the large ones would silently break the identity this mode certifies.
    largest = max(_component_sizes(gas.adjacency))
    if largest > RECURSION_POLYMER_CAP:
        raise CapacityError(
            f"the region has a coupling component of {largest} sites, so the gas sum"
            f" needs polymers up to that size; cap is {RECURSION_POLYMER_CAP}"
        )
    min_size = 1 if c == 0.0 else 2
    xi: dict[int, complex] = {}
    for mask in range(1, 1 << n):
        size = mask.bit_count()
        if size < min_size:
            continue
        if size >= 2 and not _mask_connected(mask, gas.adjacency):
            continue
        idx = tuple(i for i in range(n) if mask >> i & 1)
        xi[mask] = _activity_from_indices(gas, idx, t, c, cap=RECURSION_POLYMER_CAP)
    dp = np.zeros(1 << n, dtype=complex)
    dp[0] = 1.0
    for mask in range(1, 1 << n):
        low = mask & -mask
        acc = dp[mask ^ low]
        sub = mask
        while sub:
            if sub & low:
                val = xi.get(sub)
                if val is not None:
                    acc += val * dp[mask ^ sub]
            sub = (sub - 1) & mask
        dp[mask] = acc
    return complex(dp[-1])


def polymer_partition(
    model: m.GibbsModel, params: ActivityParams, region="decimated", omega=None, mode="direct"
) -> complex:
    """Gas partition function Xi(t), by direct enumeration or by the gas sum.

    The two modes must agree to enumeration precision; that identity is the
    master check of this module.
    """
    gas = _gas(model, region, omega)
    if mode == "direct":
        return _partition_direct(gas, params.t, params.c)
    if mode == "polymer_sum":
        return _partition_polymer_sum(gas, params.t, params.c)
    raise DomainError(f"unknown mode {mode!r}; use 'direct' or 'polymer_sum'")


def char_fn_ratio(
    model: m.GibbsModel, region="decimated", t: float = 0.0, omega=None, mode="polymer_sum"
) -> complex:
    """Xi(t)/Xi(0): the characteristic function of the region's total spin."""
    params_t = ActivityParams(t=float(t))
    params_0 = ActivityParams(t=0.0)
    num = polymer_partition(model, params_t, region, omega, mode)
    den = polymer_partition(model, params_0, region, omega, mode)
    return num / den


def continuous_log_partition(
    model: m.GibbsModel, params: ActivityParams, region="decimated", omega=None, mode="direct", steps: int = 64
) -> complex:
    """log Xi(t) on the branch continuous in t from t=0.

    Xi(0) is real and positive; the log is accumulated over small t steps so
    each increment stays within the principal strip. Principal-branch
    evaluation at the endpoint would be wrong once the phase winds.
    """
    if steps < 1:
        raise DomainError(f"need at least one step, got {steps}")
    start = polymer_partition(model, ActivityParams(t=0.0, c=params.c), region, omega, mode)
    if abs(start.imag) > 1e-9 * abs(start) or start.real <= 0:
        raise PreconditionError(f"partition function at t=0 is {start!r}, not positive")
    log_val = complex(math.log(start.real))
    prev = start
    for step in range(1, steps + 1):
        tau = params.t * step / steps
        cur = polymer_partition(model, ActivityParams(t=tau, c=params.c), region, omega, mode)
        log_val += cmath.log(cur / prev)
        prev = cur
    return log_val


def weight_w0(model: m.GibbsModel, polymer, delta: float, region="decimated", omega=None) -> float:
    """t-uniform majorant of the activity: delta*sigma for one site, else
    (1 + delta*sigma)^|R| times the spin average of |connected Mayer sum|.

    The absolute value sits inside the spin sum and outside the graph sum.
    """
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    gas = _gas(model, region, omega)
    idx = _indices(gas, polymer)
    k = len(idx)
    if k == 1:
        return delta * gas.sigma
    if k > MAX_POLYMER_SIZE:
        raise CapacityError(f"polymer of {k} sites exceeds the cap of {MAX_POLYMER_SIZE}")
    values, probs = _config_tables(gas, idx)
    csum = connected_sum(_edge_factors(gas, idx, values))
    return (1.0 + delta * gas.sigma) ** k * float(np.dot(probs, np.abs(csum)))


def weight_w1(model: m.GibbsModel, polymer, delta: float, region="decimated", omega=None) -> float:
    """w0 dressed by e^{|R|}."""
    k = len(_polymer_sites(polymer))
    return weight_w0(model, polymer, delta, region, omega) * math.exp(k)


def weight_wc(model: m.GibbsModel, polymer, delta: float, c: float, region="decimated", omega=None) -> float:
    """w0 dressed by e^{c|R|}."""
    if c < 0:
        raise DomainError(f"dressing exponent must be nonnegative, got {c}")
    k = len(_polymer_sites(polymer))
    return weight_w0(model, polymer, delta, region, omega) * math.exp(c * k)


_WEIGHT_DRESSING = {"w0": 0.0, "w1": 1.0}


def weight_norm(
    model: m.GibbsModel,
    k: int,
    weight_kind: str = "w1",
    delta: float = 0.0,
    c: float | None = None,
    region="decimated",
    omega=None,
) -> float:
    """Largest, over anchor sites, sum of size-k polymer weights through the anchor."""
    if k < 1:
        raise DomainError(f"polymer size must be positive, got {k}")
    if weight_kind in _WEIGHT_DRESSING:
        dress = _WEIGHT_DRESSING[weight_kind]
    elif weight_kind == "wc":
        if c is None:
            raise DomainError("weight_kind 'wc' needs the dressing exponent c")
        dress = float(c)
    else:
        raise DomainError(f"unknown weight kind {weight_kind!r}")
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    gas = _gas(model, region, omega)
    n = len(gas.sites)
    if k > n:
        return 0.0
    if k == 1:
        return delta * gas.sigma * math.exp(dress)
    per_anchor = math.comb(n - 1, k - 1)
    if per_anchor * n > 1 << 18:
        raise CapacityError(
            f"weight norm at size {k} over {n} sites scans {per_anchor * n} subsets, cap is {1 << 18}"
        )
    factor = math.exp(dress * k)
    best = 0.0
    for anchor in range(n):
        total = 0.0
        others = [i for i in range(n) if i != anchor]
        for rest in combinations(others, k - 1):
            mask = (1 << anchor) | sum(1 << i for i in rest)
            if not _mask_connected(mask, gas.adjacency):
                continue
            idx = tuple(sorted((anchor, *rest)))
            values, probs = _config_tables(gas, idx)
            csum = connected_sum(_edge_factors(gas, idx, values))
            total += (1.0 + delta * gas.sigma) ** k * float(np.dot(probs, np.abs(csum)))
        best = max(best, total * factor)
    return best


def weight_norm_bound(
    k: int, delta: float, sigma: int, step_norm: float, c: float = 1.0, majorized: bool = False
) -> float:
    """Closed-form majorant of the size-k weight norm for e^{ck}-dressed weights.

    [(1+delta*sigma) e^{1+c} e^{step_norm*sigma^2/2} sigma^2 sqrt(step_norm)]^k,
    with 1+delta*sigma coarsened to 2 when majorized. Needs step_norm <= 1:
    the tree-edge bound spends sqrt(step_norm) per polymer site against
    step_norm per tree edge, which only closes for a subunit norm.
    """
    if k < 2:
        raise DomainError(f"the closed-form norm bound needs k >= 2, got {k}")
    if step_norm < 0:
        raise DomainError(f"step norm must be nonnegative, got {step_norm}")
    if step_norm > 1:
        raise PreconditionError(f"step norm {step_norm} exceeds 1; the per-edge split fails")
    if c < 0:
        raise DomainError(f"dressing exponent must be nonnegative, got {c}")
    lead = 2.0 if majorized else 1.0 + delta * sigma
    base = lead * math.exp(1.0 + c) * math.exp(step_norm * sigma**2 / 2.0) * sigma**2 * math.sqrt(step_norm)
    return base**k


def geometric_norm_tail(base: float, a: float, k_start: int) -> float:
    """Sum of (base*e^a)^k for k >= k_start; inf when the ratio reaches 1."""
    if base < 0:
        raise DomainError(f"geometric base must be nonnegative, got {base}")
    ratio = base * math.exp(a)
    if ratio >= 1.0:
        return math.inf
    return ratio**k_start / (1.0 - ratio)


def convergence_check(weight_norms, a: float, dominating_tail: float = 0.0) -> ConvergenceCheck:
    """Sum of w^(k) e^{ak} (plus certified tail) against e^a - 1."""
    if a <= 0:
        raise DomainError(f"the series exponent must be positive, got {a}")
    if dominating_tail < 0:
        raise DomainError(f"tail bound must be nonnegative, got {dominating_tail}")
    lhs = sum(w * math.exp(a * k) for k, w in weight_norms.items()) + dominating_tail
    rhs = math.exp(a) - 1.0
    return ConvergenceCheck(satisfied=lhs <= rhs, lhs=lhs, rhs=rhs)


def _connected_polymers(gas: _Gas, min_size: int, max_size: int) -> list[tuple[int, tuple[int, ...]]]:
    n = len(gas.sites)
    out = []
    for mask in range(1, 1 << n):
        size = mask.bit_count()
        if size < min_size or size > max_size:
            continue
        if size >= 2 and not _mask_connected(mask, gas.adjacency):
            continue
        out.append((mask, tuple(i for i in range(n) if mask >> i & 1)))
    return out


def _series_damping(model, gas, params, a, region, omega):
    """Largest damping theta certifying the series tail, or None.

    If sum_k theta^k w^(k) e^{ak} stays within e^a - 1, every cluster
    beyond total size K is suppressed by theta^{K+1}; the bound spends the
    slack of the convergence condition on that suppression.
    """
    delta = params.delta_cap
    if delta is None:
        return None
    if params.c == 0.0 and abs(params.t) > delta + 1e-12:
        # The single-site weight delta*sigma only dominates |E(e^{its}) - 1|
        # for |t| <= delta; past that the undressed series has no certificate.
        return None
    dress = 1.0 if params.c == 0.0 else params.c
    try:
        step_norm = m.interaction_norm(model, step=model.box.r0)
        bound_base = weight_norm_bound(2, delta, gas.sigma, step_norm, c=dress) ** 0.5
    except (PreconditionError, DomainError):
        return None
    k_cap = min(4, len(gas.sites), MAX_POLYMER_SIZE)
    norms = {}
    for k in range(1, k_cap + 1):
        if k == 1 and params.c != 0.0:
            continue
        kind = ("w1", None) if params.c == 0.0 else ("wc", params.c)
        norms[k] = weight_norm(model, k, kind[0], delta, kind[1], region, omega)

    def admissible(theta: float) -> bool:
        lhs = sum(w * theta**k * math.exp(a * k) for k, w in norms.items())
        lhs += geometric_norm_tail(bound_base * theta, a, k_cap + 1)
        return lhs <= math.exp(a) - 1.0

    if not admissible(1.0):
        return None
    lo, hi = 1.0, 1.0
    while admissible(hi * 2.0) and hi < 1e6:
        hi *= 2.0
    hi = hi * 2.0
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def truncated_log_partition(
    model: m.GibbsModel,
    params: ActivityParams,
    region="decimated",
    omega=None,
    K: int = 4,
    absolute: bool = False,
    a: float | None = None,
) -> ClusterSeriesResult:
    """Cluster series for log Xi through clusters of K polymers.

    Each unordered cluster contributes its hard-core Ursell coefficient
    times the activity product over the multiplicity factorials; with
    absolute=True every factor enters in absolute value, giving the
    positive dominating series. Disconnected overlap patterns are pruned
    before any Ursell work. The tail certificate (absolute series, per the
    damping helper) uses exponent a, defaulting to ln 2 undressed and c/4
    dressed.
    """
    if K < 1:
        raise DomainError(f"truncation order must be positive, got {K}")
    if K > 6:
        raise CapacityError(f"truncation order {K} exceeds the cap of 6")
    gas = _gas(model, region, omega)
    min_size = 1 if params.c == 0.0 else 2
    largest = max(_component_sizes(gas.adjacency))
    if largest > RECURSION_POLYMER_CAP:
        raise CapacityError(
            f"the region has a coupling component of {largest} sites, so order-1 clusters"
            f" already need polymers of that size; cap is {RECURSION_POLYMER_CAP}"
        )
    polymers = _connected_polymers(gas, min_size, min(RECURSION_POLYMER_CAP, len(gas.sites)))
    est_terms = math.comb(len(polymers) + K - 1, K) if polymers else 0
    if est_terms > CLUSTER_TERM_BUDGET:
        raise CapacityError(
            f"cluster enumeration needs about {est_terms} multisets from "
            f"{len(polymers)} polymers at order {K}, budget is {CLUSTER_TERM_BUDGET}"
        )
    acts = [
        _activity_from_indices(gas, idx, params.t, params.c, cap=RECURSION_POLYMER_CAP)
        for _, idx in polymers
    ]
    site_sets = [frozenset(idx) for _, idx in polymers]
    masks = [mask for mask, _ in polymers]

    by_order = []
    for order in range(1, K + 1):
        total = 0.0 if absolute else 0j
        for combo in combinations_with_replacement(range(len(polymers)), order):
            if order > 1:
                merged = masks[combo[0]]
                pending = list(combo[1:])
                # Grow the union; a cluster with disconnected overlap
                # pattern has zero Ursell weight.
                changed = True
                while pending and changed:
                    changed = False
                    for i, p in enumerate(pending):
                        if masks[p] & merged:
                            merged |= masks[p]
                            pending.pop(i)
                            changed = True
                            break
                if pending:
                    continue
            phi = ursell_hardcore(tuple(site_sets[i] for i in combo))
            if phi == 0.0:
                continue
            prod = 1.0 if absolute else complex(1.0)
            for i in combo:
                prod *= abs(acts[i]) if absolute else acts[i]
            mult = 1
            run = 1
            for prev, cur in zip(combo, combo[1:]):
                run = run + 1 if cur == prev else 1
                mult *= run if cur == prev else 1
            total += (abs(phi) if absolute else phi) * prod / mult
        by_order.append(total)

    partial = []
    acc = 0.0 if absolute else 0j
    for term in by_order:
        acc = acc + term
        partial.append(acc)

    a_eff = a if a is not None else (math.log(2.0) if params.c == 0.0 else params.c / 4.0)
    theta = _series_damping(model, gas, params, a_eff, region, omega)
    tail = None
    if theta is not None and theta > 1.0:
        tail = a_eff * len(gas.sites) / theta ** (K + 1)
    return ClusterSeriesResult(
        truncation_order=K,
        partial_sums=tuple(partial),
        by_order=tuple(by_order),
        dominating_tail=tail,
        damping=theta,
    )


def stability_check(model: m.GibbsModel, polymer, step_norm: float | None = None, region="decimated", omega=None):
    """Least internal pair energy of the polymer against -|R| J sigma^2 / 2.

    Returns (min_pair_energy, floor, ok). Enumerates every spin
    configuration, so keep |R| small.
    """
    gas = _gas(model, region, omega)
    idx = _indices(gas, polymer)
    k = len(idx)
    if step_norm is None:
        step_norm = m.interaction_norm(model, step=model.box.r0)
    values, _ = _config_tables(gas, idx)
    energy = np.zeros(values.shape[1])
    for a in range(k):
        for b in range(a + 1, k):
            j = gas.coupling[idx[a], idx[b]]
            if j != 0.0:
                energy += j * values[a] * values[b]
    floor = -k * step_norm * gas.sigma**2 / 2.0
    lowest = float(energy.min())
    return lowest, floor, lowest >= floor - 1e-12


def tree_graph_bound_check(
    model: m.GibbsModel, polymer, step_norm: float | None = None, region="decimated", omega=None
) -> TreeGraphBounds:
    """Per-configuration chain |Mayer sum| <= tree majorant <= coupling-norm majorant.

    The tree majorant multiplies 1 - e^{-|J s s'|} over the edges of every
    labeled tree on the polymer; the coarser form replaces each edge factor
    by sigma^2 |J|. Both carry the stability prefactor e^{|R| J sigma^2 / 2}.
    """
    from .combinatorics import spanning_tree_edge_sets

    gas = _gas(model, region, omega)
    idx = _indices(gas, polymer)
    k = len(idx)
    if k < 2:
        raise DomainError("the tree-graph chain needs at least two sites")
    if k > 6:
        raise CapacityError(f"tree-graph check on {k} sites exceeds the cap of 6")
    if step_norm is None:
        step_norm = m.interaction_norm(model, step=model.box.r0)
    values, _ = _config_tables(gas, idx)
    csum = connected_sum(_edge_factors(gas, idx, values))
    lhs = np.abs(csum)

    prefactor = math.exp(k * step_norm * gas.sigma**2 / 2.0)
    cols = values.shape[1]
    tree_sum = np.zeros(cols)
    j_sum = 0.0
    for edges in spanning_tree_edge_sets(k):
        term = np.ones(cols)
        j_term = 1.0
        for a, b in edges:
            jab = gas.coupling[idx[a], idx[b]]
            term = term * (1.0 - np.exp(-np.abs(jab * values[a] * values[b])))
            j_term *= abs(jab)
        tree_sum += term
        j_sum += j_term
    rhs_trees = prefactor * tree_sum
    rhs_j = prefactor * gas.sigma ** (2 * k - 2) * j_sum

    worst = int(np.argmax(lhs))
    stab_lhs, stab_floor, _ = stability_check(model, polymer, step_norm, region, omega)
    return TreeGraphBounds(
        lhs=float(lhs[worst]),
        rhs_trees=float(rhs_trees[worst]),
        rhs_j=float(rhs_j),
        margin_trees=float((rhs_trees - lhs).min()),
        margin_chain=float(rhs_j - rhs_trees.max()),
        margin_j=float((rhs_j - lhs).min()),
        stability_lhs=stab_lhs,
        stability_floor=stab_floor,
    )
