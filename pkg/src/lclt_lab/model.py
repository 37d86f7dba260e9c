"""Finite-box lattice spin models with boundary fields.

A model lives on the box ``{-n..n}^d``. Each site carries an integer spin
from a consecutive interval ``{lo..hi}`` (at least two values, so the
maximal span of the single-spin law is 1 and characteristic functions have
period 2*pi). Sites interact through a symmetric pair coupling J(x,y) with
J(x,x) = 0 and a finite interaction norm, and the outside world enters only
through a boundary condition omega that contributes the linear field

    h_x(s) = s * sum_{y outside the region} J(x, y) * omega_y

to the energy. The log Boltzmann weight of a configuration on a region is

    -H = sum_{{x,y} in region} J(x,y) s_x s_y + sum_x h_x(s_x),

and the single-site measure p_x(s) = e^{h_x(s)} / sum_s' e^{h_x(s')} is
bounded below by kappa(J, sigma) = e^{-2 J sigma^2} / card(I), the floor that
drives every decay estimate downstream.

Regions are arbitrary site subsets of the box. Two named regions matter:
the full box, and the decimated box (sites whose coordinates are all
multiples of the decimation step r0). For a proper subregion, every site
not in the region is treated as exterior and receives its omega value from
the boundary condition (zero and constant kinds extend uniformly; explicit
kinds default unassigned sites to 0, contributing no field).

Exterior sums for translation-invariant couplings are evaluated inside a
finite window of radius ``truncation_radius``; for power-law couplings the
window is certified at construction so the neglected tail of
sum |J(x,y)| * sigma stays below 1e-12. Finite-range kinds are exact.

All model objects are immutable and hashable; every function here is pure,
so concurrent use needs no locks.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import jsonschema
import numpy as np

from .errors import CapacityError, DomainError

Site = tuple[int, ...]

# Certified ceiling for the neglected exterior tail, sum |J| * sigma.
TAIL_TOLERANCE = 1e-12

# Largest offset-window cardinality interaction_norm will enumerate.
WINDOW_BUDGET = 1 << 24


def _as_site(raw, dimension: int) -> Site:
    site = tuple(int(c) for c in raw)
    if len(site) != dimension:
        raise DomainError(f"site {raw!r} does not have dimension {dimension}")
    return site


@dataclass(frozen=True)
class SpinInterval:
    """Consecutive integer spin values {lo, lo+1, ..., hi}."""

    lo: int
    hi: int

    def __post_init__(self):
        if not isinstance(self.lo, int) or not isinstance(self.hi, int):
            raise DomainError("spin bounds must be integers")
        if self.lo >= self.hi:
            raise DomainError(f"spin interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def sigma(self) -> int:
        """Largest absolute spin value; at least 1 for any valid interval."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def card(self) -> int:
        return self.hi - self.lo + 1

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(range(self.lo, self.hi + 1))

    def __contains__(self, value) -> bool:
        return isinstance(value, (int, np.integer)) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class Box:
    """The box {-radius..radius}^dimension with decimation step r0."""

    dimension: int
    radius: int
    r0: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("dimension must be at least 1")
        if self.radius < 0:
            raise DomainError("radius must be nonnegative")
        if self.r0 < 1:
            raise DomainError("decimation step r0 must be at least 1")

    @cached_property
    def sites(self) -> tuple[Site, ...]:
        rng = range(-self.radius, self.radius + 1)
        return tuple(itertools.product(rng, repeat=self.dimension))

    @cached_property
    def decimated_sites(self) -> tuple[Site, ...]:
        """Box sites whose coordinates are all multiples of r0."""
        return tuple(s for s in self.sites if all(c % self.r0 == 0 for c in s))

    @property
    def site_count(self) -> int:
        return (2 * self.radius + 1) ** self.dimension

    def __contains__(self, site) -> bool:
        return (
            len(site) == self.dimension
            and all(isinstance(c, (int, np.integer)) and abs(c) <= self.radius for c in site)
        )


@dataclass(frozen=True)
class Coupling:
    """Symmetric pair coupling J(x, y).

    Kinds:
      nearest_neighbor  J = strength for |x - y| = 1, else 0
      power_law         J = strength / |x - y|_2 ** exponent (exponent > d)
      explicit          finite table of unordered pairs
    """

    kind: str
    strength: float = 0.0
    exponent: float | None = None
    pairs: tuple[tuple[Site, Site, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("nearest_neighbor", "power_law", "explicit"):
            raise DomainError(f"unknown coupling kind {self.kind!r}")
        if self.kind == "power_law" and (self.exponent is None or self.exponent <= 0):
            raise DomainError("power_law coupling needs a positive exponent")
        if self.kind == "explicit":
            if self.pairs is None:
                raise DomainError("explicit coupling needs a pair table")
            seen = set()
            for x, y, _ in self.pairs:
                if x == y:
                    raise DomainError(f"explicit coupling assigns J({x},{x}) on the diagonal")
                key = (min(x, y), max(x, y))
                if key in seen:
                    raise DomainError(f"duplicate explicit pair {key}")
                seen.add(key)

    @staticmethod
    def nearest_neighbor(strength: float) -> "Coupling":
        return Coupling(kind="nearest_neighbor", strength=float(strength))

    @staticmethod
    def power_law(strength: float, exponent: float) -> "Coupling":
        return Coupling(kind="power_law", strength=float(strength), exponent=float(exponent))

    @staticmethod
    def explicit(table: Mapping[tuple[Site, Site], float] | Iterable) -> "Coupling":
        items = table.items() if isinstance(table, Mapping) else table
        norm = []
        for entry in items:
            if len(entry) == 2 and len(entry[0]) == 2:
                (x, y), j = entry
            else:
                x, y, j = entry
            x, y = tuple(x), tuple(y)
            lo, hi = (x, y) if x <= y else (y, x)
            norm.append((lo, hi, float(j)))
        return Coupling(kind="explicit", pairs=tuple(sorted(norm)))

    @cached_property
    def _pair_lookup(self) -> dict:
        return {(x, y): j for x, y, j in (self.pairs or ())}

    @cached_property
    def range_bound(self) -> int | None:
        """Exact interaction range in sup-norm, or None for infinite range."""
        if self.kind == "nearest_neighbor":
            return 1
        if self.kind == "explicit":
            extent = 1
            for x, y, _ in self.pairs or ():
                extent = max(extent, max(abs(a - b) for a, b in zip(x, y)))
            return extent
        return None

    def value(self, x: Site, y: Site) -> float:
        """J(x, y); symmetric, zero on the diagonal."""
        if x == y:
            return 0.0
        if self.kind == "nearest_neighbor":
            return self.strength if sum(abs(a - b) for a, b in zip(x, y)) == 1 else 0.0
        if self.kind == "power_law":
            r2 = sum((a - b) ** 2 for a, b in zip(x, y))
            return self.strength / r2 ** (self.exponent / 2.0)
        key = (x, y) if x <= y else (y, x)
        return self._pair_lookup.get(key, 0.0)

    def values_from(self, x: Site, ys: np.ndarray) -> np.ndarray:
        """Vectorized J(x, y) over an array of sites, shape (m, d)."""
        diff = ys - np.asarray(x, dtype=np.int64)
        if self.kind == "nearest_neighbor":
            return np.where(np.abs(diff).sum(axis=1) == 1, self.strength, 0.0)
        if self.kind == "power_law":
            r2 = (diff.astype(float) ** 2).sum(axis=1)
            out = np.zeros(len(ys))
            nz = r2 > 0
            out[nz] = self.strength / r2[nz] ** (self.exponent / 2.0)
            return out
        return np.array([self.value(x, tuple(int(c) for c in y)) for y in ys])


@dataclass(frozen=True)
class BoundaryCondition:
    """Spin values omega assigned to sites outside a region.

    zero and constant kinds extend to every exterior site; the explicit kind
    carries a finite assignment table, and any unassigned exterior site
    contributes no field (omega = 0 there).
    """

    kind: str
    value: int = 0
    assignments: tuple[tuple[Site, int], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "explicit"):
            raise DomainError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "explicit" and self.assignments is None:
            raise DomainError("explicit boundary needs assignments")

    @staticmethod
    def zero() -> "BoundaryCondition":
        return BoundaryCondition(kind="zero")

    @staticmethod
    def constant(value: int) -> "BoundaryCondition":
        return BoundaryCondition(kind="constant", value=int(value))

    @staticmethod
    def explicit(assignments: Mapping[Site, int] | Iterable) -> "BoundaryCondition":
        items = assignments.items() if isinstance(assignments, Mapping) else assignments
        norm = tuple(sorted((tuple(site), int(v)) for site, v in items))
        return BoundaryCondition(kind="explicit", assignments=norm)

    @cached_property
    def _table(self) -> dict:
        return dict(self.assignments or ())

    def omega(self, site: Site) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "constant":
            return self.value
        return self._table.get(site, 0)


def _power_law_tail_bound(strength, exponent, dimension, window):
    """Certified bound on sum_{|y-x|_sup > window} |J(x,y)|.

    Shell counting: at sup-distance l there are (2l+1)^d - (2l-1)^d sites,
    at most 2d(3l)^(d-1), each with Euclidean distance >= l. The remaining
    sum is bounded by the integral of t^(d-1-exponent).
    """
    p, d = exponent, dimension
    if window < 1:
        return math.inf
    return abs(strength) * 2 * d * 3 ** (d - 1) * window ** (d - p) / (p - d)


def required_truncation_radius(coupling: Coupling, dimension: int, sigma: int) -> int:
    """Smallest window radius whose certified tail is below TAIL_TOLERANCE."""
    if coupling.range_bound is not None:
        return coupling.range_bound
    p = coupling.exponent
    if p <= dimension:
        raise DomainError(
            f"power_law exponent {p} is not summable in dimension {dimension}; needs exponent > d"
        )
    if coupling.strength == 0.0:
        return 1
    target = TAIL_TOLERANCE / sigma
    lead = abs(coupling.strength) * 2 * dimension * 3 ** (dimension - 1) / (p - dimension)
    radius = max(1, math.ceil((lead / target) ** (1.0 / (p - dimension))))
    while _power_law_tail_bound(coupling.strength, p, dimension, radius) * sigma > TAIL_TOLERANCE:
        radius += 1
    return radius


@dataclass(frozen=True)
class GibbsModel:
    """A spin interval, a box, a coupling, a boundary condition, and the
    certified truncation window tying them together."""

    spin: SpinInterval
    box: Box
    coupling: Coupling
    boundary: BoundaryCondition
    truncation_radius: int | None = None

    def __post_init__(self):
        if self.coupling.kind == "power_law" and self.coupling.exponent <= self.box.dimension:
            raise DomainError(
                f"power_law exponent must exceed the dimension {self.box.dimension} "
                f"for a finite interaction norm, got {self.coupling.exponent}"
            )
        if self.truncation_radius is None:
            object.__setattr__(
                self,
                "truncation_radius",
                required_truncation_radius(self.coupling, self.box.dimension, self.spin.sigma),
            )
        elif self.coupling.kind == "power_law":
            tail = _power_law_tail_bound(
                self.coupling.strength,
                self.coupling.exponent,
                self.box.dimension,
                self.truncation_radius,
            )
            if tail * self.spin.sigma > TAIL_TOLERANCE:
                raise DomainError(
                    f"truncation_radius {self.truncation_radius} leaves a tail bound "
                    f"{tail * self.spin.sigma:.3e} above {TAIL_TOLERANCE} on sum |J| * sigma"
                )
        if self.boundary.kind == "constant" and self.boundary.value not in self.spin:
            raise DomainError(f"constant boundary value {self.boundary.value} outside spin interval")
        if self.boundary.kind == "explicit":
            for site, v in self.boundary.assignments:
                if v not in self.spin:
                    raise DomainError(f"boundary value {v} at {site} outside spin interval")

    @property
    def sites(self) -> tuple[Site, ...]:
        return self.box.sites

    @property
    def decimated_sites(self) -> tuple[Site, ...]:
        return self.box.decimated_sites


@dataclass(frozen=True)
class SpinConfig:
    """An assignment of spin values to an ordered tuple of region sites."""

    sites: tuple[Site, ...]
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.sites) != len(self.values):
            raise DomainError("one spin value per site required")
        if len(set(self.sites)) != len(self.sites):
            raise DomainError("config sites must be distinct")

    @staticmethod
    def from_mapping(assignment: Mapping[Site, int]) -> "SpinConfig":
        sites = tuple(sorted(tuple(s) for s in assignment))
        return SpinConfig(sites=sites, values=tuple(int(assignment[s]) for s in sites))

    def value_at(self, site: Site) -> int:
        return self.values[self.sites.index(site)]


def resolve_region(model: GibbsModel, region) -> tuple[Site, ...]:
    """Canonical sorted site tuple for a region argument.

    Accepts the strings "box" and "decimated" or any iterable of box sites.
    """
    if region is None:
        return model.box.sites
    if isinstance(region, str):
        if region == "box":
            return model.box.sites
        if region == "decimated":
            return model.box.decimated_sites
        raise DomainError(f"unknown region name {region!r}")
    sites = tuple(sorted(_as_site(s, model.box.dimension) for s in region))
    if len(set(sites)) != len(sites):
        raise DomainError("region sites must be distinct")
    for s in sites:
        if s not in model.box:
            raise DomainError(f"region site {s} lies outside the box")
    return sites


@lru_cache(maxsize=256)
def _window_coupling_total(model: GibbsModel, step: int, absolute: bool = True) -> float:
    """sum over nonzero offsets z in (step Z)^d with |z|_sup <= truncation of |J(z)|,
    or of the signed J(z) when absolute is off.

    Translation invariant kinds only; compensated by numpy pairwise summation.
    """
    d = model.box.dimension
    radius = model.truncation_radius
    reach = radius // step
    if reach < 1:
        return 0.0
    count = (2 * reach + 1) ** d
    if count > WINDOW_BUDGET:
        raise CapacityError(
            f"interaction window holds {count} offsets, over the budget {WINDOW_BUDGET}; "
            "raise the power-law exponent or lower the truncation radius"
        )
    axis = np.arange(-reach, reach + 1, dtype=np.int64) * step
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1)
    origin = tuple([0] * d)
    values = model.coupling.values_from(origin, offsets)
    if absolute:
        values = np.abs(values)
    return float(values.sum())


def interaction_norm(model: GibbsModel, step: int = 1) -> float:
    """sup over sites x of the step-decimated lattice of sum_y |J(x, y)|.

    The inner sum runs over the infinite decimated lattice, truncated at the
    certified window; the sup is exact for translation-invariant kinds and is
    evaluated over the finite box for explicit tables.
    """
    if step < 1:
        raise DomainError("step must be at least 1")
    if model.coupling.kind != "explicit":
        return _window_coupling_total(model, step)
    best = 0.0
    on_step = lambda s: all(c % step == 0 for c in s)  # noqa: E731
    for x in model.box.sites:
        if not on_step(x):
            continue
        total = 0.0
        for a, b, j in model.coupling.pairs:
            if a == x and on_step(b):
                total += abs(j)
            elif b == x and on_step(a):
                total += abs(j)
        best = max(best, total)
    return best


def boundary_field_coefficient(model: GibbsModel, x: Site, region="box") -> float:
    """Field slope b_x = sum_{y outside region} J(x, y) * omega_y, so h_x(s) = b_x * s."""
    region_sites = resolve_region(model, region)
    x = _as_site(x, model.box.dimension)
    if x not in region_sites:
        raise DomainError(f"site {x} is not in the region")
    bc = model.boundary
    if bc.kind == "zero":
        return 0.0
    if model.coupling.kind == "explicit":
        total = 0.0
        in_region = set(region_sites)
        for a, b, j in model.coupling.pairs:
            if a == x and b not in in_region:
                total += j * bc.omega(b)
            elif b == x and a not in in_region:
                total += j * bc.omega(a)
        return total
    if bc.kind == "explicit":
        total = 0.0
        in_region = set(region_sites)
        radius = model.truncation_radius
        for y, v in bc.assignments:
            if y in in_region or v == 0:
                continue
            if max(abs(a - b) for a, b in zip(x, y)) > radius:
                continue
            total += model.coupling.value(x, y) * v
        return total
    # Constant boundary over a translation-invariant coupling: subtract the
    # in-region, in-window part from the full-window total instead of walking
    # the window site by site.
    ys = np.asarray(region_sites, dtype=np.int64)
    in_window = np.abs(ys - np.asarray(x, dtype=np.int64)).max(axis=1) <= model.truncation_radius
    in_region_sum = float(model.coupling.values_from(x, ys[in_window]).sum())
    return bc.value * (_window_coupling_total(model, 1, absolute=False) - in_region_sum)


def boundary_field(model: GibbsModel, x: Site, s: int, region="box") -> float:
    """Boundary field h_x(s) for a spin value s at region site x."""
    if s not in model.spin:
        raise DomainError(f"spin value {s} outside the interval")
    return boundary_field_coefficient(model, x, region) * s


def hamiltonian(model: GibbsModel, config: SpinConfig) -> float:
    """Log Boltzmann weight -H of a configuration on its own region.

    -H = sum_{{x,y} in region} J(x,y) s_x s_y + sum_x h_x(s_x). The region is
    the site set of the config; all other sites are exterior.
    """
    for v in config.values:
        if v not in model.spin:
            raise DomainError(f"config value {v} outside the spin interval")
    region = resolve_region(model, config.sites)
    lookup = dict(zip(config.sites, config.values))
    values = [lookup[s] for s in region]
    total = 0.0
    for i, x in enumerate(region):
        for k in range(i + 1, len(region)):
            j = model.coupling.value(x, region[k])
            if j != 0.0:
                total += j * values[i] * values[k]
        total += boundary_field_coefficient(model, x, region) * values[i]
    return total


def single_spin_distribution(model: GibbsModel, x: Site, region="box") -> dict[int, float]:
    """p_x(s) = e^{h_x(s)} / sum_s' e^{h_x(s')} over the spin interval."""
    b = boundary_field_coefficient(model, x, region)
    spins = np.array(model.spin.values, dtype=float)
    logw = b * spins
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    return {int(s): float(p) for s, p in zip(model.spin.values, w)}


def kappa(interaction: float, sigma: int, card: int) -> float:
    """Single-spin mass floor e^{-2 J sigma^2} / card(I)."""
    if interaction < 0:
        raise DomainError("interaction norm must be nonnegative")
    if sigma < 1 or card < 2:
        raise DomainError("need sigma >= 1 and at least two spin values")
    return math.exp(-2.0 * interaction * sigma * sigma) / card


# ---------------------------------------------------------------------------
# JSON ingestion

MODEL_SCHEMA = {
    "type": "object",
    "required": ["dimension", "radius", "spin", "coupling", "boundary", "r0"],
    "additionalProperties": False,
    "properties": {
        "dimension": {"type": "integer", "minimum": 1},
        "radius": {"type": "integer", "minimum": 0},
        "r0": {"type": "integer", "minimum": 1},
        "truncation_radius": {"type": "integer", "minimum": 1},
        "spin": {
            "type": "object",
            "required": ["lo", "hi"],
            "additionalProperties": False,
            "properties": {"lo": {"type": "integer"}, "hi": {"type": "integer"}},
        },
        "coupling": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["nearest_neighbor", "power_law", "explicit"]},
                "strength": {"type": "number"},
                "exponent": {"type": "number"},
                "pairs": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "minItems": 3,
                        "maxItems": 3,
                        "prefixItems": [
                            {"type": "array", "items": {"type": "integer"}},
                            {"type": "array", "items": {"type": "integer"}},
                            {"type": "number"},
                        ],
                    },
                },
            },
        },
        "boundary": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["zero", "constant", "explicit"]},
                "value": {"type": "integer"},
                "assignments": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "prefixItems": [
                            {"type": "array", "items": {"type": "integer"}},
                            {"type": "integer"},
                        ],
                    },
                },
            },
        },
    },
}


def model_from_dict(raw: Mapping) -> GibbsModel:
    """Build a model from the JSON object layout, validating against the schema."""
    jsonschema.validate(raw, MODEL_SCHEMA)
    d = raw["dimension"]
    spin = SpinInterval(lo=raw["spin"]["lo"], hi=raw["spin"]["hi"])
    box = Box(dimension=d, radius=raw["radius"], r0=raw["r0"])
    c = raw["coupling"]
    if c["kind"] == "nearest_neighbor":
        coupling = Coupling.nearest_neighbor(c.get("strength", 0.0))
    elif c["kind"] == "power_law":
        if "exponent" not in c:
            raise DomainError("power_law coupling needs an exponent")
        coupling = Coupling.power_law(c.get("strength", 0.0), c["exponent"])
    else:
        coupling = Coupling.explicit(
            [(_as_site(x, d), _as_site(y, d), j) for x, y, j in c.get("pairs", [])]
        )
    b = raw["boundary"]
    if b["kind"] == "zero":
        boundary = BoundaryCondition.zero()
    elif b["kind"] == "constant":
        boundary = BoundaryCondition.constant(b.get("value", 0))
    else:
        boundary = BoundaryCondition.explicit(
            [(_as_site(site, d), v) for site, v in b.get("assignments", [])]
        )
    return GibbsModel(
        spin=spin,
        box=box,
        coupling=coupling,
        boundary=boundary,
        truncation_radius=raw.get("truncation_radius"),
    )


def model_from_json(text: str) -> GibbsModel:
    return model_from_dict(json.loads(text))


def model_to_dict(model: GibbsModel) -> dict:
    """Inverse of model_from_dict, up to defaulted truncation radius."""
    c: dict = {"kind": model.coupling.kind}
    if model.coupling.kind in ("nearest_neighbor", "power_law"):
        c["strength"] = model.coupling.strength
    if model.coupling.kind == "power_law":
        c["exponent"] = model.coupling.exponent
    if model.coupling.kind == "explicit":
        c["pairs"] = [[list(x), list(y), j] for x, y, j in model.coupling.pairs]
    b: dict = {"kind": model.boundary.kind}
    if model.boundary.kind == "constant":
        b["value"] = model.boundary.value
    if model.boundary.kind == "explicit":
        b["assignments"] = [[list(site), v] for site, v in model.boundary.assignments]
    return {
        "dimension": model.box.dimension,
        "radius": model.box.radius,
        "r0": model.box.r0,
        "truncation_radius": model.truncation_radius,
        "spin": {"lo": model.spin.lo, "hi": model.spin.hi},
        "coupling": c,
        "boundary": b,
    }
