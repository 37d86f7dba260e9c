"""Shared preprocessed view of a model restricted to a region.

A System is the flattened data every engine consumes: the ordered region
sites, the spin values, the nonzero pair couplings among region sites (by
site index), and the per-site boundary field slopes. Systems are immutable
and hashable so downstream caches can key on them directly.

An omega override replaces the model's boundary condition by a finite
assignment on exterior sites (used when scanning conditionings of the
decimated box); sites it leaves unassigned contribute no field.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import model as m
from .errors import CapacityError, DomainError


@dataclass(frozen=True)
class System:
    sites: tuple[m.Site, ...]
    values: tuple[int, ...]
    pairs: tuple[tuple[int, int, float], ...]
    fields: tuple[float, ...]

    @property
    def site_count(self) -> int:
        return len(self.sites)

    @property
    def value_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def field_array(self) -> np.ndarray:
        return np.asarray(self.fields, dtype=float)

    def pair_matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix among region sites."""
        n = self.site_count
        J = np.zeros((n, n))
        for i, j, v in self.pairs:
            J[i, j] = J[j, i] = v
        return J

    def energy_shift(self) -> float:
        """Upper bound on the log weight, used to keep exponentials bounded."""
        sigma = max(abs(v) for v in self.values)
        return sum(abs(v) for _, _, v in self.pairs) * sigma * sigma + sum(
            abs(b) for b in self.fields
        ) * sigma

    def state_count(self) -> int:
        return len(self.values) ** self.site_count


def _region_pairs(model: m.GibbsModel, region: tuple[m.Site, ...]):
    index = {s: i for i, s in enumerate(region)}
    pairs = []
    if model.coupling.kind == "explicit":
        for a, b, j in model.coupling.pairs:
            if j != 0.0 and a in index and b in index:
                i, k = sorted((index[a], index[b]))
                pairs.append((i, k, j))
    else:
        for i, x in enumerate(region):
            for k in range(i + 1, len(region)):
                j = model.coupling.value(x, region[k])
                if j != 0.0:
                    pairs.append((i, k, j))
    return tuple(sorted(pairs))


def _override_fields(model, region, omega_items):
    """Field slopes from a finite exterior assignment inside the window."""
    radius = model.truncation_radius
    in_region = set(region)
    out = []
    for x in region:
        total = 0.0
        for y, v in omega_items:
            if v == 0 or y in in_region:
                continue
            if max(abs(a - b) for a, b in zip(x, y)) > radius:
                continue
            total += model.coupling.value(x, y) * v
        out.append(total)
    return tuple(out)


@lru_cache(maxsize=512)
def _build(model: m.GibbsModel, region: tuple[m.Site, ...], omega_items) -> System:
    if omega_items is None:
        fields = tuple(m.boundary_field_coefficient(model, x, region) for x in region)
    else:
        fields = _override_fields(model, region, omega_items)
    return System(
        sites=region,
        values=model.spin.values,
        pairs=_region_pairs(model, region),
        fields=fields,
    )


def build_system(model: m.GibbsModel, region="box", omega=None) -> System:
    """System for a model region, optionally under an omega override.

    omega may be a mapping site -> spin value; every assigned value must lie
    in the spin interval.
    """
    sites = m.resolve_region(model, region)
    if omega is None:
        return _build(model, sites, None)
    items = tuple(sorted((tuple(s), int(v)) for s, v in dict(omega).items()))
    for s, v in items:
        if v not in model.spin:
            raise DomainError(f"override value {v} at {s} outside the spin interval")
    return _build(model, sites, items)


def windowed_exterior(model: m.GibbsModel, region="box", cap: int = 1 << 20):
    """Sites within the truncation window of the region but not in it.

    These are the only exterior sites whose omega values can move the fields
    by more than the certified tail. Sorted for determinism.
    """
    sites = m.resolve_region(model, region)
    radius = model.truncation_radius
    d = model.box.dimension
    span = 2 * radius + 1
    if span**d * len(sites) > 8 * cap:
        raise CapacityError(
            f"window of radius {radius} around {len(sites)} sites spans up to "
            f"{span**d * len(sites)} candidates, over the cap {8 * cap}"
        )
    in_region = set(sites)
    out = set()
    offsets = np.stack(
        [g.ravel() for g in np.meshgrid(*([np.arange(-radius, radius + 1)] * d), indexing="ij")],
        axis=1,
    )
    for x in sites:
        for off in offsets:
            y = tuple(int(c) for c in np.asarray(x) + off)
            if y not in in_region:
                out.add(y)
    if len(out) > cap:
        raise CapacityError(f"windowed exterior holds {len(out)} sites, over the cap {cap}")
    return tuple(sorted(out))
