"""Generator-driven Fuchsian groups with cusp at i*infinity of width 1.

Orbit enumeration by displacement (the truncation device for the kernel
series), the compact-part / cusp-neighborhood split, and a sampled
injectivity-radius estimate.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .uhp import (
    DomainError,
    MoebiusTransform,
    UhpPoint,
    apply_moebius,
    cosh2_half_distance,
    hyp_distance,
)

DEFAULT_C_GAMMA = 4.0 * math.pi


class BudgetExceeded(RuntimeError):
    """Enumeration budget exhausted before the frontier closed."""


@dataclass(frozen=True)
class FuchsianGroup:
    label: str
    generators: tuple
    cusp_width: float = 1.0
    genus_hint: Optional[int] = None
    cusp_count_hint: Optional[int] = None

    @property
    def has_cusp_translation(self) -> bool:
        """Whether the unit translation appears among the generators.

        The standing hypothesis places (1,1;0,1) in the group; with an
        arbitrary generator list this can only be checked softly.
        """
        return any(g.is_cusp_translation() and abs(g.b - 1.0) < 1e-9
                   for g in self.generators)

    def symmetrized_generators(self) -> list:
        """Generators together with their inverses, deduplicated."""
        out, seen = [], set()
        for g in self.generators:
            for h in (g, g.inverse()):
                k = h.key()
                if k not in seen:
                    seen.add(k)
                    out.append(h)
        return out


def modular_group() -> FuchsianGroup:
    """PSL(2, Z), generated by the unit translation and the inversion."""
    return FuchsianGroup(
        label="modular",
        generators=(
            MoebiusTransform.translation(1),
            MoebiusTransform(0.0, -1.0, 1.0, 0.0),
        ),
        genus_hint=0,
        cusp_count_hint=1,
    )


def free_product_group() -> FuchsianGroup:
    """Toy group generated by the unit translation and (1,0;2,1)."""
    return FuchsianGroup(
        label="free2",
        generators=(
            MoebiusTransform.translation(1),
            MoebiusTransform(1.0, 0.0, 2.0, 1.0),
        ),
    )


def translation_group() -> FuchsianGroup:
    """Translation-only toy group (the cusp stabilizer alone)."""
    return FuchsianGroup(label="translations",
                         generators=(MoebiusTransform.translation(1),))


def trivial_group() -> FuchsianGroup:
    return FuchsianGroup(label="trivial", generators=())


_PRESETS = {
    "modular": modular_group,
    "free2": free_product_group,
    "translations": translation_group,
    "trivial": trivial_group,
}


def group_by_name(name: str) -> FuchsianGroup:
    """Resolve a preset name or ``file:<path>`` group description."""
    if name.startswith("file:"):
        return load_group(name[5:])
    if name not in _PRESETS:
        raise DomainError(f"unknown group preset {name!r}")
    return _PRESETS[name]()


def load_group(path: str) -> FuchsianGroup:
    with open(path) as fh:
        doc = json.load(fh)
    gens = tuple(MoebiusTransform(*map(float, row)) for row in doc["generators"])
    return FuchsianGroup(
        label=doc.get("label", path),
        generators=gens,
        genus_hint=doc.get("genus"),
        cusp_count_hint=doc.get("cusps"),
    )


def stabilizer_elements(n_min: int, n_max: int):
    """Translations (1, n; 0, 1) for n_min <= n <= n_max."""
    if n_min > n_max:
        raise DomainError("n_min > n_max")
    return [MoebiusTransform.translation(n) for n in range(n_min, n_max + 1)]


@dataclass
class OrbitEnumeration:
    base_point: UhpPoint
    elements: list  # (MoebiusTransform, cosh2 half displacement), sorted
    displacement_bound: float
    exhaustive_flag: bool
    frontier_count: int = 0
    expanded: int = 0

    def transforms(self):
        return [g for g, _ in self.elements]


def enumerate_group_elements(
    group: FuchsianGroup,
    z: UhpPoint,
    displacement_bound: float,
    budget: int = 200_000,
    slack: float = 1.0,
) -> OrbitEnumeration:
    """Breadth-first closure of generator words below a displacement bound.

    ``displacement_bound`` is in cosh^2(d/2) units.  Words are expanded
    while their displacement stays below the bound plus a conservative
    slack of twice the largest generator displacement (plus ``slack``),
    allowing paths that dip back under the bound; the budget caps the
    number of expansions.  Elements are deduplicated in PSL(2).
    """
    if displacement_bound < 1.0:
        raise DomainError("displacement bound must be >= 1")
    if budget <= 0:
        raise DomainError("budget must be positive")

    gens = group.symmetrized_generators()
    d_bound = 2.0 * math.acosh(math.sqrt(displacement_bound))
    gen_disp = max((hyp_distance(z, apply_moebius(g, z)) for g in gens),
                   default=0.0)
    d_expand = d_bound + 2.0 * max(gen_disp, slack)

    ident = MoebiusTransform.identity()
    seen = {ident.key()}
    results = [(ident, 1.0)]
    queue = [ident]
    frontier_count = 0
    expanded = 0
    exhaustive = True

    while queue:
        if expanded >= budget:
            exhaustive = False
            break
        nxt = []
        for g in queue:
            if expanded >= budget:
                exhaustive = False
                break
            expanded += 1
            for s in gens:
                h = g @ s
                k = h.key()
                if k in seen:
                    continue
                seen.add(k)
                t = cosh2_half_distance(z, apply_moebius(h, z))
                d = 2.0 * math.acosh(math.sqrt(max(t, 1.0)))
                if t <= displacement_bound:
                    results.append((h, t))
                if d <= d_expand:
                    nxt.append(h)
                else:
                    frontier_count += 1
        queue = nxt

    results.sort(key=lambda item: (item[1],) + item[0].key())
    return OrbitEnumeration(
        base_point=z,
        elements=results,
        displacement_bound=displacement_bound,
        exhaustive_flag=exhaustive,
        frontier_count=max(frontier_count, 1),
        expanded=expanded,
    )


class Region(Enum):
    COMPACT_PART = "CompactPart"
    CUSP_NEIGHBORHOOD = "CuspNeighborhood"


@dataclass(frozen=True)
class RegionTag:
    tag: Region
    threshold_height: float


def classify_region(z: UhpPoint, k: int, c_gamma: float = DEFAULT_C_GAMMA) -> RegionTag:
    """Cusp neighborhood iff y >= c_gamma * log(k) / (2*pi), closed condition."""
    if k < 2:
        raise DomainError("k must be >= 2")
    if c_gamma <= 0:
        raise DomainError("c_gamma must be positive")
    threshold = c_gamma * math.log(k) / (2.0 * math.pi)
    tag = Region.CUSP_NEIGHBORHOOD if z.y >= threshold else Region.COMPACT_PART
    return RegionTag(tag=tag, threshold_height=threshold)


def injectivity_radius_estimate(
    group: FuchsianGroup,
    samples: Sequence[UhpPoint],
    budget: int = 200_000,
    initial_bound: float = 64.0,
    max_bound: float = 4096.0,
) -> float:
    """Sampled upper bound on the injectivity radius.

    Minimum over samples of the minimal displacement by an enumerated
    non-parabolic element; +inf when no such element exists below the
    search bound.
    """
    if not samples:
        raise DomainError("need at least one sample point")
    best = math.inf
    for z in samples:
        bound = initial_bound
        found = math.inf
        while True:
            enum = enumerate_group_elements(group, z, bound, budget=budget)
            non_par = [t for g, t in enum.elements if not g.is_cusp_translation()]
            if non_par:
                found = 2.0 * math.acosh(math.sqrt(max(min(non_par), 1.0)))
                break
            if not enum.exhaustive_flag:
                raise BudgetExceeded(f"enumeration incomplete at {z}")
            if bound >= max_bound:
                break
            bound *= 4.0
        best = min(best, found)
    return best
