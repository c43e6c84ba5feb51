# backend/tiling.py
"""
The tiling FIRE: every point x of a Bernoulli set Pi (intensity delta/|A|)
places the tile xA; an element covered by several tiles goes to the covering
point with the least mark, and points of Pi always keep themselves.

Only the root cell is ever sampled. Pi on the finite determinacy window
W = A^-1 u AA^-1 u A^-1AA^-1 fixes the root cell exactly, so samples carry no
truncation error.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, partial
from math import factorial, isclose, sqrt
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .cells import RootCell
from .errors import InfeasibleError, ParseError, PreconditionError
from .estimates import Estimate, mean_estimate, paired_difference, ratio_estimate, run_streams
from .groups import (
    Element,
    GroupSpec,
    ball,
    format_element,
    inverse_set,
    parse_element,
    set_product,
    translate_set,
)
from .sampling import BernoulliField, IntensitySpec, MarkedConfiguration, SeedSpec
from .settings import DEFAULT_ORACLE_CENTERS, DEFAULT_ORACLE_WINDOW, get_budget

MIN_VERIFY_SAMPLES = 10**3
REPORT_LEVEL = 0.99
INSUFFICIENT = "insufficient conditioning mass"

VACUOUS_DELTA_MSG = (
    "delta must lie in (0, 1/2]: beyond 1/2 the factor (1 − 2δ) turns negative and the "
    "bounds |A|(1 − 2δ) and 4δ²(1 − 2δ)² are vacuous"
)


# --------- Cell sets --------- #

@dataclass(frozen=True)
class CellSet:
    elements: FrozenSet[Element]
    delta: float

    def __post_init__(self):
        if not self.elements:
            raise PreconditionError("cell set A must be non-empty")
        specs = {g.spec for g in self.elements}
        if len(specs) != 1:
            raise PreconditionError(f"cell set mixes groups: {sorted(str(s) for s in specs)}")
        if self.spec.identity() not in self.elements:
            raise PreconditionError("cell set A must contain the identity")
        if not 0.0 < self.delta <= 0.5:
            raise PreconditionError(f"{VACUOUS_DELTA_MSG}, got δ = {self.delta}")

    @property
    def spec(self) -> GroupSpec:
        return next(iter(self.elements)).spec

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def intensity(self) -> IntensitySpec:
        return IntensitySpec(self.delta / self.size)

    @classmethod
    def from_ball(cls, spec: GroupSpec, radius: int, delta: float) -> "CellSet":
        return cls(frozenset(ball(spec, spec.identity(), radius).elements), delta)

    def describe(self) -> Dict[str, Any]:
        return {
            "group": str(self.spec),
            "cell_set": [format_element(g) for g in sorted(self.elements)],
            "size": self.size,
            "delta": self.delta,
            "intensity": self.delta / self.size,
        }


def parse_cell_set(spec: GroupSpec, text: str, delta: float) -> CellSet:
    """'ball:r' for B_r(e), or 'explicit:g1,g2,...' in element text form."""
    raw = (text or "").strip()
    kind, _, body = raw.partition(":")
    if kind == "ball":
        try:
            radius = int(body)
        except ValueError:
            raise ParseError(f"ball radius must be an integer, got {body!r}")
        return CellSet.from_ball(spec, radius, delta)
    if kind == "explicit":
        items = [s for s in body.split(",") if s.strip()]
        if not items:
            raise ParseError("explicit cell set is empty")
        return CellSet(frozenset(parse_element(spec, s) for s in items), delta)
    raise ParseError(f"cell set must be 'ball:r' or 'explicit:...', got {text!r}")


def determinacy_window(cell_set: CellSet) -> FrozenSet[Element]:
    a = cell_set.elements
    a_inv = inverse_set(a)
    a_a_inv = set_product(a, a_inv)
    return a_inv | a_a_inv | set_product(a_inv, a_a_inv)


# --------- Index plan --------- #

@dataclass(frozen=True)
class _TilingPlan:
    """
    Index tables over the sorted determinacy window. Index order is normal
    form order, which is also the mark tie-break order.
    """

    window: Tuple[Element, ...]
    identity: int
    centers: Tuple[int, ...]                    # A^-1: points whose tile covers e
    tiles: Dict[int, Tuple[int, ...]]           # c -> cA
    choosers: Dict[int, Tuple[int, ...]]        # g -> gA^-1
    regions: Dict[int, Tuple[int, ...]]         # c -> cAA^-1


@lru_cache(maxsize=64)
def _plan(cell_set: CellSet) -> _TilingPlan:
    window = tuple(sorted(determinacy_window(cell_set)))
    index = {g: i for i, g in enumerate(window)}
    a = sorted(cell_set.elements)
    a_inv = sorted(inverse_set(a))
    a_a_inv = set_product(a, a_inv)

    centers = tuple(index[c] for c in a_inv)
    tiles: Dict[int, Tuple[int, ...]] = {}
    choosers: Dict[int, Tuple[int, ...]] = {}
    regions: Dict[int, Tuple[int, ...]] = {}
    for c in a_inv:
        tile = sorted(translate_set(c, a))
        tiles[index[c]] = tuple(index[g] for g in tile)
        regions[index[c]] = tuple(sorted(index[g] for g in translate_set(c, a_a_inv)))
        for g in tile:
            if index[g] not in choosers:
                choosers[index[g]] = tuple(sorted(index[h] for h in translate_set(g, a_inv)))

    logging.debug("tiling plan for |A|=%d: window %d, %d centers", len(a), len(window), len(centers))
    return _TilingPlan(
        window=window,
        identity=index[cell_set.spec.identity()],
        centers=centers,
        tiles=tiles,
        choosers=choosers,
        regions=regions,
    )


def _first_by_mark(candidates: Iterable[int], marks: np.ndarray) -> int:
    return min(candidates, key=lambda i: (marks[i], i))


def _cell_from_draw(cell_set: CellSet, mask: np.ndarray, marks: np.ndarray) -> RootCell:
    plan = _plan(cell_set)
    e = plan.identity
    root = plan.window[e]

    if mask[e]:
        center = e
    else:
        covering = [c for c in plan.centers if mask[c]]
        if not covering:
            return RootCell(members=frozenset({root}), root=root)
        center = _first_by_mark(covering, marks)

    members = [center]
    for g in plan.tiles[center]:
        if g == center or mask[g]:
            continue
        if _first_by_mark((h for h in plan.choosers[g] if mask[h]), marks) == center:
            members.append(g)

    return RootCell(
        members=frozenset(plan.window[i] for i in members),
        root=root,
        center=plan.window[center],
        in_pi_class=True,
    )


def sample_root_cell(cell_set: CellSet, seed: SeedSpec) -> RootCell:
    field = BernoulliField(cell_set.intensity, seed)
    mask, marks = field.draw(_plan(cell_set).window)
    return _cell_from_draw(cell_set, mask, marks)


# --------- Whole-window view --------- #

def choose_center(g: Element, config: MarkedConfiguration, cell_set: CellSet) -> Element:
    """
    h_g: g itself when g is in Pi or in no tile, otherwise the least-marked
    point of Pi whose tile covers g.
    """
    if g in config:
        return g
    covering = translate_set(g, inverse_set(cell_set.elements))
    missing = [x for x in covering if x not in config.window]
    if missing:
        raise PreconditionError(f"window does not contain gA^-1 for g = {format_element(g)}")
    points = [x for x in covering if x in config]
    if not points:
        return g
    return min(points, key=lambda x: (config.mark(x), x.form))


def tiling_partition(config: MarkedConfiguration, cell_set: CellSet) -> Dict[Element, Element]:
    """Class label h_g for every window element whose label the window fixes."""
    a_inv = inverse_set(cell_set.elements)
    labels: Dict[Element, Element] = {}
    for g in config.window.elements:
        if all(x in config.window for x in translate_set(g, a_inv)):
            labels[g] = choose_center(g, config, cell_set)
    return labels


def root_cell_from_configuration(
    config: MarkedConfiguration,
    cell_set: CellSet,
    root: Optional[Element] = None,
) -> RootCell:
    """Cell of `root` (default e) in a fixed configuration; needs root*W in the window."""
    root = config.window.spec.identity() if root is None else root
    h = choose_center(root, config, cell_set)
    if h not in config:
        return RootCell(members=frozenset({root}), root=root)
    members = {h}
    for g in translate_set(h, cell_set.elements):
        if g not in config and choose_center(g, config, cell_set) == h:
            members.add(g)
    return RootCell(members=frozenset(members), root=root, center=h, in_pi_class=True)


@dataclass(frozen=True)
class TilingSampler:
    cell_set: CellSet

    @property
    def spec(self) -> GroupSpec:
        return self.cell_set.spec

    @property
    def cell_support(self) -> FrozenSet[Element]:
        return self.cell_set.elements

    def sample(self, seed: SeedSpec) -> RootCell:
        return sample_root_cell(self.cell_set, seed)

    def describe(self) -> Dict[str, Any]:
        return {"process": "fire-tiling", **self.cell_set.describe()}


# --------- Exact oracle --------- #

@dataclass(frozen=True)
class ExactLaw:
    cell_set: CellSet
    probabilities: Dict[Tuple[bool, int], float]

    def total(self) -> float:
        return float(sum(self.probabilities.values()))

    def p_in_pi(self) -> float:
        return float(sum(p for (in_pi, _), p in self.probabilities.items() if in_pi))

    def expected_size_in_pi(self) -> float:
        """E[|o|_R 1{o in [Pi]_R}]."""
        return float(sum(size * p for (in_pi, size), p in self.probabilities.items() if in_pi))

    def conditional_large(self) -> Optional[float]:
        """P[|o|_R / |A| >= (1-2delta)^2 | o in [Pi]_R]; None without conditioning mass."""
        mass = self.p_in_pi()
        if mass == 0.0:
            return None
        cut = large_cell_threshold(self.cell_set)
        hit = sum(p for (in_pi, size), p in self.probabilities.items() if in_pi and size >= cut)
        return float(hit / mass)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "law": [
                {"in_pi_class": in_pi, "size": size, "probability": p}
                for (in_pi, size), p in sorted(self.probabilities.items())
            ],
            "p_in_pi": self.p_in_pi(),
            "expected_size_in_pi": self.expected_size_in_pi(),
            "conditional_large": self.conditional_large(),
            "total": self.total(),
        }


def _bits(mask: int) -> List[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _submasks(mask: int) -> Iterable[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def exact_distribution(cell_set: CellSet) -> ExactLaw:
    """
    Exact law of (in_pi_class, |o|_R) by enumeration of Pi n W and of the
    relative mark order that matters. For a center c only the set B of points
    of cAA^-1 marked below c changes the cell, and B has probability
    |B|!(t-|B|)!/(t+1)! among t competitors.
    """
    plan = _plan(cell_set)
    n = len(plan.window)
    n_centers = len(plan.centers)
    subset_cap = get_budget(2**DEFAULT_ORACLE_WINDOW)
    if 2**n > subset_cap or n_centers > DEFAULT_ORACLE_CENTERS:
        raise InfeasibleError(
            "exact oracle infeasible",
            window=n,
            window_cap=subset_cap.bit_length() - 1,
            centers=n_centers,
            centers_cap=DEFAULT_ORACLE_CENTERS,
        )

    q = cell_set.delta / cell_set.size
    e_bit = 1 << plan.identity
    center_mask = sum(1 << c for c in plan.centers)
    region_mask = {c: sum(1 << g for g in r) for c, r in plan.regions.items()}
    chooser_mask = {g: sum(1 << h for h in hs) for g, hs in plan.choosers.items()}
    powers_in = [q**k for k in range(n + 1)]
    powers_out = [(1.0 - q) ** k for k in range(n + 1)]
    law: Dict[Tuple[bool, int], float] = {}

    for s in range(1 << n):
        k = bin(s).count("1")
        weight = powers_in[k] * powers_out[n - k]
        if s & e_bit:
            centers, forbidden = [plan.identity], 0
        else:
            centers, forbidden = [c for c in plan.centers if s >> c & 1], center_mask
        if not centers:
            law[(False, 1)] = law.get((False, 1), 0.0) + weight
            continue
        for c in centers:
            rivals = s & region_mask[c] & ~(1 << c)
            t = bin(rivals).count("1")
            open_tile = [g for g in plan.tiles[c] if g != c and not s >> g & 1]
            for before in _submasks(rivals):
                if before & forbidden:
                    continue
                b = bin(before).count("1")
                p_order = factorial(b) * factorial(t - b) / factorial(t + 1)
                size = 1 + sum(1 for g in open_tile if not chooser_mask[g] & before)
                law[(True, size)] = law.get((True, size), 0.0) + weight * p_order

    return ExactLaw(cell_set, law)


# --------- Bounds --------- #

class BoundId(str, Enum):
    IN_PI = "i"
    SIZE = "ii"
    LARGE = "iii"
    UPPER = "upper"
    MASS_TRANSPORT = "mass_transport"
    JOINT = "joint"
    CONFLICT = "conflict"


@dataclass(frozen=True)
class BoundReport:
    bound_id: BoundId
    target_bound: float
    estimate: Optional[Estimate]
    passes: bool
    status: str
    lower_clears: bool = False
    informational: bool = False
    exact: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "bound_id": self.bound_id.value,
            "bound": self.target_bound,
            "passes": self.passes,
            "status": self.status,
            "lower_clears": self.lower_clears,
            "informational": self.informational,
        }
        if self.estimate is not None:
            lo, hi = self.estimate.limits(REPORT_LEVEL)
            out["estimate"] = self.estimate.to_dict()
            out["ci99"] = [lo, hi]
        if self.exact is not None:
            out["exact"] = self.exact
        return out


def bound_in_pi(delta: float) -> float:
    return delta - delta**2


def bound_size(cell_set: CellSet) -> float:
    return cell_set.size * (1.0 - 2.0 * cell_set.delta)


def bound_large(delta: float) -> float:
    return 4.0 * delta**2 * (1.0 - 2.0 * delta) ** 2


def large_cell_threshold(cell_set: CellSet) -> float:
    """Cells of at least this many elements count as large: (1-2delta)^2 |A|."""
    return cell_set.size * (1.0 - 2.0 * cell_set.delta) ** 2 - 1e-12


def prop_lower_bound(delta: float) -> float:
    """P[|o|_R >= (1-eps)|A|] >= (delta - delta^2) 4 delta^2 (1-2delta)^2."""
    return bound_in_pi(delta) * bound_large(delta)


def delta_for_epsilon(epsilon: float) -> float:
    if not 0.0 < epsilon < 1.0:
        raise PreconditionError(f"epsilon must lie in (0, 1), got {epsilon}")
    return (1.0 - sqrt(1.0 - epsilon)) / 2.0


def conflict_probability(cell_set: CellSet) -> float:
    """P[g conflictive and e in Pi] for g in A: q(1 - (1-q)^(|A|-1))."""
    q = cell_set.delta / cell_set.size
    return q * (1.0 - (1.0 - q) ** (cell_set.size - 1))


def _lower_report(bound_id: BoundId, bound: float, est: Optional[Estimate], informational=False) -> BoundReport:
    if est is None:
        return BoundReport(bound_id, bound, None, passes=False, status=INSUFFICIENT,
                           informational=informational)
    lo, hi = est.limits(REPORT_LEVEL)
    passes = hi >= bound
    return BoundReport(
        bound_id,
        bound,
        est,
        passes=passes,
        status="pass" if passes else "fail",
        lower_clears=lo >= bound,
        informational=informational,
    )


@dataclass(frozen=True)
class RootOutcomes:
    """Per-sample indicators of a batch of root cells, in stream order."""

    in_pi: np.ndarray
    size: np.ndarray
    at_point: np.ndarray
    master_seed: int

    @property
    def n(self) -> int:
        return len(self.in_pi)


def _root_outcome(cell_set: CellSet, seed: SeedSpec) -> Tuple[bool, int, bool]:
    cell = sample_root_cell(cell_set, seed)
    return cell.in_pi_class, cell.size, cell.center == cell.root


def sample_outcomes(cell_set: CellSet, n_samples: int, seed: SeedSpec, workers: int = 1) -> RootOutcomes:
    if n_samples < 1:
        raise PreconditionError(f"need at least one sample, got {n_samples}")
    outcomes = run_streams(partial(_root_outcome, cell_set), n_samples, seed, workers, "root cells")
    return RootOutcomes(
        in_pi=np.array([o[0] for o in outcomes], dtype=np.float64),
        size=np.array([o[1] for o in outcomes], dtype=np.float64),
        at_point=np.array([o[2] for o in outcomes], dtype=np.float64),
        master_seed=seed.master_seed,
    )


def bound_reports(cell_set: CellSet, outcomes: RootOutcomes) -> List[BoundReport]:
    in_pi, size, at_point = outcomes.in_pi, outcomes.size, outcomes.at_point
    large = (size >= large_cell_threshold(cell_set)).astype(np.float64)
    master = outcomes.master_seed

    p_in = mean_estimate(in_pi, master)
    reports = [
        _lower_report(BoundId.IN_PI, bound_in_pi(cell_set.delta), p_in),
        _lower_report(BoundId.SIZE, bound_size(cell_set), ratio_estimate(size * in_pi, in_pi, master)),
        _lower_report(BoundId.LARGE, bound_large(cell_set.delta), ratio_estimate(large * in_pi, in_pi, master)),
    ]

    lo, _ = p_in.limits(REPORT_LEVEL)
    reports.append(BoundReport(BoundId.UPPER, cell_set.delta, p_in, passes=lo <= cell_set.delta,
                               status="pass" if lo <= cell_set.delta else "fail", informational=True))

    diff = paired_difference(in_pi, size * at_point, master)
    d_lo, d_hi = diff.limits(REPORT_LEVEL)
    balanced = d_lo <= 0.0 <= d_hi
    reports.append(BoundReport(BoundId.MASS_TRANSPORT, 0.0, diff, passes=balanced,
                               status="pass" if balanced else "fail", informational=True))

    reports.append(_lower_report(BoundId.JOINT, prop_lower_bound(cell_set.delta),
                                 mean_estimate(large * in_pi, master), informational=True))

    exact = conflict_probability(cell_set)
    conflict_bound = cell_set.delta**2 / cell_set.size
    ok = exact <= conflict_bound or isclose(exact, conflict_bound)
    reports.append(BoundReport(BoundId.CONFLICT, conflict_bound, None, passes=ok,
                               status="pass" if ok else "fail", informational=True, exact=exact))

    for r in reports:
        logging.info("bound %-14s %-6s bound=%.6g", r.bound_id.value, r.status, r.target_bound)
    return reports


def verify_lemma_bounds(
    cell_set: CellSet,
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
) -> List[BoundReport]:
    """
    Monte Carlo check of
        (i)   P[o in [Pi]_R]                          >= delta - delta^2
        (ii)  E[|o|_R | o in [Pi]_R]                  >= |A|(1 - 2 delta)
        (iii) P[|o|_R/|A| >= (1-2delta)^2 | o in [Pi]_R] >= 4 delta^2 (1-2delta)^2
    followed by informational lines (upper, mass_transport, joint, conflict).
    A bound passes when the 99% interval is not entirely below it.
    """
    if n_samples < MIN_VERIFY_SAMPLES:
        raise PreconditionError(f"need at least {MIN_VERIFY_SAMPLES} samples, got {n_samples}")
    return bound_reports(cell_set, sample_outcomes(cell_set, n_samples, seed, workers))


def lemma_bounds_pass(reports: Iterable[BoundReport]) -> bool:
    return all(r.passes or r.status == INSUFFICIENT for r in reports if not r.informational)


def oracle_comparison(law: ExactLaw, outcomes: RootOutcomes) -> Dict[str, Any]:
    """Monte Carlo estimates against exact values, deviations in standard errors."""
    master = outcomes.master_seed
    pairs = {
        "p_in_pi": (law.p_in_pi(), mean_estimate(outcomes.in_pi, master)),
        "expected_size_in_pi": (law.expected_size_in_pi(), mean_estimate(outcomes.size * outcomes.in_pi, master)),
    }
    out: Dict[str, Any] = {}
    for name, (exact, est) in pairs.items():
        deviation = (est.value - exact) / est.stderr if est.stderr > 0 else 0.0
        out[name] = {
            "exact": exact,
            "estimate": est.to_dict(),
            "deviation_se": deviation,
            "within_4se": abs(est.value - exact) <= 4.0 * est.stderr or isclose(est.value, exact),
        }
    return out
