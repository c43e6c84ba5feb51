# backend/voronoi.py
"""
Bernoulli Voronoi tessellation: every element joins the nearest point of a
Bernoulli(p) set Pi in the word metric; ties between equally near points go
to the point with the smaller mark (then the smaller normal form).

The root cell is found adaptively. Spheres around the root are revealed one
at a time; an element y is a certified member of the cell of c once every
unrevealed element is provably farther from y than c is, i.e. once the
revealed radius R satisfies R >= d(root, y) + d(y, c).
"""

import logging
from collections import deque
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

import numpy as np
import pandas as pd

from .cells import RootCell
from .errors import PreconditionError
from .estimates import Estimate, mean_estimate, run_streams
from .groups import Element, GroupSpec, ball_size, format_element, multiply, spheres, word_distance
from .sampling import BernoulliField, IntensitySpec, SeedSpec
from .settings import DEFAULT_BALL_CAP, get_budget

DEFAULT_R_MAX = 50
MIN_IDENTITY_SAMPLES = 10**3
UNDETERMINED_WARNING = 0.10
IDENTITY_TOLERANCE_SE = 4.0


@dataclass(frozen=True)
class BvtParams:
    group: GroupSpec
    p: IntensitySpec
    r_max: int = DEFAULT_R_MAX

    def __post_init__(self):
        if self.r_max < 1:
            raise PreconditionError(f"r_max must be >= 1, got {self.r_max}")

    def describe(self) -> Dict[str, Any]:
        return {"group": str(self.group), "p": self.p.p, "r_max": self.r_max}


@dataclass(frozen=True)
class VoronoiRootCell:
    cell: RootCell
    center: Optional[Element]
    nearest_distance: Optional[int]
    determined: bool
    sampled_radius: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.cell.to_dict(),
            "nearest_distance": self.nearest_distance,
            "sampled_radius": self.sampled_radius,
        }


# --------- Adaptive growth --------- #

class _RevealedBall:
    """Points of a field inside the growing ball B_R(root)."""

    def __init__(self, field, root: Element, r_max: int):
        self.field = field
        self.root = root
        self.r_max = r_max
        self.cap = get_budget(DEFAULT_BALL_CAP)
        self.radius = -1
        self.points: List[Element] = []
        self.marks: List[float] = []
        self._layers: Iterator[List[Element]] = spheres(root.spec, root)
        self._coords: Optional[np.ndarray] = None

    def grow_to(self, radius: int) -> bool:
        """Reveal up to `radius`; False when r_max or the element cap stops us."""
        while self.radius < radius:
            if self.radius + 1 > self.r_max:
                return False
            if ball_size(self.root.spec, self.radius + 1) > self.cap:
                logging.debug("ball cap %d reached at radius %d", self.cap, self.radius + 1)
                return False
            layer = next(self._layers)
            mask, marks = self.field.draw(layer)
            for g, keep, m in zip(layer, mask, marks):
                if keep:
                    self.points.append(g)
                    self.marks.append(float(m))
            self._coords = None
            self.radius += 1
        return True

    def distances(self, y: Element) -> np.ndarray:
        if not self.points:
            return np.zeros(0, dtype=np.int64)
        if y.spec.is_abelian:
            if self._coords is None:
                self._coords = np.array([g.form for g in self.points], dtype=np.int64)
            return np.abs(self._coords - np.array(y.form, dtype=np.int64)).sum(axis=1)
        return np.array([word_distance(y, h) for h in self.points], dtype=np.int64)

    def beats(self, y: Element, center: Element, center_mark: float) -> bool:
        """Is there a revealed point strictly preferred to center at y?"""
        dist = self.distances(y)
        dc = word_distance(y, center)
        if np.any(dist < dc):
            return True
        rival_key = (center_mark, center.form)
        for i in np.flatnonzero(dist == dc):
            if (self.marks[i], self.points[i].form) < rival_key:
                return True
        return False


def _partial_cell(root: Element, members: Set[Element], center, radius, nearest) -> VoronoiRootCell:
    cell = RootCell(
        members=frozenset(members | {root}),
        root=root,
        center=center,
        in_pi_class=center is not None,
        determined=False,
    )
    return VoronoiRootCell(cell, center, nearest, False, radius)


@lru_cache(maxsize=1 << 14)
def bvt_cell_at(field, root: Element, params: BvtParams) -> VoronoiRootCell:
    """Certified cell of `root` in a fixed marked field."""
    revealed = _RevealedBall(field, root, params.r_max)

    # nearest center: all points at distance <= R are known once R is revealed
    if not revealed.grow_to(1):
        return _partial_cell(root, set(), None, revealed.radius, None)
    while not revealed.points:
        if not revealed.grow_to(revealed.radius + 1):
            return _partial_cell(root, set(), None, revealed.radius, None)
    dist = revealed.distances(root)
    nearest = int(dist.min())
    tied = np.flatnonzero(dist == nearest)
    best = min(tied, key=lambda i: (revealed.marks[i], revealed.points[i].form))
    center, center_mark = revealed.points[best], revealed.marks[best]

    gens = root.spec.generators()
    members: Set[Element] = set()
    queued = {center}
    queue = deque([center])
    while queue:
        y = queue.popleft()
        while True:
            if revealed.beats(y, center, center_mark):
                break
            need = word_distance(root, y) + word_distance(y, center)
            if revealed.radius >= need:
                members.add(y)
                for s in gens:
                    z = multiply(y, s)
                    if z not in queued:
                        queued.add(z)
                        queue.append(z)
                break
            if not revealed.grow_to(need):
                return _partial_cell(root, members, center, revealed.radius, nearest)

    cell = RootCell(members=frozenset(members), root=root, center=center, in_pi_class=True)
    return VoronoiRootCell(cell, center, nearest, True, revealed.radius)


def sample_bvt_root_cell(params: BvtParams, seed: SeedSpec) -> VoronoiRootCell:
    field = BernoulliField(params.p, seed)
    return bvt_cell_at(field, params.group.identity(), params)


@dataclass(frozen=True)
class BvtSampler:
    params: BvtParams

    @property
    def spec(self) -> GroupSpec:
        return self.params.group

    @property
    def cell_support(self) -> FrozenSet[Element]:
        return frozenset()

    def sample(self, seed: SeedSpec) -> RootCell:
        return sample_bvt_root_cell(self.params, seed).cell

    def describe(self) -> Dict[str, Any]:
        return {"process": "bvt", **self.params.describe()}


# --------- Statistics --------- #

def _bvt_outcome(params: BvtParams, seed: SeedSpec) -> Tuple[bool, int, bool]:
    result = sample_bvt_root_cell(params, seed)
    return result.determined, result.cell.size, result.nearest_distance == 0


@dataclass(frozen=True)
class BvtIntensityReport:
    p: float
    estimate: Optional[Estimate]
    passes: bool
    n_samples: int
    undetermined: int
    finiteness: Optional[Estimate]
    finiteness_passes: bool

    @property
    def undetermined_fraction(self) -> float:
        return self.undetermined / self.n_samples

    @property
    def bias_bound(self) -> float:
        # 1/|cell| lies in [0, 1], so dropped samples move the mean by at most this
        return self.undetermined_fraction

    @property
    def warning(self) -> bool:
        return self.undetermined_fraction > UNDETERMINED_WARNING

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "estimate": None if self.estimate is None else self.estimate.to_dict(),
            "passes": self.passes,
            "n_samples": self.n_samples,
            "undetermined": self.undetermined,
            "undetermined_fraction": self.undetermined_fraction,
            "bias_bound": self.bias_bound,
            "warning": self.warning,
            "finiteness": None if self.finiteness is None else self.finiteness.to_dict(),
            "finiteness_passes": self.finiteness_passes,
        }


def bvt_intensity_identity(
    params: BvtParams,
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
) -> BvtIntensityReport:
    """
    Mass transport gives E[1/|cell(o)|] = p and E[|V(e)| 1{e in Pi}] = 1;
    both are estimated over determined samples.
    """
    if n_samples < MIN_IDENTITY_SAMPLES:
        raise PreconditionError(f"need at least {MIN_IDENTITY_SAMPLES} samples, got {n_samples}")
    outcomes = run_streams(partial(_bvt_outcome, params), n_samples, seed, workers, "bvt cells")
    done = [(size, at_point) for determined, size, at_point in outcomes if determined]
    undetermined = n_samples - len(done)
    p = params.p.p

    estimate = finiteness = None
    passes = finiteness_passes = False
    if done:
        sizes = np.array([s for s, _ in done], dtype=np.float64)
        at_point = np.array([a for _, a in done], dtype=np.float64)
        estimate = mean_estimate(1.0 / sizes, seed.master_seed)
        finiteness = mean_estimate(sizes * at_point, seed.master_seed)
        passes = abs(estimate.value - p) <= IDENTITY_TOLERANCE_SE * estimate.stderr
        finiteness_passes = abs(finiteness.value - 1.0) <= IDENTITY_TOLERANCE_SE * finiteness.stderr

    report = BvtIntensityReport(p, estimate, passes, n_samples, undetermined, finiteness, finiteness_passes)
    if report.warning:
        logging.warning(
            "%.1f%% of samples undetermined at r_max=%d; raise --rmax",
            100 * report.undetermined_fraction,
            params.r_max,
        )
    return report


@dataclass(frozen=True)
class BvtHistogram:
    counts: Dict[int, int]
    n_samples: int
    undetermined: int

    @property
    def masses(self) -> Dict[int, float]:
        return {size: c / self.n_samples for size, c in sorted(self.counts.items())}

    @property
    def undetermined_fraction(self) -> float:
        return self.undetermined / self.n_samples

    def to_dict(self) -> Dict[str, Any]:
        return {
            "masses": {str(k): v for k, v in self.masses.items()},
            "n_samples": self.n_samples,
            "undetermined": self.undetermined,
            "undetermined_fraction": self.undetermined_fraction,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"size": size, "count": self.counts[size], "probability": mass}
            for size, mass in self.masses.items()
        ]
        return pd.DataFrame(rows, columns=["size", "count", "probability"])


def bvt_cell_size_histogram(
    params: BvtParams,
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
) -> BvtHistogram:
    if n_samples < 1:
        raise PreconditionError(f"need at least one sample, got {n_samples}")
    outcomes = run_streams(partial(_bvt_outcome, params), n_samples, seed, workers, "bvt cells")
    counts: Dict[int, int] = {}
    undetermined = 0
    for determined, size, _ in outcomes:
        if not determined:
            undetermined += 1
            continue
        counts[size] = counts.get(size, 0) + 1
    return BvtHistogram(counts, n_samples, undetermined)


def format_cell(result: VoronoiRootCell) -> str:
    center = "-" if result.center is None else format_element(result.center)
    state = "determined" if result.determined else "undetermined"
    return f"center {center}, |cell| = {result.cell.size}, R = {result.sampled_radius}, {state}"
