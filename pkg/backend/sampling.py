# backend/sampling.py
"""
Seedable sampling of marked Bernoulli subsets of a group.

Randomness is keyed by element normal form, never by enumeration index:
the pair (membership uniform, mark) of an element g under seed
(master_seed, stream_index) is a pure function of those three values.
That makes restriction to sub-windows exact, makes extension of a window
consistent with fresh sampling, and lets a translation be expressed as a
re-keying of the stream.
"""

import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .cells import RootCell, RootCellSampler
from .errors import GroupMismatchError, PreconditionError
from .groups import (
    CayleyWindow,
    Element,
    GroupSpec,
    ball,
    inverse,
    multiply,
)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_GOLDEN2 = np.uint64((2 * 0x9E3779B97F4A7C15) % 2**64)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_UNIT = 2.0**-53


# --------- Seeds and element keys --------- #

@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise PreconditionError(f"master seed must fit in 64 bits, got {self.master_seed}")
        if self.stream_index < 0:
            raise PreconditionError(f"stream index must be >= 0, got {self.stream_index}")

    def key(self, *path: int) -> int:
        """64-bit key of this stream (optionally of a sub-path below it)."""
        return _stream_key(self.master_seed, self.stream_index, tuple(path))

    def offset(self, i: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.stream_index + i)


@lru_cache(maxsize=1 << 16)
def _stream_key(master_seed: int, stream_index: int, path: Tuple[int, ...]) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_index,) + path)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@lru_cache(maxsize=1 << 18)
def element_key(g: Element) -> int:
    text = f"{g.spec}|{','.join(str(x) for x in g.form)}"
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def element_keys(elements: Sequence[Element]) -> np.ndarray:
    return np.fromiter((element_key(g) for g in elements), dtype=np.uint64, count=len(elements))


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer, vectorised
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def keyed_uniforms(stream_key: int, keys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two independent 53-bit uniforms per element key: (membership, mark)."""
    with np.errstate(over="ignore"):
        h = _mix64(_mix64(keys + _GOLDEN) ^ np.uint64(stream_key))
        u = _mix64(h + _GOLDEN)
        m = _mix64(h + _GOLDEN2)
    return (u >> np.uint64(11)).astype(np.float64) * _UNIT, (m >> np.uint64(11)).astype(np.float64) * _UNIT


@dataclass(frozen=True)
class IntensitySpec:
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise PreconditionError(f"intensity p must lie in the open interval (0, 1), got {self.p}")


# --------- Fields: whole-group configurations --------- #

@dataclass(frozen=True)
class BernoulliField:
    """
    The full marked Bernoulli configuration on the group, evaluated lazily.
    Element g is looked up under the key of rekey*g (rekey=None means e).
    """

    intensity: IntensitySpec
    seed: SeedSpec
    rekey: Optional[Element] = None

    @cached_property
    def stream_key(self) -> int:
        return self.seed.key()

    def draw(self, elements: Sequence[Element]) -> Tuple[np.ndarray, np.ndarray]:
        if self.rekey is not None:
            elements = [multiply(self.rekey, g) for g in elements]
        u, marks = keyed_uniforms(self.stream_key, element_keys(elements))
        return u < self.intensity.p, marks

    def contains(self, g: Element) -> bool:
        return bool(self.draw([g])[0][0])

    def mark(self, g: Element) -> float:
        return float(self.draw([g])[1][0])

    def translate(self, gamma: Element) -> "BernoulliField":
        """The field pushed forward by left multiplication with gamma."""
        shift = inverse(gamma)
        rekey = shift if self.rekey is None else multiply(self.rekey, shift)
        return BernoulliField(self.intensity, self.seed, rekey)

    def restrict(self, window: CayleyWindow) -> "MarkedConfiguration":
        return _restrict(self, window, self.intensity, self.seed, self.rekey)


@dataclass(frozen=True)
class FixedField:
    """An explicit finite marked configuration (everything else is empty)."""

    points: Tuple[Tuple[Element, float], ...]

    @classmethod
    def from_marks(cls, marks: Mapping[Element, float]) -> "FixedField":
        return cls(tuple(sorted(marks.items())))

    @cached_property
    def lookup(self) -> Dict[Element, float]:
        return dict(self.points)

    def draw(self, elements: Sequence[Element]) -> Tuple[np.ndarray, np.ndarray]:
        mask = np.array([g in self.lookup for g in elements], dtype=bool)
        marks = np.array([self.lookup.get(g, 0.0) for g in elements], dtype=np.float64)
        return mask, marks

    def contains(self, g: Element) -> bool:
        return g in self.lookup

    def mark(self, g: Element) -> float:
        return self.lookup.get(g, 0.0)

    def translate(self, gamma: Element) -> "FixedField":
        return FixedField.from_marks({multiply(gamma, g): m for g, m in self.points})

    def restrict(self, window: CayleyWindow) -> "MarkedConfiguration":
        return _restrict(self, window, None, None, None)


# --------- Window configurations --------- #

@dataclass(frozen=True)
class MarkedConfiguration:
    window: CayleyWindow
    points: FrozenSet[Element]
    marks: Dict[Element, float]
    intensity: Optional[IntensitySpec] = None
    seed: Optional[SeedSpec] = None
    rekey: Optional[Element] = None

    def __post_init__(self):
        if set(self.marks) != set(self.points):
            raise ValueError("marks must be defined exactly on the points")
        if any(not 0.0 <= m <= 1.0 for m in self.marks.values()):
            raise ValueError("marks must lie in [0, 1]")
        if any(g not in self.window for g in self.points):
            raise ValueError("points must lie in the window")

    def __contains__(self, g: Element) -> bool:
        return g in self.points

    def mark(self, g: Element) -> float:
        return self.marks[g]


def _restrict(field, window, intensity, seed, rekey) -> MarkedConfiguration:
    mask, marks = field.draw(window.elements)
    points = {g: float(m) for g, keep, m in zip(window.elements, mask, marks) if keep}
    return MarkedConfiguration(
        window=window,
        points=frozenset(points),
        marks=points,
        intensity=intensity,
        seed=seed,
        rekey=rekey,
    )


def sample_marked(
    window: CayleyWindow,
    intensity: IntensitySpec,
    seed: SeedSpec,
    rekey: Optional[Element] = None,
) -> MarkedConfiguration:
    if len(window) == 0:
        raise PreconditionError("cannot sample on an empty window")
    if rekey is not None and rekey.spec != window.spec:
        raise GroupMismatchError(f"rekey element {rekey} is not in {window.spec}")
    return BernoulliField(intensity, seed, rekey).restrict(window)


def restrict_configuration(config: MarkedConfiguration, radius: int) -> MarkedConfiguration:
    window = ball(config.window.spec, config.window.center, radius)
    points = {g: m for g, m in config.marks.items() if g in window}
    return MarkedConfiguration(window, frozenset(points), points, config.intensity, config.seed, config.rekey)


def extend(config: MarkedConfiguration, new_radius: int, seed: SeedSpec) -> MarkedConfiguration:
    """
    Grow the window to new_radius. The old window is copied verbatim, the new
    ring is drawn from the element-keyed streams of `seed`.
    """
    old = config.window
    if new_radius <= old.radius:
        raise PreconditionError(f"new radius {new_radius} must exceed current radius {old.radius}")
    if config.intensity is None:
        raise PreconditionError("only sampled configurations can be extended")

    window = ball(old.spec, old.center, new_radius)
    ring = [g for g in window.elements if g not in old]
    mask, marks = BernoulliField(config.intensity, seed, config.rekey).draw(ring)

    points = dict(config.marks)
    points.update({g: float(m) for g, keep, m in zip(ring, mask, marks) if keep})
    logging.debug("extended window %d -> %d (%d new elements)", old.radius, new_radius, len(ring))
    return MarkedConfiguration(window, frozenset(points), points, config.intensity, seed, config.rekey)


def translate_configuration(config: MarkedConfiguration, gamma: Element) -> MarkedConfiguration:
    old = config.window
    window = ball(old.spec, multiply(gamma, old.center), old.radius)
    points = {multiply(gamma, g): m for g, m in config.marks.items()}
    rekey = None
    if config.seed is not None:
        shift = inverse(gamma)
        rekey = shift if config.rekey is None else multiply(config.rekey, shift)
    return MarkedConfiguration(window, frozenset(points), points, config.intensity, config.seed, rekey)


def mark_uniformity(marks: Iterable[float]) -> Tuple[float, float]:
    """Kolmogorov-Smirnov statistic and p-value of marks against U[0,1]."""
    values = np.asarray(list(marks), dtype=np.float64)
    result = stats.kstest(values, "uniform")
    return float(result.statistic), float(result.pvalue)


# --------- Coinduction from a coordinate subgroup --------- #

def _in_subgroup(g: Element, k: int) -> bool:
    return not any(g.form[k:])


def _embed(x: Element, tail: Element, k: int) -> Element:
    head = x.form[:k]
    return tail.spec.element(head + tail.form[k:])


def coinduce_cells(
    subgroup_rank: int,
    base_sampler: RootCellSampler,
    window: CayleyWindow,
    seed: SeedSpec,
) -> Dict[Element, RootCell]:
    """
    Root cells of the coinduced relation at every coset representative met by
    the window. Cosets of Z^k (first k coordinates) are indexed by the last
    d-k coordinates; each coset draws its own copy of the base relation from a
    substream keyed by its representative.
    """
    spec: GroupSpec = window.spec
    k = subgroup_rank
    if not spec.is_abelian:
        raise PreconditionError("coinduction is implemented for Z^d only")
    if not 1 <= k <= spec.rank:
        raise PreconditionError(f"subgroup rank must lie in [1, {spec.rank}], got {k}")
    base_spec = base_sampler.spec
    if not base_spec.is_abelian or base_spec.rank not in (k, spec.rank):
        raise PreconditionError(f"base sampler lives on {base_spec}, expected z:{k} or {spec}")
    if base_spec.rank != k:
        outside = [g for g in base_sampler.cell_support if not _in_subgroup(g, k)]
        if outside:
            raise PreconditionError(
                f"cell set is not contained in the subgroup Z^{k}: {sorted(str(g) for g in outside)}"
            )

    tails = sorted({spec.element((0,) * k + g.form[k:]) for g in window.elements})
    cells: Dict[Element, RootCell] = {}
    for tail in tails:
        sub_seed = SeedSpec(seed.key(element_key(tail)), 0)
        base = base_sampler.sample(sub_seed)
        members = []
        for x in base.members:
            if base_spec.rank != k and not _in_subgroup(x, k):
                raise PreconditionError(f"base cell member {x} left the subgroup Z^{k}")
            members.append(_embed(x, tail, k))
        center = None if base.center is None else _embed(base.center, tail, k)
        cells[tail] = RootCell(
            members=frozenset(members),
            root=_embed(base.root, tail, k),
            center=center,
            in_pi_class=base.in_pi_class,
            determined=base.determined,
        )
    return cells


def coinduce(
    subgroup_rank: int,
    base_sampler: RootCellSampler,
    window: CayleyWindow,
    seed: SeedSpec,
) -> RootCell:
    identity = window.spec.identity()
    if identity not in window:
        raise PreconditionError("the window must contain the identity to report its cell")
    cells = coinduce_cells(subgroup_rank, base_sampler, window, seed)
    return cells[identity]
