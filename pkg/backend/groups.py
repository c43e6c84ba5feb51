# backend/groups.py
"""
Exact arithmetic on the two group families irelab supports:

    z:d   the free abelian group Z^d, generators +-e_i
    f:k   the free group F_k, generators a_1^{+-1} .. a_k^{+-1}

Elements are stored as canonical normal forms, so equality and hashing are
structural:
    Z^d  -> tuple of d ints
    F_k  -> reduced tuple of nonzero ints, +i for a_i and -i for a_i^{-1}
"""

from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from math import comb
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from .errors import GroupMismatchError, ParseError, SizeLimitError
from .settings import DEFAULT_BALL_CAP, get_budget

LETTERS = "abcdefghijklmnopqrstuvwxyz"


class Family(str, Enum):
    FREE_ABELIAN = "z"
    FREE = "f"


@dataclass(frozen=True)
class GroupSpec:
    family: Family
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ParseError(f"group rank must be >= 1, got {self.rank}")
        if self.family is Family.FREE and self.rank > len(LETTERS):
            raise ParseError(f"free groups support at most {len(LETTERS)} generators")

    def __str__(self) -> str:
        return f"{self.family.value}:{self.rank}"

    @property
    def degree(self) -> int:
        """Degree of the Cayley graph for the standard generators."""
        return 2 * self.rank

    @property
    def is_abelian(self) -> bool:
        return self.family is Family.FREE_ABELIAN

    def identity(self) -> "Element":
        if self.is_abelian:
            return Element(self, (0,) * self.rank)
        return Element(self, ())

    def generators(self) -> Tuple["Element", ...]:
        gens: List[Element] = []
        for i in range(self.rank):
            if self.is_abelian:
                for sign in (1, -1):
                    form = [0] * self.rank
                    form[i] = sign
                    gens.append(Element(self, tuple(form)))
            else:
                gens.append(Element(self, (i + 1,)))
                gens.append(Element(self, (-(i + 1),)))
        return tuple(gens)

    def element(self, form: Iterable[int]) -> "Element":
        """Build an element from a (possibly unreduced) form."""
        form = tuple(int(x) for x in form)
        if self.is_abelian:
            if len(form) != self.rank:
                raise ParseError(f"{self} elements need {self.rank} coordinates, got {len(form)}")
            return Element(self, form)
        reduced: List[int] = []
        for letter in form:
            if letter == 0 or abs(letter) > self.rank:
                raise ParseError(f"letter {letter} is not a generator of {self}")
            if reduced and reduced[-1] == -letter:
                reduced.pop()
            else:
                reduced.append(letter)
        return Element(self, tuple(reduced))


@total_ordering
@dataclass(frozen=True)
class Element:
    spec: GroupSpec
    form: Tuple[int, ...]

    def __lt__(self, other: "Element") -> bool:
        _check_same(self, other)
        return self.form < other.form

    def __mul__(self, other: "Element") -> "Element":
        return multiply(self, other)

    def __str__(self) -> str:
        return format_element(self)

    def is_identity(self) -> bool:
        if self.spec.is_abelian:
            return not any(self.form)
        return not self.form


def _check_same(g: Element, h: Element) -> None:
    if g.spec != h.spec:
        raise GroupMismatchError(f"cannot combine elements of {g.spec} and {h.spec}")


# --------- Arithmetic --------- #

def multiply(g: Element, h: Element) -> Element:
    _check_same(g, h)
    if g.spec.is_abelian:
        return Element(g.spec, tuple(a + b for a, b in zip(g.form, h.form)))
    word = list(g.form)
    for letter in h.form:
        if word and word[-1] == -letter:
            word.pop()
        else:
            word.append(letter)
    return Element(g.spec, tuple(word))


def inverse(g: Element) -> Element:
    if g.spec.is_abelian:
        return Element(g.spec, tuple(-a for a in g.form))
    return Element(g.spec, tuple(-letter for letter in reversed(g.form)))


def word_length(g: Element) -> int:
    if g.spec.is_abelian:
        return sum(abs(a) for a in g.form)
    return len(g.form)


def word_distance(g: Element, h: Element) -> int:
    """d(g, h) = |g^{-1} h|; left-invariant for both families."""
    _check_same(g, h)
    if g.spec.is_abelian:
        return sum(abs(b - a) for a, b in zip(g.form, h.form))
    # strip the common prefix of the two reduced words
    common = 0
    for a, b in zip(g.form, h.form):
        if a != b:
            break
        common += 1
    return len(g.form) + len(h.form) - 2 * common


def set_product(left: Iterable[Element], right: Iterable[Element]) -> FrozenSet[Element]:
    right = list(right)
    return frozenset(multiply(a, b) for a in left for b in right)


def translate_set(gamma: Element, elements: Iterable[Element]) -> FrozenSet[Element]:
    return frozenset(multiply(gamma, g) for g in elements)


def inverse_set(elements: Iterable[Element]) -> FrozenSet[Element]:
    return frozenset(inverse(g) for g in elements)


# --------- Balls and windows --------- #

def ball_size(spec: GroupSpec, radius: int) -> int:
    """Closed-form |B_r|; used for the size cap before any enumeration."""
    if radius < 0:
        return 0
    if spec.is_abelian:
        # sum_i 2^i C(d,i) C(r,i)
        return sum(2**i * comb(spec.rank, i) * comb(radius, i) for i in range(spec.rank + 1))
    k = spec.rank
    if k == 1:
        return 2 * radius + 1
    return 1 + 2 * k * ((2 * k - 1) ** radius - 1) // (2 * k - 2)


def spheres(spec: GroupSpec, center: Element) -> Iterator[List[Element]]:
    """
    Lazily yield the spheres S_0, S_1, ... around center, by BFS along right
    multiplication by generators. Each sphere is sorted by normal form.
    """
    gens = spec.generators()
    seen = {center}
    layer = [center]
    while True:
        yield layer
        nxt = set()
        for g in layer:
            for s in gens:
                h = multiply(g, s)
                if h not in seen:
                    nxt.add(h)
        seen.update(nxt)
        layer = sorted(nxt)


@dataclass(frozen=True)
class CayleyWindow:
    spec: GroupSpec
    center: Element
    radius: int
    elements: Tuple[Element, ...]
    index: Dict[Element, int]
    adjacency: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g: Element) -> bool:
        return g in self.index

    def neighbors(self, g: Element) -> List[Element]:
        return [self.elements[j] for j in self.adjacency[self.index[g]]]

    def distance_from_center(self, g: Element) -> int:
        return word_distance(self.center, g)

    def edges(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]


def ball(spec: GroupSpec, center: Element, radius: int, cap: Optional[int] = None) -> CayleyWindow:
    if center.spec != spec:
        raise GroupMismatchError(f"center {center} is not an element of {spec}")
    if radius < 0:
        raise ParseError(f"radius must be nonnegative, got {radius}")
    cap = get_budget(DEFAULT_BALL_CAP) if cap is None else cap
    expected = ball_size(spec, radius)
    if expected > cap:
        raise SizeLimitError(expected, cap)

    elements: List[Element] = []
    for r, layer in enumerate(spheres(spec, center)):
        if r > radius:
            break
        elements.extend(layer)
    elements.sort()
    index = {g: i for i, g in enumerate(elements)}

    gens = spec.generators()
    adjacency = []
    for g in elements:
        nbrs = []
        for s in gens:
            j = index.get(multiply(g, s))
            if j is not None:
                nbrs.append(j)
        adjacency.append(tuple(sorted(nbrs)))

    return CayleyWindow(
        spec=spec,
        center=center,
        radius=radius,
        elements=tuple(elements),
        index=index,
        adjacency=tuple(adjacency),
    )


# --------- Text forms --------- #

def parse_group(text: str) -> GroupSpec:
    """Parse "z:d" / "f:k"."""
    raw = (text or "").strip().lower()
    if ":" not in raw:
        raise ParseError(f"group spec must look like 'z:2' or 'f:2', got {text!r}")
    fam, rank = raw.split(":", 1)
    try:
        family = Family(fam)
    except ValueError:
        raise ParseError(f"unknown group family {fam!r} (use 'z' or 'f')")
    try:
        k = int(rank)
    except ValueError:
        raise ParseError(f"group rank must be an integer, got {rank!r}")
    return GroupSpec(family, k)


def parse_element(spec: GroupSpec, text: str) -> Element:
    """
    Z^d: coordinates joined by '/', e.g. "3/-1" (Z^1: just "3").
    F_k: letters a, b, ...; upper case, "^-1" or a unicode superscript -1
         suffix for inverses; "1", "e" (k < 5) or "" for the identity.
    """
    raw = (text or "").strip()
    if spec.is_abelian:
        parts = raw.split("/")
        try:
            return spec.element(int(p) for p in parts)
        except ValueError:
            raise ParseError(f"bad {spec} element {text!r}")

    if raw in ("", "1") or (raw == "e" and spec.rank < 5):
        return spec.identity()
    raw = raw.replace("⁻¹", "^-1")
    letters: List[int] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        pos = LETTERS.find(ch.lower())
        if pos < 0 or pos >= spec.rank:
            raise ParseError(f"bad {spec} element {text!r}: unexpected {ch!r}")
        sign = -1 if ch.isupper() else 1
        i += 1
        if raw.startswith("^-1", i):
            sign = -sign
            i += 3
        letters.append(sign * (pos + 1))
    return spec.element(letters)


def format_element(g: Element) -> str:
    if g.spec.is_abelian:
        return "/".join(str(a) for a in g.form)
    if not g.form:
        return "1"
    return "".join(
        LETTERS[abs(x) - 1] if x > 0 else LETTERS[abs(x) - 1].upper() for x in g.form
    )
