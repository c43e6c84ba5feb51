# backend/cells.py
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Optional, Protocol

from .groups import Element, GroupSpec, format_element


@dataclass(frozen=True)
class RootCell:
    """
    The class [root]_R of a sampled equivalence relation.

    in_pi_class: the root is related to a point of the Bernoulli set, whose
    representative is `center`. determined=False only happens for adaptive
    samplers that hit their radius cap; members are then a partial view.
    """

    members: FrozenSet[Element]
    root: Element
    center: Optional[Element] = None
    in_pi_class: bool = False
    determined: bool = True

    def __post_init__(self):
        if self.root not in self.members:
            raise ValueError(f"root {self.root} missing from its own cell")
        if self.in_pi_class and self.center is None:
            raise ValueError("a Pi-class cell needs its center")
        if not self.in_pi_class and self.determined and len(self.members) != 1:
            raise ValueError("cells outside [Pi]_R are singletons")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def spec(self) -> GroupSpec:
        return self.root.spec

    def to_dict(self) -> Dict[str, Any]:
        return {
            "root": format_element(self.root),
            "members": [format_element(g) for g in sorted(self.members)],
            "center": None if self.center is None else format_element(self.center),
            "in_pi_class": self.in_pi_class,
            "determined": self.determined,
            "size": self.size,
        }


class RootCellSampler(Protocol):
    """Anything that draws the root cell of an invariant random partition."""

    spec: GroupSpec

    @property
    def cell_support(self) -> FrozenSet[Element]:
        """Elements a tile may cover relative to its center (A for tilings),
        or an empty set when cells are unbounded."""
        ...

    def sample(self, seed) -> RootCell:
        ...

    def describe(self) -> Dict[str, Any]:
        ...
