# backend/local_stats.py
"""
Rooted-neighborhood statistics of sampled root cells, exact rooted-graph
canonical forms, and a generic mass-transport checker.
"""

import hashlib
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Any, Dict, Hashable, List, Optional, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from .cells import RootCell, RootCellSampler
from .errors import InfeasibleError, ParseError, PreconditionError, UndeterminedCellError
from .estimates import Estimate, mean_estimate, paired_difference, run_streams
from .finite_graphs import FiniteGraph, edge_fraction, expansion_profile, expected_degree, hyperfinite_greedy
from .groups import CayleyWindow, Element, GroupSpec, ball, multiply, word_distance
from .sampling import BernoulliField, IntensitySpec, SeedSpec
from .voronoi import BvtParams, BvtSampler, bvt_cell_at

MAX_CANONICAL_VERTICES = 64
UNDETERMINED = "undetermined"
MTP_TOLERANCE_SE = 4.0

Edge = Tuple[int, int]


# --------- Canonical forms --------- #

def _refine(adj: List[List[int]], colors: List[int]) -> List[int]:
    """Colour refinement to the coarsest stable colouring, ranks re-assigned canonically."""
    n_classes = len(set(colors))
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in adj[v]))) for v in range(len(adj))]
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        colors = [ranks[s] for s in sigs]
        if len(ranks) == n_classes:
            return colors
        n_classes = len(ranks)


class _CanonicalSearch:
    """
    Individualization-refinement with automorphism pruning. Leaves with equal
    certificates give an automorphism; candidates in the orbit of an explored
    vertex under automorphisms fixing the current path are skipped, and a leaf
    equivalent to the first leaf abandons its subtree back to the level where
    its path left the first path.
    """

    def __init__(self, adj: List[List[int]]):
        self.adj = adj
        self.n = len(adj)
        self.first: Optional[Tuple[Tuple[Edge, ...], List[int], List[int]]] = None
        self.best: Optional[Tuple[Tuple[Edge, ...], List[int]]] = None
        self.automorphisms: List[List[int]] = []

    def run(self, colors: List[int]) -> Tuple[Edge, ...]:
        self._visit(colors, [])
        return self.best[0]

    def _certificate(self, labels: List[int]) -> Tuple[Edge, ...]:
        return tuple(sorted(
            (min(labels[u], labels[v]), max(labels[u], labels[v]))
            for u in range(self.n) for v in self.adj[u] if u < v
        ))

    def _record(self, labels_a: List[int], labels_b: List[int]) -> None:
        vertex_of = [0] * self.n
        for v, label in enumerate(labels_b):
            vertex_of[label] = v
        gamma = [vertex_of[labels_a[v]] for v in range(self.n)]
        if any(gamma[v] != v for v in range(self.n)):
            self.automorphisms.append(gamma)

    def _orbits(self, path: List[int]) -> nx.utils.UnionFind:
        orbits = nx.utils.UnionFind(range(self.n))
        for gamma in self.automorphisms:
            if all(gamma[p] == p for p in path):
                for v in range(self.n):
                    orbits.union(v, gamma[v])
        return orbits

    def _leaf(self, labels: List[int], path: List[int]) -> Optional[int]:
        cert = self._certificate(labels)
        if self.first is None:
            self.first = (cert, labels, list(path))
            self.best = (cert, labels)
            return None
        first_cert, first_labels, first_path = self.first
        if cert == first_cert:
            self._record(first_labels, labels)
            return next(i for i, (a, b) in enumerate(zip(path, first_path)) if a != b)
        if cert == self.best[0]:
            self._record(self.best[1], labels)
        elif cert < self.best[0]:
            self.best = (cert, labels)
        return None

    def _visit(self, colors: List[int], path: List[int]) -> Optional[int]:
        """Returns the level to back-jump to, or None to carry on."""
        colors = _refine(self.adj, colors)
        if len(set(colors)) == self.n:
            return self._leaf(colors, path)
        counts = Counter(colors)
        target = min(c for c, m in counts.items() if m > 1)
        level = len(path)
        explored: List[int] = []
        seen_automorphisms = -1
        orbits = None
        for v in range(self.n):
            if colors[v] != target:
                continue
            if explored:
                if seen_automorphisms != len(self.automorphisms):
                    orbits = self._orbits(path)
                    seen_automorphisms = len(self.automorphisms)
                if any(orbits[v] == orbits[u] for u in explored):
                    continue
            explored.append(v)
            split = [2 * c + (1 if c == target and u != v else 0) for u, c in enumerate(colors)]
            jump = self._visit(split, path + [v])
            if jump is not None and jump < level:
                return jump
        return None


def _tree_edges(graph: nx.Graph, root: Hashable) -> Tuple[Edge, ...]:
    """Rooted trees: children ordered by their subtree codes, labels in preorder."""
    codes: Dict[Hashable, str] = {}
    children: Dict[Hashable, List[Hashable]] = {}
    order = list(nx.dfs_preorder_nodes(graph, root))
    parent = {root: None}
    for v in order:
        children[v] = [u for u in graph.neighbors(v) if u != parent[v]]
        for u in children[v]:
            parent[u] = v
    for v in reversed(order):
        children[v].sort(key=lambda u: codes[u])
        codes[v] = "(" + "".join(codes[u] for u in children[v]) + ")"

    labels = {root: 0}
    edges: List[Edge] = []
    stack = [root]
    while stack:
        v = stack.pop()
        if v != root:
            labels[v] = len(labels)
            edges.append((labels[parent[v]], labels[v]))
        stack.extend(reversed(children[v]))
    return tuple(sorted(edges))


def canonical_form(graph: nx.Graph, root: Hashable) -> Tuple[int, Tuple[Edge, ...]]:
    """
    (vertex count, sorted edge list) under the canonical labelling; the root
    is individualized first and always gets label 0.
    """
    n = graph.number_of_nodes()
    if n > MAX_CANONICAL_VERTICES:
        raise PreconditionError(f"canonical forms are capped at {MAX_CANONICAL_VERTICES} vertices, got {n}")
    if nx.is_tree(graph):
        return n, _tree_edges(graph, root)
    nodes = list(graph.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    adj = [[index[u] for u in graph.neighbors(v)] for v in nodes]
    colors = [0 if v == root else 1 for v in nodes]
    return n, _CanonicalSearch(adj).run(colors)


def canonical_hash(form: Tuple[int, Tuple[Edge, ...]]) -> str:
    return hashlib.blake2b(repr(form).encode("utf-8"), digest_size=16).hexdigest()


@dataclass(frozen=True)
class RootedNeighborhood:
    n_vertices: int
    edges: Tuple[Edge, ...]
    radius: int
    canonical_hash: str
    root: int = 0

    @classmethod
    def from_graph(cls, graph: nx.Graph, root: Hashable, radius: int) -> "RootedNeighborhood":
        if radius < 0:
            raise PreconditionError(f"radius must be >= 0, got {radius}")
        local = nx.ego_graph(graph, root, radius=radius)
        form = canonical_form(local, root)
        return cls(n_vertices=form[0], edges=form[1], radius=radius, canonical_hash=canonical_hash(form))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_vertices))
        graph.add_edges_from(self.edges)
        return graph

    def example_graph(self) -> Dict[str, Any]:
        return {"vertices": self.n_vertices, "edges": [list(e) for e in self.edges]}


def root_component_graph(cell: RootCell) -> nx.Graph:
    """Connected component of the root in the Cayley graph induced on the cell."""
    members = cell.members
    gens = cell.spec.generators()
    graph = nx.Graph()
    graph.add_node(cell.root)
    stack = [cell.root]
    while stack:
        g = stack.pop()
        for s in gens:
            h = multiply(g, s)
            if h in members:
                if h not in graph:
                    stack.append(h)
                graph.add_edge(g, h)
    return graph


def root_component_neighborhood(
    cell: RootCell,
    window: Optional[CayleyWindow],
    radius: int,
) -> RootedNeighborhood:
    if not cell.determined:
        raise UndeterminedCellError("cell is undetermined; filter undetermined samples first")
    if window is not None:
        outside = [g for g in cell.members if g not in window]
        if outside:
            raise PreconditionError(f"{len(outside)} cell members lie outside the window")
    return RootedNeighborhood.from_graph(root_component_graph(cell), cell.root, radius)


# --------- Distributions --------- #

@dataclass
class NeighborhoodDistribution:
    radius: int
    counts: Dict[str, int] = field(default_factory=dict)
    examples: Dict[str, RootedNeighborhood] = field(default_factory=dict)
    total: int = 0
    undetermined: int = 0
    provenance: Dict[str, Any] = field(default_factory=dict)

    def add(self, nbhd: Optional[RootedNeighborhood]) -> None:
        self.total += 1
        if nbhd is None:
            self.undetermined += 1
            return
        if nbhd.radius != self.radius:
            raise PreconditionError(f"radius {nbhd.radius} does not match distribution radius {self.radius}")
        self.counts[nbhd.canonical_hash] = self.counts.get(nbhd.canonical_hash, 0) + 1
        self.examples.setdefault(nbhd.canonical_hash, nbhd)

    def merge(self, other: "NeighborhoodDistribution") -> "NeighborhoodDistribution":
        if other.radius != self.radius:
            raise PreconditionError(f"cannot merge radius {self.radius} with radius {other.radius}")
        counts = dict(self.counts)
        for h, c in other.counts.items():
            counts[h] = counts.get(h, 0) + c
        examples = {**other.examples, **self.examples}
        return NeighborhoodDistribution(
            radius=self.radius,
            counts=counts,
            examples=examples,
            total=self.total + other.total,
            undetermined=self.undetermined + other.undetermined,
            provenance=dict(self.provenance),
        )

    def probabilities(self) -> Dict[str, float]:
        if self.total == 0:
            return {}
        probs = {h: c / self.total for h, c in self.counts.items()}
        if self.undetermined:
            probs[UNDETERMINED] = self.undetermined / self.total
        return probs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radius": self.radius,
            "total": self.total,
            "undetermined": self.undetermined,
            "entries": [
                {"hash": h, "count": self.counts[h], "example_graph": self.examples[h].example_graph()}
                for h in sorted(self.counts)
            ],
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NeighborhoodDistribution":
        try:
            radius = int(data["radius"])
            dist = cls(radius=radius, total=int(data["total"]), undetermined=int(data["undetermined"]),
                       provenance=dict(data.get("provenance", {})))
            for entry in data["entries"]:
                ex = entry["example_graph"]
                dist.counts[entry["hash"]] = int(entry["count"])
                dist.examples[entry["hash"]] = RootedNeighborhood(
                    n_vertices=int(ex["vertices"]),
                    edges=tuple(tuple(e) for e in ex["edges"]),
                    radius=radius,
                    canonical_hash=entry["hash"],
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed neighborhood distribution: {exc}")
        if sum(dist.counts.values()) + dist.undetermined != dist.total:
            raise PreconditionError("distribution counts do not add up to its total")
        return dist

    @classmethod
    def from_json(cls, text: str) -> "NeighborhoodDistribution":
        return cls.from_dict(json.loads(text))


def _sample_neighborhood(sampler: RootCellSampler, radius: int, seed: SeedSpec) -> Optional[RootedNeighborhood]:
    cell = sampler.sample(seed)
    if not cell.determined:
        return None
    return root_component_neighborhood(cell, None, radius)


def collect_distribution(
    sampler: RootCellSampler,
    radius: int,
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
) -> NeighborhoodDistribution:
    if n_samples < 1:
        raise PreconditionError(f"need at least one sample, got {n_samples}")
    found = run_streams(partial(_sample_neighborhood, sampler, radius), n_samples, seed, workers, "neighborhoods")
    dist = NeighborhoodDistribution(
        radius=radius,
        provenance={
            **sampler.describe(),
            "seed": seed.master_seed,
            "stream_index": seed.stream_index,
            "n_samples": n_samples,
        },
    )
    for nbhd in found:
        dist.add(nbhd)
    logging.info("%d distinct neighborhoods, %d undetermined", len(dist.counts), dist.undetermined)
    return dist


def tv_distance(a: NeighborhoodDistribution, b: NeighborhoodDistribution) -> float:
    if a.radius != b.radius:
        raise PreconditionError(f"radius mismatch: {a.radius} vs {b.radius}")
    pa, pb = a.probabilities(), b.probabilities()
    return 0.5 * sum(abs(pa.get(h, 0.0) - pb.get(h, 0.0)) for h in set(pa) | set(pb))


# --------- Mass transport --------- #

@dataclass(frozen=True)
class BernoulliProcess:
    group: GroupSpec
    intensity: IntensitySpec

    def __call__(self, seed: SeedSpec) -> BernoulliField:
        return BernoulliField(self.intensity, seed)

    def describe(self) -> Dict[str, Any]:
        return {"process": "bernoulli", "group": str(self.group), "p": self.intensity.p}


@dataclass(frozen=True)
class DiagonalIndicator:
    name = "diagonal"
    reach = 0

    def __call__(self, x: Element, y: Element, fld) -> float:
        return 1.0 if x == y else 0.0


@dataclass(frozen=True)
class NeighborPoint:
    """1{y in Pi, d(x, y) <= 1}."""

    name = "neighbor_point"
    reach = 1

    def __call__(self, x: Element, y: Element, fld) -> float:
        return 1.0 if word_distance(x, y) <= 1 and fld.contains(y) else 0.0


@dataclass(frozen=True)
class NearestCenter:
    """1{y in Pi, x in V(y)}: x sends unit mass to its own center."""

    params: BvtParams
    name = "nearest_center"
    reach = None

    def _weight(self, size: int) -> float:
        return 1.0

    def __call__(self, x: Element, y: Element, fld) -> float:
        if not fld.contains(y):
            return 0.0
        result = bvt_cell_at(fld, y, self.params)
        if not result.determined or x not in result.cell.members:
            return 0.0
        return self._weight(result.cell.size)


@dataclass(frozen=True)
class VoronoiShare(NearestCenter):
    """1{y in Pi, x in V(y)} / |V(y)|."""

    name = "voronoi_share"

    def _weight(self, size: int) -> float:
        return 1.0 / size


@lru_cache(maxsize=64)
def _margin_ball(spec: GroupSpec, margin: int) -> CayleyWindow:
    return ball(spec, spec.identity(), margin)


def _transport_sample(process, f, margin: int, seed: SeedSpec) -> Tuple[float, float]:
    fld = process(seed)
    window = _margin_ball(process.group, margin)
    e = process.group.identity()
    out_flow = math.fsum(f(e, v, fld) for v in window.elements)
    in_flow = math.fsum(f(v, e, fld) for v in window.elements)
    return out_flow, in_flow


@dataclass(frozen=True)
class MtpReport:
    function: str
    margin: int
    out_flow: Estimate
    in_flow: Estimate
    difference: Estimate

    @property
    def passes(self) -> bool:
        return abs(self.difference.value) <= MTP_TOLERANCE_SE * self.difference.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {
            "function": self.function,
            "margin": self.margin,
            "out_flow": self.out_flow.to_dict(),
            "in_flow": self.in_flow.to_dict(),
            "difference": self.difference.to_dict(),
            "passes": self.passes,
        }


def mtp_check(process, f, margin: int, n_samples: int, seed: SeedSpec, workers: int = 1) -> MtpReport:
    """
    Estimate E[sum_v f(o, v)] and E[sum_v f(v, o)] over v in B_margin(o).
    Truncating f at the margin keeps it diagonally invariant, so the two
    sides agree even for f of unbounded reach.
    """
    if margin < 0:
        raise PreconditionError(f"margin must be >= 0, got {margin}")
    if f.reach is not None and f.reach > margin:
        raise PreconditionError(f"margin {margin} is smaller than the reach {f.reach} of {f.name}")
    if n_samples < 1:
        raise PreconditionError(f"need at least one sample, got {n_samples}")
    _margin_ball(process.group, margin)

    flows = run_streams(partial(_transport_sample, process, f, margin), n_samples, seed, workers, "transports")
    out_flow = np.array([a for a, _ in flows], dtype=np.float64)
    in_flow = np.array([b for _, b in flows], dtype=np.float64)
    master = seed.master_seed
    report = MtpReport(
        function=f.name,
        margin=margin,
        out_flow=mean_estimate(out_flow, master),
        in_flow=mean_estimate(in_flow, master),
        difference=paired_difference(out_flow, in_flow, master),
    )
    logging.info("mtp %s: out %.5f in %.5f", f.name, report.out_flow.value, report.in_flow.value)
    return report


# --------- Cell profiles --------- #

PROFILE_COLUMNS = [
    "stream_index",
    "determined",
    "cell_size",
    "component_size",
    "cut_size",
    "edge_fraction",
    "expected_degree",
    "verdict",
    "kappa",
]


def _profile_row(sampler: RootCellSampler, epsilon: float, k: int, N: int, seed: SeedSpec) -> Dict[str, Any]:
    cell = sampler.sample(seed)
    row: Dict[str, Any] = {c: None for c in PROFILE_COLUMNS}
    row.update(stream_index=seed.stream_index, determined=cell.determined, cell_size=cell.size)
    if not cell.determined:
        row["verdict"] = UNDETERMINED
        return row
    component = FiniteGraph.from_networkx(root_component_graph(cell))
    cut = len(hyperfinite_greedy(component, math.inf, k).witness)
    row.update(
        component_size=component.n,
        cut_size=cut,
        edge_fraction=edge_fraction(cut, component.n),
        expected_degree=expected_degree(cut, component.n),
        verdict="yes" if cut <= epsilon * component.n + 1e-12 else "no (heuristic)",
    )
    try:
        row["kappa"] = float(expansion_profile(component, N).kappa)
    except InfeasibleError:
        logging.debug("expansion budget exceeded on a %d-vertex component", component.n)
    return row


def cell_profiles(
    sampler: RootCellSampler,
    epsilon: float,
    k: int,
    N: int,
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
) -> pd.DataFrame:
    """Per-sample hyperfiniteness and expansion data of root components (exploratory)."""
    rows = run_streams(partial(_profile_row, sampler, epsilon, k, N), n_samples, seed, workers, "profiles")
    return pd.DataFrame(rows, columns=PROFILE_COLUMNS)


def bvt_cell_profiles(
    params: BvtParams,
    epsilon: float,
    k: int,
    N: int,
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
) -> pd.DataFrame:
    return cell_profiles(BvtSampler(params), epsilon, k, N, n_samples, seed, workers)
