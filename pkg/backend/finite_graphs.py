# backend/finite_graphs.py
"""
Certificates for finite graphs:

    (eps, k)-hyperfinite   some edge set E with |E| <= eps|V| leaves components of size <= k
    (kappa, N)-expander    every F with |F| <= N has |dF| / |F| >= kappa (edge boundary)

plus the robustness check: a (kappa, N)-expander with max degree d stays
non-(eps, N)-hyperfinite on every induced subgraph G[A] with
|A| >= (1 - eps)|V|, whenever eps < kappa / (2(1 + d) + kappa).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from .errors import GraphFormatError, InfeasibleError, PreconditionError
from .settings import DEFAULT_EXACT_NODE_BUDGET, DEFAULT_SUBSET_BUDGET, get_budget

Edge = Tuple[int, int]

EXACT_MAX_VERTICES = 40
EXACT_MAX_EDGES = 64
BRUTEFORCE_MAX_EDGES = 24
ROBUSTNESS_SUBSET_BUDGET = 10**4
ROBUSTNESS_SAMPLES = 2000


# --------- Graph container --------- #

def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class FiniteGraph:
    n: int
    edges: Tuple[Edge, ...]

    def __post_init__(self):
        if self.n < 0:
            raise PreconditionError(f"vertex count must be >= 0, got {self.n}")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise PreconditionError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise PreconditionError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
            e = _norm(u, v)
            if e in seen:
                raise PreconditionError(f"duplicate edge {e}")
            seen.add(e)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "FiniteGraph":
        return cls(n, tuple(sorted(_norm(int(u), int(v)) for u, v in edges)))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "FiniteGraph":
        """Vertices are relabelled 0..n-1 in sorted node order."""
        nodes = sorted(graph.nodes())
        label = {v: i for i, v in enumerate(nodes)}
        return cls.from_edges(len(nodes), ((label[u], label[v]) for u, v in graph.edges()))

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        nbrs: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(x)) for x in nbrs)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph

    def induced(self, vertices: Iterable[int]) -> "FiniteGraph":
        keep = sorted(set(vertices))
        label = {v: i for i, v in enumerate(keep)}
        return FiniteGraph.from_edges(
            len(keep), ((label[u], label[v]) for u, v in self.edges if u in label and v in label)
        )

    def describe(self) -> Dict[str, Any]:
        return {"vertices": self.n, "edges": self.n_edges, "max_degree": self.max_degree}


def edge_fraction(cut_size: int, n_vertices: int) -> float:
    """|E| / |V|: the finite-graph convention, compared against eps."""
    return cut_size / n_vertices if n_vertices else 0.0


def expected_degree(cut_size: int, n_vertices: int) -> float:
    """E[deg_E(o)] = 2|E| / |V| under a uniform root: the unimodular convention."""
    return 2 * cut_size / n_vertices if n_vertices else 0.0


def largest_component_after(g: FiniteGraph, removed: Iterable[Edge]) -> int:
    cut = {_norm(u, v) for u, v in removed}
    uf = nx.utils.UnionFind(range(g.n))
    for e in g.edges:
        if e not in cut:
            uf.union(*e)
    return max((uf.weights[uf[v]] for v in range(g.n)), default=0)


# --------- Hyperfiniteness --------- #

@dataclass(frozen=True)
class HyperfinitenessCertificate:
    epsilon: float
    k: int
    n_vertices: int
    verdict: bool
    witness: Optional[Tuple[Edge, ...]]
    optimal_cut_size: Optional[int] = None
    heuristic: bool = False

    @property
    def edge_fraction(self) -> Optional[float]:
        return None if self.witness is None else edge_fraction(len(self.witness), self.n_vertices)

    @property
    def expected_degree(self) -> Optional[float]:
        return None if self.witness is None else expected_degree(len(self.witness), self.n_vertices)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "k": self.k,
            "vertices": self.n_vertices,
            "verdict": "yes" if self.verdict else "no",
            "witness": None if self.witness is None else [list(e) for e in self.witness],
            "optimal_cut_size": self.optimal_cut_size,
            "heuristic": self.heuristic,
            "edge_fraction": self.edge_fraction,
            "expected_degree": self.expected_degree,
        }


def _check_params(epsilon: float, k: int) -> None:
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if epsilon < 0:
        raise PreconditionError(f"epsilon must be >= 0, got {epsilon}")


def _within_budget(cut_size: int, epsilon: float, n: int) -> bool:
    return cut_size <= epsilon * n + 1e-12


def verify_certificate(g: FiniteGraph, cert: HyperfinitenessCertificate) -> bool:
    """Independent re-check of a certificate against its graph."""
    if cert.n_vertices != g.n:
        return False
    if cert.optimal_cut_size is not None and cert.verdict != _within_budget(cert.optimal_cut_size, cert.epsilon, g.n):
        return False
    if not cert.verdict:
        return cert.witness is None
    if cert.witness is None:
        return False
    edge_set = set(g.edges)
    if any(_norm(u, v) not in edge_set for u, v in cert.witness):
        return False
    if not _within_budget(len(cert.witness), cert.epsilon, g.n):
        return False
    return largest_component_after(g, cert.witness) <= cert.k


def _emit(g: FiniteGraph, epsilon: float, k: int, cut: Sequence[Edge], optimal: Optional[int], heuristic: bool):
    witness = tuple(sorted(_norm(u, v) for u, v in cut))
    verdict = _within_budget(len(witness), epsilon, g.n)
    cert = HyperfinitenessCertificate(
        epsilon=epsilon,
        k=k,
        n_vertices=g.n,
        verdict=verdict,
        witness=witness if verdict else None,
        optimal_cut_size=optimal,
        heuristic=heuristic,
    )
    if not verify_certificate(g, cert):
        raise AssertionError(f"emitted certificate failed verification: {cert}")
    return cert


def _components(g: FiniteGraph) -> List[List[int]]:
    return [sorted(c) for c in sorted(nx.connected_components(g.to_networkx()), key=min)]


def _cut_of_blocks(g: FiniteGraph, block_of: Dict[int, int]) -> List[Edge]:
    return [(u, v) for u, v in g.edges if block_of[u] != block_of[v]]


class _BlockSearch:
    """
    Branch and bound over block assignments of one connected component.
    Vertices are placed in BFS order; each goes into an open block (size < k)
    or opens one new block.
    """

    def __init__(self, g: FiniteGraph, component: List[int], k: int, incumbent: List[Edge], budget: int):
        self.g = g
        self.k = k
        self.budget = budget
        self.nodes = 0
        root = component[0]
        self.order = [root] + [v for _, v in nx.bfs_edges(g.to_networkx().subgraph(component), root)]
        self.pos = {v: i for i, v in enumerate(self.order)}
        self.best_cost = len(incumbent)
        self.best_blocks: Optional[Dict[int, int]] = None
        self.block_of: Dict[int, int] = {}
        self.sizes: List[int] = []

    def _lower_bound(self, i: int) -> float:
        """Admissible bound on edges still to be cut once vertices order[:i] are placed."""
        k = self.k
        to_assigned_total = 0
        half_total = 0.0
        for u in self.order[i:]:
            deg = self.g.degree(u)
            per_block: Dict[int, int] = {}
            free = 0
            for w in self.g.adjacency[u]:
                b = self.block_of.get(w)
                if b is None:
                    free += 1
                else:
                    per_block[b] = per_block.get(b, 0) + 1
            assigned = deg - free
            kept = max((c for b, c in per_block.items() if self.sizes[b] < k), default=0)
            to_assigned_total += assigned - kept
            half_total += max(0, deg - min(k - 1, kept + free))
        return max(to_assigned_total, half_total / 2.0)

    def run(self, cost: int = 0, i: int = 0) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise InfeasibleError("exact infeasible, use greedy", nodes=self.nodes, budget=self.budget)
        if i == len(self.order):
            if cost < self.best_cost:
                self.best_cost = cost
                self.best_blocks = dict(self.block_of)
            return
        if cost + self._lower_bound(i) >= self.best_cost:
            return

        v = self.order[i]
        nbr_blocks: Dict[int, int] = {}
        placed = 0
        for w in self.g.adjacency[v]:
            b = self.block_of.get(w)
            if b is not None:
                placed += 1
                nbr_blocks[b] = nbr_blocks.get(b, 0) + 1

        options = [(placed - nbr_blocks.get(b, 0), b) for b in range(len(self.sizes)) if self.sizes[b] < self.k]
        options.append((placed, len(self.sizes)))
        for extra, b in sorted(options):
            if b == len(self.sizes):
                self.sizes.append(0)
            self.sizes[b] += 1
            self.block_of[v] = b
            self.run(cost + extra, i + 1)
            del self.block_of[v]
            self.sizes[b] -= 1
            if self.sizes[b] == 0:
                self.sizes.pop()


def hyperfinite_exact(g: FiniteGraph, epsilon: float, k: int, budget: Optional[int] = None) -> HyperfinitenessCertificate:
    """
    Minimum number of edges whose removal leaves all components <= k, solved
    per connected component. The witness is the optimum the search meets
    first (the greedy incumbent when nothing beats it).
    """
    _check_params(epsilon, k)
    if g.n > EXACT_MAX_VERTICES and g.n_edges > EXACT_MAX_EDGES:
        raise InfeasibleError("exact infeasible, use greedy", vertices=g.n, edges=g.n_edges)
    budget = get_budget(DEFAULT_EXACT_NODE_BUDGET) if budget is None else budget

    incumbent = hyperfinite_greedy(g, math.inf, k).witness or ()
    cut: List[Edge] = []
    nodes = 0
    for component in _components(g):
        if len(component) <= k:
            continue
        members = set(component)
        local = [e for e in incumbent if e[0] in members]
        search = _BlockSearch(g, component, k, local, budget - nodes)
        search.run()
        nodes += search.nodes
        if search.best_blocks is None:
            cut.extend(local)
        else:
            sub_edges = [e for e in g.edges if e[0] in members]
            cut.extend(e for e in sub_edges if search.best_blocks[e[0]] != search.best_blocks[e[1]])
    logging.debug("exact hyperfiniteness: %d search nodes, optimum %d", nodes, len(cut))
    return _emit(g, epsilon, k, cut, optimal=len(cut), heuristic=False)


def _fiedler_split(g: FiniteGraph, block: List[int]) -> Tuple[List[int], List[int]]:
    """Best ratio-cut prefix of the Fiedler ordering of a connected block."""
    sub = g.to_networkx().subgraph(block)
    lap = nx.laplacian_matrix(sub, nodelist=block).toarray().astype(np.float64)
    _, vecs = np.linalg.eigh(lap)
    fiedler = vecs[:, 1]
    order = [block[i] for i in sorted(range(len(block)), key=lambda i: (round(fiedler[i], 12), block[i]))]

    inside = set()
    cut = 0
    best = None
    for j, v in enumerate(order[:-1], start=1):
        for w in g.adjacency[v]:
            if w in sub:
                cut += -1 if w in inside else 1
        inside.add(v)
        ratio = Fraction(cut, min(j, len(block) - j))
        if best is None or ratio < best[0]:
            best = (ratio, j)
    j = best[1]
    return order[:j], order[j:]


def hyperfinite_greedy(g: FiniteGraph, epsilon: float, k: int) -> HyperfinitenessCertificate:
    """
    Recursive sparsest-cut bisection along Fiedler orderings until every block
    has <= k vertices, then return cut edges whose endpoints' components still
    fit together. Sound but incomplete: "no" only means no witness was found.
    """
    _check_params(epsilon, k)
    pending = _components(g)
    blocks: List[List[int]] = []
    while pending:
        block = pending.pop()
        if len(block) <= k:
            blocks.append(block)
            continue
        left, right = _fiedler_split(g, block)
        for part in (left, right):
            labels = sorted(part)
            pending.extend([labels[i] for i in c] for c in _components(g.induced(labels)))

    block_of = {v: i for i, b in enumerate(blocks) for v in b}
    cut = _cut_of_blocks(g, block_of)

    # edge-return passes
    uf = nx.utils.UnionFind(range(g.n))
    for u, v in g.edges:
        if block_of[u] == block_of[v]:
            uf.union(u, v)
    changed = True
    while changed:
        changed = False
        kept = []
        for u, v in cut:
            ru, rv = uf[u], uf[v]
            if ru == rv or uf.weights[ru] + uf.weights[rv] <= k:
                uf.union(u, v)
                changed = True
            else:
                kept.append((u, v))
        cut = kept

    if math.isinf(epsilon):
        return HyperfinitenessCertificate(epsilon, k, g.n, True, tuple(sorted(cut)), heuristic=True)
    return _emit(g, epsilon, k, cut, optimal=None, heuristic=True)


def hyperfinite_bruteforce(g: FiniteGraph, epsilon: float, k: int) -> HyperfinitenessCertificate:
    """Edge subsets by increasing size; first hit in lexicographic order is the witness."""
    _check_params(epsilon, k)
    if g.n_edges > BRUTEFORCE_MAX_EDGES:
        raise InfeasibleError("brute force limited to small graphs", edges=g.n_edges, cap=BRUTEFORCE_MAX_EDGES)
    for size in range(g.n_edges + 1):
        for cut in itertools.combinations(g.edges, size):
            if largest_component_after(g, cut) <= k:
                return _emit(g, epsilon, k, cut, optimal=size, heuristic=False)
    raise AssertionError("removing every edge always works")


# --------- Expansion --------- #

@dataclass(frozen=True)
class ExpansionProfile:
    N: int
    minima: Dict[int, Fraction]
    witnesses: Dict[int, Tuple[int, ...]]
    enumerated: int

    @property
    def kappa(self) -> Fraction:
        return min(self.minima.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "kappa": str(self.kappa),
            "kappa_float": float(self.kappa),
            "per_size": [
                {"size": n, "ratio": str(r), "ratio_float": float(r), "witness": list(self.witnesses[n])}
                for n, r in sorted(self.minima.items())
            ],
            "enumerated": self.enumerated,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"size": n, "ratio": float(r), "witness": " ".join(map(str, self.witnesses[n]))}
            for n, r in sorted(self.minima.items())
        ]
        return pd.DataFrame(rows, columns=["size", "ratio", "witness"])


def edge_boundary(g: FiniteGraph, subset: Iterable[int]) -> int:
    inside = set(subset)
    return sum(1 for u, v in g.edges if (u in inside) != (v in inside))


def _record(best: Dict[int, Tuple[Fraction, Tuple[int, ...]]], subset: Iterable[int], boundary: int) -> None:
    members = tuple(sorted(subset))
    key = (Fraction(boundary, len(members)), members)
    if len(members) not in best or key < best[len(members)]:
        best[len(members)] = key


def expansion_profile(g: FiniteGraph, N: int, budget: Optional[int] = None) -> ExpansionProfile:
    """
    Exact boundary-ratio minima over connected F with |F| <= N, enumerating
    each connected set once from its smallest vertex (ESU extension rule).
    """
    if N < 1:
        raise PreconditionError(f"N must be >= 1, got {N}")
    if g.n == 0:
        raise PreconditionError("expansion profile of the empty graph is undefined")
    budget = get_budget(DEFAULT_SUBSET_BUDGET) if budget is None else budget
    limit = min(N, g.n)
    best: Dict[int, Tuple[Fraction, Tuple[int, ...]]] = {}
    count = 0

    def extend(sub: List[int], sub_set: set, ext: List[int], start: int, boundary: int) -> None:
        nonlocal count
        count += 1
        if count > budget:
            raise InfeasibleError("connected subset budget exceeded", size_reached=len(sub), enumerated=count)
        _record(best, sub, boundary)
        if len(sub) == limit:
            return
        ext = list(ext)
        while ext:
            w = ext.pop(0)
            near = sub_set.union(*(g.adjacency[x] for x in sub))
            new_ext = ext + [u for u in g.adjacency[w] if u > start and u not in near and u not in ext]
            inner = sum(1 for x in g.adjacency[w] if x in sub_set)
            sub_set.add(w)
            sub.append(w)
            extend(sub, sub_set, sorted(set(new_ext)), start, boundary + g.degree(w) - 2 * inner)
            sub.pop()
            sub_set.discard(w)

    for v in range(g.n):
        extend([v], {v}, [u for u in g.adjacency[v] if u > v], v, g.degree(v))

    return ExpansionProfile(
        N=N,
        minima={n: r for n, (r, _) in best.items()},
        witnesses={n: w for n, (_, w) in best.items()},
        enumerated=count,
    )


def expansion_bruteforce(g: FiniteGraph, N: int) -> Dict[int, Fraction]:
    """Per-size minima over all (not necessarily connected) subsets."""
    minima: Dict[int, Fraction] = {}
    for size in range(1, min(N, g.n) + 1):
        minima[size] = min(Fraction(edge_boundary(g, s), size) for s in itertools.combinations(range(g.n), size))
    return minima


# --------- Robustness --------- #

def robustness_threshold(kappa: float, max_degree: int) -> float:
    return kappa / (2 * (1 + max_degree) + kappa)


@dataclass(frozen=True)
class RobustnessReport:
    kappa: float
    measured_kappa: Fraction
    N: int
    epsilon: float
    max_degree: int
    threshold: float
    min_subset_size: int
    checked: int
    exhaustive: bool
    counterexamples: Tuple[Tuple[int, ...], ...]

    @property
    def holds(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa,
            "measured_kappa": str(self.measured_kappa),
            "N": self.N,
            "epsilon": self.epsilon,
            "max_degree": self.max_degree,
            "threshold": self.threshold,
            "min_subset_size": self.min_subset_size,
            "checked": self.checked,
            "exhaustive": self.exhaustive,
            "counterexamples": [list(c) for c in self.counterexamples],
            "holds": self.holds,
        }


def _candidate_subsets(n: int, min_size: int, seed: int) -> Tuple[Iterable[Tuple[int, ...]], bool]:
    total = sum(math.comb(n, s) for s in range(min_size, n + 1))
    if total <= get_budget(ROBUSTNESS_SUBSET_BUDGET):
        subsets = (c for s in range(n, min_size - 1, -1) for c in itertools.combinations(range(n), s))
        return subsets, True
    logging.info("%d candidate subsets, sampling %d", total, ROBUSTNESS_SAMPLES)
    rng = np.random.default_rng(seed)
    sizes = rng.integers(min_size, n + 1, size=ROBUSTNESS_SAMPLES)
    return (tuple(sorted(rng.choice(n, size=int(s), replace=False).tolist())) for s in sizes), False


def robustness_check(g: FiniteGraph, kappa: float, N: int, epsilon: float, seed: int = 0) -> RobustnessReport:
    profile = expansion_profile(g, N)
    if float(profile.kappa) < kappa - 1e-12:
        raise PreconditionError(
            f"graph is not a ({kappa}, {N})-expander: measured kappa = {profile.kappa}"
        )
    d = g.max_degree
    threshold = robustness_threshold(kappa, d)
    if not 0 < epsilon < threshold:
        raise PreconditionError(
            f"epsilon must satisfy 0 < ε < κ/(2(1+d)+κ) = {kappa}/(2(1+{d})+{kappa}) = {threshold:.6g}, got {epsilon}"
        )

    min_size = max(1, math.ceil((1 - epsilon) * g.n - 1e-9))
    subsets, exhaustive = _candidate_subsets(g.n, min_size, seed)
    checked = 0
    counterexamples: List[Tuple[int, ...]] = []
    for subset in subsets:
        checked += 1
        cert = hyperfinite_exact(g.induced(subset), epsilon, N)
        if cert.verdict:
            logging.warning("counterexample: G[A] is (%s, %d)-hyperfinite for A = %s", epsilon, N, subset)
            counterexamples.append(tuple(subset))
    return RobustnessReport(
        kappa=kappa,
        measured_kappa=profile.kappa,
        N=N,
        epsilon=epsilon,
        max_degree=d,
        threshold=threshold,
        min_subset_size=min_size,
        checked=checked,
        exhaustive=exhaustive,
        counterexamples=tuple(counterexamples),
    )


# --------- Edge lists and corpus --------- #

def read_edge_list(path: str) -> FiniteGraph:
    """'u v' per line, 0-based, '#' comments; vertex count is max label + 1."""
    edges: List[Edge] = []
    seen = set()
    n = 0
    with Path(path).open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise GraphFormatError(line_no, f"expected 'u v', got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(line_no, f"vertices must be integers, got {text!r}")
            if u < 0 or v < 0:
                raise GraphFormatError(line_no, "vertices must be >= 0")
            if u == v:
                raise GraphFormatError(line_no, f"self-loop at {u}")
            e = _norm(u, v)
            if e in seen:
                raise GraphFormatError(line_no, f"duplicate edge {u} {v}")
            seen.add(e)
            edges.append(e)
            n = max(n, u + 1, v + 1)
    return FiniteGraph.from_edges(n, edges)


def write_edge_list(g: FiniteGraph, path: str) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        f.write(f"# {g.n} vertices, {g.n_edges} edges\n")
        for u, v in g.edges:
            f.write(f"{u} {v}\n")


def cycle(n: int) -> FiniteGraph:
    return FiniteGraph.from_networkx(nx.cycle_graph(n))


def path(n: int) -> FiniteGraph:
    return FiniteGraph.from_networkx(nx.path_graph(n))


def complete(n: int) -> FiniteGraph:
    return FiniteGraph.from_networkx(nx.complete_graph(n))


def hypercube(d: int) -> FiniteGraph:
    return FiniteGraph.from_networkx(nx.convert_node_labels_to_integers(nx.hypercube_graph(d), ordering="sorted"))


def random_regular(d: int, n: int, seed: int) -> FiniteGraph:
    """networkx random_regular_graph with its own seed: same (d, n, seed), same graph."""
    return FiniteGraph.from_networkx(nx.random_regular_graph(d, n, seed=seed))


def atlas_connected(max_edges: int, max_vertices: int = 7) -> List[FiniteGraph]:
    """Connected graphs of the networkx graph atlas (all graphs on <= 7 vertices)."""
    out = []
    for graph in nx.graph_atlas_g():
        if graph.number_of_nodes() == 0 or graph.number_of_nodes() > max_vertices:
            continue
        if graph.number_of_edges() > max_edges or not nx.is_connected(graph):
            continue
        out.append(FiniteGraph.from_networkx(graph))
    return out


def corpus_graph(name: str) -> FiniteGraph:
    """'cycle:12', 'path:10', 'complete:5', 'hypercube:3', 'regular:3:16:7' (d:n:seed)."""
    kind, _, rest = name.partition(":")
    try:
        args = [int(x) for x in rest.split(":") if x]
    except ValueError:
        raise PreconditionError(f"bad corpus graph {name!r}")
    builders = {"cycle": (cycle, 1), "path": (path, 1), "complete": (complete, 1),
                "hypercube": (hypercube, 1), "regular": (random_regular, 3)}
    if kind not in builders or len(args) != builders[kind][1]:
        raise PreconditionError(f"bad corpus graph {name!r}; try cycle:12 or regular:3:16:7")
    return builders[kind][0](*args)
