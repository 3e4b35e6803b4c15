"""MAX-CUT graphs, the edge-list format and the Ising encoding.

Edge-list grammar, one edge per line::

    u v [weight]    # optional comment

Vertex ids are 0-based integers, the weight defaults to 1.0 and must be
positive.  Blank lines and ``#`` comments are ignored.  Self-loops and
repeated edges (in either orientation) are rejected.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance


class EdgeListError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple  # of (u, v, weight), u < v

    def __post_init__(self):
        seen = set()
        edges = []
        for u, v, w in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            u, v = min(u, v), max(u, v)
            if not (0 <= u and v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.n_vertices})")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            if not float(w) > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            seen.add((u, v))
            edges.append((u, v, float(w)))
        object.__setattr__(self, "edges", tuple(sorted(edges)))

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n_vertices, self.n_vertices))
        for u, v, w in self.edges:
            W[u, v] = W[v, u] = w
        return W


def parse_edge_list(text: str, n_vertices: int | None = None) -> Graph:
    """Parse the edge-list format.  ``n_vertices`` defaults to one past the largest id."""
    edges, seen = [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(lineno, f"expected 'u v [weight]', got {raw.strip()!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise EdgeListError(lineno, f"malformed numbers in {raw.strip()!r}") from None
        if u < 0 or v < 0:
            raise EdgeListError(lineno, "vertex ids must be non-negative")
        if u == v:
            raise EdgeListError(lineno, f"self-loop at vertex {u}")
        if not w > 0 or not np.isfinite(w):
            raise EdgeListError(lineno, f"weight must be positive, got {w}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise EdgeListError(lineno, f"duplicate edge {key} (first on line {seen[key]})")
        seen[key] = lineno
        edges.append((key[0], key[1], w))
    n = max((v for _, v, _ in edges), default=-1) + 1
    if n_vertices is not None:
        if n_vertices < n:
            raise ValueError(f"edges reference vertex {n - 1} but n_vertices={n_vertices}")
        n = n_vertices
    return Graph(n, tuple(edges))


def serialize_edge_list(graph: Graph) -> str:
    return "".join(f"{u} {v} {w!r}\n" for u, v, w in graph.edges)


def maxcut_instance(graph: Graph, N: int, lambda_bias: float = 0.0) -> ProblemInstance:
    """Ising instance whose ground states are maximum cuts (``J_ij = w_ij``)."""
    return ProblemInstance(graph.adjacency(), lambda_bias, N)


def cut_value(graph: Graph, signs) -> float:
    s = np.asarray(signs)
    if s.shape != (graph.n_vertices,):
        raise ValueError(f"need {graph.n_vertices} signs, got shape {s.shape}")
    if np.any((s != 1) & (s != -1)):
        raise ValueError("signs must be +1 or -1")
    return float(sum(w * (1 - s[u] * s[v]) / 2 for u, v, w in graph.edges))


def _all_cuts(graph: Graph):
    n = graph.n_vertices
    if n > 20:
        raise ValueError(f"brute force limited to 20 vertices, got {n}")
    if n == 0:
        return np.zeros((1, 0), dtype=int), np.zeros(1)
    bits = np.array(list(itertools.product((1, -1), repeat=n - 1)), dtype=int).reshape(-1, n - 1)
    signs = np.hstack([np.ones((len(bits), 1), dtype=int), bits[:, ::-1]])
    cuts = np.zeros(len(signs))
    for u, v, w in graph.edges:
        cuts += w * (1 - signs[:, u] * signs[:, v]) / 2
    return signs, cuts


def brute_force_maxcut(graph: Graph):
    """Exhaustive search over the ``2**(n-1)`` patterns with vertex 0 fixed to +1."""
    signs, cuts = _all_cuts(graph)
    j = int(np.argmax(cuts))
    return float(cuts[j]), signs[j]


def optimal_sign_patterns(graph: Graph, rtol: float = 1e-12) -> np.ndarray:
    """Every optimal sign pattern, including global flips."""
    signs, cuts = _all_cuts(graph)
    best = signs[cuts >= cuts.max() * (1 - rtol)]
    return np.vstack([best, -best])


def canonical_signs(signs) -> np.ndarray:
    """Flip each pattern so vertex 0 reads +1."""
    s = np.atleast_2d(signs)
    return s * np.where(s[:, :1] < 0, -1, 1)


def random_graph(n: int, p: float, rng, weight: float = 1.0) -> Graph:
    edges = [(u, v, weight) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, tuple(edges))


def anneal_maxcut(graph: Graph, N: int = 4, tau0: float = 10.0, n_runs: int = 20,
                  master_seed: int = 0, start_error: float = 0.7, alpha: float = 1.0,
                  xi: float = 0.001, n_slices: int = 400, threads: int | None = None):
    """Best cut found by ``n_runs`` independent annealed KMC runs.

    The start temperature is the one at which the equilibrium readout misses
    every optimal cut with probability ``start_error``.  Runs whose final
    state has a zero site spin give no cut.  Returns ``(best_cut, signs, cuts)``
    with ``cuts`` NaN for such runs.
    """
    from .kmc import anneal_ensemble
    from .rates import DynamicsParams

    inst = maxcut_instance(graph, N)
    summary = anneal_ensemble(inst, DynamicsParams(alpha, xi), tau0, n_runs, master_seed,
                              start_error, n_slices, signs=optimal_sign_patterns(graph),
                              threads=threads)
    S = 2 * summary.final_states - N
    cuts = np.array([cut_value(graph, np.sign(s)) if np.all(s != 0) else np.nan for s in S])
    if np.all(np.isnan(cuts)):
        return float("nan"), None, cuts
    j = int(np.nanargmax(cuts))
    return float(cuts[j]), canonical_signs(np.sign(S[j]))[0], cuts
