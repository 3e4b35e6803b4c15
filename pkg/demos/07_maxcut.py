"""
MAX-CUT by bosonic annealing
============================

Random 8-vertex graphs are encoded as antiferromagnetic Ising problems
(J_ij = w_ij) and annealed 20 times each.  The best cut found is compared
with exhaustive search.  The last graph is written out in the edge-list
format the command line reads.
"""
import tempfile
from pathlib import Path

import numpy as np

from bosonic_ising.maxcut import (anneal_maxcut, brute_force_maxcut, parse_edge_list, random_graph,
                                  serialize_edge_list)

rng = np.random.default_rng(2024)
hits = 0
for g in range(10):
    graph = random_graph(8, 0.5, rng)
    best, signs, cuts = anneal_maxcut(graph, N=4, tau0=10.0, n_runs=20, master_seed=g)
    opt, _ = brute_force_maxcut(graph)
    hits += best == opt
    print(f"graph {g}: {len(graph.edges):2} edges  annealed {best:4.0f}  optimum {opt:4.0f}  "
          f"runs at optimum {np.sum(cuts == opt):2}/20  partition {signs}")
print(f"\n{hits}/10 optimal")

text = serialize_edge_list(graph)
path = Path(tempfile.gettempdir()) / "demo_graph.txt"
path.write_text(text)
assert parse_edge_list(text) == graph
print(f"\nwrote {path}; try: python -m bosonic_ising maxcut --graph {path} --oracle")
