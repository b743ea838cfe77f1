"""Shared helpers for the test suite."""

import numpy as np

from fracgcl.graphs import build_graph, n_components


def cycle_graph(n):
    return build_graph(n, [(i, (i + 1) % n, 1.0) for i in range(n)])


def random_connected_graph(n, p, seed):
    """Seeded Erdos-Renyi graph, resampled until connected."""
    rng = np.random.default_rng(seed)
    for _ in range(200):
        edges = [
            (i, j, 1.0) for i in range(n) for j in range(i + 1, n) if rng.random() < p
        ]
        g = build_graph(n, edges)
        if n_components(g) == 1:
            return g
    raise RuntimeError("could not draw a connected graph; raise p")


def sbm_connected_graph(n, n_blocks, p_in, p_out, seed):
    """Two-parameter stochastic block model, resampled until connected.

    Independent of the production generator on purpose: tests that compare
    behaviour across block structure should not share its code path.
    """
    rng = np.random.default_rng(seed)
    size = n // n_blocks
    for _ in range(200):
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                p = p_in if i // size == j // size else p_out
                if rng.random() < p:
                    edges.append((i, j, 1.0))
        g = build_graph(n, edges)
        if n_components(g) == 1:
            return g
    raise RuntimeError("could not draw a connected SBM; raise p_in/p_out")
