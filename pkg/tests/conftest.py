"""Shared fixtures and harness-only oracles.

The harness may do things the library must not: reverse_inv inverts the vertex
permutation by table lookup to decode reverse representations, and the integer
walk-counting oracle recomputes event masses in exact arithmetic independent of
any matrix product.
"""

from fractions import Fraction

import numpy as np
import pytest

import walkbound as wb


@pytest.fixture(scope="session")
def rot2():
    return wb.mgg_rotation(2)


@pytest.fixture(scope="session")
def g_identity(rot2):
    return wb.HybridGraph(rot2, np.arange(rot2.n_vertices))


@pytest.fixture(scope="session")
def g_random(rot2):
    perm = np.random.default_rng(7).permutation(rot2.n_vertices)
    return wb.HybridGraph(rot2, perm)


@pytest.fixture
def announce(capsys):
    """Print a line straight to the terminal, bypassing pytest capture."""

    def _p(line):
        with capsys.disabled():
            print(line)

    return _p


def reverse_inv(g, rep):
    """Decode a reverse representation by table-lookup inversion of the vertex
    permutation; the inverse the library deliberately does not ship."""
    inv = np.argsort(g.perm)
    cur = rep.vertex
    vertices = [cur]
    fwd = []
    for k in rep.labels:
        v = int(inv[cur])
        u, j = g.rot.rotate(v, k)
        vertices.append(u)
        fwd.append(j)
        cur = u
    return wb.Walk(tuple(reversed(vertices)), tuple(reversed(fwd)))


def exact_family_counts(g, t, masks):
    """Per-terminal integer counts of t-walks meeting every position mask.

    Pure-integer dynamic programming over Python ints: exact, and independent of
    both library routes (matrix products and vectorized enumeration).
    """
    n, d = g.n_vertices, g.d
    c = [1 if masks[0][u] else 0 for u in range(n)]
    for i in range(1, t + 1):
        nxt = [0] * n
        for u in range(n):
            if c[u]:
                for j in range(d):
                    nxt[g.step(u, j)] += c[u]
        c = [nxt[u] if masks[i][u] else 0 for u in range(n)]
    return c


def exact_family_prob(g, t, masks):
    total = g.n_vertices * g.d ** t
    return Fraction(sum(exact_family_counts(g, t, masks)), total)
