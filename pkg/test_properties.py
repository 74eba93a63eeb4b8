"""随机图上的性质测试: Nicaise 下界、Courant 界、Hölder 夹逼与划分距离"""
import math
import sys
sys.path.insert(0, '.')

import numpy as np
import pytest

from src.core.fixtures import random_graph, random_tree
from src.core.partition_model import CutPattern, energy, holder_sandwich, make_partition, partition_distance
from src.core.search import kirchhoff_two_cut
from src.core.spectral import eigenvalues, lambda1, mu2, nicaise_bounds
from src.core.nodal import courant_check

SEED = 2024


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def test_random_graphs_are_connected(rng):
    for _ in range(20):
        g = random_graph(rng)
        assert g.is_connected()
        assert 1 <= len(g.edges) <= 6
    for _ in range(10):
        assert random_tree(rng).is_tree()


def test_nicaise_lower_bounds(rng):
    for _ in range(15):
        g = random_graph(rng, max_edges=5)
        low_d, low_n = nicaise_bounds(g)
        assert mu2(g) >= low_n * (1 - 1e-9)
        assert lambda1(g.with_dirichlet([g.vertex_ids[0]])) >= low_d * (1 - 1e-9)


def test_spectrum_is_sorted(rng):
    for _ in range(10):
        values = eigenvalues(random_graph(rng, max_edges=4), 6).values
        assert values[0] == 0.0
        assert list(values) == sorted(values)


def test_courant_on_random_trees(rng):
    for _ in range(8):
        g = random_tree(rng, max_edges=3)
        for index in range(1, 5):
            report = courant_check(g, index)
            assert report['passed'], report


def test_holder_sandwich_on_random_cuts(rng):
    for _ in range(10):
        g = random_graph(rng, max_edges=4)
        edge = g.edges[0]
        p = make_partition(g, CutPattern.build({edge.id: [0.4 * edge.length]}))
        if p.k < 2:
            continue
        for q, exponent in ((1.0, 2.0), (2.0, math.inf), (1.0, math.inf)):
            assert holder_sandwich(energy(p, 'natural', exponent), q, exponent)


def test_partition_distance_axioms(rng):
    for _ in range(10):
        g = random_graph(rng, max_edges=4)
        edge = g.edges[-1]
        first, second, third = (make_partition(g, CutPattern.build({edge.id: [t * edge.length]}))
                                for t in (0.2, 0.5, 0.6))
        assert partition_distance(first, first) == 0.0
        assert partition_distance(first, second) == pytest.approx(partition_distance(second, first))
        assert partition_distance(first, third) <= (partition_distance(first, second)
                                                    + partition_distance(second, third) + 1e-12)


def test_bridge_cut_beats_spectral_gap(rng):
    for _ in range(4):
        g = random_tree(rng, max_edges=3)
        rows = kirchhoff_two_cut(g)
        assert len(rows) == len(g.edges)
        assert all(row['holds'] for row in rows)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
