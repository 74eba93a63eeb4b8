"""测试节点域: 零点集、Courant 界、树上粘合、节点判定与双覆盖"""
import math
import sys
sys.path.insert(0, '.')

import pytest

from src.core.graph_core import interval, loop, pumpkin, star
from src.core.partition_model import CutPattern, make_partition
from src.core.spectral import eigenfunction, eigenvalues
from src.core.nodal import (
    NodalError, antisymmetric_spectrum, build_double_cover, courant_check, cover_of_partition,
    generalised_nodal_check, glue_equipartition, nodal_partition, split_spectrum, zero_set,
)

PI2 = math.pi ** 2

LOOP_THIRDS = CutPattern.build({'e1': [1 / 3, 2 / 3]}, {'v': [[('e1', 'a')], [('e1', 'b')]]})
STAR_CENTRE = CutPattern.build({}, {'c': [[('e1', 'a')], [('e2', 'a')], [('e3', 'a')]]})


def test_zero_set_on_interval():
    g = interval(1.0)
    [w] = eigenfunction(g, PI2)
    zeros = zero_set(g, w)
    assert len(zeros.interior) == 1
    edge_id, x = zeros.interior[0]
    assert edge_id == 'e1'
    assert x == pytest.approx(0.5, abs=1e-9)
    assert not zeros.vertices
    assert not zeros.zero_edges


def test_nodal_partition_counts_domains():
    g = interval(1.0)
    [w] = eigenfunction(g, 4 * PI2)
    result = nodal_partition(g, w)
    assert result.count == 3
    assert result.to_dict()['exhaustive_on_base']
    assert set(result.signs) == {'+', '-'}


def test_courant_on_loop():
    report = courant_check(loop(1.0), 2)
    assert report['kappa'] == 3
    assert report['counts'] == [2, 2]
    assert report['passed']


def test_courant_on_star():
    for index in (2, 3, 4):
        assert courant_check(star([1.0, 1.0, 1.0]), index)['passed']
    with pytest.raises(NodalError):
        courant_check(star([1.0, 1.0, 1.0]), 0)


def test_glue_interval_halves():
    p = make_partition(interval(2.0), CutPattern.build({'e1': [1.0]}))
    glued = glue_equipartition(p)
    assert glued is not None
    assert sorted(abs(t) for t in glued.weights) == pytest.approx([1.0, 1.0])
    assert glued.weights[0] * glued.weights[1] < 0
    assert glued.residual < 1e-6
    assert glued.wave.eigenvalue == pytest.approx(PI2 / 4, rel=1e-9)


def test_glue_star_centre():
    glued = glue_equipartition(make_partition(star([1.0, 1.0, 1.0]), STAR_CENTRE))
    assert glued is not None
    assert sorted(abs(t) for t in glued.weights) == pytest.approx([0.5, 0.5, 1.0])
    assert glued.residual < 1e-6


def test_glue_rejects_non_tree_and_unequal():
    with pytest.raises(NodalError):
        glue_equipartition(make_partition(loop(1.0), LOOP_THIRDS))
    with pytest.raises(NodalError):
        glue_equipartition(make_partition(interval(1.0), CutPattern.build({'e1': [0.3]})))


def test_pumpkin_edges_are_nodal():
    blocks = {v: [[('e1', end)], [('e2', end)], [('e3', end)]] for v, end in (('v', 'a'), ('w', 'b'))}
    p = make_partition(pumpkin([1.0, 1.0, 1.0]), CutPattern.build({}, blocks))
    assert p.k == 3
    assert generalised_nodal_check(p)['verdict'] == 'nodal'


def test_star_with_vanishing_edge_is_generalised_nodal():
    pattern = CutPattern.build({}, {'c': [[('e1', 'a')], [('e2', 'a'), ('e3', 'a')]]})
    p = make_partition(star([1.0, 1.0, 0.5]), pattern)
    verdict = generalised_nodal_check(p)
    assert verdict['verdict'] == 'generalised-nodal'
    assert verdict['energy'] == pytest.approx(PI2 / 4, rel=1e-9)


def test_unequal_partition_is_neither():
    p = make_partition(interval(1.0), CutPattern.build({'e1': [0.3]}))
    assert generalised_nodal_check(p)['verdict'] == 'neither'


def test_double_cover_of_loop():
    cover = build_double_cover(loop(1.0), {'v'})
    assert all(cover.verify().values())
    assert cover.graph.total_length == pytest.approx(2.0)
    anti = antisymmetric_spectrum(cover, 3)
    assert anti.values == pytest.approx([PI2, PI2, 9 * PI2], rel=1e-9)


def test_split_spectrum_merges_to_full():
    cover = build_double_cover(loop(1.0), {'v'})
    parts = split_spectrum(cover, 3)
    merged = sorted(parts['symmetric'].values + parts['antisymmetric'].values)
    assert merged == pytest.approx(list(parts['full'].values), rel=1e-12, abs=1e-12)
    direct = eigenvalues(cover.graph, len(merged))
    assert merged == pytest.approx(list(direct.values), rel=1e-9, abs=1e-9)


def test_cover_of_proper_partition():
    cover = cover_of_partition(make_partition(loop(1.0), LOOP_THIRDS))
    assert antisymmetric_spectrum(cover, 3)[2] == pytest.approx(9 * PI2, rel=1e-9)
    with pytest.raises(NodalError):
        cover_of_partition(make_partition(star([1.0, 1.0, 1.0]), STAR_CENTRE))
    with pytest.raises(NodalError):
        build_double_cover(star([1.0, 1.0, 1.0]), {'c'})


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
