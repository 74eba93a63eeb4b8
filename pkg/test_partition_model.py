"""测试划分模型: 切割模式、分类、能量与划分之间的关系"""
import math
import sys
sys.path.insert(0, '.')

import pytest

from src.core.graph_core import interval, loop, pumpkin, star
from src.core.partition_model import (
    CutPattern, PartitionError, bipartite_check, classify, energy, equipartition_check, holder_sandwich,
    lambda_p, limit_pattern, make_partition, neighbours, parse_p, partition_distance, partition_to_dict,
    pattern_from_dict, rho, set_partitions, similar,
)

PI2 = math.pi ** 2

STAR_CENTRE = CutPattern.build({}, {'c': [[('e1', 'a')], [('e2', 'a')], [('e3', 'a')]]})


def test_interval_midpoint_partition():
    p = make_partition(interval(1.0), CutPattern.build({'e1': [0.5]}))
    assert p.k == 2
    assert p.exhaustive
    flags = classify(p)
    assert flags['rigid'] and flags['proper'] and flags['faithful']
    report = energy(p, 'dirichlet', math.inf)
    assert report.value == pytest.approx(PI2, rel=1e-12)
    assert report.values == pytest.approx((PI2, PI2), rel=1e-12)
    assert equipartition_check(p, 'dirichlet')
    colouring = bipartite_check(p)
    assert colouring is not None and colouring[0] != colouring[1]


def test_star_centre_cut():
    p = make_partition(star([1.0, 1.0, 1.0]), STAR_CENTRE)
    assert p.k == 3
    flags = p.flags
    assert flags['rigid'] and flags['faithful']
    assert not flags['proper']
    assert neighbours(p) == [(0, 1), (0, 2), (1, 2)]
    assert bipartite_check(p) is None
    assert energy(p, 'dirichlet').value == pytest.approx(PI2 / 4, rel=1e-12)


def test_loop_thirds_energy():
    pattern = CutPattern.build({'e1': [1 / 3, 2 / 3]}, {'v': [[('e1', 'a')], [('e1', 'b')]]})
    p = make_partition(loop(1.0), pattern)
    assert p.k == 3
    assert p.flags['proper']
    assert energy(p, 'dirichlet').value == pytest.approx(9 * PI2, rel=1e-9)


def test_loose_partition_is_not_rigid():
    # 环上只切一刀: 一个簇，切点不是分离点
    p = make_partition(loop(1.0), CutPattern.build({'e1': [0.5]}))
    assert p.k == 1
    flags = classify(p)
    assert flags['loose'] and not flags['rigid']


def test_natural_energy_and_holder_sandwich():
    p = make_partition(interval(1.0), CutPattern.build({'e1': [0.25]}))
    report = energy(p, 'natural', 2.0)
    assert sorted(report.values) == pytest.approx([PI2 / 0.75 ** 2, PI2 / 0.25 ** 2])
    assert report.min_value == pytest.approx(PI2 / 0.75 ** 2)
    assert holder_sandwich(report, 1.0, 2.0)
    assert holder_sandwich(report, 2.0, math.inf)
    assert report.lambda_p(1.0) <= report.lambda_p(2.0) <= report.lambda_p(math.inf)


def test_dirichlet_energy_needs_cut_in_every_cluster():
    p = make_partition(pumpkin([1.0, 1.0, 1.0]), CutPattern.build({}))
    assert p.k == 1
    with pytest.raises(PartitionError):
        energy(p, 'dirichlet')


def test_invalid_patterns():
    with pytest.raises(PartitionError):
        make_partition(interval(1.0), CutPattern.build({'e1': [1.0]}))
    with pytest.raises(PartitionError):
        make_partition(interval(1.0), CutPattern.build({'e9': [0.5]}))
    with pytest.raises(PartitionError):
        make_partition(star([1.0, 1.0, 1.0]), CutPattern.build({}, {'c': [[('e1', 'a')], [('e2', 'a')]]}))


def test_similarity_and_distance():
    g = interval(1.0)
    p1 = make_partition(g, CutPattern.build({'e1': [0.3]}))
    p2 = make_partition(g, CutPattern.build({'e1': [0.5]}))
    p3 = make_partition(g, CutPattern.build({'e1': [0.25, 0.5]}))
    assert similar(p1, p2)
    assert not similar(p1, p3)
    assert partition_distance(p1, p2) == pytest.approx(0.4)
    assert partition_distance(p1, p1) == 0.0
    with pytest.raises(PartitionError):
        partition_distance(p1, p3)


def test_similarity_up_to_graph_symmetry():
    g = star([1.0, 1.0, 1.0])
    on_e1 = make_partition(g, CutPattern.build({'e1': [0.3]}))
    on_e2 = make_partition(g, CutPattern.build({'e2': [0.3]}))
    further = make_partition(g, CutPattern.build({'e2': [0.4]}))
    assert similar(on_e1, on_e2)
    assert partition_distance(on_e1, on_e2) == pytest.approx(0.0, abs=1e-12)
    assert partition_distance(on_e1, further) == pytest.approx(0.2)

    # 区间的反射把靠近一端的切点换到另一端；描述相同时仍按恒等对应
    left = make_partition(interval(2.0), CutPattern.build({'e1': [0.9]}))
    right = make_partition(interval(2.0), CutPattern.build({'e1': [1.1]}))
    assert partition_distance(left, right) == pytest.approx(0.4)

    uneven = star([1.0, 2.0, 3.0])
    short = make_partition(uneven, CutPattern.build({'e1': [0.3]}))
    middle = make_partition(uneven, CutPattern.build({'e2': [0.3]}))
    assert not similar(short, middle)
    with pytest.raises(PartitionError):
        partition_distance(short, middle)


def test_limit_pattern_drops_vanishing_pieces():
    g = interval(1.0)
    pattern = CutPattern.build({'e1': [1e-12, 0.5]})
    limit = limit_pattern(g, pattern)
    assert limit.cuts('e1') == (0.5,)
    assert make_partition(g, limit).flags['rigid']


def test_limit_pattern_splits_vertex():
    g = star([1.0, 1.0, 1.0])
    pattern = CutPattern.build({'e1': [1e-12]})
    limit = limit_pattern(g, pattern)
    assert limit.cuts('e1') == ()
    assert len(limit.blocks('c')) == 2
    assert make_partition(g, limit).k == 2


def test_rho_enumerates_connected_clusters():
    g = pumpkin([1.0, 1.0, 1.0])
    clusters = rho(g, ['e1', 'e2'])
    # 边界顶点 v、w 可以各自保持或切开，但簇必须连通
    assert len(clusters) == 3
    assert all(c.is_connected() for c in clusters)
    with pytest.raises(PartitionError):
        rho(g, ['e7'])


def test_pattern_dict_round_trip():
    p = make_partition(star([1.0, 1.0, 1.0]), STAR_CENTRE)
    assert pattern_from_dict(STAR_CENTRE.to_dict()) == STAR_CENTRE
    data = partition_to_dict(p)
    assert data['k'] == 3
    assert data['flags']['rigid']
    assert len(data['clusters']) == 3


def test_helpers():
    assert len(list(set_partitions([1, 2, 3]))) == 5
    assert len(list(set_partitions([1, 2, 3, 4]))) == 15
    assert parse_p('inf') == math.inf
    assert parse_p('2') == 2.0
    with pytest.raises(PartitionError):
        parse_p(0)
    assert lambda_p([1.0, 9.0], math.inf) == 9.0
    with pytest.raises(PartitionError):
        lambda_p([], 1.0)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
