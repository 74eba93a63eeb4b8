"""测试度量图数据结构: 构造、规范化、切割与距离"""
import math
import sys
sys.path.insert(0, '.')

import pytest

from src.core.graph_core import (
    GraphError, bridges, build_graph, canonicalize, collapse_zero_edges, components, cut_vertex, discrete_isomorphic,
    from_edge_list, graph_space_distance, graph_to_dict, interval, lasso, loop, path, path_distance,
    pumpkin, star, subdivide, dumbbell,
)


def test_build_graph_from_json():
    data = {
        'edges': [{'id': 'e1', 'length': 1.0}, {'id': 'e2', 'length': 2.0}],
        'vertices': [
            {'id': 'u', 'slots': [['e1', 'a']]},
            {'id': 'v', 'slots': [['e1', 'b'], ['e2', 'a']]},
            {'id': 'w', 'slots': [['e2', 'b']]},
        ],
        'dirichlet': ['u'],
    }
    g = build_graph(data)
    assert g.total_length == pytest.approx(3.0)
    assert g.degree('v') == 2
    assert g.is_dirichlet('u')
    assert g.is_tree()
    assert build_graph(graph_to_dict(g)) == g


def test_invalid_graphs_rejected():
    with pytest.raises(GraphError):
        from_edge_list([('e1', 'u', 'v', -1.0)])
    with pytest.raises(GraphError):
        build_graph({'edges': [{'id': 'e1', 'length': 1.0}],
                     'vertices': [{'id': 'u', 'slots': [['e1', 'a']]}]})
    with pytest.raises(GraphError):
        from_edge_list([('e1', 'u', 'v', 1.0)], dirichlet=['x'])
    with pytest.raises(GraphError):
        build_graph({'edges': []})


def test_canonicalize_merges_degree_two_vertices():
    form = canonicalize(path([1.0, 2.0]))
    assert len(form.graph.edges) == 1
    assert form.graph.total_length == pytest.approx(3.0)
    # 原中间顶点落在新边上距起点 1 处
    edge_id, offset = form.vertex_map['v1']
    assert edge_id == form.graph.edge_ids[0]
    assert offset == pytest.approx(1.0)


def test_canonicalize_keeps_labelled_marker():
    g = lasso(2.0)
    form = canonicalize(g)
    assert len(form.graph.edges) == 3
    assert 'z' in form.graph.vertex_ids


def test_canonicalize_loop_keeps_one_vertex():
    g = from_edge_list([('e1', 'u', 'v', 0.5), ('e2', 'v', 'u', 0.5)])
    form = canonicalize(g)
    assert len(form.graph.edges) == 1
    assert form.graph.is_loop(form.graph.edge_ids[0])
    assert form.graph.total_length == pytest.approx(1.0)


def test_subdivide_interval():
    g, chain = subdivide(interval(1.0), 'e1', [0.25, 0.5])
    assert chain == ['e1#0', 'e1#1', 'e1#2']
    assert [g.length(e) for e in chain] == pytest.approx([0.25, 0.25, 0.5])
    assert g.degree('e1@1') == 2
    with pytest.raises(GraphError):
        subdivide(interval(1.0), 'e1', [1.5])
    with pytest.raises(GraphError):
        subdivide(interval(1.0), 'e1', [0.5, 0.5])


def test_cut_vertex_splits_star():
    g = star([1.0, 1.0, 1.0])
    cut = cut_vertex(g, 'c', [[('e1', 'a')], [('e2', 'a')], [('e3', 'a')]])
    assert len(components(cut)) == 3
    assert cut_vertex(g, 'c', [[('e1', 'a'), ('e2', 'a'), ('e3', 'a')]]) == g
    with pytest.raises(GraphError):
        cut_vertex(g, 'c', [[('e1', 'a')], [('e2', 'a')]])


def test_lasso_cut_components():
    g = lasso(1.0)
    cut = cut_vertex(g, 'v', [[('e1', 'b')], [('e2', 'a')], [('e3', 'a')]])
    parts = components(cut)
    assert len(parts) == 2
    assert parts[0][1] == frozenset({'e1'})
    assert parts[1][1] == frozenset({'e2', 'e3'})


def test_collapse_zero_edges():
    g, classes = collapse_zero_edges(path([1.0, 1e-3]), ['e2'])
    assert g.edge_ids == ['e1']
    assert g.total_length == pytest.approx(1.0)
    assert classes['v1=v2'] == ('v1', 'v2')

    figure_eight, _ = collapse_zero_edges(pumpkin([1.0, 1.0, 1.0]), ['e1'])
    assert len(figure_eight.vertices) == 1
    assert all(figure_eight.is_loop(e) for e in figure_eight.edge_ids)

    with pytest.raises(GraphError):
        collapse_zero_edges(interval(1.0), ['e1'])


def test_bridges():
    assert bridges(lasso(1.0)) == ['e1']
    assert bridges(dumbbell()) == ['h']
    assert bridges(pumpkin([1.0, 1.0, 1.0])) == []
    assert bridges(star([1.0, 2.0])) == ['e1', 'e2']


def test_path_distance():
    assert path_distance(interval(1.0), ('e1', 0.2), ('e1', 0.7)) == pytest.approx(0.5)
    assert path_distance(loop(1.0), ('e1', 0.1), ('e1', 0.9)) == pytest.approx(0.2)
    g = star([1.0, 2.0, 3.0])
    assert path_distance(g, ('e1', 1.0), ('e3', 3.0)) == pytest.approx(4.0)
    with pytest.raises(GraphError):
        path_distance(g, ('e1', 2.0), ('e2', 0.0))


def test_graph_space_distance():
    g1 = path([0.9, 1.1])
    g2 = path([1.1, 0.9])
    assert graph_space_distance(g1, g2) == pytest.approx(math.sqrt(0.08))
    assert graph_space_distance(g1, g1) == 0.0
    with pytest.raises(GraphError):
        graph_space_distance(g1, star([1.0, 1.0, 1.0]))


def test_discrete_isomorphism():
    left = pumpkin([1.0, 2.0, 3.0])
    right = from_edge_list([('a', 'x', 'y', 1.0), ('b', 'y', 'x', 1.0), ('c', 'x', 'y', 1.0)])
    assert discrete_isomorphic(left.discrete(), right.discrete()) is not None
    assert discrete_isomorphic(star([1.0, 1.0, 1.0]).discrete(), path([1.0, 1.0, 1.0]).discrete()) is None


def test_with_lengths_and_dirichlet():
    g = lasso(2.0)
    longer = g.with_lengths({'e1': 3.0})
    assert longer.length('e1') == 3.0
    assert longer.total_length == pytest.approx(5.0)
    assert g.with_dirichlet(['w']).dirichlet == frozenset({'w'})


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
