"""测试划分搜索: 模板枚举、最小/最大划分、扫描与结构性检验"""
import dataclasses
import math
import sys
sys.path.insert(0, '.')

import pytest

from src.core.graph_core import interval, loop, star
from src.core.partition_model import CutPattern, make_partition
import src.core.search as search
from src.core.search import (
    DEFAULT_OPTIONS, SearchError, enumerate_templates, iter_templates, kirchhoff_two_cut, maximize, minimize,
    path_certificate, sweep_k, sweep_length, sweep_p, template_from_pattern,
)

PI2 = math.pi ** 2


def test_template_counts():
    assert len(enumerate_templates(interval(1.0), 2)) == 1
    # 一条边上切一刀，或在中心把一条边分出去
    assert len(enumerate_templates(star([1.0, 1.0, 1.0]), 2)) == 2


def test_templates_ordered_by_dimension():
    dims = [t.dimension for t in iter_templates(star([1.0, 1.0, 1.0]), 3)]
    assert dims == sorted(dims)
    assert dims[0] == 0


def test_invalid_template_requests():
    with pytest.raises(SearchError):
        list(iter_templates(interval(1.0), 0))
    with pytest.raises(SearchError):
        list(iter_templates(interval(1.0), 2, class_filter='unknown'))


def test_template_from_pattern():
    template = template_from_pattern(interval(1.0), CutPattern.build({'e1': [0.4]}))
    assert template.dimension == 1
    assert template.k == 2
    assert template.flag('rigid')


def test_minimize_interval_natural():
    result = minimize(interval(1.0), 2, 'natural', math.inf)
    assert result.value == pytest.approx(4 * PI2, rel=1e-6)
    assert result.positions['e1'][0] == pytest.approx(0.5, abs=1e-4)
    assert path_certificate(result.partition, tol=1e-4)


def test_minimize_star_dirichlet_centre_cut():
    result = minimize(star([1.0, 1.0, 1.0]), 3, 'dirichlet', math.inf)
    assert result.value == pytest.approx(PI2 / 4, rel=1e-6)
    assert result.template.dimension == 0


def test_maximize_interval_dirichlet():
    result = maximize(interval(1.0), 2, 'dirichlet')
    assert result.value == pytest.approx(PI2, rel=1e-6)
    assert result.direction == 'maxmin'


def test_maximize_loop_natural():
    result = maximize(loop(1.0), 2, 'natural')
    assert result.value == pytest.approx(4 * PI2, rel=1e-6)


def test_reevaluation_mismatch_is_an_error(monkeypatch):
    exact = search.energy

    def drifted(*args, **kwargs):
        report = exact(*args, **kwargs)
        return dataclasses.replace(report, value=report.value * (1.0 + 1e-6))

    monkeypatch.setattr(search, 'energy', drifted)
    with pytest.raises(SearchError):
        minimize(interval(1.0), 2, 'natural', math.inf)


def test_infeasible_requests():
    with pytest.raises(SearchError):
        minimize(interval(1.0), 0, 'natural')
    with pytest.raises(SearchError):
        minimize(interval(1.0), 1, 'dirichlet')
    with pytest.raises(SearchError):
        minimize(interval(1.0), 2, 'other')
    with pytest.raises(SearchError):
        minimize(interval(1.0), 2, 'natural', p=0)


def test_sweep_p():
    table = sweep_p(interval(1.0), 2, 'natural', [1, 2, 'inf'])
    assert [row['p'] for row in table['rows']] == ['1.0', '2.0', 'inf']
    for row in table['rows']:
        assert row['value'] == pytest.approx(4 * PI2, rel=1e-6)
    assert table['diagnostics']['monotone_in_p']
    with pytest.raises(SearchError):
        sweep_p(interval(1.0), 2, 'natural', [])


def test_sweep_length():
    table = sweep_length(interval(1.0), 'e1', [1.0, 2.0], 2, 'natural')
    values = [row['value'] for row in table['rows']]
    assert values == pytest.approx([4 * PI2, PI2], rel=1e-6)
    assert table['diagnostics']['switches'] == []
    with pytest.raises(SearchError):
        sweep_length(interval(1.0), 'e9', [1.0], 2, 'natural')


def test_sweep_k():
    table = sweep_k(interval(1.0), 3, 'natural')
    assert [row['k'] for row in table['rows']] == [1, 2, 3]
    assert table['diagnostics']['monotone_in_k']
    assert table['rows'][-1]['value'] == pytest.approx(9 * PI2, rel=1e-6)


def test_kirchhoff_two_cut_on_interval():
    [row] = kirchhoff_two_cut(interval(1.0))
    assert row['bridge'] == 'e1'
    assert row['position'] == pytest.approx(0.5, abs=1e-6)
    assert row['value'] == pytest.approx(4 * PI2, rel=1e-6)
    assert row['holds']
    assert kirchhoff_two_cut(loop(1.0)) == []


def test_path_certificate():
    thirds = CutPattern.build({'e1': [1 / 3, 2 / 3]}, {'v': [[('e1', 'a')], [('e1', 'b')]]})
    assert path_certificate(make_partition(loop(1.0), thirds))
    assert not path_certificate(make_partition(interval(1.0), CutPattern.build({'e1': [0.3]})))


def test_default_cut_cap():
    assert DEFAULT_OPTIONS.cap(3) == 2
    assert DEFAULT_OPTIONS.cap(1) == 0


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
