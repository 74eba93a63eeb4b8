"""测试验收夹具: 每个夹具单独运行并给出通过结论"""
import json
import os
import sys
sys.path.insert(0, '.')

import pytest

from src.core.fixtures import FixtureSuite
from src.core.graph_core import build_graph

ROOT = os.path.dirname(os.path.abspath(__file__))
GRAPHS = os.path.join(ROOT, 'config', 'graphs')


def load_graph(name):
    with open(os.path.join(GRAPHS, f"{name}.json"), 'r', encoding='utf-8') as f:
        return build_graph(json.load(f))


@pytest.fixture(scope='module')
def suite():
    return FixtureSuite(load_graph)


def assert_passed(outcome):
    passed, detail = outcome
    assert passed, detail


def test_exact_spectra(suite):
    assert_passed(suite.check_exact_spectra())


@pytest.mark.slow
def test_pumpkin_h(suite):
    assert_passed(suite.check_pumpkin_h())


@pytest.mark.slow
def test_pumpkin3(suite):
    assert_passed(suite.check_pumpkin3())


@pytest.mark.slow
def test_pumpkin6(suite):
    assert_passed(suite.check_pumpkin6())


@pytest.mark.slow
def test_link_mu2(suite):
    assert_passed(suite.check_link_mu2())


@pytest.mark.slow
def test_star_p_sweep(suite):
    assert_passed(suite.check_star_p_sweep())


@pytest.mark.slow
def test_star_eps(suite):
    assert_passed(suite.check_star_eps())


@pytest.mark.slow
def test_lasso_sweep(suite):
    assert_passed(suite.check_lasso_sweep())


@pytest.mark.slow
def test_properties(suite):
    assert_passed(suite.check_properties())


@pytest.mark.slow
def test_tree_gluing(suite):
    assert_passed(suite.check_tree_gluing())


@pytest.mark.slow
def test_double_cover(suite):
    assert_passed(suite.check_double_cover())


@pytest.mark.slow
def test_dumbbell(suite):
    assert_passed(suite.check_dumbbell())


def test_every_fixture_has_a_check(suite):
    assert sorted(suite.names) == sorted([
        'exact-spectra', 'pumpkin-H', 'pumpkin3', 'pumpkin6', 'link-mu2', 'star3-p-sweep', 'star3-eps',
        'lasso-sweep', 'properties', 'tree-gluing', 'double-cover', 'dumbbell',
    ])
    outcome = suite.run(['no-such-fixture'])
    assert not outcome['success']
    assert 'no-such-fixture' in outcome['error']


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
