"""测试谱求解: 闭式谱、久期方程扫描、有限元交叉验证与本征函数"""
import math
import sys
sys.path.insert(0, '.')

import numpy as np
import pytest

from src.core.graph_core import dumbbell, from_edge_list, interval, lasso, loop, path, pumpkin, star
from src.core.spectral import (
    SpectralError, SpectralResult, assemble_secular, degeneration_limit, eigenfunction, eigenvalues, inner_product,
    kernel_dimension, lambda1, mu2, nicaise_bounds, power_mean, set_cache_size, solve_fork, star_cut_energy,
    vertex_residual, von_below_equilateral, weyl_check, weyl_deviation,
)

PI2 = math.pi ** 2


def test_closed_form_values():
    assert mu2(interval(1.0)) == pytest.approx(PI2, rel=1e-12)
    assert lambda1(interval(1.0, dirichlet_ends=['u'])) == pytest.approx(PI2 / 4, rel=1e-12)
    assert lambda1(interval(1.0, dirichlet_ends=['u', 'w'])) == pytest.approx(PI2, rel=1e-12)
    assert mu2(loop(1.0)) == pytest.approx(4 * PI2, rel=1e-12)
    assert eigenvalues(loop(1.0), 3).multiplicities == (1, 2, 2)


def test_secular_matrix_is_singular_at_eigenvalues():
    g = interval(1.0)
    assert assemble_secular(g, math.pi).shape == (2, 2)
    assert np.linalg.svd(assemble_secular(g, math.pi), compute_uv=False).min() == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.svd(assemble_secular(g, math.pi / 2), compute_uv=False).min() > 0.5
    with pytest.raises(SpectralError):
        assemble_secular(g, 0.0)


def test_dummy_vertices_do_not_change_spectrum():
    assert mu2(path([0.3, 0.7])) == pytest.approx(PI2, rel=1e-12)


def test_star_spectral_gap():
    assert mu2(star([1.0, 1.0, 1.0])) == pytest.approx(PI2 / 4, rel=1e-9)


def test_pumpkin_spectrum_with_multiplicity():
    result = eigenvalues(pumpkin([1.0, 1.0, 1.0]), 4)
    assert result.values[0] == 0.0
    assert result.values[1:] == pytest.approx([PI2] * 3, rel=1e-9)
    assert result.multiplicities[1] == 3


def test_pumpkin_h_fifth_eigenvalue():
    g = pumpkin([math.pi, 2 * math.pi, 2 * math.pi])
    result = eigenvalues(g, 5)
    assert result[4] == pytest.approx(1.0, rel=1e-9)
    assert result.multiplicities[4] == 1


def test_von_below_matches_secular():
    g = pumpkin([1.0, 1.0, 1.0])
    oracle = von_below_equilateral(g, 6)
    exact = eigenvalues(g, 6)
    assert oracle.values == pytest.approx(exact.values, rel=1e-9, abs=1e-9)
    with pytest.raises(SpectralError):
        von_below_equilateral(star([1.0, 2.0]), 2)


def test_fem_cross_check_agrees():
    g = star([1.0, 1.0, 1.0])
    checked = eigenvalues(g, 4, method='cross-check')
    assert checked.method == 'cross-check'
    fem = eigenvalues(g, 4, method='fem')
    assert fem.values == pytest.approx(checked.values, rel=1e-6, abs=1e-9)


def test_lasso_spectrum_ignores_marker_label():
    g = lasso(2.0)
    bare = from_edge_list([('e1', 'w', 'v', 2.0), ('e2', 'v', 'v', 2.0)])
    assert eigenvalues(g, 4).values == pytest.approx(eigenvalues(bare, 4).values, rel=1e-9, abs=1e-12)


def test_nicaise_bounds():
    g = star([0.5, 1.0, 1.5])
    low_d, low_n = nicaise_bounds(g)
    assert low_n == pytest.approx(PI2 / 9)
    assert low_d == pytest.approx(PI2 / 36)
    assert mu2(g) >= low_n
    # 路径图取等号
    assert mu2(path([1.0, 2.0])) == pytest.approx(nicaise_bounds(path([1.0, 2.0]))[1], rel=1e-9)


def test_eigenfunction_on_interval():
    g = interval(1.0)
    [w] = eigenfunction(g, PI2)
    assert inner_product(g, w, w) == pytest.approx(1.0, rel=1e-9)
    assert vertex_residual(g, w) < 1e-8
    assert float(w.value('e1', 0.5)) == pytest.approx(0.0, abs=1e-9)


def test_eigenfunction_basis_is_orthonormal():
    g = pumpkin([1.0, 1.0, 1.0])
    basis = eigenfunction(g, PI2)
    assert len(basis) == 3
    for i, u in enumerate(basis):
        for j, w in enumerate(basis):
            assert inner_product(g, u, w) == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)


def test_eigenfunction_rejects_non_eigenvalue():
    with pytest.raises(SpectralError):
        eigenfunction(star([1.0, 1.0, 1.0]), 1.0)


def test_solve_fork_and_star_cut_energy():
    assert solve_fork(1.0) == pytest.approx(math.atan(1 / math.sqrt(2)), rel=1e-12)
    # 在边中点切割时外侧簇为长 1/2 的 D-N 区间
    assert star_cut_energy(0.5, math.inf) == pytest.approx(max(PI2, solve_fork(0.5) ** 2))
    with pytest.raises(SpectralError):
        solve_fork(0.0)


def test_power_mean():
    assert power_mean([1.0, 4.0], math.inf) == 4.0
    assert power_mean([1.0, 3.0], 1.0) == pytest.approx(2.0)
    assert power_mean([2.0, 2.0], 2.0) == pytest.approx(2.0)
    with pytest.raises(SpectralError):
        power_mean([1.0], -1.0)


def test_pumpkin_h_has_no_duplicate_roots():
    g = pumpkin([math.pi, 2 * math.pi, 2 * math.pi])
    # 长边各加一个中点后为 5 条长 π 的边
    subdivided = from_edge_list([
        ('e1', 'v', 'w', math.pi),
        ('e2a', 'v', 'm2', math.pi), ('e2b', 'm2', 'w', math.pi),
        ('e3a', 'v', 'm3', math.pi), ('e3b', 'm3', 'w', math.pi),
    ])
    exact = eigenvalues(g, 6)
    assert exact.values == pytest.approx(von_below_equilateral(subdivided, 6).values, rel=1e-9, abs=1e-12)
    assert exact.multiplicities == (1,) * 6
    assert exact[2] == pytest.approx((math.acos(-1.0 / 3.0) / math.pi) ** 2, rel=1e-9)


def test_error_estimates_are_tight():
    for g in (star([1.0, 1.0, 1.0]), pumpkin([1.0, 1.0, 1.0]), lasso(0.7, (0.4, 1.3)), dumbbell()):
        result = eigenvalues(g, 8)
        for value, err in zip(result.values, result.errors):
            assert err <= 1e-9 * max(1.0, value)


@pytest.mark.parametrize('handle', [7.9e-6, 5.2e-5, 1.4e-3])
def test_lasso_with_tiny_handle(handle):
    # 短柄只压低环上余弦模态，正弦模态仍为 π²
    result = eigenvalues(lasso(handle), 3)
    assert result.multiplicities[1:] == (1, 1)
    assert result[1] < PI2
    assert result[1] == pytest.approx(PI2 * (1.0 - handle), rel=1e-5)
    assert result[2] == pytest.approx(PI2, rel=1e-9)
    assert mu2(lasso(handle)) == pytest.approx(result[1], rel=1e-11)


def test_eigenfunction_on_loop_double_eigenvalue():
    g = loop(1.0)
    assert kernel_dimension(g, 2 * math.pi) == 2
    basis = eigenfunction(g, 4 * PI2)
    assert len(basis) == 2
    for i, u in enumerate(basis):
        assert vertex_residual(g, u) < 1e-8
        for j, w in enumerate(basis):
            assert inner_product(g, u, w) == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)


def test_weyl_count_on_corpus():
    graphs = [interval(1.0), loop(1.0), star([1.0, 1.0, 1.0]), pumpkin([1.0, 1.0, 1.0]), lasso(1.0),
              dumbbell(), pumpkin([math.pi, 2 * math.pi, 2 * math.pi]), star([0.5, 1.0, 1.5])]
    for g in graphs:
        result = eigenvalues(g, 12)
        assert weyl_check(g, result)
        low, high = weyl_deviation(g, result)
        assert -len(g.edges) - 1e-9 <= low and high <= len(g.vertices) + 1e-9


def test_weyl_check_flags_missing_roots():
    # 漏掉 π², …, 81π² 之后计数远低于 Weyl 主项
    gapped = SpectralResult((0.0, 100 * PI2), (1, 1), (0.0, 0.0), 'secular')
    assert not weyl_check(interval(1.0), gapped)
    assert weyl_check(interval(1.0), eigenvalues(interval(1.0), 10))


def test_eigenvalues_converge_when_edge_shrinks():
    result = degeneration_limit(lasso(1.0), ['e1'], 5)
    assert result['limit'] == pytest.approx([0.0, PI2, PI2, 4 * PI2, 4 * PI2], rel=1e-12, abs=1e-12)
    assert result['extrapolated'] == pytest.approx(result['limit'], rel=1e-6, abs=1e-9)
    errors = result['errors']
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] < 1e-2
    with pytest.raises(SpectralError):
        degeneration_limit(lasso(1.0), ['e1'], 3, lengths=(1e-2,))


def test_invalid_requests():
    with pytest.raises(SpectralError):
        eigenvalues(interval(1.0), 0)
    with pytest.raises(SpectralError):
        eigenvalues(interval(1.0), 2, method='unknown')
    with pytest.raises(SpectralError):
        lambda1(interval(1.0))
    with pytest.raises(SpectralError):
        set_cache_size(0)


def test_cache_resize_keeps_results():
    before = mu2(star([1.0, 2.0, 3.0]))
    set_cache_size(128)
    assert mu2(star([1.0, 2.0, 3.0])) == before
    set_cache_size(4096)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
