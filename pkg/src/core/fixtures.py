"""
验收夹具 - 内置图上的精确值、结构性定理与性质检验（verify 命令）
"""
import math
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .graph_core import MetricGraph, bridges, from_edge_list, interval, loop, path, star
from .nodal import (
    DEFAULT_NODAL, NodalError, NodalSettings, antisymmetric_spectrum, courant_check,
    cover_of_partition, glue_equipartition, split_spectrum,
)
from .partition_model import (
    CutPattern, bipartite_check, energy, equipartition_check, holder_sandwich, limit_pattern,
    make_partition, partition_distance, similar,
)
from .search import (
    DEFAULT_OPTIONS, SearchError, SearchOptions, kirchhoff_two_cut, maximize, minimize, path_certificate,
    sweep_length, sweep_p,
)
from .spectral import (
    DEFAULT_SETTINGS, SolverSettings, eigenvalues, lambda1, mu2, nicaise_bounds, star_cut_energy,
    von_below_equilateral,
)

PI2 = math.pi ** 2

CORPUS = ('lasso', 'star3', 'star3_eps', 'pumpkin3', 'pumpkin6', 'dumbbell', 'reinforced_loop')


def random_graph(rng: np.random.Generator, max_edges: int = 6, tree: bool = False,
                 lengths: Tuple[float, float] = (0.5, 2.0)) -> MetricGraph:
    """
    随机连通度量图: 先生成随机生成树，再（非树时）补充平行边与环

    Args:
        rng: numpy 随机数发生器
        max_edges: 边数上限
        tree: 只生成树
    """
    n_edges = int(rng.integers(1, max_edges + 1))
    n_vertices = n_edges + 1 if tree else int(rng.integers(1, n_edges + 1)) + 1
    if n_vertices - 1 > n_edges:
        n_vertices = n_edges + 1
    edges = []
    for i in range(1, n_vertices):
        parent = int(rng.integers(0, i))
        edges.append((f"e{len(edges) + 1}", f"v{parent}", f"v{i}", float(rng.uniform(*lengths))))
    while len(edges) < n_edges:
        u, v = (int(x) for x in rng.integers(0, n_vertices, size=2))
        edges.append((f"e{len(edges) + 1}", f"v{u}", f"v{v}", float(rng.uniform(*lengths))))
    return from_edge_list(edges)


def random_tree(rng: np.random.Generator, max_edges: int = 6) -> MetricGraph:
    return random_graph(rng, max_edges, tree=True)


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(abs(b), 1e-300)


class FixtureSuite:
    """
    验收夹具集合

    每个夹具返回 (是否通过, 说明)；异常视为失败。
    """

    def __init__(self, load_graph: Callable[[str], MetricGraph],
                 settings: SolverSettings = DEFAULT_SETTINGS,
                 options: SearchOptions = DEFAULT_OPTIONS,
                 nodal_settings: NodalSettings = DEFAULT_NODAL,
                 logger=None, seed: int = 2024):
        self.load_graph = load_graph
        self.settings = settings
        self.options = options
        self.nodal_settings = nodal_settings
        self.logger = logger
        self.seed = seed
        self.fixtures: Dict[str, Callable[[], Tuple[bool, str]]] = {
            'exact-spectra': self.check_exact_spectra,
            'pumpkin-H': self.check_pumpkin_h,
            'pumpkin3': self.check_pumpkin3,
            'pumpkin6': self.check_pumpkin6,
            'link-mu2': self.check_link_mu2,
            'star3-p-sweep': self.check_star_p_sweep,
            'star3-eps': self.check_star_eps,
            'lasso-sweep': self.check_lasso_sweep,
            'properties': self.check_properties,
            'tree-gluing': self.check_tree_gluing,
            'double-cover': self.check_double_cover,
            'dumbbell': self.check_dumbbell,
        }

    @property
    def names(self) -> List[str]:
        return list(self.fixtures)

    def run(self, names: Optional[Sequence[str]] = None) -> Dict:
        """
        运行夹具

        Args:
            names: 只运行这些夹具（None 表示全部）

        Returns:
            Dict: success（全部通过）与每个夹具的结果
        """
        selected = list(names) if names else self.names
        unknown = [n for n in selected if n not in self.fixtures]
        if unknown:
            return {'success': False, 'error': f"未知的夹具: {', '.join(unknown)}", 'results': []}

        results = []
        for i, name in enumerate(selected, 1):
            if self.logger:
                self.logger.stage_start(i, name)
            try:
                passed, detail = self.fixtures[name]()
                error = None
            except Exception as e:
                passed, detail, error = False, '', f"{type(e).__name__}: {e}"
                if self.logger:
                    self.logger.error(f"夹具 {name} 执行异常: {error}", exc_info=True)
            if self.logger:
                self.logger.verdict(name, passed, detail or (error or ''))
            results.append({'fixture': name, 'passed': passed, 'detail': detail, 'error': error})

        return {'success': all(r['passed'] for r in results), 'results': results}

    # ------------------------------------------------------------ 夹具

    def _search(self, **overrides) -> SearchOptions:
        return replace(self.options, **overrides)

    def check_exact_spectra(self) -> Tuple[bool, str]:
        checks = [
            ('μ₂(区间)', mu2(interval(1.0), self.settings), PI2),
            ('λ₁(区间, D-N)', lambda1(interval(1.0, dirichlet_ends=['u']), self.settings), PI2 / 4),
            ('μ₂(环)', mu2(loop(1.0), self.settings), 4 * PI2),
            ('μ₂(等边 3-星)', mu2(self.load_graph('star3'), self.settings), PI2 / 4),
        ]
        failed = [f"{name}={value!r}" for name, value, expected in checks if not _close(value, expected, 1e-9)]
        return not failed, "; ".join(failed) or f"{len(checks)} 个闭式值一致"

    def check_pumpkin_h(self) -> Tuple[bool, str]:
        g = self.load_graph('pumpkin_H')
        exact = eigenvalues(g, 5, settings=self.settings)
        checked = eigenvalues(g, 5, method='cross-check', settings=self.settings)
        # H 不等边，用边长 π 的等边细分图给出参照谱
        equilateral = from_edge_list([
            ('e1', 'v', 'w', math.pi),
            ('e2a', 'v', 'm2', math.pi), ('e2b', 'm2', 'w', math.pi),
            ('e3a', 'v', 'm3', math.pi), ('e3b', 'm3', 'w', math.pi),
        ])
        oracle = von_below_equilateral(equilateral, 5)
        problems = []
        for i, (s, o) in enumerate(zip(exact.values, oracle.values)):
            if abs(s - o) > 1e-9 * max(1.0, o):
                problems.append(f"μ_{i + 1}: {s!r} vs {o!r}")
        if not _close(exact[4], 1.0, 1e-9) or exact.multiplicities[4] != 1:
            problems.append(f"μ₅={exact[4]!r} 重数 {exact.multiplicities[4]}")
        if any(abs(a - b) > 1e-9 * max(1.0, b) for a, b in zip(checked.values, exact.values)):
            problems.append("交叉验证值不一致")
        four = minimize(g, 4, 'dirichlet', math.inf, 'rigid', self._search(max_cuts_per_edge=1), self.settings)
        five = minimize(g, 5, 'dirichlet', math.inf, 'rigid', self.options, self.settings)
        if not _close(four.value, 1.0, 1e-6):
            problems.append(f"k=4 最优值 {four.value!r}")
        if not _close(five.value, 1.0, 1e-6):
            problems.append(f"k=5 最优值 {five.value!r}")
        return not problems, "; ".join(problems) or "μ₅=1 单重，k=4、5 最优值均为 1"

    def check_pumpkin3(self) -> Tuple[bool, str]:
        g = self.load_graph('pumpkin3')
        target = 4 * PI2 / 9
        problems = []
        for p in (1.0, 2.0, math.inf):
            result = minimize(g, 2, 'natural', p, 'rigid', self._search(certified_stop=False), self.settings)
            if not _close(result.value, target, 1e-7):
                problems.append(f"p={p}: {result.value!r}")
            if len(result.ties) != 1:
                problems.append(f"p={p}: {len(result.ties)} 个并列模板")
        return not problems, "; ".join(problems) or "p ∈ {1,2,∞} 时均为 4π²/9，最优模板唯一"

    def check_pumpkin6(self) -> Tuple[bool, str]:
        g = self.load_graph('pumpkin6')
        result = minimize(g, 2, 'natural', math.inf, 'rigid', self.options, self.settings)
        ok = _close(result.value, PI2 / 9, 1e-7) and path_certificate(result.partition)
        return ok, f"值 {result.value!r}，簇为长 3 的路径: {path_certificate(result.partition)}"

    def check_link_mu2(self) -> Tuple[bool, str]:
        problems = []
        for name in CORPUS:
            g = self.load_graph(name)
            value = minimize(g, 2, 'dirichlet', math.inf, 'rigid', self.options, self.settings).value
            gap = mu2(g, self.settings)
            if not _close(value, gap, 1e-6):
                problems.append(f"{name}: {value!r} vs μ₂={gap!r}")
            if self.logger:
                self.logger.debug(f"{name}: 2-划分能量 {value!r}, μ₂ {gap!r}")
        return not problems, "; ".join(problems) or f"{len(CORPUS)} 个图上 2-划分 Dirichlet 能量等于 μ₂"

    def check_star_p_sweep(self) -> Tuple[bool, str]:
        g = self.load_graph('star3')
        grid = [1.0, 1.5, 2.0, 4.0, 8.0, 16.0]
        table = sweep_p(g, 2, 'dirichlet', grid + ['inf'], 'rigid', self.options, self.settings)
        rows = table['rows']
        offsets = [row['positions'][0] if len(row['positions']) == 1 else None for row in rows[:-1]]
        problems = []
        if any(a is None or not a > 0 for a in offsets):
            problems.append(f"有限 p 的最优切点不在边内部: {offsets}")
        elif any(b >= a for a, b in zip(offsets, offsets[1:])):
            problems.append(f"a_p 不严格递减: {offsets}")
        last = rows[-1]
        if last['positions'] or not _close(last['value'], PI2 / 4, 1e-9):
            problems.append(f"p=∞: {last['template']} {last['value']!r}")
        if offsets and offsets[0] is not None:
            scan = np.linspace(1e-4, 1 - 1e-4, 2000)
            i = int(np.argmin([star_cut_energy(a, 1.0) for a in scan]))
            refined = optimize.minimize_scalar(lambda a: star_cut_energy(a, 1.0),
                                               bounds=(scan[max(i - 1, 0)], scan[min(i + 1, len(scan) - 1)]),
                                               method='bounded', options={'xatol': 1e-10})
            brute = float(refined.x)
            if abs(brute - offsets[0]) > 1e-4:
                problems.append(f"a₁={offsets[0]!r} 与穷举 {brute!r} 不符")
        return not problems, "; ".join(problems) or f"a_p = {[round(a, 6) for a in offsets]}"

    def check_star_eps(self) -> Tuple[bool, str]:
        g = self.load_graph('star3_eps')
        problems = []
        # p=∞ 时在 e1 靠近中心处切一刀、再在中心分出 e3 的划分同样达到 π²/4，唯一性只对内部连通划分成立
        for p, class_filter in ((1.0, 'rigid'), (2.0, 'rigid'), (math.inf, 'internally_connected')):
            result = minimize(g, 3, 'dirichlet', p, class_filter, self._search(certified_stop=False), self.settings)
            if result.template.dimension != 0 or len(result.ties) != 1:
                problems.append(f"p={p}: 最优模板 {result.template.descriptor}，并列 {len(result.ties)}")
            if equipartition_check(result.partition, 'dirichlet', 1e-8, self.settings):
                problems.append(f"p={p}: 不应为等划分")
        centre = CutPattern.build({}, {'c': [[('e1', 'a')], [('e2', 'a')], [('e3', 'a')]]})
        if bipartite_check(make_partition(self.load_graph('star3'), centre)) is not None:
            problems.append("等边 3-星的中心划分不应可二染色")
        return not problems, "; ".join(problems) or "中心切割为唯一最优 3-划分"

    def check_lasso_sweep(self) -> Tuple[bool, str]:
        g = self.load_graph('lasso')
        grid = [2.0 + 0.25 * i for i in range(7)]
        table = sweep_length(g, 'e1', grid, 2, 'natural', math.inf, 'rigid', self.options, self.settings)
        rows = table['rows']
        problems = []
        for row in rows:
            if row['length'] <= 3.0 and not _close(row['value'], PI2 / 4, 1e-7):
                problems.append(f"a={row['length']}: {row['value']!r}")
        tail = [r['value'] for r in rows if r['length'] >= 3.0]
        if any(b >= a for a, b in zip(tail, tail[1:])):
            problems.append(f"a>3 时不严格递减: {tail}")
        at_three = next(r for r in rows if r['length'] == 3.0)
        if at_three['ties'] < 2:
            problems.append("a=3 处没有检测到并列模板")
        if not any(s in (3.0, 3.25) for s in table['diagnostics']['switches']):
            problems.append(f"模板切换位置: {table['diagnostics']['switches']}")
        return not problems, "; ".join(problems) or "a ≤ 3 平台 π²/4，a=3 处模板切换"

    def check_properties(self, count: int = 50) -> Tuple[bool, str]:
        rng = np.random.default_rng(self.seed)
        failures = []
        for i in range(count):
            g = random_graph(rng, 6)
            failures.extend(f"#{i} {name}" for name in self._graph_properties(g, i))
        # 搜索类性质只在小图上检验
        small = np.random.default_rng(self.seed + 1)
        capped = replace(self.options, max_cuts_per_edge=1)
        for i in range(6):
            g = random_graph(small, 3)
            spectrum = eigenvalues(g, 3, settings=self.settings)
            for k in (2, 3):
                try:
                    value = minimize(g, k, 'dirichlet', math.inf, 'rigid', capped, self.settings).value
                except SearchError:
                    continue
                if spectrum[k - 1] > value * (1 + 1e-7):
                    failures.append(f"小图 #{i} μ_{k}={spectrum[k - 1]!r} > {value!r}")
            if g.is_tree() or bridges(g):
                for row in kirchhoff_two_cut(g, self.options, self.settings):
                    if not row['holds']:
                        failures.append(f"小图 #{i} 桥 {row['bridge']}")
        return not failures, "; ".join(failures[:10]) or f"{count} 个随机图全部通过"

    def _graph_properties(self, g: MetricGraph, index: int) -> List[str]:
        """单个随机图上的谱与划分性质，返回失败项"""
        failed = []
        low_d, low_n = nicaise_bounds(g)
        if mu2(g, self.settings) < low_n * (1 - 1e-9):
            failed.append("Nicaise μ₂")
        if lambda1(g.with_dirichlet([g.vertex_ids[0]]), self.settings) < low_d * (1 - 1e-9):
            failed.append("Nicaise λ₁")
        for j in range(1, 7):
            courant = courant_check(g, j, self.settings, self.nodal_settings)
            if not courant['passed']:
                failed.append(f"Courant μ_{j}: {courant['counts']} > {courant['kappa']}")

        edge = g.edges[index % len(g.edges)]
        length = edge.length
        partitions = [make_partition(g, CutPattern.build({edge.id: [length * t]})) for t in (0.3, 0.5, 0.7)]
        if partitions[0].k >= 2:
            for q, p in ((1.0, 2.0), (2.0, math.inf)):
                if not holder_sandwich(energy(partitions[0], 'natural', p, self.settings), q, p):
                    failed.append(f"Hölder ({q}, {p})")
        first, second, third = partitions
        if similar(first, second) and similar(second, third):
            d12 = partition_distance(first, second)
            d23 = partition_distance(second, third)
            d13 = partition_distance(first, third)
            if partition_distance(first, first) > 1e-12 or abs(d12 - partition_distance(second, first)) > 1e-12:
                failed.append("划分距离对称性")
            if d13 > d12 + d23 + 1e-12:
                failed.append("划分距离三角不等式")

        near = CutPattern.build({edge.id: [length * 1e-12, length * 0.5]})
        before = make_partition(g, near)
        after = make_partition(g, limit_pattern(g, near))
        if before.flags['rigid'] and not after.flags['rigid']:
            failed.append("极限模式的刚性")
        return failed

    def check_tree_gluing(self, count: int = 20) -> Tuple[bool, str]:
        rng = np.random.default_rng(self.seed + 2)
        glued, failures = 0, []
        for i in range(count):
            g = random_tree(rng, 4)
            result = maximize(g, 2, 'dirichlet', self.options, self.settings)
            if not equipartition_check(result.partition, 'dirichlet', self.nodal_settings.equi_rtol, self.settings):
                continue
            try:
                outcome = glue_equipartition(result.partition, self.settings, self.nodal_settings)
            except NodalError as e:
                failures.append(f"#{i}: {e}")
                continue
            if outcome is None or outcome.residual > self.nodal_settings.glue_tol:
                failures.append(f"#{i}")
            else:
                glued += 1
        for name, g, pattern in _exact_equipartitions():
            outcome = glue_equipartition(make_partition(g, pattern), self.settings, self.nodal_settings)
            if outcome is None or outcome.residual > self.nodal_settings.glue_tol:
                failures.append(name)
            else:
                glued += 1
        if failures:
            return False, "粘合失败: " + ", ".join(failures)
        return glued > 0, f"{glued} 个树上等划分粘合成功"

    def check_double_cover(self) -> Tuple[bool, str]:
        g = loop(1.0)
        pattern = CutPattern.build({'e1': [1 / 3, 2 / 3]}, {'v': [[('e1', 'a')], [('e1', 'b')]]})
        partition = make_partition(g, pattern)
        value = energy(partition, 'dirichlet', math.inf, self.settings).value
        cover = cover_of_partition(partition)
        anti = antisymmetric_spectrum(cover, 3, self.settings)
        invariants = cover.verify()
        split = split_spectrum(cover, 3, self.settings)
        merged = sorted(split['symmetric'].values + split['antisymmetric'].values)
        problems = []
        if not _close(value, 9 * PI2, 1e-8) or not _close(anti[2], value, 1e-8):
            problems.append(f"Λ={value!r}, μ^a_3={anti[2]!r}")
        if not all(invariants.values()):
            problems.append(f"覆盖不变量: {invariants}")
        if any(abs(a - b) > 1e-9 * max(1.0, b) for a, b in zip(merged, split['full'].values)):
            problems.append("对称与反对称谱合并后与全谱不符")
        return not problems, "; ".join(problems) or "Λ^D_∞ = μ^a_3 = 9π²"

    def check_dumbbell(self) -> Tuple[bool, str]:
        g = self.load_graph('dumbbell')
        rigid = minimize(g, 2, 'natural', math.inf, 'rigid', self.options, self.settings)
        loose = minimize(g, 2, 'natural', math.inf, 'loose', self.options, self.settings)
        target = 4 * PI2 / g.total_length ** 2
        ok = _close(loose.value, target, 1e-7) and rigid.value > loose.value * (1 + 1e-6)
        return ok, f"刚性 {rigid.value!r}，松散 {loose.value!r}（目标 {target!r}）"


def _exact_equipartitions() -> List[Tuple[str, MetricGraph, CutPattern]]:
    """闭式已知的树上 Dirichlet 等划分"""
    return [
        ('区间中点', interval(2.0), CutPattern.build({'e1': [1.0]})),
        ('3-星中心', star([1.0, 1.0, 1.0]),
         CutPattern.build({}, {'c': [[('e1', 'a')], [('e2', 'a')], [('e3', 'a')]]})),
        ('路径三等分', path([1.0, 2.0]), CutPattern.build({'e1': [0.75], 'e2': [1.25]})),
    ]
