"""
最优划分搜索 - 枚举切割模式模板，优化连续切点位置，求最小能量与最大最小能量
"""
import itertools
import math
import os
import threading
import time
import zlib
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism
from networkx.utils import UnionFind
from scipy import optimize
from scipy.stats import qmc

from .graph_core import MetricGraph, Slot, bridges, canonicalize
from .partition_model import (
    CLASSES, PROBLEMS, CutPattern, EnergyReport, Partition, PartitionError, energy,
    format_p, lambda_p, make_partition, parse_p, partition_to_dict, pattern_descriptor, pattern_graph,
    set_partitions,
)
from .spectral import SolverSettings, SpectralError, cache_info, eigenvalues, lambda1, mu2


class SearchError(RuntimeError):
    """搜索不可行（k 不可行、枚举超限、目标函数求值失败等）"""


@dataclass(frozen=True)
class SearchOptions:
    """搜索参数，对应配置文件的 [search] 节"""
    max_cuts_per_edge: Optional[int] = None
    max_templates: int = 1000000
    seed_points: int = 64
    nm_max_iter: int = 500
    nm_xatol_factor: float = 1e-9
    boundary_tol: float = 1e-4
    tie_rtol: float = 1e-6
    certified_stop: bool = True
    symmetry: bool = True
    use_reductions: bool = True
    threads: int = 1
    seed: int = 2024

    @classmethod
    def from_config(cls, config, **overrides) -> 'SearchOptions':
        threads = config.get_int('basic', 'threads', 0)
        cap = config.get_int('search', 'max_cuts_per_edge', 0)
        values = dict(
            max_cuts_per_edge=cap if cap > 0 else None,
            max_templates=config.get_int('search', 'max_templates', 1000000),
            seed_points=config.get_int('search', 'seed_points', 64),
            nm_max_iter=config.get_int('search', 'nm_max_iter', 500),
            nm_xatol_factor=config.get_float('search', 'nm_xatol_factor', 1e-9),
            boundary_tol=config.get_float('search', 'boundary_tol', 1e-4),
            tie_rtol=config.get_float('search', 'tie_rtol', 1e-6),
            certified_stop=config.get_boolean('search', 'certified_stop', True),
            symmetry=config.get_boolean('search', 'symmetry', True),
            threads=threads if threads > 0 else (os.cpu_count() or 1),
            seed=config.get_int('basic', 'seed', 2024),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def cap(self, k: int) -> int:
        return self.max_cuts_per_edge if self.max_cuts_per_edge is not None else max(k - 1, 0)


DEFAULT_OPTIONS = SearchOptions()


# ---------------------------------------------------------------- 模板

@dataclass(frozen=True)
class CutPatternTemplate:
    """
    切割模式模板：每条边的内部切点个数（位置为符号变量）加顶点块划分

    flags 与切点位置无关，按等距参考位置分类得到。
    """
    counts: Tuple[Tuple[str, int], ...]
    vertex_blocks: Tuple[Tuple[str, Tuple[Tuple[Slot, ...], ...]], ...]
    k: int
    flags: Tuple[Tuple[str, bool], ...]
    descriptor: str

    @property
    def dimension(self) -> int:
        return sum(n for _, n in self.counts)

    def layout(self) -> List[Tuple[str, int]]:
        return [(e, n) for e, n in self.counts if n]

    def flag(self, name: str) -> bool:
        return dict(self.flags)[name]

    def reference_positions(self, g: MetricGraph) -> np.ndarray:
        x = []
        for e, n in self.layout():
            length = g.length(e)
            x.extend(length * (j + 1) / (n + 1) for j in range(n))
        return np.array(x, dtype=float)

    def pattern(self, g: MetricGraph, x: Sequence[float]) -> CutPattern:
        cuts = {}
        i = 0
        for e, n in self.layout():
            cuts[e] = tuple(float(v) for v in x[i:i + n])
            i += n
        return CutPattern.build(cuts, {v: blocks for v, blocks in self.vertex_blocks})

    def to_dict(self) -> Dict:
        return {
            'descriptor': self.descriptor,
            'k': self.k,
            'dimension': self.dimension,
            'counts': {e: n for e, n in self.counts if n},
            'vertex_blocks': {v: [[list(s) for s in b] for b in blocks] for v, blocks in self.vertex_blocks},
            'flags': dict(self.flags),
        }


def _labellings(n: int, m: int) -> Iterator[Tuple[int, ...]]:
    """长度 n、恰好用满 m 个标签的限制增长串"""
    current: List[int] = []

    def rec(i: int, used: int):
        if n - i < m - used:
            return
        if i == n:
            if used == m:
                yield tuple(current)
            return
        for label in range(min(used + 1, m)):
            current.append(label)
            yield from rec(i + 1, max(used, label + 1))
            current.pop()

    yield from rec(0, 0)


def _count_vectors(g: MetricGraph, k: int, cap: int) -> List[Tuple[int, ...]]:
    vectors = []
    for counts in itertools.product(range(cap + 1), repeat=len(g.edges)):
        interior = sum(max(c - 1, 0) for c in counts)
        units = sum(2 if c else 1 for c in counts)
        if interior <= k - 1 and k - interior <= units:
            vectors.append(counts)
    vectors.sort(key=lambda c: (sum(c), tuple(-x for x in c)))
    return vectors


def _connected(unit_ids: Sequence[int], vertices: Sequence[str], choice, unit_of: Dict[Slot, int]) -> bool:
    """簇内各单元经顶点块是否连通"""
    uf = UnionFind()
    for i in unit_ids:
        uf[('u', i)]
    for vertex_id, blocks in zip(vertices, choice):
        for j, block in enumerate(blocks):
            for slot in block:
                uf.union(('u', unit_of[slot]), ('b', vertex_id, j))
    roots = {uf[('u', i)] for i in unit_ids}
    return len(roots) == 1


def _is_finest(unit_ids, vertices, choice, cuttable, unit_of) -> bool:
    """不存在保持连通的进一步顶点切割"""
    for i, blocks in enumerate(choice):
        if not cuttable[i]:
            continue
        for j, block in enumerate(blocks):
            if len(block) < 2:
                continue
            for split in set_partitions(block):
                if len(split) != 2:
                    continue
                finer = list(choice)
                finer[i] = list(blocks[:j]) + split + list(blocks[j + 1:])
                if _connected(unit_ids, vertices, finer, unit_of):
                    return False
    return True


class _SymmetryFilter:
    """按 Weisfeiler-Lehman 哈希分桶、再做同构确认的模板去重"""

    def __init__(self):
        self.buckets: Dict[str, List[nx.Graph]] = {}
        self.node_match = isomorphism.categorical_node_match('label', None)

    def is_new(self, graph: nx.Graph) -> bool:
        key = nx.weisfeiler_lehman_graph_hash(graph, node_attr='label', iterations=4)
        bucket = self.buckets.setdefault(key, [])
        for other in bucket:
            if nx.is_isomorphic(graph, other, node_match=self.node_match):
                return False
        bucket.append(graph)
        return True


def iter_templates(g: MetricGraph, k: int, class_filter: str = 'rigid',
                   options: Optional[SearchOptions] = None, refinement: str = 'all') -> Iterator[CutPatternTemplate]:
    """
    惰性枚举恰好 k 个簇的模板，按切点总数递增产生

    Args:
        g: 连通基图
        k: 簇数
        class_filter: loose / rigid / proper / faithful / internally_connected
        options: 搜索参数（每边切点上限、枚举上限、对称去重）
        refinement: 簇内顶点块的取法 'all' | 'finest' | 'coarsest'

    Yields:
        CutPatternTemplate
    """
    options = options or DEFAULT_OPTIONS
    if class_filter not in CLASSES:
        raise SearchError(f"未知的划分类别: {class_filter}")
    if k < 1:
        raise SearchError(f"k 必须 ≥ 1: {k}")
    if not g.is_connected():
        raise SearchError("基图必须连通")

    loose = class_filter == 'loose'
    single_block = class_filter in ('faithful', 'proper') or refinement == 'coarsest'
    symmetry = _SymmetryFilter() if options.symmetry else None
    raw = 0

    for counts in _count_vectors(g, k, options.cap(k)):
        count_map = dict(zip(g.edge_ids, counts))
        units: List[Tuple[Slot, ...]] = []
        for e in g.edges:
            if count_map[e.id]:
                units.extend([((e.id, 'a'),), ((e.id, 'b'),)])
            else:
                units.append(((e.id, 'a'), (e.id, 'b')))
        unit_of = {slot: i for i, unit in enumerate(units) for slot in unit}
        single_cut = [(unit_of[(e, 'a')], unit_of[(e, 'b')]) for e, c in count_map.items() if c == 1]
        k_free = k - sum(max(c - 1, 0) for c in counts)

        for labels in _labellings(len(units), k_free):
            if not loose and any(labels[a] == labels[b] for a, b in single_cut):
                continue

            at: Dict[Tuple[int, str], List[Slot]] = {}
            labels_at: Dict[str, set] = {}
            for v in g.vertices:
                for slot in v.slots:
                    at.setdefault((labels[unit_of[slot]], v.id), []).append(slot)
                    labels_at.setdefault(v.id, set()).add(labels[unit_of[slot]])
            if class_filter == 'proper' and any(
                    len(ls) >= 2 and g.degree(v) != 2 for v, ls in labels_at.items()):
                continue

            per_label = []
            feasible = True
            for label in range(k_free):
                unit_ids = [i for i, l in enumerate(labels) if l == label]
                vertices = sorted(v for (l, v) in at if l == label)
                cuttable = [loose or len(labels_at[v]) >= 2 for v in vertices]
                options_at = []
                for vertex_id, can_cut in zip(vertices, cuttable):
                    slots = at[(label, vertex_id)]
                    if single_block or not can_cut or len(slots) == 1:
                        options_at.append([[slots]])
                    else:
                        options_at.append(list(set_partitions(slots)))
                if not _connected(unit_ids, vertices, [[s] for s in (at[(label, v)] for v in vertices)], unit_of):
                    feasible = False
                    break
                valid = [c for c in itertools.product(*options_at) if _connected(unit_ids, vertices, c, unit_of)]
                if refinement == 'finest':
                    valid = [c for c in valid if _is_finest(unit_ids, vertices, c, cuttable, unit_of)]
                if not valid:
                    feasible = False
                    break
                per_label.append((vertices, valid))
            if not feasible:
                continue

            for combo in itertools.product(*(valid for _, valid in per_label)):
                raw += 1
                if raw > options.max_templates:
                    raise SearchError(f"模板枚举超过上限 {options.max_templates}")
                blocks: Dict[str, List[List[Slot]]] = {}
                for (vertices, _), choice in zip(per_label, combo):
                    for vertex_id, parts in zip(vertices, choice):
                        blocks.setdefault(vertex_id, []).extend([list(p) for p in parts])
                blocks = {v: b for v, b in blocks.items() if len(b) >= 2}

                if symmetry is not None and not symmetry.is_new(pattern_graph(g, count_map, blocks)):
                    continue

                pattern = CutPattern.build({}, blocks)
                template = CutPatternTemplate(
                    counts=tuple(sorted(count_map.items())),
                    vertex_blocks=pattern.vertex_blocks,
                    k=k,
                    flags=(),
                    descriptor=pattern_descriptor(count_map, dict(pattern.vertex_blocks)),
                )
                partition = make_partition(g, template.pattern(g, template.reference_positions(g)))
                if partition.k != k or not partition.flags[class_filter]:
                    continue
                yield CutPatternTemplate(template.counts, template.vertex_blocks, k,
                                         tuple(sorted(partition.flags.items())), template.descriptor)


def enumerate_templates(g: MetricGraph, k: int, max_interior_cuts_per_edge: Optional[int] = None,
                        class_filter: str = 'rigid', options: Optional[SearchOptions] = None) -> List[CutPatternTemplate]:
    """枚举全部模板（对称去重后）"""
    options = options or DEFAULT_OPTIONS
    if max_interior_cuts_per_edge is not None:
        options = replace(options, max_cuts_per_edge=max_interior_cuts_per_edge)
    return list(iter_templates(g, k, class_filter, options))


def template_from_pattern(g: MetricGraph, pattern: CutPattern) -> CutPatternTemplate:
    """由具体切割模式得到其模板（位置变为符号变量）"""
    partition = make_partition(g, pattern)
    counts = {e: len(pattern.cuts(e)) for e in g.edge_ids}
    return CutPatternTemplate(
        counts=tuple(sorted(counts.items())),
        vertex_blocks=pattern.vertex_blocks,
        k=partition.k,
        flags=tuple(sorted(partition.flags.items())),
        descriptor=pattern.descriptor(),
    )


# ---------------------------------------------------------------- 位置优化

class TemplateEvaluator:
    """固定模板下，切点位置 -> 簇特征值 / 目标值"""

    def __init__(self, g: MetricGraph, template: CutPatternTemplate, problem: str,
                 exponent: float, direction: str = 'min', settings: Optional[SolverSettings] = None):
        if problem not in PROBLEMS:
            raise SearchError(f"未知的问题类型: {problem}")
        self.g = g
        self.template = template
        self.problem = problem
        self.exponent = exponent
        self.direction = direction
        self.settings = settings
        self.layout = template.layout()
        self.reference = make_partition(g, template.pattern(g, template.reference_positions(g)))
        self.clusters = (self.reference.dirichlet_clusters if problem == 'dirichlet'
                         else self.reference.clusters)
        if problem == 'dirichlet' and any(not c.dirichlet for c in self.clusters):
            raise SearchError("Dirichlet 问题要求每个簇至少含一个切点")
        self.edge_lengths = np.array([g.length(e) for e, n in self.layout for _ in range(n)])
        self.delta = 1e-6 * self.edge_lengths

    @property
    def dimension(self) -> int:
        return len(self.edge_lengths)

    def project(self, x) -> np.ndarray:
        """排序并夹到 [δ, ℓ−δ]，相邻切点至少相隔 δ"""
        x = np.asarray(x, dtype=float).copy()
        i = 0
        for e, n in self.layout:
            length = self.g.length(e)
            delta = 1e-6 * length
            seg = np.clip(np.sort(x[i:i + n]), delta, length - delta)
            for j in range(1, n):
                seg[j] = max(seg[j], seg[j - 1] + delta)
            seg[-1] = min(seg[-1], length - delta)
            for j in range(n - 2, -1, -1):
                seg[j] = min(seg[j], seg[j + 1] - delta)
            x[i:i + n] = seg
            i += n
        return x

    def bounds(self, x, index: int) -> Tuple[float, float]:
        """第 index 个坐标在同边相邻切点之间的可行区间"""
        i = 0
        for e, n in self.layout:
            if index < i + n:
                length = self.g.length(e)
                delta = 1e-6 * length
                lo = x[index - 1] + delta if index > i else delta
                hi = x[index + 1] - delta if index < i + n - 1 else length - delta
                return lo, hi
            i += n
        raise IndexError(index)

    def piece_lengths(self, x) -> Dict[str, float]:
        lengths = {}
        i = 0
        for e, n in self.layout:
            chain = self.reference.chains[e]
            cuts = [0.0] + list(x[i:i + n]) + [self.g.length(e)]
            for j, piece in enumerate(chain):
                lengths[piece] = cuts[j + 1] - cuts[j]
            i += n
        return lengths

    def _cluster_value(self, cluster: MetricGraph) -> float:
        if self.problem == 'dirichlet':
            return lambda1(cluster, self.settings)
        return mu2(cluster, self.settings)

    def values(self, x) -> List[float]:
        lengths = self.piece_lengths(self.project(x)) if self.dimension else {}
        result = []
        try:
            for cluster in self.clusters:
                local = {e: lengths[e] for e in cluster.edge_ids if e in lengths}
                result.append(self._cluster_value(cluster.with_lengths(local) if local else cluster))
        except SpectralError as e:
            raise SearchError(f"目标函数求值失败 ({self.template.descriptor}): {e}")
        return result

    def energy(self, x) -> float:
        values = self.values(x)
        return lambda_p(values, self.exponent) if self.direction == 'min' else min(values)

    def objective(self, x) -> float:
        value = self.energy(x)
        return value if self.direction == 'min' else -value

    def lower_bound(self) -> float:
        """位置无关的能量下界"""
        full = {}
        for e, n in self.layout:
            for piece in self.reference.chains[e]:
                full[piece] = self.g.length(e)
        bounds = []
        for cluster in self.clusters:
            if self.problem == 'dirichlet':
                local = {e: full[e] for e in cluster.edge_ids if e in full}
                bounds.append(lambda1(cluster.with_lengths(local) if local else cluster, self.settings))
            else:
                longest = min(self.g.total_length, math.fsum(full.get(e.id, e.length) for e in cluster.edges))
                bounds.append(math.pi ** 2 / longest ** 2)
        return lambda_p(bounds, self.exponent)

    def is_boundary(self, x, tol: float) -> bool:
        i = 0
        for e, n in self.layout:
            length = self.g.length(e)
            cuts = [0.0] + list(x[i:i + n]) + [length]
            if any(b - a <= tol * length for a, b in zip(cuts, cuts[1:])):
                return True
            i += n
        return False

    def positions(self, x) -> Dict[str, Tuple[float, ...]]:
        result = {}
        i = 0
        for e, n in self.layout:
            result[e] = tuple(float(v) for v in x[i:i + n])
            i += n
        return result


@dataclass
class TemplateOutcome:
    """单个模板的优化结果"""
    template: CutPatternTemplate
    x: np.ndarray
    value: float
    boundary: bool
    bound: Optional[float] = None
    pruned: bool = False
    positions: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    partition: Optional[Partition] = None
    report: Optional[EnergyReport] = None

    def audit_row(self) -> Dict:
        return {
            'template': self.template.descriptor,
            'dimension': self.template.dimension,
            'value': None if self.pruned else self.value,
            'bound': self.bound,
            'boundary': self.boundary,
            'pruned': self.pruned,
        }


def _golden_polish(ev: TemplateEvaluator, x: np.ndarray, xatol: float) -> np.ndarray:
    best = ev.project(x)
    best_value = ev.objective(best)
    for i in range(ev.dimension):
        lo, hi = ev.bounds(best, i)
        if hi - lo <= xatol:
            continue

        def along(t, i=i):
            y = best.copy()
            y[i] = t
            return ev.objective(y)

        res = optimize.minimize_scalar(along, bounds=(lo, hi), method='bounded', options={'xatol': xatol})
        if res.fun < best_value:
            best = best.copy()
            best[i] = float(res.x)
            best, best_value = ev.project(best), float(res.fun)
    return best


def _epigraph_polish(ev: TemplateEvaluator, x: np.ndarray) -> np.ndarray:
    """极大 / 极小型目标的上图形式 SLSQP 精修（在各簇特征值相等处的折点上收敛更好）"""
    d = ev.dimension
    values = np.array(ev.values(x))
    minimizing = ev.direction == 'min'
    z0 = np.append(x, values.max() if minimizing else values.min())

    def objective(z):
        return z[-1] if minimizing else -z[-1]

    def epigraph(z):
        vals = np.array(ev.values(z[:-1]))
        return z[-1] - vals if minimizing else vals - z[-1]

    order = []
    i = 0
    for e, n in ev.layout:
        for j in range(n - 1):
            order.append((i + j, i + j + 1, 1e-6 * ev.g.length(e)))
        i += n

    constraints = [{'type': 'ineq', 'fun': epigraph}]
    if order:
        constraints.append({'type': 'ineq',
                            'fun': lambda z: np.array([z[b] - z[a] - gap for a, b, gap in order])})
    bounds = [(dl, l - dl) for l, dl in zip(ev.edge_lengths, ev.delta)] + [(None, None)]
    try:
        res = optimize.minimize(objective, z0, method='SLSQP', bounds=bounds, constraints=constraints,
                                options={'maxiter': 100, 'ftol': 1e-15})
    except (ValueError, SearchError):
        return x
    candidate = ev.project(res.x[:d])
    return candidate if ev.objective(candidate) < ev.objective(x) else x


def _balance(ev: TemplateEvaluator, x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """max-min 一维模板: 在括号区间内求两个竞争簇特征值相等的点"""
    left, right = ev.values([lo]), ev.values([hi])
    i, j = int(np.argmin(left)), int(np.argmin(right))
    if i == j:
        return x

    def gap(s):
        values = ev.values([s])
        return values[i] - values[j]

    if gap(lo) * gap(hi) > 0:
        return x
    root = optimize.brentq(gap, lo, hi, xtol=1e-14 * ev.edge_lengths[0], rtol=4 * np.finfo(float).eps)
    best = ev.objective(x)
    return np.array([root]) if ev.objective([root]) <= best + 1e-10 * abs(best) else x


def optimize_template(g: MetricGraph, t: CutPatternTemplate, problem: str, p=math.inf,
                      direction: str = 'min', options: Optional[SearchOptions] = None,
                      settings: Optional[SolverSettings] = None) -> TemplateOutcome:
    """
    在模板的位置单纯形上优化切点

    d=0 直接求值；d=1 均匀种子扫描加黄金分割；d≥2 多起点 Nelder-Mead（中心 + 2d 个拉丁超立方点），
    再逐坐标黄金分割精修。

    Args:
        g: 基图
        t: 模板
        problem: 'dirichlet' | 'natural'
        p: 能量指数（maxmin 方向忽略）
        direction: 'min' 最小化 Λ_p；'maxmin' 最大化 Λ_min

    Returns:
        TemplateOutcome: 最优位置、值、边界退化标志与划分
    """
    options = options or DEFAULT_OPTIONS
    exponent = parse_p(p)
    ev = TemplateEvaluator(g, t, problem, exponent, direction, settings)
    d = ev.dimension
    xatol = options.nm_xatol_factor * g.total_length

    if d == 0:
        x = np.zeros(0)
    elif d == 1:
        length = ev.edge_lengths[0]
        delta = ev.delta[0]
        seeds = np.linspace(delta, length - delta, options.seed_points)
        scores = [ev.objective([s]) for s in seeds]
        i = int(np.argmin(scores))
        lo, hi = seeds[max(i - 1, 0)], seeds[min(i + 1, len(seeds) - 1)]
        res = optimize.minimize_scalar(lambda s: ev.objective([s]), bounds=(lo, hi),
                                       method='bounded', options={'xatol': xatol})
        x = np.array([res.x]) if res.fun <= scores[i] else np.array([seeds[i]])
        if direction == 'maxmin':
            x = _balance(ev, x, lo, hi)
    else:
        rng = np.random.default_rng([options.seed, zlib.crc32(t.descriptor.encode('utf-8'))])
        sampler = qmc.LatinHypercube(d=d, seed=rng)
        starts = [t.reference_positions(g)]
        for u in sampler.random(2 * d):
            starts.append(ev.project(ev.delta + u * (ev.edge_lengths - 2 * ev.delta)))

        best_x, best_f = None, math.inf
        for start in starts:
            res = optimize.minimize(ev.objective, start, method='Nelder-Mead',
                                    options={'xatol': xatol, 'fatol': math.inf,
                                             'maxiter': options.nm_max_iter})
            candidate = ev.project(res.x)
            value = ev.objective(candidate)
            if value < best_f:
                best_x, best_f = candidate, value
        x = _golden_polish(ev, best_x, xatol)
        if direction == 'maxmin' or math.isinf(exponent):
            x = _epigraph_polish(ev, x)

    x = ev.project(x) if d else x
    value = ev.energy(x)
    return TemplateOutcome(template=t, x=x, value=value, boundary=d > 0 and ev.is_boundary(x, options.boundary_tol),
                           positions=ev.positions(x))


# ---------------------------------------------------------------- 搜索驱动

@dataclass
class OptResult:
    """最优划分搜索结果"""
    problem: str
    p: float
    direction: str
    class_filter: str
    k: int
    value: float
    template: CutPatternTemplate
    positions: Dict[str, Tuple[float, ...]]
    partition: Partition
    report: EnergyReport
    audit: List[Dict]
    ties: List[str]
    boundary: bool
    certified: bool
    exhaustive: bool
    max_cuts_per_edge: int
    strategy: Dict[str, str]
    wall_time: float = 0.0

    def to_dict(self, graph_ref: Optional[str] = None) -> Dict:
        return {
            'objective': {'problem': self.problem, 'p': format_p(self.p), 'direction': self.direction,
                          'class': self.class_filter, 'k': self.k},
            'value': self.value,
            'template': self.template.to_dict(),
            'positions': {e: list(v) for e, v in self.positions.items()},
            'partition': partition_to_dict(self.partition, self.report, graph_ref),
            'ties': list(self.ties),
            'boundary': self.boundary,
            'certified': self.certified,
            'exhaustive': self.exhaustive,
            'max_cuts_per_edge': self.max_cuts_per_edge,
            'strategy': dict(self.strategy),
            'audit': list(self.audit),
        }


def _strategy(problem: str, class_filter: str, direction: str, options: SearchOptions) -> Tuple[str, str]:
    """优势约简: 返回 (枚举类别, 块取法)"""
    refinement = 'all'
    if class_filter == 'faithful':
        return class_filter, 'coarsest'
    if options.use_reductions and class_filter in ('rigid', 'loose'):
        if problem == 'dirichlet':
            # Dirichlet 能量与簇内块选择无关，松散问题与刚性问题同解
            return 'rigid', 'coarsest'
        refinement = 'finest' if direction == 'min' else 'coarsest'
    return class_filter, refinement


def certified_lower_bound(g: MetricGraph, k: int, problem: str, p: float,
                          settings: Optional[SolverSettings] = None) -> Optional[float]:
    """所有 k-划分能量的可达下界；无可用下界时为 None"""
    if problem == 'natural':
        return math.pi ** 2 * k ** 2 / g.total_length ** 2
    if math.isinf(p):
        natural = g.with_dirichlet(())
        return eigenvalues(natural, k, settings=settings)[k - 1]
    return None


def _search(g: MetricGraph, k: int, problem: str, p, class_filter: str, direction: str,
            options: Optional[SearchOptions], settings: Optional[SolverSettings], logger) -> OptResult:
    options = options or DEFAULT_OPTIONS
    if problem not in PROBLEMS:
        raise SearchError(f"未知的问题类型: {problem}")
    if class_filter not in CLASSES:
        raise SearchError(f"未知的划分类别: {class_filter}")
    try:
        exponent = parse_p(p)
    except PartitionError as e:
        raise SearchError(str(e))
    if not isinstance(k, int) or k < 1:
        raise SearchError(f"k 必须为正整数: {k}")
    if problem == 'dirichlet' and k == 1 and not g.dirichlet:
        raise SearchError("Dirichlet 问题要求 k ≥ 2（k=1 时切点集为空）")
    if not g.is_connected():
        raise SearchError("基图必须连通")

    enum_class, refinement = _strategy(problem, class_filter, direction, options)
    certified_bound = None
    if options.certified_stop and direction == 'min':
        certified_bound = certified_lower_bound(g, k, problem, exponent, settings)

    started = time.time()
    outcomes: List[TemplateOutcome] = []
    incumbent = math.inf
    stopped = False
    lock = threading.Lock()

    def run(t: CutPatternTemplate, incumbent_at_start: float) -> TemplateOutcome:
        bound = None
        if direction == 'min':
            bound = TemplateEvaluator(g, t, problem, exponent, direction, settings).lower_bound()
            if bound > incumbent_at_start * (1.0 + options.tie_rtol):
                return TemplateOutcome(template=t, x=np.zeros(0), value=math.inf, boundary=False,
                                       bound=bound, pruned=True)
        outcome = optimize_template(g, t, problem, exponent, direction, options, settings)
        outcome.bound = bound
        return outcome

    try:
        levels = itertools.groupby(iter_templates(g, k, enum_class, options, refinement),
                                   key=lambda t: t.dimension)
        for d, group in levels:
            templates = list(group)
            if logger:
                logger.info(f"切点维数 d={d}: {len(templates)} 个模板")
            at_start = incumbent
            results: Dict[int, TemplateOutcome] = {}
            done = [0]

            def task(index, t):
                outcome = run(t, at_start)
                if logger:
                    with lock:
                        done[0] += 1
                        logger.progress(done[0], len(templates), t.descriptor[:40])
                return index, outcome

            if options.threads > 1 and len(templates) > 1:
                with ThreadPoolExecutor(max_workers=options.threads) as executor:
                    futures = [executor.submit(task, i, t) for i, t in enumerate(templates)]
                    for future in as_completed(futures):
                        index, outcome = future.result()
                        results[index] = outcome
            else:
                for i, t in enumerate(templates):
                    results[i] = task(i, t)[1]

            # 按原始顺序汇总
            level = [results[i] for i in range(len(templates))]
            outcomes.extend(level)
            for outcome in level:
                if not outcome.pruned and not outcome.boundary and direction == 'min':
                    incumbent = min(incumbent, outcome.value)

            if certified_bound is not None and incumbent <= certified_bound * (1.0 + options.tie_rtol):
                if logger:
                    logger.info(f"当前最优值已达到可证下界 {certified_bound:.12g}，提前结束")
                stopped = True
                break
    except PartitionError as e:
        raise SearchError(str(e))

    evaluated = [o for o in outcomes if not o.pruned]
    if not evaluated:
        raise SearchError(f"k={k} 不可行: 没有满足类别 {class_filter} 的模板")

    candidates = [o for o in evaluated if not o.boundary] or evaluated
    if direction == 'min':
        winner = min(candidates, key=lambda o: (o.value, o.template.descriptor))
    else:
        winner = min(candidates, key=lambda o: (-o.value, o.template.descriptor))
    tol = options.tie_rtol * max(abs(winner.value), 1e-300)
    ties = [o.template.descriptor for o in candidates if abs(o.value - winner.value) <= tol]

    pattern = winner.template.pattern(g, winner.x)
    partition = make_partition(g, pattern)
    report = energy(partition, problem, exponent, settings)
    value = report.value if direction == 'min' else report.min_value
    if not abs(value - winner.value) <= 1e-9 * max(1.0, abs(value)):
        raise SearchError(f"复算能量与优化值不一致: {value:.15g} vs {winner.value:.15g} ({winner.template.descriptor})")
    if logger:
        if winner.boundary:
            logger.warning("最优解位于模板边界（切点贴近顶点），真正的最优可能在相邻模板中")
        logger.debug(f"已求值 {len(evaluated)} 个模板, 谱缓存 {cache_info()}")

    return OptResult(
        problem=problem,
        p=exponent,
        direction=direction,
        class_filter=class_filter,
        k=k,
        value=value,
        template=winner.template,
        positions=winner.positions,
        partition=partition,
        report=report,
        audit=[o.audit_row() for o in outcomes],
        ties=ties,
        boundary=winner.boundary,
        certified=stopped,
        exhaustive=not stopped,
        max_cuts_per_edge=options.cap(k),
        strategy={'enumerated_class': enum_class, 'refinement': refinement},
        wall_time=time.time() - started,
    )


def minimize(g: MetricGraph, k: int, problem: str = 'dirichlet', p=math.inf, class_filter: str = 'rigid',
             options: Optional[SearchOptions] = None, settings: Optional[SolverSettings] = None,
             logger=None) -> OptResult:
    """
    最小 k-划分能量

    Args:
        g: 连通基图
        k: 簇数（Dirichlet 问题 k ≥ 2）
        problem: 'dirichlet' | 'natural'
        p: 能量指数，'inf' 表示取最大值
        class_filter: 划分类别

    Returns:
        OptResult: 最优值、获胜模板与位置、审计记录
    """
    return _search(g, k, problem, p, class_filter, 'min', options, settings, logger)


def maximize(g: MetricGraph, k: int, problem: str = 'dirichlet', options: Optional[SearchOptions] = None,
             settings: Optional[SolverSettings] = None, logger=None) -> OptResult:
    """刚性划分上 Λ_min 的最大值"""
    return _search(g, k, problem, math.inf, 'rigid', 'maxmin', options, settings, logger)


# ---------------------------------------------------------------- 扫描

def _row(result: OptResult) -> Dict:
    return {
        'value': result.value,
        'template': result.template.descriptor,
        'positions': [x for e in sorted(result.positions) for x in result.positions[e]],
        'boundary': result.boundary,
        'ties': len(result.ties),
    }


def _monotone(values: Sequence[float], rtol: float = 1e-9) -> bool:
    return all(b >= a - rtol * max(1.0, abs(a)) for a, b in zip(values, values[1:]))


def sweep_p(g: MetricGraph, k: int, problem: str, p_grid: Sequence, class_filter: str = 'rigid',
            options: Optional[SearchOptions] = None, settings: Optional[SolverSettings] = None,
            logger=None) -> Dict:
    """
    对一组 p 求最优能量

    Returns:
        Dict: rows（每个 p 一行）与 diagnostics（单调性、最大跳变）
    """
    if not p_grid:
        raise SearchError("p 网格为空")
    grid = [parse_p(p) for p in p_grid]
    rows = []
    for i, p in enumerate(grid):
        result = minimize(g, k, problem, p, class_filter, options, settings)
        rows.append({'p': format_p(p), **_row(result)})
        if logger:
            logger.progress(i + 1, len(grid), f"p={format_p(p)}")
    values = [r['value'] for r in rows]
    ordered = [v for _, v in sorted(zip(grid, values))]
    return {
        'rows': rows,
        'diagnostics': {
            'monotone_in_p': _monotone(ordered),
            'max_jump': max((abs(b - a) for a, b in zip(ordered, ordered[1:])), default=0.0),
        },
    }


def sweep_length(g: MetricGraph, edge_id: str, lengths: Sequence[float], k: int, problem: str,
                 p=math.inf, class_filter: str = 'rigid', options: Optional[SearchOptions] = None,
                 settings: Optional[SolverSettings] = None, logger=None) -> Dict:
    """
    改变一条边的长度，记录最优值与获胜模板的切换（折点）
    """
    if not lengths:
        raise SearchError("长度网格为空")
    if edge_id not in g.edge_map:
        raise SearchError(f"未知的边: {edge_id}")
    rows = []
    previous = None
    for i, length in enumerate(lengths):
        result = minimize(g.with_lengths({edge_id: float(length)}), k, problem, p, class_filter,
                          options, settings)
        row = {'length': float(length), **_row(result)}
        row['switch'] = previous is not None and previous != result.template.descriptor
        row['tie'] = len(result.ties) >= 2
        previous = result.template.descriptor
        rows.append(row)
        if logger:
            logger.progress(i + 1, len(lengths), f"{edge_id}={float(length):.4g}")
    return {
        'rows': rows,
        'diagnostics': {
            'switches': [r['length'] for r in rows if r['switch']],
            'ties': [r['length'] for r in rows if r['tie']],
        },
    }


def sweep_k(g: MetricGraph, max_k: int, problem: str, p=math.inf, class_filter: str = 'rigid',
            options: Optional[SearchOptions] = None, settings: Optional[SolverSettings] = None,
            logger=None) -> Dict:
    """k = 1…K 的最优能量及其对 k 的单调性"""
    start = 2 if problem == 'dirichlet' and not g.dirichlet else 1
    if max_k < start:
        raise SearchError(f"k 网格为空: K={max_k}")
    rows = []
    for k in range(start, max_k + 1):
        result = minimize(g, k, problem, p, class_filter, options, settings)
        rows.append({'k': k, **_row(result)})
        if logger:
            logger.progress(k - start + 1, max_k - start + 1, f"k={k}")
    return {
        'rows': rows,
        'diagnostics': {'monotone_in_k': _monotone([r['value'] for r in rows])},
    }


# ---------------------------------------------------------------- 结构性检验

def kirchhoff_two_cut(g: MetricGraph, options: Optional[SearchOptions] = None,
                      settings: Optional[SolverSettings] = None) -> List[Dict]:
    """
    每条桥上做两侧切割，取使 min(μ₂(G₁), μ₂(G₂)) 最大的位置，与 μ₂(G) 比较
    """
    options = options or DEFAULT_OPTIONS
    gap = mu2(g, settings)
    result = []
    for edge_id in bridges(g):
        length = g.length(edge_id)
        pattern = CutPattern.build({edge_id: [length / 2.0]})
        template = template_from_pattern(g, pattern)
        outcome = optimize_template(g, template, 'natural', math.inf, 'maxmin', options, settings)
        result.append({
            'bridge': edge_id,
            'position': outcome.positions[edge_id][0],
            'value': outcome.value,
            'mu2': gap,
            'holds': outcome.value >= gap * (1.0 - 1e-9),
        })
    return result


def path_certificate(partition: Partition, tol: float = 1e-8) -> bool:
    """所有簇都是长度 |G|/k 的路径图"""
    target = partition.base.total_length / partition.k
    for cluster in partition.clusters:
        canonical = canonicalize(replace(cluster, dirichlet=frozenset(), labels=())).graph
        if len(canonical.edges) != 1 or canonical.is_loop(canonical.edges[0].id):
            return False
        if abs(canonical.total_length - target) > tol * target:
            return False
    return True
