"""
划分模型 - 切割模式、簇、分类标志、能量与划分距离
"""
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms import isomorphism

from .graph_core import (
    GraphError, MetricGraph, Slot, cut_vertex, components, discrete_isomorphic,
    graph_space_distance, subdivide, subgraph,
)
from .spectral import SolverSettings, SpectralError, lambda1, mu2, power_mean

PROBLEMS = ('dirichlet', 'natural')
CLASSES = ('loose', 'rigid', 'faithful', 'internally_connected', 'proper')


class PartitionError(ValueError):
    """切割模式或划分不合法"""


def set_partitions(items: Sequence) -> Iterator[List[List]]:
    """集合划分生成器：首元素并入子划分的每个块，或自成一块（最粗的划分最先产生）"""
    items = list(items)
    if not items:
        yield []
        return
    if len(items) == 1:
        yield [[items[0]]]
        return
    first = items[0]
    for smaller in set_partitions(items[1:]):
        for n, subset in enumerate(smaller):
            yield smaller[:n] + [[first] + subset] + smaller[n + 1:]
        yield [[first]] + smaller


def parse_p(value) -> float:
    """把 'inf' / 数字解析为指数 p"""
    if isinstance(value, str) and value.strip().lower() in ('inf', 'infinity', '∞'):
        return math.inf
    try:
        p = float(value)
    except (TypeError, ValueError):
        raise PartitionError(f"指数 p 必须为正数或 inf: {value!r}")
    if not p > 0:
        raise PartitionError(f"指数 p 必须为正数或 inf: {value!r}")
    return p


def format_p(p: float) -> str:
    return 'inf' if math.isinf(p) else repr(float(p))


def lambda_p(values: Sequence[float], p: float) -> float:
    """簇特征值的 p-幂平均，p=inf 时取最大值"""
    if not values:
        raise PartitionError("没有簇特征值")
    return power_mean(values, p)


@dataclass(frozen=True)
class CutPattern:
    """
    切割模式

    edge_cuts: (边ID, 严格递增的内部切点偏移) 元组，只列出有切点的边
    vertex_blocks: (顶点ID, 槽位块元组) 元组，只列出至少两块的顶点
    """
    edge_cuts: Tuple[Tuple[str, Tuple[float, ...]], ...] = ()
    vertex_blocks: Tuple[Tuple[str, Tuple[Tuple[Slot, ...], ...]], ...] = ()

    @classmethod
    def build(cls, edge_cuts: Optional[Mapping[str, Iterable[float]]] = None,
              vertex_blocks: Optional[Mapping[str, Iterable[Iterable[Slot]]]] = None) -> 'CutPattern':
        cuts = []
        for edge_id, offsets in sorted((edge_cuts or {}).items()):
            offsets = tuple(float(x) for x in offsets)
            if offsets:
                cuts.append((str(edge_id), offsets))
        blocks = []
        for vertex_id, parts in sorted((vertex_blocks or {}).items()):
            normal = tuple(sorted(tuple(sorted((str(s[0]), str(s[1])) for s in b)) for b in parts))
            if len(normal) >= 2:
                blocks.append((str(vertex_id), normal))
        return cls(tuple(cuts), tuple(blocks))

    def cuts(self, edge_id: str) -> Tuple[float, ...]:
        return dict(self.edge_cuts).get(edge_id, ())

    def blocks(self, vertex_id: str) -> Optional[Tuple[Tuple[Slot, ...], ...]]:
        return dict(self.vertex_blocks).get(vertex_id)

    def counts(self) -> Dict[str, int]:
        return {e: len(offsets) for e, offsets in self.edge_cuts}

    def descriptor(self) -> str:
        """与切点位置无关的模式描述串"""
        return pattern_descriptor(self.counts(), dict(self.vertex_blocks))

    def to_dict(self) -> Dict:
        return {
            'edge_cuts': {e: list(offsets) for e, offsets in self.edge_cuts},
            'vertex_blocks': {v: [[list(s) for s in b] for b in blocks] for v, blocks in self.vertex_blocks},
        }


def pattern_descriptor(counts: Mapping[str, int],
                       vertex_blocks: Mapping[str, Sequence[Sequence[Slot]]]) -> str:
    edges = ",".join(f"{e}:{n}" for e, n in sorted(counts.items()) if n)
    vertices = ",".join(
        f"{v}:" + "".join("{" + " ".join(f"{s[0]}.{s[1]}" for s in sorted(b)) + "}" for b in sorted(blocks))
        for v, blocks in sorted(vertex_blocks.items()) if len(blocks) >= 2
    )
    return f"cuts[{edges}] blocks[{vertices}]"


def pattern_graph(g: MetricGraph, counts: Mapping[str, int],
                  blocks: Mapping[str, Sequence[Sequence[Slot]]]) -> nx.Graph:
    """
    切割模式的带标签结构图

    顶点、顶点块、槽位与边上的切段各为一个节点；边长与顶点标签写进节点标签，
    两张结构图之间的同构给出基图的一个保长自同构，它把一个模式映成另一个。
    """
    graph = nx.Graph()
    for v in g.vertices:
        tag = g.label_map.get(v.id, '')
        graph.add_node(('V', v.id), label=f"V{v.degree}{'D' if v.id in g.dirichlet else ''}{tag}")
        for j, block in enumerate(blocks.get(v.id) or [list(v.slots)]):
            graph.add_node(('B', v.id, j), label=f"B{len(block)}")
            graph.add_edge(('V', v.id), ('B', v.id, j))
            for slot in block:
                graph.add_node(('S',) + tuple(slot), label='S')
                graph.add_edge(('B', v.id, j), ('S',) + tuple(slot))
    for e in g.edges:
        n = counts.get(e.id, 0)
        label = f"P{round(e.length, 9)!r}:{n}"
        for j in range(n + 1):
            graph.add_node(('P', e.id, j), label=label)
            if j:
                graph.add_node(('D', e.id, j), label='D')
                graph.add_edge(('P', e.id, j - 1), ('D', e.id, j))
                graph.add_edge(('D', e.id, j), ('P', e.id, j))
        graph.add_edge(('P', e.id, 0), ('S', e.id, 'a'))
        graph.add_edge(('P', e.id, n), ('S', e.id, 'b'))
    return graph


def pattern_from_dict(data: Mapping) -> CutPattern:
    try:
        return CutPattern.build(
            data.get('edge_cuts', {}),
            {v: [[tuple(s) for s in b] for b in blocks] for v, blocks in data.get('vertex_blocks', {}).items()}
        )
    except (TypeError, ValueError, IndexError) as e:
        raise PartitionError(f"切割模式格式错误: {e}")


def refined_slot(chains: Mapping[str, List[str]], slot: Slot) -> Slot:
    """原图槽位在细分图中的名字"""
    edge_id, end = slot
    chain = chains.get(edge_id)
    if not chain:
        return slot
    return (chain[0], 'a') if end == 'a' else (chain[-1], 'b')


@dataclass
class Partition:
    """
    由切割模式导出的穷尽划分

    所有顶点集合（cut_set、separation_set、簇顶点的 origin）都以细分图 refined 的顶点ID表示。
    """
    base: MetricGraph
    pattern: CutPattern
    refined: MetricGraph
    chains: Dict[str, List[str]]
    clusters: Tuple[MetricGraph, ...]
    supports: Tuple[FrozenSet[str], ...]
    origins: Tuple[Dict[str, str], ...]
    cut_set: FrozenSet[str]
    separation_set: FrozenSet[str]
    touched: Dict[str, FrozenSet[int]] = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def support(self) -> FrozenSet[str]:
        return frozenset().union(*self.supports) if self.supports else frozenset()

    @property
    def exhaustive(self) -> bool:
        return self.support == frozenset(self.refined.edge_ids)

    @cached_property
    def flags(self) -> Dict[str, bool]:
        return classify(self)

    @cached_property
    def dirichlet_clusters(self) -> Tuple[MetricGraph, ...]:
        """切点的像上加 Dirichlet 条件后的簇"""
        result = []
        for cluster, origin in zip(self.clusters, self.origins):
            marked = set(cluster.dirichlet) | {v for v in cluster.vertex_ids if origin[v] in self.cut_set}
            result.append(cluster.with_dirichlet(marked))
        return tuple(result)

    def boundary(self, index: int) -> FrozenSet[str]:
        """簇支撑的边界 ∂Ω_i"""
        return frozenset(v for v in self.separation_set if index in self.touched[v])

    def descriptor(self) -> str:
        return self.pattern.descriptor()


def _validate_pattern(g: MetricGraph, pattern: CutPattern):
    for edge_id, offsets in pattern.edge_cuts:
        if edge_id not in g.edge_map:
            raise PartitionError(f"切割模式引用了未知的边: {edge_id}")
        length = g.length(edge_id)
        if any(not 0.0 < x < length for x in offsets):
            raise PartitionError(f"切点必须位于边 {edge_id} 的内部: {offsets}")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise PartitionError(f"切点必须严格递增: {edge_id} {offsets}")
    for vertex_id, blocks in pattern.vertex_blocks:
        if vertex_id not in g.vertex_map:
            raise PartitionError(f"切割模式引用了未知的顶点: {vertex_id}")
        flat = [s for b in blocks for s in b]
        if any(not b for b in blocks) or len(flat) != len(set(flat)) \
                or set(flat) != set(g.vertex_map[vertex_id].slots):
            raise PartitionError(f"顶点 {vertex_id} 的块不是其槽位类的划分")


def make_partition(g: MetricGraph, pattern: CutPattern) -> Partition:
    """
    按切割模式切开图，连通分量即为簇

    Args:
        g: 基图
        pattern: 切割模式（边内部切点 + 顶点块）

    Returns:
        Partition: 穷尽划分，k = 分量个数
    """
    _validate_pattern(g, pattern)

    refined = g
    chains: Dict[str, List[str]] = {}
    try:
        for edge_id, offsets in pattern.edge_cuts:
            refined, chains[edge_id] = subdivide(refined, edge_id, offsets)
    except GraphError as e:
        raise PartitionError(str(e))

    cuts: Dict[str, List[List[Slot]]] = {}
    for vertex_id, blocks in pattern.vertex_blocks:
        cuts[vertex_id] = [[refined_slot(chains, s) for s in b] for b in blocks]
    for edge_id, chain in chains.items():
        for i in range(1, len(chain)):
            cuts[f"{edge_id}@{i}"] = [[(chain[i - 1], 'b')], [(chain[i], 'a')]]

    cut_graph = refined
    origin: Dict[str, str] = {}
    for vertex_id in sorted(cuts):
        cut_graph = cut_vertex(cut_graph, vertex_id, cuts[vertex_id])
        for i in range(len(cuts[vertex_id])):
            origin[f"{vertex_id}|{i}"] = vertex_id

    clusters, supports, origins = [], [], []
    touched: Dict[str, set] = {v: set() for v in refined.vertex_ids}
    for index, (cluster, edge_ids) in enumerate(components(cut_graph)):
        mapping = {v: origin.get(v, v) for v in cluster.vertex_ids}
        for base_vertex in mapping.values():
            touched[base_vertex].add(index)
        clusters.append(cluster)
        supports.append(edge_ids)
        origins.append(mapping)

    return Partition(
        base=g,
        pattern=pattern,
        refined=refined,
        chains=chains,
        clusters=tuple(clusters),
        supports=tuple(supports),
        origins=tuple(origins),
        cut_set=frozenset(cuts),
        separation_set=frozenset(v for v, owners in touched.items() if len(owners) >= 2),
        touched={v: frozenset(owners) for v, owners in touched.items()},
    )


def _interior_connected(p: Partition, index: int) -> bool:
    """Ω_i 去掉边界点后是否连通"""
    boundary = p.boundary(index)
    edges = p.supports[index]
    graph = nx.Graph()
    graph.add_nodes_from(edges)
    for v in p.refined.vertices:
        if v.id in boundary:
            continue
        incident = sorted({s[0] for s in v.slots if s[0] in edges})
        graph.add_edges_from(zip(incident, incident[1:]))
    return nx.is_connected(graph)


def classify(p: Partition) -> Dict[str, bool]:
    """
    划分的分类标志

    Returns:
        Dict[str, bool]: loose / rigid / faithful / internally_connected / proper
    """
    rigid = p.cut_set == p.separation_set
    faithful = rigid
    if rigid:
        for v in p.separation_set:
            for index in p.touched[v]:
                images = [u for u, o in p.origins[index].items() if o == v]
                if len(images) != 1:
                    faithful = False
                    break
            if not faithful:
                break
    internally_connected = rigid and all(_interior_connected(p, i) for i in range(p.k))
    proper = rigid and all(p.refined.degree(v) == 2 for v in p.separation_set)
    return {
        'loose': True,
        'rigid': rigid,
        'faithful': faithful,
        'internally_connected': internally_connected,
        'proper': proper,
    }


def neighbours(p: Partition) -> List[Tuple[int, int]]:
    """支撑边界相交的簇对 (i, j)，i < j"""
    pairs = set()
    for v in p.separation_set:
        owners = sorted(p.touched[v])
        pairs.update(itertools.combinations(owners, 2))
    return sorted(pairs)


def rho(g: MetricGraph, support: Iterable[str]) -> List[MetricGraph]:
    """
    支撑 Ω 上所有可能的刚性簇

    Args:
        g: 图
        support: 边子集（作为 g 的子集须连通）

    Returns:
        List[MetricGraph]: 每种保持连通的边界顶点块选择对应一个簇，第一个为忠实簇
    """
    support = frozenset(support)
    unknown = support - set(g.edge_ids)
    if not support or unknown:
        raise PartitionError(f"支撑包含未知的边: {sorted(unknown)}")
    base = subgraph(g, support)
    if not base.is_connected():
        raise PartitionError("支撑不连通")

    boundary = [v.id for v in base.vertices
                if any(s[0] not in support for s in g.vertex_map[v.id].slots)]
    options = [list(set_partitions(base.vertex_map[v].slots)) for v in boundary]

    result = []
    for combo in itertools.product(*options):
        cluster = base
        for vertex_id, blocks in zip(boundary, combo):
            cluster = cut_vertex(cluster, vertex_id, blocks)
        if cluster.is_connected():
            result.append(cluster)
    return result


@dataclass(frozen=True)
class EnergyReport:
    """划分能量: 每簇特征值、Λ_p 与 Λ_min"""
    problem: str
    values: Tuple[float, ...]
    p: float
    value: float
    min_value: float

    @property
    def k(self) -> int:
        return len(self.values)

    def lambda_p(self, q: float) -> float:
        return lambda_p(self.values, q)

    def to_dict(self) -> Dict:
        return {
            'problem': self.problem,
            'p': format_p(self.p),
            'cluster_values': list(self.values),
            'value': self.value,
            'min_value': self.min_value,
        }


def cluster_values(p: Partition, problem: str, settings: Optional[SolverSettings] = None) -> List[float]:
    if problem not in PROBLEMS:
        raise PartitionError(f"未知的问题类型: {problem}")
    try:
        if problem == 'dirichlet':
            for cluster in p.dirichlet_clusters:
                if not cluster.dirichlet:
                    raise PartitionError("Dirichlet 能量要求每个簇至少含一个切点")
            return [lambda1(c, settings) for c in p.dirichlet_clusters]
        return [mu2(c, settings) for c in p.clusters]
    except SpectralError as e:
        raise PartitionError(f"簇特征值计算失败: {e}")


def energy(p: Partition, problem: str, exponent: float = math.inf,
           settings: Optional[SolverSettings] = None) -> EnergyReport:
    """
    划分能量

    Args:
        p: 划分
        problem: 'dirichlet'（簇的 λ₁，切点处 Dirichlet）或 'natural'（簇的 μ₂）
        exponent: p ∈ (0, ∞]

    Returns:
        EnergyReport: Λ_p 与 Λ_min
    """
    exponent = parse_p(exponent)
    values = cluster_values(p, problem, settings)
    return EnergyReport(problem, tuple(values), exponent, lambda_p(values, exponent), min(values))


def holder_sandwich(report: EnergyReport, q: float, p: float, rtol: float = 1e-12) -> bool:
    """1 ≤ q ≤ p ≤ ∞ 时 Λ_q ≤ Λ_p ≤ k^{1/q−1/p} Λ_q"""
    if not 1.0 <= q <= p:
        raise PartitionError(f"要求 1 ≤ q ≤ p: q={q}, p={p}")
    low, high = report.lambda_p(q), report.lambda_p(p)
    factor = report.k ** (1.0 / q - (0.0 if math.isinf(p) else 1.0 / p))
    slack = rtol * max(1.0, high)
    return low <= high + slack and high <= factor * low + slack


def _clusters_match(p1: Partition, p2: Partition) -> bool:
    try:
        return all(
            s1 == s2 and discrete_isomorphic(c1.discrete(), c2.discrete()) is not None
            for c1, c2, s1, s2 in zip(p1.clusters, p2.clusters, p1.supports, p2.supports)
        )
    except GraphError as e:
        raise PartitionError(str(e))


def relabellings(p1: Partition, p2: Partition) -> Iterator[CutPattern]:
    """
    把 p2 的切割模式经基图的保长自同构搬到 p1 的标记下

    边 e 被反向映射时切点偏移 x 变为 ℓ − x。不同的自同构给出相同的像时只产生一次。
    """
    source = pattern_graph(p2.base, p2.pattern.counts(), dict(p2.pattern.vertex_blocks))
    target = pattern_graph(p1.base, p1.pattern.counts(), dict(p1.pattern.vertex_blocks))
    matcher = isomorphism.GraphMatcher(source, target,
                                       node_match=isomorphism.categorical_node_match('label', None))
    seen = set()
    for mapping in matcher.isomorphisms_iter():
        cuts = {}
        for edge_id, offsets in p2.pattern.edge_cuts:
            _, image, end = mapping[('S', edge_id, 'a')]
            length = p1.base.length(image)
            cuts[image] = offsets if end == 'a' else sorted(length - x for x in offsets)
        blocks = {
            mapping[('V', vertex_id)][1]: [[mapping[('S',) + tuple(s)][1:] for s in b] for b in parts]
            for vertex_id, parts in p2.pattern.vertex_blocks
        }
        pattern = CutPattern.build(cuts, blocks)
        if pattern not in seen:
            seen.add(pattern)
            yield pattern


def _matched(p1: Partition, p2: Partition) -> Iterator[Partition]:
    """p2 在 p1 标记下的与 p1 同属一个原始划分的像"""
    if p1.base.discrete() != p2.base.discrete() or p1.k != p2.k:
        return
    if p1.descriptor() == p2.descriptor():
        # 模式描述相同时按恒等标记对应
        if _clusters_match(p1, p2):
            yield p2
        return
    for pattern in relabellings(p1, p2):
        image = make_partition(p1.base, pattern)
        if image.descriptor() == p1.descriptor() and _clusters_match(p1, image):
            yield image


def similar(p1: Partition, p2: Partition) -> bool:
    """
    同一基图上的两个划分是否属于同一原始划分

    模式描述相同且对应簇离散同构，或者 p2 经基图的保长自同构搬运后满足这一点。
    """
    return next(_matched(p1, p2), None) is not None


def partition_distance(p1: Partition, p2: Partition) -> float:
    """相似划分之间的距离: 对应簇图空间距离之和（经自同构对应时取各对应方式的最小值）"""
    distances = [
        math.fsum(graph_space_distance(c1, c2) for c1, c2 in zip(p1.clusters, image.clusters))
        for image in _matched(p1, p2)
    ]
    if not distances:
        raise PartitionError("两个划分不相似，距离无定义")
    return min(distances)


def equipartition_check(p: Partition, problem: str, tol: float = 1e-8,
                        settings: Optional[SolverSettings] = None) -> bool:
    values = cluster_values(p, problem, settings)
    return max(values) - min(values) <= tol * max(values)


def bipartite_check(p: Partition) -> Optional[Dict[int, str]]:
    """
    簇的二染色（相邻簇异号）

    Returns:
        簇序号 -> '+' / '-'，不可二染色时为 None
    """
    graph = nx.Graph()
    graph.add_nodes_from(range(p.k))
    graph.add_edges_from(neighbours(p))
    if not nx.is_bipartite(graph):
        return None
    colouring = nx.bipartite.color(graph)
    return {i: '+' if colouring[i] == 0 else '-' for i in range(p.k)}


def limit_pattern(g: MetricGraph, pattern: CutPattern, tol: float = 1e-9) -> CutPattern:
    """
    切点趋于顶点或相互重合时的极限模式（零长度簇被丢弃）

    靠近边端点的切点移到顶点上，该端点槽位从所在块中分离；相邻切点重合时合并为一个。
    """
    blocks: Dict[str, List[set]] = {
        v.id: [set(b) for b in (pattern.blocks(v.id) or (v.slots,))] for v in g.vertices
    }

    def split_off(slot: Slot):
        vertex_id = g.vertex_of(slot)
        for block in blocks[vertex_id]:
            if slot in block and len(block) > 1:
                block.discard(slot)
                blocks[vertex_id].append({slot})
                return

    edge_cuts = {}
    for edge_id, offsets in pattern.edge_cuts:
        length = g.length(edge_id)
        eps = tol * length
        kept = list(offsets)
        if kept and kept[0] <= eps:
            kept.pop(0)
            split_off((edge_id, 'a'))
        if kept and kept[-1] >= length - eps:
            kept.pop()
            split_off((edge_id, 'b'))
        merged: List[float] = []
        for x in kept:
            if merged and x - merged[-1] <= eps:
                merged[-1] = 0.5 * (merged[-1] + x)
            else:
                merged.append(x)
        edge_cuts[edge_id] = merged

    return CutPattern.build(edge_cuts, {v: [sorted(b) for b in bl] for v, bl in blocks.items()})


def partition_to_dict(p: Partition, report: Optional[EnergyReport] = None,
                      graph_ref: Optional[str] = None) -> Dict:
    """划分的 JSON 描述"""
    data = {
        'graph': graph_ref,
        'k': p.k,
        'pattern': p.pattern.to_dict(),
        'descriptor': p.descriptor(),
        'flags': dict(p.flags),
        'cut_set': sorted(p.cut_set),
        'separation_set': sorted(p.separation_set),
        'clusters': [
            {
                'support': sorted(support),
                'length': cluster.total_length,
                'edges': {e.id: e.length for e in cluster.edges},
            }
            for cluster, support in zip(p.clusters, p.supports)
        ],
    }
    if report is not None:
        data['energy'] = report.to_dict()
    return data
