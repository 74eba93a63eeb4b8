"""
度量图数据模型 - 顶点即端点槽位的划分，支持切割、粘合与图空间距离
"""
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms import isomorphism

# 端点槽位: (边ID, 'a' | 'b')，'a' 端位于偏移 0
Slot = Tuple[str, str]
# 图上的点: (边ID, 偏移)
Point = Tuple[str, float]

ENDS = ('a', 'b')


class GraphError(ValueError):
    """图结构不合法"""


@dataclass(frozen=True)
class Edge:
    id: str
    length: float


@dataclass(frozen=True)
class Vertex:
    id: str
    slots: Tuple[Slot, ...]

    @property
    def degree(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class DiscreteGraph:
    """去掉长度后的离散多重图（允许自环）"""
    vertices: Tuple[str, ...]
    edges: Tuple[Tuple[str, str, str], ...]

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.vertices)
        for edge_id, u, v in self.edges:
            graph.add_edge(u, v, key=edge_id)
        return graph


@dataclass(frozen=True)
class MetricGraph:
    """
    紧致度量图

    边按ID排序，顶点按ID排序；顶点由其端点槽位集合唯一确定。
    labels 为 (元素ID, 标签) 元组，带标签的二度顶点在规范化时保留。
    """
    edges: Tuple[Edge, ...]
    vertices: Tuple[Vertex, ...]
    dirichlet: FrozenSet[str] = frozenset()
    labels: Tuple[Tuple[str, str], ...] = ()

    @cached_property
    def edge_map(self) -> Dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def vertex_map(self) -> Dict[str, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def slot_owner(self) -> Dict[Slot, str]:
        return {slot: v.id for v in self.vertices for slot in v.slots}

    @cached_property
    def label_map(self) -> Dict[str, str]:
        return dict(self.labels)

    @property
    def edge_ids(self) -> List[str]:
        return [e.id for e in self.edges]

    @property
    def vertex_ids(self) -> List[str]:
        return [v.id for v in self.vertices]

    @cached_property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    def length(self, edge_id: str) -> float:
        return self.edge_map[edge_id].length

    def vertex_of(self, slot: Slot) -> str:
        return self.slot_owner[slot]

    def ends(self, edge_id: str) -> Tuple[str, str]:
        """返回边的 ('a'端顶点, 'b'端顶点)"""
        return self.slot_owner[(edge_id, 'a')], self.slot_owner[(edge_id, 'b')]

    def degree(self, vertex_id: str) -> int:
        return self.vertex_map[vertex_id].degree

    def is_loop(self, edge_id: str) -> bool:
        a, b = self.ends(edge_id)
        return a == b

    def is_dirichlet(self, vertex_id: str) -> bool:
        return vertex_id in self.dirichlet

    def is_equilateral(self, rtol: float = 1e-12) -> bool:
        lengths = [e.length for e in self.edges]
        return max(lengths) - min(lengths) <= rtol * max(lengths)

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == len(self.vertices) - 1

    def with_lengths(self, lengths: Mapping[str, float]) -> 'MetricGraph':
        """替换部分边长（不重新校验拓扑）"""
        new_edges = []
        for e in self.edges:
            if e.id in lengths:
                value = float(lengths[e.id])
                if not value > 0.0:
                    raise GraphError(f"边长必须为正: {e.id}={value}")
                new_edges.append(Edge(e.id, value))
            else:
                new_edges.append(e)
        return replace(self, edges=tuple(new_edges))

    def with_dirichlet(self, vertex_ids: Iterable[str]) -> 'MetricGraph':
        ids = frozenset(vertex_ids)
        unknown = ids - set(self.vertex_map)
        if unknown:
            raise GraphError(f"未知的Dirichlet顶点: {sorted(unknown)}")
        return replace(self, dirichlet=ids)

    def discrete(self) -> DiscreteGraph:
        return DiscreteGraph(
            vertices=tuple(self.vertex_ids),
            edges=tuple((e.id, *self.ends(e.id)) for e in self.edges)
        )

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.vertex_ids)
        for e in self.edges:
            a, b = self.ends(e.id)
            graph.add_edge(a, b, key=e.id, length=e.length)
        return graph


def make_graph(edges: Iterable[Tuple[str, float]],
               vertices: Mapping[str, Iterable[Slot]],
               dirichlet: Iterable[str] = (),
               labels: Optional[Mapping[str, str]] = None) -> MetricGraph:
    """
    校验并构造度量图

    Args:
        edges: (边ID, 长度) 序列
        vertices: 顶点ID -> 端点槽位列表
        dirichlet: Dirichlet顶点ID
        labels: 元素ID -> 标签

    Returns:
        MetricGraph: 校验后的图
    """
    edge_list = []
    seen_edges = set()
    for edge_id, length in edges:
        edge_id = str(edge_id)
        if edge_id in seen_edges:
            raise GraphError(f"重复的边ID: {edge_id}")
        seen_edges.add(edge_id)
        try:
            value = float(length)
        except (TypeError, ValueError):
            raise GraphError(f"边长不是数值: {edge_id}={length!r}")
        if not (value > 0.0 and math.isfinite(value)):
            raise GraphError(f"边长必须为有限正数: {edge_id}={length!r}")
        edge_list.append(Edge(edge_id, value))

    vertex_list = []
    used_slots: Dict[Slot, str] = {}
    for vertex_id, slots in vertices.items():
        vertex_id = str(vertex_id)
        slot_tuple = tuple(sorted((str(s[0]), str(s[1])) for s in slots))
        if not slot_tuple:
            raise GraphError(f"顶点没有端点槽位: {vertex_id}")
        for slot in slot_tuple:
            if slot[0] not in seen_edges:
                raise GraphError(f"槽位引用了未知的边: {slot}")
            if slot[1] not in ENDS:
                raise GraphError(f"槽位端点必须为 'a' 或 'b': {slot}")
            if slot in used_slots:
                raise GraphError(f"槽位被重复分配: {slot} 属于 {used_slots[slot]} 和 {vertex_id}")
            used_slots[slot] = vertex_id
        vertex_list.append(Vertex(vertex_id, slot_tuple))

    for edge in edge_list:
        for end in ENDS:
            if (edge.id, end) not in used_slots:
                raise GraphError(f"悬空的端点槽位: {(edge.id, end)}")

    ids = [v.id for v in vertex_list]
    if len(set(ids)) != len(ids):
        raise GraphError("重复的顶点ID")

    dirichlet_set = frozenset(str(v) for v in dirichlet)
    unknown = dirichlet_set - set(ids)
    if unknown:
        raise GraphError(f"未知的Dirichlet顶点: {sorted(unknown)}")

    label_items = tuple(sorted((str(k), str(v)) for k, v in (labels or {}).items()))

    return MetricGraph(
        edges=tuple(sorted(edge_list, key=lambda e: e.id)),
        vertices=tuple(sorted(vertex_list, key=lambda v: v.id)),
        dirichlet=dirichlet_set,
        labels=label_items
    )


def build_graph(data: Mapping) -> MetricGraph:
    """
    由JSON描述构造度量图

    Args:
        data: {"edges":[{"id","length"}], "vertices":[{"id","slots"}], "dirichlet":[...], "labels":{...}}

    Returns:
        MetricGraph: 校验后的图（不要求连通）
    """
    if 'edges' not in data or 'vertices' not in data:
        raise GraphError("图描述缺少 edges 或 vertices 字段")
    try:
        edges = [(item['id'], item['length']) for item in data['edges']]
        vertices: Dict[str, List[Slot]] = {}
        for item in data['vertices']:
            vertex_id = str(item['id'])
            if vertex_id in vertices:
                raise GraphError(f"重复的顶点ID: {vertex_id}")
            vertices[vertex_id] = [tuple(slot) for slot in item['slots']]
    except (KeyError, TypeError) as e:
        raise GraphError(f"图描述格式错误: {e}")
    return make_graph(edges, vertices, data.get('dirichlet', []), data.get('labels'))


def graph_to_dict(g: MetricGraph) -> Dict:
    """图 -> JSON描述（长度以 repr 精度保存）"""
    data = {
        'edges': [{'id': e.id, 'length': e.length} for e in g.edges],
        'vertices': [{'id': v.id, 'slots': [list(s) for s in v.slots]} for v in g.vertices],
        'dirichlet': sorted(g.dirichlet),
    }
    if g.labels:
        data['labels'] = dict(g.labels)
    return data


def from_edge_list(edges: Sequence[Tuple[str, str, str, float]],
                   dirichlet: Iterable[str] = (),
                   labels: Optional[Mapping[str, str]] = None) -> MetricGraph:
    """
    由 (边ID, 起点, 终点, 长度) 列表构造图，边从起点('a')指向终点('b')
    """
    vertices: Dict[str, List[Slot]] = {}
    for edge_id, u, v, _ in edges:
        vertices.setdefault(u, []).append((edge_id, 'a'))
        vertices.setdefault(v, []).append((edge_id, 'b'))
    return make_graph([(e[0], e[3]) for e in edges], vertices, dirichlet, labels)


# ---------------------------------------------------------------- 常用图族

def interval(length: float = 1.0, dirichlet_ends: Iterable[str] = ()) -> MetricGraph:
    """区间 u --e1--> w；dirichlet_ends 取 'u' / 'w'"""
    return from_edge_list([('e1', 'u', 'w', length)], dirichlet=dirichlet_ends)


def path(lengths: Sequence[float]) -> MetricGraph:
    edges = [(f"e{i + 1}", f"v{i}", f"v{i + 1}", l) for i, l in enumerate(lengths)]
    return from_edge_list(edges)


def loop(length: float = 1.0) -> MetricGraph:
    return from_edge_list([('e1', 'v', 'v', length)])


def star(lengths: Sequence[float]) -> MetricGraph:
    """星图: 中心 c，边 e_i 从中心指向叶子 p_i"""
    edges = [(f"e{i + 1}", 'c', f"p{i + 1}", l) for i, l in enumerate(lengths)]
    return from_edge_list(edges)


def pumpkin(lengths: Sequence[float]) -> MetricGraph:
    """南瓜图: 两个顶点 v, w 之间的平行边"""
    edges = [(f"e{i + 1}", 'v', 'w', l) for i, l in enumerate(lengths)]
    return from_edge_list(edges)


def lasso(handle: float = 1.0, arcs: Tuple[float, float] = (1.0, 1.0)) -> MetricGraph:
    """套索: e1 从 w 到 v，环由 e2、e3 从 v 到顶点 z 组成（z 为带标签的标记点）"""
    edges = [('e1', 'w', 'v', handle), ('e2', 'v', 'z', arcs[0]), ('e3', 'v', 'z', arcs[1])]
    return from_edge_list(edges, labels={'z': 'apex'})


def dumbbell(loop_lengths: Tuple[float, float] = (1.0, 1.0), handle: float = 1.0) -> MetricGraph:
    edges = [('l1', 'u', 'u', loop_lengths[0]), ('h', 'u', 'w', handle), ('l2', 'w', 'w', loop_lengths[1])]
    return from_edge_list(edges)


def reinforced_loop(short: float = 0.2, long: float = 1.0) -> MetricGraph:
    """两条长边构成环，两对短边在对径位置加固"""
    edges = [
        ('t', 'a', 'b', long), ('s', 'c', 'd', long),
        ('r1', 'a', 'c', short), ('r2', 'a', 'c', short),
        ('r3', 'b', 'd', short), ('r4', 'b', 'd', short),
    ]
    return from_edge_list(edges)


def double_dumbbell(weight: float = 0.1, handle: float = 1.0) -> MetricGraph:
    """手柄两端各挂一个总长为 weight 的 8 字形链"""
    half, quarter = weight / 2.0, weight / 4.0
    edges = [
        ('l1', 'b1', 'b1', half), ('p1', 'b1', 'c1', quarter), ('p2', 'b1', 'c1', quarter),
        ('e0', 'c1', 'c2', handle),
        ('q1', 'c2', 'b2', quarter), ('q2', 'c2', 'b2', quarter), ('l2', 'b2', 'b2', half),
    ]
    return from_edge_list(edges)


# ---------------------------------------------------------------- 规范化与切割

@dataclass(frozen=True)
class CanonicalForm:
    """规范代表元及原顶点在其上的位置"""
    graph: MetricGraph
    vertex_map: Dict[str, Point] = field(default_factory=dict, hash=False, compare=False)


def _vertex_point(g: MetricGraph, vertex_id: str) -> Point:
    slot = g.vertex_map[vertex_id].slots[0]
    return (slot[0], 0.0 if slot[1] == 'a' else g.length(slot[0]))


def canonicalize(g: MetricGraph) -> CanonicalForm:
    """
    消去所有二度顶点（合并两条入射边，长度相加）

    Dirichlet 顶点与带标签的顶点保留；纯环分量保留持有 (最小边ID, 'a') 的标记顶点。

    Args:
        g: 任意度量图

    Returns:
        CanonicalForm: 规范图及原顶点位置映射
    """
    lengths = {e.id: e.length for e in g.edges}
    slots = {v.id: list(v.slots) for v in g.vertices}
    owner = dict(g.slot_owner)
    positions: Dict[str, Point] = {v.id: _vertex_point(g, v.id) for v in g.vertices}

    keep = set(g.dirichlet) | set(g.label_map)
    for comp in nx.connected_components(g.to_networkx()):
        if all(len(slots[v]) == 2 and v not in keep for v in comp):
            first_edge = min(e for v in comp for e, _ in slots[v])
            keep.add(owner[(first_edge, 'a')])

    while True:
        candidate = None
        for vertex_id in sorted(slots):
            vs = slots[vertex_id]
            if vertex_id in keep or len(vs) != 2 or vs[0][0] == vs[1][0]:
                continue
            candidate = vertex_id
            break
        if candidate is None:
            break

        (e1, end1), (e2, end2) = sorted(slots.pop(candidate))
        l1, l2 = lengths.pop(e1), lengths.pop(e2)
        far1 = (e1, 'a' if end1 == 'b' else 'b')
        far2 = (e2, 'a' if end2 == 'b' else 'b')
        new_id = f"{e1}+{e2}"
        lengths[new_id] = l1 + l2

        # 新边 'a' 端为 e1 的远端，'b' 端为 e2 的远端
        for vertex_id, (edge_id, offset) in positions.items():
            if edge_id == e1:
                positions[vertex_id] = (new_id, offset if end1 == 'b' else l1 - offset)
            elif edge_id == e2:
                positions[vertex_id] = (new_id, l1 + (offset if end2 == 'a' else l2 - offset))

        for far, new_end in ((far1, 'a'), (far2, 'b')):
            holder = owner.pop(far)
            slots[holder] = [s for s in slots[holder] if s != far] + [(new_id, new_end)]
            owner[(new_id, new_end)] = holder
        owner.pop((e1, end1), None)
        owner.pop((e2, end2), None)

    graph = make_graph(lengths.items(), slots, g.dirichlet & set(slots),
                       {k: v for k, v in g.label_map.items() if k in slots or k in lengths})
    return CanonicalForm(graph=graph, vertex_map=positions)


def subdivide(g: MetricGraph, edge_id: str,
              positions: Sequence[float]) -> Tuple[MetricGraph, List[str]]:
    """
    在边内部插入二度哑顶点

    Args:
        g: 原图
        edge_id: 被细分的边
        positions: 严格递增、位于 (0, length) 内的偏移

    Returns:
        (新图, 原边对应的新边链)；片段命名 e#i，哑顶点命名 e@i
    """
    if edge_id not in g.edge_map:
        raise GraphError(f"未知的边: {edge_id}")
    length = g.length(edge_id)
    cuts = [float(x) for x in positions]
    if not cuts:
        return g, [edge_id]
    for x in cuts:
        if not (0.0 < x < length):
            raise GraphError(f"切点必须位于边内部: {edge_id} 偏移 {x} 不在 (0, {length}) 内")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise GraphError(f"切点必须严格递增且不重复: {cuts}")

    bounds = [0.0] + cuts + [length]
    chain = [f"{edge_id}#{i}" for i in range(len(cuts) + 1)]
    edges = [(e.id, e.length) for e in g.edges if e.id != edge_id]
    edges += [(chain[i], bounds[i + 1] - bounds[i]) for i in range(len(chain))]

    vertices: Dict[str, List[Slot]] = {}
    for v in g.vertices:
        new_slots = []
        for slot in v.slots:
            if slot[0] != edge_id:
                new_slots.append(slot)
            elif slot[1] == 'a':
                new_slots.append((chain[0], 'a'))
            else:
                new_slots.append((chain[-1], 'b'))
        vertices[v.id] = new_slots
    for i in range(1, len(chain)):
        vertices[f"{edge_id}@{i}"] = [(chain[i - 1], 'b'), (chain[i], 'a')]

    return make_graph(edges, vertices, g.dirichlet, g.label_map), chain


def cut_vertex(g: MetricGraph, vertex_id: str,
               blocks: Sequence[Iterable[Slot]]) -> MetricGraph:
    """
    沿顶点切割：把顶点的槽位类按 blocks 分成若干新顶点

    新顶点命名 v|i（按块排序）；单块时保持原ID。Dirichlet 标记与标签由所有像继承。
    """
    if vertex_id not in g.vertex_map:
        raise GraphError(f"未知的顶点: {vertex_id}")
    block_list = [tuple(sorted(tuple(s) for s in b)) for b in blocks]
    flat = [s for b in block_list for s in b]
    if any(not b for b in block_list):
        raise GraphError("切割块不能为空")
    if len(flat) != len(set(flat)) or set(flat) != set(g.vertex_map[vertex_id].slots):
        raise GraphError(f"切割块不是顶点 {vertex_id} 槽位类的划分")
    if len(block_list) == 1:
        return g

    block_list.sort()
    vertices = {v.id: list(v.slots) for v in g.vertices if v.id != vertex_id}
    images = [f"{vertex_id}|{i}" for i in range(len(block_list))]
    for image, block in zip(images, block_list):
        if image in vertices:
            raise GraphError(f"切割后顶点ID冲突: {image}")
        vertices[image] = list(block)

    dirichlet = set(g.dirichlet)
    if vertex_id in dirichlet:
        dirichlet.discard(vertex_id)
        dirichlet.update(images)
    labels = dict(g.label_map)
    if vertex_id in labels:
        tag = labels.pop(vertex_id)
        labels.update({image: tag for image in images})
    return make_graph([(e.id, e.length) for e in g.edges], vertices, dirichlet, labels)


def subgraph(g: MetricGraph, edge_ids: Iterable[str]) -> MetricGraph:
    """由边子集诱导的子图（顶点只保留相关槽位）"""
    keep = set(edge_ids)
    vertices = {}
    for v in g.vertices:
        slots = [s for s in v.slots if s[0] in keep]
        if slots:
            vertices[v.id] = slots
    return make_graph([(e.id, e.length) for e in g.edges if e.id in keep], vertices,
                      g.dirichlet & set(vertices),
                      {k: t for k, t in g.label_map.items() if k in vertices or k in keep})


def components(g: MetricGraph) -> List[Tuple[MetricGraph, FrozenSet[str]]]:
    """
    连通分量，按最小边ID排序

    Returns:
        [(分量图, 边ID集合), ...]
    """
    nxg = g.to_networkx()
    result = []
    for nodes in nx.connected_components(nxg):
        edge_ids = frozenset(k for _, _, k in nxg.edges(nodes, keys=True))
        result.append((subgraph(g, edge_ids), edge_ids))
    result.sort(key=lambda item: min(item[1]))
    return result


def bridges(g: MetricGraph) -> List[str]:
    """桥边（删除后分量数增加的边）"""
    simple = nx.Graph()
    simple.add_nodes_from(g.vertex_ids)
    multiplicity: Dict[Tuple[str, str], List[str]] = {}
    for e in g.edges:
        a, b = g.ends(e.id)
        if a == b:
            continue
        key = tuple(sorted((a, b)))
        multiplicity.setdefault(key, []).append(e.id)
        simple.add_edge(*key)
    result = []
    for u, v in nx.bridges(simple):
        ids = multiplicity[tuple(sorted((u, v)))]
        if len(ids) == 1:
            result.append(ids[0])
    return sorted(result)


# ---------------------------------------------------------------- 距离

def _check_point(g: MetricGraph, x: Point) -> Tuple[str, float]:
    try:
        edge_id, offset = x[0], float(x[1])
    except (TypeError, ValueError, IndexError):
        raise GraphError(f"点格式错误: {x!r}")
    if edge_id not in g.edge_map:
        raise GraphError(f"点所在的边不存在: {edge_id}")
    if not (0.0 <= offset <= g.length(edge_id)):
        raise GraphError(f"偏移超出边长范围: {x!r}")
    return edge_id, offset


def path_distance(g: MetricGraph, x: Point, y: Point) -> float:
    """
    图上两点间的最短路长度，不同分量之间为 +inf
    """
    ex, ox = _check_point(g, x)
    ey, oy = _check_point(g, y)

    weighted = nx.Graph()
    weighted.add_nodes_from(g.vertex_ids)
    for e in g.edges:
        a, b = g.ends(e.id)
        if a == b:
            continue
        if weighted.has_edge(a, b):
            weighted[a][b]['weight'] = min(weighted[a][b]['weight'], e.length)
        else:
            weighted.add_edge(a, b, weight=e.length)

    best = math.inf
    if ex == ey:
        best = abs(ox - oy)

    ax, bx = g.ends(ex)
    ay, by = g.ends(ey)
    to_x = {ax: ox, bx: g.length(ex) - ox} if ax != bx else {ax: min(ox, g.length(ex) - ox)}
    to_y = {ay: oy, by: g.length(ey) - oy} if ay != by else {ay: min(oy, g.length(ey) - oy)}
    for source, d_source in to_x.items():
        reach = nx.single_source_dijkstra_path_length(weighted, source, weight='weight')
        for target, d_target in to_y.items():
            if target in reach:
                best = min(best, d_source + reach[target] + d_target)
    return best


def _edge_tagged(g: MetricGraph, tags: Mapping[str, str]) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(g.vertex_ids)
    for e in g.edges:
        graph.add_edge(*g.ends(e.id), key=e.id, tag=tags[e.id])
    return graph


def _tags_match(d1: Mapping, d2: Mapping) -> bool:
    return sorted(a['tag'] for a in d1.values()) == sorted(a['tag'] for a in d2.values())


def graph_space_distance(g1: MetricGraph, g2: MetricGraph,
                         bijection: Optional[Mapping[str, str]] = None) -> float:
    """
    同一离散图上两个度量图之间的欧氏距离

    Args:
        g1, g2: 度量图
        bijection: g1 边 -> g2 边；默认按ID恒等

    Returns:
        float: 边长向量的欧氏距离
    """
    if len(g1.edges) != len(g2.edges) or len(g1.vertices) != len(g2.vertices):
        raise GraphError("两个图的边数或顶点数不同")
    mapping = dict(bijection) if bijection is not None else {e: e for e in g1.edge_ids}
    if sorted(mapping) != sorted(g1.edge_ids) or sorted(mapping.values()) != sorted(g2.edge_ids):
        raise GraphError("边映射不是双射")

    left = _edge_tagged(g1, {e: mapping[e] for e in g1.edge_ids})
    right = _edge_tagged(g2, {e: e for e in g2.edge_ids})
    if not nx.is_isomorphic(left, right, edge_match=_tags_match):
        raise GraphError("边映射不是离散图同构")

    return math.sqrt(math.fsum((g1.length(e) - g2.length(mapping[e])) ** 2 for e in g1.edge_ids))


def collapse_zero_edges(g: MetricGraph,
                        shrink: Iterable[str]) -> Tuple[MetricGraph, Dict[str, Tuple[str, ...]]]:
    """
    收缩指定的边（长度趋于零的极限图）

    Returns:
        (收缩后的图, 新顶点ID -> 原顶点ID元组)
    """
    shrink_set = set(shrink)
    unknown = shrink_set - set(g.edge_ids)
    if unknown:
        raise GraphError(f"未知的边: {sorted(unknown)}")
    if shrink_set == set(g.edge_ids):
        raise GraphError("不能收缩全部边")

    merged = nx.Graph()
    merged.add_nodes_from(g.vertex_ids)
    for edge_id in shrink_set:
        merged.add_edge(*g.ends(edge_id))

    vertices: Dict[str, List[Slot]] = {}
    classes: Dict[str, Tuple[str, ...]] = {}
    dirichlet = set()
    labels = {k: t for k, t in g.label_map.items() if k in g.edge_map and k not in shrink_set}
    for members in nx.connected_components(merged):
        ordered = tuple(sorted(members))
        new_id = "=".join(ordered)
        slots = [s for m in ordered for s in g.vertex_map[m].slots if s[0] not in shrink_set]
        if not slots:
            raise GraphError(f"收缩后出现孤立顶点: {new_id}")
        vertices[new_id] = slots
        classes[new_id] = ordered
        if any(m in g.dirichlet for m in ordered):
            dirichlet.add(new_id)
        for m in ordered:
            if m in g.label_map:
                labels[new_id] = g.label_map[m]

    edges = [(e.id, e.length) for e in g.edges if e.id not in shrink_set]
    return make_graph(edges, vertices, dirichlet, labels), classes


def discrete_isomorphic(d1: DiscreteGraph, d2: DiscreteGraph,
                        max_edges: int = 12) -> Optional[Dict[str, str]]:
    """
    离散多重图同构（含自环）

    Returns:
        顶点与边ID的映射字典，不同构时为 None
    """
    if max(len(d1.edges), len(d2.edges)) > max_edges:
        raise GraphError(f"图规模超过同构搜索上限: {max_edges} 条边")
    if len(d1.vertices) != len(d2.vertices) or len(d1.edges) != len(d2.edges):
        return None

    g1, g2 = d1.to_networkx(), d2.to_networkx()
    if sorted(d for _, d in g1.degree()) != sorted(d for _, d in g2.degree()):
        return None

    matcher = isomorphism.MultiGraphMatcher(g1, g2)
    if not matcher.is_isomorphic():
        return None

    mapping = dict(matcher.mapping)
    by_pair: Dict[Tuple[str, str], List[str]] = {}
    for edge_id, u, v in d2.edges:
        by_pair.setdefault(tuple(sorted((u, v))), []).append(edge_id)
    for pair in by_pair.values():
        pair.sort()
    for edge_id, u, v in sorted(d1.edges):
        image = tuple(sorted((mapping[u], mapping[v])))
        mapping[edge_id] = by_pair[image].pop(0)
    return mapping
