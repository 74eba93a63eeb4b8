"""
节点域 - 零点集、节点划分、Courant 检验、树上等划分粘合与双覆盖的反对称谱
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import linalg

from .graph_core import MetricGraph, Point, Slot, make_graph, subgraph
from .partition_model import (
    CutPattern, Partition, PartitionError, bipartite_check, cluster_values, make_partition,
)
from .spectral import (
    DEFAULT_SETTINGS, EdgeWave, SolverSettings, SpectralError, SpectralResult, ZERO,
    eigenfunction, eigenvalues, inner_product, vertex_residual,
)

VERDICTS = ('nodal', 'generalised-nodal', 'neither', 'inconclusive')


class NodalError(ValueError):
    """节点域分析失败（零函数、非树、非等划分、覆盖标记非法等）"""


@dataclass(frozen=True)
class NodalSettings:
    """对应配置文件的 [nodal] 节"""
    zero_edge_tol: float = 1e-10
    vertex_zero_tol: float = 1e-8
    max_sign_search_dim: int = 3
    glue_tol: float = 1e-8
    equi_rtol: float = 1e-8

    @classmethod
    def from_config(cls, config) -> 'NodalSettings':
        return cls(
            zero_edge_tol=config.get_float('nodal', 'zero_edge_tol', 1e-10),
            vertex_zero_tol=config.get_float('nodal', 'vertex_zero_tol', 1e-8),
            max_sign_search_dim=config.get_int('nodal', 'max_sign_search_dim', 3),
            glue_tol=config.get_float('nodal', 'glue_tol', 1e-8),
            equi_rtol=config.get_float('partition', 'equi_rtol', 1e-8),
        )


DEFAULT_NODAL = NodalSettings()


@dataclass(frozen=True)
class ZeroSet:
    """本征函数的零点: 边内部零点、取零的顶点、恒为零的边"""
    interior: Tuple[Point, ...]
    vertices: FrozenSet[str]
    zero_edges: FrozenSet[str]

    def to_dict(self) -> Dict:
        return {
            'interior': [[e, x] for e, x in self.interior],
            'vertices': sorted(self.vertices),
            'zero_edges': sorted(self.zero_edges),
        }


@dataclass
class NodalResult:
    """节点划分: 支撑子图上由零点切出的符号连通分量"""
    eigenvalue: float
    wave: EdgeWave
    zeros: ZeroSet
    count: int
    partition: Partition
    signs: Tuple[str, ...]

    def to_dict(self) -> Dict:
        return {
            'eigenvalue': self.eigenvalue,
            'nodal_count': self.count,
            'zeros': self.zeros.to_dict(),
            'descriptor': self.partition.descriptor(),
            'exhaustive_on_base': not self.zeros.zero_edges,
            'signs': list(self.signs),
            'flags': dict(self.partition.flags),
        }


def _edge_roots(w: EdgeWave, edge_id: str, length: float) -> List[float]:
    """A cos(kx) + B sin(kx) 在 (0, ℓ) 内的零点（相位形式的闭式解）"""
    a, b = w.coeff(edge_id)
    if w.k == ZERO:
        if b == 0.0:
            return []
        x = -a / b
        return [x] if 0.0 < x < length else []
    phase = math.atan2(b, a)
    # k x − φ = π/2 + nπ
    first = math.ceil((-phase - math.pi / 2) / math.pi)
    roots = []
    n = first
    while True:
        x = (phase + math.pi / 2 + n * math.pi) / w.k
        if x >= length:
            break
        if x > 0.0:
            roots.append(x)
        n += 1
    return roots


def zero_set(g: MetricGraph, w: EdgeWave, settings: NodalSettings = DEFAULT_NODAL) -> ZeroSet:
    """
    本征函数的零点集

    幅值低于 zero_edge_tol·‖ψ‖ 的边视为恒零；顶点值低于 vertex_zero_tol·max 幅值时视为零点，
    贴近这类顶点的边内零点并入顶点。
    """
    norm = w.norm(g)
    scale = max((w.amplitude(e) for e in g.edge_ids), default=0.0)
    if norm == 0.0 or scale == 0.0:
        raise NodalError("本征函数在数值上恒为零")
    zero_edges = frozenset(e for e in g.edge_ids if w.amplitude(e) < settings.zero_edge_tol * norm)

    vanishing = set(g.dirichlet)
    for v in g.vertices:
        live = [s for s in v.slots if s[0] not in zero_edges]
        if not live:
            vanishing.add(v.id)
            continue
        edge_id, end = live[0]
        x = 0.0 if end == 'a' else g.length(edge_id)
        if abs(float(w.value(edge_id, x))) <= settings.vertex_zero_tol * scale:
            vanishing.add(v.id)

    interior = []
    for e in g.edges:
        if e.id in zero_edges:
            continue
        near = 1e-6 * e.length
        start_zero = g.vertex_of((e.id, 'a')) in vanishing
        end_zero = g.vertex_of((e.id, 'b')) in vanishing
        for x in _edge_roots(w, e.id, e.length):
            if (x <= near and start_zero) or (x >= e.length - near and end_zero):
                continue
            interior.append((e.id, x))
    return ZeroSet(tuple(interior), frozenset(vanishing), zero_edges)


def _piece_spans(p: Partition) -> Dict[str, Tuple[str, float, float]]:
    """细分图的边 -> (原边, 起点偏移, 终点偏移)"""
    spans = {}
    for e in p.base.edges:
        chain = p.chains.get(e.id)
        if not chain:
            spans[e.id] = (e.id, 0.0, e.length)
            continue
        cuts = [0.0] + list(p.pattern.cuts(e.id)) + [e.length]
        for i, piece in enumerate(chain):
            spans[piece] = (e.id, cuts[i], cuts[i + 1])
    return spans


def _restrict(w: EdgeWave, edge_id: str, start: float) -> Tuple[float, float]:
    """原边上的波在从 start 起算的片段坐标下的系数"""
    a, b = w.coeff(edge_id)
    if w.k == ZERO:
        return a + b * start, b
    c, s = math.cos(w.k * start), math.sin(w.k * start)
    return a * c + b * s, -a * s + b * c


def _cluster_sign(p: Partition, index: int, w: EdgeWave, spans) -> str:
    cluster = p.clusters[index]
    longest = max(cluster.edges, key=lambda e: (e.length, e.id))
    edge_id, lo, hi = spans[longest.id]
    return '+' if float(w.value(edge_id, 0.5 * (lo + hi))) > 0 else '-'


def nodal_partition(g: MetricGraph, w: EdgeWave, settings: NodalSettings = DEFAULT_NODAL) -> NodalResult:
    """
    本征函数的节点划分

    支撑为 ψ 不恒为零的边；在内部零点处切边，在取零的顶点处把槽位全部拆成单点块，
    切后的连通分量即节点域。

    Args:
        g: 度量图
        w: 本征函数

    Returns:
        NodalResult: 节点域个数与（支撑子图上的）划分
    """
    zeros = zero_set(g, w, settings)
    support = [e for e in g.edge_ids if e not in zeros.zero_edges]
    base = subgraph(g, support) if zeros.zero_edges else g

    cuts: Dict[str, List[float]] = {}
    for edge_id, x in zeros.interior:
        cuts.setdefault(edge_id, []).append(x)
    blocks = {v.id: [[s] for s in v.slots] for v in base.vertices
              if v.id in zeros.vertices and v.degree >= 2}
    try:
        partition = make_partition(base, CutPattern.build({e: sorted(xs) for e, xs in cuts.items()}, blocks))
    except PartitionError as e:
        raise NodalError(f"节点划分构造失败: {e}")

    spans = _piece_spans(partition)
    signs = tuple(_cluster_sign(partition, i, w, spans) for i in range(partition.k))
    return NodalResult(w.eigenvalue, w, zeros, partition.k, partition, signs)


def courant_check(g: MetricGraph, index: int, settings: Optional[SolverSettings] = None,
                  nodal_settings: NodalSettings = DEFAULT_NODAL) -> Dict:
    """
    弱 Courant 界: 第 index 个特征值的每个基本征函数满足 ν ≤ κ = max{j: μ_j = μ_index}

    Returns:
        Dict: eigenvalue, kappa, counts, passed
    """
    settings = settings or DEFAULT_SETTINGS
    if index < 1:
        raise NodalError(f"特征值序号必须 ≥ 1: {index}")
    head = eigenvalues(g, index, settings=settings)
    value = head[index - 1]
    spectrum = eigenvalues(g, index + head.multiplicities[index - 1], settings=settings)
    tol = max(settings.tol_mult, 1e-9) * max(1.0, value)
    kappa = max(j + 1 for j, mu in enumerate(spectrum.values) if abs(mu - value) <= tol)
    counts = [nodal_partition(g, w, nodal_settings).count for w in eigenfunction(g, value, settings)]
    return {
        'index': index,
        'eigenvalue': value,
        'kappa': kappa,
        'counts': counts,
        'passed': all(n <= kappa for n in counts),
    }


# ---------------------------------------------------------------- 树上粘合

@dataclass
class GluedEigenfunction:
    """由等划分各簇基态粘合出的整体本征函数（定义在细分图上）"""
    graph: MetricGraph
    wave: EdgeWave
    weights: Tuple[float, ...]
    residual: float

    def to_dict(self) -> Dict:
        return {
            'eigenvalue': self.wave.eigenvalue,
            'weights': list(self.weights),
            'residual': self.residual,
            'wave': self.wave.to_dict(),
        }


def _ground_state(cluster: MetricGraph, value: float, settings: SolverSettings) -> EdgeWave:
    w = eigenfunction(cluster, value, settings)[0]
    longest = max(cluster.edges, key=lambda e: (w.amplitude(e.id), e.id))
    sample = float(w.value(longest.id, 0.5 * longest.length))
    return w if sample > 0 else w.scaled(-1.0)


def _inward_flux(cluster: MetricGraph, w: EdgeWave, vertex_ids) -> float:
    total = 0.0
    for vertex_id in vertex_ids:
        for edge_id, end in cluster.vertex_map[vertex_id].slots:
            if end == 'a':
                total += float(w.derivative(edge_id, 0.0))
            else:
                total -= float(w.derivative(edge_id, cluster.length(edge_id)))
    return total


def glue_equipartition(p: Partition, settings: Optional[SolverSettings] = None,
                       nodal_settings: NodalSettings = DEFAULT_NODAL) -> Optional[GluedEigenfunction]:
    """
    在树上把 Dirichlet 等划分各簇的基态线性组合成整体本征函数

    从第 0 个簇出发逐层确定系数: 父簇在分离点处的通量由所有子簇平均分担，
    t_c = −t_p·d_p / (子簇数·d_c)，于是每个分离点满足 Kirchhoff 条件。

    Args:
        p: 树上的穷尽 Dirichlet 等划分

    Returns:
        GluedEigenfunction；某个子簇在分离点的通量为零时无法粘合，返回 None
    """
    settings = settings or DEFAULT_SETTINGS
    if not p.base.is_tree():
        raise NodalError("基图不是树")
    if not p.exhaustive:
        raise NodalError("划分不是穷尽的")
    try:
        values = cluster_values(p, 'dirichlet', settings)
    except PartitionError as e:
        raise NodalError(str(e))
    value = float(np.mean(values))
    if max(values) - min(values) > nodal_settings.equi_rtol * max(values):
        raise NodalError(f"不是等划分: {values}")

    clusters = p.dirichlet_clusters
    try:
        waves = [_ground_state(c, value, settings) for c in clusters]
    except SpectralError as e:
        raise NodalError(f"簇基态计算失败: {e}")

    def images(index: int, vertex_id: str) -> List[str]:
        return [u for u, o in p.origins[index].items() if o == vertex_id]

    weights: Dict[int, float] = {0: 1.0}
    queue = [0]
    seen_vertices = set()
    while queue:
        parent = queue.pop(0)
        for vertex_id in sorted(p.separation_set):
            if vertex_id in seen_vertices or parent not in p.touched[vertex_id]:
                continue
            seen_vertices.add(vertex_id)
            children = sorted(i for i in p.touched[vertex_id] if i != parent)
            flux_parent = _inward_flux(clusters[parent], waves[parent], images(parent, vertex_id))
            for child in children:
                flux_child = _inward_flux(clusters[child], waves[child], images(child, vertex_id))
                if abs(flux_child) <= nodal_settings.glue_tol * max(1.0, abs(flux_parent)):
                    return None
                weights[child] = -weights[parent] * flux_parent / (len(children) * flux_child)
                queue.append(child)

    if len(weights) != p.k:
        raise NodalError("簇之间不连通，无法逐层粘合")

    coefficients = {}
    for index, cluster in enumerate(clusters):
        for e in cluster.edge_ids:
            a, b = waves[index].coeff(e)
            coefficients[e] = (weights[index] * a, weights[index] * b)
    wave = EdgeWave(waves[0].k, tuple((e, *coefficients[e]) for e in p.refined.edge_ids))
    residual = vertex_residual(p.refined, wave)
    if residual > nodal_settings.glue_tol:
        raise NodalError(f"粘合后的 Kirchhoff 残差过大: {residual:.3e}")
    return GluedEigenfunction(p.refined, wave, tuple(weights[i] for i in range(p.k)), residual)


# ---------------------------------------------------------------- 广义节点划分

def _lift(p: Partition, w: EdgeWave, spans) -> np.ndarray:
    """基图本征函数在细分图各片段上的系数向量"""
    vector = []
    for e in p.refined.edge_ids:
        edge_id, lo, _ = spans[e]
        vector.extend(_restrict(w, edge_id, lo))
    return np.array(vector)


def _cluster_block(p: Partition, index: int, w: EdgeWave) -> np.ndarray:
    vector = []
    support = p.supports[index]
    for e in p.refined.edge_ids:
        vector.extend(w.coeff(e) if e in support else (0.0, 0.0))
    return np.array(vector)


def generalised_nodal_check(p: Partition, settings: Optional[SolverSettings] = None,
                            nodal_settings: NodalSettings = DEFAULT_NODAL, rcond: float = 1e-7) -> Dict:
    """
    判断 Dirichlet 等划分是否为（广义）节点划分

    在公共能量 μ 的基图本征空间里找 ψ，使其在每个簇上等于该簇 Dirichlet 基态空间中的函数：
    对 [Φ, −W] 求零空间，再在低维零空间中穷举系数符号组合。每个簇上 ψ 不变号且无内部零点时，
    簇内无恒零边为 'nodal'，有恒零边为 'generalised-nodal'。

    Returns:
        Dict: verdict（nodal / generalised-nodal / neither / inconclusive）、bipartite 与证书
    """
    settings = settings or DEFAULT_SETTINGS
    result = {'verdict': 'neither', 'bipartite': bipartite_check(p) is not None, 'certificate': None}
    try:
        values = cluster_values(p, 'dirichlet', settings)
    except PartitionError as e:
        result['reason'] = str(e)
        return result
    value = float(np.mean(values))
    result['energy'] = value
    if max(values) - min(values) > nodal_settings.equi_rtol * max(values):
        result['reason'] = '不是等划分'
        return result

    try:
        basis = eigenfunction(p.base, value, settings)
    except SpectralError:
        result['reason'] = '能量不是基图的特征值'
        return result
    if len(basis) > nodal_settings.max_sign_search_dim:
        result['verdict'] = 'inconclusive'
        result['reason'] = f"本征空间维数 {len(basis)} 超过搜索上限"
        return result

    clusters = p.dirichlet_clusters
    try:
        local = [eigenfunction(c, value, settings) for c in clusters]
    except SpectralError as e:
        result['reason'] = f"簇基态计算失败: {e}"
        return result

    spans = _piece_spans(p)
    columns = [_lift(p, w, spans) for w in basis]
    owners = []
    for index, waves in enumerate(local):
        for w in waves:
            columns.append(-_cluster_block(p, index, w))
            owners.append((index, w))
    null = linalg.null_space(np.column_stack(columns), rcond=rcond)
    if null.shape[1] == 0:
        result['reason'] = '没有与各簇基态一致的本征函数'
        return result
    if null.shape[1] > nodal_settings.max_sign_search_dim:
        result['verdict'] = 'inconclusive'
        result['reason'] = f"零空间维数 {null.shape[1]} 超过搜索上限"
        return result

    d = len(basis)
    best = None
    for weights in itertools.product((-1.0, 0.0, 1.0, 2.0), repeat=null.shape[1]):
        if not any(weights):
            continue
        vector = null @ np.array(weights)
        verdict = _candidate_verdict(p, vector[d:], owners, nodal_settings)
        if verdict == 'nodal' or (verdict == 'generalised-nodal' and best is None):
            c = vector[:d]
            psi = EdgeWave(basis[0].k, tuple(
                (e, sum(ci * w.coeff(e)[0] for ci, w in zip(c, basis)),
                 sum(ci * w.coeff(e)[1] for ci, w in zip(c, basis))) for e in p.base.edge_ids))
            best = (verdict, psi)
            if verdict == 'nodal':
                break
    if best is not None:
        result['verdict'] = best[0]
        result['certificate'] = best[1].to_dict()
    else:
        result['reason'] = '符号组合中没有单号簇'
    return result


def _candidate_verdict(p: Partition, amplitudes, owners, nodal_settings: NodalSettings) -> str:
    generalised = False
    for index, cluster in enumerate(p.dirichlet_clusters):
        parts = [(s, w) for s, (i, w) in zip(amplitudes, owners) if i == index]
        coefficients = []
        for e in cluster.edge_ids:
            a = sum(s * w.coeff(e)[0] for s, w in parts)
            b = sum(s * w.coeff(e)[1] for s, w in parts)
            coefficients.append((e, a, b))
        wave = EdgeWave(parts[0][1].k, tuple(coefficients))
        try:
            nodal = nodal_partition(cluster, wave, nodal_settings)
        except NodalError:
            return 'neither'
        if nodal.count != 1:
            return 'neither'
        if nodal.zeros.zero_edges:
            generalised = True
    return 'generalised-nodal' if generalised else 'nodal'


# ---------------------------------------------------------------- 双覆盖

@dataclass
class DoubleCover:
    """
    二叶覆盖 Ĝ

    projection: Ĝ 的边 -> (G 的边, 叶号)；deck: Ĝ 的槽位对合；vertex_deck: 顶点对合。
    """
    base: MetricGraph
    graph: MetricGraph
    marked: FrozenSet[str]
    projection: Dict[str, Tuple[str, int]] = field(repr=False)
    deck: Dict[Slot, Slot] = field(repr=False)
    vertex_deck: Dict[str, str] = field(repr=False)

    def verify(self, rtol: float = 1e-12) -> Dict[str, bool]:
        fibers: Dict[str, List[int]] = {}
        for edge_id, (base_edge, sheet) in self.projection.items():
            fibers.setdefault(base_edge, []).append(sheet)
        return {
            'total_length': abs(self.graph.total_length - 2 * self.base.total_length)
            <= rtol * self.base.total_length,
            'fibers': all(sorted(s) == [0, 1] for s in fibers.values()) and set(fibers) == set(self.base.edge_ids),
            'involution': all(self.deck[self.deck[s]] == s for s in self.deck)
            and all(self.vertex_deck[self.vertex_deck[v]] == v for v in self.vertex_deck),
            'fixed_point_free': all(self.deck[s] != s for s in self.deck)
            and all(self.vertex_deck[v] != v for v in self.vertex_deck),
            'projection': all(self.projection[self.deck[s][0]][0] == self.projection[s[0]][0] for s in self.deck),
        }

    def reflect(self, w: EdgeWave) -> EdgeWave:
        """ψ∘σ"""
        return EdgeWave(w.k, tuple((e, *w.coeff(self.deck[(e, 'a')][0])) for e in self.graph.edge_ids))

    def to_dict(self) -> Dict:
        return {
            'marked': sorted(self.marked),
            'total_length': self.graph.total_length,
            'components': nx.number_connected_components(self.graph.to_networkx()),
            'invariants': self.verify(),
        }


def build_double_cover(g: MetricGraph, marked) -> DoubleCover:
    """
    两份 G 粘合成的二叶覆盖，在每个标记的二度顶点处交换两叶

    Args:
        g: 度量图
        marked: 二度顶点ID（真划分的切点）

    Returns:
        DoubleCover: 覆盖图、投影与对合
    """
    marked = frozenset(marked)
    for vertex_id in marked:
        if vertex_id not in g.vertex_map:
            raise NodalError(f"未知的顶点: {vertex_id}")
        if g.degree(vertex_id) != 2:
            raise NodalError(f"标记顶点必须为二度: {vertex_id} 的度为 {g.degree(vertex_id)}")

    def lift(slot: Slot, sheet: int) -> Slot:
        return (f"{slot[0]}~{sheet}", slot[1])

    edges = [(f"{e.id}~{sheet}", e.length) for e in g.edges for sheet in (0, 1)]
    vertices: Dict[str, List[Slot]] = {}
    for v in g.vertices:
        for sheet in (0, 1):
            if v.id in marked:
                first, second = v.slots
                vertices[f"{v.id}~{sheet}"] = [lift(first, sheet), lift(second, 1 - sheet)]
            else:
                vertices[f"{v.id}~{sheet}"] = [lift(s, sheet) for s in v.slots]
    dirichlet = [f"{v}~{sheet}" for v in g.dirichlet for sheet in (0, 1)]
    cover = make_graph(edges, vertices, dirichlet)

    projection = {f"{e.id}~{sheet}": (e.id, sheet) for e in g.edges for sheet in (0, 1)}
    deck = {}
    for e in g.edges:
        for sheet in (0, 1):
            for end in ('a', 'b'):
                deck[(f"{e.id}~{sheet}", end)] = (f"{e.id}~{1 - sheet}", end)
    vertex_deck = {f"{v.id}~{sheet}": f"{v.id}~{1 - sheet}" for v in g.vertices for sheet in (0, 1)}
    return DoubleCover(g, cover, marked, projection, deck, vertex_deck)


def cover_of_partition(p: Partition) -> DoubleCover:
    """真划分的双覆盖: 标记点为细分图中全部分离点"""
    if not p.flags['proper']:
        raise NodalError("只对真划分构造双覆盖")
    return build_double_cover(p.refined, p.separation_set)


def split_spectrum(c: DoubleCover, count: int, settings: Optional[SolverSettings] = None,
                   parity_tol: float = 1e-6) -> Dict[str, SpectralResult]:
    """
    按对合 σ 的奇偶性拆分 Ĝ 的谱

    在每个特征空间上计算 σ 的表示矩阵，反对称重数 = (维数 − 迹) / 2。

    Returns:
        Dict: 'full' / 'symmetric' / 'antisymmetric' 三个 SpectralResult，
        其中反对称部分至少包含 count 个特征值
    """
    settings = settings or DEFAULT_SETTINGS
    n = max(2 * count + 2, 4)
    while True:
        spectrum = eigenvalues(c.graph, n, settings=settings)
        symmetric: List[float] = []
        antisymmetric: List[float] = []
        full: List[float] = []
        for value, multiplicity in spectrum.distinct():
            basis = eigenfunction(c.graph, value, settings)
            if len(basis) != multiplicity:
                raise NodalError(f"特征空间维数不一致: {value}")
            action = np.array([[inner_product(c.graph, u, c.reflect(w)) for w in basis] for u in basis])
            anti = (multiplicity - float(np.trace(action))) / 2.0
            if abs(anti - round(anti)) > parity_tol:
                raise NodalError(f"奇偶性无法判定: 特征值 {value} 的反对称重数 {anti:.6f}")
            anti = int(round(anti))
            antisymmetric.extend([value] * anti)
            symmetric.extend([value] * (multiplicity - anti))
            full.extend([value] * multiplicity)
        if len(antisymmetric) >= count:
            break
        n *= 2
        if n > 4096:
            raise NodalError("反对称谱求解超出扫描上限")

    def pack(values: List[float], method: str) -> SpectralResult:
        multiplicities = tuple(values.count(v) for v in values)
        return SpectralResult(tuple(values), multiplicities, tuple(0.0 for _ in values), method)

    return {
        'full': pack(full, 'cover'),
        'symmetric': pack(symmetric, 'symmetric'),
        'antisymmetric': pack(antisymmetric, 'antisymmetric'),
    }


def antisymmetric_spectrum(c: DoubleCover, count: int, settings: Optional[SolverSettings] = None) -> SpectralResult:
    """Ĝ 上关于 σ 反对称的本征函数对应的前 count 个特征值"""
    anti = split_spectrum(c, count, settings)['antisymmetric']
    values = anti.values[:count]
    return SpectralResult(values, anti.multiplicities[:count], anti.errors[:count], 'antisymmetric')
