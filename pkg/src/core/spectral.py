"""
度量图拉普拉斯谱 - 久期行列式精确求解、有限元交叉验证与等边图谱公式
"""
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy import linalg, optimize

from .graph_core import MetricGraph, canonicalize, collapse_zero_edges, components

ZERO = 0.0


class SpectralError(RuntimeError):
    """谱计算失败（方法不一致、扫描窗口耗尽、非特征值等）"""


@dataclass(frozen=True)
class SolverSettings:
    """谱求解器参数，对应配置文件的 [spectral] 与 [fem] 两节"""
    scan_divisor: int = 16
    tol_root: float = 1e-8
    tol_mult: float = 1e-6
    root_xtol: float = 1e-12
    merge_tol: float = 1e-9
    mesh_divisor: int = 200
    min_nodes: int = 4
    cross_rtol: float = 1e-7

    @classmethod
    def from_config(cls, config) -> 'SolverSettings':
        return cls(
            scan_divisor=config.get_int('spectral', 'scan_divisor', 16),
            tol_root=config.get_float('spectral', 'tol_root', 1e-8),
            tol_mult=config.get_float('spectral', 'tol_mult', 1e-6),
            root_xtol=config.get_float('spectral', 'root_xtol', 1e-12),
            merge_tol=config.get_float('spectral', 'merge_tol', 1e-9),
            mesh_divisor=config.get_int('fem', 'mesh_divisor', 200),
            min_nodes=config.get_int('fem', 'min_nodes', 4),
            cross_rtol=config.get_float('fem', 'cross_rtol', 1e-7),
        )


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class SpectralResult:
    """
    有序特征值（重根按重数重复）

    multiplicities[i] 为 values[i] 所在特征空间的维数。
    """
    values: Tuple[float, ...]
    multiplicities: Tuple[int, ...]
    errors: Tuple[float, ...]
    method: str

    def __len__(self):
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]

    def distinct(self) -> List[Tuple[float, int]]:
        """去重后的 (特征值, 重数) 列表"""
        result = []
        i = 0
        while i < len(self.values):
            result.append((self.values[i], self.multiplicities[i]))
            i += max(1, self.multiplicities[i])
        return result

    def to_dict(self) -> Dict:
        return {
            'method': self.method,
            'values': list(self.values),
            'multiplicities': list(self.multiplicities),
            'errors': list(self.errors),
        }


@dataclass(frozen=True)
class EdgeWave:
    """
    本征函数的逐边波系数

    k > 0 时 f_m(x) = A cos(kx) + B sin(kx)；k = 0 时 f_m(x) = A + B x。
    x 为从边的 'a' 端量起的偏移。
    """
    k: float
    coefficients: Tuple[Tuple[str, float, float], ...]

    @property
    def eigenvalue(self) -> float:
        return self.k * self.k

    def coeff(self, edge_id: str) -> Tuple[float, float]:
        for e, a, b in self.coefficients:
            if e == edge_id:
                return a, b
        raise KeyError(edge_id)

    def value(self, edge_id: str, x):
        a, b = self.coeff(edge_id)
        x = np.asarray(x, dtype=float)
        if self.k == ZERO:
            return a + b * x
        return a * np.cos(self.k * x) + b * np.sin(self.k * x)

    def derivative(self, edge_id: str, x):
        a, b = self.coeff(edge_id)
        x = np.asarray(x, dtype=float)
        if self.k == ZERO:
            return b + 0.0 * x
        return self.k * (-a * np.sin(self.k * x) + b * np.cos(self.k * x))

    def amplitude(self, edge_id: str) -> float:
        a, b = self.coeff(edge_id)
        return math.hypot(a, b)

    def scaled(self, factor: float) -> 'EdgeWave':
        return EdgeWave(self.k, tuple((e, factor * a, factor * b) for e, a, b in self.coefficients))

    def norm(self, g: MetricGraph) -> float:
        return math.sqrt(max(inner_product(g, self, self), 0.0))

    def to_dict(self) -> Dict:
        return {'k': self.k, 'coefficients': {e: [a, b] for e, a, b in self.coefficients}}


# ---------------------------------------------------------------- 久期矩阵

_CONST, _COS, _SIN = 0, 1, 2


def _slot_terms(index: int, end: str, derivative: bool) -> List[Tuple[int, int, float]]:
    """槽位上的函数值 / 内向导数(除以k) 对列 (A, B) 的系数: (列, 类型, 符号)"""
    a_col, b_col = 2 * index, 2 * index + 1
    if end == 'a':
        return [(b_col, _CONST, 1.0)] if derivative else [(a_col, _CONST, 1.0)]
    if derivative:
        return [(a_col, _SIN, 1.0), (b_col, _COS, -1.0)]
    return [(a_col, _COS, 1.0), (b_col, _SIN, 1.0)]


@lru_cache(maxsize=1024)
def _layout(g: MetricGraph) -> Tuple[np.ndarray, Tuple[Tuple[int, int, int, int, float], ...]]:
    """久期矩阵的稀疏结构: (边长数组, (行, 列, 边序号, 类型, 符号) 元组)"""
    index = {e.id: i for i, e in enumerate(g.edges)}
    lengths = np.array([e.length for e in g.edges])
    entries = []
    row = 0
    for v in g.vertices:
        slots = v.slots
        if v.id in g.dirichlet:
            for slot in slots:
                for col, kind, sign in _slot_terms(index[slot[0]], slot[1], False):
                    entries.append((row, col, index[slot[0]], kind, sign))
                row += 1
            continue
        first = slots[0]
        for slot in slots[1:]:
            for col, kind, sign in _slot_terms(index[slot[0]], slot[1], False):
                entries.append((row, col, index[slot[0]], kind, sign))
            for col, kind, sign in _slot_terms(index[first[0]], first[1], False):
                entries.append((row, col, index[first[0]], kind, -sign))
            row += 1
        for slot in slots:
            for col, kind, sign in _slot_terms(index[slot[0]], slot[1], True):
                entries.append((row, col, index[slot[0]], kind, sign))
        row += 1
    return lengths, tuple(entries)


def _secular_batch(g: MetricGraph, ks: np.ndarray, derivative: bool = False) -> np.ndarray:
    """一组波数上的久期矩阵；derivative=True 时给出逐元素关于 k 的导数"""
    lengths, entries = _layout(g)
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    phase = np.outer(ks, lengths)
    if derivative:
        table = (np.zeros_like(phase), -lengths * np.sin(phase), lengths * np.cos(phase))
    else:
        table = (np.ones_like(phase), np.cos(phase), np.sin(phase))
    size = 2 * len(lengths)
    mats = np.zeros((len(ks), size, size))
    for row, col, edge, kind, sign in entries:
        mats[:, row, col] += sign * table[kind][:, edge]
    return mats


def assemble_secular(g: MetricGraph, k: float) -> np.ndarray:
    """
    组装波数 k 处的 2M×2M 久期矩阵

    自然顶点: 每个额外槽位一条连续性方程 + 一条 Kirchhoff 方程；
    Dirichlet 顶点: 每个槽位一条取值方程。导数行已除以 k。

    Args:
        g: 度量图
        k: 正波数

    Returns:
        np.ndarray: 列依次为 (A_m, B_m)
    """
    if not k > 0:
        raise SpectralError(f"波数必须为正: {k}")
    return _secular_batch(g, np.array([k]))[0]


def _sigma(g: MetricGraph, k: float) -> np.ndarray:
    return linalg.svd(assemble_secular(g, k), compute_uv=False)


def _scale(s: np.ndarray) -> float:
    # 环上 kℓ ∈ 2πZ 时久期矩阵整体为零，此时按单位尺度判断
    return max(float(s[0]), 1.0)


def _sigma_ratio(g: MetricGraph, k: float) -> float:
    s = _sigma(g, k)
    return s[-1] / _scale(s)


def kernel_dimension(g: MetricGraph, k: float, settings: SolverSettings = DEFAULT_SETTINGS) -> int:
    s = _sigma(g, k)
    return int(np.sum(s < settings.tol_mult * _scale(s)))


# ---------------------------------------------------------------- 闭式解

def _zero_multiplicity(g: MetricGraph) -> int:
    """零特征值重数 = 不含 Dirichlet 顶点的连通分量个数"""
    return sum(1 for comp, _ in components(g) if not comp.dirichlet)


def _single_edge_values(g: MetricGraph, count: int) -> Optional[SpectralResult]:
    """单边图（区间或单环）的闭式谱"""
    if len(g.edges) != 1:
        return None
    edge = g.edges[0]
    l = edge.length
    a, b = g.ends(edge.id)
    values: List[Tuple[float, int]] = []
    m = 0
    if a == b:
        if a in g.dirichlet:
            while sum(x[1] for x in values) < count:
                m += 1
                values.append(((m * math.pi / l) ** 2, 1))
        else:
            values.append((ZERO, 1))
            while sum(x[1] for x in values) < count:
                m += 1
                values.append(((2 * m * math.pi / l) ** 2, 2))
    else:
        n_dirichlet = int(a in g.dirichlet) + int(b in g.dirichlet)
        while sum(x[1] for x in values) < count:
            if n_dirichlet == 0:
                k = m * math.pi / l
            elif n_dirichlet == 2:
                k = (m + 1) * math.pi / l
            else:
                k = (m + 0.5) * math.pi / l
            values.append((k * k, 1))
            m += 1
    flat_values, flat_mult = [], []
    for value, mult in values:
        flat_values.extend([value] * mult)
        flat_mult.extend([mult] * mult)
    return SpectralResult(tuple(flat_values[:count]), tuple(flat_mult[:count]),
                          (ZERO,) * count, 'closed-form')


# ---------------------------------------------------------------- 久期扫描
#
# 正特征值 k² 的计数由键散射矩阵 U(k) = S·diag(e^{ikℓ}) 给出: U 的本征相位随 k 严格增加，
# k² 的重数等于 U(k) 的本征值 1 的重数。相位和 F(k) = Σ arg(e^{iθ}) ∈ [0, 2π) 与
# det U(k) 的连续辐角之差是 2π 的整数倍，由此得到区间 (k1, k2] 内的根数。

_MAX_POLISH = 200
_EPS = float(np.finfo(float).eps)


@lru_cache(maxsize=1024)
def _bond_layout(g: MetricGraph) -> Tuple[np.ndarray, float]:
    """键散射矩阵与键长之和: 键 2i 沿边 i 从 'a' 端到 'b' 端，键 2i+1 反向"""
    index = {e.id: i for i, e in enumerate(g.edges)}
    size = 2 * len(g.edges)
    scattering = np.zeros((size, size))
    for v in g.vertices:
        d = len(v.slots)
        for s_out in v.slots:
            out_bond = 2 * index[s_out[0]] + (0 if s_out[1] == 'a' else 1)
            for s_in in v.slots:
                in_bond = 2 * index[s_in[0]] + (0 if s_in[1] == 'b' else 1)
                reflect = 1.0 if s_in == s_out else 0.0
                if v.id in g.dirichlet:
                    scattering[out_bond, in_bond] = -reflect
                else:
                    scattering[out_bond, in_bond] = 2.0 / d - reflect
    return scattering, 2.0 * g.total_length


def _bond_lengths(g: MetricGraph) -> np.ndarray:
    return np.repeat([e.length for e in g.edges], 2)


def _phase_sums(g: MetricGraph, ks) -> np.ndarray:
    """U(k) 各本征相位（取值 [0, 2π)）之和"""
    scattering, _ = _bond_layout(g)
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    unitary = scattering[None, :, :] * np.exp(1j * np.outer(ks, _bond_lengths(g)))[:, None, :]
    phases = np.mod(np.angle(np.linalg.eigvals(unitary)), 2.0 * math.pi)
    return phases.sum(axis=1)


def _root_count(trace: float, k1: float, k2: float, f1: float, f2: float) -> int:
    """(k1, k2] 内的正特征值个数（计重数）"""
    raw = (trace * (k2 - k1) + f1 - f2) / (2.0 * math.pi)
    n = int(round(raw))
    if n < 0 or abs(raw - n) > 1e-6:
        raise SpectralError(f"相位计数不是非负整数: {raw:.9f} (k ∈ ({k1!r}, {k2!r}])")
    return n


def _branch(g: MetricGraph, k: float) -> Tuple[float, float]:
    """最小奇异值及其解析分支关于 k 的导数"""
    matrix = _secular_batch(g, [k])[0]
    slope_matrix = _secular_batch(g, [k], derivative=True)[0]
    u, s, vt = linalg.svd(matrix)
    return float(s[-1]), float(u[:, -1] @ slope_matrix @ vt[-1])


def _polish(g: MetricGraph, lo: float, hi: float, f_lo: float, settings: SolverSettings) -> Tuple[float, float]:
    """
    精化 (lo, hi] 内唯一的根

    以最小奇异值分支的 Newton 步为主；步长越出区间或收缩不足一半时改为按相位计数二分。

    Returns:
        (k, k 的误差界)
    """
    _, trace = _bond_layout(g)
    xtol = settings.root_xtol * max(1.0, hi)
    k = 0.5 * (lo + hi)
    last = hi - lo
    for _ in range(_MAX_POLISH):
        if hi - lo <= xtol:
            return 0.5 * (lo + hi), 0.5 * (hi - lo)
        sigma, slope = _branch(g, k)
        if slope != 0.0:
            target = k - sigma / slope
            move = abs(target - k)
            if lo < target <= hi and move < 0.5 * last:
                if move <= xtol:
                    return target, max(move, _EPS * target)
                k, last = target, move
                continue
        mid = 0.5 * (lo + hi)
        f_mid = float(_phase_sums(g, [mid])[0])
        if _root_count(trace, lo, mid, f_lo, f_mid) > 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
        k, last = 0.5 * (lo + hi), hi - lo
    return k, hi - lo


def _isolate(g: MetricGraph, cell: Tuple[float, float, int, float, float],
             settings: SolverSettings) -> List[Tuple[float, int, float]]:
    """把含 n 个根的区间按相位计数二分，直到每段只含一个根或窄于 root_xtol"""
    _, trace = _bond_layout(g)
    found = []
    stack = [cell]
    while stack:
        lo, hi, n, f_lo, f_hi = stack.pop()
        if n == 1 or hi - lo <= settings.root_xtol * max(1.0, hi):
            if n == 1:
                k, err = _polish(g, lo, hi, f_lo, settings)
            else:
                k, err = 0.5 * (lo + hi), 0.5 * (hi - lo)
            found.append((k, n, err))
            continue
        mid = 0.5 * (lo + hi)
        f_mid = float(_phase_sums(g, [mid])[0])
        left = min(_root_count(trace, lo, mid, f_lo, f_mid), n)
        if n - left:
            stack.append((mid, hi, n - left, f_mid, f_hi))
        if left:
            stack.append((lo, mid, left, f_lo, f_mid))
    return found


def _merge(roots: List[Tuple[float, int, float]], settings: SolverSettings) -> List[Tuple[float, int, float]]:
    merged: List[Tuple[float, int, float]] = []
    for k, mult, err in sorted(roots):
        if merged and k - merged[-1][0] <= settings.merge_tol * max(1.0, k):
            k0, m0, e0 = merged[-1]
            merged[-1] = (k0, m0 + mult, max(e0, err, k - k0))
        else:
            merged.append((k, mult, err))
    return merged


def _positive_roots(g: MetricGraph, need: int, settings: SolverSettings) -> List[Tuple[float, int, float]]:
    """前 need 个正根（计重数）: (k, 重数, k 的误差界)"""
    _, trace = _bond_layout(g)
    total = g.total_length
    step = math.pi / (settings.scan_divisor * total)
    k_cap = 2.0 * math.pi * (need + 2 * len(g.edges) + len(g.vertices) + 2) / total
    chunk = max(32, int(math.ceil(math.pi * (need + len(g.edges)) / total / step)) + 4)

    # 正特征值满足 k ≥ π/(2|G|)，从其一半处起扫
    k_lo = math.pi / (4.0 * total)
    f_lo = float(_phase_sums(g, [k_lo])[0])
    cells = []
    counted = 0
    while counted < need:
        if k_lo > k_cap:
            raise SpectralError(f"扫描窗口耗尽: 仅找到 {counted}/{need} 个正特征值 (k ≤ {k_cap:.6g})")
        ks = k_lo + step * np.arange(1, chunk + 1)
        for k, f in zip(ks, _phase_sums(g, ks)):
            k, f = float(k), float(f)
            n = _root_count(trace, k_lo, k, f_lo, f)
            if n:
                cells.append((k_lo, k, n, f_lo, f))
                counted += n
            k_lo, f_lo = k, f
            if counted >= need:
                break

    roots = []
    for cell in cells:
        roots.extend(_isolate(g, cell, settings))
    return _merge(roots, settings)


def _secular_values(g: MetricGraph, count: int, settings: SolverSettings) -> SpectralResult:
    zeros = _zero_multiplicity(g)
    clusters: List[Tuple[float, int, float]] = [(ZERO, zeros, ZERO)] if zeros else []
    if count > zeros:
        for k, mult, err in _positive_roots(g, count - zeros, settings):
            ratio = _sigma_ratio(g, k)
            if ratio >= settings.tol_root:
                raise SpectralError(f"相位计数给出的根不满足久期方程: k={k!r}, 最小奇异值比 {ratio:.3e}")
            clusters.append((k * k, mult, 2.0 * k * err + err * err))

    values, mults, errors = [], [], []
    for value, mult, err in clusters:
        values.extend([value] * mult)
        mults.extend([mult] * mult)
        errors.extend([err] * mult)
    return SpectralResult(tuple(values[:count]), tuple(mults[:count]), tuple(errors[:count]), 'secular')


def weyl_deviation(g: MetricGraph, result: SpectralResult) -> Tuple[float, float]:
    """
    计数函数与 Weyl 主项之差 N(λ) − |G|√λ/π 在各特征值处的 (最小值, 最大值)

    N(λ) 为不超过 λ 的特征值个数（计重数），在每个特征值处取左右极限；
    最后一个特征值的重数可能被 count 截断，按完整重数计。
    """
    total = g.total_length
    deviations = []
    counted = 0
    for value, mult in result.distinct():
        weyl = total * math.sqrt(max(value, ZERO)) / math.pi
        deviations.append(counted - weyl)
        counted += mult
        deviations.append(counted - weyl)
    return min(deviations), max(deviations)


def weyl_check(g: MetricGraph, result: SpectralResult, slack: Optional[float] = None) -> bool:
    """计数函数偏离 Weyl 主项不超过 slack（默认 顶点数 + 1）"""
    slack = len(g.vertices) + 1.0 if slack is None else slack
    low, high = weyl_deviation(g, result)
    return -slack - 1e-9 <= low and high <= slack + 1e-9


def _weyl_consistent(g: MetricGraph, result: SpectralResult) -> bool:
    # 与各边解耦的 Dirichlet 问题比较: −|E| ≤ N(λ) − |G|√λ/π ≤ 自然顶点数
    low, high = weyl_deviation(g, result)
    natural = sum(1 for v in g.vertices if v.id not in g.dirichlet)
    return low >= -len(g.edges) - 1e-9 and high <= natural + 1e-9


# ---------------------------------------------------------------- 有限元

def _fem_values(g: MetricGraph, count: int, elements: Dict[str, int]) -> np.ndarray:
    """一维分片线性有限元的广义特征值 K u = λ M u"""
    dof: Dict[str, int] = {}
    for v in g.vertices:
        if v.id not in g.dirichlet:
            dof[v.id] = len(dof)
    size = len(dof) + sum(n - 1 for n in elements.values())

    stiffness = np.zeros((size, size))
    mass = np.zeros((size, size))
    cursor = len(dof)
    for e in g.edges:
        n = elements[e.id]
        h = e.length / n
        a, b = g.ends(e.id)
        nodes = [dof.get(a)] + list(range(cursor, cursor + n - 1)) + [dof.get(b)]
        cursor += n - 1
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
        me = np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6.0
        for j in range(n):
            local = (nodes[j], nodes[j + 1])
            for p in range(2):
                if local[p] is None:
                    continue
                for q in range(2):
                    if local[q] is None:
                        continue
                    stiffness[local[p], local[q]] += ke[p, q]
                    mass[local[p], local[q]] += me[p, q]

    if size < count:
        raise SpectralError(f"有限元自由度不足: {size} < {count}")
    values = linalg.eigh(stiffness, mass, eigvals_only=True, subset_by_index=[0, count - 1])
    return np.clip(values, 0.0, None)


def _fem_extrapolated(g: MetricGraph, count: int, settings: SolverSettings) -> SpectralResult:
    h = g.total_length / settings.mesh_divisor
    coarse = {e.id: max(settings.min_nodes, int(math.ceil(e.length / h))) for e in g.edges}
    fine = {e: 2 * n for e, n in coarse.items()}
    lam_h = _fem_values(g, count, coarse)
    lam_h2 = _fem_values(g, count, fine)
    values = (4.0 * lam_h2 - lam_h) / 3.0
    errors = np.abs(lam_h2 - lam_h) / 3.0
    return SpectralResult(tuple(float(v) for v in values), (1,) * count,
                          tuple(float(e) for e in errors), 'fem-extrapolated')


# ---------------------------------------------------------------- 入口

def _spectral_key(g: MetricGraph) -> MetricGraph:
    """谱不依赖标签与哑顶点，求解前先化为规范形"""
    return canonicalize(replace(g, labels=())).graph


@lru_cache(maxsize=4096)
def _solve(g: MetricGraph, count: int, method: str, settings: SolverSettings) -> SpectralResult:
    if method == 'fem':
        return _fem_extrapolated(g, count, settings)
    if method == 'secular':
        closed = _single_edge_values(g, count)
        if closed is not None:
            return closed
        result = _secular_values(g, count, settings)
        if not _weyl_consistent(g, result):
            # 计数越出 Weyl 夹逼区间时以加倍的网格密度重扫一次
            finer = replace(settings, scan_divisor=2 * settings.scan_divisor)
            result = _secular_values(g, count, finer)
            if not _weyl_consistent(g, result):
                low, high = weyl_deviation(g, result)
                raise SpectralError(f"特征值计数偏离 Weyl 主项: [{low:.3f}, {high:.3f}]")
        return result
    if method == 'cross-check':
        return _cross_check(g, count, settings)
    raise SpectralError(f"未知的求解方法: {method}")


def _agree(exact: SpectralResult, approx: SpectralResult, settings: SolverSettings) -> bool:
    for s, f, es, ef in zip(exact.values, approx.values, exact.errors, approx.errors):
        if abs(s - f) > es + ef + settings.cross_rtol * max(1.0, s):
            return False
    return True


def _cross_check(g: MetricGraph, count: int, settings: SolverSettings) -> SpectralResult:
    exact = _solve(g, count, 'secular', settings)
    approx = _fem_extrapolated(g, count, settings)
    if not _agree(exact, approx, settings):
        # 网格加密一倍、扫描步长减半后重试一次
        finer = replace(settings, scan_divisor=2 * settings.scan_divisor,
                        mesh_divisor=2 * settings.mesh_divisor)
        exact = _solve(g, count, 'secular', finer)
        approx = _fem_extrapolated(g, count, finer)
        if not _agree(exact, approx, finer):
            pairs = ", ".join(f"{s:.10g}/{f:.10g}" for s, f in zip(exact.values, approx.values))
            raise SpectralError(f"久期解与有限元解不一致: {pairs}")
    errors = tuple(max(es, abs(s - f)) for s, f, es in zip(exact.values, approx.values, exact.errors))
    return SpectralResult(exact.values, exact.multiplicities, errors, 'cross-check')


def eigenvalues(g: MetricGraph, count: int, method: str = 'secular',
                settings: Optional[SolverSettings] = None) -> SpectralResult:
    """
    拉普拉斯算子前 count 个特征值（𝒱_D 上 Dirichlet，其余顶点自然条件）

    Args:
        g: 度量图（可不连通）
        count: 特征值个数
        method: 'secular' | 'fem' | 'cross-check'
        settings: 求解器参数

    Returns:
        SpectralResult: 非降序特征值，重根按重数重复
    """
    if not g.edges:
        raise SpectralError("空图没有谱")
    if count < 1:
        raise SpectralError(f"特征值个数必须 ≥ 1: {count}")
    return _solve(_spectral_key(g), int(count), method, settings or DEFAULT_SETTINGS)


def cache_info():
    return _solve.cache_info()


def clear_cache():
    _solve.cache_clear()
    _layout.cache_clear()
    _bond_layout.cache_clear()


def set_cache_size(size: int) -> None:
    """重设谱结果缓存容量（同时清空缓存）"""
    global _solve
    if size < 1:
        raise SpectralError(f"缓存容量必须 ≥ 1: {size}")
    _solve = lru_cache(maxsize=int(size))(_solve.__wrapped__)


def mu2(g: MetricGraph, settings: Optional[SolverSettings] = None) -> float:
    """连通图的谱隙 μ₂（忽略 Dirichlet 标记）"""
    natural = replace(g, dirichlet=frozenset())
    if not natural.is_connected():
        raise SpectralError("mu2 要求连通图")
    return eigenvalues(natural, 2, settings=settings)[1]


def lambda1(g: MetricGraph, settings: Optional[SolverSettings] = None) -> float:
    """首个 Dirichlet 特征值 λ₁(G; 𝒱_D)"""
    if not g.dirichlet:
        raise SpectralError("lambda1 要求至少一个 Dirichlet 顶点")
    return eigenvalues(g, 1, settings=settings)[0]


def nicaise_bounds(g: MetricGraph) -> Tuple[float, float]:
    """Nicaise 下界: (λ₁ 的下界 π²/4|G|², μ₂ 的下界 π²/|G|²)"""
    total = g.total_length
    return math.pi ** 2 / (4.0 * total ** 2), math.pi ** 2 / total ** 2


def degeneration_limit(g: MetricGraph, edge_ids: Sequence[str], count: int,
                       lengths: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4),
                       settings: Optional[SolverSettings] = None) -> Dict:
    """
    指定边的长度趋于零时前 count 个特征值的收敛

    依次把 edge_ids 的长度设为 lengths 中的值求谱，用最后两个长度做线性外推，
    并与收缩这些边后的极限图的谱比较。

    Returns:
        {'lengths', 'values', 'extrapolated', 'limit', 'errors'}，errors[i] 为第 i 个长度下与极限谱的最大偏差
    """
    if len(lengths) < 2:
        raise SpectralError("至少需要两个边长才能外推")
    limit_graph, _ = collapse_zero_edges(g, edge_ids)
    limit = np.array(eigenvalues(limit_graph, count, settings=settings).values)
    sequence = [np.array(eigenvalues(g.with_lengths({e: t for e in edge_ids}), count, settings=settings).values)
                for t in lengths]
    t1, t2 = lengths[-2], lengths[-1]
    # 特征值关于边长一阶可微，误差 O(t)
    extrapolated = (t1 * sequence[-1] - t2 * sequence[-2]) / (t1 - t2)
    return {
        'lengths': list(lengths),
        'values': [values.tolist() for values in sequence],
        'extrapolated': extrapolated.tolist(),
        'limit': limit.tolist(),
        'errors': [float(np.max(np.abs(values - limit))) for values in sequence],
    }


# ---------------------------------------------------------------- 本征函数

def _edge_integrals(k: float, l: float) -> Tuple[float, float, float]:
    """[0,l] 上 ∫cos², ∫sin², ∫sin·cos"""
    if k == ZERO:
        return l, l ** 3 / 3.0, l ** 2 / 2.0
    s2 = math.sin(2 * k * l)
    return l / 2 + s2 / (4 * k), l / 2 - s2 / (4 * k), math.sin(k * l) ** 2 / (2 * k)


def inner_product(g: MetricGraph, u: EdgeWave, w: EdgeWave) -> float:
    """同一波数的两个本征函数的 L² 内积（逐边精确积分）"""
    if abs(u.k - w.k) > 1e-12 * max(1.0, u.k):
        raise SpectralError("只能计算同一特征值的本征函数内积")
    total = 0.0
    for e in g.edges:
        a1, b1 = u.coeff(e.id)
        a2, b2 = w.coeff(e.id)
        icc, iss, ics = _edge_integrals(u.k, e.length)
        total += a1 * a2 * icc + b1 * b2 * iss + (a1 * b2 + b1 * a2) * ics
    return total


def _sign_fixed(vector: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(vector))
    for x in vector:
        if abs(x) > 1e-8 * scale:
            return vector if x > 0 else -vector
    return vector


def eigenfunction(g: MetricGraph, eigenvalue: float,
                  settings: Optional[SolverSettings] = None) -> List[EdgeWave]:
    """
    特征值对应的 L² 正交归一本征函数基

    Args:
        g: 度量图
        eigenvalue: 已求得的特征值

    Returns:
        List[EdgeWave]: 维数等于重数
    """
    settings = settings or DEFAULT_SETTINGS
    edge_ids = g.edge_ids
    if eigenvalue < settings.tol_root:
        waves = []
        for comp, edges in components(g):
            if comp.dirichlet:
                continue
            height = 1.0 / math.sqrt(comp.total_length)
            waves.append(EdgeWave(ZERO, tuple((e, height if e in edges else 0.0, 0.0) for e in edge_ids)))
        if not waves:
            raise SpectralError(f"不是特征值: {eigenvalue}")
        return waves

    k = math.sqrt(eigenvalue)
    _, s, vt = linalg.svd(assemble_secular(g, k))
    basis = vt[s < settings.tol_mult * _scale(s)]
    if basis.shape[0] == 0:
        raise SpectralError(f"不是特征值: {eigenvalue} (最小奇异值比 {s[-1] / _scale(s):.3e})")

    def wave(vector):
        return EdgeWave(k, tuple((e, float(vector[2 * i]), float(vector[2 * i + 1]))
                                 for i, e in enumerate(edge_ids)))

    raw = [wave(v) for v in basis]
    gram = np.array([[inner_product(g, u, w) for w in raw] for u in raw])
    w_vals, w_vecs = linalg.eigh(gram)
    if np.any(w_vals <= 0):
        raise SpectralError("本征函数 Gram 矩阵奇异")
    coeffs = (basis.T @ w_vecs) / np.sqrt(w_vals)
    return [wave(_sign_fixed(coeffs[:, j])) for j in range(coeffs.shape[1])]


def vertex_residual(g: MetricGraph, w: EdgeWave) -> float:
    """顶点条件（连续性、Kirchhoff、Dirichlet）的最大相对违背量"""
    scale = max(1e-300, max(w.amplitude(e) for e in g.edge_ids))
    dscale = scale * max(1.0, w.k)
    worst = 0.0
    for v in g.vertices:
        values = []
        inward = 0.0
        for edge_id, end in v.slots:
            x = 0.0 if end == 'a' else g.length(edge_id)
            values.append(float(w.value(edge_id, x)))
            d = float(w.derivative(edge_id, x))
            inward += d if end == 'a' else -d
        if v.id in g.dirichlet:
            worst = max(worst, max(abs(x) for x in values) / scale)
        else:
            worst = max(worst, (max(values) - min(values)) / scale, abs(inward) / dscale)
    return worst


# ---------------------------------------------------------------- 解析辅助

def solve_fork(a: float) -> float:
    """
    3-星在一条边上距中心 a 处切开后，含中心的簇的基态波数

    求 (0, π/2) 内 2tan(aω) = cot(ω) 的最小正根（二分法）。
    """
    if not 0.0 < a <= 1.0:
        raise SpectralError(f"参数 a 必须位于 (0, 1]: {a}")
    lo = 1e-12
    hi = math.pi / 2 - min(1e-12, a)

    def secular(w):
        return 2.0 * math.tan(a * w) - 1.0 / math.tan(w)

    return float(optimize.bisect(secular, lo, hi, xtol=1e-15, maxiter=200))


def power_mean(values: Sequence[float], p: float) -> float:
    values = [float(v) for v in values]
    if math.isinf(p):
        return max(values)
    if not p > 0:
        raise SpectralError(f"指数 p 必须为正或 inf: {p}")
    return (math.fsum(v ** p for v in values) / len(values)) ** (1.0 / p)


def star_cut_energy(a: float, p: float) -> float:
    """等边 3-星在距中心 a 处切一刀的 Dirichlet 2-划分能量 F(a, p)"""
    outer = math.pi ** 2 / (4.0 * (1.0 - a) ** 2)
    inner = solve_fork(a) ** 2
    return power_mean([outer, inner], p)


def von_below_equilateral(g: MetricGraph, count: int) -> SpectralResult:
    """
    等边图的谱（由离散转移矩阵的特征值给出）

    Args:
        g: 所有边长相等、无 Dirichlet 顶点的连通图
        count: 特征值个数

    Returns:
        SpectralResult: method 为 'von-below'
    """
    if g.dirichlet:
        raise SpectralError("等边谱公式只适用于自然顶点条件")
    if not g.is_equilateral():
        raise SpectralError("图不是等边图")
    if not g.is_connected():
        raise SpectralError("等边谱公式要求连通图")

    l = g.edges[0].length
    n_v, n_e = len(g.vertices), len(g.edges)
    order = {v: i for i, v in enumerate(g.vertex_ids)}
    adjacency = np.zeros((n_v, n_v))
    for e in g.edges:
        a, b = g.ends(e.id)
        adjacency[order[a], order[b]] += 1.0
        adjacency[order[b], order[a]] += 1.0
    degrees = np.array([g.degree(v) for v in g.vertex_ids], dtype=float)
    scaled = adjacency / np.sqrt(np.outer(degrees, degrees))
    transition = np.clip(linalg.eigvalsh(scaled), -1.0, 1.0)

    generic = [float(m) for m in transition if abs(abs(m) - 1.0) > 1e-10]
    bipartite = nx.is_bipartite(nx.Graph(g.to_networkx()))
    even_mult = n_e - n_v + 2
    odd_mult = n_e - n_v + 2 if bipartite else n_e - n_v

    found: List[Tuple[float, int]] = [(ZERO, 1)]
    window = 0
    while sum(m for _, m in found) < count:
        batch: List[Tuple[float, int]] = []
        base = 2.0 * math.pi * window
        for m in generic:
            theta = math.acos(m)
            batch.append(((base + theta) / l, 1))
            batch.append(((base + 2.0 * math.pi - theta) / l, 1))
        if window > 0:
            batch.append((base / l, even_mult))
        if odd_mult > 0:
            batch.append(((base + math.pi) / l, odd_mult))
        batch.sort()
        # 合并同一 k 的重复项
        for k, mult in batch:
            value = k * k
            if found and abs(found[-1][0] - value) <= 1e-10 * max(1.0, value):
                found[-1] = (found[-1][0], found[-1][1] + mult)
            else:
                found.append((value, mult))
        window += 1

    values, mults = [], []
    for value, mult in found:
        values.extend([value] * mult)
        mults.extend([mult] * mult)
    return SpectralResult(tuple(values[:count]), tuple(mults[:count]), (ZERO,) * count, 'von-below')
