"""
主处理器 - 协调谱计算、划分搜索、参数扫描、节点分析与验收夹具
"""
import json
import math
from typing import Dict, List, Optional, Sequence

from src.utils.config import Config
from src.utils.logger import Logger
from src.utils.file_manager import FileManager
from src.core.graph_core import GraphError
from src.core.spectral import SolverSettings, SpectralError, cache_info, eigenvalues, eigenfunction, set_cache_size
from src.core.partition_model import CLASSES, PROBLEMS, PartitionError, classify, format_p, parse_p
from src.core.search import SearchError, SearchOptions, maximize, minimize, sweep_k, sweep_length, sweep_p
from src.core.nodal import NodalError, NodalSettings, courant_check, generalised_nodal_check, nodal_partition
from src.core.fixtures import FixtureSuite

# 退出码
EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_IO = 2
EXIT_INVALID = 3

SWEEP_COLUMNS = {
    'p': ['p', 'value', 'template', 'positions', 'boundary', 'ties'],
    'length': ['length', 'value', 'template', 'positions', 'boundary', 'ties', 'switch', 'tie'],
    'k': ['k', 'value', 'template', 'positions', 'boundary', 'ties'],
}


def _failure(error: str, code: int) -> Dict:
    return {'success': False, 'error': error, 'code': code}


class PartitionProcessor:
    def __init__(self, config_path: str = "config/config.ini",
                 overrides: Optional[Dict[str, Dict[str, object]]] = None,
                 console: bool = True):
        """
        Args:
            config_path: 配置文件路径
            overrides: {节: {键: 值}}，命令行参数覆盖配置文件
            console: 是否在终端输出
        """
        self.config = Config(config_path)
        for section, items in (overrides or {}).items():
            for key, value in items.items():
                if value is not None:
                    self.config.set(section, key, value)
        self.logger = Logger("processor", self.config.get('basic', 'log_dir', 'logs'), console=console)
        self.file_manager = FileManager(self.config, self.logger)

        self.settings = SolverSettings.from_config(self.config)
        self.options = SearchOptions.from_config(self.config)
        self.nodal_settings = NodalSettings.from_config(self.config)
        set_cache_size(self.config.get_int('spectral', 'cache_size', 4096))

    def execute(self, command: str, **kwargs) -> Dict:
        """
        执行命令

        Args:
            command: eig | minimize | maximize | sweep | nodal | verify

        Returns:
            Dict: success、code（退出码）与命令结果
        """
        handlers = {
            'eig': self.compute_spectrum,
            'minimize': self.solve_partition,
            'maximize': self.solve_partition,
            'sweep': self.run_sweep,
            'nodal': self.analyse_nodal,
            'verify': self.verify,
        }
        handler = handlers.get(command)
        if not handler:
            return _failure(f'无效的命令: {command}', EXIT_INVALID)

        if not self.config.validate_config():
            self.logger.error("配置无效: 缺少配置节或容差不为正")
            return _failure('配置无效', EXIT_INVALID)

        if command in ('minimize', 'maximize'):
            kwargs['direction'] = 'min' if command == 'minimize' else 'maxmin'

        try:
            result = handler(**kwargs)
        except (FileNotFoundError, GraphError, json.JSONDecodeError, OSError) as e:
            self.logger.error(f"读写失败: {e}")
            return _failure(str(e), EXIT_IO)
        except (SearchError, PartitionError, SpectralError, NodalError, ValueError) as e:
            self.logger.error(f"参数无效或问题不可行: {e}")
            return _failure(str(e), EXIT_INVALID)

        info = cache_info()
        self.logger.debug(f"谱缓存: 命中 {info.hits}, 未命中 {info.misses}, 条目 {info.currsize}")
        return result

    # ------------------------------------------------------------ 命令

    def compute_spectrum(self, graph: str, count: int = 6, method: str = 'secular',
                         out: Optional[str] = None, fmt: str = 'json') -> Dict:
        """前 count 个特征值；cross-check 时同时给出有限元结果"""
        g = self.file_manager.load_graph(graph)
        result = eigenvalues(g, count, method=method, settings=self.settings)
        headers = ['j', 'mu_j', 'multiplicity', 'error']
        rows = [[j + 1, v, m, err] for j, (v, m, err)
                in enumerate(zip(result.values, result.multiplicities, result.errors))]
        if method == 'cross-check':
            fem = eigenvalues(g, count, method='fem', settings=self.settings)
            headers.append('fem')
            for row, v in zip(rows, fem.values):
                row.append(v)
        self.logger.table(headers, rows, title=f"{graph}: 前 {count} 个特征值 ({result.method})")

        data = {'graph': graph, 'count': count, **result.to_dict()}
        if out:
            self._save(out, fmt, data, [dict(zip(headers, row)) for row in rows], headers,
                       [f"graph={graph}", f"method={result.method}"])
        return {'success': True, 'code': EXIT_OK, 'result': data}

    def solve_partition(self, graph: str, k: int, problem: str = 'dirichlet', p='inf',
                        class_filter: str = 'rigid', direction: str = 'min',
                        out: Optional[str] = None, fmt: str = 'json') -> Dict:
        """最小划分或最大最小划分"""
        self._check_objective(problem, class_filter)
        g = self.file_manager.load_graph(graph)
        if direction == 'min':
            result = minimize(g, k, problem, parse_p(p), class_filter, self.options, self.settings, self.logger)
        else:
            result = maximize(g, k, problem, self.options, self.settings, self.logger)

        flags = classify(result.partition)
        self.logger.success(f"{'最小' if direction == 'min' else '最大最小'}能量: {result.value!r}")
        self.logger.info(f"  模板: {result.template.descriptor}")
        for edge_id, offsets in sorted(result.positions.items()):
            self.logger.info(f"  边 {edge_id} 切点: {', '.join(repr(x) for x in offsets)}")
        self.logger.info(f"  类别: {', '.join(name for name in CLASSES if flags[name]) or '-'}")
        if len(result.ties) > 1:
            self.logger.warning(f"{len(result.ties)} 个模板并列最优")

        data = result.to_dict(graph)
        if out:
            rows = [{'k': k, 'value': result.value, 'template': result.template.descriptor,
                     'positions': [x for e in sorted(result.positions) for x in result.positions[e]],
                     'boundary': result.boundary, 'ties': len(result.ties)}]
            self._save(out, fmt, data, rows, ['k', 'value', 'template', 'positions', 'boundary', 'ties'],
                       self._objective_comments(graph, problem, p, class_filter, direction))
        return {'success': True, 'code': EXIT_OK, 'result': data}

    def run_sweep(self, graph: str, kind: str, k: int = 2, problem: str = 'dirichlet', p='inf',
                  class_filter: str = 'rigid', grid: Sequence = (), edge: Optional[str] = None,
                  out: Optional[str] = None, fmt: str = 'csv') -> Dict:
        """
        参数扫描

        Args:
            kind: 'p' 对指数扫描；'length' 对 edge 的长度扫描；'k' 对 k = 1…k 扫描
            grid: 网格点（kind='k' 时忽略）
        """
        self._check_objective(problem, class_filter)
        if kind not in SWEEP_COLUMNS:
            raise ValueError(f"未知的扫描类型: {kind}")
        g = self.file_manager.load_graph(graph)
        if kind == 'p':
            table = sweep_p(g, k, problem, list(grid), class_filter, self.options, self.settings, self.logger)
        elif kind == 'length':
            if not edge:
                raise ValueError("长度扫描需要指定 --edge")
            table = sweep_length(g, edge, [float(x) for x in grid], k, problem, parse_p(p), class_filter,
                                 self.options, self.settings, self.logger)
        else:
            table = sweep_k(g, k, problem, parse_p(p), class_filter, self.options, self.settings, self.logger)

        header = SWEEP_COLUMNS[kind]
        self.logger.table(header, [[row[c] for c in header] for row in table['rows']],
                          title=f"{graph}: {kind} 扫描")
        for key, value in table['diagnostics'].items():
            self.logger.info(f"  {key}: {value}")

        data = {'graph': graph, 'kind': kind, 'edge': edge, **table}
        if out:
            comments = self._objective_comments(graph, problem, p, class_filter, 'min')
            comments.append("columns: " + ", ".join(header))
            self._save(out, fmt, data, table['rows'], header, comments)
        return {'success': True, 'code': EXIT_OK, 'result': data}

    def analyse_nodal(self, graph: str, index: int = 2, out: Optional[str] = None, fmt: str = 'json') -> Dict:
        """第 index 个特征值的本征函数基: 零点、节点划分、Courant 界与节点判定"""
        g = self.file_manager.load_graph(graph)
        value = eigenvalues(g, index, settings=self.settings)[index - 1]
        reports = []
        for w in eigenfunction(g, value, self.settings):
            nodal = nodal_partition(g, w, self.nodal_settings)
            report = nodal.to_dict()
            report['verdict'] = generalised_nodal_check(nodal.partition, self.settings, self.nodal_settings)['verdict']
            reports.append(report)
        courant = courant_check(g, index, self.settings, self.nodal_settings)
        self.logger.verdict(f"Courant μ_{index}", courant['passed'],
                            f"ν = {courant['counts']}, κ = {courant['kappa']}")

        data = {'graph': graph, 'index': index, 'eigenvalue': value, 'courant': courant,
                'eigenfunctions': reports}
        if out:
            rows = [{'eigenvalue': r['eigenvalue'], 'nodal_count': r['nodal_count'],
                     'descriptor': r['descriptor'], 'verdict': r['verdict']} for r in reports]
            self._save(out, fmt, data, rows, ['eigenvalue', 'nodal_count', 'descriptor', 'verdict'],
                       [f"graph={graph}", f"index={index}"])
        return {'success': True, 'code': EXIT_OK, 'result': data}

    def verify(self, fixtures: Optional[List[str]] = None, out: Optional[str] = None, fmt: str = 'json') -> Dict:
        """运行验收夹具；全部通过时退出码为 0"""
        suite = FixtureSuite(self.file_manager.load_graph, self.settings, self.options,
                             self.nodal_settings, self.logger, seed=self.options.seed)
        outcome = suite.run(fixtures)
        if outcome.get('error'):
            self.logger.error(outcome['error'])
            return _failure(outcome['error'], EXIT_INVALID)

        passed = sum(r['passed'] for r in outcome['results'])
        total = len(outcome['results'])
        if outcome['success']:
            self.logger.success(f"全部 {total} 个夹具通过")
        else:
            self.logger.error(f"{total - passed}/{total} 个夹具未通过")
        if out:
            self._save(out, fmt, outcome, outcome['results'], ['fixture', 'passed', 'detail', 'error'], [])
        return {'success': outcome['success'], 'code': EXIT_OK if outcome['success'] else EXIT_VERIFY,
                'result': outcome}

    # ------------------------------------------------------------ 辅助

    def _check_objective(self, problem: str, class_filter: str) -> None:
        if problem not in PROBLEMS:
            raise ValueError(f"未知的问题类型: {problem}")
        if class_filter not in CLASSES:
            raise ValueError(f"未知的划分类别: {class_filter}")

    def _objective_comments(self, graph: str, problem: str, p, class_filter: str, direction: str) -> List[str]:
        return [f"graph={graph}", f"problem={problem}", f"p={format_p(parse_p(p))}",
                f"class={class_filter}", f"direction={direction}", f"seed={self.options.seed}"]

    def _save(self, out: str, fmt: str, data: Dict, rows: List[Dict], header: Sequence[str],
              comments: Sequence[str]) -> str:
        if fmt == 'csv':
            return self.file_manager.save_csv(out, rows, header, comments)
        if fmt != 'json':
            raise ValueError(f"未知的输出格式: {fmt}")
        return self.file_manager.save_json(out, _finite(data))


def _finite(data):
    """JSON 中的 inf / nan 写成字符串"""
    if isinstance(data, float) and not math.isfinite(data):
        return 'inf' if data > 0 else ('-inf' if data < 0 else 'nan')
    if isinstance(data, dict):
        return {k: _finite(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_finite(v) for v in data]
    return data
