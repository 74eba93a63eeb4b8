"""
文件管理模块 - 图文件与结果 JSON / CSV
"""
import csv
import json
import os
from typing import Dict, List, Optional, Sequence

from .config import Config
from .logger import Logger
from ..core.graph_core import GraphError, MetricGraph, build_graph, graph_to_dict


class FileManager:
    def __init__(self, config: Config, logger: Optional[Logger] = None):
        self.config = config
        self.logger = logger or Logger("file_manager")
        self.output_dir = config.get('basic', 'output_dir', './results')
        self.graph_dir = config.get('basic', 'graph_dir', './config/graphs')

        self._ensure_directories()

    def _ensure_directories(self) -> None:
        """确保输出目录存在"""
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)
            self.logger.info(f"创建目录: {self.output_dir}")

    def resolve_graph(self, name_or_path: str) -> str:
        """图文件路径: 先按路径查找，再在图目录中按名字查找"""
        if os.path.exists(name_or_path):
            return name_or_path
        candidate = os.path.join(self.graph_dir, name_or_path)
        if not candidate.endswith('.json'):
            candidate += '.json'
        if os.path.exists(candidate):
            return candidate
        raise FileNotFoundError(f"图文件不存在: {name_or_path}")

    def load_graph(self, name_or_path: str) -> MetricGraph:
        """读取图文件；格式错误时抛出 GraphError"""
        path = self.resolve_graph(name_or_path)
        try:
            data = self.load_json(path)
        except json.JSONDecodeError as e:
            raise GraphError(f"图文件不是合法的 JSON: {path}: {e}")
        graph = build_graph(data)
        self.logger.debug(f"读取图 {path}: {len(graph.edges)} 条边, |G|={graph.total_length!r}")
        return graph

    def save_graph(self, graph: MetricGraph, file_path: str) -> str:
        return self.save_json(file_path, graph_to_dict(graph))

    def save_json(self, file_path: str, data: Dict) -> str:
        """保存JSON文件（浮点数以最短精确表示写出）"""
        dir_path = os.path.dirname(file_path)
        if dir_path and not os.path.exists(dir_path):
            os.makedirs(dir_path)

        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=2)

        self.logger.file_created(file_path)
        return file_path

    def load_json(self, file_path: str) -> Dict:
        """加载JSON文件"""
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"文件不存在: {file_path}")

        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def save_csv(self, file_path: str, rows: List[Dict], header: Sequence[str],
                 comments: Sequence[str] = ()) -> str:
        """
        保存CSV文件

        Args:
            file_path: 输出路径
            rows: 每行一个字典
            header: 列名（决定列顺序）
            comments: 写在表头之前、以 # 开头的说明行
        """
        dir_path = os.path.dirname(file_path)
        if dir_path and not os.path.exists(dir_path):
            os.makedirs(dir_path)

        with open(file_path, 'w', encoding='utf-8', newline='') as f:
            for line in comments:
                f.write(f"# {line}\n")
            writer = csv.DictWriter(f, fieldnames=list(header), extrasaction='ignore')
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _csv_value(row.get(k)) for k in header})

        self.logger.file_created(file_path)
        return file_path

    def load_csv(self, file_path: str) -> List[Dict[str, str]]:
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"文件不存在: {file_path}")
        with open(file_path, 'r', encoding='utf-8', newline='') as f:
            lines = [line for line in f if not line.startswith('#')]
        return list(csv.DictReader(lines))


def _csv_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_csv_value(v) for v in value)
    if value is None:
        return ''
    return value
