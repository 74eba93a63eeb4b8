"""端到端测试: 命令行 -> 处理器 -> 结果文件与退出码"""
import json
import math
import os
import sys
sys.path.insert(0, '.')

import pytest

from run import main
from src.core.graph_core import build_graph
from src.core.processor import EXIT_INVALID, EXIT_IO, EXIT_OK, PartitionProcessor
from src.utils import Config, FileManager, Logger

ROOT = os.path.dirname(os.path.abspath(__file__))
CONFIG = os.path.join(ROOT, 'config', 'config.ini')
PI2 = math.pi ** 2

INTERVAL = {
    'edges': [{'id': 'e1', 'length': 1.0}],
    'vertices': [{'id': 'u', 'slots': [['e1', 'a']]}, {'id': 'w', 'slots': [['e1', 'b']]}],
}


@pytest.fixture(autouse=True)
def in_project_root(monkeypatch):
    monkeypatch.chdir(ROOT)


@pytest.fixture
def file_manager():
    config = Config(CONFIG)
    return FileManager(config, Logger('test', config.get('basic', 'log_dir', 'logs'), console=False))


@pytest.fixture
def interval_file(tmp_path, file_manager):
    return file_manager.save_graph(build_graph(INTERVAL), str(tmp_path / 'interval.json'))


def test_eig_builtin_graph(tmp_path):
    out = tmp_path / 'eig.json'
    assert main(['eig', '--graph', 'pumpkin3', '--count', '4', '--out', str(out), '--config', CONFIG]) == EXIT_OK
    data = json.loads(out.read_text(encoding='utf-8'))
    assert data['values'][1:] == pytest.approx([PI2] * 3, rel=1e-9)


def test_missing_graph_is_io_error():
    assert main(['eig', '--graph', 'no_such_graph', '--config', CONFIG]) == EXIT_IO


def test_missing_config_is_io_error():
    assert main(['eig', '--graph', 'pumpkin3', '--config', 'no/such/config.ini']) == EXIT_IO


def test_maximize_from_file(interval_file, tmp_path):
    out = tmp_path / 'max.json'
    code = main(['maximize', '--graph', interval_file, '--k', '2', '--problem', 'dirichlet',
                 '--out', str(out), '--config', CONFIG])
    assert code == EXIT_OK
    data = json.loads(out.read_text(encoding='utf-8'))
    assert data['value'] == pytest.approx(PI2, rel=1e-6)
    assert data['objective']['direction'] == 'maxmin'
    assert 'wall_time' not in data


def test_sweep_writes_csv(interval_file, tmp_path, file_manager):
    out = tmp_path / 'sweep.csv'
    code = main(['sweep', '--graph', interval_file, '--kind', 'p', '--grid', '1,inf', '--k', '2',
                 '--problem', 'natural', '--out', str(out), '--config', CONFIG])
    assert code == EXIT_OK
    assert out.read_text(encoding='utf-8').startswith('# graph=')
    rows = file_manager.load_csv(str(out))
    assert [row['p'] for row in rows] == ['1.0', 'inf']
    assert float(rows[0]['value']) == pytest.approx(4 * PI2, rel=1e-6)
    assert rows[1]['boundary'] == 'False'


def test_empty_sweep_grid_is_invalid(interval_file):
    assert main(['sweep', '--graph', interval_file, '--kind', 'p', '--grid', '', '--config', CONFIG]) == EXIT_INVALID


def test_infeasible_partition_is_invalid(interval_file):
    assert main(['minimize', '--graph', interval_file, '--k', '1', '--config', CONFIG]) == EXIT_INVALID


def test_verify_single_fixture():
    assert main(['verify', '--fixture', 'exact-spectra', '--config', CONFIG]) == EXIT_OK
    assert main(['verify', '--fixture', 'no-such-fixture', '--config', CONFIG]) == EXIT_INVALID


def test_invalid_overrides():
    assert main(['eig', '--graph', 'pumpkin3', '--set', 'spectral.tol_root=-1', '--config', CONFIG]) == EXIT_INVALID
    assert main(['eig', '--graph', 'pumpkin3', '--set', 'tol_root', '--config', CONFIG]) == EXIT_INVALID


def test_processor_nodal():
    processor = PartitionProcessor(CONFIG, console=False)
    result = processor.execute('nodal', graph='star3', index=2)
    assert result['success']
    assert result['result']['courant']['passed']
    assert processor.execute('unknown')['code'] == EXIT_INVALID


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
