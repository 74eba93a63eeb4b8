#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
度量图谱划分 - 命令行入口

用法:
    python run.py eig --graph pumpkin_H --count 5               # 前 N 个特征值
    python run.py minimize --graph pumpkin6 --k 2 --problem natural --p inf
    python run.py maximize --graph star3 --k 2 --problem dirichlet
    python run.py sweep --graph star3 --kind p --grid 1,1.5,2,4,8,16,inf --k 2
    python run.py sweep --graph lasso --kind length --edge e1 --grid 2,2.25,2.5,2.75,3,3.25,3.5 --k 2 --problem natural
    python run.py nodal --graph pumpkin3 --index 4              # 节点划分与 Courant 界
    python run.py verify [--fixture pumpkin-H]                  # 验收夹具

退出码: 0 成功, 1 验证未通过, 2 读写错误, 3 参数无效或问题不可行
"""
import sys
import os
import argparse

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.core.processor import EXIT_INVALID, EXIT_IO, PartitionProcessor


def _overrides(args) -> dict:
    """命令行参数 → 配置覆盖 {节: {键: 值}}"""
    overrides = {
        'basic': {'seed': args.seed, 'threads': args.threads},
        'search': {'max_cuts_per_edge': args.max_cuts_per_edge},
    }
    for item in args.set or []:
        key, sep, value = item.partition('=')
        section, dot, name = key.partition('.')
        if not sep or not dot:
            raise ValueError(f"--set 需要 节.键=值 的形式: {item}")
        overrides.setdefault(section.strip(), {})[name.strip()] = value.strip()
    return overrides


def _run(args, command: str, default_format: str = 'json', **kwargs) -> int:
    try:
        processor = PartitionProcessor(args.config, _overrides(args))
    except FileNotFoundError as e:
        print(f"\n配置文件错误: {e}")
        return EXIT_IO
    except ValueError as e:
        print(f"\n配置无效: {e}")
        return EXIT_INVALID

    result = processor.execute(command, out=args.out, fmt=args.format or default_format, **kwargs)
    if not result['success'] and result.get('error'):
        print(f"\n执行失败: {result['error']}")
    return result['code']


def cmd_eig(args):
    """前 N 个特征值"""
    return _run(args, 'eig', graph=args.graph, count=args.count, method=args.method)


def cmd_partition(args):
    """最小划分（minimize）或最大最小划分（maximize）"""
    return _run(args, args.command, graph=args.graph, k=args.k, problem=args.problem, p=args.p,
                class_filter=args.partition_class.replace('-', '_'))


def cmd_sweep(args):
    """对 p、边长或 k 扫描"""
    grid = [x.strip() for x in args.grid.split(',') if x.strip()] if args.grid else []
    return _run(args, 'sweep', 'csv', graph=args.graph, kind=args.kind, k=args.k, problem=args.problem, p=args.p,
                class_filter=args.partition_class.replace('-', '_'), grid=grid, edge=args.edge)


def cmd_nodal(args):
    """本征函数的节点划分"""
    return _run(args, 'nodal', graph=args.graph, index=args.index)


def cmd_verify(args):
    """运行验收夹具"""
    return _run(args, 'verify', fixtures=args.fixture)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default='config/config.ini', help='配置文件路径')
    common.add_argument('--out', type=str, help='结果输出路径')
    common.add_argument('--format', type=str, choices=['json', 'csv'], help='输出格式（sweep 默认 csv，其余默认 json）')
    common.add_argument('--seed', type=int, help='随机种子')
    common.add_argument('--threads', type=int, help='并行线程数（0 表示全部CPU核）')
    common.add_argument('--max-cuts-per-edge', type=int, help='每条边内部切点个数上限')
    common.add_argument('--set', action='append', metavar='节.键=值', help='覆盖任意配置项（可重复）')
    return common


def _objective_parser() -> argparse.ArgumentParser:
    objective = argparse.ArgumentParser(add_help=False)
    objective.add_argument('--graph', type=str, required=True, help='图文件路径或内置图名')
    objective.add_argument('--k', type=int, default=2, help='簇数')
    objective.add_argument('--problem', type=str, choices=['dirichlet', 'natural'], default='dirichlet')
    objective.add_argument('--p', type=str, default='inf', help='能量指数（数值或 inf）')
    objective.add_argument('--class', dest='partition_class', default='rigid',
                           choices=['rigid', 'loose', 'proper', 'faithful', 'internally-connected'])
    return objective


def main(argv=None):
    parser = argparse.ArgumentParser(
        description='度量图谱划分 - 最小/最大划分搜索与结构性检验',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
    python run.py eig --graph pumpkin3 --count 4
    python run.py minimize --graph pumpkin6 --k 2 --problem natural
    python run.py verify --fixture pumpkin-H
        """
    )
    common = _common_parser()
    objective = _objective_parser()

    subparsers = parser.add_subparsers(dest='command', help='可用命令')

    # eig 命令
    eig_parser = subparsers.add_parser('eig', parents=[common], help='前 N 个特征值')
    eig_parser.add_argument('--graph', type=str, required=True, help='图文件路径或内置图名')
    eig_parser.add_argument('--count', type=int, default=6, help='特征值个数')
    eig_parser.add_argument('--method', type=str, choices=['secular', 'fem', 'cross-check'], default='secular')
    eig_parser.set_defaults(func=cmd_eig)

    # minimize / maximize 命令
    for name, text in (('minimize', '最小能量划分'), ('maximize', '最大最小能量划分')):
        partition_parser = subparsers.add_parser(name, parents=[common, objective], help=text)
        partition_parser.set_defaults(func=cmd_partition)

    # sweep 命令
    sweep_parser = subparsers.add_parser('sweep', parents=[common, objective], help='参数扫描')
    sweep_parser.add_argument('--kind', type=str, choices=['p', 'length', 'k'], default='p')
    sweep_parser.add_argument('--grid', type=str, default='', help='逗号分隔的网格点')
    sweep_parser.add_argument('--edge', type=str, help='长度扫描的边ID')
    sweep_parser.set_defaults(func=cmd_sweep)

    # nodal 命令
    nodal_parser = subparsers.add_parser('nodal', parents=[common], help='节点划分与 Courant 界')
    nodal_parser.add_argument('--graph', type=str, required=True, help='图文件路径或内置图名')
    nodal_parser.add_argument('--index', type=int, default=2, help='特征值序号')
    nodal_parser.set_defaults(func=cmd_nodal)

    # verify 命令
    verify_parser = subparsers.add_parser('verify', parents=[common], help='运行验收夹具')
    verify_parser.add_argument('--fixture', action='append', help='只运行指定夹具（可重复）')
    verify_parser.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    try:
        return args.func(args)
    except ValueError as e:
        print(f"\n参数无效: {e}")
        return EXIT_INVALID


if __name__ == '__main__':
    sys.exit(main())
