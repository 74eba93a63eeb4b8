"""
度量图谱划分 - 度量图上的谱最小/最大划分搜索与结构性检验
"""

__version__ = "1.0.0"
__author__ = "metric-graph-partitions"
