"""
核心处理模块
"""


