"""
从轨迹数据学习一维偏微分方程的离散化
"""

__version__ = "1.0.0"
