"""
manifold_id 核心模块

包含计算引擎、配置、异常处理与统一管理器。
"""

from .exceptions import *
from .config import ManifoldIDConfig, RunConfig
from .engine import ComputeEngine
from .manager import ManifoldIDManager

__all__ = [
    'ComputeEngine',
    'ManifoldIDConfig',
    'RunConfig',
    'ManifoldIDManager',
    'ManifoldIDError',
    'ManifoldIDConfigError',
    'EmptyInputError',
    'NeighborCountError',
    'DegenerateDataError',
    'DuplicatePointsError',
    'DegenerateNeighborhoodError',
    'ZeroVarianceError',
    'FullySeparableError',
    'RejectionLimitError',
    'InsufficientBinsError',
    'ManifoldIDIOError',
    'FormatError',
    'TruncatedPayloadError',
    'DimensionMismatchError',
    'NonFiniteValueError',
    'ValidationFailedError',
]
