"""
manifold_id 管理器模块

各功能管理器共享同一个 ComputeEngine，分别负责采样、编码、近邻、估计与实验流水线。
"""

from .sampling import SamplingManager
from .encoders import EncoderManager
from .neighbors import NeighborManager
from .estimators import EstimatorManager
from .fishers import FisherSManager
from .experiments import ExperimentManager

__all__ = [
    'SamplingManager',
    'EncoderManager',
    'NeighborManager',
    'EstimatorManager',
    'FisherSManager',
    'ExperimentManager',
]
