"""
manifold_id - 地理嵌入的内在维度测量库

对地理隐式神经表示（或任意外部嵌入）测量局部与全局内在维度，
内置真实维度已知（= 2，球面）的合成编码器用于验证估计器。

使用示例:
    from manifold_id import ManifoldIDManager, EncoderSpec

    with ManifoldIDManager() as mid:
        points = mid.sample("sphere", 10_000, seed=0)
        emb = mid.encode(points, EncoderSpec(kind="sh", L=40, head="siren"))
        for report in mid.global_ids(emb, "fishers,mle,twonn"):
            print(report.summary())
"""

# 导入核心组件
from .core import ComputeEngine, ManifoldIDConfig, ManifoldIDManager, RunConfig
from .core.exceptions import *

# 导入各个功能模块
from .managers import (
    EncoderManager,
    EstimatorManager,
    ExperimentManager,
    FisherSManager,
    NeighborManager,
    SamplingManager,
)
from .types import (
    EmbeddingMatrix,
    EncoderSpec,
    Estimator,
    GeoPointSet,
    IdReport,
    LandMask,
    LocalIdMap,
    SamplingScheme,
)

__version__ = "0.1.0"

__all__ = [
    # 核心组件
    "ComputeEngine",
    "ManifoldIDConfig",
    "ManifoldIDManager",
    "RunConfig",

    # 功能管理器
    "SamplingManager",
    "EncoderManager",
    "NeighborManager",
    "EstimatorManager",
    "FisherSManager",
    "ExperimentManager",

    # 类型
    "EmbeddingMatrix",
    "EncoderSpec",
    "Estimator",
    "GeoPointSet",
    "IdReport",
    "LandMask",
    "LocalIdMap",
    "SamplingScheme",

    # 异常类
    "ManifoldIDError",
    "ManifoldIDConfigError",
    "DegenerateDataError",
    "ManifoldIDIOError",
    "ValidationFailedError",
]
