"""
manifold_id 类型定义模块

包含点集、嵌入、近邻表与报告等领域类型及枚举。
"""

from .geo_types import GeoPoint, GeoPointSet, LandMask, SamplingScheme
from .embedding_types import EmbeddingMatrix, EncoderKind, EncoderSpec, HeadKind, parse_encoder_kind
from .report_types import (
    Estimator,
    IdReport,
    LocalIdMap,
    NeighborTable,
    SeparabilityProfile,
    ValidationResult,
    parse_estimators,
)

__all__ = [
    'GeoPoint',
    'GeoPointSet',
    'LandMask',
    'SamplingScheme',
    'EmbeddingMatrix',
    'EncoderKind',
    'EncoderSpec',
    'HeadKind',
    'parse_encoder_kind',
    'Estimator',
    'IdReport',
    'LocalIdMap',
    'NeighborTable',
    'SeparabilityProfile',
    'ValidationResult',
    'parse_estimators',
]
