"""
manifold_id 工具模块

球面坐标换算、二进制文件格式、特殊函数与结果导出。
"""

from .binary_formats import BinaryCodec
from .exporters import ReportExporter
from .special_functions import ess_reference_curve, lambert_w0, real_spherical_harmonics
from .spherical import latitude_band, lonlat_to_unit3, unit3_to_lonlat

__all__ = [
    'BinaryCodec',
    'ReportExporter',
    'ess_reference_curve',
    'lambert_w0',
    'real_spherical_harmonics',
    'latitude_band',
    'lonlat_to_unit3',
    'unit3_to_lonlat',
]
