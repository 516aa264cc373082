"""
地理类型定义

GeoPoint、GeoPointSet、LandMask 以及采样方案枚举。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, Optional

import numpy as np

from ..core.exceptions import ManifoldIDConfigError
from ..utils.spherical import clamp_latitude, lonlat_to_unit3, wrap_longitude


class SamplingScheme(Enum):
    """球面采样方案"""
    FIBONACCI = "fibonacci"
    SPHERE = "sphere"
    LAND = "land"
    GRID = "grid"
    NAIVE = "naive"
    STRATIFIED = "stratified"


@dataclass(frozen=True)
class GeoPoint:
    """单个地理位置"""

    lon: float
    lat: float

    @property
    def unit3(self) -> np.ndarray:
        """S² 上的单位向量"""
        return lonlat_to_unit3([self.lon], [self.lat])[0]


@dataclass
class GeoPointSet:
    """
    有序地理点集

    以数组形式存储 lon/lat（度）与对应的单位向量，迭代时产出 GeoPoint。
    """

    lon: np.ndarray
    lat: np.ndarray
    scheme: SamplingScheme
    seed: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)
    unit3: Optional[np.ndarray] = None

    def __post_init__(self):
        self.lon = wrap_longitude(np.asarray(self.lon, dtype=np.float64).ravel())
        self.lat = clamp_latitude(np.asarray(self.lat, dtype=np.float64).ravel())
        if self.lon.shape != self.lat.shape:
            raise ManifoldIDConfigError(f"经纬度长度不一致: {self.lon.shape} vs {self.lat.shape}")
        if self.unit3 is None:
            self.unit3 = lonlat_to_unit3(self.lon, self.lat)

    @property
    def n(self) -> int:
        return int(self.lon.shape[0])

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[GeoPoint]:
        for lon, lat in zip(self.lon, self.lat):
            yield GeoPoint(float(lon), float(lat))

    def __getitem__(self, i: int) -> GeoPoint:
        return GeoPoint(float(self.lon[i]), float(self.lat[i]))

    @property
    def coords(self) -> np.ndarray:
        """形状 (n, 2) 的 [lon, lat] 矩阵"""
        return np.column_stack([self.lon, self.lat])

    def subset(self, indices) -> "GeoPointSet":
        """按索引取子集（保持顺序）"""
        indices = np.asarray(indices)
        return GeoPointSet(
            lon=self.lon[indices],
            lat=self.lat[indices],
            scheme=self.scheme,
            seed=self.seed,
            metadata=dict(self.metadata),
            unit3=self.unit3[indices],
        )

    def deduplicated(self) -> "GeoPointSet":
        """
        去除 (lon, lat) 完全相同的重复点，保留首次出现

        Returns:
            GeoPointSet: 去重后的点集；metadata['duplicates_removed'] 记录移除数量
        """
        if self.n == 0:
            return self
        keys = np.ascontiguousarray(self.coords)
        row_view = keys.view(np.dtype((np.void, keys.dtype.itemsize * 2))).ravel()
        _, first = np.unique(row_view, return_index=True)
        if first.size == self.n:
            return self
        kept = np.sort(first)
        result = self.subset(kept)
        result.metadata["duplicates_removed"] = self.n - kept.size
        return result


@dataclass
class LandMask:
    """
    陆地掩膜

    按行主序存储的位图：第 0 行为最北带，第 0 列起始于经度 -180。
    内部以布尔矩阵 (height, width) 保存，序列化时打包为字节。
    """

    width: int
    height: int
    grid: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ManifoldIDConfigError(f"掩膜尺寸无效: {self.width}x{self.height}")
        self.grid = np.asarray(self.grid, dtype=bool).reshape(self.height, self.width)

    @classmethod
    def filled(cls, width: int, height: int, value: bool) -> "LandMask":
        """创建全陆地或全海洋掩膜"""
        return cls(width, height, np.full((height, width), value, dtype=bool))

    def lookup(self, lon, lat) -> np.ndarray:
        """
        查询位置是否为陆地

        Args:
            lon: 经度数组（度）
            lat: 纬度数组（度）

        Returns:
            np.ndarray: 布尔数组
        """
        lon = wrap_longitude(lon)
        lat = clamp_latitude(lat)
        col = np.floor((lon + 180.0) / 360.0 * self.width).astype(np.int64)
        row = np.floor((90.0 - lat) / 180.0 * self.height).astype(np.int64)
        col = np.clip(col, 0, self.width - 1)
        row = np.clip(row, 0, self.height - 1)
        return self.grid[row, col]

    def land_fraction(self) -> float:
        return float(self.grid.mean())
