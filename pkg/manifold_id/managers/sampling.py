"""
球面采样管理器

负责在 S² 上按六种采样方案生成坐标集，以及陆地掩膜的读写。
"""

import io
import logging
import math
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..core.engine import ComputeEngine
from ..core.exceptions import (
    EmptyInputError,
    ManifoldIDConfigError,
    ManifoldIDIOError,
    RejectionLimitError,
)
from ..types.geo_types import GeoPointSet, LandMask, SamplingScheme
from ..utils.binary_formats import BinaryCodec
from ..utils.spherical import equal_area_band_edges, wrap_longitude


logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
STRATIFIED_BANDS = 18
MAX_REJECTIONS = 10_000_000


class SamplingManager:
    """
    采样管理器

    所有方法对 (参数, seed) 是纯函数，结果逐位可复现。
    """

    def __init__(self, engine: ComputeEngine):
        """
        初始化采样管理器

        Args:
            engine: 计算引擎实例
        """
        self.engine = engine
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @staticmethod
    def _require_count(n: int):
        if n is None or n < 1:
            raise EmptyInputError("采样点数")

    def _rng(self, seed: int, scheme: SamplingScheme) -> np.random.Generator:
        return self.engine.substream(seed, f"sampling/{scheme.value}")

    @staticmethod
    def _uniform_lonlat(rng: np.random.Generator, m: int):
        lon = rng.uniform(-180.0, 180.0, m)
        u = rng.random(m)
        lat = np.degrees(np.arcsin(2.0 * u - 1.0))
        return lon, lat

    def _finish(self, points: GeoPointSet) -> GeoPointSet:
        result = points.deduplicated()
        removed = result.metadata.get("duplicates_removed", 0)
        if removed:
            self.logger.warning(f"{points.scheme.value} 采样去除了 {removed} 个重复点")
        self.logger.debug(f"{points.scheme.value} 采样完成: {result.n} 个点")
        return result

    def sample_fibonacci(self, n: int) -> GeoPointSet:
        """
        Fibonacci 格点

        第 i 个点 z_i = 1 - 2(i + 0.5)/n，经度按黄金角递增。

        Args:
            n: 点数

        Returns:
            GeoPointSet: 采样点集
        """
        self._require_count(n)
        i = np.arange(n, dtype=np.float64)
        z = 1.0 - 2.0 * (i + 0.5) / n
        lat = np.degrees(np.arcsin(z))
        lon = wrap_longitude(np.degrees(np.mod(i * GOLDEN_ANGLE, 2.0 * math.pi)))
        return self._finish(GeoPointSet(lon, lat, SamplingScheme.FIBONACCI))

    def sample_uniform_sphere(self, n: int, seed: int = 0) -> GeoPointSet:
        """
        S² 上面积均匀采样

        Args:
            n: 点数
            seed: 随机种子

        Returns:
            GeoPointSet: 采样点集
        """
        self._require_count(n)
        lon, lat = self._uniform_lonlat(self._rng(seed, SamplingScheme.SPHERE), n)
        return self._finish(GeoPointSet(lon, lat, SamplingScheme.SPHERE, seed=seed))

    def sample_naive(self, n: int, seed: int = 0) -> GeoPointSet:
        """
        经纬度各自均匀采样（极区过采样）

        Args:
            n: 点数
            seed: 随机种子
        """
        self._require_count(n)
        rng = self._rng(seed, SamplingScheme.NAIVE)
        lon = rng.uniform(-180.0, 180.0, n)
        lat = rng.uniform(-90.0, 90.0, n)
        return self._finish(GeoPointSet(lon, lat, SamplingScheme.NAIVE, seed=seed))

    def sample_grid(self, width: int, height: int) -> GeoPointSet:
        """
        规则经纬网格（取格心）

        行从北到南，行内经度从 -180 起。

        Args:
            width: 经向格数
            height: 纬向格数
        """
        if width is None or height is None or width < 1 or height < 1:
            raise EmptyInputError(f"网格 {width}x{height}")
        lons = -180.0 + (np.arange(width) + 0.5) * 360.0 / width
        lats = 90.0 - (np.arange(height) + 0.5) * 180.0 / height
        lon_grid, lat_grid = np.meshgrid(lons, lats)
        points = GeoPointSet(lon_grid.ravel(), lat_grid.ravel(), SamplingScheme.GRID,
                             metadata={"width": width, "height": height})
        return self._finish(points)

    def sample_stratified(self, n: int, seed: int = 0) -> GeoPointSet:
        """
        等面积纬度带分层采样

        球面分为 18 个等面积纬度带，每带分配 ⌊n/18⌋ 个点，余数依次分给
        最南的若干带；带内面积均匀采样。n 小于带数时退化为均匀球面采样，
        并在 metadata['stratified_fallback'] 中标记。

        Args:
            n: 点数
            seed: 随机种子
        """
        self._require_count(n)
        rng = self._rng(seed, SamplingScheme.STRATIFIED)

        if n < STRATIFIED_BANDS:
            self.logger.warning(f"点数 {n} 小于分层数 {STRATIFIED_BANDS}，退化为均匀球面采样")
            lon, lat = self._uniform_lonlat(rng, n)
            points = GeoPointSet(lon, lat, SamplingScheme.STRATIFIED, seed=seed,
                                 metadata={"stratified_fallback": True})
            return self._finish(points)

        edges = equal_area_band_edges(STRATIFIED_BANDS)
        base, remainder = divmod(n, STRATIFIED_BANDS)
        lons, lats = [], []
        for band in range(STRATIFIED_BANDS):
            count = base + (1 if band < remainder else 0)
            lons.append(rng.uniform(-180.0, 180.0, count))
            z = rng.uniform(edges[band], edges[band + 1], count)
            lats.append(np.degrees(np.arcsin(z)))
        points = GeoPointSet(np.concatenate(lons), np.concatenate(lats), SamplingScheme.STRATIFIED,
                             seed=seed, metadata={"stratified_fallback": False,
                                                  "bands": STRATIFIED_BANDS})
        return self._finish(points)

    def sample_land(self, n: int, seed: int, mask: LandMask) -> GeoPointSet:
        """
        陆地掩膜拒绝采样

        从均匀球面分批抽取候选点，保留落在陆地格内的点，直到接受 n 个。

        Args:
            n: 点数
            seed: 随机种子
            mask: 陆地掩膜

        Raises:
            RejectionLimitError: 拒绝次数超过 10⁷
        """
        self._require_count(n)
        rng = self._rng(seed, SamplingScheme.LAND)
        accepted_lon, accepted_lat = [], []
        accepted = 0
        rejected = 0

        while accepted < n:
            batch = int(min(max(2 * (n - accepted), 4096), 1_000_000))
            lon, lat = self._uniform_lonlat(rng, batch)
            keep = mask.lookup(lon, lat)
            take = np.flatnonzero(keep)[: n - accepted]
            # 被截断的尾部候选不计入拒绝
            last = take[-1] + 1 if take.size == n - accepted else batch
            rejected += int(last - take.size)
            accepted_lon.append(lon[take])
            accepted_lat.append(lat[take])
            accepted += take.size
            if rejected > MAX_REJECTIONS:
                raise RejectionLimitError(rejected + accepted, accepted)

        points = GeoPointSet(np.concatenate(accepted_lon), np.concatenate(accepted_lat),
                             SamplingScheme.LAND, seed=seed,
                             metadata={"rejections": rejected})
        self.logger.info(f"陆地采样接受 {n} 个点，拒绝 {rejected} 个")
        return self._finish(points)

    def sample(self, scheme: Union[SamplingScheme, str], n: int, seed: int = 0,
               mask: Optional[LandMask] = None, grid_width: int = 360,
               grid_height: int = 180) -> GeoPointSet:
        """
        按方案名称分派采样

        Args:
            scheme: 采样方案
            n: 点数（grid 方案忽略）
            seed: 随机种子
            mask: land 方案所需掩膜
            grid_width: grid 方案宽度
            grid_height: grid 方案高度
        """
        scheme = SamplingScheme(scheme) if not isinstance(scheme, SamplingScheme) else scheme
        if scheme is SamplingScheme.FIBONACCI:
            return self.sample_fibonacci(n)
        if scheme is SamplingScheme.SPHERE:
            return self.sample_uniform_sphere(n, seed)
        if scheme is SamplingScheme.NAIVE:
            return self.sample_naive(n, seed)
        if scheme is SamplingScheme.GRID:
            return self.sample_grid(grid_width, grid_height)
        if scheme is SamplingScheme.STRATIFIED:
            return self.sample_stratified(n, seed)
        if mask is None:
            raise ManifoldIDConfigError("land 采样方案需要陆地掩膜")
        return self.sample_land(n, seed, mask)

    def load_mask(self, payload: bytes) -> LandMask:
        """
        从 MSK1 字节解析掩膜

        Raises:
            FormatError: 魔数错误
            TruncatedPayloadError: 数据截断
        """
        width, height, grid = BinaryCodec.decode_mask(payload)
        mask = LandMask(width, height, grid)
        self.logger.info(f"已加载掩膜 {width}x{height}，陆地占比 {mask.land_fraction():.3f}")
        return mask

    def save_mask(self, mask: LandMask) -> bytes:
        """将掩膜编码为 MSK1 字节"""
        return BinaryCodec.encode_mask(mask.width, mask.height, mask.grid)

    def load_mask_file(self, path: str) -> LandMask:
        """从文件读取掩膜"""
        try:
            with open(path, "rb") as f:
                return self.load_mask(f.read())
        except OSError as e:
            raise ManifoldIDIOError(f"读取掩膜失败: {e}") from e

    @staticmethod
    def save_points_csv(points: GeoPointSet) -> str:
        """导出点集为 CSV 文本（表头 lon,lat）"""
        buffer = io.StringIO()
        pd.DataFrame({"lon": points.lon, "lat": points.lat}).to_csv(buffer, index=False)
        return buffer.getvalue()

    @staticmethod
    def load_points_csv(text: str, scheme: SamplingScheme = SamplingScheme.SPHERE) -> GeoPointSet:
        """
        从 CSV 文本读取点集

        Raises:
            ManifoldIDIOError: 缺少 lon/lat 列
        """
        frame = pd.read_csv(io.StringIO(text), dtype=np.float64, float_precision="round_trip")
        if list(frame.columns[:2]) != ["lon", "lat"]:
            raise ManifoldIDIOError(f"点集 CSV 表头必须以 lon,lat 开始，实际为 {list(frame.columns)}")
        return GeoPointSet(frame["lon"].to_numpy(), frame["lat"].to_numpy(), scheme)
