"""
合成编码器管理器

将 GeoPointSet 映射为 EmbeddingMatrix：原始坐标、实球谐、分层随机傅里叶特征、
多尺度正弦编码，以及随机初始化的线性 / SIREN 网络头。
另负责外部嵌入文件（EMB1 / CSV）的读写。
"""

import io
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.engine import ComputeEngine
from ..core.exceptions import (
    DimensionMismatchError,
    EmptyInputError,
    FormatError,
    ManifoldIDConfigError,
    ManifoldIDIOError,
)
from ..types.embedding_types import EmbeddingMatrix, EncoderKind, EncoderSpec, HeadKind
from ..types.geo_types import GeoPointSet
from ..utils.binary_formats import EMB_MAGIC, BinaryCodec
from ..utils.special_functions import MAX_SH_DEGREE, real_spherical_harmonics


logger = logging.getLogger(__name__)

LayerWeights = Tuple[np.ndarray, np.ndarray]


class EncoderManager:
    """
    编码器管理器

    所有编码均为纯函数，对 (参数, seed) 确定；按行分块并行时写入互不重叠的输出切片。
    """

    def __init__(self, engine: ComputeEngine):
        """
        初始化编码器管理器

        Args:
            engine: 计算引擎实例
        """
        self.engine = engine
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @staticmethod
    def _require_points(points: GeoPointSet):
        if points is None or points.n == 0:
            raise EmptyInputError("点集")

    @staticmethod
    def _provenance(points: GeoPointSet, **params) -> dict:
        return {"source": "synthetic", "scheme": points.scheme.value, "seed": points.seed, **params}

    def encode_raw(self, points: GeoPointSet) -> EmbeddingMatrix:
        """
        原始经纬度编码

        两列 (lon, lat)，单位为度，按列减去均值。

        Returns:
            EmbeddingMatrix: 形状 (n, 2)
        """
        self._require_points(points)
        data = points.coords
        data = data - data.mean(axis=0)
        return EmbeddingMatrix(data, self._provenance(points, encoder="raw"), coords=points.coords)

    def encode_spherical_harmonics(self, points: GeoPointSet, L: int) -> EmbeddingMatrix:
        """
        实球谐编码

        列数 (L+1)²，按 (l, m) 字典序排列，m 从 -l 到 l。

        Args:
            points: 点集
            L: 最大阶数（0 <= L <= 200）
        """
        self._require_points(points)
        if L < 0 or L > MAX_SH_DEGREE:
            raise ManifoldIDConfigError(f"球谐阶数 L={L} 超出 [0, {MAX_SH_DEGREE}]")

        out = np.empty((points.n, (L + 1) ** 2), dtype=np.float64)

        def fill(block: slice):
            real_spherical_harmonics(points.lon[block], points.lat[block], L, out=out[block])

        self.engine.map_blocks(fill, points.n)
        self.logger.debug(f"球谐编码完成: L={L}, D={out.shape[1]}")
        return EmbeddingMatrix(out, self._provenance(points, encoder=f"sh(L={L})"), coords=points.coords)

    def encode_rff(self, points: GeoPointSet, sigma_min: float, sigma_max: float, M: int,
                   features_per_level: int, seed: int = 0) -> EmbeddingMatrix:
        """
        分层随机傅里叶特征

        第 m 层频率尺度 γ_m 在 [sigma_min, sigma_max] 上对数等距，
        特征为 sin/cos(γ_m·W_m·u + b_m)，u 为单位三维坐标（避免日界线不连续）。

        Args:
            points: 点集
            sigma_min: 最小频率
            sigma_max: 最大频率
            M: 层数
            features_per_level: 每层随机方向数
            seed: 随机种子

        Returns:
            EmbeddingMatrix: 形状 (n, 2·M·features_per_level)
        """
        self._require_points(points)
        if M < 1:
            raise ManifoldIDConfigError(f"RFF 层数 M 必须 >= 1: {M}")
        if features_per_level < 1:
            raise ManifoldIDConfigError(f"每层特征数必须 >= 1: {features_per_level}")
        if sigma_min <= 0 or sigma_min > sigma_max:
            raise ManifoldIDConfigError(f"RFF 频率范围无效: [{sigma_min}, {sigma_max}]")

        rng = self.engine.substream(seed, "encoder/rff")
        gammas = np.geomspace(sigma_min, sigma_max, M)
        weights = []
        for _ in range(M):
            W = rng.standard_normal((features_per_level, 3))
            b = rng.uniform(0.0, 2.0 * math.pi, features_per_level)
            weights.append((W, b))

        width = 2 * features_per_level
        out = np.empty((points.n, M * width), dtype=np.float64)

        def fill(block: slice):
            u = points.unit3[block]
            for level, (gamma, (W, b)) in enumerate(zip(gammas, weights)):
                proj = gamma * (u @ W.T) + b
                out[block, level * width: level * width + features_per_level] = np.sin(proj)
                out[block, level * width + features_per_level: (level + 1) * width] = np.cos(proj)

        self.engine.map_blocks(fill, points.n)
        provenance = self._provenance(points, encoder=f"rff(sigma={sigma_min:g}..{sigma_max:g},M={M})",
                                      encoder_seed=seed)
        return EmbeddingMatrix(out, provenance, coords=points.coords)

    def encode_sinusoidal_multiscale(self, points: GeoPointSet, S: int, lambda_min: float = 1.0,
                                     lambda_max: float = 360.0) -> EmbeddingMatrix:
        """
        多尺度正弦编码（网格式）

        对 lon、lat（度）分别在 S 个波长 λ_s 上取 sin(c/λ_s)、cos(c/λ_s)。
        有意作用于原始度数，以复现此类编码在距离型估计器上的维度膨胀。

        Returns:
            EmbeddingMatrix: 形状 (n, 4S)，列顺序 [lon 各尺度 sin,cos | lat 各尺度 sin,cos]
        """
        self._require_points(points)
        if S < 1:
            raise ManifoldIDConfigError(f"尺度数 S 必须 >= 1: {S}")
        if lambda_min <= 0 or lambda_max <= 0:
            raise ManifoldIDConfigError(f"波长必须大于 0: [{lambda_min}, {lambda_max}]")

        if S == 1:
            wavelengths = np.array([lambda_min], dtype=np.float64)
        else:
            wavelengths = lambda_min * (lambda_max / lambda_min) ** (np.arange(S) / (S - 1))

        columns = []
        for coord in (points.lon, points.lat):
            scaled = coord[:, None] / wavelengths[None, :]
            pair = np.empty((points.n, 2 * S), dtype=np.float64)
            pair[:, 0::2] = np.sin(scaled)
            pair[:, 1::2] = np.cos(scaled)
            columns.append(pair)
        data = np.hstack(columns)
        return EmbeddingMatrix(data, self._provenance(points, encoder=f"grid(S={S})"), coords=points.coords)

    @staticmethod
    def init_head_weights(rng: np.random.Generator, fan_in: int, head: HeadKind, width: int,
                          depth: int, omega0: float) -> List[LayerWeights]:
        """
        初始化网络头权重

        linear: W, b ~ U(±1/√fan_in)
        siren: 首层 W ~ U(±1/fan_in)，后续层 W ~ U(±√(6/fan_in)/ω₀)；b ~ U(±1/√fan_in)

        Returns:
            List[Tuple[W, b]]: 每层 W 形状 (out, in)
        """
        layers = []
        size_in = fan_in
        for layer in range(depth):
            if head is HeadKind.LINEAR:
                bound = 1.0 / math.sqrt(size_in)
            elif layer == 0:
                bound = 1.0 / size_in
            else:
                bound = math.sqrt(6.0 / size_in) / omega0
            W = rng.uniform(-bound, bound, (width, size_in))
            b_bound = 1.0 / math.sqrt(size_in)
            b = rng.uniform(-b_bound, b_bound, width)
            layers.append((W, b))
            size_in = width
        return layers

    def apply_head(self, emb: EmbeddingMatrix, head: Union[HeadKind, str], width: int = 256,
                   depth: int = 2, omega0: float = 30.0, seed: int = 0,
                   weights: Optional[Sequence[LayerWeights]] = None) -> EmbeddingMatrix:
        """
        施加随机初始化的网络头

        Args:
            emb: 输入嵌入
            head: linear 或 siren
            width: 隐藏层宽度（即输出维度）
            depth: 层数
            omega0: SIREN 频率因子 ω₀
            seed: 随机种子
            weights: 显式给定的各层 (W, b)，用于测试注入；给定时忽略 width/depth

        Returns:
            EmbeddingMatrix: 网络头输出
        """
        head = head if isinstance(head, HeadKind) else HeadKind(str(head).lower())
        if head is HeadKind.NONE:
            return emb
        if weights is None:
            if width < 1 or depth < 1:
                raise ManifoldIDConfigError(f"网络头宽度/深度必须 >= 1: {width}/{depth}")
            if omega0 <= 0:
                raise ManifoldIDConfigError(f"omega0 必须大于 0: {omega0}")
            rng = self.engine.substream(seed, f"encoder/head/{head.value}")
            weights = self.init_head_weights(rng, emb.d_ambient, head, width, depth, omega0)
        if not weights:
            raise ManifoldIDConfigError("网络头至少需要一层")

        width_out = weights[-1][0].shape[0]
        out = np.empty((emb.n, width_out), dtype=np.float64)

        def forward(block: slice):
            h = emb.data[block]
            for W, b in weights:
                h = h @ W.T + b
                if head is HeadKind.SIREN:
                    h = np.sin(omega0 * h)
            out[block] = h

        self.engine.map_blocks(forward, emb.n)
        provenance = dict(emb.provenance)
        provenance["encoder"] = f"{provenance.get('encoder', 'input')}+{head.value}"
        provenance["head_seed"] = seed
        return EmbeddingMatrix(out, provenance, coords=emb.coords)

    def encode(self, points: GeoPointSet, spec: EncoderSpec) -> EmbeddingMatrix:
        """
        按 EncoderSpec 编码并施加网络头

        Args:
            points: 点集
            spec: 编码器参数

        Returns:
            EmbeddingMatrix: 嵌入
        """
        spec.validate()
        if spec.kind is EncoderKind.RAW:
            emb = self.encode_raw(points)
        elif spec.kind is EncoderKind.SPHERICAL_HARMONICS:
            emb = self.encode_spherical_harmonics(points, spec.L)
        elif spec.kind is EncoderKind.RFF_HIERARCHICAL:
            emb = self.encode_rff(points, spec.sigma_min, spec.sigma_max, spec.M,
                                  spec.features_per_level, seed=spec.seed)
        else:
            emb = self.encode_sinusoidal_multiscale(points, spec.S, spec.lambda_min, spec.lambda_max)

        if spec.head is not HeadKind.NONE:
            emb = self.apply_head(emb, spec.head, spec.head_width, spec.head_depth,
                                  spec.omega0, seed=spec.seed)
        emb.provenance["encoder"] = spec.describe()
        self.logger.info(f"编码完成: {spec.describe()}，形状 {emb.shape}")
        return emb

    def save_embeddings(self, emb: EmbeddingMatrix, dtype_code: int = 1) -> bytes:
        """
        编码为 EMB1 字节

        Args:
            emb: 嵌入
            dtype_code: 0 = float32, 1 = float64
        """
        return BinaryCodec.encode_embeddings(emb.data, dtype_code)

    @staticmethod
    def save_embeddings_csv(emb: EmbeddingMatrix) -> str:
        """
        导出为 CSV 文本（表头 lon,lat,e0,...）

        Raises:
            ManifoldIDConfigError: 嵌入未绑定坐标
        """
        if emb.coords is None:
            raise ManifoldIDConfigError("导出 CSV 需要嵌入绑定的 lon/lat 坐标")
        frame = pd.DataFrame(emb.data, columns=[f"e{j}" for j in range(emb.d_ambient)])
        frame.insert(0, "lat", emb.coords[:, 1])
        frame.insert(0, "lon", emb.coords[:, 0])
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False)
        return buffer.getvalue()

    def load_embeddings(self, payload: Union[bytes, str], source: str = "<memory>") -> EmbeddingMatrix:
        """
        解析 EMB1 字节或 CSV 文本

        Args:
            payload: EMB1 字节、CSV 字节或 CSV 文本
            source: 出处描述

        Raises:
            FormatError: 既非 EMB1 也非 CSV
            TruncatedPayloadError: 数据截断
            DimensionMismatchError: 文件头与数据不符
            NonFiniteValueError: 含非有限值
        """
        if isinstance(payload, bytes) and payload[:4] == EMB_MAGIC:
            data, dtype_code = BinaryCodec.decode_embeddings(payload)
            emb = EmbeddingMatrix(data, {"source": source, "format": "EMB1", "dtype": dtype_code})
            self.logger.info(f"已加载 EMB1 嵌入 {emb.shape} ({source})")
            return emb

        if isinstance(payload, bytes):
            if not payload.startswith(b"lon,"):
                raise FormatError(EMB_MAGIC, payload[:4])
            payload = payload.decode("utf-8")

        frame = pd.read_csv(io.StringIO(payload), float_precision="round_trip")
        columns = list(frame.columns)
        expected = ["lon", "lat"] + [f"e{j}" for j in range(len(columns) - 2)]
        if len(columns) < 3 or columns != expected:
            raise DimensionMismatchError(f"CSV 表头应为 lon,lat,e0,...，实际为 {','.join(columns)}")
        values = frame.to_numpy(dtype=np.float64)
        emb = EmbeddingMatrix(values[:, 2:], {"source": source, "format": "CSV"}, coords=values[:, :2])
        self.logger.info(f"已加载 CSV 嵌入 {emb.shape} ({source})")
        return emb

    def load_embeddings_file(self, path: str) -> EmbeddingMatrix:
        """从文件读取嵌入（按内容识别格式）"""
        try:
            with open(path, "rb") as f:
                payload = f.read()
        except OSError as e:
            raise ManifoldIDIOError(f"读取嵌入文件失败: {e}") from e
        return self.load_embeddings(payload, source=path)
