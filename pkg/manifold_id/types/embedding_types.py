"""
嵌入类型定义

EmbeddingMatrix、EncoderSpec 及编码器/网络头枚举。
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from ..core.exceptions import EmptyInputError, ManifoldIDConfigError, NonFiniteValueError


class EncoderKind(Enum):
    """位置编码类型"""
    RAW = "raw"
    SPHERICAL_HARMONICS = "spherical_harmonics"
    RFF_HIERARCHICAL = "rff_hierarchical"
    SINUSOIDAL_MULTISCALE = "sinusoidal_multiscale"


class HeadKind(Enum):
    """随机初始化网络头类型"""
    NONE = "none"
    LINEAR = "linear"
    SIREN = "siren"


# CLI 使用的简称
ENCODER_ALIASES = {
    "raw": EncoderKind.RAW,
    "sh": EncoderKind.SPHERICAL_HARMONICS,
    "spherical_harmonics": EncoderKind.SPHERICAL_HARMONICS,
    "rff": EncoderKind.RFF_HIERARCHICAL,
    "rff_hierarchical": EncoderKind.RFF_HIERARCHICAL,
    "grid": EncoderKind.SINUSOIDAL_MULTISCALE,
    "multiscale": EncoderKind.SINUSOIDAL_MULTISCALE,
    "sinusoidal_multiscale": EncoderKind.SINUSOIDAL_MULTISCALE,
}


def parse_encoder_kind(name) -> EncoderKind:
    """解析编码器名称（支持简称）"""
    if isinstance(name, EncoderKind):
        return name
    try:
        return ENCODER_ALIASES[str(name).lower()]
    except KeyError:
        raise ManifoldIDConfigError(
            f"未知编码器 '{name}'。可用: {', '.join(sorted(ENCODER_ALIASES))}"
        ) from None


@dataclass
class EncoderSpec:
    """位置编码器与网络头的完整参数"""

    kind: EncoderKind = EncoderKind.RAW
    L: int = 10
    sigma_min: float = 1.0
    sigma_max: float = 2.0 ** 8
    M: int = 3
    features_per_level: int = 64
    S: int = 16
    lambda_min: float = 1.0
    lambda_max: float = 360.0
    head: HeadKind = HeadKind.NONE
    head_width: int = 256
    head_depth: int = 2
    omega0: float = 30.0
    seed: int = 0

    def __post_init__(self):
        self.kind = parse_encoder_kind(self.kind)
        if not isinstance(self.head, HeadKind):
            try:
                self.head = HeadKind(str(self.head).lower())
            except ValueError:
                raise ManifoldIDConfigError(f"未知网络头 '{self.head}'") from None

    def validate(self):
        """验证参数"""
        if self.L < 0:
            raise ManifoldIDConfigError(f"L 不能为负数: {self.L}")
        if self.M < 1:
            raise ManifoldIDConfigError(f"M 必须 >= 1: {self.M}")
        if self.S < 1:
            raise ManifoldIDConfigError(f"S 必须 >= 1: {self.S}")
        if self.sigma_min > self.sigma_max:
            raise ManifoldIDConfigError(f"sigma_min ({self.sigma_min}) 大于 sigma_max ({self.sigma_max})")
        if self.omega0 <= 0:
            raise ManifoldIDConfigError(f"omega0 必须大于 0: {self.omega0}")
        if self.head is not HeadKind.NONE and (self.head_width < 1 or self.head_depth < 1):
            raise ManifoldIDConfigError(f"网络头宽度/深度必须 >= 1: {self.head_width}/{self.head_depth}")

    def describe(self) -> str:
        """简短描述，用于报告与出处记录"""
        if self.kind is EncoderKind.SPHERICAL_HARMONICS:
            base = f"sh(L={self.L})"
        elif self.kind is EncoderKind.RFF_HIERARCHICAL:
            base = f"rff(sigma={self.sigma_min:g}..{self.sigma_max:g},M={self.M})"
        elif self.kind is EncoderKind.SINUSOIDAL_MULTISCALE:
            base = f"grid(S={self.S})"
        else:
            base = "raw"
        if self.head is not HeadKind.NONE:
            base += f"+{self.head.value}(w={self.head_width},d={self.head_depth})"
        return base

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["head"] = self.head.value
        return d


@dataclass
class EmbeddingMatrix:
    """
    N × D 嵌入矩阵

    内部统一为 float64、行主序。coords 为可选的 (N, 2) [lon, lat]，
    provenance 记录编码器参数或外部文件描述。
    """

    data: np.ndarray
    provenance: Dict[str, Any] = field(default_factory=dict)
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise EmptyInputError("嵌入矩阵")
        finite = np.isfinite(data).all(axis=1)
        if not finite.all():
            raise NonFiniteValueError(int(np.flatnonzero(~finite)[0]))
        self.data = np.ascontiguousarray(data)
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 2)
            if self.coords.shape[0] != self.data.shape[0]:
                raise ManifoldIDConfigError(
                    f"坐标行数 {self.coords.shape[0]} 与嵌入行数 {self.data.shape[0]} 不一致"
                )

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d_ambient(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self):
        return self.data.shape

    def subset(self, indices) -> "EmbeddingMatrix":
        """按行索引取子集"""
        indices = np.asarray(indices)
        return EmbeddingMatrix(
            data=self.data[indices],
            provenance=dict(self.provenance),
            coords=None if self.coords is None else self.coords[indices],
        )
