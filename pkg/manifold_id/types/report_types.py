"""
结果类型定义

NeighborTable、LocalIdMap、IdReport、SeparabilityProfile 以及估计器枚举。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..core.exceptions import ManifoldIDConfigError
from ..utils.spherical import band_label, latitude_band


class Estimator(Enum):
    """内在维度估计器"""
    MLE = "mle"
    MOM = "mom"
    TLE = "tle"
    TWONN = "twonn"
    CORRINT = "corrint"
    ESS = "ess"
    FISHERS = "fishers"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @property
    def uses_neighbors(self) -> bool:
        return self not in (Estimator.CORRINT, Estimator.FISHERS)


_DISPLAY_NAMES = {
    Estimator.MLE: "MLE",
    Estimator.MOM: "MOM",
    Estimator.TLE: "TLE",
    Estimator.TWONN: "TwoNN",
    Estimator.CORRINT: "CorrInt",
    Estimator.ESS: "ESS",
    Estimator.FISHERS: "FisherS",
}


def parse_estimators(names) -> List[Estimator]:
    """
    解析估计器列表

    Args:
        names: 逗号分隔字符串或字符串列表，'all' 表示全部

    Returns:
        List[Estimator]: 去重后保持顺序的估计器列表
    """
    if isinstance(names, str):
        names = [s for s in names.split(",") if s.strip()]
    result: List[Estimator] = []
    for name in names:
        if isinstance(name, Estimator):
            est = [name]
        elif str(name).strip().lower() == "all":
            est = list(Estimator)
        else:
            try:
                est = [Estimator(str(name).strip().lower())]
            except ValueError:
                available = ", ".join(e.value for e in Estimator)
                raise ManifoldIDConfigError(f"未知估计器 '{name}'。可用: {available}, all") from None
        for e in est:
            if e not in result:
                result.append(e)
    if not result:
        raise ManifoldIDConfigError("估计器集合为空")
    return result


@dataclass
class NeighborTable:
    """
    k 近邻表

    idx 与 radii 均为 (N, k)，每行按距离升序（距离相同按行号升序），不含自身。
    """

    k: int
    idx: np.ndarray
    radii: np.ndarray
    excluded_self: bool = True

    @property
    def n(self) -> int:
        return int(self.idx.shape[0])

    def truncated(self, k: int) -> "NeighborTable":
        """取前 k 个近邻构成的新表"""
        if not 1 <= k <= self.k:
            raise ManifoldIDConfigError(f"截断的 k={k} 超出表的 k={self.k}")
        return NeighborTable(k=k, idx=self.idx[:, :k], radii=self.radii[:, :k])


@dataclass
class LocalIdMap:
    """
    逐点局部内在维度

    values 中未定义的点（退化邻域或 FisherS p_i = 0）为 NaN，defined 为对应布尔掩码。
    """

    values: np.ndarray
    estimator: Estimator
    k: Optional[int] = None
    coords: Optional[np.ndarray] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 2)

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.values) & (self.values > 0)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def undefined_count(self) -> int:
        return int(self.n - self.defined.sum())

    def band_summary(self, n_bands: int = 10) -> pd.DataFrame:
        """
        纬度带聚合

        Returns:
            pd.DataFrame: 列 band, label, count, defined, mean, variance
        """
        if self.coords is None:
            raise ManifoldIDConfigError("局部 ID 图未绑定坐标，无法按纬度带聚合")
        bands = latitude_band(self.coords[:, 1], n_bands)
        rows = []
        for b in range(n_bands):
            in_band = bands == b
            vals = self.values[in_band & self.defined]
            rows.append({
                "band": b,
                "label": band_label(b, n_bands),
                "count": int(in_band.sum()),
                "defined": int(vals.size),
                "mean": float(vals.mean()) if vals.size else float("nan"),
                "variance": float(vals.var(ddof=1)) if vals.size > 1 else float("nan"),
            })
        return pd.DataFrame(rows)


@dataclass
class IdReport:
    """全局内在维度报告"""

    estimator: Estimator
    global_value: float
    k: Optional[int] = None
    n: int = 0
    scheme: str = ""
    seed: int = 0
    encoder: str = ""
    subsample_mean: Optional[float] = None
    subsample_std: Optional[float] = None
    subsample_values: List[float] = field(default_factory=list)
    degenerate_count: int = 0
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        row = {
            "estimator": self.estimator.display_name,
            "global": self.global_value,
            "subsample_mean": self.subsample_mean,
            "subsample_std": self.subsample_std,
            "k": self.k,
            "n": self.n,
            "scheme": self.scheme,
            "encoder": self.encoder,
            "seed": self.seed,
            "degenerate": self.degenerate_count,
        }
        row.update(self.extra)
        return row

    def summary(self) -> str:
        if self.subsample_mean is not None:
            return (f"{self.estimator.display_name}: {self.global_value:.3f} "
                    f"(子采样 {self.subsample_mean:.3f} ± {self.subsample_std:.3f})")
        return f"{self.estimator.display_name}: {self.global_value:.3f}"


@dataclass
class SeparabilityProfile:
    """FisherS 可分性曲线"""

    alphas: np.ndarray
    p_bar: np.ndarray
    retained_dims: int
    alpha_star: Optional[float] = None
    p_point: Optional[np.ndarray] = None
    n_hat: Optional[np.ndarray] = None
    zero_rows: Optional[np.ndarray] = None

    def to_frame(self) -> pd.DataFrame:
        n_hat = self.n_hat if self.n_hat is not None else np.full(self.alphas.shape, np.nan)
        return pd.DataFrame({"alpha": self.alphas, "p_bar": self.p_bar, "n_hat": n_hat})


@dataclass
class ValidationResult:
    """地面真值验证结果（真实 ID = 2）"""

    table: pd.DataFrame
    mae: Dict[str, float]
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [f"{name} MAE = {value:.3f}" for name, value in self.mae.items()]
        lines.append("验证通过" if self.passed else f"验证未通过: {'; '.join(self.failures)}")
        return "\n".join(lines)
