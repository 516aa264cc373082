"""
FisherS 可分性维度管理器

流程：中心化 → PCA 截断（保留 λ >= λmax/C 的主成分）→ 白化 → 投影到单位球面 →
统计每点在阈值 α 下的 Fisher 不可分概率 pᵢ(α) → 由均匀球面的渐近公式经 Lambert W
反演得到维度。
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import betainc

from ..core.engine import ComputeEngine
from ..core.exceptions import (
    DegenerateDataError,
    EmptyInputError,
    FullySeparableError,
    ManifoldIDConfigError,
    ZeroVarianceError,
)
from ..types.embedding_types import EmbeddingMatrix
from ..types.report_types import Estimator, IdReport, LocalIdMap, SeparabilityProfile
from ..utils.special_functions import lambert_w0


logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = np.round(np.arange(1, 50) * 0.02, 2)
DEFAULT_CONDITION = 10.0
ALPHA_FRACTION = 0.9
GRAM_TILE_ENTRIES = 4_000_000


def validate_alphas(alphas) -> np.ndarray:
    """
    校验 α 网格：严格递增且位于 (0, 1)

    Raises:
        ManifoldIDConfigError: 网格为空、越界或非递增
    """
    alphas = np.asarray(alphas if alphas is not None else DEFAULT_ALPHAS, dtype=np.float64).ravel()
    if alphas.size == 0:
        raise ManifoldIDConfigError("α 网格为空")
    if np.any(alphas <= 0.0) or np.any(alphas >= 1.0):
        raise ManifoldIDConfigError("α 网格取值必须位于 (0, 1)")
    if np.any(np.diff(alphas) <= 0.0):
        raise ManifoldIDConfigError("α 网格必须严格递增")
    return alphas


def p_bar_sphere(dim, alpha, exact: bool = False):
    """
    均匀分布于 S^{n-1} ⊂ Rⁿ 时的平均不可分概率

    默认返回渐近式 (1-α²)^{(n-1)/2} / (α·√(2πn))，即 invert_dimension 所反演的公式；
    exact=True 时返回 P(⟨x, y⟩ > α) 的精确值 ½·I_{1-α²}((n-1)/2, 1/2)。
    """
    dim = np.asarray(dim, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if exact:
        return 0.5 * betainc((dim - 1.0) / 2.0, 0.5, 1.0 - alpha ** 2)
    return (1.0 - alpha ** 2) ** ((dim - 1.0) / 2.0) / (alpha * np.sqrt(2.0 * math.pi * dim))


def invert_dimension(p, alpha):
    """
    由不可分概率反演维度

    n̂ = W(-ln(1-α²) / (2π p² α² (1-α²))) / (-ln(1-α²))

    Args:
        p: 不可分概率 p̄(α) 或 pᵢ(α)；p <= 0 的位置返回 NaN
        alpha: 阈值，(0, 1)

    Returns:
        与输入广播后同形的维度估计（标量输入返回 float）

    Raises:
        FullySeparableError: 标量输入且 p <= 0
    """
    alpha_arr = np.asarray(alpha, dtype=np.float64)
    p_arr = np.asarray(p, dtype=np.float64)
    alpha_arr, p_arr = np.broadcast_arrays(alpha_arr, p_arr)
    one_minus = 1.0 - alpha_arr ** 2
    log_term = -np.log(one_minus)
    positive = p_arr > 0.0
    safe_p = np.where(positive, p_arr, 1.0)
    argument = log_term / (2.0 * math.pi * safe_p ** 2 * alpha_arr ** 2 * one_minus)
    result = np.where(positive, np.asarray(lambert_w0(argument)) / log_term, np.nan)
    if result.ndim == 0:
        if not positive:
            raise FullySeparableError(f"FisherS: α={float(alpha_arr)} 处 p = 0，点完全可分")
        return float(result)
    return result


class FisherSManager:
    """
    FisherS 管理器

    Gram 矩阵按行分块计算，不会一次性构造 n×n 矩阵；每块只写入自身的行，
    因此结果与线程数无关。
    """

    def __init__(self, engine: ComputeEngine):
        """
        初始化 FisherS 管理器

        Args:
            engine: 计算引擎实例
        """
        self.engine = engine
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    def standardize(self, emb: EmbeddingMatrix,
                    condition: float = DEFAULT_CONDITION) -> Tuple[np.ndarray, int, np.ndarray]:
        """
        中心化、PCA 截断、白化并投影到单位球面

        Args:
            emb: 嵌入
            condition: 条件数 C，保留特征值 λ >= λmax/C 的主成分

        Returns:
            Tuple[np.ndarray, int, np.ndarray]: (单位化后的数据, 保留维数, 零范数行掩码)

        Raises:
            ZeroVarianceError: 所有方向方差为零
        """
        if condition < 1.0:
            raise ManifoldIDConfigError(f"条件数 C 必须 >= 1，当前 {condition}")
        if emb.n < 2:
            raise EmptyInputError("FisherS 样本（至少需要 2 个点）")

        centered = emb.data - emb.data.mean(axis=0)
        cov = centered.T @ centered / (emb.n - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        lam_max = eigvals[-1]
        if not lam_max > 0.0:
            raise ZeroVarianceError("FisherS: 输入方差为零")

        keep = eigvals >= lam_max / condition
        projected = centered @ eigvecs[:, keep] / np.sqrt(eigvals[keep])
        norms = np.linalg.norm(projected, axis=1)
        zero_rows = norms <= 0.0
        if zero_rows.any():
            self.logger.warning(f"FisherS: {int(zero_rows.sum())} 个点白化后范数为零，按不可定义处理")
        projected[~zero_rows] /= norms[~zero_rows, None]
        projected[zero_rows] = 0.0

        retained = int(keep.sum())
        self.logger.debug(f"FisherS: 保留 {retained}/{emb.d_ambient} 个主成分")
        return projected, retained, zero_rows

    def _count_block(self, Y: np.ndarray, rows: slice, alphas: np.ndarray) -> np.ndarray:
        G = Y[rows] @ Y.T
        local = np.arange(rows.stop - rows.start)
        G[local, local + rows.start] = -np.inf
        bins = np.digitize(G, alphas, right=True)
        width = alphas.size + 1
        flat = (bins + local[:, None] * width).ravel()
        hist = np.bincount(flat, minlength=local.size * width).reshape(local.size, width)
        # bins > m 等价于 ⟨x_i, x_j⟩ > α_m
        tail = np.cumsum(hist[:, ::-1], axis=1)[:, ::-1]
        return tail[:, 1:]

    def separability_profile(self, Y: np.ndarray, alphas=None,
                             zero_rows: Optional[np.ndarray] = None) -> SeparabilityProfile:
        """
        计算可分性曲线

        pᵢ(α) = |{j ≠ i : ⟨xᵢ, xⱼ⟩ > α}| / n，p̄(α) 为非零行上的均值。

        Args:
            Y: 单位化后的数据 (n, d)
            alphas: 递增的 α 网格，默认 0.02..0.98
            zero_rows: 零范数行掩码（不参与 p̄）

        Returns:
            SeparabilityProfile: 含逐点 p 矩阵的曲线
        """
        alphas = validate_alphas(alphas)
        n = Y.shape[0]
        counts = np.empty((n, alphas.size), dtype=np.int64)
        block_rows = max(1, min(self.engine.config.block_size, GRAM_TILE_ENTRIES // max(n, 1)))

        def run(block: slice):
            counts[block] = self._count_block(Y, block, alphas)

        self.engine.map_blocks(run, n, block_rows)

        p_point = counts / float(n)
        usable = ~zero_rows if zero_rows is not None else np.ones(n, dtype=bool)
        if not usable.any():
            raise ZeroVarianceError("FisherS: 所有点白化后范数为零")
        p_bar = p_point[usable].mean(axis=0)
        if np.any(np.diff(p_bar) > 1e-12):
            raise DegenerateDataError("FisherS: p̄(α) 未随 α 单调不增")
        return SeparabilityProfile(alphas=alphas, p_bar=p_bar, retained_dims=Y.shape[1], p_point=p_point)

    @staticmethod
    def select_alpha(profile: SeparabilityProfile) -> float:
        """
        选择工作阈值 α*：取最接近 0.9·max{α : p̄(α) > 0} 的网格点

        Raises:
            FullySeparableError: 所有 α 下 p̄ = 0
        """
        positive = profile.p_bar > 0.0
        if not positive.any():
            raise FullySeparableError("FisherS: 所有 α 下点均完全可分 (p̄ = 0)")
        target = ALPHA_FRACTION * profile.alphas[positive].max()
        return float(profile.alphas[np.argmin(np.abs(profile.alphas - target))])

    def profile(self, emb: EmbeddingMatrix, alphas=None,
                condition: float = DEFAULT_CONDITION) -> SeparabilityProfile:
        """
        完整可分性分析：标准化、计算曲线、选择 α* 并给出每个 α 的 n̂

        Returns:
            SeparabilityProfile: alpha_star 与 n_hat 已填写
        """
        Y, retained, zero_rows = self.standardize(emb, condition)
        result = self.separability_profile(Y, alphas, zero_rows)
        result.retained_dims = retained
        result.alpha_star = self.select_alpha(result)
        result.n_hat = invert_dimension(result.p_bar, result.alphas)
        result.zero_rows = zero_rows
        return result

    def fishers_global(self, emb: EmbeddingMatrix, alphas=None,
                       condition: float = DEFAULT_CONDITION) -> Tuple[IdReport, SeparabilityProfile]:
        """
        FisherS 全局估计 n̂(α*)

        Returns:
            Tuple[IdReport, SeparabilityProfile]: 报告与可分性曲线
        """
        prof = self.profile(emb, alphas, condition)
        j = int(np.argmin(np.abs(prof.alphas - prof.alpha_star)))
        value = float(prof.n_hat[j])
        self.logger.info(f"FisherS: α*={prof.alpha_star:.2f}, p̄={prof.p_bar[j]:.4g}, n̂={value:.3f}")
        report = IdReport(
            estimator=Estimator.FISHERS,
            global_value=value,
            n=emb.n,
            degenerate_count=int(prof.zero_rows.sum()),
            extra={"alpha": prof.alpha_star, "retained_dims": prof.retained_dims},
        )
        return report, prof

    def fishers_local(self, emb: EmbeddingMatrix, alpha: Optional[float] = None,
                      condition: float = DEFAULT_CONDITION,
                      prof: Optional[SeparabilityProfile] = None) -> LocalIdMap:
        """
        FisherS 局部估计 n̂ᵢ = n̂(α, pᵢ(α))

        Args:
            emb: 嵌入
            alpha: 固定阈值；为 None 时使用全局选择的 α*
            condition: PCA 条件数
            prof: 已计算的曲线（须含 p_point），可避免重复计算 Gram 矩阵

        Returns:
            LocalIdMap: pᵢ = 0 的点为 NaN（不可定义）
        """
        if prof is None:
            grid = DEFAULT_ALPHAS
            if alpha is not None:
                grid = np.union1d(DEFAULT_ALPHAS, validate_alphas([alpha]))
            prof = self.profile(emb, grid, condition)
        if alpha is None:
            alpha = prof.alpha_star
        matches = np.flatnonzero(np.isclose(prof.alphas, alpha))
        if matches.size == 0:
            raise ManifoldIDConfigError(f"α={alpha} 不在可分性曲线的网格上")
        p_local = prof.p_point[:, matches[0]]
        values = invert_dimension(p_local, float(alpha))
        undefined = int(np.sum(~(p_local > 0.0)))
        if undefined == p_local.size:
            raise FullySeparableError(f"FisherS 局部: α={alpha:.2f} 下所有点均完全可分")
        if undefined:
            self.logger.info(f"FisherS 局部: {undefined} 个点在 α={alpha:.2f} 下完全可分，记为不可定义")
        return LocalIdMap(values=values, estimator=Estimator.FISHERS, coords=emb.coords, alpha=float(alpha))

    def analyze(self, emb: EmbeddingMatrix, alphas=None, condition: float = DEFAULT_CONDITION,
                ) -> Tuple[IdReport, SeparabilityProfile, LocalIdMap]:
        """一次 Gram 计算同时得到全局报告、曲线与局部图"""
        report, prof = self.fishers_global(emb, alphas, condition)
        local = self.fishers_local(emb, prof.alpha_star, condition, prof=prof)
        return report, prof, local
