"""
距离型估计器管理器

基于近邻半径与近邻构型的局部 / 全局内在维度估计：MLE、MOM、TLE、TwoNN、
关联积分 (CorrInt) 与 ESS。
"""

import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from ..core.engine import ComputeEngine
from ..core.exceptions import (
    DegenerateDataError,
    DegenerateNeighborhoodError,
    DuplicatePointsError,
    EmptyInputError,
    InsufficientBinsError,
    ManifoldIDConfigError,
    NeighborCountError,
)
from ..types.embedding_types import EmbeddingMatrix
from ..types.report_types import Estimator, IdReport, LocalIdMap, NeighborTable
from ..utils.special_functions import ess_reference_curve
from .neighbors import NeighborManager


logger = logging.getLogger(__name__)

ESS_DIMS = np.arange(1, 201, dtype=np.float64)
ESS_CURVE = ess_reference_curve(ESS_DIMS)
ESS_TOLERANCE = 1e-9
TLE_EPSILON = 1e-12
# TLE/ESS 分块时每块近邻坐标的元素上限
NEIGHBOR_TILE_ENTRIES = 2_000_000

NEIGHBOR_ESTIMATORS = (Estimator.MLE, Estimator.MOM, Estimator.TLE, Estimator.TWONN, Estimator.ESS)


def _require_k(table: NeighborTable, minimum: int, name: str):
    if table.k < minimum:
        raise ManifoldIDConfigError(f"{name} 需要 k >= {minimum}，当前 k={table.k}")


def _mle_from_radii(radii: np.ndarray) -> np.ndarray:
    """radii: (m, k)；退化行返回 NaN"""
    r_k = radii[:, -1:]
    log_sum = np.log(r_k / radii[:, :-1]).sum(axis=1)
    with np.errstate(divide="ignore"):
        values = (radii.shape[1] - 1) / log_sum
    values[~(log_sum > 0)] = np.nan
    return values


def _mom_from_radii(radii: np.ndarray) -> np.ndarray:
    mean = radii.mean(axis=1)
    gap = radii[:, -1] - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        values = mean / gap
    values[~(gap > 0)] = np.nan
    return values


def _tle_from_geometry(u: np.ndarray, V: np.ndarray) -> np.ndarray:
    """
    TLE 局部估计（批量）

    Args:
        u: (m, k) 查询点到各近邻的距离，升序，最后一列为 r = R_k
        V: (m, k, k) 近邻之间的两两距离

    Returns:
        np.ndarray: (m,) 局部估计，退化行为 NaN
    """
    m, k = u.shape
    r = u[:, -1][:, None, None]
    Di = np.broadcast_to(u[:, :, None], (m, k, k))
    Dj = np.broadcast_to(u[:, None, :], (m, k, k))
    V2 = V * V
    Di2 = Di * Di
    Dj2 = Dj * Dj
    r2 = r * r
    Z2 = 2.0 * Di2 + 2.0 * Dj2 - V2
    gap = r2 - Di2

    with np.errstate(divide="ignore", invalid="ignore"):
        base_s = Di2 + V2 - Dj2
        S = r * (np.sqrt(np.maximum(base_s ** 2 + 4.0 * V2 * gap, 0.0)) - base_s) / (2.0 * gap)
        base_t = Di2 + Z2 - Dj2
        T = r * (np.sqrt(np.maximum(base_t ** 2 + 4.0 * Z2 * gap, 0.0)) - base_t) / (2.0 * gap)

        # u_i = r：上式分母为零，改用极限形式
        at_rim = Di >= r
        S = np.where(at_rim, r * V2 / (r2 + V2 - Dj2), S)
        T = np.where(at_rim, r * Z2 / (r2 + Z2 - Dj2), T)

    # 含 i = j：S_ii = 0 被阈值丢弃，T_ii = 2·r·u_i/(r + u_i) 为经查询点的反射测量。
    # 重合近邻 (v_ij = 0) 同理只保留 T_ij。
    # 查询点与近邻构成的点对退化为 MLE 的对数比，S、T 各计一次
    terms = np.concatenate([S.reshape(m, k * k), T.reshape(m, k * k), u, u], axis=1)
    radius = u[:, -1:]
    valid = np.isfinite(terms) & (terms > TLE_EPSILON * radius)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(valid, np.log(radius / np.where(valid, terms, 1.0)), 0.0)
        total = logs.sum(axis=1)
        count = valid.sum(axis=1)
        values = count / total
    values[(count < 1) | ~(total > 0)] = np.nan
    return values


def _ess_statistic(neighbors: np.ndarray) -> np.ndarray:
    """
    ESS 偏斜统计量 ŝ（批量）

    Args:
        neighbors: (m, k, D) 近邻坐标

    Returns:
        np.ndarray: (m,) 中心化后两两向量夹角 |sin θ| 的均值
    """
    centered = neighbors - neighbors.mean(axis=1, keepdims=True)
    gram = np.einsum("bid,bjd->bij", centered, centered)
    norms = np.sqrt(np.maximum(np.einsum("bii->bi", gram), 0.0))
    k = neighbors.shape[1]
    iu, ju = np.triu_indices(k, 1)
    denom = norms[:, iu] * norms[:, ju]
    usable = denom > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(usable, gram[:, iu, ju] / np.where(usable, denom, 1.0), 0.0)
    sin = np.sqrt(np.clip(1.0 - cos * cos, 0.0, 1.0))
    pairs = usable.sum(axis=1)
    with np.errstate(invalid="ignore"):
        stat = np.where(usable, sin, 0.0).sum(axis=1) / pairs
    stat[pairs == 0] = np.nan
    return stat


class EstimatorManager:
    """
    距离型估计器管理器

    局部估计按行分块并行；全局聚合在收集全部局部值后按固定行序计算。
    退化邻域不会中断批量计算，而是记为 NaN 并在报告中计数。
    """

    def __init__(self, engine: ComputeEngine, neighbors: NeighborManager):
        """
        初始化估计器管理器

        Args:
            engine: 计算引擎实例
            neighbors: 近邻管理器
        """
        self.engine = engine
        self.neighbors = neighbors
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    # ------------------------------------------------------------------ MLE / MOM

    @staticmethod
    def mle_local(table: NeighborTable, row: int) -> float:
        """
        Levina–Bickel MLE 局部估计

        d̂ = [(1/(k-1)) Σ_{j<k} ln(R_k/R_j)]⁻¹

        Raises:
            DegenerateNeighborhoodError: 对数和为零（半径全部相等）
        """
        _require_k(table, 2, "MLE")
        value = _mle_from_radii(table.radii[row:row + 1])[0]
        if not np.isfinite(value):
            raise DegenerateNeighborhoodError(row, "MLE")
        return float(value)

    @staticmethod
    def mle_locals(table: NeighborTable) -> np.ndarray:
        """全部点的 MLE 局部估计，退化行为 NaN"""
        _require_k(table, 2, "MLE")
        return _mle_from_radii(table.radii)

    @staticmethod
    def mle_global(values) -> float:
        """
        MLE 全局估计：局部值的调和平均 n / Σ(1/d̂ᵢ)

        Raises:
            DegenerateDataError: 存在非正或非有限的局部值
        """
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise EmptyInputError("局部估计")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DegenerateDataError("调和平均要求所有局部估计为正的有限值")
        return float(values.size / np.sum(1.0 / values))

    @staticmethod
    def mom_local(table: NeighborTable, row: int) -> float:
        """
        矩估计局部值 d̂ = R̄/(R_k - R̄)，R̄ 为 k 个半径的均值

        Raises:
            DegenerateNeighborhoodError: R̄ = R_k
        """
        _require_k(table, 2, "MOM")
        value = _mom_from_radii(table.radii[row:row + 1])[0]
        if not np.isfinite(value):
            raise DegenerateNeighborhoodError(row, "MOM")
        return float(value)

    @staticmethod
    def mom_locals(table: NeighborTable) -> np.ndarray:
        _require_k(table, 2, "MOM")
        return _mom_from_radii(table.radii)

    # ------------------------------------------------------------------ TLE

    def _neighbor_block_rows(self, k: int, d: int) -> int:
        return max(1, min(self.engine.config.block_size, NEIGHBOR_TILE_ENTRIES // ((k + 1) * d)))

    @staticmethod
    def _tle_block(emb: EmbeddingMatrix, table: NeighborTable, rows: np.ndarray) -> np.ndarray:
        rel = emb.data[table.idx[rows]] - emb.data[rows][:, None, :]
        gram = np.einsum("bid,bjd->bij", rel, rel)
        sq = np.einsum("bii->bi", gram)
        V = np.sqrt(np.maximum(sq[:, :, None] + sq[:, None, :] - 2.0 * gram, 0.0))
        idx = np.arange(table.k)
        V[:, idx, idx] = 0.0
        values = _tle_from_geometry(table.radii[rows], V)
        equal = table.radii[rows, 0] >= table.radii[rows, -1]
        values[equal] = np.nan
        return values

    def tle_local(self, table: NeighborTable, emb: EmbeddingMatrix, row: int) -> float:
        """
        Tight Local Estimation 局部估计

        在半径 R_k 的球内，对 k 个近邻构成的所有有序点对 (i, j)（含 i = j）计算两种
        几何替代量 S_ij、T_ij；查询点到各近邻的距离各计入两次。丢弃小于
        1e-12·R_k 的项，按 MLE 同样的方式聚合 ln(R_k/·)。

        Raises:
            DegenerateNeighborhoodError: 半径全部相等或无有效项
        """
        _require_k(table, 2, "TLE")
        value = self._tle_block(emb, table, np.array([row]))[0]
        if not np.isfinite(value):
            raise DegenerateNeighborhoodError(row, "TLE")
        return float(value)

    def tle_locals(self, table: NeighborTable, emb: EmbeddingMatrix) -> np.ndarray:
        """全部点的 TLE 局部估计，退化行为 NaN"""
        _require_k(table, 2, "TLE")
        out = np.empty(table.n, dtype=np.float64)

        def run(block: slice):
            out[block] = self._tle_block(emb, table, np.arange(block.start, block.stop))

        self.engine.map_blocks(run, table.n, self._neighbor_block_rows(table.k, emb.d_ambient))
        return out

    # ------------------------------------------------------------------ TwoNN

    @staticmethod
    def twonn_global(table: NeighborTable) -> Tuple[float, np.ndarray]:
        """
        TwoNN 全局估计（Pareto 分布闭式极大似然）

        μᵢ = R₂/R₁；去除 μᵢ = 1 的点后 d̂ = n' / Σ ln μᵢ。

        Returns:
            Tuple[float, np.ndarray]: (全局估计, 每点 μ)

        Raises:
            DegenerateDataError: 所有 μᵢ = 1
        """
        _require_k(table, 2, "TwoNN")
        mus = table.radii[:, 1] / table.radii[:, 0]
        usable = mus > 1.0
        if not usable.any():
            raise DegenerateDataError("TwoNN: 所有点的 R₂/R₁ 均为 1")
        d = float(usable.sum() / np.sum(np.log(mus[usable])))
        return d, mus

    @staticmethod
    def twonn_locals(table: NeighborTable) -> np.ndarray:
        """逐点 TwoNN 值 1/ln(R₂/R₁)，μᵢ = 1 的点为 NaN"""
        _require_k(table, 2, "TwoNN")
        log_mu = np.log(table.radii[:, 1] / table.radii[:, 0])
        with np.errstate(divide="ignore"):
            values = 1.0 / log_mu
        values[~(log_mu > 0)] = np.nan
        return values

    # ------------------------------------------------------------------ CorrInt

    def corrint_global(self, emb: EmbeddingMatrix, r_lo_pct: float = 10.0, r_hi_pct: float = 50.0,
                       subsample: int = 2000, n_bins: int = 20, seed: int = 0) -> float:
        """
        Grassberger–Procaccia 关联维数

        在子样本的两两距离上，取 [r_lo_pct, r_hi_pct] 百分位间的对数等距半径，
        d̂ 为 ln C(r) 对 ln r 的最小二乘斜率。

        Args:
            emb: 嵌入（须已去重）
            r_lo_pct: 下百分位
            r_hi_pct: 上百分位
            subsample: 子样本大小
            n_bins: 半径个数
            seed: 子采样种子

        Raises:
            DuplicatePointsError: 子样本中存在重合点
            InsufficientBinsError: 可用半径少于 2 个
        """
        if not 0.0 < r_lo_pct < r_hi_pct <= 100.0:
            raise ManifoldIDConfigError(f"百分位区间无效: [{r_lo_pct}, {r_hi_pct}]")
        if emb.n < 3:
            raise NeighborCountError(2, emb.n)

        data = emb.data
        if emb.n > subsample:
            rng = self.engine.substream(seed, "estimator/corrint")
            data = data[np.sort(rng.choice(emb.n, subsample, replace=False))]

        dists = np.sort(pdist(data))
        if dists[0] <= 0.0:
            raise DuplicatePointsError(-1)

        r_lo, r_hi = np.percentile(dists, [r_lo_pct, r_hi_pct])
        if not r_hi > r_lo:
            raise InsufficientBinsError(f"关联积分半径区间退化: [{r_lo}, {r_hi}]")
        radii = np.geomspace(r_lo, r_hi, n_bins)
        counts = np.searchsorted(dists, radii, side="right")
        usable = counts > 0
        if usable.sum() < 2:
            raise InsufficientBinsError("关联积分可用半径少于 2 个")
        C = counts[usable] / dists.size
        slope, _ = np.polyfit(np.log(radii[usable]), np.log(C), 1)
        return float(slope)

    # ------------------------------------------------------------------ ESS

    @staticmethod
    def ess_invert(stat) -> np.ndarray:
        """
        将 ŝ 按参考曲线 m(d) 反演为维度（d ∈ [1, 200] 线性插值）

        Raises:
            DegenerateDataError: ŝ 超出 [m(1), 1]
        """
        stat = np.asarray(stat, dtype=np.float64)
        finite = np.isfinite(stat)
        if np.any(finite & ((stat < ESS_CURVE[0] - ESS_TOLERANCE) | (stat > 1.0 + ESS_TOLERANCE))):
            raise DegenerateDataError("ESS 统计量超出参考曲线范围 [m(1), 1]")
        return np.interp(stat, ESS_CURVE, ESS_DIMS)

    def ess_local(self, table: NeighborTable, emb: EmbeddingMatrix, row: int) -> float:
        """
        ESS 局部估计

        近邻中心化后计算两两夹角 |sin θ| 的均值 ŝ，再按 m(d) 反演。

        Raises:
            DegenerateNeighborhoodError: 中心化向量全部为零
        """
        _require_k(table, 2, "ESS")
        stat = _ess_statistic(emb.data[table.idx[row]][None])[0]
        if not np.isfinite(stat):
            raise DegenerateNeighborhoodError(row, "ESS")
        return float(self.ess_invert(stat))

    def ess_locals(self, table: NeighborTable, emb: EmbeddingMatrix) -> np.ndarray:
        """全部点的 ESS 局部估计，退化行为 NaN"""
        _require_k(table, 2, "ESS")
        out = np.empty(table.n, dtype=np.float64)

        def run(block: slice):
            out[block] = self.ess_invert(_ess_statistic(emb.data[table.idx[block]]))

        self.engine.map_blocks(run, table.n, self._neighbor_block_rows(table.k, emb.d_ambient))
        return out

    # ------------------------------------------------------------------ 聚合

    def local_values(self, estimator: Estimator, table: NeighborTable,
                     emb: EmbeddingMatrix) -> np.ndarray:
        """
        计算指定估计器的局部值

        Raises:
            ManifoldIDConfigError: 估计器无局部形式
        """
        if estimator is Estimator.MLE:
            return self.mle_locals(table)
        if estimator is Estimator.MOM:
            return self.mom_locals(table)
        if estimator is Estimator.TLE:
            return self.tle_locals(table, emb)
        if estimator is Estimator.TWONN:
            return self.twonn_locals(table)
        if estimator is Estimator.ESS:
            return self.ess_locals(table, emb)
        raise ManifoldIDConfigError(f"{estimator.display_name} 没有基于近邻表的局部估计")

    def aggregate(self, estimator: Estimator, values: np.ndarray) -> Tuple[float, int]:
        """
        聚合局部值：MLE 取调和平均，MOM/TLE/ESS 取算术平均；退化点不参与

        Returns:
            Tuple[float, int]: (全局值, 退化点数)

        Raises:
            DegenerateDataError: 所有点均退化
        """
        defined = np.isfinite(values) & (values > 0)
        degenerate = int(values.size - defined.sum())
        if degenerate:
            self.logger.warning(f"{estimator.display_name}: {degenerate} 个退化邻域未计入全局值")
        if not defined.any():
            raise DegenerateDataError(f"{estimator.display_name}: 所有邻域均退化")
        kept = values[defined]
        if estimator is Estimator.MLE:
            return self.mle_global(kept), degenerate
        return float(np.mean(kept)), degenerate

    def global_from_table(self, estimator: Estimator, table: NeighborTable,
                          emb: EmbeddingMatrix) -> IdReport:
        """
        由近邻表计算全局估计

        Returns:
            IdReport: 不含子采样统计的报告
        """
        if estimator is Estimator.TWONN:
            value, mus = self.twonn_global(table)
            degenerate = int(np.sum(mus <= 1.0))
        else:
            value, degenerate = self.aggregate(estimator, self.local_values(estimator, table, emb))
        return IdReport(estimator=estimator, global_value=value, k=table.k, n=table.n,
                        degenerate_count=degenerate)

    def local_map(self, estimator: Estimator, table: NeighborTable, emb: EmbeddingMatrix) -> LocalIdMap:
        """由近邻表生成局部 ID 图"""
        values = self.local_values(estimator, table, emb)
        return LocalIdMap(values=values, estimator=estimator, k=table.k, coords=emb.coords)

    def ksweep(self, emb: EmbeddingMatrix, estimator: Estimator, k_list: Iterable[int],
               table: Optional[NeighborTable] = None) -> List[IdReport]:
        """
        k 扫描：在 max(k_list) 处计算一次近邻表，按各 k 截断后估计

        Args:
            emb: 已去重的嵌入
            estimator: 近邻型估计器
            k_list: 近邻数列表
            table: 可复用的近邻表（k 须不小于 max(k_list)）

        Returns:
            List[IdReport]: 每个 k 一份报告，顺序与 k_list 一致

        Raises:
            NeighborCountError: max(k_list) >= n
        """
        k_list = [int(k) for k in k_list]
        if not k_list:
            raise ManifoldIDConfigError("k 列表为空")
        if estimator not in NEIGHBOR_ESTIMATORS:
            raise ManifoldIDConfigError(f"{estimator.display_name} 不依赖近邻数 k，无法进行 k 扫描")
        k_max = max(k_list)
        if k_max >= emb.n:
            raise NeighborCountError(k_max, emb.n)
        if table is None or table.k < k_max:
            table = self.neighbors.knn_exact(emb, k_max)

        reports = []
        for k in k_list:
            report = self.global_from_table(estimator, table.truncated(k), emb)
            self.logger.info(f"k 扫描 {estimator.display_name} k={k}: {report.global_value:.3f}")
            reports.append(report)
        return reports
