"""
近邻管理器

负责嵌入去重、精确 k 近邻半径与近邻方向的计算，是所有距离型与角度型估计器的公共基础。
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..core.engine import ComputeEngine
from ..core.exceptions import DuplicatePointsError, NeighborCountError
from ..types.embedding_types import EmbeddingMatrix
from ..types.geo_types import GeoPointSet
from ..types.report_types import NeighborTable


logger = logging.getLogger(__name__)

# 每个距离块的目标元素数
TILE_ENTRIES = 4_000_000
# 近似距离筛选时额外保留的候选数
CANDIDATE_MARGIN = 8


class NeighborManager:
    """
    近邻管理器

    精确暴力 kNN：按行分块，中心化后以 BLAS 近似距离筛选候选，再以逐差方式重算精确距离排序。
    候选集之外的点若不能在舍入误差界内保证更远，则整行精确重算。
    距离相等时行号小者优先，结果与朴素 O(n²) 计算一致，且与线程数无关。
    """

    def __init__(self, engine: ComputeEngine):
        """
        初始化近邻管理器

        Args:
            engine: 计算引擎实例
        """
        self.engine = engine
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    def dedup_rows(self, emb: EmbeddingMatrix,
                   points: Optional[GeoPointSet] = None) -> Tuple[EmbeddingMatrix, np.ndarray]:
        """
        去除与之前某行逐位相同的行

        Args:
            emb: 嵌入
            points: 可选点集，嵌入未绑定坐标时用其坐标补齐

        Returns:
            Tuple[EmbeddingMatrix, np.ndarray]: (去重后的嵌入, 保留的原始行号，升序)
        """
        if emb.coords is None and points is not None and points.n == emb.n:
            emb = EmbeddingMatrix(emb.data, emb.provenance, coords=points.coords)

        data = np.ascontiguousarray(emb.data)
        row_view = data.view(np.dtype((np.void, data.dtype.itemsize * data.shape[1]))).ravel()
        _, first = np.unique(row_view, return_index=True)
        kept = np.sort(first)
        if kept.size == emb.n:
            return emb, kept

        self.logger.warning(f"去重移除了 {emb.n - kept.size} 个重复行（剩余 {kept.size}）")
        result = emb.subset(kept)
        result.provenance["duplicates_removed"] = int(emb.n - kept.size)
        return result, kept

    def _block_rows(self, n: int) -> int:
        return max(1, min(self.engine.config.block_size, TILE_ENTRIES // max(n, 1)))

    @staticmethod
    def _exact_row(X: np.ndarray, row: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """整行精确距离，按 (距离, 行号) 排序取前 k"""
        diff = X - X[row]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[row] = np.inf
        order = np.lexsort((np.arange(X.shape[0]), dist))[:k]
        return order, dist[order]

    def knn_exact(self, emb: EmbeddingMatrix, k: int) -> NeighborTable:
        """
        精确欧氏 k 近邻

        Args:
            emb: 已去重的嵌入
            k: 近邻数，1 <= k < n

        Returns:
            NeighborTable: 近邻表

        Raises:
            NeighborCountError: k 不满足 1 <= k < n
            DuplicatePointsError: 出现零半径近邻（未去重）
        """
        X = emb.data
        n = emb.n
        if k < 1 or k >= n:
            raise NeighborCountError(k, n)

        # 中心化后筛选，避免大平移量下 ‖x‖² + ‖y‖² - 2x·y 的抵消误差
        Xc = X - X.mean(axis=0)
        sq_norms = np.einsum("ij,ij->i", Xc, Xc)
        eps = np.finfo(np.float64).eps
        # 近似平方距离的舍入误差界，以及中心化带来的距离误差界
        gram_tol = 2.0 * (emb.d_ambient + 2) * eps * (sq_norms + sq_norms.max())
        shift_tol = 4.0 * np.sqrt(emb.d_ambient) * eps * float(np.abs(X).max())
        m = min(k + CANDIDATE_MARGIN, n - 1)
        idx = np.empty((n, k), dtype=np.int64)
        radii = np.empty((n, k), dtype=np.float64)

        def search(block: slice):
            rows = np.arange(block.start, block.stop)
            approx = sq_norms[block, None] + sq_norms[None, :] - 2.0 * (Xc[block] @ Xc.T)
            approx[np.arange(rows.size), rows] = np.inf
            if m < n - 1:
                part = np.argpartition(approx, m, axis=1)
                cand = part[:, :m]
                # 候选集之外最小的近似平方距离
                excluded = np.take_along_axis(approx, part[:, m:m + 1], axis=1)[:, 0]
                bound = np.sqrt(np.maximum(excluded - gram_tol[block], 0.0)) - shift_tol
            else:
                cand = np.broadcast_to(np.arange(n), (rows.size, n)).copy()
                cand = cand[cand != rows[:, None]].reshape(rows.size, n - 1)
                bound = np.full(rows.size, np.inf)
            diff = X[cand] - X[block][:, None, :]
            exact = np.sqrt(np.sum(diff * diff, axis=-1))
            order = np.lexsort((cand, exact), axis=1)
            cand = np.take_along_axis(cand, order, axis=1)
            exact = np.take_along_axis(exact, order, axis=1)
            for i, row in enumerate(rows):
                # 候选集外的点不能保证严格远于第 k 个近邻时整行重算
                if exact[i, k - 1] * (1.0 + 8.0 * eps) < bound[i]:
                    idx[row] = cand[i, :k]
                    radii[row] = exact[i, :k]
                else:
                    idx[row], radii[row] = self._exact_row(X, row, k)

        self.engine.map_blocks(search, n, self._block_rows(n))

        zero = radii[:, 0] <= 0.0
        if zero.any():
            raise DuplicatePointsError(int(np.flatnonzero(zero)[0]))

        self.logger.debug(f"kNN 完成: n={n}, k={k}, D={emb.d_ambient}")
        return NeighborTable(k=k, idx=idx, radii=radii)

    @staticmethod
    def neighbor_directions(emb: EmbeddingMatrix, table: NeighborTable, row: int) -> np.ndarray:
        """
        指向各近邻的单位方向

        Args:
            emb: 嵌入
            table: 近邻表
            row: 查询行

        Returns:
            np.ndarray: 形状 (k, D)，第 j 行为 (z_j - z_i)/‖z_j - z_i‖

        Raises:
            DuplicatePointsError: 零长度方向
        """
        diff = emb.data[table.idx[row]] - emb.data[row]
        norms = np.linalg.norm(diff, axis=1)
        if np.any(norms <= 0.0):
            raise DuplicatePointsError(row)
        return diff / norms[:, None]
