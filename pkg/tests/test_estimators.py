#!/usr/bin/env python3
"""
测试距离型估计器 (EstimatorManager)

MLE、MOM、TLE、TwoNN、CorrInt、ESS 的公式、退化情形与已知维度数据上的数值。
"""

import math
import os
import sys
import unittest

import numpy as np

# 添加项目根目录到 Python 路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from manifold_id import ManifoldIDConfig, ManifoldIDManager
from manifold_id.core.exceptions import (
    DegenerateDataError,
    DegenerateNeighborhoodError,
    DuplicatePointsError,
    ManifoldIDConfigError,
    NeighborCountError,
)
from manifold_id.types import EmbeddingMatrix, Estimator, NeighborTable
from manifold_id.utils.special_functions import ess_reference_curve, reference_curve_monte_carlo


def single_row_table(radii):
    radii = np.asarray([radii], dtype=np.float64)
    k = radii.shape[1]
    return NeighborTable(k=k, idx=np.arange(1, k + 1)[None, :], radii=radii)


def _rescaled_chord(origin: np.ndarray, through: np.ndarray, query: np.ndarray, radius: float) -> float:
    """从 origin 经 through 的射线与球 B(query, radius) 相交，把 |origin-through| 按弦长缩放到 radius"""
    step = through - origin
    length = float(np.linalg.norm(step))
    direction = step / length
    offset = origin - query
    proj = float(direction @ offset)
    gap = radius * radius - float(offset @ offset)
    root = math.sqrt(max(proj * proj + gap, 0.0))
    reach = root - proj if proj <= 0.0 else gap / (root + proj)
    return radius * length / reach


def reference_tle(query: np.ndarray, neighbors: np.ndarray, eps: float = 1e-12) -> float:
    """按射线与球面求交的几何定义逐项计算 TLE，用作对照"""
    u = [float(np.linalg.norm(v - query)) for v in neighbors]
    r = u[-1]
    terms = []
    for i, vi in enumerate(neighbors):
        for j, vj in enumerate(neighbors):
            if i != j:
                terms.append(_rescaled_chord(vi, vj, query, r))
            # 经查询点反射后的近邻
            terms.append(_rescaled_chord(vi, 2.0 * query - vj, query, r))
    terms.extend(u)
    terms.extend(u)
    logs = [math.log(r / term) for term in terms if term > eps * r]
    return len(logs) / sum(logs)


class TestRadiusEstimators(unittest.TestCase):
    """MLE / MOM / TwoNN 公式测试类"""

    @classmethod
    def setUpClass(cls):
        cls.mid = ManifoldIDManager(ManifoldIDConfig(threads=1))
        cls.estimators = cls.mid.estimators

    @classmethod
    def tearDownClass(cls):
        cls.mid.close()

    def test_mle_micro_example(self):
        """radii [1, 2, 2] → 2/ln2"""
        value = self.estimators.mle_local(single_row_table([1.0, 2.0, 2.0]), 0)
        self.assertAlmostEqual(value, 2.0 / math.log(2.0), places=12)
        self.assertAlmostEqual(value, 2.8854, places=4)

    def test_mom_micro_example(self):
        """radii [1, 2, 2] → (5/3)/(1/3) = 5"""
        value = self.estimators.mom_local(single_row_table([1.0, 2.0, 2.0]), 0)
        self.assertAlmostEqual(value, 5.0, places=12)

    def test_equal_radii_are_degenerate(self):
        table = single_row_table([1.5, 1.5, 1.5, 1.5])
        with self.assertRaises(DegenerateNeighborhoodError):
            self.estimators.mle_local(table, 0)
        with self.assertRaises(DegenerateNeighborhoodError):
            self.estimators.mom_local(table, 0)
        self.assertTrue(np.isnan(self.estimators.mle_locals(table)[0]))

    def test_k_one_rejected(self):
        with self.assertRaises(ManifoldIDConfigError):
            self.estimators.mle_locals(single_row_table([1.0]))

    def test_harmonic_mean(self):
        self.assertAlmostEqual(self.estimators.mle_global([2.0, 4.0]), 2.0 / 0.75)
        with self.assertRaises(DegenerateDataError):
            self.estimators.mle_global([2.0, float("nan")])

    def test_aggregate_skips_degenerate(self):
        """退化点不参与聚合并计数；全部退化时报错"""
        value, degenerate = self.estimators.aggregate(Estimator.MOM, np.array([2.0, np.nan, 4.0]))
        self.assertAlmostEqual(value, 3.0)
        self.assertEqual(degenerate, 1)
        with self.assertRaises(DegenerateDataError):
            self.estimators.aggregate(Estimator.MLE, np.array([np.nan, np.nan]))

    def test_twonn_formula(self):
        radii = np.array([[1.0, 2.0], [1.0, 1.0], [2.0, 2.0 * math.e]])
        table = NeighborTable(k=2, idx=np.zeros((3, 2), dtype=np.int64), radii=radii)
        d, mus = self.estimators.twonn_global(table)
        self.assertAlmostEqual(d, 2.0 / (math.log(2.0) + 1.0))
        np.testing.assert_allclose(mus, [2.0, 1.0, math.e])
        locals_ = self.estimators.twonn_locals(table)
        self.assertAlmostEqual(locals_[2], 1.0)
        self.assertTrue(np.isnan(locals_[1]))

    def test_scale_invariance(self):
        """整体缩放嵌入不改变局部估计"""
        X = np.random.default_rng(0).standard_normal((200, 3))
        emb, scaled = EmbeddingMatrix(X), EmbeddingMatrix(X * 7.5)
        table = self.mid.neighbors.knn_exact(emb, 10)
        table_s = self.mid.neighbors.knn_exact(scaled, 10)
        for est in (Estimator.MLE, Estimator.MOM, Estimator.TLE, Estimator.TWONN, Estimator.ESS):
            np.testing.assert_allclose(self.estimators.local_values(est, table, emb),
                                       self.estimators.local_values(est, table_s, scaled),
                                       rtol=1e-9, err_msg=f"{est.display_name} 缩放后改变")

    def test_isometry_invariance(self):
        """随机正交变换加平移不改变局部估计"""
        rng = np.random.default_rng(12)
        X = rng.standard_normal((300, 4))
        Q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        emb, moved = EmbeddingMatrix(X), EmbeddingMatrix(X @ Q + rng.normal(0.0, 5.0, 4))
        table = self.mid.neighbors.knn_exact(emb, 12)
        table_m = self.mid.neighbors.knn_exact(moved, 12)
        np.testing.assert_array_equal(table.idx, table_m.idx)
        for est in (Estimator.MLE, Estimator.MOM, Estimator.TLE, Estimator.TWONN, Estimator.ESS):
            np.testing.assert_allclose(self.estimators.local_values(est, table, emb),
                                       self.estimators.local_values(est, table_m, moved),
                                       rtol=1e-8, err_msg=f"{est.display_name} 等距变换后改变")


class TestKnownDimension(unittest.TestCase):
    """已知维度数据上的估计测试类"""

    @classmethod
    def setUpClass(cls):
        cls.mid = ManifoldIDManager(ManifoldIDConfig(threads=2, block_size=256))
        cls.estimators = cls.mid.estimators
        rng = np.random.default_rng(11)
        cls.square = EmbeddingMatrix(rng.random((5000, 2)))
        cls.square_table = cls.mid.neighbors.knn_exact(cls.square, 20)
        # 嵌入 R^6 的二维平面
        basis = np.linalg.qr(rng.standard_normal((6, 2)))[0]
        cls.plane = EmbeddingMatrix(rng.random((4000, 2)) @ basis.T)
        cls.plane_table = cls.mid.neighbors.knn_exact(cls.plane, 20)

    @classmethod
    def tearDownClass(cls):
        cls.mid.close()

    def test_mle_on_square(self):
        report = self.estimators.global_from_table(Estimator.MLE, self.square_table, self.square)
        self.assertAlmostEqual(report.global_value, 2.0, delta=0.15)
        self.assertEqual(report.degenerate_count, 0)

    def test_mom_on_square(self):
        report = self.estimators.global_from_table(Estimator.MOM, self.square_table, self.square)
        # k 个半径的均值含 R_k，有限 k 下略高于 2
        self.assertAlmostEqual(report.global_value, 2.15, delta=0.25)

    def test_twonn_on_square(self):
        report = self.estimators.global_from_table(Estimator.TWONN, self.square_table, self.square)
        self.assertAlmostEqual(report.global_value, 2.0, delta=0.15)

    def test_tle_on_plane(self):
        report = self.estimators.global_from_table(Estimator.TLE, self.plane_table, self.plane)
        self.assertAlmostEqual(report.global_value, 2.0, delta=0.35)

    def test_ess_on_plane(self):
        report = self.estimators.global_from_table(Estimator.ESS, self.plane_table, self.plane)
        self.assertGreater(report.global_value, 1.6)
        self.assertLess(report.global_value, 2.8)

    def test_ksweep_truncates_one_table(self):
        """k 扫描与逐个 k 单独计算一致"""
        reports = self.estimators.ksweep(self.square, Estimator.MLE, [5, 10, 20], self.square_table)
        self.assertEqual([r.k for r in reports], [5, 10, 20])
        direct = self.estimators.global_from_table(
            Estimator.MLE, self.mid.neighbors.knn_exact(self.square, 10), self.square)
        self.assertAlmostEqual(reports[1].global_value, direct.global_value, places=12)

    def test_ksweep_rejects_large_k(self):
        small = EmbeddingMatrix(np.random.default_rng(1).random((30, 2)))
        with self.assertRaises(NeighborCountError):
            self.estimators.ksweep(small, Estimator.MLE, [5, 30])
        with self.assertRaises(ManifoldIDConfigError):
            self.estimators.ksweep(small, Estimator.FISHERS, [5])


class TestTightLocalEstimator(unittest.TestCase):
    """TLE 测试类"""

    @classmethod
    def setUpClass(cls):
        cls.mid = ManifoldIDManager(ManifoldIDConfig(threads=1, block_size=16))
        cls.estimators = cls.mid.estimators

    @classmethod
    def tearDownClass(cls):
        cls.mid.close()

    def test_matches_reference_implementation(self):
        """20 个随机二维实例上与射线求交的几何定义一致（含 i = j 的反射项）"""
        rng = np.random.default_rng(7)
        for trial in range(20):
            emb = EmbeddingMatrix(rng.random((40, 2)))
            k = int(rng.integers(3, 12))
            table = self.mid.neighbors.knn_exact(emb, k)
            values = self.estimators.tle_locals(table, emb)
            for row in (0, 17, 39):
                expected = reference_tle(emb.data[row], emb.data[table.idx[row]])
                self.assertAlmostEqual(values[row], expected, delta=1e-6 * expected,
                                       msg=f"第 {trial} 个实例第 {row} 行 TLE 不一致")
                self.assertAlmostEqual(self.estimators.tle_local(table, emb, row), values[row], places=10)

    def test_equal_radii_degenerate(self):
        """所有近邻等距时不可定义"""
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        emb = EmbeddingMatrix(X)
        table = self.mid.neighbors.knn_exact(emb, 4)
        with self.assertRaises(DegenerateNeighborhoodError):
            self.estimators.tle_local(table, emb, 0)


class TestCorrelationIntegral(unittest.TestCase):
    """关联积分测试类"""

    @classmethod
    def setUpClass(cls):
        cls.mid = ManifoldIDManager(ManifoldIDConfig(threads=1))
        cls.estimators = cls.mid.estimators

    @classmethod
    def tearDownClass(cls):
        cls.mid.close()

    def test_interval_is_one_dimensional(self):
        emb = EmbeddingMatrix(np.random.default_rng(0).random((3000, 1)))
        self.assertAlmostEqual(self.estimators.corrint_global(emb), 1.0, delta=0.1)

    def test_square_above_interval(self):
        """二维数据的关联维数明显高于一维"""
        rng = np.random.default_rng(1)
        line = self.estimators.corrint_global(EmbeddingMatrix(rng.random((3000, 1))))
        square = self.estimators.corrint_global(EmbeddingMatrix(rng.random((3000, 2))))
        self.assertGreater(square, line + 0.4)
        self.assertLess(square, 2.2)

    def test_seed_reproducible(self):
        emb = EmbeddingMatrix(np.random.default_rng(2).random((2500, 2)))
        self.assertEqual(self.estimators.corrint_global(emb, seed=3),
                         self.estimators.corrint_global(emb, seed=3))

    def test_duplicates_rejected(self):
        X = np.vstack([np.random.default_rng(3).random((50, 2)), [[0.5, 0.5], [0.5, 0.5]]])
        with self.assertRaises(DuplicatePointsError):
            self.estimators.corrint_global(EmbeddingMatrix(X))

    def test_bad_percentiles(self):
        emb = EmbeddingMatrix(np.random.default_rng(4).random((50, 2)))
        with self.assertRaises(ManifoldIDConfigError):
            self.estimators.corrint_global(emb, r_lo_pct=60.0, r_hi_pct=50.0)


class TestExpectedSimplexSkewness(unittest.TestCase):
    """ESS 测试类"""

    @classmethod
    def setUpClass(cls):
        cls.mid = ManifoldIDManager(ManifoldIDConfig(threads=1))
        cls.estimators = cls.mid.estimators

    @classmethod
    def tearDownClass(cls):
        cls.mid.close()

    def test_reference_curve_closed_form(self):
        curve = ess_reference_curve(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(curve, [0.0, 2.0 / math.pi, math.pi / 4.0], atol=1e-12)

    def test_reference_curve_monte_carlo(self):
        """闭式曲线与 Monte Carlo 估计一致"""
        dims = [2, 5, 20]
        mc = reference_curve_monte_carlo(dims, n_pairs=200_000, seed=0)
        np.testing.assert_allclose(mc, ess_reference_curve(np.array(dims, dtype=float)), atol=0.005)

    def test_invert_two_over_pi(self):
        self.assertAlmostEqual(float(self.estimators.ess_invert(2.0 / math.pi)), 2.0, delta=1e-6)

    def test_invert_out_of_range(self):
        with self.assertRaises(DegenerateDataError):
            self.estimators.ess_invert(1.5)

    def test_collinear_neighbors_give_one(self):
        """共线近邻的 ŝ = 0，反演得 1"""
        emb = EmbeddingMatrix(np.arange(30.0)[:, None] * np.array([[1.0, 2.0, -1.0]]))
        table = self.mid.neighbors.knn_exact(emb, 5)
        self.assertAlmostEqual(self.estimators.ess_local(table, emb, 10), 1.0, places=5)


if __name__ == "__main__":
    unittest.main(verbosity=2)
