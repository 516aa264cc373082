#!/usr/bin/env python3
"""
测试实验流水线与命令行 (ExperimentManager / manifold_id.cli)

在临时目录中小规模运行各命令，检查输出文件、退出码与可复现性。
"""

import json
import os
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

# 添加项目根目录到 Python 路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from manifold_id import EncoderSpec, Estimator, ManifoldIDConfig, ManifoldIDManager, RunConfig
from manifold_id.cli import main
from manifold_id.core.exceptions import ManifoldIDConfigError
from manifold_id.core.manager import quick_global_id
from manifold_id.managers.experiments import subsample_indices
from manifold_id.utils.binary_formats import BinaryCodec


class TestCommandLine(unittest.TestCase):
    """命令行命令测试类"""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def run_cli(self, *argv) -> int:
        return main(list(argv) + ["--out", self.out, "--threads", "1", "--log-level", "WARNING"])

    def read_csv(self, name: str) -> pd.DataFrame:
        return pd.read_csv(os.path.join(self.out, name))

    def test_global_command(self):
        code = self.run_cli("global", "--n", "600", "--k", "10", "--estimators", "mle,twonn,fishers",
                            "--subsamples", "2", "--subsample-size", "200")
        self.assertEqual(code, 0)
        frame = self.read_csv("global_id.csv")
        self.assertEqual(list(frame["estimator"]), ["MLE", "TwoNN", "FisherS"])
        self.assertTrue(np.all(np.isfinite(frame["subsample_std"])))
        self.assertTrue(os.path.exists(os.path.join(self.out, "global_id.txt")))
        profile = self.read_csv("profile.csv")
        self.assertEqual(list(profile.columns), ["alpha", "p_bar", "n_hat"])

    def test_local_command(self):
        self.assertEqual(self.run_cli("local", "--n", "500", "--k", "10"), 0)
        frame = self.read_csv("local_mle.csv")
        self.assertEqual(list(frame.columns), ["lon", "lat", "id"])
        self.assertEqual(len(frame), 500)
        with open(os.path.join(self.out, "local_mle.geojson"), encoding="utf-8") as f:
            collection = json.load(f)
        self.assertEqual(len(collection["features"]), 500)
        self.assertEqual(len(self.read_csv("local_mle_bands.csv")), 10)

    def test_bands_command(self):
        self.assertEqual(self.run_cli("bands", "--n", "400", "--k", "10", "--estimators", "mle"), 0)
        frame = self.read_csv("bands.csv")
        self.assertEqual(list(frame["band"]), list(range(10)))
        flagged = frame["flagged"].astype(bool)
        self.assertTrue(frame.loc[flagged, "global"].isna().all())
        self.assertTrue(np.isfinite(frame.loc[~flagged, "global"]).all())
        self.assertEqual(int(frame["n"].sum()), 400)

    def test_ksweep_command(self):
        """FisherS 不依赖 k，k 扫描中被跳过"""
        code = self.run_cli("ksweep", "--n", "400", "--k-list", "5,10", "--estimators", "mle,fishers")
        self.assertEqual(code, 0)
        frame = self.read_csv("ksweep.csv")
        self.assertEqual(list(frame["k"]), [5, 10])
        self.assertEqual(set(frame["estimator"]), {"MLE"})

    def test_resolution_sweep_command(self):
        code = self.run_cli("sweep", "--sweep", "rff-m", "--sweep-values", "1,2", "--n", "400")
        self.assertEqual(code, 0)
        frame = self.read_csv("resolution_rff_m.csv")
        self.assertEqual(list(frame["value"]), [1, 2])
        self.assertTrue((frame["global"] > 0).all())

    def test_validate_command(self):
        """小规模验证不要求通过阈值，只检查表格结构"""
        code = self.run_cli("validate", "--n", "300", "--seeds", "1", "--k", "10")
        self.assertIn(code, (0, 1))
        frame = self.read_csv("validate.csv")
        self.assertEqual(len(frame), 16)
        self.assertEqual(list(frame["stage"].unique()), ["raw", "sh", "sh+linear", "sh+siren"])
        self.assertTrue(os.path.exists(os.path.join(self.out, "validate.txt")))

    def test_config_errors_exit_two(self):
        self.assertEqual(self.run_cli("global", "--n", "10", "--k", "20"), 2)
        self.assertEqual(self.run_cli("global", "--n", "100", "--estimators", "pca"), 2)
        self.assertEqual(self.run_cli("global", "--embeddings", os.path.join(self.out, "missing.emb1")), 2)

    def test_bad_embeddings_file_exits_four(self):
        path = os.path.join(self.out, "bad.emb1")
        with open(path, "wb") as f:
            f.write(b"XXXX" + bytes(40))
        self.assertEqual(self.run_cli("global", "--embeddings", path, "--estimators", "mle"), 4)

    def test_degenerate_data_exits_three(self):
        """整数格点上所有点 R₂ = R₁，TwoNN 无定义"""
        xs, ys = np.meshgrid(np.arange(10.0), np.arange(10.0))
        path = os.path.join(self.out, "lattice.emb1")
        with open(path, "wb") as f:
            f.write(BinaryCodec.encode_embeddings(np.column_stack([xs.ravel(), ys.ravel()])))
        code = self.run_cli("global", "--embeddings", path, "--estimators", "twonn",
                            "--k", "5", "--subsamples", "0")
        self.assertEqual(code, 3)

    def test_external_embeddings_match_library(self):
        """CLI 读取 EMB1 文件的结果与直接调用库一致"""
        with ManifoldIDManager(ManifoldIDConfig(threads=1)) as mid:
            emb = mid.encode(mid.sample("sphere", 400, seed=3), EncoderSpec(kind="sh", L=3))
            path = os.path.join(self.out, "model.emb1")
            with open(path, "wb") as f:
                f.write(mid.encoders.save_embeddings(emb))
            expected = mid.global_ids(mid.load_embeddings(path), "mle,twonn", k=10)

        code = self.run_cli("global", "--embeddings", path, "--estimators", "mle,twonn",
                            "--k", "10", "--subsamples", "0")
        self.assertEqual(code, 0)
        frame = self.read_csv("global_id.csv")
        np.testing.assert_allclose(frame["global"].to_numpy(),
                                   [r.global_value for r in expected], rtol=1e-9)
        self.assertEqual(list(frame["encoder"]), [path, path])


class TestReducedValidation(unittest.TestCase):
    """缩小规模的地面真值验证（n = 3000，单个种子）"""

    @classmethod
    def setUpClass(cls):
        cls._tmp = tempfile.TemporaryDirectory()
        cls.mid = ManifoldIDManager(ManifoldIDConfig(threads=2, block_size=256))
        config = RunConfig(command="validate", n=3000, k=20, seeds=1, out_dir=cls._tmp.name)
        cls.result = cls.mid.run(config)
        cls.means = cls.result.table.set_index(["stage", "estimator"])["mean"]

    @classmethod
    def tearDownClass(cls):
        cls.mid.close()
        cls._tmp.cleanup()

    def test_table_is_complete_and_finite(self):
        self.assertEqual(len(self.result.table), 16)
        self.assertTrue(np.all(np.isfinite(self.result.table["mean"])))
        self.assertEqual(set(self.result.mae), {"MLE", "MOM", "TLE", "FisherS"})

    def test_raw_coordinates_near_two(self):
        self.assertGreaterEqual(self.means[("raw", "FisherS")], 1.8)
        self.assertLessEqual(self.means[("raw", "FisherS")], 2.2)
        for name in ("MLE", "MOM", "TLE"):
            self.assertGreaterEqual(self.means[("raw", name)], 1.8, name)
            self.assertLessEqual(self.means[("raw", name)], 2.6, name)

    def test_harmonic_stages_raise_fishers(self):
        """球谐阶段的 FisherS 由 Gram 核主瓣决定，远高于 2 且被判为未达标"""
        for stage in ("sh", "sh+linear", "sh+siren"):
            self.assertGreater(self.means[(stage, "FisherS")], 4.0, stage)
        self.assertFalse(self.result.passed)
        self.assertTrue(any("FisherS 阶段 sh" in f for f in self.result.failures))

    def test_sh_resolution_sweep_is_monotone(self):
        """SH+SIREN 的 FisherS 随 L 不减"""
        with tempfile.TemporaryDirectory() as tmp:
            config = RunConfig(command="sweep", sweep="sh", n=3000, out_dir=tmp)
            reports = self.mid.run(config)
        values = [r.global_value for r in reports]
        self.assertEqual([r.extra["value"] for r in reports], [10, 20, 40])
        self.assertTrue(all(a <= b for a, b in zip(values, values[1:])), f"FisherS 未随 L 单调: {values}")


class TestExperimentManager(unittest.TestCase):
    """实验管理器测试类"""

    def test_subsample_indices(self):
        rng = np.random.default_rng(0)
        disjoint = subsample_indices(100, 3, 30, rng)
        self.assertEqual([s.size for s in disjoint], [30, 30, 30])
        self.assertEqual(np.unique(np.concatenate(disjoint)).size, 90)

        overlapping = subsample_indices(100, 3, 50, rng)
        self.assertEqual([s.size for s in overlapping], [50, 50, 50])
        for s in overlapping:
            self.assertEqual(np.unique(s).size, 50)

        self.assertEqual(subsample_indices(10, 1, 50, rng)[0].size, 10)
        with self.assertRaises(ManifoldIDConfigError):
            subsample_indices(10, -1, 5, rng)

    def test_global_table_independent_of_threads(self):
        config = RunConfig(n=800, k=10, seed=5, subsamples=2, subsample_size=300,
                           estimators=[Estimator.MLE, Estimator.TWONN, Estimator.TLE, Estimator.FISHERS])
        results = []
        for threads in (1, 4):
            with ManifoldIDManager(ManifoldIDConfig(threads=threads, block_size=64)) as mid:
                emb = mid.experiments.prepare_embedding(config)
                results.append(mid.experiments.global_table(emb, config))
        for a, b in zip(*results):
            self.assertEqual(a.global_value, b.global_value, f"{a.estimator.display_name} 全局值不一致")
            self.assertEqual(a.subsample_values, b.subsample_values)

    def test_estimator_set_does_not_change_sampling(self):
        """改变估计器集合不扰动采样子流"""
        with ManifoldIDManager(ManifoldIDConfig(threads=1)) as mid:
            a = mid.experiments.prepare_embedding(RunConfig(n=200, k=5, estimators=[Estimator.MLE]))
            b = mid.experiments.prepare_embedding(RunConfig(n=200, k=5))
        np.testing.assert_array_equal(a.data, b.data)

    def test_corrint_has_no_local_form(self):
        with ManifoldIDManager(ManifoldIDConfig(threads=1)) as mid:
            emb = mid.encode(mid.sample("fibonacci", 100))
            with self.assertRaises(ManifoldIDConfigError):
                mid.local_id(emb, "corrint", k=5)

    def test_quick_global_id(self):
        _, report = quick_global_id(n=500, estimator="mle")
        self.assertIs(report.estimator, Estimator.MLE)
        self.assertGreater(report.global_value, 1.5)
        self.assertLess(report.global_value, 2.8)


if __name__ == "__main__":
    unittest.main(verbosity=2)
