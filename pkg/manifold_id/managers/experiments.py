"""
实验流水线管理器

把 采样 → 编码 / 外部嵌入读取 → 去重 → 估计 → 导出 串成命令：
全局 ID 表、局部 ID 图、纬度带分析、k 扫描、地面真值验证与分辨率扫描。
"""

import logging
import time
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..core.config import RunConfig
from ..core.engine import ComputeEngine
from ..core.exceptions import ManifoldIDConfigError, NeighborCountError
from ..types.embedding_types import EmbeddingMatrix, EncoderSpec
from ..types.report_types import (
    Estimator,
    IdReport,
    LocalIdMap,
    NeighborTable,
    SeparabilityProfile,
    ValidationResult,
)
from ..utils.exporters import ReportExporter, write_outputs
from ..utils.spherical import band_label, latitude_band
from .encoders import EncoderManager
from .estimators import NEIGHBOR_ESTIMATORS, EstimatorManager
from .fishers import FisherSManager, validate_alphas
from .neighbors import NeighborManager
from .sampling import SamplingManager


logger = logging.getLogger(__name__)

N_BANDS = 10
TRUE_ID = 2.0

# 分辨率扫描：名称 → (编码器字段, 默认取值, 固定的编码器参数)
RESOLUTION_SWEEPS = {
    "sh": ("L", (10, 20, 40), {"kind": "sh", "head": "siren"}),
    "rff-sigma": ("sigma_max", (2.0 ** 8, 2.0 ** 12, 2.0 ** 16), {"kind": "rff"}),
    "rff-m": ("M", (1, 2, 4, 8), {"kind": "rff"}),
    "multiscale": ("S", (2, 4, 8, 16, 32), {"kind": "multiscale"}),
}
INTEGER_FIELDS = ("L", "M", "S")

VALIDATION_STAGES = (
    ("raw", {"kind": "raw"}),
    ("sh", {"kind": "sh", "L": 40}),
    ("sh+linear", {"kind": "sh", "L": 40, "head": "linear", "head_depth": 1}),
    ("sh+siren", {"kind": "sh", "L": 40, "head": "siren"}),
)
VALIDATION_ESTIMATORS = (Estimator.MLE, Estimator.MOM, Estimator.TLE, Estimator.FISHERS)
VALIDATION_MAE_LIMITS = {
    Estimator.MLE: 0.30,
    Estimator.MOM: 0.30,
    Estimator.TLE: 0.40,
    Estimator.FISHERS: 0.08,
}
FISHERS_STAGE_RANGE = (1.95, 2.15)


def subsample_indices(n: int, count: int, size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """
    子采样行号

    count·size <= n 时取互不相交的子样本；否则每个子样本独立无放回抽取 min(size, n) 行。

    Returns:
        List[np.ndarray]: 每个子样本的升序行号
    """
    if count < 0 or size < 1:
        raise ManifoldIDConfigError(f"子采样参数无效: {count} × {size}")
    size = min(size, n)
    if count * size <= n:
        perm = rng.permutation(n)
        return [np.sort(perm[i * size:(i + 1) * size]) for i in range(count)]
    logger.info(f"{count} × {size} 超过 n={n}，子样本改为各自独立抽取")
    return [np.sort(rng.choice(n, size, replace=False)) for _ in range(count)]


class ExperimentManager:
    """
    实验流水线管理器

    所有随机性都来自 RunConfig.seed 派生的带标签子流，改变估计器集合不会扰动采样结果。
    """

    def __init__(self, engine: ComputeEngine, sampling: SamplingManager, encoders: EncoderManager,
                 neighbors: NeighborManager, estimators: EstimatorManager, fishers: FisherSManager):
        """
        初始化实验管理器

        Args:
            engine: 计算引擎实例
            sampling: 采样管理器
            encoders: 编码器管理器
            neighbors: 近邻管理器
            estimators: 距离型估计器管理器
            fishers: FisherS 管理器
        """
        self.engine = engine
        self.sampling = sampling
        self.encoders = encoders
        self.neighbors = neighbors
        self.estimators = estimators
        self.fishers = fishers
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    # ------------------------------------------------------------------ 数据准备

    def prepare_embedding(self, config: RunConfig, seed: Optional[int] = None,
                          spec: Optional[EncoderSpec] = None) -> EmbeddingMatrix:
        """
        按配置得到去重后的嵌入

        指定 embeddings_path 时读取外部文件，否则采样并编码。

        Args:
            config: 运行配置
            seed: 覆盖采样种子
            spec: 覆盖编码器参数

        Returns:
            EmbeddingMatrix: 去重后的嵌入
        """
        if config.embeddings_path:
            emb = self.encoders.load_embeddings_file(config.embeddings_path)
        else:
            seed = config.seed if seed is None else seed
            mask = self.sampling.load_mask_file(config.mask_path) if config.mask_path else None
            points = self.sampling.sample(config.scheme, config.n, seed, mask,
                                          config.grid_width, config.grid_height)
            emb = self.encoders.encode(points, spec or config.encoder)
        emb, _ = self.neighbors.dedup_rows(emb)
        return emb

    def _table(self, emb: EmbeddingMatrix, k: int, table: Optional[NeighborTable]) -> NeighborTable:
        if k >= emb.n:
            raise NeighborCountError(k, emb.n)
        if table is None or table.k < k:
            table = self.neighbors.knn_exact(emb, k)
        return table.truncated(k) if table.k > k else table

    @staticmethod
    def _annotate(report: IdReport, emb: EmbeddingMatrix, seed: int) -> IdReport:
        report.scheme = str(emb.provenance.get("scheme", "external"))
        report.encoder = str(emb.provenance.get("encoder", emb.provenance.get("source", "external")))
        report.seed = seed
        return report

    # ------------------------------------------------------------------ 统一估计入口

    def estimate_global(self, emb: EmbeddingMatrix, estimator: Estimator, k: int,
                        table: Optional[NeighborTable] = None, seed: int = 0,
                        alphas=None, profiles: Optional[List[SeparabilityProfile]] = None) -> IdReport:
        """
        任一估计器的全局值

        Args:
            emb: 已去重的嵌入
            estimator: 估计器
            k: 近邻数（FisherS、CorrInt 忽略）
            table: 可复用的近邻表
            seed: CorrInt 子采样种子
            alphas: FisherS 的 α 网格
            profiles: 若给出，FisherS 的可分性曲线追加到该列表

        Returns:
            IdReport: 全局报告
        """
        if estimator is Estimator.FISHERS:
            report, prof = self.fishers.fishers_global(emb, alphas)
            if profiles is not None:
                profiles.append(prof)
            return report
        if estimator is Estimator.CORRINT:
            value = self.estimators.corrint_global(emb, seed=seed)
            return IdReport(estimator=estimator, global_value=value, n=emb.n)
        return self.estimators.global_from_table(estimator, self._table(emb, k, table), emb)

    def estimate_local(self, emb: EmbeddingMatrix, estimator: Estimator, k: int,
                       table: Optional[NeighborTable] = None, alpha: Optional[float] = None,
                       alphas=None) -> LocalIdMap:
        """
        任一估计器的逐点局部值

        Raises:
            ManifoldIDConfigError: CorrInt 没有局部形式
        """
        if estimator is Estimator.CORRINT:
            raise ManifoldIDConfigError("CorrInt 只有全局形式")
        if estimator is Estimator.FISHERS:
            grid = validate_alphas(alphas)
            if alpha is not None:
                grid = np.union1d(grid, validate_alphas([alpha]))
            prof = self.fishers.profile(emb, grid)
            return self.fishers.fishers_local(emb, alpha, prof=prof)
        return self.estimators.local_map(estimator, self._table(emb, k, table), emb)

    def global_table(self, emb: EmbeddingMatrix, config: RunConfig,
                     profiles: Optional[List[SeparabilityProfile]] = None) -> List[IdReport]:
        """
        全局估计表：全量值 + 子采样均值 ± 标准差

        近邻表对全量与每个子样本各计算一次，在所有近邻型估计器间共享。
        profiles 只收集全量数据上的 FisherS 曲线。
        """
        k = config.k
        need_table = any(e.uses_neighbors for e in config.estimators)
        table = self._table(emb, k, None) if need_table else None

        rng = self.engine.substream(config.seed, "experiments/subsample")
        subsets = subsample_indices(emb.n, config.subsamples, config.subsample_size, rng) \
            if config.subsamples else []
        sub_embs = [emb.subset(idx) for idx in subsets]
        sub_tables = []
        for sub in sub_embs:
            if need_table and k < sub.n:
                sub_tables.append(self.neighbors.knn_exact(sub, k))
            else:
                sub_tables.append(None)

        reports = []
        for estimator in config.estimators:
            report = self.estimate_global(emb, estimator, k, table, config.seed,
                                          config.alpha_grid, profiles)
            values = []
            for i, (sub, sub_table) in enumerate(zip(sub_embs, sub_tables)):
                if estimator.uses_neighbors and sub_table is None:
                    self.logger.warning(f"子样本 {i} 只有 {sub.n} 个点，不足以计算 k={k} 近邻，已跳过")
                    continue
                sub_report = self.estimate_global(sub, estimator, k, sub_table,
                                                  config.seed + i + 1, config.alpha_grid)
                values.append(sub_report.global_value)
            if values:
                report.subsample_values = values
                report.subsample_mean = float(np.mean(values))
                report.subsample_std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            report.k = k if estimator.uses_neighbors else None
            reports.append(self._annotate(report, emb, config.seed))
            self.logger.info(report.summary())
        return reports

    # ------------------------------------------------------------------ 命令

    def cmd_global_id(self, config: RunConfig) -> List[IdReport]:
        """
        全局 ID 表

        输出 global_id.csv 与 global_id.txt；含 FisherS 时另输出 profile.csv。

        Returns:
            List[IdReport]: 每个估计器一份报告
        """
        config.validate()
        started = time.perf_counter()
        emb = self.prepare_embedding(config)
        profiles: List[SeparabilityProfile] = []
        reports = self.global_table(emb, config, profiles)
        files = {
            "global_id.csv": ReportExporter.reports_to_csv(reports),
            "global_id.txt": ReportExporter.reports_to_table(reports),
        }
        if profiles:
            files["profile.csv"] = ReportExporter.profile_to_csv(profiles[0])
        write_outputs(config.out_dir, files)
        self.logger.info(f"global 完成，用时 {time.perf_counter() - started:.1f}s")
        return reports

    def cmd_local_id(self, config: RunConfig) -> Dict[str, LocalIdMap]:
        """
        局部 ID 图

        每个估计器输出 local_<估计器>.csv、local_<估计器>_bands.csv，
        嵌入带坐标时另输出 local_<估计器>.geojson。

        Returns:
            Dict[str, LocalIdMap]: 估计器名 → 局部 ID 图
        """
        config.validate()
        emb = self.prepare_embedding(config)
        need_table = any(e.uses_neighbors for e in config.estimators)
        table = self._table(emb, config.k, None) if need_table else None

        maps: Dict[str, LocalIdMap] = {}
        files: Dict[str, str] = {}
        for estimator in config.estimators:
            local_map = self.estimate_local(emb, estimator, config.k, table, alphas=config.alpha_grid)
            name = estimator.value
            maps[name] = local_map
            files[f"local_{name}.csv"] = ReportExporter.local_map_to_csv(local_map)
            if local_map.coords is not None:
                files[f"local_{name}.geojson"] = ReportExporter.local_map_to_geojson(local_map)
                files[f"local_{name}_bands.csv"] = local_map.band_summary(N_BANDS).to_csv(
                    index=False, float_format="%.10g")
            if local_map.undefined_count:
                self.logger.warning(f"{estimator.display_name}: {local_map.undefined_count} 个点局部 ID 不可定义")
        write_outputs(config.out_dir, files)
        return maps

    def cmd_bands(self, config: RunConfig) -> List[IdReport]:
        """
        纬度带分析：10 个 18° 纬度带（由南到北）各自的全局 ID

        点数不足 k+1 的纬度带标记为 flagged，不中断命令。

        Returns:
            List[IdReport]: extra 中含 band、label、flagged
        """
        config.validate()
        emb = self.prepare_embedding(config)
        if emb.coords is None:
            raise ManifoldIDConfigError("纬度带分析需要带坐标的嵌入（EMB1 文件不含坐标，请使用 CSV）")
        bands = latitude_band(emb.coords[:, 1], N_BANDS)

        reports = []
        for band in range(N_BANDS):
            rows = np.flatnonzero(bands == band)
            sub = emb.subset(rows) if rows.size else None
            for estimator in config.estimators:
                minimum = config.k + 1 if estimator.uses_neighbors else 3
                extra = {"band": band, "label": band_label(band, N_BANDS), "flagged": False}
                if rows.size < minimum:
                    self.logger.warning(f"纬度带 {extra['label']} 只有 {rows.size} 个点，"
                                        f"{estimator.display_name} 已标记跳过")
                    extra["flagged"] = True
                    report = IdReport(estimator=estimator, global_value=float("nan"), n=int(rows.size))
                else:
                    report = self.estimate_global(sub, estimator, config.k, None,
                                                  config.seed, config.alpha_grid)
                report.k = config.k if estimator.uses_neighbors else None
                report.extra.update(extra)
                reports.append(self._annotate(report, emb, config.seed))

        write_outputs(config.out_dir, {
            "bands.csv": ReportExporter.reports_to_csv(reports),
            "bands.txt": ReportExporter.reports_to_table(reports),
        })
        return reports

    def cmd_ksweep(self, config: RunConfig) -> List[IdReport]:
        """
        k 扫描（默认 k ∈ {5, 10, 20, 50, 100, 200}）

        FisherS 与 CorrInt 不依赖 k，跳过并给出警告。

        Raises:
            NeighborCountError: max(k_list) >= n
        """
        config.validate()
        estimators = [e for e in config.estimators if e in NEIGHBOR_ESTIMATORS]
        for skipped in set(config.estimators) - set(estimators):
            self.logger.warning(f"{skipped.display_name} 不依赖 k，k 扫描中跳过")
        if not estimators:
            raise ManifoldIDConfigError("k 扫描需要至少一个近邻型估计器")

        emb = self.prepare_embedding(config)
        k_max = max(config.k_list)
        table = self._table(emb, k_max, None)

        reports = []
        for estimator in estimators:
            for report in self.estimators.ksweep(emb, estimator, config.k_list, table):
                reports.append(self._annotate(report, emb, config.seed))

        write_outputs(config.out_dir, {
            "ksweep.csv": ReportExporter.reports_to_csv(reports),
            "ksweep.txt": ReportExporter.reports_to_table(reports),
        })
        return reports

    def cmd_validate(self, config: RunConfig) -> ValidationResult:
        """
        地面真值验证（真实 ID = 2）

        四个阶段（原始坐标、SH(L=40)、SH+linear、SH+SIREN）× {MLE, MOM, TLE, FisherS}，
        每个阶段在 config.seeds 个种子上采样均匀球面点，报告均值 ± 标准差以及相对 2.0 的 MAE。

        Returns:
            ValidationResult: passed 为 False 时 failures 给出未达标项
        """
        config.validate()
        rows = []
        for stage, overrides in VALIDATION_STAGES:
            for offset in range(config.seeds):
                seed = config.seed + offset
                points = self.sampling.sample_uniform_sphere(config.n, seed)
                emb = self.encoders.encode(points, EncoderSpec(**{**overrides, "seed": seed}))
                emb, _ = self.neighbors.dedup_rows(emb)
                table = self._table(emb, config.k, None)
                for estimator in VALIDATION_ESTIMATORS:
                    report = self.estimate_global(emb, estimator, config.k, table, seed, config.alpha_grid)
                    rows.append({"stage": stage, "estimator": estimator.display_name,
                                 "seed": seed, "value": report.global_value})
                self.logger.info(f"验证阶段 {stage} 种子 {seed} 完成")

        raw = pd.DataFrame(rows)
        grouped = raw.groupby(["stage", "estimator"], sort=False)["value"]
        table = grouped.mean().rename("mean").to_frame()
        table["std"] = grouped.std(ddof=1).fillna(0.0) if config.seeds > 1 else 0.0
        table = table.reset_index()
        table["abs_error"] = (table["mean"] - TRUE_ID).abs()

        mae = {}
        failures = []
        for estimator in VALIDATION_ESTIMATORS:
            name = estimator.display_name
            subset = table[table["estimator"] == name]
            mae[name] = float(subset["abs_error"].mean())
            limit = VALIDATION_MAE_LIMITS[estimator]
            if not mae[name] <= limit:
                failures.append(f"{name} MAE {mae[name]:.3f} > {limit}")
        lo, hi = FISHERS_STAGE_RANGE
        fishers_rows = table[table["estimator"] == Estimator.FISHERS.display_name]
        for _, row in fishers_rows.iterrows():
            if not lo <= row["mean"] <= hi:
                failures.append(f"FisherS 阶段 {row['stage']} 均值 {row['mean']:.3f} 不在 [{lo}, {hi}]")

        result = ValidationResult(table=table, mae=mae, failures=failures)
        mae_frame = pd.DataFrame({"estimator": list(mae), "mae": list(mae.values())})
        write_outputs(config.out_dir, {
            "validate.csv": table.to_csv(index=False, float_format="%.10g"),
            "validate_runs.csv": raw.to_csv(index=False, float_format="%.10g"),
            "validate.txt": table.to_string(index=False, float_format=lambda v: f"{v:.4f}") + "\n\n"
                            + mae_frame.to_string(index=False, float_format=lambda v: f"{v:.4f}") + "\n\n"
                            + result.summary() + "\n",
        })
        self.logger.info(result.summary())
        return result

    def cmd_resolution_sweep(self, config: RunConfig) -> List[IdReport]:
        """
        编码器分辨率扫描，每个设置报告全局 FisherS

        config.sweep 取 sh（L）、rff-sigma（σ_max）、rff-m（M）或 multiscale（S），
        config.sweep_values 为空时使用默认取值。点集在各设置间共享。

        Returns:
            List[IdReport]: extra 中含 sweep、parameter、value
        """
        config.validate()
        if config.sweep not in RESOLUTION_SWEEPS:
            available = ", ".join(RESOLUTION_SWEEPS)
            raise ManifoldIDConfigError(f"未知扫描 '{config.sweep}'。可用: {available}")
        if config.embeddings_path:
            raise ManifoldIDConfigError("分辨率扫描需要内置编码器，不能与 --embeddings 同时使用")

        parameter, defaults, fixed = RESOLUTION_SWEEPS[config.sweep]
        values = list(config.sweep_values) if config.sweep_values else list(defaults)
        mask = self.sampling.load_mask_file(config.mask_path) if config.mask_path else None
        points = self.sampling.sample(config.scheme, config.n, config.seed, mask,
                                      config.grid_width, config.grid_height)

        reports = []
        for value in values:
            value = int(value) if parameter in INTEGER_FIELDS else float(value)
            spec = EncoderSpec(**{**config.encoder.to_dict(), **fixed, parameter: value})
            emb, _ = self.neighbors.dedup_rows(self.encoders.encode(points, spec))
            report, _ = self.fishers.fishers_global(emb, config.alpha_grid)
            report.extra.update({"sweep": config.sweep, "parameter": parameter, "value": value})
            reports.append(self._annotate(report, emb, config.seed))
            self.logger.info(f"{parameter}={value}: FisherS {report.global_value:.3f}")

        name = config.sweep.replace("-", "_")
        write_outputs(config.out_dir, {
            f"resolution_{name}.csv": ReportExporter.reports_to_csv(reports),
            f"resolution_{name}.txt": ReportExporter.reports_to_table(reports),
        })
        return reports

