"""
manifold_id 统一管理器

提供一个统一的接口来访问采样、编码、近邻、估计与实验各功能模块。
"""

import logging
from typing import List, Optional, Tuple

from .config import DEFAULT_K_GLOBAL, DEFAULT_K_LOCAL, DEFAULT_KSWEEP, ManifoldIDConfig, RunConfig
from .engine import ComputeEngine
from .exceptions import ManifoldIDConfigError
from ..managers.encoders import EncoderManager
from ..managers.estimators import EstimatorManager
from ..managers.experiments import ExperimentManager
from ..managers.fishers import FisherSManager
from ..managers.neighbors import NeighborManager
from ..managers.sampling import SamplingManager
from ..types.embedding_types import EmbeddingMatrix, EncoderSpec
from ..types.geo_types import GeoPointSet, SamplingScheme
from ..types.report_types import IdReport, LocalIdMap, parse_estimators


logger = logging.getLogger(__name__)


class ManifoldIDManager:
    """
    manifold_id 统一管理器

    这个类持有一个 ComputeEngine 并把它共享给所有功能管理器，
    是使用 manifold_id 的推荐方式。

    Example:
        >>> with ManifoldIDManager() as mid:
        ...     points = mid.sample("sphere", 10_000, seed=0)
        ...     emb = mid.encode(points, EncoderSpec(kind="sh", L=10))
        ...     print(mid.global_id(emb, "fishers").summary())
    """

    def __init__(self, config: Optional[ManifoldIDConfig] = None):
        """
        初始化管理器

        Args:
            config: 库级配置，为 None 时从环境变量读取
        """
        self.engine = ComputeEngine(config)
        self.config = self.engine.config

        self.sampling = SamplingManager(self.engine)
        self.encoders = EncoderManager(self.engine)
        self.neighbors = NeighborManager(self.engine)
        self.estimators = EstimatorManager(self.engine, self.neighbors)
        self.fishers = FisherSManager(self.engine)
        self.experiments = ExperimentManager(self.engine, self.sampling, self.encoders,
                                             self.neighbors, self.estimators, self.fishers)

        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    def close(self):
        """释放线程池"""
        self.engine.shutdown()

    # 便捷方法 - 数据
    def sample(self, scheme, n: int, seed: int = 0, **kwargs) -> GeoPointSet:
        """按方案采样"""
        return self.sampling.sample(SamplingScheme(scheme) if isinstance(scheme, str) else scheme,
                                    n, seed, **kwargs)

    def encode(self, points: GeoPointSet, spec: Optional[EncoderSpec] = None) -> EmbeddingMatrix:
        """编码点集并去重"""
        emb = self.encoders.encode(points, spec or EncoderSpec())
        emb, _ = self.neighbors.dedup_rows(emb)
        return emb

    def load_embeddings(self, path: str) -> EmbeddingMatrix:
        """读取 EMB1 / CSV 嵌入文件并去重"""
        emb, _ = self.neighbors.dedup_rows(self.encoders.load_embeddings_file(path))
        return emb

    # 便捷方法 - 估计
    def global_id(self, emb: EmbeddingMatrix, estimator="fishers", k: int = DEFAULT_K_GLOBAL,
                  seed: int = 0) -> IdReport:
        """单个估计器的全局 ID"""
        est = parse_estimators([estimator])[0]
        return self.experiments.estimate_global(emb, est, k, seed=seed)

    def global_ids(self, emb: EmbeddingMatrix, estimators="all",
                   k: int = DEFAULT_K_GLOBAL) -> List[IdReport]:
        """多个估计器的全局 ID，共享同一张近邻表"""
        ests = parse_estimators(estimators)
        table = None
        if any(e.uses_neighbors for e in ests):
            table = self.neighbors.knn_exact(emb, k)
        return [self.experiments.estimate_global(emb, e, k, table) for e in ests]

    def local_id(self, emb: EmbeddingMatrix, estimator="mle", k: int = DEFAULT_K_LOCAL,
                 alpha: Optional[float] = None) -> LocalIdMap:
        """单个估计器的局部 ID 图"""
        est = parse_estimators([estimator])[0]
        return self.experiments.estimate_local(emb, est, k, alpha=alpha)

    def ksweep(self, emb: EmbeddingMatrix, estimator="mle", k_list=DEFAULT_KSWEEP) -> List[IdReport]:
        """k 扫描"""
        return self.estimators.ksweep(emb, parse_estimators([estimator])[0], k_list)

    # 便捷方法 - 命令
    def run(self, config: RunConfig):
        """
        执行实验命令

        Args:
            config: 运行配置，config.command 为 global / local / bands / ksweep / validate / sweep

        Returns:
            对应 cmd_* 的返回值
        """
        commands = {
            "global": self.experiments.cmd_global_id,
            "local": self.experiments.cmd_local_id,
            "bands": self.experiments.cmd_bands,
            "ksweep": self.experiments.cmd_ksweep,
            "validate": self.experiments.cmd_validate,
            "sweep": self.experiments.cmd_resolution_sweep,
        }
        if config.command not in commands:
            raise ManifoldIDConfigError(f"未知命令 '{config.command}'。可用: {', '.join(commands)}")
        self.logger.info(f"执行命令 {config.command}")
        return commands[config.command](config)

    # 上下文管理器支持
    def __enter__(self):
        """上下文管理器入口"""
        self.engine.start()
        return self

    def __exit__(self, *args):
        """上下文管理器出口"""
        _ = args
        self.close()


def quick_global_id(n: int = 10_000, spec: Optional[EncoderSpec] = None,
                    estimator: str = "fishers", seed: int = 0) -> Tuple[EmbeddingMatrix, IdReport]:
    """在均匀球面样本上快速估计一次全局 ID"""
    with ManifoldIDManager() as mid:
        emb = mid.encode(mid.sampling.sample_uniform_sphere(n, seed), spec)
        return emb, mid.global_id(emb, estimator, seed=seed)
