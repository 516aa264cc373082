"""
配置管理

提供库级配置 ManifoldIDConfig 与实验命令配置 RunConfig。
"""

import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

from .exceptions import ManifoldIDConfigError, ManifoldIDIOError
from ..types.embedding_types import EncoderSpec, HeadKind, parse_encoder_kind
from ..types.geo_types import SamplingScheme
from ..types.report_types import Estimator, parse_estimators


DEFAULT_K_GLOBAL = 20
DEFAULT_K_LOCAL = 100
DEFAULT_KSWEEP = (5, 10, 20, 50, 100, 200)

# 命令行参数名 → RunConfig 字段
RUN_ARGS = {
    "command": "command",
    "scheme": "scheme",
    "n": "n",
    "k": "k",
    "estimators": "estimators",
    "embeddings": "embeddings_path",
    "mask": "mask_path",
    "out": "out_dir",
    "seed": "seed",
    "subsamples": "subsamples",
    "subsample_size": "subsample_size",
    "alpha_grid": "alpha_grid",
    "k_list": "k_list",
    "grid_width": "grid_width",
    "grid_height": "grid_height",
    "seeds": "seeds",
    "sweep": "sweep",
    "sweep_values": "sweep_values",
}

# 命令行参数名 → EncoderSpec 字段
ENCODER_ARGS = {
    "encoder": "kind",
    "L": "L",
    "sigma_min": "sigma_min",
    "sigma_max": "sigma_max",
    "M": "M",
    "features_per_level": "features_per_level",
    "S": "S",
    "lambda_min": "lambda_min",
    "lambda_max": "lambda_max",
    "head": "head",
    "head_width": "head_width",
    "head_depth": "head_depth",
    "omega0": "omega0",
}


@dataclass
class ManifoldIDConfig:
    """库级运行配置"""

    threads: int = os.cpu_count() or 1
    block_size: int = 1024
    log_level: str = "INFO"
    seed: int = 0

    @classmethod
    def from_env(cls, prefix: str = "MANIFOLD_ID_") -> "ManifoldIDConfig":
        """从环境变量创建配置"""
        defaults = cls()

        return cls(
            threads=int(os.getenv(f"{prefix}THREADS", str(defaults.threads))),
            block_size=int(os.getenv(f"{prefix}BLOCK_SIZE", str(defaults.block_size))),
            log_level=os.getenv(f"{prefix}LOG_LEVEL", defaults.log_level),
            seed=int(os.getenv(f"{prefix}SEED", str(defaults.seed))),
        )

    def validate(self):
        """验证配置"""
        if self.threads < 1:
            raise ManifoldIDConfigError(f"线程数必须 >= 1: {self.threads}")

        if self.block_size < 1:
            raise ManifoldIDConfigError(f"分块大小必须 >= 1: {self.block_size}")

        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ManifoldIDConfigError(f"种子必须是 64 位非负整数: {self.seed}")


@dataclass
class RunConfig:
    """实验命令配置"""

    command: str = "global"
    scheme: SamplingScheme = SamplingScheme.SPHERE
    n: int = 100_000
    k: Optional[int] = None
    estimators: Optional[List[Estimator]] = None
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    embeddings_path: Optional[str] = None
    mask_path: Optional[str] = None
    out_dir: str = "results"
    seed: int = 0
    subsamples: int = 3
    subsample_size: int = 50_000
    alpha_grid: Optional[List[float]] = None
    k_list: List[int] = field(default_factory=lambda: list(DEFAULT_KSWEEP))
    grid_width: int = 360
    grid_height: int = 180
    seeds: int = 3
    sweep: str = "sh"
    sweep_values: Optional[List[float]] = None

    def __post_init__(self):
        if not isinstance(self.scheme, SamplingScheme):
            try:
                self.scheme = SamplingScheme(str(self.scheme).lower())
            except ValueError:
                raise ManifoldIDConfigError(f"未知采样方案 '{self.scheme}'") from None
        if self.estimators is None:
            self.estimators = [Estimator.MLE] if self.command == "local" else list(Estimator)
        self.estimators = parse_estimators(self.estimators)
        if self.k is None:
            self.k = DEFAULT_K_LOCAL if self.command == "local" else DEFAULT_K_GLOBAL

    @classmethod
    def from_yaml(cls, path: str, **overrides) -> "RunConfig":
        """
        从 YAML 文件创建配置

        Args:
            path: YAML 文件路径
            **overrides: 覆盖文件中的字段（值为 None 的项忽略）

        Returns:
            RunConfig: 配置对象
        """
        raw = cls._load_yaml(path)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(raw)

    @staticmethod
    def _load_yaml(path: str) -> Dict[str, Any]:
        try:
            import yaml
        except ImportError:
            raise ImportError("请安装 PyYAML: pip install PyYAML")

        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = yaml.safe_load(f) or {}
        except OSError as e:
            raise ManifoldIDIOError(f"读取配置文件失败: {e}") from e
        except yaml.YAMLError as e:
            raise ManifoldIDConfigError(f"配置文件解析失败: {e}") from e

        if not isinstance(raw, dict):
            raise ManifoldIDConfigError(f"配置文件顶层必须是映射: {path}")
        return raw

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        """
        从 argparse 结果创建配置

        值为 None 的参数不覆盖；指定 --config 时先读取 YAML，命令行参数再覆盖其中的值。
        编码器种子跟随 --seed。

        Args:
            args: argparse.Namespace

        Returns:
            RunConfig: 配置对象
        """
        values = vars(args)
        raw: Dict[str, Any] = {}
        config_path = values.get("config")
        if config_path:
            raw = cls._load_yaml(config_path)

        for arg, name in RUN_ARGS.items():
            if values.get(arg) is not None:
                raw[name] = values[arg]

        encoder = raw.get("encoder") or {}
        if isinstance(encoder, str):
            encoder = {"kind": encoder}
        encoder = dict(encoder)
        for arg, name in ENCODER_ARGS.items():
            if values.get(arg) is not None:
                encoder[name] = values[arg]
        if values.get("seed") is not None or ("seed" in raw and "seed" not in encoder):
            encoder["seed"] = raw.get("seed", 0)
        if encoder:
            raw["encoder"] = encoder
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunConfig":
        """从字典创建配置，encoder 可为嵌套字典"""
        raw = dict(raw)
        encoder = raw.pop("encoder", None)
        if isinstance(encoder, dict):
            unknown = set(encoder) - {f.name for f in fields(EncoderSpec)}
            if unknown:
                raise ManifoldIDConfigError(f"未知编码器配置项: {', '.join(sorted(unknown))}")
            encoder = EncoderSpec(**encoder)
        elif isinstance(encoder, str):
            encoder = EncoderSpec(kind=parse_encoder_kind(encoder))
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ManifoldIDConfigError(f"未知配置项: {', '.join(sorted(unknown))}")
        if encoder is not None:
            raw["encoder"] = encoder
        return cls(**raw)

    def validate(self):
        """验证配置"""
        if self.embeddings_path is not None and not os.path.exists(self.embeddings_path):
            raise ManifoldIDConfigError(f"嵌入文件不存在: {self.embeddings_path}")

        if self.mask_path is not None and not os.path.exists(self.mask_path):
            raise ManifoldIDConfigError(f"掩膜文件不存在: {self.mask_path}")

        if self.scheme is SamplingScheme.LAND and self.mask_path is None and self.embeddings_path is None:
            raise ManifoldIDConfigError("land 采样方案需要 --mask 掩膜文件")

        if self.n < 1:
            raise ManifoldIDConfigError(f"点数必须 >= 1: {self.n}")

        if self.k < 1 or (self.embeddings_path is None and self.k >= self.n):
            raise ManifoldIDConfigError(f"近邻数 k={self.k} 必须满足 1 <= k < n={self.n}")

        if not self.estimators:
            raise ManifoldIDConfigError("估计器集合为空")

        if self.subsamples < 0 or self.subsample_size < 1:
            raise ManifoldIDConfigError(f"子采样参数无效: {self.subsamples} × {self.subsample_size}")

        if self.seeds < 1:
            raise ManifoldIDConfigError(f"种子数必须 >= 1: {self.seeds}")

        if self.alpha_grid is not None:
            if not self.alpha_grid or any(not 0.0 < a < 1.0 for a in self.alpha_grid):
                raise ManifoldIDConfigError("alpha 网格必须非空且位于 (0, 1)")

        self.encoder.validate()

    @property
    def head(self) -> HeadKind:
        return self.encoder.head
