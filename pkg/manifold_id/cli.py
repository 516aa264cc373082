#!/usr/bin/env python3
"""
manifold-id 命令行入口

使用方法：
    manifold-id global --encoder raw --scheme sphere --estimators all
    manifold-id local --encoder sh --L 10 --head linear --estimators mle --k 100
    manifold-id bands --encoder sh --L 40 --estimators fishers,mle
    manifold-id ksweep --encoder raw --k-list 5,10,20,50,100,200
    manifold-id validate --n 100000 --seeds 3
    manifold-id sweep --sweep rff-sigma --sweep-values 256,4096,65536
    manifold-id global --embeddings model.emb1 --estimators fishers,twonn

退出码：0 成功，1 验证未通过，2 配置错误，3 数据退化，4 文件读写错误。
"""

import argparse
import logging
import sys
from typing import List, Optional

from . import __version__
from .core.config import ManifoldIDConfig, RunConfig
from .core.exceptions import ManifoldIDError, ValidationFailedError
from .core.manager import ManifoldIDManager
from .managers.experiments import RESOLUTION_SWEEPS
from .types.report_types import ValidationResult
from .utils.exporters import ReportExporter


logger = logging.getLogger(__name__)

COMMANDS = {
    "global": "全局 ID 表（含子采样均值 ± 标准差）",
    "local": "逐点局部 ID 图（CSV + GeoJSON）",
    "bands": "10 个 18° 纬度带的全局 ID",
    "ksweep": "近邻数 k 扫描",
    "validate": "球面地面真值验证（真实 ID = 2）",
    "sweep": "编码器分辨率扫描（FisherS）",
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析数值列表: {text}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析整数列表: {text}") from None


def _add_common_arguments(parser: argparse.ArgumentParser):
    data = parser.add_argument_group("数据")
    data.add_argument("--scheme", choices=["fibonacci", "sphere", "land", "grid", "naive", "stratified"],
                      help="采样方案（默认 sphere）")
    data.add_argument("--n", type=int, help="点数（默认 100000）")
    data.add_argument("--seed", type=int, help="随机种子（默认 0）")
    data.add_argument("--mask", help="MSK1 陆地掩膜文件（land 方案必需）")
    data.add_argument("--grid-width", type=int, help="grid 方案列数（默认 360）")
    data.add_argument("--grid-height", type=int, help="grid 方案行数（默认 180）")
    data.add_argument("--embeddings", help="外部嵌入文件（EMB1 或 CSV），替代采样与编码")

    enc = parser.add_argument_group("编码器")
    enc.add_argument("--encoder", help="raw / sh / rff / multiscale（默认 raw）")
    enc.add_argument("--L", type=int, help="球谐最高阶数")
    enc.add_argument("--sigma-min", type=float, help="RFF 最小频率")
    enc.add_argument("--sigma-max", type=float, help="RFF 最大频率")
    enc.add_argument("--M", type=int, help="RFF 层级数")
    enc.add_argument("--features-per-level", type=int, help="RFF 每层特征数")
    enc.add_argument("--S", type=int, help="多尺度正弦分量数")
    enc.add_argument("--lambda-min", type=float, help="多尺度最小波长（度）")
    enc.add_argument("--lambda-max", type=float, help="多尺度最大波长（度）")
    enc.add_argument("--head", choices=["none", "linear", "siren"], help="随机网络头")
    enc.add_argument("--head-width", type=int, help="网络头宽度")
    enc.add_argument("--head-depth", type=int, help="网络头层数")
    enc.add_argument("--omega0", type=float, help="SIREN ω₀")

    est = parser.add_argument_group("估计")
    est.add_argument("--estimators", help="逗号分隔: mle,mom,tle,twonn,corrint,ess,fishers 或 all")
    est.add_argument("--k", type=int, help="近邻数（global 默认 20，local 默认 100）")
    est.add_argument("--subsamples", type=int, help="子采样次数（默认 3）")
    est.add_argument("--subsample-size", type=int, help="子样本大小（默认 50000）")
    est.add_argument("--alpha-grid", type=_float_list, help="FisherS α 网格，逗号分隔")

    out = parser.add_argument_group("输出与运行")
    out.add_argument("--out", help="输出目录（默认 results）")
    out.add_argument("--config", help="YAML 配置文件，命令行参数覆盖其中的值")
    out.add_argument("--threads", type=int, help="工作线程数（默认读取 MANIFOLD_ID_THREADS）")
    out.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog="manifold-id",
        description="地理嵌入的局部 / 全局内在维度测量",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    for name, help_text in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text, description=help_text)
        _add_common_arguments(cmd)
        if name == "ksweep":
            cmd.add_argument("--k-list", type=_int_list, help="近邻数列表（默认 5,10,20,50,100,200）")
        if name == "validate":
            cmd.add_argument("--seeds", type=int, help="每个阶段的种子数（默认 3）")
        if name == "sweep":
            cmd.add_argument("--sweep", choices=sorted(RESOLUTION_SWEEPS), help="扫描的编码器参数（默认 sh）")
            cmd.add_argument("--sweep-values", type=_float_list, help="扫描取值，逗号分隔")
    return parser


def _print_result(command: str, result):
    if command == "local":
        for name, local_map in result.items():
            print(f"{name}: {local_map.n} 个点，{local_map.undefined_count} 个不可定义")
    elif command == "validate":
        print(result.table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
        print(result.summary())
    else:
        print(ReportExporter.reports_to_table(result), end="")


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行主函数

    Args:
        argv: 参数列表，为 None 时读取 sys.argv

    Returns:
        int: 退出码
    """
    args = build_parser().parse_args(argv)

    env_config = ManifoldIDConfig.from_env()
    if args.threads is not None:
        env_config.threads = args.threads
    if args.log_level is not None:
        env_config.log_level = args.log_level

    logging.basicConfig(
        level=getattr(logging, env_config.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        config = RunConfig.from_args(args)
        with ManifoldIDManager(env_config) as mid:
            result = mid.run(config)
        _print_result(config.command, result)
        if isinstance(result, ValidationResult) and not result.passed:
            raise ValidationFailedError(result.failures)
    except ManifoldIDError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
