"""
计算引擎

负责线程池管理、按行分块的并行执行以及带标签的随机数子流。
所有并行结果按块顺序合并，保证不同线程数下结果逐位一致。
"""

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from threading import Lock
from typing import Any, Callable, List, Optional

import numpy as np

from .config import ManifoldIDConfig


logger = logging.getLogger(__name__)


class ComputeEngine:
    """
    计算引擎

    管理工作线程池，并为各阶段派生可复现的随机数生成器。
    """

    def __init__(self, config: Optional[ManifoldIDConfig] = None):
        """
        初始化引擎

        Args:
            config: 配置对象，如果为 None 则从环境变量读取
        """
        self.config = config or ManifoldIDConfig.from_env()
        self.config.validate()
        self._pool: Optional[ThreadPoolExecutor] = None
        self._pool_lock = Lock()

        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @property
    def threads(self) -> int:
        return self.config.threads

    def start(self):
        """启动线程池（单线程时不创建）"""
        with self._pool_lock:
            if self._pool is None and self.config.threads > 1:
                self._pool = ThreadPoolExecutor(max_workers=self.config.threads,
                                                thread_name_prefix="manifold-id")
                self.logger.debug(f"已启动线程池 ({self.config.threads} 线程)")

    def shutdown(self):
        """关闭线程池"""
        with self._pool_lock:
            if self._pool is not None:
                self._pool.shutdown(wait=True)
                self._pool = None
                self.logger.debug("已关闭线程池")

    def row_blocks(self, n_rows: int, block_size: Optional[int] = None) -> List[slice]:
        """
        将 [0, n_rows) 切分为连续的行块

        Args:
            n_rows: 总行数
            block_size: 每块行数，默认取配置值

        Returns:
            List[slice]: 行切片列表
        """
        size = max(1, int(block_size or self.config.block_size))
        return [slice(start, min(start + size, n_rows)) for start in range(0, n_rows, size)]

    def map_blocks(self, fn: Callable[[slice], Any], n_rows: int,
                   block_size: Optional[int] = None) -> List[Any]:
        """
        对每个行块执行 fn，并按块顺序返回结果

        Args:
            fn: 接收行切片的函数，必须只读共享输入
            n_rows: 总行数
            block_size: 每块行数

        Returns:
            List: 各块结果，顺序与行顺序一致
        """
        blocks = self.row_blocks(n_rows, block_size)
        if len(blocks) <= 1 or self.config.threads <= 1:
            return [fn(b) for b in blocks]

        self.start()
        return list(self._pool.map(fn, blocks))

    @staticmethod
    def substream(seed: int, label: str) -> np.random.Generator:
        """
        派生带标签的随机数子流

        同一 (seed, label) 总是得到相同序列；不同标签互不干扰，
        因此增减估计器不会扰动采样阶段的随机数。

        Args:
            seed: 64 位种子
            label: 阶段标签，如 "sampling/sphere"

        Returns:
            np.random.Generator: 基于计数器型 Philox 的生成器
        """
        key = zlib.crc32(label.encode("utf-8"))
        sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
        return np.random.Generator(np.random.Philox(sequence))

    def __enter__(self):
        """上下文管理器入口"""
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """上下文管理器出口"""
        self.shutdown()
