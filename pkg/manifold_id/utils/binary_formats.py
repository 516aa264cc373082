"""
二进制格式编解码工具

MSK1 陆地掩膜格式与 EMB1 嵌入矩阵格式。所有整数均为小端序。

MSK1: b"MSK1" | u16 width | u16 height | 行主序位图（字节内高位在前）
EMB1: b"EMB1" | u8 dtype (0=f32, 1=f64) | u64 rows | u64 cols | 行主序数据
"""

import struct
from typing import Tuple

import numpy as np

from ..core.exceptions import DimensionMismatchError, FormatError, TruncatedPayloadError


MASK_MAGIC = b"MSK1"
MASK_HEADER = struct.Struct("<4sHH")

EMB_MAGIC = b"EMB1"
EMB_HEADER = struct.Struct("<4sBQQ")
EMB_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class BinaryCodec:
    """二进制编解码工具类"""

    @staticmethod
    def encode_mask(width: int, height: int, grid: np.ndarray) -> bytes:
        """
        编码掩膜

        Args:
            width: 列数
            height: 行数
            grid: (height, width) 布尔矩阵，第 0 行为最北

        Returns:
            bytes: 8 字节头 + ceil(width*height/8) 字节位图

        Example:
            >>> len(BinaryCodec.encode_mask(720, 360, np.zeros((360, 720), bool)))
            32408
        """
        bits = np.packbits(np.asarray(grid, dtype=bool).ravel(), bitorder="big")
        return MASK_HEADER.pack(MASK_MAGIC, width, height) + bits.tobytes()

    @staticmethod
    def decode_mask(payload: bytes) -> Tuple[int, int, np.ndarray]:
        """
        解码掩膜

        Returns:
            Tuple[int, int, np.ndarray]: (width, height, grid)

        Raises:
            FormatError: 魔数错误
            TruncatedPayloadError: 位图长度不符
        """
        if len(payload) < MASK_HEADER.size:
            raise TruncatedPayloadError(MASK_HEADER.size, len(payload))
        magic, width, height = MASK_HEADER.unpack_from(payload)
        if magic != MASK_MAGIC:
            raise FormatError(MASK_MAGIC, magic)

        n_bits = width * height
        expected = MASK_HEADER.size + (n_bits + 7) // 8
        if len(payload) != expected:
            raise TruncatedPayloadError(expected, len(payload))

        raw = np.frombuffer(payload, dtype=np.uint8, offset=MASK_HEADER.size)
        grid = np.unpackbits(raw, bitorder="big", count=n_bits).astype(bool)
        return width, height, grid.reshape(height, width)

    @staticmethod
    def encode_embeddings(data: np.ndarray, dtype_code: int = 1) -> bytes:
        """
        编码嵌入矩阵

        Args:
            data: (rows, cols) 矩阵
            dtype_code: 0 = float32, 1 = float64

        Returns:
            bytes: 21 字节头 + 行主序数据

        Example:
            >>> len(BinaryCodec.encode_embeddings(np.zeros((3, 2)), dtype_code=0))
            45
        """
        if dtype_code not in EMB_DTYPES:
            raise ValueError(f"不支持的 dtype 编码: {dtype_code}")
        data = np.ascontiguousarray(data, dtype=EMB_DTYPES[dtype_code])
        rows, cols = data.shape
        return EMB_HEADER.pack(EMB_MAGIC, dtype_code, rows, cols) + data.tobytes(order="C")

    @staticmethod
    def decode_embeddings(payload: bytes) -> Tuple[np.ndarray, int]:
        """
        解码嵌入矩阵

        Returns:
            Tuple[np.ndarray, int]: (float64 矩阵, dtype 编码)

        Raises:
            FormatError: 魔数错误
            TruncatedPayloadError: 数据少于文件头声明
            DimensionMismatchError: 数据多于文件头声明，或 dtype/维度无效
        """
        if len(payload) < EMB_HEADER.size:
            raise TruncatedPayloadError(EMB_HEADER.size, len(payload))
        magic, dtype_code, rows, cols = EMB_HEADER.unpack_from(payload)
        if magic != EMB_MAGIC:
            raise FormatError(EMB_MAGIC, magic)
        if dtype_code not in EMB_DTYPES:
            raise DimensionMismatchError(f"未知 dtype 编码: {dtype_code}")
        if rows == 0 or cols == 0:
            raise DimensionMismatchError(f"文件头维度无效: {rows} × {cols}")

        dtype = EMB_DTYPES[dtype_code]
        expected = EMB_HEADER.size + rows * cols * dtype.itemsize
        if len(payload) < expected:
            raise TruncatedPayloadError(expected, len(payload))
        if len(payload) > expected:
            raise DimensionMismatchError(
                f"数据长度与文件头 {rows} × {cols} 不符: 期望 {expected} 字节，实际 {len(payload)} 字节"
            )

        data = np.frombuffer(payload, dtype=dtype, offset=EMB_HEADER.size).reshape(rows, cols)
        return data.astype(np.float64), dtype_code
