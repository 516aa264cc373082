"""
球面坐标工具

经纬度（度）与 S² 单位向量之间的转换，以及经度折返、大圆距离等。
"""

import numpy as np


def wrap_longitude(lon_deg):
    """
    将经度折返到 [-180, 180)

    Args:
        lon_deg: 经度（度），标量或数组

    Returns:
        折返后的经度
    """
    wrapped = np.mod(np.asarray(lon_deg, dtype=np.float64) + 180.0, 360.0) - 180.0
    # mod 可能因舍入得到 360 - eps
    return np.where(wrapped >= 180.0, wrapped - 360.0, wrapped)


def clamp_latitude(lat_deg):
    """纬度夹到 [-90, 90]"""
    return np.clip(np.asarray(lat_deg, dtype=np.float64), -90.0, 90.0)


def lonlat_to_unit3(lon_deg, lat_deg) -> np.ndarray:
    """
    经纬度转单位三维向量

    x = cosφ·cosλ, y = cosφ·sinλ, z = sinφ

    Args:
        lon_deg: 经度数组（度）
        lat_deg: 纬度数组（度）

    Returns:
        np.ndarray: 形状 (n, 3)
    """
    lam = np.radians(np.asarray(lon_deg, dtype=np.float64))
    phi = np.radians(np.asarray(lat_deg, dtype=np.float64))
    cos_phi = np.cos(phi)
    unit3 = np.stack([cos_phi * np.cos(lam), cos_phi * np.sin(lam), np.sin(phi)], axis=-1)
    # 消除舍入带来的范数偏差
    return unit3 / np.linalg.norm(unit3, axis=-1, keepdims=True)


def unit3_to_lonlat(unit3: np.ndarray):
    """
    单位向量转经纬度（度）

    Returns:
        tuple: (lon, lat) 两个数组
    """
    unit3 = np.atleast_2d(np.asarray(unit3, dtype=np.float64))
    x, y, z = unit3[:, 0], unit3[:, 1], unit3[:, 2]
    lat = np.degrees(np.arctan2(z, np.hypot(x, y)))
    lon = wrap_longitude(np.degrees(np.arctan2(y, x)))
    return lon, clamp_latitude(lat)


def great_circle_distance_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    两组单位向量之间的大圆距离（度）

    使用 atan2(|a×b|, a·b)，小角度下数值稳定。
    """
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.degrees(np.arctan2(cross, dot))


def equal_area_band_edges(n_bands: int) -> np.ndarray:
    """
    等面积纬度带边界（z = sinφ 均分）

    Returns:
        np.ndarray: 长度 n_bands + 1 的 z 边界，从 -1 到 1
    """
    return np.linspace(-1.0, 1.0, n_bands + 1)


def latitude_band(lat_deg, n_bands: int = 10) -> np.ndarray:
    """
    等宽纬度带编号（0 = 最南带 90°S–72°S）

    Args:
        lat_deg: 纬度数组
        n_bands: 带数，默认 10 个 18° 带

    Returns:
        np.ndarray: 每个点所在带编号 (int)
    """
    width = 180.0 / n_bands
    band = np.floor((np.asarray(lat_deg, dtype=np.float64) + 90.0) / width).astype(np.int64)
    return np.clip(band, 0, n_bands - 1)


def band_label(band: int, n_bands: int = 10) -> str:
    """纬度带标签，如 '18°S-0°'"""
    width = 180.0 / n_bands
    lo = -90.0 + band * width
    hi = lo + width

    def fmt(v: float) -> str:
        if v == 0:
            return "0°"
        return f"{abs(v):g}°{'N' if v > 0 else 'S'}"

    return f"{fmt(lo)}-{fmt(hi)}"
