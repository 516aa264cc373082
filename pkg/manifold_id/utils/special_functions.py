"""
特殊函数工具

实球谐函数（归一化伴随 Legendre 递推）、Lambert W 主分支、
以及 ESS 参考曲线。
"""

import math

import numpy as np
from scipy.special import gammaln

from ..core.exceptions import ManifoldIDConfigError


MAX_SH_DEGREE = 200
INV_E = math.exp(-1.0)


def sh_column(l: int, m: int) -> int:
    """(l, m) 在按字典序排列的列中的位置，m 从 -l 到 l"""
    return l * l + (m + l)


def real_spherical_harmonics(lon_deg: np.ndarray, lat_deg: np.ndarray, L: int,
                             out: np.ndarray = None) -> np.ndarray:
    """
    计算实球谐基函数值

    完全正交归一化、不含 Condon–Shortley 相位：
    m > 0 取 √2·P̄_l^m·cos(mλ)，m < 0 取 √2·P̄_l^|m|·sin(|m|λ)。
    P̄_l^m 使用稳定的三项递推直接计算归一化值。

    Args:
        lon_deg: 经度（度）
        lat_deg: 纬度（度）
        L: 最大阶数
        out: 可选的输出数组，形状 (n, (L+1)²)

    Returns:
        np.ndarray: 形状 (n, (L+1)²)
    """
    if L < 0:
        raise ManifoldIDConfigError(f"球谐阶数不能为负数: {L}")
    if L > MAX_SH_DEGREE:
        raise ManifoldIDConfigError(f"球谐阶数 L={L} 超过上限 {MAX_SH_DEGREE}")

    lam = np.radians(np.asarray(lon_deg, dtype=np.float64))
    phi = np.radians(np.asarray(lat_deg, dtype=np.float64))
    x = np.sin(phi)
    s = np.cos(phi)
    n = lam.shape[0]
    if out is None:
        out = np.empty((n, (L + 1) ** 2), dtype=np.float64)

    p_mm = np.full(n, 1.0 / math.sqrt(4.0 * math.pi))
    sqrt2 = math.sqrt(2.0)
    for m in range(L + 1):
        if m > 0:
            p_mm = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p_mm
        if m == 0:
            cos_m = sin_m = None
        else:
            cos_m = sqrt2 * np.cos(m * lam)
            sin_m = sqrt2 * np.sin(m * lam)

        p_prev2 = None
        p_prev = p_mm
        for l in range(m, L + 1):
            if l == m:
                p_lm = p_mm
            elif l == m + 1:
                p_lm = math.sqrt(2.0 * m + 3.0) * x * p_mm
            else:
                a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                p_lm = a * (x * p_prev - b * p_prev2)
            if l > m:
                p_prev2, p_prev = p_prev, p_lm

            if m == 0:
                out[:, sh_column(l, 0)] = p_lm
            else:
                out[:, sh_column(l, m)] = p_lm * cos_m
                out[:, sh_column(l, -m)] = p_lm * sin_m
    return out


def lambert_w0(x):
    """
    Lambert W 函数主分支

    以分段初值（分支点附近用级数，其余用对数渐近式）启动 Halley 迭代。

    Args:
        x: 标量或数组，要求 x >= -1/e

    Returns:
        与输入同形状的 W₀(x)；标量输入返回 float

    Raises:
        ManifoldIDConfigError: x < -1/e
    """
    scalar = np.ndim(x) == 0
    z = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(z < -INV_E - 1e-15) or np.any(np.isnan(z)):
        raise ManifoldIDConfigError(f"Lambert W 主分支要求 x >= -1/e，最小输入为 {np.nanmin(z)}")
    z = np.maximum(z, -INV_E)

    # 分支点附近: W ≈ -1 + p - p²/3, p = sqrt(2(ez + 1))
    p = np.sqrt(np.maximum(2.0 * (math.e * z + 1.0), 0.0))
    near_branch = -1.0 + p - p * p / 3.0
    # 中等区间: W ≈ log1p(z)
    small = np.log1p(np.maximum(z, -0.25))
    # 大参数: W ≈ ln z - ln ln z
    log_z = np.log(np.maximum(z, 3.0))
    large = log_z - np.log(log_z)

    w = np.where(z < -0.25, near_branch, np.where(z < 3.0, small, large))

    for _ in range(100):
        ew = np.exp(w)
        f = w * ew - z
        w1 = w + 1.0
        denom = ew * w1 - (w + 2.0) * f / (2.0 * np.where(w1 == 0.0, 1.0, w1))
        dw = np.where(denom == 0.0, 0.0, f / np.where(denom == 0.0, 1.0, denom))
        w = w - dw
        if np.all(np.abs(dw) <= 1e-15 * (1.0 + np.abs(w))):
            break

    w = np.where(z == -INV_E, -1.0, w)
    w = np.where(z == 0.0, 0.0, w)
    return float(w[0]) if scalar else w.reshape(np.shape(x))


def ess_reference_curve(dims: np.ndarray) -> np.ndarray:
    """
    ESS 参考曲线 m(d) = E|sin θ|

    θ 为 d 维空间中两个独立均匀方向的夹角：
    m(d) = Γ(d/2)² / (Γ((d-1)/2)·Γ((d+1)/2))，m(1) = 0，m(2) = 2/π。

    Args:
        dims: 维度数组（>= 1）

    Returns:
        np.ndarray: 对应的 m(d)
    """
    dims = np.asarray(dims, dtype=np.float64)
    result = np.zeros_like(dims)
    ok = dims > 1.0
    d = dims[ok]
    result[ok] = np.exp(2.0 * gammaln(d / 2.0) - gammaln((d - 1.0) / 2.0) - gammaln((d + 1.0) / 2.0))
    return result


def reference_curve_monte_carlo(dims, n_pairs: int = 1_000_000, seed: int = 0) -> np.ndarray:
    """
    用 Monte Carlo 估计 ESS 参考曲线

    每个维度抽取 n_pairs 对独立高斯向量，计算 |sin θ| 的均值。
    用于校验闭式曲线，或在需要时重新生成参考表。

    Args:
        dims: 整数维度序列
        n_pairs: 每个维度的方向对数
        seed: 随机种子

    Returns:
        np.ndarray: 估计的 m(d)
    """
    rng = np.random.Generator(np.random.Philox(seed))
    values = []
    chunk = 100_000
    for d in dims:
        total = 0.0
        remaining = n_pairs
        while remaining > 0:
            m = min(chunk, remaining)
            a = rng.standard_normal((m, int(d)))
            b = rng.standard_normal((m, int(d)))
            cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            total += np.sqrt(np.clip(1.0 - cos * cos, 0.0, 1.0)).sum()
            remaining -= m
        values.append(total / n_pairs)
    return np.asarray(values)
