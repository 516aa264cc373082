"""
结果导出工具

把 IdReport、LocalIdMap、SeparabilityProfile 写成 CSV / GeoJSON / 文本表格，供外部绘图使用。
"""

import json
import logging
import os
from typing import Iterable, List

import numpy as np
import pandas as pd

from ..core.exceptions import ManifoldIDConfigError, ManifoldIDIOError
from ..types.report_types import IdReport, LocalIdMap, SeparabilityProfile


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


class ReportExporter:
    """报告导出工具类"""

    @staticmethod
    def reports_to_frame(reports: Iterable[IdReport]) -> pd.DataFrame:
        """将报告列表转换为 DataFrame，每份报告一行"""
        return pd.DataFrame([r.to_dict() for r in reports])

    @staticmethod
    def reports_to_csv(reports: Iterable[IdReport]) -> str:
        return ReportExporter.reports_to_frame(reports).to_csv(index=False, float_format=FLOAT_FORMAT)

    @staticmethod
    def reports_to_table(reports: Iterable[IdReport]) -> str:
        """
        人类可读的文本表格

        Example:
            >>> print(ReportExporter.reports_to_table(reports))
            estimator  global  subsample_mean  subsample_std   k       n ...
                  MLE   2.113           2.110          0.056  20  100000 ...
        """
        frame = ReportExporter.reports_to_frame(reports)
        if frame.empty:
            return "(无结果)\n"
        return frame.to_string(index=False, float_format=lambda v: f"{v:.4f}", na_rep="-") + "\n"

    @staticmethod
    def local_map_to_frame(local_map: LocalIdMap) -> pd.DataFrame:
        if local_map.coords is not None:
            lon, lat = local_map.coords[:, 0], local_map.coords[:, 1]
        else:
            lon = lat = np.full(local_map.n, np.nan)
        values = np.where(local_map.defined, local_map.values, np.nan)
        return pd.DataFrame({"lon": lon, "lat": lat, "id": values})

    @staticmethod
    def local_map_to_csv(local_map: LocalIdMap) -> str:
        """CSV，表头 lon,lat,id；不可定义的点 id 为空"""
        frame = ReportExporter.local_map_to_frame(local_map)
        return frame.to_csv(index=False, float_format=FLOAT_FORMAT)

    @staticmethod
    def local_map_to_geojson(local_map: LocalIdMap) -> str:
        """
        GeoJSON FeatureCollection，每点一个 Point 要素，属性 id（不可定义为 null）

        Raises:
            ManifoldIDConfigError: 局部图未绑定坐标
        """
        if local_map.coords is None:
            raise ManifoldIDConfigError("局部 ID 图未绑定坐标，无法导出 GeoJSON")
        defined = local_map.defined
        features = []
        for i in range(local_map.n):
            lon, lat = local_map.coords[i]
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(lon), float(lat)]},
                "properties": {"id": float(local_map.values[i]) if defined[i] else None},
            })
        collection = {
            "type": "FeatureCollection",
            "properties": {
                "estimator": local_map.estimator.display_name,
                "k": local_map.k,
                "alpha": local_map.alpha,
            },
            "features": features,
        }
        return json.dumps(collection, ensure_ascii=False)

    @staticmethod
    def profile_to_csv(profile: SeparabilityProfile) -> str:
        """CSV，表头 alpha,p_bar,n_hat"""
        return profile.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT)

    @staticmethod
    def write_text(path: str, text: str) -> str:
        """
        写入文本文件（自动创建目录）

        Returns:
            str: 写入的路径

        Raises:
            ManifoldIDIOError: 写入失败
        """
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as e:
            raise ManifoldIDIOError(f"写入 {path} 失败: {e}") from e
        logger.debug(f"已写入 {path}")
        return path


def write_outputs(out_dir: str, files: dict) -> List[str]:
    """批量写入 {文件名: 文本} 到 out_dir，按文件名排序写入"""
    return [ReportExporter.write_text(os.path.join(out_dir, name), files[name]) for name in sorted(files)]
