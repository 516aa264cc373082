"""
异常定义

定义 manifold_id 使用的所有异常类。每个异常携带 CLI 退出码 exit_code。
"""


class ManifoldIDError(Exception):
    """manifold_id 基础异常"""

    exit_code = 1


class ManifoldIDConfigError(ManifoldIDError):
    """参数或配置错误"""

    exit_code = 2


class EmptyInputError(ManifoldIDConfigError):
    """输入为空（n = 0 或空点集）"""

    def __init__(self, what: str = "输入"):
        self.what = what
        super().__init__(f"{what}为空")


class NeighborCountError(ManifoldIDConfigError):
    """近邻数 k 不满足 1 <= k < n"""

    def __init__(self, k: int, n: int):
        self.k = k
        self.n = n
        super().__init__(f"近邻数 k={k} 无效，需要 1 <= k < n={n}")


class DegenerateDataError(ManifoldIDError):
    """数据退化错误"""

    exit_code = 3


class DuplicatePointsError(DegenerateDataError):
    """出现零半径近邻（说明未执行去重）"""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"第 {row} 行存在零距离近邻，请先调用 dedup_rows() 去重")


class DegenerateNeighborhoodError(DegenerateDataError):
    """近邻半径全部相等，局部估计无定义"""

    def __init__(self, row: int = -1, estimator: str = ""):
        self.row = row
        self.estimator = estimator
        super().__init__(f"{estimator or '估计器'} 在第 {row} 行遇到退化邻域（半径全部相等）")


class ZeroVarianceError(DegenerateDataError):
    """输入方差为零"""
    pass


class FullySeparableError(DegenerateDataError):
    """所有点在给定 alpha 下均可分（p = 0）"""
    pass


class RejectionLimitError(DegenerateDataError):
    """陆地掩膜拒绝采样超过上限"""

    def __init__(self, attempts: int, accepted: int):
        self.attempts = attempts
        self.accepted = accepted
        super().__init__(f"拒绝采样已尝试 {attempts} 次，仅接受 {accepted} 个点，掩膜可能全部为海洋")


class InsufficientBinsError(DegenerateDataError):
    """关联积分可用半径区间不足"""
    pass


class ManifoldIDIOError(ManifoldIDError):
    """文件读写错误"""

    exit_code = 4


class FormatError(ManifoldIDIOError):
    """文件魔数或格式错误"""

    def __init__(self, expected: bytes, actual: bytes):
        self.expected = expected
        self.actual = actual
        super().__init__(f"文件魔数错误: 期望 {expected!r}，实际 {actual!r}")


class TruncatedPayloadError(ManifoldIDIOError):
    """数据负载长度与文件头不符"""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"数据长度不符: 期望 {expected} 字节，实际 {actual} 字节")


class DimensionMismatchError(ManifoldIDIOError):
    """维度与文件头或配置不一致"""
    pass


class NonFiniteValueError(ManifoldIDIOError):
    """嵌入中存在非有限值"""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"第 {row} 行包含非有限值 (NaN/Inf)")


class ValidationFailedError(ManifoldIDError):
    """验证套件未达到阈值"""

    def __init__(self, failures: list):
        self.failures = failures
        super().__init__(f"验证未通过: {'; '.join(failures)}")
