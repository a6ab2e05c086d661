from typing import Optional


class LindbladError(Exception):
    """所有计算错误的基类"""


class InvalidDimensionError(LindbladError, ValueError):
    """截断维数无效"""


class ShapeError(LindbladError, ValueError):
    """矩阵或向量形状不匹配"""


class DomainError(LindbladError, ValueError):
    """参数超出定义域"""


class IntegrationError(LindbladError, RuntimeError):
    """时间积分失败"""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t={t:.17g})")
        self.t = t


class QuadratureError(LindbladError, ArithmeticError):
    """数值积分未收敛"""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (误差估计={estimate:.3e})")
        self.estimate = estimate


class ConfigError(LindbladError, ValueError):
    """运行配置错误"""

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"第 {line} 行: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


class TruncationOverflowError(LindbladError):
    """截断尾部布居超出容差"""

    def __init__(self, message: str, leakage: float):
        super().__init__(f"{message} (尾部布居={leakage:.3e})")
        self.leakage = leakage


class TruncationWarning(UserWarning):
    """截断可能不足"""

    def __init__(self, message: str, leakage: float):
        super().__init__(f"{message} (尾部布居={leakage:.3e})")
        self.leakage = leakage
