"""
fabsim v1.0 - 錯誤類型

每個錯誤類別帶有對應的 CLI 結束碼
"""
from __future__ import annotations

from typing import List, Optional, Sequence


class FabsimError(Exception):
    """所有 fabsim 錯誤的基底類別"""
    exit_code = 1


class InvalidParameterError(FabsimError, ValueError):
    """操作輸入不合法（invalid-parameter）"""


class InternalError(FabsimError, RuntimeError):
    """不變量被破壞（internal-error）"""


class ConfigError(FabsimError):
    """設定檔解析/驗證失敗；可帶多筆 (line, message)"""
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None,
                 problems: Optional[Sequence[str]] = None) -> None:
        self.line = line
        self.key = key
        self.problems: List[str] = list(problems or [])
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class OutputError(FabsimError, OSError):
    """輸出檔案 I/O 失敗"""
    exit_code = 3


class ReportError(FabsimError):
    """報表輸入不完整（例如熱圖缺格）"""
    exit_code = 4

    def __init__(self, message: str, missing: Optional[Sequence[object]] = None) -> None:
        self.missing = list(missing or [])
        super().__init__(message)


class ManifestError(FabsimError):
    """續跑清單損毀；需要 --fresh"""
    exit_code = 3
