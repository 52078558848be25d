"""
fabsim v1.0 - Handler 基礎工具

功能：輸出目錄、產出物路徑、.meta.json 附檔、錯誤轉結束碼
"""
from __future__ import annotations

import sys
import time
from argparse import Namespace
from pathlib import Path
from typing import Any, Dict, Optional

import config
from config_manager import Config
from services import monitoring_service, report_service
from services.logger_service import get_logger

logger = get_logger('fabsim.cli')

EXIT_OK = 0
EXIT_FAILURE = 1


class BaseHandler:
    """Handler 基礎工具類"""

    @staticmethod
    def out_dir(args: Namespace) -> Path:
        """--out 優先，否則 FABSIM_OUT_DIR"""
        return Path(getattr(args, 'out', None) or config.OUT_DIR)

    @staticmethod
    def artifact_path(args: Namespace, stem: str, suffix: str) -> Path:
        return BaseHandler.out_dir(args) / f"{stem}{suffix}"

    @staticmethod
    def config_stem(path: Any) -> str:
        return Path(path).stem

    @staticmethod
    def emit(text: str) -> None:
        """指令輸出走 stdout；診斷訊息走 logger（stderr）"""
        sys.stdout.write(text if text.endswith('\n') else text + '\n')
        sys.stdout.flush()

    @staticmethod
    def error(message: str) -> None:
        sys.stderr.write(f"fabsim: error: {message}\n")
        sys.stderr.flush()

    @staticmethod
    def meta(command: str, started: float, **extra: Any) -> Dict[str, Any]:
        """附檔內容：指令、執行環境、耗時；產出物本身不含這些資訊"""
        data: Dict[str, Any] = {
            'command': command,
            'fabsim_version': Config.VERSION,
            'host': monitoring_service.host_metadata(),
            'process': monitoring_service.process_metadata(),
            'wall_time_s': round(time.monotonic() - started, 3),
            'threads': config.THREADS,
            'settings': Config.to_dict(),
        }
        data.update(extra)
        return data

    @staticmethod
    def write_meta(artifact: Path, command: str, started: float, **extra: Any) -> Optional[Path]:
        path = report_service.meta_path(artifact)
        report_service.write_meta(path, BaseHandler.meta(command, started, **extra))
        return path
