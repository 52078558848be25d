"""
fabsim v1.0 - 日誌服務模組

功能：
1. fabsim.* 階層 logger，handler 只裝在根 logger
2. 文字 / JSON 兩種格式，TTY 上著色
3. LOG_DIR 有設定時寫輪替檔與錯誤檔
4. 慢格警示與單次模擬摘要
"""
from __future__ import annotations

import json
import logging
import os
import sys
import traceback
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, List, Optional

import config

ROOT_NAME = config.APP_NAME
TEXT_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'

# 結構化欄位：record 上有就寫進 JSON
EXTRA_FIELDS = ('cell', 'seed', 'flow_id', 'duration_ms', 'events', 'command', 'path')

LOG_FILE_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 5


# ===== 格式化 =====

class JsonFormatter(logging.Formatter):
    """一行一筆 JSON；時間取自 record 建立時刻（UTC）"""

    def format(self, record: logging.LogRecord) -> str:
        data: Dict[str, Any] = {
            'timestamp': datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }
        data.update({k: getattr(record, k) for k in EXTRA_FIELDS if hasattr(record, k)})
        if record.exc_info and record.exc_info[0] is not None:
            etype, evalue, tb = record.exc_info
            data['exception'] = {
                'type': etype.__name__,
                'message': str(evalue),
                'traceback': traceback.format_exception(etype, evalue, tb),
            }
        return json.dumps(data, ensure_ascii=False, default=str)


class ColoredFormatter(logging.Formatter):
    """等級名稱著色；只用在 TTY"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def format(self, record: logging.LogRecord) -> str:
        copy = logging.makeLogRecord(record.__dict__)
        color = self.COLORS.get(copy.levelname)
        if color:
            copy.levelname = f"{color}{copy.levelname}{self.RESET}"
        return super().format(copy)


# ===== handlers =====

def _console_handler(level: int, json_format: bool) -> logging.Handler:
    # stdout 留給指令輸出（產出物路徑、預設組列表）
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    if json_format:
        handler.setFormatter(JsonFormatter())
    elif sys.stderr.isatty():
        handler.setFormatter(ColoredFormatter(TEXT_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(TEXT_FORMAT))
    return handler


def _file_handlers(log_dir: str, name: str, level: int, json_format: bool) -> List[logging.Handler]:
    os.makedirs(log_dir, exist_ok=True)
    main = RotatingFileHandler(os.path.join(log_dir, f'{name}.log'), maxBytes=LOG_FILE_BYTES,
                               backupCount=LOG_FILE_BACKUPS, encoding='utf-8')
    main.setLevel(level)
    main.setFormatter(JsonFormatter() if json_format else logging.Formatter(TEXT_FORMAT))

    errors = RotatingFileHandler(os.path.join(log_dir, f'{name}_error.log'), maxBytes=LOG_FILE_BYTES,
                                 backupCount=LOG_FILE_BACKUPS, encoding='utf-8')
    errors.setLevel(logging.ERROR)
    errors.setFormatter(JsonFormatter())
    return [main, errors]


def setup_logging(name: str = ROOT_NAME, *, level: int = logging.INFO, log_dir: Optional[str] = None,
                  console: bool = True, json_format: bool = False) -> logging.Logger:
    """重設 `name` 的 handlers；log_dir 為空時不寫檔"""
    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.handlers = []
    logger.propagate = False
    if console:
        logger.addHandler(_console_handler(level, json_format))
    if log_dir:
        for handler in _file_handlers(log_dir, name, level, json_format):
            logger.addHandler(handler)
    return logger


_root: Optional[logging.Logger] = None


def get_logger(name: str = ROOT_NAME) -> logging.Logger:
    """'engine' 與 'fabsim.engine' 取得同一個 logger；第一次呼叫時依 config 設定根 logger"""
    global _root
    if _root is None:
        _root = setup_logging(
            ROOT_NAME,
            level=getattr(logging, str(config.LOG_LEVEL).upper(), logging.INFO),
            log_dir=config.LOG_DIR or None,
            json_format=config.LOG_FORMAT == 'json',
        )
    if name == ROOT_NAME:
        return _root
    if not name.startswith(ROOT_NAME + '.'):
        name = f'{ROOT_NAME}.{name}'
    return logging.getLogger(name)


# ===== 效能日誌 =====

class PerformanceLogger:
    """sweep 格耗時與單次模擬摘要"""

    def __init__(self, logger_name: str = 'perf') -> None:
        self.logger = get_logger(logger_name)

    def log_slow_cell(self, cell: str, duration_ms: float, threshold: Optional[float] = None) -> bool:
        """超過門檻（預設 FABSIM_SLOW_CELL_MS）時警告；回傳是否超過"""
        limit = config.SLOW_CELL_MS if threshold is None else threshold
        if duration_ms <= limit:
            return False
        self.logger.warning(f'[SLOW_CELL] {cell} took {duration_ms:.1f}ms',
                            extra={'cell': cell, 'duration_ms': duration_ms})
        return True

    def log_run(self, label: str, events: int, sim_ns: float, duration_ms: float) -> None:
        self.logger.debug(
            f'[RUN] {label}: {events} events, {sim_ns:.0f} ns simulated, {duration_ms:.1f}ms wall',
            extra={'events': events, 'duration_ms': duration_ms},
        )


# 📚 知識點
# -----------
# 1. 階層式 logger：
#    - fabsim.engine / fabsim.harness 都掛在 fabsim 底下，往上傳到根 logger
#
# 2. record.created：
#    - JSON 時間用事件發生的時刻，不是格式化的時刻
#
# 3. stderr vs stdout：
#    - 指令輸出走 stdout，診斷訊息走 stderr，方便管線處理
