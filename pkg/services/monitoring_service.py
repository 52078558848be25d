"""
fabsim v1.0 - 監控服務

功能：
1. 主機與程序資訊（寫入 .meta.json）
2. sweep 進度監控（完成格數、失敗格數、峰值記憶體）
"""
from __future__ import annotations

import os
import platform
import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from pylib.atoms.safe_exec import safe_call
from services.logger_service import get_logger

logger = get_logger('fabsim.monitor')


# ============================================================
# 1. 主機 / 程序資訊
# ============================================================

def host_metadata() -> Dict[str, Any]:
    """主機資訊；沒有 psutil 時只回傳標準庫可得的欄位"""
    info: Dict[str, Any] = {
        'python': sys.version.split()[0],
        'platform': platform.platform(),
        'machine': platform.machine(),
    }
    try:
        import psutil
        mem = psutil.virtual_memory()
        info.update({
            'cpu_count': psutil.cpu_count(),
            'cpu_count_physical': psutil.cpu_count(logical=False),
            'memory_total_gb': round(mem.total / 1024 / 1024 / 1024, 2),
        })
    except ImportError:
        info['cpu_count'] = os.cpu_count()
    return info


def process_rss_mb() -> Optional[float]:
    """常駐記憶體（MB）；psutil 不可用或被拒絕存取時回傳 None"""
    try:
        import psutil
    except ImportError:
        return None
    return safe_call(
        lambda: round(psutil.Process(os.getpid()).memory_info().rss / 1024 / 1024, 2),
        log=lambda e: logger.debug(f"rss unavailable: {e}"),
    )


def process_metadata() -> Dict[str, Any]:
    """本程序的記憶體與 CPU 時間"""
    try:
        import psutil
        proc = psutil.Process(os.getpid())
        mem = proc.memory_info()
        cpu = proc.cpu_times()
        return {
            'pid': proc.pid,
            'rss_mb': round(mem.rss / 1024 / 1024, 2),
            'vms_mb': round(mem.vms / 1024 / 1024, 2),
            'cpu_user_s': round(cpu.user, 3),
            'cpu_system_s': round(cpu.system, 3),
            'threads': proc.num_threads(),
        }
    except ImportError:
        return {'pid': os.getpid(), 'error': 'psutil not installed'}


# ============================================================
# 2. sweep 監控
# ============================================================

@dataclass
class SweepMonitor:
    """由收集者執行緒回報每格結果；可同時被主執行緒讀取"""
    total: int
    done: int = 0
    failed: int = 0
    skipped: int = 0
    peak_rss_mb: float = 0.0
    started: float = field(default_factory=time.monotonic)

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def skip(self, n: int) -> None:
        with self._lock:
            self.skipped += n

    def cell_finished(self, name: str, status: str) -> None:
        with self._lock:
            self.done += 1
            if status != 'ok':
                self.failed += 1
            rss = process_rss_mb()
            if rss is not None:
                self.peak_rss_mb = max(self.peak_rss_mb, rss)
        logger.info(f"[{self.done + self.skipped}/{self.total}] {name}: {status}",
                    extra={'cell': name})

    @property
    def elapsed_s(self) -> float:
        return time.monotonic() - self.started

    def to_dict(self) -> Dict[str, Any]:
        with self._lock:
            return {
                'cells_total': self.total,
                'cells_run': self.done,
                'cells_failed': self.failed,
                'cells_resumed': self.skipped,
                'peak_rss_mb': self.peak_rss_mb,
                'wall_time_s': round(self.elapsed_s, 3),
            }


# 📚 知識點
# -----------
# 1. psutil：
#    - 跨平台取得 CPU、記憶體與程序資訊
#    - 延遲 import，沒安裝時仍可執行
#
# 2. 執行時資訊放在 .meta.json：
#    - 結果檔保持位元組穩定，主機資訊另外存放
