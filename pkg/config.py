"""fabsim v1.0 配置檔

設計原則
- 單一入口：handlers/services 一律 import config。
- 環境變數優先：行程層級設定以環境變數注入；實驗設定放在設定檔。
"""

from __future__ import annotations

import os
from pathlib import Path

# ============================================================
# 應用程式資訊
# ============================================================
APP_NAME = os.environ.get("APP_NAME", "fabsim")
VERSION = os.environ.get("APP_VERSION", "1.0.0")

# ============================================================
# 目錄 / 路徑
# ============================================================
BASE_DIR = Path(__file__).parent
OUT_DIR = Path(os.environ.get("FABSIM_OUT_DIR", str(BASE_DIR / "out")))
LOG_DIR = os.environ.get("LOG_DIR", "")

# ============================================================
# 平行度
# ============================================================
THREADS = max(1, int(os.environ.get("FABSIM_THREADS", os.cpu_count() or 1)))

# ============================================================
# 模擬
# ============================================================
TRACE_DEFAULT = os.environ.get("FABSIM_TRACE", "false").lower() == "true"
SLOW_CELL_MS = float(os.environ.get("FABSIM_SLOW_CELL_MS", 60000))

# adversarial ECMP 情境的碰撞種子
ECMP_FIXTURE = Path(os.environ.get("FABSIM_ECMP_FIXTURE", str(BASE_DIR / "tests" / "data" / "ecmp_adversarial_seed.json")))

# ============================================================
# 日誌
# ============================================================
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")
LOG_FORMAT = os.environ.get("LOG_FORMAT", "text")   # text / json
