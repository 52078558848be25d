"""
fabsim v1.0 - Handlers 模組
"""

# 基礎工具
from .base import BaseHandler

# 指令處理器
from . import run_handler
from . import report_handler
from . import presets_handler
