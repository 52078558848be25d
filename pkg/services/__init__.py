"""
fabsim v1.0 - Services 模組
"""

# 模擬核心
from . import topology_service
from . import engine_service
from . import congestion_service
from . import routing_service
from . import collective_service
from . import harness_service

# 內部服務
from . import logger_service
from . import scheduler_service
from . import validation_service
from . import monitoring_service

# 輸出
from . import report_service
from . import chart_service
from . import excel_service
