#!/usr/bin/env python3
"""
fabsim v1.0 - 主入口

用法：
    python main.py run --config exp.conf [--seed N] [--out DIR] [--baseline] [--trace] [--probe 5us]
    python main.py sweep --config sweep.conf [--resume | --fresh]
    python main.py report heatmap out/sweep.csv [--x nodes --y vector_bytes] [--facet aggressor]
    python main.py report timeseries out/exp.32768.timeseries.csv
    python main.py presets list

環境變數：
    FABSIM_THREADS: sweep 平行格數上限（預設 CPU 數）
    FABSIM_OUT_DIR: 輸出目錄（預設 ./out）
    LOG_LEVEL / LOG_FORMAT / LOG_DIR: 日誌設定

結束碼：0 成功、2 設定錯誤、3 I/O 錯誤、4 熱圖缺格
"""
import os
import sys
from typing import Optional, Sequence

# 確保模組路徑
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config_manager import Config
from handlers.router import dispatch
from services.logger_service import get_logger


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主程式"""
    problems = Config.validate()
    if problems:
        for p in problems:
            sys.stderr.write(f"fabsim: error: {p}\n")
        return 2
    get_logger().debug(f"fabsim {Config.VERSION}, threads={Config.THREADS}")
    return dispatch(argv)


if __name__ == '__main__':
    sys.exit(main())
