"""
fabsim v1.0 - 測試基礎框架

使用方式：python -m pytest tests/ -v
"""
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

# 添加專案根目錄到路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config

DATA_DIR = Path(__file__).parent / 'data'

MINIMAL_CONFIG = """\
topology.preset = haicgu-sw
nodes = 4
victim.collective = allgather
"""


class BaseTestCase(unittest.TestCase):
    """測試基礎類別：每個類別一個臨時輸出目錄"""

    @classmethod
    def setUpClass(cls):
        cls.temp_dir = tempfile.mkdtemp(prefix='fabsim-test-')
        cls.original_out_dir = config.OUT_DIR
        config.OUT_DIR = Path(cls.temp_dir) / 'out'

    @classmethod
    def tearDownClass(cls):
        config.OUT_DIR = cls.original_out_dir
        shutil.rmtree(cls.temp_dir, ignore_errors=True)

    def write_config(self, text, name='exp.conf'):
        """把設定檔文字寫到臨時目錄並回傳路徑"""
        path = Path(self.temp_dir) / name
        path.write_text(text, encoding='utf-8')
        return path

    def out_path(self, name):
        return Path(config.OUT_DIR) / name


class AssertMixin:
    """斷言輔助方法"""

    def assertRatioBetween(self, ratio, low, high):
        self.assertIsNotNone(ratio)
        self.assertGreaterEqual(ratio, low, f"ratio {ratio} below {low}")
        self.assertLessEqual(ratio, high, f"ratio {ratio} above {high}")

    def assertNoTempFiles(self, directory):
        leftovers = [p.name for p in Path(directory).glob('*.tmp')]
        self.assertEqual(leftovers, [], f"temporary files left behind: {leftovers}")


def data_file(name):
    return DATA_DIR / name


# 📚 知識點
# -----------
# 1. setUpClass/tearDownClass：
#    - 整個類別共用一個臨時目錄
#    - 暫時改寫 config.OUT_DIR，結束後還原
#
# 2. 測試資料：
#    - tests/data 放設定檔與固定種子
#    - 讀取失敗直接讓測試失敗，不做容錯
