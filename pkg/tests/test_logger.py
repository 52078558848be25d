"""
fabsim v1.0 - 日誌服務測試
"""
import json
import logging
import sys

from services.logger_service import JsonFormatter, PerformanceLogger, get_logger


def _record(**extra):
    record = logging.LogRecord('fabsim.harness', logging.WARNING, __file__, 10, 'cell %s slow', ('c1',), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_child_names_hang_under_root():
    assert get_logger('engine') is get_logger('fabsim.engine')
    assert get_logger('engine').name == 'fabsim.engine'
    assert get_logger().name == 'fabsim'


def test_json_record_carries_structured_fields():
    data = json.loads(JsonFormatter().format(_record(cell='c1', duration_ms=12.5, unrelated='x')))
    assert data['message'] == 'cell c1 slow'
    assert data['level'] == 'WARNING'
    assert data['logger'] == 'fabsim.harness'
    assert data['cell'] == 'c1'
    assert data['duration_ms'] == 12.5
    assert 'unrelated' not in data


def test_json_record_with_exception():
    try:
        raise ValueError('bad cell')
    except ValueError:
        record = logging.LogRecord('fabsim', logging.ERROR, __file__, 1, 'boom', (), sys.exc_info())
    data = json.loads(JsonFormatter().format(record))
    assert data['exception']['type'] == 'ValueError'
    assert data['exception']['message'] == 'bad cell'


def test_slow_cell_threshold():
    perf = PerformanceLogger()
    assert perf.log_slow_cell('c1', 20.0, threshold=10.0)
    assert not perf.log_slow_cell('c1', 5.0, threshold=10.0)
