"""
fabsim v1.0 - 結果輸出服務

功能：ResultTable CSV（固定欄位、位元組穩定）、sweep 續跑清單、
      .meta.json 附檔、事件追蹤與吞吐量序列檔
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from models.errors import ManifestError, OutputError, ReportError
from models.types import RESULT_COLUMNS, ResultRow, ThroughputTrace
from pylib.atoms.format_utils import fmt_float
from services.logger_service import get_logger

logger = get_logger('fabsim.report')

MANIFEST_VERSION = 1
RATIO_DIGITS = 6

_INT_COLUMNS = ('nodes', 'vector_bytes', 'seed')
_FLOAT_COLUMNS = ('baseline_mean_ns', 'congested_mean_ns', 'ratio', 'stdev_ns', 'p50_ns', 'p99_ns',
                  'baseline_gbps', 'congested_gbps')


# ============================================================
# 1. CSV 欄位格式
# ============================================================

def format_cell(column: str, value: Any) -> str:
    """浮點數固定 6 位小數；None 為空字串"""
    if value is None:
        return ''
    if column in _FLOAT_COLUMNS:
        return fmt_float(float(value), RATIO_DIGITS)
    return str(value)


def row_cells(row: ResultRow) -> List[str]:
    data = asdict(row)
    return [format_cell(c, data[c]) for c in RESULT_COLUMNS]


def csv_line(cells: Sequence[str]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator='\n').writerow(cells)
    return buf.getvalue()


def table_text(rows: Iterable[ResultRow]) -> str:
    return csv_line(RESULT_COLUMNS) + ''.join(csv_line(row_cells(r)) for r in rows)


def _parse_row(record: Dict[str, str], lineno: int) -> ResultRow:
    kwargs: Dict[str, Any] = {}
    for column in RESULT_COLUMNS:
        raw = record.get(column)
        if raw is None:
            raise ReportError(f"row {lineno}: missing column {column}")
        try:
            if column in _INT_COLUMNS:
                kwargs[column] = int(raw)
            elif column in _FLOAT_COLUMNS:
                kwargs[column] = float(raw) if raw != '' else None
            else:
                kwargs[column] = raw
        except ValueError:
            raise ReportError(f"row {lineno}: bad value {raw!r} in column {column}") from None
    return ResultRow(**kwargs)


def read_table(path: Any) -> List[ResultRow]:
    """讀回 ResultTable；渲染器只依賴這個檔案"""
    p = Path(path)
    try:
        text = p.read_text(encoding='utf-8')
    except OSError as exc:
        raise OutputError(f"cannot read {p}: {exc.strerror or exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
        raise ReportError(f"{p}: header does not match the result table columns")
    return [_parse_row(rec, i) for i, rec in enumerate(reader, 2)]


def check_table(rows: Sequence[ResultRow]) -> List[str]:
    """比值可由兩個平均值重算（6 位小數）；(所有軸, 種子) 不重複"""
    problems: List[str] = []
    seen: Dict[Tuple[Any, ...], int] = {}
    for i, row in enumerate(rows, 2):
        if row.key in seen:
            problems.append(f"row {i}: duplicates row {seen[row.key]}")
        seen.setdefault(row.key, i)
        if row.ratio is None:
            continue
        if not row.baseline_mean_ns or not row.congested_mean_ns:
            problems.append(f"row {i}: ratio without both means")
            continue
        expect = fmt_float(row.baseline_mean_ns / row.congested_mean_ns, RATIO_DIGITS)
        if expect != fmt_float(row.ratio, RATIO_DIGITS):
            problems.append(f"row {i}: ratio {fmt_float(row.ratio)} != {expect}")
    return problems


# ============================================================
# 2. 寫檔
# ============================================================

def atomic_write(path: Any, text: str) -> Path:
    """先寫暫存檔再改名；失敗時不留下半個檔案"""
    p = Path(path)
    tmp = p.with_name(p.name + '.tmp')
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp, p)
    except OSError as exc:
        if tmp.exists():
            tmp.unlink()
        raise OutputError(f"cannot write {p}: {exc.strerror or exc}") from exc
    return p


def write_table(path: Any, rows: Iterable[ResultRow]) -> Path:
    rows = list(rows)
    path = atomic_write(path, table_text(rows))
    logger.info(f"wrote {len(rows)} rows to {path}")
    return path


def write_meta(path: Any, meta: Dict[str, Any]) -> Path:
    """<name>.meta.json：套用的預設值、主機資訊、耗時；與產出物分開存放"""
    return atomic_write(path, json.dumps(meta, indent=2, sort_keys=True, default=str) + '\n')


def meta_path(csv_path: Any) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + '.meta.json')


def write_trace(path: Any, lines: Sequence[str]) -> Path:
    return atomic_write(path, '\n'.join(lines) + '\n')


# ============================================================
# 3. 吞吐量序列
# ============================================================

TIMESERIES_COLUMNS = ('time_ns', 'rate_bps', 'capacity_bps')


def write_timeseries(path: Any, trace: ThroughputTrace) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(TIMESERIES_COLUMNS)
    for t, rate in trace.samples:
        w.writerow([fmt_float(t, 3), fmt_float(rate, 3), fmt_float(trace.capacity_bps, 3)])
    return atomic_write(path, buf.getvalue())


def read_timeseries(path: Any, label: Optional[str] = None) -> ThroughputTrace:
    p = Path(path)
    try:
        text = p.read_text(encoding='utf-8')
    except OSError as exc:
        raise OutputError(f"cannot read {p}: {exc.strerror or exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TIMESERIES_COLUMNS:
        raise ReportError(f"{p}: expected columns {', '.join(TIMESERIES_COLUMNS)}")
    samples: List[Tuple[float, float]] = []
    capacity = 0.0
    for rec in reader:
        try:
            samples.append((float(rec['time_ns']), float(rec['rate_bps'])))
            capacity = float(rec['capacity_bps'])
        except ValueError:
            raise ReportError(f"{p}: bad number in row {len(samples) + 2}") from None
    interval = samples[1][0] - samples[0][0] if len(samples) > 1 else 0.0
    return ThroughputTrace(label or p.stem, interval, tuple(samples), capacity)


# ============================================================
# 4. 續跑清單
# ============================================================

def row_digest(line: str) -> str:
    return hashlib.blake2b(line.encode('utf-8'), digest_size=8).hexdigest()


def config_digest(text: str) -> str:
    return hashlib.blake2b(text.encode('utf-8'), digest_size=16).hexdigest()


class SweepWriter:
    """sweep 的 CSV 逐列附加 + 完成格清單

    清單為 JSON lines：第一行記錄 sweep 的設定摘要，之後每完成一格一行，
    帶格名與該列 CSV 文字的摘要。只有收集者執行緒會呼叫 append。
    """

    def __init__(self, csv_path: Any, sweep_id: str) -> None:
        self.csv_path = Path(csv_path)
        self.manifest_path = self.csv_path.with_name(self.csv_path.stem + '.manifest.jsonl')
        self.sweep_id = sweep_id
        self.completed: List[str] = []

    # ----- 開始 -----

    def start_fresh(self) -> None:
        atomic_write(self.csv_path, csv_line(RESULT_COLUMNS))
        atomic_write(self.manifest_path, json.dumps(
            {'fabsim_manifest': MANIFEST_VERSION, 'sweep': self.sweep_id, 'columns': list(RESULT_COLUMNS)},
            sort_keys=True) + '\n')
        self.completed = []

    def resume(self) -> List[str]:
        """驗證清單與 CSV 一致並回傳已完成的格名；不一致時拋 ManifestError"""
        if not self.manifest_path.exists() or not self.csv_path.exists():
            raise ManifestError(f"nothing to resume: {self.manifest_path.name} or {self.csv_path.name} is missing")
        entries = self._load_manifest()
        lines = self.csv_path.read_text(encoding='utf-8').splitlines(keepends=True)
        if not lines or lines[0] != csv_line(RESULT_COLUMNS):
            raise ManifestError(f"{self.csv_path.name}: header does not match; use --fresh")
        body = lines[1:]
        if len(body) < len(entries):
            raise ManifestError(f"{self.csv_path.name} has {len(body)} rows but the manifest lists {len(entries)}")
        for i, (name, digest) in enumerate(entries):
            if row_digest(body[i]) != digest:
                raise ManifestError(f"row {i + 2} of {self.csv_path.name} does not match the manifest entry for {name}")
        if len(body) > len(entries):
            # 列已寫出但清單未記錄：該格重跑
            logger.warning(f"dropping {len(body) - len(entries)} unrecorded row(s) from {self.csv_path.name}")
            atomic_write(self.csv_path, lines[0] + ''.join(body[:len(entries)]))
        self.completed = [name for name, _ in entries]
        return list(self.completed)

    def _load_manifest(self) -> List[Tuple[str, str]]:
        text = self.manifest_path.read_text(encoding='utf-8')
        records = text.splitlines()
        try:
            head = json.loads(records[0]) if records else None
        except json.JSONDecodeError:
            head = None
        if not isinstance(head, dict) or head.get('fabsim_manifest') != MANIFEST_VERSION:
            raise ManifestError(f"{self.manifest_path.name} is not a fabsim manifest; use --fresh")
        if head.get('sweep') != self.sweep_id:
            raise ManifestError(f"{self.manifest_path.name} belongs to a different sweep configuration; use --fresh")
        entries: List[Tuple[str, str]] = []
        for n, rec in enumerate(records[1:], 2):
            try:
                obj = json.loads(rec)
                entries.append((str(obj['cell']), str(obj['row'])))
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ManifestError(f"{self.manifest_path.name} line {n} is corrupted; use --fresh") from None
        return entries

    # ----- 附加 -----

    def append(self, row: ResultRow, cell_name: str) -> None:
        """先寫 CSV 列再寫清單；中斷時最多多出一列未記錄的 CSV"""
        line = csv_line(row_cells(row))
        try:
            with open(self.csv_path, 'a', encoding='utf-8', newline='') as fh:
                fh.write(line)
                fh.flush()
            with open(self.manifest_path, 'a', encoding='utf-8') as fh:
                fh.write(json.dumps({'cell': cell_name, 'row': row_digest(line)}, sort_keys=True) + '\n')
                fh.flush()
        except OSError as exc:
            raise OutputError(f"cannot append to {self.csv_path}: {exc.strerror or exc}") from exc
        self.completed.append(cell_name)


# 📚 知識點
# -----------
# 1. 位元組穩定：
#    - 固定欄位順序、固定小數位數、'\n' 換行
#    - 產出物中沒有時間戳；執行資訊放在 .meta.json
#
# 2. 原子寫入：
#    - 暫存檔 + os.replace，失敗不留半個檔案
#
# 3. 續跑：
#    - 清單每行帶該列 CSV 的摘要，CSV 被改過就拒絕續跑
