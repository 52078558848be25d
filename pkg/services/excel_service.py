"""
fabsim v1.0 - Excel 匯出服務

功能：把 ResultTable 匯出為 .xlsx（明細工作表 + 比值矩陣工作表）
"""
from __future__ import annotations

import io
from dataclasses import asdict
from pathlib import Path
from typing import Any, List, Optional, Sequence

from models.errors import OutputError, ReportError
from models.types import RESULT_COLUMNS, ResultRow
from services.chart_service import AXIS_LABELS, axis_tick, facet_groups, facet_label, heatmap_grid, ratio_color
from services.logger_service import get_logger

logger = get_logger('fabsim.excel')

# 嘗試導入 openpyxl（Excel 處理）
try:
    from openpyxl import Workbook
    from openpyxl.styles import Alignment, Font, PatternFill
    from openpyxl.utils import get_column_letter
    HAS_OPENPYXL = True
except ImportError:
    HAS_OPENPYXL = False

_NUMBER_FORMATS = {
    'baseline_mean_ns': '#,##0.000',
    'congested_mean_ns': '#,##0.000',
    'stdev_ns': '#,##0.000',
    'p50_ns': '#,##0.000',
    'p99_ns': '#,##0.000',
    'ratio': '0.000000',
    'baseline_gbps': '0.000',
    'congested_gbps': '0.000',
    'slowdown': '0.000',
    'vector_bytes': '#,##0',
}


def _fill(color: str) -> Any:
    hex_color = color.lstrip('#').upper()
    return PatternFill(start_color=hex_color, end_color=hex_color, fill_type='solid')


def _header(ws: Any, row: int, values: Sequence[str]) -> None:
    header_font = Font(bold=True)
    header_fill = _fill('#CCCCCC')
    for col, h in enumerate(values, 1):
        cell = ws.cell(row=row, column=col, value=h)
        cell.font = header_font
        cell.fill = header_fill


def _results_sheet(ws: Any, rows: Sequence[ResultRow]) -> None:
    ws.title = 'results'
    columns = RESULT_COLUMNS + ('slowdown',)
    _header(ws, 1, columns)
    for r, row in enumerate(rows, 2):
        data = asdict(row)
        data['slowdown'] = row.slowdown
        for c, column in enumerate(columns, 1):
            cell = ws.cell(row=r, column=c, value=data[column])
            fmt = _NUMBER_FORMATS.get(column)
            if fmt and data[column] is not None:
                cell.number_format = fmt
    ws.freeze_panes = 'A2'
    for c, column in enumerate(columns, 1):
        ws.column_dimensions[get_column_letter(c)].width = max(10, len(column) + 2)


def _matrix_sheet(wb: Any, title: str, rows: Sequence[ResultRow], x: str, y: str) -> None:
    xs, ys, cells = heatmap_grid(rows, x, y)
    ws = wb.create_sheet(title=title[:31])
    ws.cell(row=1, column=1, value=f"{AXIS_LABELS[y]} \\ {AXIS_LABELS[x]}").font = Font(bold=True)
    for i, xv in enumerate(xs, 2):
        ws.cell(row=1, column=i, value=axis_tick(x, xv)).font = Font(bold=True)
    # 與熱圖相同：y 由大到小往下排
    for j, yv in enumerate(reversed(ys), 2):
        ws.cell(row=j, column=1, value=axis_tick(y, yv)).font = Font(bold=True)
        for i, xv in enumerate(xs, 2):
            ratio = cells[(xv, yv)]
            cell = ws.cell(row=j, column=i, value=round(ratio, 6))
            cell.number_format = '0.00'
            cell.fill = _fill(ratio_color(ratio))
            cell.alignment = Alignment(horizontal='center')
            if ratio < 0.6:
                cell.font = Font(color='F5F5F5')
    ws.column_dimensions['A'].width = 22
    for i in range(2, len(xs) + 2):
        ws.column_dimensions[get_column_letter(i)].width = 10


def export_results(rows: Sequence[ResultRow], *, x: str = 'nodes', y: str = 'vector_bytes',
                   facets: Optional[Sequence[str]] = None) -> bytes:
    """匯出 Excel

    Returns:
        .xlsx 檔案的 bytes；格點不完整時只輸出明細工作表
    """
    if not HAS_OPENPYXL:
        raise ImportError("需要安裝 openpyxl: pip install openpyxl")
    wb = Workbook()
    _results_sheet(wb.active, rows)
    groups: List[Any] = facet_groups(rows, facets) if facets else [((), list(rows))]
    for key, group in groups:
        title = f"ratio {facet_label(facets or (), key)}".strip()
        try:
            _matrix_sheet(wb, title, group, x, y)
        except ReportError as exc:
            logger.warning(f"skipping matrix sheet {title!r}: {exc}")
    output = io.BytesIO()
    wb.save(output)
    return output.getvalue()


def write_results(path: Any, rows: Sequence[ResultRow], **kwargs: Any) -> Path:
    p = Path(path)
    data = export_results(rows, **kwargs)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {p}: {exc.strerror or exc}") from exc
    logger.info(f"wrote {len(rows)} rows to {p}")
    return p
