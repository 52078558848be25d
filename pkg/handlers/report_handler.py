"""
fabsim v1.0 - 報表指令

功能：report heatmap / report timeseries / report xlsx
渲染器只讀 CSV，所以任何圖都能只靠結果檔重新產生
"""
from __future__ import annotations

import time
from argparse import Namespace
from pathlib import Path
from typing import List

from models.errors import ReportError
from services import chart_service, excel_service, report_service

from .base import EXIT_OK, BaseHandler, logger


def _facets(args: Namespace) -> List[str]:
    raw = getattr(args, 'facet', None) or ''
    facets = [f.strip() for f in raw.split(',') if f.strip()]
    # 'vector' 是 vector_bytes 的簡寫
    return ['vector_bytes' if f == 'vector' else f for f in facets]


def _axis(name: str) -> str:
    return 'vector_bytes' if name == 'vector' else name


def _read_checked(path: Path) -> list:
    rows = report_service.read_table(path)
    problems = report_service.check_table(rows)
    if problems:
        raise ReportError(f"{path.name}: {'; '.join(problems)}", missing=problems)
    return rows


def handle_heatmap(args: Namespace) -> int:
    started = time.monotonic()
    table = Path(args.table)
    rows = _read_checked(table)
    x, y = _axis(args.x), _axis(args.y)
    facets = _facets(args)
    outputs = chart_service.render_facets(rows, facets, x, y)

    written = []
    for suffix, svg in outputs:
        name = f".heatmap.{suffix}.svg" if suffix else '.heatmap.svg'
        path = report_service.atomic_write(BaseHandler.artifact_path(args, table.stem, name), svg)
        written.append(path)
        BaseHandler.emit(str(path))
    BaseHandler.write_meta(written[0], 'report heatmap', started, table=str(table), x=x, y=y,
                           facets=facets, outputs=[str(p) for p in written])
    logger.info(f"rendered {len(written)} heatmap(s) from {table.name}")
    return EXIT_OK


def handle_timeseries(args: Namespace) -> int:
    started = time.monotonic()
    source = Path(args.trace)
    trace = report_service.read_timeseries(source)
    svg = chart_service.render_timeseries(trace)
    path = report_service.atomic_write(BaseHandler.artifact_path(args, source.stem, '.svg'), svg)
    BaseHandler.write_meta(path, 'report timeseries', started, trace=str(source),
                           samples=len(trace.samples))
    BaseHandler.emit(str(path))
    return EXIT_OK


def handle_xlsx(args: Namespace) -> int:
    started = time.monotonic()
    table = Path(args.table)
    rows = _read_checked(table)
    path = BaseHandler.artifact_path(args, table.stem, '.xlsx')
    excel_service.write_results(path, rows, x=_axis(args.x), y=_axis(args.y), facets=_facets(args) or None)
    BaseHandler.write_meta(path, 'report xlsx', started, table=str(table), rows=len(rows))
    BaseHandler.emit(str(path))
    return EXIT_OK
