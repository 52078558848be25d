"""
fabsim v1.0 - 執行指令

功能：run / baseline / sweep / check
"""
from __future__ import annotations

import time
from argparse import Namespace
from dataclasses import replace
from typing import Any, Dict, List, Optional

from models.errors import ManifestError
from models.types import ExperimentSpec, ResultRow
from services import harness_service, report_service, validation_service
from services.harness_service import Cell, SweepAxes
from services.monitoring_service import SweepMonitor

from .base import EXIT_OK, BaseHandler, logger


def _load(args: Namespace) -> validation_service.ParsedConfig:
    return validation_service.load_config(args.config)


def _with_seed(spec: ExperimentSpec, seed: Optional[int]) -> ExperimentSpec:
    return spec if seed is None else replace(spec, seed=seed)


def _sweep_id(parsed: validation_service.ParsedConfig, spec: ExperimentSpec, baseline_only: bool) -> str:
    # 設定內容 + 實際種子 + 模式；換任何一個都不能續跑舊清單
    text = validation_service.dump_spec(parsed).split('\n', 1)[1]
    return report_service.config_digest(f"{text}\nmaster_seed = {spec.seed}\nbaseline_only = {baseline_only}\n")


def _has_axes(axes: SweepAxes) -> bool:
    return any((axes.nodes, axes.vectors, axes.aggressors, axes.bursts, axes.gaps))


# ============================================================
# 1. run / baseline
# ============================================================

def handle_run(args: Namespace) -> int:
    """受害者基準 + 擁塞（--baseline 只跑基準），每個向量一列，整份 CSV 一次寫出"""
    started = time.monotonic()
    parsed = _load(args)
    spec = _with_seed(parsed.spec, args.seed)
    baseline_only = bool(getattr(args, 'baseline', False))
    if _has_axes(parsed.axes):
        logger.warning("sweep.* keys are ignored by 'run'; use 'sweep' to expand them")

    stem = BaseHandler.config_stem(args.config)
    csv_path = BaseHandler.artifact_path(args, stem, '.csv')
    rows = harness_service.sweep(spec, SweepAxes(), threads=args.threads, baseline_only=baseline_only)
    report_service.write_table(csv_path, rows)

    extras: Dict[str, Any] = {}
    probe_ns = getattr(args, 'probe', None)
    if args.trace or probe_ns:
        extras = _write_run_details(args, spec, stem, baseline_only, probe_ns)

    BaseHandler.write_meta(
        csv_path, 'baseline' if baseline_only else 'run', started,
        config=str(args.config), spec=harness_service.describe_spec(spec),
        applied_defaults=parsed.defaults, rows=len(rows),
        failed=[r.status for r in rows if r.status != 'ok'], **extras,
    )
    BaseHandler.emit(str(csv_path))
    return EXIT_OK


def handle_baseline(args: Namespace) -> int:
    args.baseline = True
    return handle_run(args)


def _write_run_details(args: Namespace, spec: ExperimentSpec, stem: str, baseline_only: bool,
                       probe_ns: Optional[int]) -> Dict[str, Any]:
    """--trace / --probe：每個向量重跑一次（同種子，結果相同）並寫出事件追蹤與吞吐量序列"""
    written: List[str] = []
    stats: Dict[str, Any] = {}
    traced = replace(spec, engine=replace(spec.engine, trace=bool(args.trace)))
    for cell in harness_service.expand_cells(traced):
        seed = harness_service.cell_seed(spec.seed, cell.coords)
        outcome = harness_service.execute(cell.spec, cell.vector, congested=not baseline_only, seed=seed,
                                          probe_interval_ns=probe_ns)
        stats[str(cell.vector)] = outcome.engine.stats.to_dict()
        if args.trace:
            path = BaseHandler.artifact_path(args, stem, f".{cell.vector}.trace.csv")
            report_service.write_trace(path, outcome.trace_lines)
            written.append(str(path))
        if outcome.throughput is not None:
            path = BaseHandler.artifact_path(args, stem, f".{cell.vector}.timeseries.csv")
            report_service.write_timeseries(path, outcome.throughput)
            written.append(str(path))
    return {'details': written, 'engine_stats': stats}


# ============================================================
# 2. sweep
# ============================================================

def handle_sweep(args: Namespace) -> int:
    """逐格附加 CSV + 完成清單；預設有清單就續跑，--fresh 重新開始"""
    started = time.monotonic()
    parsed = _load(args)
    spec = _with_seed(parsed.spec, args.seed)
    baseline_only = bool(getattr(args, 'baseline', False))
    cells = harness_service.expand_cells(spec, parsed.axes)

    stem = BaseHandler.config_stem(args.config)
    csv_path = BaseHandler.artifact_path(args, stem, '.csv')
    writer = report_service.SweepWriter(csv_path, _sweep_id(parsed, spec, baseline_only))
    completed = _open_writer(writer, args)

    by_name = {c.name: c for c in cells}
    unknown = [n for n in completed if n not in by_name]
    if unknown:
        raise ManifestError(f"manifest lists cells outside this sweep ({unknown[0]}); use --fresh")
    skip = {by_name[n].coords for n in completed}

    monitor = SweepMonitor(total=len(cells))
    monitor.skip(len(skip))

    def on_row(row: ResultRow, cell: Cell) -> None:
        writer.append(row, cell.name)
        monitor.cell_finished(cell.name, row.status)

    harness_service.sweep(spec, parsed.axes, threads=args.threads, baseline_only=baseline_only,
                          skip=skip, on_row=on_row)
    BaseHandler.write_meta(
        csv_path, 'sweep', started,
        config=str(args.config), spec=harness_service.describe_spec(spec),
        applied_defaults=parsed.defaults, sweep_id=writer.sweep_id, monitor=monitor.to_dict(),
    )
    BaseHandler.emit(str(csv_path))
    return EXIT_OK


def _open_writer(writer: report_service.SweepWriter, args: Namespace) -> List[str]:
    if args.fresh:
        writer.start_fresh()
        return []
    if args.resume or writer.manifest_path.exists():
        completed = writer.resume()
        logger.info(f"resuming {writer.csv_path.name}: {len(completed)} cell(s) already done")
        return completed
    writer.start_fresh()
    return []


# ============================================================
# 3. check
# ============================================================

def handle_check(args: Namespace) -> int:
    """驗證設定檔並印出正規化結果（含所有套用的預設值）"""
    parsed = _load(args)
    BaseHandler.emit(validation_service.dump_spec(parsed))
    return EXIT_OK
