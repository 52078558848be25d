"""
fabsim v1.0 - 圖表服務

功能：由 ResultTable 產生比值熱圖（SVG）、由吞吐量序列產生時間序列圖（SVG）

輸出只取決於輸入資料：沒有時間戳、座標固定小數位，同一份表永遠得到同樣的位元組。
"""
from __future__ import annotations

import math
from typing import Any, Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from models.errors import ReportError
from models.types import ResultRow, ThroughputTrace
from pylib.atoms.format_utils import format_size
from pylib.atoms.time_utils import parse_duration
from pylib.units import metrics_rules
from services.logger_service import get_logger

logger = get_logger('fabsim.chart')


# ===== 色階 =====
# 固定色階：比值 0 → 深色，≥ 1 → 淺色，中間線性插值

COLOR_STOPS: Tuple[Tuple[float, Tuple[int, int, int]], ...] = (
    (0.0, (26, 18, 72)),
    (0.25, (92, 32, 120)),
    (0.5, (176, 58, 96)),
    (0.75, (236, 126, 70)),
    (1.0, (252, 246, 210)),
)


def ratio_color(ratio: float) -> str:
    r = min(1.0, max(0.0, float(ratio)))
    xs = [s for s, _ in COLOR_STOPS]
    rgb = [int(round(float(np.interp(r, xs, [c[i] for _, c in COLOR_STOPS])))) for i in range(3)]
    return '#{:02x}{:02x}{:02x}'.format(*rgb)


def _text_color(ratio: float) -> str:
    return '#111111' if ratio >= 0.6 else '#f5f5f5'


# ===== 軸 =====

AXIS_LABELS = {
    'nodes': 'nodes',
    'vector_bytes': 'vector size (log2)',
    'idle_gap': 'burst pause',
    'burst_length': 'burst length',
    'aggressor': 'aggressor',
    'cc': 'congestion control',
    'lb': 'load balancing',
    'topology': 'topology',
    'victim': 'victim',
    'injection': 'injection',
}


def axis_value(row: ResultRow, axis: str) -> Any:
    if axis not in AXIS_LABELS:
        raise ReportError(f"unknown axis {axis!r} (choose from {', '.join(sorted(AXIS_LABELS))})")
    return getattr(row, axis)


def axis_sort_key(axis: str, value: Any) -> Tuple[Any, ...]:
    """數值軸依數值排，突發長度依次數或時間排，'inf' 排最後"""
    if axis in ('nodes', 'vector_bytes'):
        return (0, float(value), '')
    if axis in ('idle_gap', 'burst_length'):
        text = str(value)
        if text in ('inf', ''):
            return (2, 0.0, text)
        head = text.split()[0]
        if text.endswith('collectives'):
            return (0, float(head), text)
        try:
            return (1, float(parse_duration(text)), text)
        except ValueError:
            return (3, 0.0, text)
    return (0, 0.0, str(value))


def axis_tick(axis: str, value: Any) -> str:
    if axis == 'vector_bytes':
        return format_size(int(value))
    if axis == 'burst_length' and str(value).endswith('collectives'):
        n = str(value).split()[0]
        return f"{n} coll."
    return str(value)


# ===== 熱圖 =====

def heatmap_grid(rows: Sequence[ResultRow], x: str, y: str) -> Tuple[List[Any], List[Any], Dict[Tuple[Any, Any], float]]:
    """(x 值, y 值, {(x, y): ratio})；缺格或重複格拋 ReportError"""
    cells: Dict[Tuple[Any, Any], float] = {}
    dupes: List[str] = []
    for row in rows:
        key = (axis_value(row, x), axis_value(row, y))
        if key in cells:
            dupes.append(f"{x}={key[0]}, {y}={key[1]}")
            continue
        if row.ratio is not None:
            cells[key] = row.ratio
    if dupes:
        raise ReportError(f"several rows per grid point (add a facet): {'; '.join(dupes)}", missing=dupes)
    xs = sorted({axis_value(r, x) for r in rows}, key=lambda v: axis_sort_key(x, v))
    ys = sorted({axis_value(r, y) for r in rows}, key=lambda v: axis_sort_key(y, v))
    missing = [f"{x}={xv}, {y}={yv}" for yv in ys for xv in xs if (xv, yv) not in cells]
    if not rows:
        raise ReportError("result table is empty")
    if missing:
        raise ReportError(f"incomplete grid, {len(missing)} missing cell(s): {'; '.join(missing)}", missing=missing)
    return xs, ys, cells


def facet_groups(rows: Sequence[ResultRow], facets: Sequence[str]) -> List[Tuple[Tuple[Any, ...], List[ResultRow]]]:
    """依 facet 欄位分組；組的順序依各欄位的排序鍵"""
    groups: Dict[Tuple[Any, ...], List[ResultRow]] = {}
    for row in rows:
        key = tuple(axis_value(row, f) for f in facets)
        groups.setdefault(key, []).append(row)
    order = sorted(groups, key=lambda k: tuple(axis_sort_key(f, v) for f, v in zip(facets, k)))
    return [(k, groups[k]) for k in order]


def facet_label(facets: Sequence[str], key: Sequence[Any]) -> str:
    return ', '.join(f"{f}={axis_tick(f, v)}" for f, v in zip(facets, key))


CELL_W = 64
CELL_H = 28
MARGIN_L = 110
MARGIN_T = 44
MARGIN_B = 56


def render_heatmap(rows: Sequence[ResultRow], x: str = 'nodes', y: str = 'vector_bytes',
                   title: Optional[str] = None) -> str:
    """每個格點一個色塊並標上比值（兩位小數）；y 軸由下往上遞增"""
    xs, ys, cells = heatmap_grid(rows, x, y)
    legend_w = 120
    width = MARGIN_L + CELL_W * len(xs) + 30 + legend_w
    height = MARGIN_T + CELL_H * len(ys) + MARGIN_B
    title = title or f"ratio uncongested / congested ({AXIS_LABELS[y]} vs {AXIS_LABELS[x]})"

    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for j, yv in enumerate(ys):
        top = MARGIN_T + CELL_H * (len(ys) - 1 - j)
        out.append(f'<text x="{MARGIN_L - 6}" y="{top + CELL_H // 2 + 4}" text-anchor="end">'
                   f'{escape(axis_tick(y, yv))}</text>')
        for i, xv in enumerate(xs):
            left = MARGIN_L + CELL_W * i
            ratio = cells[(xv, yv)]
            out.append(f'<rect x="{left}" y="{top}" width="{CELL_W}" height="{CELL_H}" '
                       f'fill="{ratio_color(ratio)}" stroke="#ffffff" stroke-width="1"/>')
            out.append(f'<text x="{left + CELL_W // 2}" y="{top + CELL_H // 2 + 4}" text-anchor="middle" '
                       f'fill="{_text_color(ratio)}">{ratio:.2f}</text>')
    grid_bottom = MARGIN_T + CELL_H * len(ys)
    for i, xv in enumerate(xs):
        out.append(f'<text x="{MARGIN_L + CELL_W * i + CELL_W // 2}" y="{grid_bottom + 16}" '
                   f'text-anchor="middle">{escape(axis_tick(x, xv))}</text>')
    out.append(f'<text x="{MARGIN_L + CELL_W * len(xs) // 2}" y="{grid_bottom + 38}" '
               f'text-anchor="middle">{escape(AXIS_LABELS[x])}</text>')
    mid_y = MARGIN_T + CELL_H * len(ys) // 2
    out.append(f'<text x="16" y="{mid_y}" text-anchor="middle" transform="rotate(-90 16 {mid_y})">'
               f'{escape(AXIS_LABELS[y])}</text>')
    out.extend(_legend(MARGIN_L + CELL_W * len(xs) + 30, MARGIN_T))
    out.append('</svg>')
    return '\n'.join(out) + '\n'


def _legend(left: int, top: int) -> List[str]:
    out = [f'<text x="{left}" y="{top - 6}">ratio</text>']
    steps = 10
    for k in range(steps + 1):
        r = 1.0 - k / steps
        out.append(f'<rect x="{left}" y="{top + k * 12}" width="18" height="12" fill="{ratio_color(r)}"/>')
        if k % 2 == 0:
            out.append(f'<text x="{left + 24}" y="{top + k * 12 + 10}">{r:.1f}</text>')
    return out


def render_facets(rows: Sequence[ResultRow], facets: Sequence[str], x: str, y: str) -> List[Tuple[str, str]]:
    """每個 facet 組合一張熱圖；回傳 [(檔名後綴, svg)]，任一組缺格就整批失敗"""
    if not facets:
        return [('', render_heatmap(rows, x, y))]
    out: List[Tuple[str, str]] = []
    missing: List[str] = []
    for key, group in facet_groups(rows, facets):
        label = facet_label(facets, key)
        try:
            svg = render_heatmap(group, x, y, title=f"ratio ({label})")
        except ReportError as exc:
            missing.extend(f"[{label}] {m}" for m in exc.missing)
            continue
        suffix = '_'.join(_slug(axis_tick(f, v)) for f, v in zip(facets, key))
        out.append((suffix, svg))
    if missing:
        raise ReportError(f"incomplete grid in {len(missing)} facet cell(s): {'; '.join(missing)}", missing=missing)
    return out


def _slug(text: str) -> str:
    return ''.join(ch if ch.isalnum() else '-' for ch in text).strip('-').lower()


# ===== 時間序列 =====

PLOT_W = 640
PLOT_H = 260


def render_timeseries(trace: ThroughputTrace, *, trim: int = 1) -> str:
    """速率對時間的折線 + 容量參考線 + 統計區（平均、變異係數、峰谷比）"""
    if not trace.samples:
        raise ReportError(f"throughput trace {trace.label!r} is empty")
    stats = metrics_rules.trace_stats(trace, trim=trim)
    ts = [t for t, _ in trace.samples]
    rates = [r for _, r in trace.samples]
    t0, t1 = ts[0], ts[-1] if ts[-1] > ts[0] else ts[0] + 1.0
    top_rate = max(max(rates), trace.capacity_bps) * 1.1 or 1.0

    left, top = 70, 40
    width = left + PLOT_W + 220
    height = top + PLOT_H + 60

    def px(t: float) -> str:
        return f"{left + (t - t0) / (t1 - t0) * PLOT_W:.2f}"

    def py(r: float) -> str:
        return f"{top + PLOT_H - r / top_rate * PLOT_H:.2f}"

    points = ' '.join(f"{px(t)},{py(r)}" for t, r in trace.samples)
    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{left + PLOT_W // 2}" y="20" text-anchor="middle" font-size="13">'
        f'{escape(trace.label)} throughput</text>',
        f'<rect x="{left}" y="{top}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="#888888"/>',
    ]
    for k in range(5):
        r = top_rate * k / 4
        out.append(f'<text x="{left - 6}" y="{py(r)}" text-anchor="end">{r / 1e9:.0f}</text>')
    out.append(f'<text x="16" y="{top + PLOT_H // 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + PLOT_H // 2})">Gb/s</text>')
    for k in range(5):
        t = t0 + (t1 - t0) * k / 4
        out.append(f'<text x="{px(t)}" y="{top + PLOT_H + 16}" text-anchor="middle">{t / 1000:.0f}</text>')
    out.append(f'<text x="{left + PLOT_W // 2}" y="{top + PLOT_H + 36}" text-anchor="middle">time (us)</text>')
    if trace.capacity_bps > 0:
        out.append(f'<line x1="{left}" y1="{py(trace.capacity_bps)}" x2="{left + PLOT_W}" '
                   f'y2="{py(trace.capacity_bps)}" stroke="#c0392b" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{left + PLOT_W - 4}" y="{float(py(trace.capacity_bps)) - 4:.2f}" '
                   f'text-anchor="end" fill="#c0392b">capacity</text>')
    out.append(f'<polyline points="{points}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>')
    out.extend(_stats_block(stats, left + PLOT_W + 20, top))
    out.append('</svg>')
    return '\n'.join(out) + '\n'


def _stats_block(stats: metrics_rules.TraceStats, left: int, top: int) -> List[str]:
    ptt = 'inf' if math.isinf(stats.peak_to_trough) else f"{stats.peak_to_trough:.2f}"
    lines = [
        f"mean: {stats.mean_bps / 1e9:.2f} Gb/s",
        f"CoV: {stats.cov * 100:.1f}%",
        f"peak/trough: {ptt}",
        f"cycles: {stats.cycles}",
    ]
    return [f'<text x="{left}" y="{top + 14 + 16 * i}">{escape(s)}</text>' for i, s in enumerate(lines)]


# 📚 知識點
# -----------
# 1. SVG 是純文字：
#    - 自帶所有內容，不需要繪圖套件，可以直接 diff
#
# 2. 決定性：
#    - 座標固定小數位、分組依排序鍵，不依字典插入順序
#
# 3. 固定色階：
#    - numpy.interp 在色階節點間線性插值
