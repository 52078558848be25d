"""
fabsim v1.0 - 設定檔驗證服務

功能：
1. 行式設定檔解析（key = value、# 註解、[section] 前綴、逗號列表）
2. 依 config_manager.CONFIG_SCHEMA 轉型與檢查
3. 套用預設值並組出 ExperimentSpec / SweepAxes
4. 正規化輸出（每個套用的預設值都會寫出）
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import config_manager
from models.errors import ConfigError, FabsimError, InvalidParameterError
from models.types import (
    BurstSpec, BurstUnit, CcConfig, CcVariant, CollectiveKind, DcqcnParams, EcnConfig,
    EngineSettings, ExperimentSpec, FlowControl, FlowGranularParams, IbCcParams, InjectionMode,
    LbVariant, RoutingPolicy, TopologySpec,
)
from pylib.atoms.format_utils import format_rate, format_size, parse_rate, parse_size
from pylib.atoms.time_utils import format_duration, parse_duration
from pylib.atoms.validate_utils import in_choices, is_probability
from pylib.units import ecn_rules
from services import harness_service, topology_service
from services.engine_service import validate_settings
from services.logger_service import get_logger

logger = get_logger('fabsim.config')


# ============================================================
# 1. 驗證結果
# ============================================================

@dataclass
class ValidationResult:
    """驗證結果；收集所有錯誤而不是遇到第一個就停"""
    valid: bool = True
    errors: List[str] = field(default_factory=list)

    def add_error(self, field: str, message: str, line: Optional[int] = None) -> None:
        where = f"line {line}: " if line is not None else ""
        self.errors.append(f"{where}{field}: {message}")
        self.valid = False

    def to_dict(self) -> Dict[str, Any]:
        return {'valid': self.valid, 'errors': list(self.errors)}

    def raise_if_invalid(self, source: str) -> None:
        if self.valid:
            return
        first = self.errors[0]
        m = re.match(r'^line (\d+): ', first)
        raise ConfigError(
            f"{source}: {len(self.errors)} problem(s)\n  " + "\n  ".join(self.errors),
            line=int(m.group(1)) if m else None,
            key=first.split(': ')[1] if m else first.split(': ')[0],
            problems=self.errors,
        )


# ============================================================
# 2. 轉型器
# ============================================================

_INF = ('inf', 'infinite', 'none')
_BURST_RE = re.compile(r'^\s*([0-9]+)\s*collectives?\s*$')


def _split_list(raw: str) -> List[str]:
    items = [v.strip() for v in raw.split(',')]
    if not items or any(not v for v in items):
        raise ValueError(f"empty item in list {raw!r}")
    return items


def _to_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"expected an integer, got {raw!r}") from None


def _to_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"expected a number, got {raw!r}") from None


def _to_bool(raw: str) -> bool:
    v = raw.lower()
    if v in ('true', 'yes', 'on', '1'):
        return True
    if v in ('false', 'no', 'off', '0'):
        return False
    raise ValueError(f"expected true or false, got {raw!r}")


def _to_burst(raw: str) -> BurstSpec:
    """'4 collectives' 或帶單位的時間長度；純數字不接受"""
    m = _BURST_RE.match(raw)
    if m:
        return BurstSpec(BurstUnit.COLLECTIVES, int(m.group(1)))
    try:
        return BurstSpec(BurstUnit.NS, parse_duration(raw))
    except ValueError:
        raise ValueError(f"burst length needs a unit ('N collectives' or a duration like 10us), got {raw!r}") from None


def _to_gap(raw: str) -> Optional[int]:
    if raw.lower() in _INF:
        return None
    return parse_duration(raw)


def _to_int_or_inf(raw: str) -> Optional[int]:
    if raw.lower() in _INF + ('unbounded',):
        return None
    return _to_int(raw)


_CONVERTERS: Dict[str, Callable[[str], Any]] = {
    'int': _to_int,
    'float': _to_float,
    'bool': _to_bool,
    'rate': parse_rate,
    'size': parse_size,
    'duration': parse_duration,
    'burst': _to_burst,
    'gap': _to_gap,
    'int_or_inf': _to_int_or_inf,
    'sizes': lambda raw: tuple(parse_size(v) for v in _split_list(raw)),
    'ints': lambda raw: tuple(_to_int(v) for v in _split_list(raw)),
    'strs': lambda raw: tuple(_split_list(raw)),
    'bursts': lambda raw: tuple(_to_burst(v) for v in _split_list(raw)),
    'gaps': lambda raw: tuple(_to_gap(v) for v in _split_list(raw)),
}


def convert(key: str, raw: str) -> Any:
    """依綱要把字串轉成值；失敗時拋 ValueError"""
    kind, _ = config_manager.CONFIG_SCHEMA[key]
    if kind == 'choice_preset':
        if raw not in config_manager.TOPOLOGY_PRESETS:
            raise ValueError(f"unknown preset {raw!r} (choose from {', '.join(config_manager.preset_names())})")
        return raw
    if kind == 'choice':
        choices = config_manager.CHOICES[key]
        if not in_choices(raw, choices):
            raise ValueError(f"{raw!r} is not one of {', '.join(choices)}")
        return raw
    return _CONVERTERS[kind](raw)


def render(key: str, value: Any) -> str:
    """convert 的反函數（正規化寫法）"""
    kind, _ = config_manager.CONFIG_SCHEMA[key]
    if kind in ('choice', 'choice_preset'):
        return value
    if kind == 'int':
        return str(value)
    if kind == 'float':
        return repr(float(value))
    if kind == 'bool':
        return 'true' if value else 'false'
    if kind == 'rate':
        return format_rate(value)
    if kind == 'size':
        return format_size(value)
    if kind == 'duration':
        return format_duration(value)
    if kind == 'burst':
        return _render_burst(value)
    if kind == 'gap':
        return 'inf' if value is None else format_duration(value)
    if kind == 'int_or_inf':
        return 'inf' if value is None else str(value)
    if kind == 'sizes':
        return ', '.join(format_size(v) for v in value)
    if kind == 'ints':
        return ', '.join(str(v) for v in value)
    if kind == 'strs':
        return ', '.join(value)
    if kind == 'bursts':
        return ', '.join(_render_burst(v) for v in value)
    if kind == 'gaps':
        return ', '.join('inf' if v is None else format_duration(v) for v in value)
    raise ValueError(f"no renderer for {kind}")


def _render_burst(b: BurstSpec) -> str:
    if b.unit == BurstUnit.COLLECTIVES:
        return f"{b.length} collectives"
    return format_duration(b.length)


# ============================================================
# 3. 讀檔
# ============================================================

@dataclass(frozen=True)
class Entry:
    key: str
    raw: str
    line: int


def read_entries(text: str, result: ValidationResult) -> List[Entry]:
    """逐行讀出 (key, 原始值, 行號)；[section] 為其後鍵的前綴"""
    entries: List[Entry] = []
    section = ''
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split('#', 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith('['):
            if not stripped.endswith(']'):
                result.add_error('section', f"malformed header {stripped!r}", lineno)
                continue
            section = stripped[1:-1].strip()
            if section and not re.match(r'^[a-z_][a-z0-9_.]*$', section):
                result.add_error('section', f"malformed header {stripped!r}", lineno)
            continue
        if '=' not in stripped:
            result.add_error('syntax', f"expected 'key = value', got {stripped!r}", lineno)
            continue
        key, raw = (s.strip() for s in stripped.split('=', 1))
        if not key:
            result.add_error('syntax', "missing key before '='", lineno)
            continue
        full = f"{section}.{key}" if section else key
        if not raw:
            result.add_error(full, "missing value", lineno)
            continue
        entries.append(Entry(full, raw, lineno))
    return entries


# ============================================================
# 4. 套用範圍
# ============================================================

BUILDER_KEYS = {
    'single_switch': ('n', 'rate'),
    'leaf_spine': ('leaves', 'spines', 'nodes_per_leaf', 'spine_links', 'rate'),
    'fat_tree': ('pods', 'edges_per_pod', 'nodes_per_edge', 'taper', 'rate'),
    'dragonfly': ('groups', 'routers_per_group', 'nodes_per_router', 'global_links_per_router', 'plus', 'rate'),
}

_CC_FIELDS = {
    'dcqcn': {'g': 'g', 'timer': 'timer_ns', 'cnp_interval': 'cnp_interval_ns',
              'fast_recovery_steps': 'fast_recovery_steps', 'ai': 'ai_bps', 'min_rate': 'min_rate_bps',
              'kmin': 'kmin', 'kmax': 'kmax', 'pmax': 'pmax'},
    'ib': {'threshold': 'threshold', 'mark_probability': 'mark_probability', 'ipd_step': 'ipd_step_ns',
           'max_ipd': 'max_ipd_ns', 'recovery_decrement': 'recovery_decrement_ns',
           'recovery_interval': 'recovery_interval_ns'},
    'flow_granular': {'window': 'window_ns', 'threshold': 'threshold', 'cap_scale': 'cap_scale',
                      'release_windows': 'release_windows'},
}

_BURSTY_KEYS = ('injection.burst_length', 'injection.idle_gap', 'sweep.burst_lengths', 'sweep.idle_gaps')


def _scope(key: str, values: Dict[str, Any]) -> Optional[str]:
    """鍵在目前設定下不適用時回傳原因，否則 None"""
    parts = key.split('.')
    if parts[0] == 'topology' and key != 'topology.preset':
        preset = values.get('topology.preset')
        if preset is None:
            return None
        builder = config_manager.TOPOLOGY_PRESETS[preset]['builder']
        if parts[1] not in BUILDER_KEYS[builder]:
            return f"does not apply to preset {preset} ({builder})"
        return None
    if key == 'cc.preset' and values.get('cc') == 'none':
        return "only applies when cc is not none"
    if parts[0] == 'cc' and len(parts) == 3 and values.get('cc') != parts[1]:
        return f"only applies when cc = {parts[1]}"
    if parts[0] == 'lb' and len(parts) == 3 and values.get('lb') != parts[1]:
        return f"only applies when lb = {parts[1]}"
    if key in _BURSTY_KEYS and values.get('injection.mode') != 'bursty':
        return "only applies when injection.mode = bursty"
    if key in ('engine.xoff_cells', 'engine.xon_cells') and values.get('engine.flow_control') != 'pfc':
        return "only applies when engine.flow_control = pfc"
    return None


def _implicit_default(key: str, values: Dict[str, Any]) -> Any:
    """綱要沒有預設值的鍵：拓撲參數取自預設組，CC 參數取自 CC 預設組"""
    parts = key.split('.')
    if parts[0] == 'topology':
        return config_manager.TOPOLOGY_PRESETS[values['topology.preset']]['params'].get(parts[1])
    if parts[0] == 'cc' and len(parts) == 3:
        table = config_manager.CC_PRESETS[parts[1]].get(values.get('cc.preset', 'stable'))
        if table is None:
            return None
        return table.get(_CC_FIELDS[parts[1]][parts[2]])
    return None


# ============================================================
# 5. 解析
# ============================================================

@dataclass
class ParsedConfig:
    """解析結果：實驗規格、掃描軸、所有生效的鍵值（含預設）"""
    spec: ExperimentSpec
    axes: harness_service.SweepAxes
    values: Dict[str, Any]
    defaults: List[str]
    source: str = '<text>'


def parse_text(text: str, source: str = '<text>') -> ParsedConfig:
    result = ValidationResult()
    entries = read_entries(text, result)
    schema = config_manager.CONFIG_SCHEMA

    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for e in entries:
        if e.key not in schema:
            result.add_error(e.key, "unknown key", e.line)
            continue
        if e.key in lines:
            result.add_error(e.key, f"duplicate key (first set on line {lines[e.key]})", e.line)
            continue
        lines[e.key] = e.line
        try:
            values[e.key] = convert(e.key, e.raw)
        except ValueError as exc:
            result.add_error(e.key, str(exc), e.line)

    for key in config_manager.REQUIRED_KEYS:
        if key not in lines:
            result.add_error(key, "required key is missing")
    result.raise_if_invalid(source)

    # 選擇鍵先補預設，其它鍵的適用範圍依它們判斷
    defaults: List[str] = []
    for key in ('cc', 'lb', 'injection.mode', 'engine.flow_control'):
        if key not in values:
            values[key] = convert(key, schema[key][1])
            defaults.append(key)
    if values['cc'] != 'none' and 'cc.preset' not in values:
        values['cc.preset'] = convert('cc.preset', schema['cc.preset'][1])
        defaults.append('cc.preset')

    for key in list(lines):
        reason = _scope(key, values)
        if reason:
            result.add_error(key, reason, lines[key])
    result.raise_if_invalid(source)

    for key, (_, default) in schema.items():
        if key in values or key.startswith('sweep.') or _scope(key, values):
            continue
        value = convert(key, default) if default is not None else _implicit_default(key, values)
        if value is None:
            continue
        values[key] = value
        defaults.append(key)
    if 'aggressor.bytes' not in values:
        values['aggressor.bytes'] = max(values['victim.vectors'] + values.get('sweep.vectors', ()))
        defaults.append('aggressor.bytes')

    _check_values(values, lines, result)
    result.raise_if_invalid(source)

    spec, axes = spec_from_values(values)
    try:
        _check_spec(spec, axes)
    except FabsimError as exc:
        result.add_error('spec', str(exc))
    result.raise_if_invalid(source)
    logger.debug(f"parsed {source}: {len(lines)} keys set, {len(defaults)} defaults applied")
    return ParsedConfig(spec=spec, axes=axes, values=values, defaults=defaults, source=source)


def _check_values(values: Dict[str, Any], lines: Dict[str, int], result: ValidationResult) -> None:
    def bad(key: str, message: str) -> None:
        result.add_error(key, message, lines.get(key))

    nodes = values.get('nodes')
    if nodes is not None and (nodes < harness_service.MIN_NODES or nodes % 2):
        bad('nodes', f"node count must be even and >= 4, got {nodes}")
    for n in values.get('sweep.nodes', ()):
        if n < harness_service.MIN_NODES or n % 2:
            bad('sweep.nodes', f"node count must be even and >= 4, got {n}")
    for v in values.get('victim.vectors', ()) + values.get('sweep.vectors', ()):
        if v < 1:
            bad('victim.vectors', "vector sizes must be >= 1 byte")
    for a in values.get('sweep.aggressors', ()):
        if not in_choices(a, config_manager.CHOICES['aggressor.pattern']):
            bad('sweep.aggressors', f"{a!r} is not one of {', '.join(config_manager.CHOICES['aggressor.pattern'])}")
    if values.get('cc') == 'flow_granular' and values.get('cc.preset') not in config_manager.CC_PRESETS['flow_granular']:
        bad('cc.preset', f"flow_granular has no {values.get('cc.preset')} preset")
    for key in ('cc.dcqcn.pmax', 'cc.ib.mark_probability'):
        if key in values and not is_probability(values[key], allow_zero=True):
            bad(key, "must be in [0, 1]")
    if 'cc.dcqcn.g' in values and not is_probability(values['cc.dcqcn.g']):
        bad('cc.dcqcn.g', "must be in (0, 1]")
    if 'cc.flow_granular.cap_scale' in values and not is_probability(values['cc.flow_granular.cap_scale']):
        bad('cc.flow_granular.cap_scale', "must be in (0, 1]")
    for key in ('iterations', 'collectives.alltoall_window', 'engine.cell_size'):
        if key in values and values[key] < 1:
            bad(key, "must be >= 1")
    if 'warmup' in values and 'iterations' in values and not 0 <= values['warmup'] < values['iterations']:
        bad('warmup', f"must be in [0, iterations), got {values['warmup']}")
    if values.get('seed', 0) < 0:
        bad('seed', "must be >= 0")


def _check_spec(spec: ExperimentSpec, axes: harness_service.SweepAxes) -> None:
    validate_settings(spec.engine)
    harness_service.validate_spec(spec)
    if spec.cc.variant == CcVariant.DCQCN and spec.engine.buffer_cells is not None:
        ok, msg = ecn_rules.validate_ecn(spec.cc.dcqcn.ecn, spec.engine.buffer_cells * spec.engine.cell_bytes)
        if not ok:
            raise InvalidParameterError(f"ecn thresholds: {msg}")
    topo = topology_service.build_from_preset(spec.topology.preset, spec.topology.params,
                                              latency_ns=spec.engine.link_latency_ns)
    for n in axes.nodes or (spec.nodes,):
        if n > len(topo.endpoints):
            raise InvalidParameterError(f"{n} nodes requested but {topo.name} has {len(topo.endpoints)} endpoints")


def spec_from_values(values: Dict[str, Any]) -> Tuple[ExperimentSpec, harness_service.SweepAxes]:
    """已補齊預設的鍵值 → (ExperimentSpec, SweepAxes)"""
    preset = values['topology.preset']
    builder = config_manager.TOPOLOGY_PRESETS[preset]['builder']
    params = {k: values[f"topology.{k}"] for k in BUILDER_KEYS[builder] if f"topology.{k}" in values}

    vectors = tuple(values['victim.vectors'])
    all_vectors = vectors + tuple(values.get('sweep.vectors', ()))
    aggressor_bytes = values.get('aggressor.bytes', max(all_vectors))

    bursty = values['injection.mode'] == 'bursty'
    burst = BurstSpec()
    if bursty:
        b = values['injection.burst_length']
        burst = BurstSpec(b.unit, b.length, values['injection.idle_gap'])

    spec = ExperimentSpec(
        topology=TopologySpec(preset, params),
        nodes=values['nodes'],
        victim=CollectiveKind(values['victim.collective']),
        vectors=vectors,
        aggressor=CollectiveKind(values['aggressor.pattern']),
        aggressor_bytes=aggressor_bytes,
        injection=InjectionMode(values['injection.mode']),
        burst=burst,
        cc=_cc_from_values(values),
        lb=RoutingPolicy(
            variant=LbVariant(values['lb']),
            seed=values.get('lb.ecmp.seed', 0),
            interval_ns=values.get('lb.adaptive.interval', RoutingPolicy.interval_ns),
            bias=values.get('lb.adaptive.bias', RoutingPolicy.bias),
            staleness_ns=values.get('lb.adaptive.staleness', RoutingPolicy.staleness_ns),
        ),
        engine=EngineSettings(
            cell_bytes=values['engine.cell_size'],
            buffer_cells=values['engine.buffer_cells'],
            flow_control=FlowControl(values['engine.flow_control']),
            xoff_cells=values.get('engine.xoff_cells', EngineSettings.xoff_cells),
            xon_cells=values.get('engine.xon_cells', EngineSettings.xon_cells),
            link_latency_ns=values['engine.link_latency'],
        ),
        alltoall_window=values['collectives.alltoall_window'],
        iterations=values['iterations'],
        warmup=values['warmup'],
        seed=values['seed'],
    )
    axes = harness_service.SweepAxes(
        nodes=tuple(values.get('sweep.nodes', ())),
        vectors=tuple(values.get('sweep.vectors', ())),
        aggressors=tuple(CollectiveKind(a) for a in values.get('sweep.aggressors', ())),
        bursts=tuple(values.get('sweep.burst_lengths', ())) if bursty else (),
        gaps=tuple(values.get('sweep.idle_gaps', ())) if bursty else (),
    )
    return spec, axes


def _cc_from_values(values: Dict[str, Any]) -> CcConfig:
    variant = values['cc']
    if variant == 'none':
        return CcConfig()
    preset = values['cc.preset']
    fields = {f: values[f"cc.{variant}.{k}"] for k, f in _CC_FIELDS[variant].items()
              if f"cc.{variant}.{k}" in values}
    if variant == 'dcqcn':
        ecn = EcnConfig(kmin=fields.pop('kmin'), kmax=fields.pop('kmax'), pmax=fields.pop('pmax'))
        return CcConfig(variant=CcVariant.DCQCN, preset=preset, dcqcn=DcqcnParams(ecn=ecn, **fields))
    if variant == 'ib':
        return CcConfig(variant=CcVariant.IB, preset=preset, ib=IbCcParams(**fields))
    return CcConfig(variant=CcVariant.FLOW_GRANULAR, preset=preset, flow_granular=FlowGranularParams(**fields))


def parse_config(path: Any) -> ExperimentSpec:
    """讀設定檔 → 完整驗證、已套用預設值的 ExperimentSpec"""
    return load_config(path).spec


def load_config(path: Any) -> ParsedConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from exc
    return parse_text(text, source=str(p))


# ============================================================
# 6. 正規化輸出
# ============================================================

def dump_spec(parsed: ParsedConfig) -> str:
    """所有生效鍵的正規化設定檔；套用的預設值標上 '# default'

    頂層鍵在前，其餘依綱要順序分節。dump 的結果再解析會得到相同的規格。
    """
    top: List[str] = []
    sections: Dict[str, List[str]] = {}
    for key in config_manager.CONFIG_SCHEMA:
        if key not in parsed.values:
            continue
        text = f"{render(key, parsed.values[key])}"
        mark = '  # default' if key in parsed.defaults else ''
        if '.' not in key:
            top.append(f"{key} = {text}{mark}")
        else:
            section, name = key.rsplit('.', 1)
            sections.setdefault(section, []).append(f"{name} = {text}{mark}")
    out = [f"# normalized from {Path(parsed.source).name}"] + top
    for section, lines in sections.items():
        out.append('')
        out.append(f"[{section}]")
        out.extend(lines)
    return '\n'.join(out) + '\n'


# 📚 知識點
# -----------
# 1. 綱要驅動：鍵、型別、預設值集中在 config_manager.CONFIG_SCHEMA
# 2. 錯誤收集：同一個檔案的所有問題一次回報，每筆帶行號
# 3. 適用範圍：只對目前 cc / lb / 注入模式有意義的鍵，設錯地方就報錯
# 4. 往返性質：parse(dump(parse(x))) 與 parse(x) 得到相同規格
