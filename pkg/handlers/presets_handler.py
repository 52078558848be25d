"""
fabsim v1.0 - 預設組指令

功能：presets list，列出拓撲與擁塞控制預設組及其參數
"""
from __future__ import annotations

from argparse import Namespace
from typing import Any, List

import config_manager
from pylib.atoms.format_utils import format_rate
from services import topology_service

from .base import EXIT_OK, BaseHandler


def _value(key: str, value: Any) -> str:
    if key == 'rate' or key.endswith('_bps'):
        return format_rate(int(value))
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def preset_lines() -> List[str]:
    lines = ['topology presets:']
    for name in config_manager.preset_names():
        preset = config_manager.TOPOLOGY_PRESETS[name]
        topo = topology_service.build_from_preset(name)
        params = ', '.join(f"{k}={_value(k, v)}" for k, v in preset['params'].items())
        lines.append(f"  {name:<14} {preset['builder']:<13} {len(topo.endpoints):>4} endpoints  {params}")
        lines.append(f"  {'':<14} {preset['description']}")
    lines.append('')
    lines.append('congestion-control presets:')
    for variant in sorted(config_manager.CC_PRESETS):
        for preset, params in config_manager.CC_PRESETS[variant].items():
            body = ', '.join(f"{k}={_value(k, v)}" for k, v in params.items())
            lines.append(f"  {variant}.{preset:<10} {body}")
    return lines


def handle_list(args: Namespace) -> int:
    BaseHandler.emit('\n'.join(preset_lines()))
    return EXIT_OK
