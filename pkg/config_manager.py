"""
fabsim v1.0 - 配置管理器

功能：環境變數管理、拓撲/擁塞控制預設組、設定檔鍵值綱要
"""
import os

# ===== 環境變數載入 =====

def get_env(key, default=None, cast=str):
    """取得環境變數

    Args:
        key: 環境變數名稱
        default: 預設值
        cast: 類型轉換函數

    Returns:
        轉換後的值
    """
    value = os.environ.get(key)

    if value is None:
        return default

    if cast == bool:
        return value.lower() in ('true', '1', 'yes', 'on')

    try:
        return cast(value)
    except (ValueError, TypeError):
        return default


# ===== 配置類 =====

class Config:
    """行程層級配置"""

    VERSION = '1.0.0'

    # 平行度：sweep 同時執行的格數上限
    THREADS = get_env('FABSIM_THREADS', os.cpu_count() or 1, int)

    OUT_DIR = get_env('FABSIM_OUT_DIR', './out')
    TRACE_DEFAULT = get_env('FABSIM_TRACE', False, bool)
    SLOW_CELL_MS = get_env('FABSIM_SLOW_CELL_MS', 60000.0, float)

    LOG_LEVEL = get_env('LOG_LEVEL', 'INFO')
    LOG_FORMAT = get_env('LOG_FORMAT', 'text')
    LOG_DIR = get_env('LOG_DIR', '')

    @classmethod
    def validate(cls):
        """驗證配置；回傳錯誤訊息列表"""
        errors = []

        if cls.THREADS is None or cls.THREADS < 1:
            errors.append('FABSIM_THREADS 必須 >= 1')

        if cls.LOG_FORMAT not in ('text', 'json'):
            errors.append('LOG_FORMAT 只能是 text 或 json')

        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            errors.append(f'LOG_LEVEL 不合法: {cls.LOG_LEVEL}')

        return errors

    @classmethod
    def to_dict(cls):
        """轉為字典（寫入 sidecar 用）"""
        result = {}
        for key in dir(cls):
            if key.isupper() and not key.startswith('_'):
                value = getattr(cls, key)
                if not callable(value):
                    result[key] = value
        return result


# ===== 拓撲預設組 =====
# 連結速率依各系統端點速率；群組數等未公開的參數為文件化的預設值

TOPOLOGY_PRESETS = {
    'haicgu-sw': {
        'builder': 'single_switch',
        'description': 'single switch, 100G endpoints',
        'params': {'n': 10, 'rate': 100_000_000_000},
    },
    'nanjing-ls': {
        'builder': 'leaf_spine',
        'description': '2 leaves x 2 spines, 200G, two links per leaf-spine pair',
        'params': {'leaves': 2, 'spines': 2, 'nodes_per_leaf': 4, 'spine_links': 2,
                   'rate': 200_000_000_000},
    },
    'cresco8-ft': {
        'builder': 'fat_tree',
        'description': '3-tier fat tree, 1.67:1 taper at the edge, 200G',
        'params': {'pods': 4, 'edges_per_pod': 2, 'nodes_per_edge': 5, 'taper': 1.67,
                   'rate': 200_000_000_000},
    },
    'leonardo-dfp': {
        'builder': 'dragonfly',
        'description': 'dragonfly+ (leaf/spine groups), 400G',
        'params': {'groups': 4, 'routers_per_group': 4, 'nodes_per_router': 4, 'plus': True,
                   'rate': 400_000_000_000},
    },
    'lumi-df': {
        'builder': 'dragonfly',
        'description': 'dragonfly, all-to-all groups, 800G',
        'params': {'groups': 4, 'routers_per_group': 4, 'nodes_per_router': 2, 'plus': False,
                   'rate': 800_000_000_000},
    },
}


# ===== 擁塞控制預設組 =====
# stable：公開的 DCQCN 預設值按模擬鏈路縮放
# unstable：慢恢復 + 激進標記，用來重現鋸齒狀吞吐

CELL = 4096

CC_PRESETS = {
    'dcqcn': {
        'stable': {
            'g': 1 / 16, 'timer_ns': 55_000, 'cnp_interval_ns': 50_000,
            'fast_recovery_steps': 5, 'ai_bps': 5_000_000_000, 'min_rate_bps': 100_000_000,
            'kmin': 8 * CELL, 'kmax': 48 * CELL, 'pmax': 0.2,
        },
        'unstable': {
            'g': 0.5, 'timer_ns': 40_000, 'cnp_interval_ns': 2_000,
            'fast_recovery_steps': 1, 'ai_bps': 1_000_000_000, 'min_rate_bps': 100_000_000,
            'kmin': 1 * CELL, 'kmax': 4 * CELL, 'pmax': 1.0,
        },
    },
    'ib': {
        'stable': {
            'threshold': 16 * CELL, 'mark_probability': 0.1, 'ipd_step_ns': 50,
            'max_ipd_ns': 5_000, 'recovery_decrement_ns': 50, 'recovery_interval_ns': 2_000,
        },
        'unstable': {
            'threshold': 4 * CELL, 'mark_probability': 1.0, 'ipd_step_ns': 1_000,
            'max_ipd_ns': 4_000, 'recovery_decrement_ns': 100, 'recovery_interval_ns': 2_000,
        },
    },
    'flow_granular': {
        'stable': {'window_ns': 2_000, 'threshold': 8 * CELL, 'cap_scale': 0.9, 'release_windows': 16},
    },
}


# ===== 負載平衡 / 引擎預設 =====

LB_DEFAULTS = {
    'variant': 'ecmp',
    'seed': 0,
    'interval_ns': 5_000,
    'bias': 0.5,
    'staleness_ns': 0,
}

ENGINE_DEFAULTS = {
    'cell_bytes': CELL,
    'buffer_cells': 64,
    'flow_control': 'credit',
    'xoff_cells': 48,
    'xon_cells': 32,
    'link_latency_ns': 100,
}

METHODOLOGY_DEFAULTS = {
    'iterations': 1000,
    'warmup': 100,
    'alltoall_window': 4,
    'seed': 1,
}


# ===== 設定檔綱要 =====
# key -> (型別, 預設值)；預設值為 None 代表不設定時由程式推導

CHOICES = {
    'victim.collective': ('allgather', 'alltoall'),
    'aggressor.pattern': ('alltoall', 'incast', 'permutation'),
    'injection.mode': ('steady', 'bursty'),
    'cc': ('none', 'dcqcn', 'ib', 'flow_granular'),
    'cc.preset': ('stable', 'unstable'),
    'lb': ('deterministic', 'ecmp', 'adaptive', 'nslb'),
    'engine.flow_control': ('credit', 'pfc'),
}

CONFIG_SCHEMA = {
    'topology.preset': ('choice_preset', None),
    'topology.n': ('int', None),
    'topology.leaves': ('int', None),
    'topology.spines': ('int', None),
    'topology.nodes_per_leaf': ('int', None),
    'topology.spine_links': ('int', None),
    'topology.pods': ('int', None),
    'topology.edges_per_pod': ('int', None),
    'topology.nodes_per_edge': ('int', None),
    'topology.taper': ('float', None),
    'topology.groups': ('int', None),
    'topology.routers_per_group': ('int', None),
    'topology.nodes_per_router': ('int', None),
    'topology.global_links_per_router': ('int', None),
    'topology.plus': ('bool', None),
    'topology.rate': ('rate', None),
    'nodes': ('int', None),
    'victim.collective': ('choice', None),
    'victim.vectors': ('sizes', '32KiB'),
    'aggressor.pattern': ('choice', 'alltoall'),
    'aggressor.bytes': ('size', None),
    'injection.mode': ('choice', 'steady'),
    'injection.burst_length': ('burst', '1 collectives'),
    'injection.idle_gap': ('gap', '0ns'),
    'cc': ('choice', 'none'),
    'cc.preset': ('choice', 'stable'),
    'cc.dcqcn.g': ('float', None),
    'cc.dcqcn.timer': ('duration', None),
    'cc.dcqcn.cnp_interval': ('duration', None),
    'cc.dcqcn.fast_recovery_steps': ('int', None),
    'cc.dcqcn.ai': ('rate', None),
    'cc.dcqcn.min_rate': ('rate', None),
    'cc.dcqcn.kmin': ('size', None),
    'cc.dcqcn.kmax': ('size', None),
    'cc.dcqcn.pmax': ('float', None),
    'cc.ib.threshold': ('size', None),
    'cc.ib.mark_probability': ('float', None),
    'cc.ib.ipd_step': ('duration', None),
    'cc.ib.max_ipd': ('duration', None),
    'cc.ib.recovery_decrement': ('duration', None),
    'cc.ib.recovery_interval': ('duration', None),
    'cc.flow_granular.window': ('duration', None),
    'cc.flow_granular.threshold': ('size', None),
    'cc.flow_granular.cap_scale': ('float', None),
    'cc.flow_granular.release_windows': ('int', None),
    'lb': ('choice', LB_DEFAULTS['variant']),
    'lb.ecmp.seed': ('int', str(LB_DEFAULTS['seed'])),
    'lb.adaptive.interval': ('duration', '5us'),
    'lb.adaptive.bias': ('float', str(LB_DEFAULTS['bias'])),
    'lb.adaptive.staleness': ('duration', '0ns'),
    'engine.cell_size': ('size', '4KiB'),
    'engine.buffer_cells': ('int_or_inf', str(ENGINE_DEFAULTS['buffer_cells'])),
    'engine.flow_control': ('choice', ENGINE_DEFAULTS['flow_control']),
    'engine.xoff_cells': ('int', str(ENGINE_DEFAULTS['xoff_cells'])),
    'engine.xon_cells': ('int', str(ENGINE_DEFAULTS['xon_cells'])),
    'engine.link_latency': ('duration', '100ns'),
    'collectives.alltoall_window': ('int', str(METHODOLOGY_DEFAULTS['alltoall_window'])),
    'iterations': ('int', str(METHODOLOGY_DEFAULTS['iterations'])),
    'warmup': ('int', str(METHODOLOGY_DEFAULTS['warmup'])),
    'seed': ('int', str(METHODOLOGY_DEFAULTS['seed'])),
    'sweep.nodes': ('ints', None),
    'sweep.vectors': ('sizes', None),
    'sweep.aggressors': ('strs', None),
    'sweep.burst_lengths': ('bursts', None),
    'sweep.idle_gaps': ('gaps', None),
}

REQUIRED_KEYS = ('topology.preset', 'nodes', 'victim.collective')


def preset_names():
    return sorted(TOPOLOGY_PRESETS)
