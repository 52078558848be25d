from __future__ import annotations

from dataclasses import replace

from models.types import DcqcnParams, DcqcnState

# close enough to line rate to stop the recovery timer
SNAP_FRACTION = 0.999


def initial_state(line_rate: float, params: DcqcnParams) -> DcqcnState:
    return DcqcnState(
        current=float(line_rate),
        target=float(line_rate),
        alpha=1.0,
        line_rate=float(line_rate),
        min_rate=float(min(params.min_rate_bps, line_rate)),
    )


def on_cnp(state: DcqcnState, params: DcqcnParams) -> DcqcnState:
    """Rate cut on a congestion notification.

    target <- current, current <- current * (1 - alpha/2) with the alpha
    held before this notification, then alpha moves toward 1 by gain g.
    """
    cut = state.current * (1.0 - state.alpha / 2.0)
    alpha = (1.0 - params.g) * state.alpha + params.g
    return replace(
        state,
        target=state.current,
        current=max(state.min_rate, cut),
        alpha=min(1.0, alpha),
        stage=0,
    )


def recover(state: DcqcnState, params: DcqcnParams) -> DcqcnState:
    """One quiet timer period: alpha decays, rate climbs.

    The first `fast_recovery_steps` steps halve the gap to target; later
    steps first raise target by the additive increment.
    """
    alpha = (1.0 - params.g) * state.alpha
    target = state.target
    if state.stage >= params.fast_recovery_steps:
        target = min(state.line_rate, target + params.ai_bps)
    current = min(state.line_rate, (state.current + target) / 2.0)
    if target >= state.line_rate and current >= state.line_rate * SNAP_FRACTION:
        current = state.line_rate
    return replace(state, current=current, target=target, alpha=max(0.0, alpha), stage=state.stage + 1)


def is_recovered(state: DcqcnState) -> bool:
    return state.current >= state.line_rate and state.target >= state.line_rate


def check_state(state: DcqcnState) -> bool:
    return 0.0 < state.current <= state.line_rate and 0.0 <= state.alpha <= 1.0
