from __future__ import annotations

from dataclasses import replace

from models.types import IbCcParams, IbCcState


def initial_state(params: IbCcParams) -> IbCcState:
    return IbCcState(
        ipd_ns=0,
        mark_probability=params.mark_probability,
        recovery_decrement_ns=params.recovery_decrement_ns,
    )


def should_mark_fecn(occupancy: int, params: IbCcParams, u: float) -> bool:
    if occupancy < params.threshold:
        return False
    return u < params.mark_probability


def apply_becn(state: IbCcState, params: IbCcParams) -> IbCcState:
    return replace(state, ipd_ns=min(params.max_ipd_ns, state.ipd_ns + params.ipd_step_ns))


def recover(state: IbCcState) -> IbCcState:
    """One BECN-free recovery interval; delay never goes negative."""
    return replace(state, ipd_ns=max(0, state.ipd_ns - state.recovery_decrement_ns))


def effective_rate(line_rate: float, cell_time_ns: float, ipd_ns: float) -> float:
    """Injection rate once every cell is followed by an inter-packet delay."""
    if cell_time_ns <= 0:
        return float(line_rate)
    return cell_time_ns / (cell_time_ns + ipd_ns) * line_rate
