from __future__ import annotations

from typing import Mapping

from models.types import FlowGranularCcState, FlowID

# caps never fall below this fraction of the fair share
MIN_CAP_FRACTION = 0.1


def fair_share(capacity_bps: float, active_flows: int) -> float:
    if active_flows <= 0:
        return float(capacity_bps)
    return capacity_bps / active_flows


def select_throttled(
    contributions: Mapping[FlowID, int],
    *,
    capacity_bps: float,
    window_ns: float,
    occupancy: int,
    threshold: int,
    cap_scale: float = 1.0,
    slack_bytes: int = 0,
) -> FlowGranularCcState:
    """Rebuild the throttle set of one port from a window of contributions.

    Parameters
    ----------
    contributions:
        flow id -> bytes the flow pushed through the port during the window.
    capacity_bps:
        Egress capacity of the port.
    occupancy, threshold:
        Throttling only happens while the queue sits above threshold.
    slack_bytes:
        Contributions are counted in whole cells; a flow within slack_bytes
        of its fair share counts as being at it.

    Returns
    -------
    FlowGranularCcState:
        Flows at or above fair share are throttled to ``fair share * cap_scale``;
        flows below fair share never appear in the throttle set. A port with a
        single contributing flow is never congested.
    """
    active = {fid: b for fid, b in contributions.items() if b > 0}
    if not active or window_ns <= 0:
        return FlowGranularCcState(contributions=dict(contributions))
    share = fair_share(capacity_bps, len(active))
    if occupancy <= threshold or len(active) < 2:
        return FlowGranularCcState(contributions=dict(contributions), fair_share_bps=share)
    share_bytes = share * window_ns * 1e-9 / 8
    throttle = frozenset(fid for fid, b in active.items() if b + slack_bytes >= share_bytes)
    caps = {fid: share * cap_scale for fid in throttle}
    return FlowGranularCcState(
        contributions=dict(contributions),
        throttle=throttle,
        caps=caps,
        fair_share_bps=share,
        congested=True,
    )


def tighten_cap(previous: float, fresh: float, cap_scale: float, share_bps: float) -> float:
    """A flow still at fair share on a congested port: cut again, floored."""
    return max(share_bps * MIN_CAP_FRACTION, min(fresh, previous * cap_scale))


def relax_cap(cap: float, cap_scale: float, line_bps: float) -> float:
    """One quiet window: the cap climbs back by the inverse of cap_scale."""
    return min(float(line_bps), cap / cap_scale)
