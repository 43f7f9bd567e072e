"""Shared fixtures and small-state helpers for driving the simulator."""

import numpy as np
import pytest

from chainsim.engine import Engine
from chainsim.protocol import cancel_mining
from chainsim.runner import build_state
from chainsim.scenario import RelayConfig, Scenario, StrategyConfig


def tiny_scenario(**kw) -> Scenario:
    base = dict(
        name="test",
        n_nodes=12,
        block_size_bytes=8192,
        target_interval_ms=20_000,
        stop_blocks=30,
        degree=3,
        seed=7,
    )
    strategy = kw.pop("strategy", None)
    relay = kw.pop("relay", None)
    base.update(kw)
    scn = Scenario(**base)
    if strategy is not None:
        object.__setattr__(scn, "strategy", StrategyConfig(**strategy))
    if relay is not None:
        object.__setattr__(scn, "relay", RelayConfig(**relay))
    return scn.validate()


def make_engine(scn=None, seed=None, trace=True, full_recv=False, **kw) -> Engine:
    scn = scn or tiny_scenario(**kw)
    st = build_state(scn, seed if seed is not None else scn.seed,
                     trace=trace, full_recv=full_recv)
    return Engine(st)


def freeze_mining(eng: Engine) -> None:
    """Cancel all pending mining and stop rescheduling (controllable queue).

    Forced BLOCK_MINED events scheduled by a test still fire; they just
    don't chain into fresh mining draws.
    """
    st = eng.state
    st.run.draining[0] = 1
    for i in range(int(st.prm.n)):
        cancel_mining(st, i)
    assert eng.queue_size == 0


def rewire(eng: Engine, out_map: dict) -> None:
    """Replace the whole topology with explicit out-neighbor lists."""
    st = eng.state
    n = int(st.prm.n)
    st.nodes.out[:] = -1
    st.nodes.out_n[:] = 0
    st.nodes.strat_k[:] = 0
    st.nodes.adj[:] = 0
    st.nodes.in_list[:] = -1
    st.nodes.in_n[:] = 0
    for node, targets in out_map.items():
        assert len(targets) <= st.nodes.out.shape[1]
        for idx, j in enumerate(targets):
            st.nodes.out[node, idx] = j
            st.nodes.adj[node, j] += 1
        st.nodes.out_n[node] = len(targets)
        st.nodes.strat_k[node] = len(targets)
    for node in range(n):
        for idx in range(int(st.nodes.out_n[node])):
            j = int(st.nodes.out[node, idx])
            m = int(st.nodes.in_n[j])
            already = any(st.nodes.in_list[j, x] == node for x in range(m))
            if not already and m < int(st.prm.cap_in):
                st.nodes.in_list[j, m] = node
                st.nodes.in_n[j] = m + 1


def trace_rows(eng: Engine) -> list:
    """Message trace as a list of dicts (only valid with trace=True)."""
    st = eng.state
    cnt = min(int(st.trace.count[0]), st.trace.kind.shape[0])
    return [
        dict(
            kind=int(st.trace.kind[i]),
            frm=int(st.trace.frm[i]),
            to=int(st.trace.to[i]),
            blk=int(st.trace.blk[i]),
            send=int(st.trace.send[i]),
            arrive=int(st.trace.arrive[i]),
        )
        for i in range(cnt)
    ]


@pytest.fixture
def tiny_engine():
    return make_engine()
