"""Per-node chain state machine and the INV/GETDATA/BLOCK exchange.

A node announces a newly held tip with zero-size INV messages. A
receiver lacking the block replies GETDATA (zero size) to the first
announcer only; the full block body travels back sized at the scenario
block size. Duplicate INVs for a block already requested or held produce
no further requests, so a body is never transferred to a node that has
it.

Chain rule: adopt a received block as tip only when its ancestry is
fully held and its height strictly exceeds the current tip's (ties keep
the first-received tip). Adoption cancels the pending mining event,
reschedules mining on the new tip, and re-announces the block to every
announce target except the peer it came from. Blocks that are not
adopted are stored but not relayed. Missing parents are backfilled with
recursive GETDATA to the delivering peer.

Announcement direction: a node's announce set is its own out-neighbor
slots plus, when the scenario runs in bidirectional mode (the default,
matching TCP peerings where both ends announce), the peers currently
listing it as an out-neighbor.

These handlers drive one event at a time and are the unit-test surface;
full scenario runs go through the fused loop in kernelloop.py, which is
the same machine with the state unpacked once (asserted equivalent by
run-digest tests).
"""

from dataclasses import dataclass

from ._backend import kernel
from .consensus import sample_mining_interval
from .eventheap import (
    EV_BLOCK,
    EV_GETDATA,
    EV_INV,
    EV_MINE,
    EV_REFRESH,
    heap_pop_min,
    heap_push,
    heap_remove,
    slot_alloc,
    slot_release,
)
from .simstate import (
    FULLCHAIN,
    KNOWN,
    REQUESTED,
    STRATEGY_ADAPTIVE,
)
from .strategy import record_observation, refresh_neighbors
from .topology import block_arrival_at, delay_ms_between

GENESIS = 0


@dataclass(frozen=True)
class Block:
    """Python-side view of a block row (oracles, dumps, tests)."""

    id: int
    parent: int
    creator: int
    created_at: int
    height: int
    size: int


@kernel
def schedule_event(st, kind, a, b, c, fire):
    """Allocate a slot and enqueue it at (fire, next seq). Returns the slot."""
    s = slot_alloc(
        st.pool.kind, st.pool.a, st.pool.b, st.pool.c, st.pool.fire,
        st.pool.pos, st.pool.free, st.pool.free_top, kind, a, b, c, fire,
    )
    if s < 0:
        raise RuntimeError("event pool exhausted; increase scenario queue_capacity")
    q = st.run.seq[0]
    st.run.seq[0] = q + 1
    if not heap_push(
        st.heap.time, st.heap.seq, st.heap.slot, st.heap.size, st.pool.pos,
        fire, q, s,
    ):
        raise RuntimeError("event queue overflow; increase scenario queue_capacity")
    return s


@kernel
def _trace_msg(st, kind, frm, to, blk, send, arrive):
    if st.prm.trace == 1:
        i = st.trace.count[0]
        if i < st.trace.kind.shape[0]:
            st.trace.kind[i] = kind
            st.trace.frm[i] = frm
            st.trace.to[i] = to
            st.trace.blk[i] = blk
            st.trace.send[i] = send
            st.trace.arrive[i] = arrive
        st.trace.count[0] = i + 1


@kernel
def send_inv(st, sender, receiver, blk):
    now = st.run.clock[0]
    arrive = now + delay_ms_between(st, sender, receiver)
    schedule_event(st, EV_INV, sender, receiver, blk, arrive)
    _trace_msg(st, EV_INV, sender, receiver, blk, now, arrive)


@kernel
def send_getdata(st, requester, holder, blk):
    now = st.run.clock[0]
    arrive = now + delay_ms_between(st, requester, holder)
    schedule_event(st, EV_GETDATA, requester, holder, blk, arrive)
    _trace_msg(st, EV_GETDATA, requester, holder, blk, now, arrive)


@kernel
def send_block(st, sender, receiver, blk):
    now = st.run.clock[0]
    arrive = block_arrival_at(st, now, sender, receiver)
    schedule_event(st, EV_BLOCK, sender, receiver, blk, arrive)
    _trace_msg(st, EV_BLOCK, sender, receiver, blk, now, arrive)


@kernel
def announce(st, node, blk, exclude):
    """INV fan-out to the node's announce set, minus one excluded peer."""
    sent = 0
    for idx in range(st.nodes.out_n[node]):
        j = st.nodes.out[node, idx]
        if j != exclude:
            send_inv(st, node, j, blk)
            sent += 1
    if st.prm.bidirectional == 1:
        for idx in range(st.nodes.in_n[node]):
            j = st.nodes.in_list[node, idx]
            if j != exclude and st.nodes.adj[node, j] == 0:
                send_inv(st, node, j, blk)
                sent += 1
    return sent


@kernel
def schedule_mining(st, node):
    """Draw a fresh success time for the node's current tip."""
    if st.run.draining[0] == 1:
        return
    iv = sample_mining_interval(
        st.run.rng, st.nodes.capacity[node], st.prm.difficulty
    )
    fire = st.run.clock[0] + iv
    s = schedule_event(st, EV_MINE, node, st.nodes.tip[node], 0, fire)
    st.nodes.mine_slot[node] = s


@kernel
def cancel_mining(st, node):
    s = st.nodes.mine_slot[node]
    if s >= 0:
        if heap_remove(
            st.heap.time, st.heap.seq, st.heap.slot, st.heap.size,
            st.pool.pos, s,
        ):
            slot_release(st.pool.gen, st.pool.pos, st.pool.free,
                         st.pool.free_top, s)
        st.nodes.mine_slot[node] = -1


@kernel
def _count_reception(st, blk, node, now):
    """First full-block possession by `node`; updates half-coverage marks."""
    elapsed = now - st.blocks.created[blk]
    c = st.blocks.recv_all[blk] + 1
    st.blocks.recv_all[blk] = c
    if c == st.prm.half_all and st.blocks.half_all_t[blk] < 0:
        st.blocks.half_all_t[blk] = elapsed
    if st.nodes.relay[node] == 1:
        c = st.blocks.recv_member[blk] + 1
        st.blocks.recv_member[blk] = c
        if c == st.prm.half_member and st.blocks.half_member_t[blk] < 0:
            st.blocks.half_member_t[blk] = elapsed
    else:
        c = st.blocks.recv_nonmember[blk] + 1
        st.blocks.recv_nonmember[blk] = c
        if c == st.prm.half_nonmember and st.blocks.half_nonmember_t[blk] < 0:
            st.blocks.half_nonmember_t[blk] = elapsed
    if st.prm.full_recv == 1:
        st.trace.recv_time[blk, node] = now


@kernel
def _on_accept(st, node):
    """Count a tip adoption toward the strategy refresh window."""
    if st.prm.strategy != STRATEGY_ADAPTIVE:
        return
    acc = st.nodes.accepted[node] + 1
    if acc >= st.prm.refresh_window and st.nodes.refresh_pending[node] == 0:
        st.nodes.accepted[node] = 0
        st.nodes.refresh_pending[node] = 1
        schedule_event(st, EV_REFRESH, node, 0, 0, st.run.clock[0])
    else:
        st.nodes.accepted[node] = acc


@kernel
def handle_mine(st, node, parent):
    """Mining success: the node pending event fired on its current tip."""
    if st.nodes.tip[node] != parent:
        # Stale events are cancelled on tip change; firing one is a bug.
        raise RuntimeError("mining event fired for a stale tip")
    now = st.run.clock[0]
    blk = st.blocks.next_id[0]
    if blk >= st.prm.bcap:
        raise RuntimeError("block capacity exceeded")
    st.blocks.next_id[0] = blk + 1
    st.blocks.parent[blk] = parent
    st.blocks.creator[blk] = node
    st.blocks.created[blk] = now
    st.blocks.height[blk] = st.blocks.height[parent] + 1
    st.blocks.stat[blk, node] = KNOWN | FULLCHAIN
    _count_reception(st, blk, node, now)
    st.nodes.tip[node] = blk
    st.run.mined[0] += 1
    announce(st, node, blk, -1)
    schedule_mining(st, node)
    _on_accept(st, node)
    return blk


@kernel
def handle_inv(st, sender, node, blk):
    if st.prm.strategy == STRATEGY_ADAPTIVE:
        elapsed = st.run.clock[0] - st.blocks.created[blk]
        record_observation(
            st.strat.keys, st.strat.wsum, st.strat.wcnt, st.strat.map_n,
            node, sender, float(elapsed), st.prm.lam,
        )
    if st.blocks.stat[blk, node] & (KNOWN | REQUESTED) == 0:
        st.blocks.stat[blk, node] |= REQUESTED
        send_getdata(st, node, sender, blk)


@kernel
def handle_getdata(st, requester, node, blk):
    if st.blocks.stat[blk, node] & KNOWN != 0:
        send_block(st, node, requester, blk)
    else:
        st.run.getdata_unknown[0] += 1


@kernel
def _adopt(st, node, blk, exclude):
    cancel_mining(st, node)
    st.nodes.tip[node] = blk
    announce(st, node, blk, exclude)
    schedule_mining(st, node)
    _on_accept(st, node)


@kernel
def handle_block(st, sender, node, blk):
    if st.blocks.stat[blk, node] & KNOWN != 0:
        st.run.dup_block[0] += 1
        return
    st.blocks.stat[blk, node] |= KNOWN
    _count_reception(st, blk, node, st.run.clock[0])

    parent = st.blocks.parent[blk]
    if st.blocks.stat[parent, node] & FULLCHAIN != 0:
        st.blocks.stat[blk, node] |= FULLCHAIN
        best = blk
        best_h = st.blocks.height[blk]
        # Completing this chain may unlock stored orphans, recursively.
        changed = True
        while changed:
            changed = False
            i = 0
            while i < st.nodes.orph_n[node]:
                ob = st.nodes.orph[node, i]
                if st.blocks.stat[st.blocks.parent[ob], node] & FULLCHAIN != 0:
                    st.blocks.stat[ob, node] |= FULLCHAIN
                    if st.blocks.height[ob] > best_h:
                        best = ob
                        best_h = st.blocks.height[ob]
                    last = st.nodes.orph_n[node] - 1
                    st.nodes.orph[node, i] = st.nodes.orph[node, last]
                    st.nodes.orph[node, last] = -1
                    st.nodes.orph_n[node] = last
                    changed = True
                else:
                    i += 1
        if best_h > st.blocks.height[st.nodes.tip[node]]:
            _adopt(st, node, best, sender)
    else:
        m = st.nodes.orph_n[node]
        if m >= st.prm.orph_cap:
            raise RuntimeError("orphan buffer overflow")
        st.nodes.orph[node, m] = blk
        st.nodes.orph_n[node] = m + 1
        if st.blocks.stat[parent, node] & (KNOWN | REQUESTED) == 0:
            st.blocks.stat[parent, node] |= REQUESTED
            send_getdata(st, node, sender, parent)


@kernel
def handle_refresh(st, node):
    st.nodes.refresh_pending[node] = 0
    refresh_neighbors(st, node)


@kernel
def step_once(st):
    """Pop and process one event. Returns its kind, or -1 if queue empty."""
    s = heap_pop_min(
        st.heap.time, st.heap.seq, st.heap.slot, st.heap.size, st.pool.pos
    )
    if s < 0:
        return -1
    kind = st.pool.kind[s]
    a = st.pool.a[s]
    b = st.pool.b[s]
    c = st.pool.c[s]
    st.run.clock[0] = st.pool.fire[s]
    slot_release(st.pool.gen, st.pool.pos, st.pool.free, st.pool.free_top, s)
    if kind == EV_MINE:
        st.nodes.mine_slot[a] = -1
        handle_mine(st, a, b)
    elif kind == EV_INV:
        handle_inv(st, a, b, c)
    elif kind == EV_GETDATA:
        handle_getdata(st, a, b, c)
    elif kind == EV_BLOCK:
        handle_block(st, a, b, c)
    elif kind == EV_REFRESH:
        handle_refresh(st, a)
    return kind
