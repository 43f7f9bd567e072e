"""Fused event loop for full scenario runs.

Statement-for-statement the same machine as protocol.step_once, but with
every state array hoisted into a local exactly once per call: repeated
attribute access on the state tuple inside the event loop costs an
atomic refcount pair per access, which dominates per-event time at
preset scale. The stepped path and this loop must stay behaviorally
identical, including the order of random draws; the test suite asserts
equal run digests between the two.
"""

from ._backend import inline_kernel, kernel
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
from .rng import pareto_cv20, round_half_up, uniform_open01
from .consensus import interval_from_uniform
from .simstate import FULLCHAIN, KNOWN, REQUESTED, STRATEGY_ADAPTIVE
from .strategy import record_observation, refresh_wiring


@inline_kernel
def _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b, p_c, p_fire,
          p_pos, p_free, p_ftop, seq, kind, a, b, c, fire):
    s = slot_alloc(p_kind, p_a, p_b, p_c, p_fire, p_pos, p_free, p_ftop,
                   kind, a, b, c, fire)
    if s < 0:
        raise RuntimeError("event pool exhausted; increase scenario queue_capacity")
    q = seq[0]
    seq[0] = q + 1
    if not heap_push(h_time, h_seq, h_slot, h_size, p_pos, fire, q, s):
        raise RuntimeError("event queue overflow; increase scenario queue_capacity")
    return s


@inline_kernel
def _trace(t_kind, t_frm, t_to, t_blk, t_send, t_arrive, t_cnt,
           kind, frm, to, blk, send, arrive):
    i = t_cnt[0]
    if i < t_kind.shape[0]:
        t_kind[i] = kind
        t_frm[i] = frm
        t_to[i] = to
        t_blk[i] = blk
        t_send[i] = send
        t_arrive[i] = arrive
    t_cnt[0] = i + 1


@kernel
def event_loop(st, stop_blocks, do_drain):
    """Run until stop_blocks blocks exist; optionally drain deliveries.

    Returns 0 on completion, -1 if the queue starved first.
    """
    # run-wide scalars
    n = st.prm.n
    bcap = st.prm.bcap
    block_size = st.prm.block_size
    difficulty = st.prm.difficulty
    relay_mult = st.prm.relay_mult
    strategy = st.prm.strategy
    lam = st.prm.lam
    refresh_window = st.prm.refresh_window
    bidirectional = st.prm.bidirectional
    half_all = st.prm.half_all
    half_member = st.prm.half_member
    half_nonmember = st.prm.half_nonmember
    orph_cap = st.prm.orph_cap
    cap_in = st.prm.cap_in
    tr_on = st.prm.trace
    full_recv = st.prm.full_recv

    # mutable run vars
    clock = st.run.clock
    seq = st.run.seq
    rngs = st.run.rng
    mined = st.run.mined
    draining = st.run.draining
    gdu = st.run.getdata_unknown
    dupb = st.run.dup_block

    # queue
    h_time = st.heap.time
    h_seq = st.heap.seq
    h_slot = st.heap.slot
    h_size = st.heap.size
    p_kind = st.pool.kind
    p_a = st.pool.a
    p_b = st.pool.b
    p_c = st.pool.c
    p_fire = st.pool.fire
    p_pos = st.pool.pos
    p_gen = st.pool.gen
    p_free = st.pool.free
    p_ftop = st.pool.free_top

    # nodes
    region = st.nodes.region
    capacity = st.nodes.capacity
    tip = st.nodes.tip
    relayf = st.nodes.relay
    out = st.nodes.out
    out_n = st.nodes.out_n
    strat_k = st.nodes.strat_k
    adj = st.nodes.adj
    in_list = st.nodes.in_list
    in_n = st.nodes.in_n
    mine_slot = st.nodes.mine_slot
    accepted = st.nodes.accepted
    refresh_pending = st.nodes.refresh_pending
    orph = st.nodes.orph
    orph_n = st.nodes.orph_n

    # blocks
    b_parent = st.blocks.parent
    b_creator = st.blocks.creator
    b_created = st.blocks.created
    b_height = st.blocks.height
    b_next = st.blocks.next_id
    b_stat = st.blocks.stat
    recv_all = st.blocks.recv_all
    half_all_t = st.blocks.half_all_t
    recv_m = st.blocks.recv_member
    half_m_t = st.blocks.half_member_t
    recv_nm = st.blocks.recv_nonmember
    half_nm_t = st.blocks.half_nonmember_t

    # network
    up = st.net.up
    down = st.net.down
    dmean = st.net.dmean

    # strategy scoreboards
    s_keys = st.strat.keys
    s_wsum = st.strat.wsum
    s_wcnt = st.strat.wcnt
    s_mapn = st.strat.map_n

    # trace
    t_kind = st.trace.kind
    t_frm = st.trace.frm
    t_to = st.trace.to
    t_blk = st.trace.blk
    t_send = st.trace.send
    t_arrive = st.trace.arrive
    t_cnt = st.trace.count
    recv_time = st.trace.recv_time

    while True:
        if draining[0] == 0:
            if mined[0] >= stop_blocks:
                if do_drain == 0:
                    return 0
                # quiescence: stop all mining, let deliveries finish
                draining[0] = 1
                for i in range(n):
                    ms = mine_slot[i]
                    if ms >= 0:
                        if heap_remove(h_time, h_seq, h_slot, h_size, p_pos, ms):
                            slot_release(p_gen, p_pos, p_free, p_ftop, ms)
                        mine_slot[i] = -1
                continue
            if h_size[0] == 0:
                return -1
        elif h_size[0] == 0:
            return 0

        s = heap_pop_min(h_time, h_seq, h_slot, h_size, p_pos)
        kind = p_kind[s]
        a = p_a[s]
        b = p_b[s]
        c = p_c[s]
        now = p_fire[s]
        clock[0] = now
        slot_release(p_gen, p_pos, p_free, p_ftop, s)

        if kind == EV_INV:
            sender = a
            node = b
            blk = c
            if strategy == STRATEGY_ADAPTIVE:
                record_observation(s_keys, s_wsum, s_wcnt, s_mapn, node,
                                   sender, float(now - b_created[blk]), lam)
            if b_stat[blk, node] & (KNOWN | REQUESTED) == 0:
                b_stat[blk, node] |= REQUESTED
                d = round_half_up(
                    pareto_cv20(rngs, dmean[region[node], region[sender]])
                )
                arrive = now + d
                _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b, p_c,
                      p_fire, p_pos, p_free, p_ftop, seq,
                      EV_GETDATA, node, sender, blk, arrive)
                if tr_on == 1:
                    _trace(t_kind, t_frm, t_to, t_blk, t_send, t_arrive,
                           t_cnt, EV_GETDATA, node, sender, blk, now, arrive)

        elif kind == EV_GETDATA:
            requester = a
            node = b
            blk = c
            if b_stat[blk, node] & KNOWN != 0:
                ra = region[node]
                rb = region[requester]
                bw = min(up[ra], down[rb])
                if relayf[node] == 1 and relayf[requester] == 1:
                    bw *= relay_mult
                tx = round_half_up(block_size * 8000.0 / bw)
                d = round_half_up(pareto_cv20(rngs, dmean[ra, rb]))
                arrive = now + tx + d
                _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b, p_c,
                      p_fire, p_pos, p_free, p_ftop, seq,
                      EV_BLOCK, node, requester, blk, arrive)
                if tr_on == 1:
                    _trace(t_kind, t_frm, t_to, t_blk, t_send, t_arrive,
                           t_cnt, EV_BLOCK, node, requester, blk, now, arrive)
            else:
                gdu[0] += 1

        elif kind == EV_BLOCK:
            sender = a
            node = b
            blk = c
            if b_stat[blk, node] & KNOWN != 0:
                dupb[0] += 1
                continue
            b_stat[blk, node] |= KNOWN
            # first possession: half-coverage accounting
            elapsed = now - b_created[blk]
            cr = recv_all[blk] + 1
            recv_all[blk] = cr
            if cr == half_all and half_all_t[blk] < 0:
                half_all_t[blk] = elapsed
            if relayf[node] == 1:
                cr = recv_m[blk] + 1
                recv_m[blk] = cr
                if cr == half_member and half_m_t[blk] < 0:
                    half_m_t[blk] = elapsed
            else:
                cr = recv_nm[blk] + 1
                recv_nm[blk] = cr
                if cr == half_nonmember and half_nm_t[blk] < 0:
                    half_nm_t[blk] = elapsed
            if full_recv == 1:
                recv_time[blk, node] = now

            parent = b_parent[blk]
            if b_stat[parent, node] & FULLCHAIN != 0:
                b_stat[blk, node] |= FULLCHAIN
                best = blk
                best_h = b_height[blk]
                changed = True
                while changed:
                    changed = False
                    i = 0
                    while i < orph_n[node]:
                        ob = orph[node, i]
                        if b_stat[b_parent[ob], node] & FULLCHAIN != 0:
                            b_stat[ob, node] |= FULLCHAIN
                            if b_height[ob] > best_h:
                                best = ob
                                best_h = b_height[ob]
                            last = orph_n[node] - 1
                            orph[node, i] = orph[node, last]
                            orph[node, last] = -1
                            orph_n[node] = last
                            changed = True
                        else:
                            i += 1
                if best_h > b_height[tip[node]]:
                    # adopt: cancel mining, re-announce, mine on new tip
                    ms = mine_slot[node]
                    if ms >= 0:
                        if heap_remove(h_time, h_seq, h_slot, h_size, p_pos, ms):
                            slot_release(p_gen, p_pos, p_free, p_ftop, ms)
                        mine_slot[node] = -1
                    tip[node] = best
                    rn = region[node]
                    for idx in range(out_n[node]):
                        j = out[node, idx]
                        if j != sender:
                            d = round_half_up(
                                pareto_cv20(rngs, dmean[rn, region[j]])
                            )
                            arrive = now + d
                            _send(h_time, h_seq, h_slot, h_size, p_kind, p_a,
                                  p_b, p_c, p_fire, p_pos, p_free, p_ftop,
                                  seq, EV_INV, node, j, best, arrive)
                            if tr_on == 1:
                                _trace(t_kind, t_frm, t_to, t_blk, t_send,
                                       t_arrive, t_cnt, EV_INV, node, j,
                                       best, now, arrive)
                    if bidirectional == 1:
                        for idx in range(in_n[node]):
                            j = in_list[node, idx]
                            if j != sender and adj[node, j] == 0:
                                d = round_half_up(
                                    pareto_cv20(rngs, dmean[rn, region[j]])
                                )
                                arrive = now + d
                                _send(h_time, h_seq, h_slot, h_size, p_kind,
                                      p_a, p_b, p_c, p_fire, p_pos, p_free,
                                      p_ftop, seq, EV_INV, node, j, best,
                                      arrive)
                                if tr_on == 1:
                                    _trace(t_kind, t_frm, t_to, t_blk, t_send,
                                           t_arrive, t_cnt, EV_INV, node, j,
                                           best, now, arrive)
                    if draining[0] == 0:
                        iv = interval_from_uniform(
                            uniform_open01(rngs), capacity[node], difficulty
                        )
                        ms = _send(h_time, h_seq, h_slot, h_size, p_kind, p_a,
                                   p_b, p_c, p_fire, p_pos, p_free, p_ftop,
                                   seq, EV_MINE, node, tip[node], 0, now + iv)
                        mine_slot[node] = ms
                    if strategy == STRATEGY_ADAPTIVE:
                        acc = accepted[node] + 1
                        if acc >= refresh_window and refresh_pending[node] == 0:
                            accepted[node] = 0
                            refresh_pending[node] = 1
                            _send(h_time, h_seq, h_slot, h_size, p_kind, p_a,
                                  p_b, p_c, p_fire, p_pos, p_free, p_ftop,
                                  seq, EV_REFRESH, node, 0, 0, now)
                        else:
                            accepted[node] = acc
            else:
                m = orph_n[node]
                if m >= orph_cap:
                    raise RuntimeError("orphan buffer overflow")
                orph[node, m] = blk
                orph_n[node] = m + 1
                if b_stat[parent, node] & (KNOWN | REQUESTED) == 0:
                    b_stat[parent, node] |= REQUESTED
                    d = round_half_up(
                        pareto_cv20(rngs, dmean[region[node], region[sender]])
                    )
                    arrive = now + d
                    _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b,
                          p_c, p_fire, p_pos, p_free, p_ftop, seq,
                          EV_GETDATA, node, sender, parent, arrive)
                    if tr_on == 1:
                        _trace(t_kind, t_frm, t_to, t_blk, t_send, t_arrive,
                               t_cnt, EV_GETDATA, node, sender, parent, now,
                               arrive)

        elif kind == EV_MINE:
            node = a
            parent = b
            mine_slot[node] = -1
            if tip[node] != parent:
                raise RuntimeError("mining event fired for a stale tip")
            blk = b_next[0]
            if blk >= bcap:
                raise RuntimeError("block capacity exceeded")
            b_next[0] = blk + 1
            b_parent[blk] = parent
            b_creator[blk] = node
            b_created[blk] = now
            b_height[blk] = b_height[parent] + 1
            b_stat[blk, node] = KNOWN | FULLCHAIN
            cr = recv_all[blk] + 1
            recv_all[blk] = cr
            if cr == half_all and half_all_t[blk] < 0:
                half_all_t[blk] = 0
            if relayf[node] == 1:
                cr = recv_m[blk] + 1
                recv_m[blk] = cr
                if cr == half_member and half_m_t[blk] < 0:
                    half_m_t[blk] = 0
            else:
                cr = recv_nm[blk] + 1
                recv_nm[blk] = cr
                if cr == half_nonmember and half_nm_t[blk] < 0:
                    half_nm_t[blk] = 0
            if full_recv == 1:
                recv_time[blk, node] = now
            tip[node] = blk
            mined[0] += 1
            rn = region[node]
            for idx in range(out_n[node]):
                j = out[node, idx]
                d = round_half_up(pareto_cv20(rngs, dmean[rn, region[j]]))
                arrive = now + d
                _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b, p_c,
                      p_fire, p_pos, p_free, p_ftop, seq,
                      EV_INV, node, j, blk, arrive)
                if tr_on == 1:
                    _trace(t_kind, t_frm, t_to, t_blk, t_send, t_arrive,
                           t_cnt, EV_INV, node, j, blk, now, arrive)
            if bidirectional == 1:
                for idx in range(in_n[node]):
                    j = in_list[node, idx]
                    if adj[node, j] == 0:
                        d = round_half_up(
                            pareto_cv20(rngs, dmean[rn, region[j]])
                        )
                        arrive = now + d
                        _send(h_time, h_seq, h_slot, h_size, p_kind, p_a,
                              p_b, p_c, p_fire, p_pos, p_free, p_ftop, seq,
                              EV_INV, node, j, blk, arrive)
                        if tr_on == 1:
                            _trace(t_kind, t_frm, t_to, t_blk, t_send,
                                   t_arrive, t_cnt, EV_INV, node, j, blk,
                                   now, arrive)
            if draining[0] == 0:
                iv = interval_from_uniform(
                    uniform_open01(rngs), capacity[node], difficulty
                )
                ms = _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b,
                           p_c, p_fire, p_pos, p_free, p_ftop, seq,
                           EV_MINE, node, tip[node], 0, now + iv)
                mine_slot[node] = ms
            if strategy == STRATEGY_ADAPTIVE:
                acc = accepted[node] + 1
                if acc >= refresh_window and refresh_pending[node] == 0:
                    accepted[node] = 0
                    refresh_pending[node] = 1
                    _send(h_time, h_seq, h_slot, h_size, p_kind, p_a, p_b,
                          p_c, p_fire, p_pos, p_free, p_ftop, seq,
                          EV_REFRESH, node, 0, 0, now)
                else:
                    accepted[node] = acc

        else:  # EV_REFRESH
            node = a
            refresh_pending[node] = 0
            refresh_wiring(rngs, s_keys, s_wsum, s_wcnt, s_mapn, out, adj,
                           in_list, in_n, cap_in, n, node, strat_k[node])
