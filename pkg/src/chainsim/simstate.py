"""Flat-array simulation state.

A whole run lives in one `SimState`: nested namedtuples of preallocated
numpy arrays, which both backends mutate in place. Scalars that never
change during a run sit in `Params`; mutable run-wide scalars (clock,
counters, rng word) are one-element arrays.

Block status per (block, node) is a bitmask: REQUESTED is set once a
GETDATA has been issued so a body is never fetched twice; KNOWN means the
body is held; FULLCHAIN means every ancestor body is held too, which is
the precondition for adopting the block as a tip.
"""

from collections import namedtuple

import numpy as np

from . import eventheap

# blocks.stat bit flags
REQUESTED = 1
KNOWN = 2
FULLCHAIN = 4

STRATEGY_STATIC = 0
STRATEGY_ADAPTIVE = 1

Params = namedtuple(
    "Params",
    [
        "n",  # node count
        "kmax",  # out-slot capacity per node
        "cap_in",  # tracked inbound announcers per node
        "bcap",  # block capacity (stop_blocks + margin)
        "stop_blocks",
        "block_size",  # bytes, identical for every mined block
        "difficulty",  # capacity units * ms
        "relay_mult",  # bandwidth multiplier between relay members
        "strategy",  # STRATEGY_STATIC / STRATEGY_ADAPTIVE
        "lam",  # score decay (1.0 = plain mean)
        "refresh_window",  # accepted blocks per neighbor refresh
        "bidirectional",  # 1: announce to inbound peers too
        "half_all",  # ceil(n/2)
        "half_member",  # ceil(|members|/2), 0 when no members
        "half_nonmember",
        "map_cap",  # scoreboard slots per node
        "orph_cap",
        "trace",  # 1: record message trace
        "full_recv",  # 1: record per-node reception times
    ],
)

RunVars = namedtuple(
    "RunVars",
    ["clock", "seq", "rng", "mined", "draining", "getdata_unknown", "dup_block"],
)

NodeArrays = namedtuple(
    "NodeArrays",
    [
        "region",  # i8[n]
        "capacity",  # f64[n]
        "tip",  # i32[n]
        "relay",  # u8[n]
        "out",  # i32[n, kmax] announce targets; strategy slots first
        "out_n",  # i32[n]
        "strat_k",  # i32[n] strategy-managed prefix of out
        "adj",  # u8[n, n] multiplicity of out edges i -> j
        "in_list",  # i32[n, cap_in] peers announcing to this node
        "in_n",  # i32[n]
        "mine_slot",  # i32[n] pending mining event slot, -1 none
        "accepted",  # i32[n] accepted blocks since last refresh
        "refresh_pending",  # u8[n]
        "orph",  # i32[n, orph_cap] blocks waiting for ancestors
        "orph_n",  # i32[n]
    ],
)

BlockArrays = namedtuple(
    "BlockArrays",
    [
        "parent",  # i32[bcap]
        "creator",  # i32[bcap]
        "created",  # i64[bcap]
        "height",  # i32[bcap]
        "next_id",  # i64[1]
        "stat",  # u8[bcap, n]
        "recv_all",  # i32[bcap]
        "half_all_t",  # i64[bcap] elapsed ms to reach ceil(n/2), -1 undefined
        "recv_member",
        "half_member_t",
        "recv_nonmember",
        "half_nonmember_t",
    ],
)

NetArrays = namedtuple("NetArrays", ["up", "down", "dmean"])

StratArrays = namedtuple("StratArrays", ["keys", "wsum", "wcnt", "map_n"])

TraceArrays = namedtuple(
    "TraceArrays",
    ["kind", "frm", "to", "blk", "send", "arrive", "count", "recv_time"],
)

SimState = namedtuple(
    "SimState",
    ["prm", "run", "heap", "pool", "nodes", "blocks", "net", "strat", "trace"],
)


def alloc_state(
    prm: Params,
    rng_state: np.ndarray,
    up_bps: np.ndarray,
    down_bps: np.ndarray,
    delay_mean_ms: np.ndarray,
    queue_capacity: int,
    trace_capacity: int = 0,
) -> SimState:
    """Allocate a blank SimState (genesis installed, no events yet)."""
    n, bcap = prm.n, prm.bcap

    run = RunVars(
        clock=np.zeros(1, dtype=np.int64),
        seq=np.zeros(1, dtype=np.int64),
        rng=rng_state,
        mined=np.zeros(1, dtype=np.int64),
        draining=np.zeros(1, dtype=np.int8),
        getdata_unknown=np.zeros(1, dtype=np.int64),
        dup_block=np.zeros(1, dtype=np.int64),
    )

    nodes = NodeArrays(
        region=np.zeros(n, dtype=np.int8),
        capacity=np.ones(n, dtype=np.float64),
        tip=np.zeros(n, dtype=np.int32),
        relay=np.zeros(n, dtype=np.uint8),
        out=np.full((n, prm.kmax), -1, dtype=np.int32),
        out_n=np.zeros(n, dtype=np.int32),
        strat_k=np.zeros(n, dtype=np.int32),
        adj=np.zeros((n, n), dtype=np.uint8),
        in_list=np.full((n, prm.cap_in), -1, dtype=np.int32),
        in_n=np.zeros(n, dtype=np.int32),
        mine_slot=np.full(n, -1, dtype=np.int32),
        accepted=np.zeros(n, dtype=np.int32),
        refresh_pending=np.zeros(n, dtype=np.uint8),
        orph=np.full((n, prm.orph_cap), -1, dtype=np.int32),
        orph_n=np.zeros(n, dtype=np.int32),
    )

    blocks = BlockArrays(
        parent=np.full(bcap, -1, dtype=np.int32),
        creator=np.full(bcap, -1, dtype=np.int32),
        created=np.zeros(bcap, dtype=np.int64),
        height=np.zeros(bcap, dtype=np.int32),
        next_id=np.ones(1, dtype=np.int64),  # genesis occupies id 0
        stat=np.zeros((bcap, n), dtype=np.uint8),
        recv_all=np.zeros(bcap, dtype=np.int32),
        half_all_t=np.full(bcap, -1, dtype=np.int64),
        recv_member=np.zeros(bcap, dtype=np.int32),
        half_member_t=np.full(bcap, -1, dtype=np.int64),
        recv_nonmember=np.zeros(bcap, dtype=np.int32),
        half_nonmember_t=np.full(bcap, -1, dtype=np.int64),
    )
    # Genesis: height 0, known everywhere with full ancestry.
    blocks.stat[0, :] = KNOWN | FULLCHAIN
    blocks.recv_all[0] = n
    blocks.half_all_t[0] = 0

    net = NetArrays(
        up=np.asarray(up_bps, dtype=np.float64),
        down=np.asarray(down_bps, dtype=np.float64),
        dmean=np.asarray(delay_mean_ms, dtype=np.float64),
    )

    mcap = prm.map_cap if prm.strategy == STRATEGY_ADAPTIVE else 1
    strat = StratArrays(
        keys=np.full((n, mcap), -1, dtype=np.int32),
        wsum=np.zeros((n, mcap), dtype=np.float64),
        wcnt=np.zeros((n, mcap), dtype=np.float64),
        map_n=np.zeros(n, dtype=np.int32),
    )

    tcap = max(1, trace_capacity)
    trace = TraceArrays(
        kind=np.zeros(tcap, dtype=np.int8),
        frm=np.zeros(tcap, dtype=np.int32),
        to=np.zeros(tcap, dtype=np.int32),
        blk=np.zeros(tcap, dtype=np.int32),
        send=np.zeros(tcap, dtype=np.int64),
        arrive=np.zeros(tcap, dtype=np.int64),
        count=np.zeros(1, dtype=np.int64),
        recv_time=np.full(
            (bcap, n) if prm.full_recv else (1, 1), -1, dtype=np.int64
        ),
    )

    return SimState(
        prm=prm,
        run=run,
        heap=eventheap.new_heap(queue_capacity),
        pool=eventheap.new_pool(queue_capacity),
        nodes=nodes,
        blocks=blocks,
        net=net,
        strat=strat,
        trace=trace,
    )
