"""Build a simulation from a scenario and orchestrate runs and sweeps.

One seed fully determines a run: the build consumes the stream in a
fixed order (regions, capacities, degrees, neighbors, relay membership,
relay links, initial mining draws) and the event loop then continues the
same stream, so identical seed + scenario reproduces the report bit for
bit on either backend.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import consensus, rng, strategy
from .engine import Engine
from .errors import ConfigError, ScenarioValidationError
from .eventheap import EV_MINE
from .metrics import RunReport, finalize_report
from .protocol import schedule_event
from .scenario import SWEEPABLE, Scenario, apply_sweep_value
from .simstate import (
    KNOWN,
    Params,
    SimState,
    STRATEGY_ADAPTIVE,
    STRATEGY_STATIC,
    alloc_state,
)
from .topology import NetworkModel, load_network_dataset

SCOREBOARD_CAP = 256
ORPHAN_CAP = 64


def _sample_degrees(scn: Scenario, stream) -> np.ndarray:
    n = scn.n_nodes
    if isinstance(scn.degree, int):
        return np.full(n, scn.degree, dtype=np.int32)
    cdf = scn.degree
    out = np.empty(n, dtype=np.int32)
    for i in range(n):
        u = rng.uniform_open01(stream)
        picked = cdf[-1][0]
        for d, p in cdf:
            if u <= p:
                picked = d
                break
        out[i] = picked
    return out


def _assign_regions(scn: Scenario, model: NetworkModel, stream) -> np.ndarray:
    weights = scn.region_weights or model.region_weights
    names = [r.name for r in model.regions]
    for k in weights:
        if k not in model.region_index:
            raise ScenarioValidationError(
                f"region weight for {k!r} not in dataset {model.name!r}"
            )
    cum = np.cumsum([float(weights.get(nm, 0.0)) for nm in names])
    regions = np.empty(scn.n_nodes, dtype=np.int8)
    for i in range(scn.n_nodes):
        u = rng.uniform_open01(stream)
        regions[i] = int(np.searchsorted(cum, u))
        if regions[i] >= len(names):  # u == 1.0 edge
            regions[i] = len(names) - 1
    return regions


def _select_relay_members(n, rate, stream) -> np.ndarray:
    """Exactly floor(rate*n) members, uniform identity (partial shuffle)."""
    count = int(math.floor(rate * n))
    members = np.zeros(n, dtype=np.uint8)
    ids = np.arange(n, dtype=np.int32)
    for i in range(count):
        j = i + rng.randint_below(stream, n - i)
        ids[i], ids[j] = ids[j], ids[i]
        members[ids[i]] = 1
    return members


def _distinct_picks(stream, count, n, exclude_self, taken_row):
    """Draw `count` distinct ids avoiding self and already-linked targets."""
    picks = []
    attempts = 0
    while len(picks) < count and attempts < 64 * (count + 1) * 8:
        attempts += 1
        j = rng.randint_below(stream, n)
        if j == exclude_self or taken_row[j] > 0 or j in picks:
            continue
        picks.append(j)
    if len(picks) < count:
        for j in range(n):  # dense fallback, deterministic
            if len(picks) >= count:
                break
            if j == exclude_self or taken_row[j] > 0 or j in picks:
                continue
            picks.append(j)
    return picks


def build_state(
    scn: Scenario,
    seed=None,
    trace: bool = False,
    full_recv: bool = False,
    trace_capacity: int = 0,
) -> SimState:
    """Allocate and wire a SimState; initial mining events are scheduled."""
    scn.validate()
    model = load_network_dataset(scn.network_dataset)
    seed = scn.seed if seed is None else int(seed)
    stream = rng.new_stream(seed)
    n = scn.n_nodes

    regions = _assign_regions(scn, model, stream)
    capacities = consensus.sample_capacities(stream, n, scn.capacity_mean)
    degrees = _sample_degrees(scn, stream)
    difficulty = consensus.derive_difficulty(capacities, scn.target_interval_ms)

    members = _select_relay_members(n, scn.relay.participation_rate, stream)
    n_members = int(members.sum())
    member_ids = np.flatnonzero(members).astype(np.int32)

    mesh = min(scn.relay.mesh_degree, max(n_members - 1, 0))
    gateway = min(scn.relay.gateway_links, n_members)
    # Members also hold an out-slot per gateway client so the overlay
    # serves blocks back over the same link; size slots for the expected
    # client load per member plus generous multinomial headroom.
    client_cap = 0
    if n_members and gateway:
        mean_clients = gateway * (n - n_members) / n_members
        client_cap = int(math.ceil(mean_clients + 5.0 * math.sqrt(mean_clients + 1.0))) + 4
    kmax = int(degrees.max()) + (mesh if n_members else 0) + \
        (gateway if n_members else 0) + client_cap
    kmax = max(kmax, 1)

    strategy_kind = (
        STRATEGY_ADAPTIVE if scn.strategy.kind == "adaptive" else STRATEGY_STATIC
    )
    bcap = scn.stop_blocks + 64
    # peak in-flight events: a couple of blocks' announcements plus
    # transfers and one pending mining event per node
    announce_bound = kmax + (
        scn.max_inbound_tracked if scn.announce_mode == "bidirectional" else 0
    )
    queue_capacity = scn.queue_capacity or (
        4096 + 3 * n * (announce_bound + 8)
    )

    prm = Params(
        n=n,
        kmax=kmax,
        cap_in=scn.max_inbound_tracked,
        bcap=bcap,
        stop_blocks=scn.stop_blocks,
        block_size=scn.block_size_bytes,
        difficulty=float(difficulty),
        relay_mult=float(scn.relay.bandwidth_multiplier),
        strategy=strategy_kind,
        lam=float(scn.strategy.lam),
        refresh_window=int(scn.strategy.refresh_window),
        bidirectional=1 if scn.announce_mode == "bidirectional" else 0,
        half_all=(n + 1) // 2,
        half_member=(n_members + 1) // 2 if n_members else 0,
        half_nonmember=(n - n_members + 1) // 2 if n_members < n else 0,
        map_cap=SCOREBOARD_CAP,
        orph_cap=ORPHAN_CAP,
        trace=1 if trace else 0,
        full_recv=1 if full_recv else 0,
    )

    st = alloc_state(
        prm,
        stream,
        model.upstream_bps,
        model.downstream_bps,
        model.delay_mean_ms,
        queue_capacity,
        trace_capacity=trace_capacity or (200_000 if trace else 0),
    )
    st.nodes.region[:] = regions
    st.nodes.capacity[:] = capacities
    st.nodes.relay[:] = members

    # Outbound strategy slots: k distinct uniform picks, fixed until a
    # strategy refresh rewires them.
    for i in range(n):
        k = int(degrees[i])
        row = st.nodes.adj[i]
        picks = _distinct_picks(stream, k, n, i, row)
        for idx, j in enumerate(picks):
            st.nodes.out[i, idx] = j
            row[j] += 1
        st.nodes.strat_k[i] = k
        st.nodes.out_n[i] = k

    # Relay overlay: member-to-member announce mesh, then public gateway
    # links from each non-member into the membership.
    if n_members:
        for i in member_ids:
            row = st.nodes.adj[i]
            picks = []
            if mesh:
                member_taken = [j for j in member_ids if row[j] == 0 and j != i]
                picks = _pick_from(stream, member_taken, mesh)
            base = int(st.nodes.out_n[i])
            for idx, j in enumerate(picks):
                st.nodes.out[i, base + idx] = j
                row[j] += 1
            st.nodes.out_n[i] = base + len(picks)
        if gateway:
            for i in range(n):
                if members[i]:
                    continue
                row = st.nodes.adj[i]
                candidates = [
                    j for j in member_ids
                    if row[j] == 0 and int(st.nodes.out_n[j]) < kmax
                ]
                picks = _pick_from(stream, candidates, gateway)
                base = int(st.nodes.out_n[i])
                for idx, j in enumerate(picks):
                    st.nodes.out[i, base + idx] = j
                    row[j] += 1
                    # the gateway serves blocks back over the same link
                    jn = int(st.nodes.out_n[j])
                    st.nodes.out[j, jn] = i
                    st.nodes.out_n[j] = jn + 1
                    st.nodes.adj[j, i] += 1
                st.nodes.out_n[i] = base + len(picks)

    _ensure_reception_connectivity(st, stream)

    # Inbound announcer lists follow from the out slots.
    for i in range(n):
        for idx in range(int(st.nodes.out_n[i])):
            j = int(st.nodes.out[i, idx])
            m = int(st.nodes.in_n[j])
            if int(st.nodes.adj[i, j]) >= 1 and m < prm.cap_in:
                if not any(
                    st.nodes.in_list[j, x] == i for x in range(m)
                ):
                    st.nodes.in_list[j, m] = i
                    st.nodes.in_n[j] = m + 1

    # Every node starts mining on genesis, in node order.
    for i in range(n):
        iv = consensus.sample_mining_interval(
            stream, float(st.nodes.capacity[i]), float(difficulty)
        )
        slot = schedule_event(st, EV_MINE, i, 0, 0, int(iv))
        st.nodes.mine_slot[i] = slot

    return st


def _reach(st, start, reverse=False):
    """Nodes reachable from `start` along announce edges (BFS)."""
    n = int(st.prm.n)
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    adj = st.nodes.adj
    while frontier:
        nxt = []
        for u in frontier:
            row = adj[:, u] if reverse else adj[u, :]
            for v in np.flatnonzero(row):
                if not seen[v]:
                    seen[v] = True
                    nxt.append(int(v))
        frontier = nxt
    return seen


def _ensure_reception_connectivity(st, stream):
    """Degree-preserving rewires until the announce digraph is strongly
    connected.

    A node nobody points at never hears an announcement under
    outbound-only fan-out and would mine on a stale tip forever; uniform
    k-out sampling leaves such nodes with probability ~n*exp(-k). Each
    repair re-points one strategy out-slot (whose old target keeps
    another inbound link) at a node outside the reachable set, so every
    out-degree is preserved exactly.
    """
    n = int(st.prm.n)
    if n < 2:
        return
    indeg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for idx in range(int(st.nodes.out_n[i])):
            indeg[int(st.nodes.out[i, idx])] += 1
    def repoint(donor, target):
        if donor == target or int(st.nodes.strat_k[donor]) == 0:
            return False
        slot = rng.randint_below(stream, int(st.nodes.strat_k[donor]))
        old = int(st.nodes.out[donor, slot])
        if indeg[old] < 2 or int(st.nodes.adj[donor, target]) > 0:
            return False
        st.nodes.out[donor, slot] = target
        st.nodes.adj[donor, old] -= 1
        st.nodes.adj[donor, target] += 1
        indeg[old] -= 1
        indeg[target] += 1
        return True

    for _round in range(4 * n):
        fwd = _reach(st, 0)
        if not fwd.all():
            # someone node 0 cannot deliver to: give them an inbound
            # link from inside the reachable set
            missing = np.flatnonzero(~fwd)
            inside = np.flatnonzero(fwd)
            target = int(missing[rng.randint_below(stream, len(missing))])
            for _try in range(64 * n):
                donor = int(inside[rng.randint_below(stream, len(inside))])
                if repoint(donor, target):
                    break
            else:
                break
            continue
        rev = _reach(st, 0, reverse=True)
        if rev.all():
            return
        # someone cannot deliver to node 0: point one of their slots at
        # the set that can
        missing = np.flatnonzero(~rev)
        inside = np.flatnonzero(rev)
        donor = int(missing[rng.randint_below(stream, len(missing))])
        for _try in range(64 * n):
            target = int(inside[rng.randint_below(stream, len(inside))])
            if repoint(donor, target):
                break
        else:
            break
    else:
        raise ConfigError(
            "could not rewire the topology into a connected announce graph"
        )
    raise ConfigError(
        "could not rewire the topology into a connected announce graph"
    )


def _pick_from(stream, candidates, count):
    """Uniform distinct picks from a candidate list (partial shuffle)."""
    pool = list(candidates)
    picked = []
    for _ in range(min(count, len(pool))):
        idx = rng.randint_below(stream, len(pool))
        picked.append(pool[idx])
        pool[idx] = pool[-1]
        pool.pop()
    return picked


def run(
    scn: Scenario,
    seed=None,
    drain: bool = True,
    trace: bool = False,
    full_recv: bool = False,
) -> RunReport:
    """Execute a scenario to its stop condition and report."""
    seed = scn.seed if seed is None else int(seed)
    st = build_state(scn, seed, trace=trace, full_recv=full_recv)
    eng = Engine(st)
    eng.run_blocks(scn.stop_blocks, drain=drain)
    return finalize_report(st, scn.to_dict(), seed)


def _sweep_one(args):
    scn_dict, param, value, seed = args
    from .scenario import scenario_from_dict

    scn = apply_sweep_value(scenario_from_dict(scn_dict), param, value)
    report = run(scn, seed=seed)
    return param, value, seed, report


def sweep(
    scn: Scenario,
    param: str,
    values,
    seeds=None,
    out_dir=None,
    workers: int = 1,
) -> list:
    """One run per (value, seed); reports written under out_dir if given.

    Runs across values share the same per-index seed so that baselines
    and treatments differ only by the swept parameter where structurally
    possible.
    """
    if param not in SWEEPABLE:
        raise ScenarioValidationError(
            f"parameter {param!r} is not sweepable; choose from {SWEEPABLE}"
        )
    values = list(values)
    if not values:
        raise ScenarioValidationError("sweep needs at least one value")
    seeds = [scn.seed] if seeds is None else list(seeds)
    for v in values:  # validate all combinations up front
        apply_sweep_value(scn, param, v)

    jobs = [
        (scn.to_dict(), param, v, s) for v in values for s in seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    manifest = {"parameter": param, "base_scenario": scn.to_dict(), "runs": []}
    out = Path(out_dir) if out_dir else None
    for param_name, value, seed, report in results:
        entry = {
            "value": value,
            "seed": seed,
            "t_mbp_ms": report.t_mbp_ms,
            "fork_rate": report.fork_rate,
            "group_medians_ms": report.group_medians,
            "digest": report.digest(),
        }
        if out is not None:
            run_dir = out / f"{param_name}={value}_seed={seed}"
            report.write(run_dir)
            entry["dir"] = run_dir.name
        manifest["runs"].append(entry)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
    return results


def quiesced_block_coverage(st: SimState) -> np.ndarray:
    """Per-block count of nodes holding the body (oracle helper)."""
    nb = int(st.blocks.next_id[0])
    return (st.blocks.stat[:nb, :] & KNOWN).astype(bool).sum(axis=1)
