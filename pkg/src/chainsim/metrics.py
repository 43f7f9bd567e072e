"""Propagation and fork statistics.

Headline numbers: the median block propagation time (median over blocks
of the time from creation until ceil(N/2) distinct nodes hold the body,
creator included) and the fork rate (share of mined blocks that do not
end on the final longest chain). Group medians restrict the half
threshold to a node subset, e.g. relay members vs non-members. Dead-fork
blocks that never reach the half threshold are excluded from propagation
medians but stay in the fork-rate denominator.
"""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError


@dataclass
class PropagationRecord:
    """Reception times of one block: node id -> first possession time."""

    block_id: int
    created_at: int
    reception_times: dict

    def times(self):
        return sorted(self.reception_times.values())


def block_half_time(rec: PropagationRecord, n_nodes: int) -> Optional[int]:
    """Elapsed ms until ceil(n/2) distinct nodes hold the block.

    None when the block never reached that many nodes (dead fork).
    """
    need = (n_nodes + 1) // 2
    ts = rec.times()
    if len(ts) < need:
        return None
    return ts[need - 1] - rec.created_at


def grouped_half_time(rec: PropagationRecord, group) -> Optional[int]:
    """Half time counting only receivers inside `group`."""
    members = set(group)
    if not members:
        raise ConfigError("grouped half time needs a non-empty group")
    need = (len(members) + 1) // 2
    ts = sorted(
        t for node, t in rec.reception_times.items() if node in members
    )
    if len(ts) < need:
        return None
    return ts[need - 1] - rec.created_at


def grouped_median(records, group) -> Optional[float]:
    """Median over blocks of the group-restricted half time."""
    vals = [grouped_half_time(r, group) for r in records]
    vals = [v for v in vals if v is not None]
    if not vals:
        return None
    return float(np.median(vals))


def longest_chain(parents, heights=None) -> list:
    """Ids on the longest chain, genesis (id 0) excluded, tip last.

    `parents[i]` is block i's parent id; entry 0 is the genesis row.
    Ties on maximal height go to the earliest-created (lowest id) head.
    """
    parents = np.asarray(parents)
    nb = parents.shape[0]
    if nb <= 1:
        return []
    if heights is None:
        heights = np.zeros(nb, dtype=np.int64)
        for i in range(1, nb):
            heights[i] = heights[parents[i]] + 1
    else:
        heights = np.asarray(heights)
    head = int(np.argmax(heights))  # argmax returns the first (lowest id) max
    chain = []
    cur = head
    while cur != 0:
        chain.append(cur)
        cur = int(parents[cur])
    chain.reverse()
    return chain


def fork_rate(n_mined_blocks: int, main_chain_len: int) -> float:
    """(total mined - main chain length) / total mined."""
    if n_mined_blocks < 0 or main_chain_len > n_mined_blocks:
        raise ConfigError("inconsistent block counts for fork rate")
    if n_mined_blocks == 0:
        return 0.0
    return (n_mined_blocks - main_chain_len) / n_mined_blocks


def timeseries_buckets(half_times, bucket: int = 100) -> list:
    """Bucket per-block half times (ms, NaN/None = undefined) by mining order.

    Returns rows ``(bucket_index, n_blocks, n_defined, mean_ms, partial)``;
    mean_ms is None for buckets with no defined half time.
    """
    vals = [
        (float("nan") if v is None else float(v)) for v in half_times
    ]
    rows = []
    for b in range(0, len(vals), bucket):
        chunk = np.array(vals[b : b + bucket], dtype=np.float64)
        defined = chunk[~np.isnan(chunk)]
        rows.append(
            (
                b // bucket,
                len(chunk),
                len(defined),
                float(defined.mean()) if len(defined) else None,
                len(chunk) < bucket,
            )
        )
    return rows


@dataclass
class RunReport:
    """Everything a finished run reports; serializable and mergeable."""

    scenario: dict
    seed: int
    n_nodes: int
    n_blocks: int
    final_time_ms: int
    t_mbp_ms: Optional[float]
    fork_rate: float
    main_chain_len: int
    group_medians: dict
    timeseries: list
    block_ids: np.ndarray
    heights: np.ndarray
    creators: np.ndarray
    created_at: np.ndarray
    half_times: np.ndarray  # -1 = undefined
    member_half_times: np.ndarray
    nonmember_half_times: np.ndarray
    on_main: np.ndarray
    counters: dict = field(default_factory=dict)

    def summary_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "n_nodes": self.n_nodes,
            "n_blocks": self.n_blocks,
            "final_time_ms": self.final_time_ms,
            "t_mbp_ms": self.t_mbp_ms,
            "fork_rate": self.fork_rate,
            "main_chain_len": self.main_chain_len,
            "group_medians_ms": self.group_medians,
            "counters": self.counters,
            "digest": self.digest(),
        }

    def digest(self) -> str:
        """Deterministic fingerprint of the run outcome."""
        h = hashlib.sha256()
        h.update(json.dumps(self.scenario, sort_keys=True).encode())
        h.update(str(self.seed).encode())
        for arr in (
            self.block_ids,
            self.heights,
            self.creators,
            self.created_at,
            self.half_times,
            self.member_half_times,
            self.nonmember_half_times,
            self.on_main,
        ):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def bucket_rows(self, bucket: int = 100) -> list:
        vals = [None if v < 0 else int(v) for v in self.half_times]
        return timeseries_buckets(vals, bucket)

    def write(self, out_dir) -> None:
        """Emit summary.json, blocks.csv and buckets.csv into out_dir."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "summary.json", "w") as f:
            json.dump(self.summary_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        with open(out / "blocks.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(
                ["block_id", "height", "creator", "created_at_ms",
                 "half_time_ms", "on_main_chain"]
            )
            for i in range(len(self.block_ids)):
                ht = int(self.half_times[i])
                w.writerow(
                    [
                        int(self.block_ids[i]),
                        int(self.heights[i]),
                        int(self.creators[i]),
                        int(self.created_at[i]),
                        "" if ht < 0 else ht,
                        int(self.on_main[i]),
                    ]
                )
        with open(out / "buckets.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(
                ["bucket", "n_blocks", "n_defined", "mean_half_time_ms", "partial"]
            )
            for row in self.bucket_rows():
                w.writerow(
                    [row[0], row[1], row[2],
                     "" if row[3] is None else f"{row[3]:.3f}", int(row[4])]
                )


def finalize_report(state, scenario_dict, seed) -> RunReport:
    """Build a RunReport from a finished SimState."""
    blocks = state.blocks
    nb = int(blocks.next_id[0])  # rows 0..nb-1, row 0 is genesis
    n_mined = nb - 1

    parents = blocks.parent[:nb].copy()
    parents[0] = 0
    heights = blocks.height[:nb]
    chain = longest_chain(parents, heights)
    on_main = np.zeros(n_mined, dtype=np.int8)
    for bid in chain:
        on_main[bid - 1] = 1

    half = blocks.half_all_t[1:nb].copy()
    defined = half[half >= 0]
    t_mbp = float(np.median(defined)) if len(defined) else None

    member_half = blocks.half_member_t[1:nb].copy()
    nonmember_half = blocks.half_nonmember_t[1:nb].copy()
    groups = {"all": t_mbp}
    n_members = int(state.nodes.relay.sum())
    if n_members > 0:
        mh = member_half[member_half >= 0]
        nh = nonmember_half[nonmember_half >= 0]
        groups["relay_members"] = float(np.median(mh)) if len(mh) else None
        groups["non_members"] = float(np.median(nh)) if len(nh) else None

    half_defined = [None if v < 0 else int(v) for v in half]
    report = RunReport(
        scenario=scenario_dict,
        seed=int(seed),
        n_nodes=int(state.prm.n),
        n_blocks=n_mined,
        final_time_ms=int(state.run.clock[0]),
        t_mbp_ms=t_mbp,
        fork_rate=fork_rate(n_mined, len(chain)),
        main_chain_len=len(chain),
        group_medians=groups,
        timeseries=timeseries_buckets(half_defined),
        block_ids=np.arange(1, nb, dtype=np.int64),
        heights=heights[1:nb].astype(np.int64),
        creators=blocks.creator[1:nb].astype(np.int64),
        created_at=blocks.created[1:nb].astype(np.int64),
        half_times=half.astype(np.int64),
        member_half_times=member_half.astype(np.int64),
        nonmember_half_times=nonmember_half.astype(np.int64),
        on_main=on_main,
        counters={
            "getdata_for_unknown_block": int(state.run.getdata_unknown[0]),
            "duplicate_block_deliveries": int(state.run.dup_block[0]),
            "events_processed_seq": int(state.run.seq[0]),
        },
    )
    return report

