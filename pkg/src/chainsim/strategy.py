"""Neighbor-selection policies.

Two policies are provided behind the same hook points:

* static-random: each node picks k distinct peers uniformly at startup
  and keeps them for the whole run.
* adaptive: every INV carries the block's creation timestamp; the
  receiver records, per announcing peer, the elapsed time between block
  creation and the INV's arrival. Every `refresh_window` accepted blocks
  the node rewires its managed slots to the k-1 peers with the lowest
  (decayed) average elapsed time, ascending, plus one uniformly random
  peer kept for exploration. Observation windows are cleared at each
  refresh.

Scores use a per-observation exponential decay: the newest observation
has weight 1, each older one is multiplied by lambda. lambda = 1.0 is the
plain arithmetic mean.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import inline_kernel, kernel
from .errors import ConfigError
from .rng import randint_below


def static_random_select(rng_state, node_id, n_nodes, k) -> np.ndarray:
    """k distinct uniform picks from all nodes excluding node_id."""
    if k < 0 or k >= n_nodes:
        raise ConfigError(f"degree k={k} must satisfy 0 <= k < n_nodes={n_nodes}")
    chosen = np.empty(k, dtype=np.int32)
    count = 0
    while count < k:
        j = randint_below(rng_state, n_nodes)
        if j == node_id or j in chosen[:count]:
            continue
        chosen[count] = j
        count += 1
    return chosen


@inline_kernel
def record_observation(keys, wsum, wcnt, map_n, node, sender, elapsed, lam):
    """Fold one INV observation into the sender's decayed running average."""
    m = map_n[node]
    for i in range(m):
        if keys[node, i] == sender:
            wsum[node, i] = wsum[node, i] * lam + elapsed
            wcnt[node, i] = wcnt[node, i] * lam + 1.0
            return
    if m < keys.shape[1]:
        keys[node, m] = sender
        wsum[node, m] = elapsed
        wcnt[node, m] = 1.0
        map_n[node] = m + 1
    # else: scoreboard full; further new senders are ignored this window


@inline_kernel
def clear_window(map_n, node):
    map_n[node] = 0


@dataclass
class InvObservation:
    sender: int
    block_id: int
    elapsed_ms: float


class ScoreBoard:
    """Per-node observation window; thin wrapper over the kernel arrays."""

    def __init__(self, capacity=256, lam=1.0):
        if not (0.0 < lam <= 1.0):
            raise ConfigError(f"score decay lambda must be in (0, 1], got {lam}")
        self.lam = float(lam)
        self._keys = np.full((1, capacity), -1, dtype=np.int32)
        self._wsum = np.zeros((1, capacity), dtype=np.float64)
        self._wcnt = np.zeros((1, capacity), dtype=np.float64)
        self._map_n = np.zeros(1, dtype=np.int32)

    def record(self, obs: InvObservation):
        if obs.elapsed_ms < 0:
            raise ConfigError("elapsed time cannot be negative")
        record_observation(
            self._keys, self._wsum, self._wcnt, self._map_n,
            0, obs.sender, float(obs.elapsed_ms), self.lam,
        )

    def scores(self) -> dict:
        m = int(self._map_n[0])
        return {
            int(self._keys[0, i]): float(self._wsum[0, i] / self._wcnt[0, i])
            for i in range(m)
        }

    def reset(self):
        clear_window(self._map_n, 0)

    def select(self, node_id, n_nodes, k, rng_state, exclude=()):
        """k-1 best-scoring senders ascending, then one random explorer.

        Shortfalls (fewer scored senders than k-1) are filled with extra
        random picks, so the result always has k distinct non-self ids.
        """
        if k < 1 or k >= n_nodes:
            raise ConfigError(f"degree k={k} must satisfy 1 <= k < n_nodes={n_nodes}")
        ranked = sorted(self.scores().items(), key=lambda kv: (kv[1], kv[0]))
        picked = []
        banned = set(exclude) | {node_id}
        for sender, _score in ranked:
            if len(picked) >= k - 1:
                break
            if sender in banned or sender in picked:
                continue
            picked.append(sender)
        while len(picked) < k:
            j = randint_below(rng_state, n_nodes)
            if j in banned or j in picked:
                continue
            picked.append(j)
        return picked


# ---------------------------------------------------------------------------
# in-run refresh over the flat state arrays


@inline_kernel
def in_list_add(in_list, in_n, cap_in, node, peer):
    """Register peer as an inbound announcer of node (capacity permitting)."""
    m = in_n[node]
    if m < cap_in:
        in_list[node, m] = peer
        in_n[node] = m + 1


@inline_kernel
def in_list_remove(in_list, in_n, node, peer):
    m = in_n[node]
    for i in range(m):
        if in_list[node, i] == peer:
            in_list[node, i] = in_list[node, m - 1]
            in_list[node, m - 1] = -1
            in_n[node] = m - 1
            return


@inline_kernel
def refresh_wiring(
    rng_state, keys, wsum, wcnt, map_n, out, adj, in_list, in_n, cap_in,
    n, node, k,
):
    """Rewire the node's k strategy-managed out slots from its scoreboard.

    Lowest decayed-average senders fill k-1 slots in ascending score
    order; the last slot (and any shortfall) is a uniform random pick
    avoiding self, duplicates, and targets already linked. The window is
    cleared afterwards.
    """
    if k < 1:
        map_n[node] = 0
        return

    # Detach current strategy edges.
    for idx in range(k):
        j = out[node, idx]
        adj[node, j] -= 1
        if adj[node, j] == 0:
            in_list_remove(in_list, in_n, j, node)

    # Scored senders in ascending order fill up to k-1 slots.
    chosen = 0
    m = map_n[node]
    taken = np.zeros(m, dtype=np.uint8)
    while chosen < k - 1:
        best = -1
        best_score = 0.0
        for i in range(m):
            if taken[i] == 1:
                continue
            cand = keys[node, i]
            if cand == node or adj[node, cand] > 0:
                taken[i] = 1
                continue
            dup = False
            for c in range(chosen):
                if out[node, c] == cand:
                    dup = True
                    break
            if dup:
                taken[i] = 1
                continue
            score = wsum[node, i] / wcnt[node, i]
            if best < 0 or score < best_score:
                best = i
                best_score = score
        if best < 0:
            break
        taken[best] = 1
        out[node, chosen] = keys[node, best]
        chosen += 1

    # Remaining slots (shortfall plus the exploration slot) are random.
    while chosen < k:
        j = -1
        for _attempt in range(256):
            cand = randint_below(rng_state, n)
            if cand == node or adj[node, cand] > 0:
                continue
            dup = False
            for c in range(chosen):
                if out[node, c] == cand:
                    dup = True
                    break
            if not dup:
                j = cand
                break
        if j < 0:
            # Dense corner case: scan from a random offset instead.
            start = randint_below(rng_state, n)
            for off in range(n):
                cand = (start + off) % n
                if cand == node or adj[node, cand] > 0:
                    continue
                dup = False
                for c in range(chosen):
                    if out[node, c] == cand:
                        dup = True
                        break
                if not dup:
                    j = cand
                    break
        if j < 0:
            raise RuntimeError("cannot fill neighbor slots: node pool exhausted")
        out[node, chosen] = j
        chosen += 1

    # Attach the new edges.
    for idx in range(k):
        j = out[node, idx]
        adj[node, j] += 1
        if adj[node, j] == 1:
            in_list_add(in_list, in_n, cap_in, j, node)

    map_n[node] = 0


@kernel
def refresh_neighbors(st, node):
    """State-tuple wrapper over refresh_wiring (stepped path and tests)."""
    refresh_wiring(
        st.run.rng, st.strat.keys, st.strat.wsum, st.strat.wcnt,
        st.strat.map_n, st.nodes.out, st.nodes.adj, st.nodes.in_list,
        st.nodes.in_n, st.prm.cap_in, st.prm.n, node, st.nodes.strat_k[node],
    )
