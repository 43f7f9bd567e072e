"""Regional network model: bandwidths, latency sampling, arrival times.

A dataset file defines the six regions (name, upstream/downstream bits
per second), a complete mean one-way delay matrix in milliseconds, and
default node-placement weights. The bandwidth of a transfer from A to B
is min(upstream(A), downstream(B)); when both endpoints participate in
the relay overlay the link gets the overlay's bandwidth multiplier.
Propagation delay is drawn from a Pareto distribution whose mean is the
table entry and whose coefficient of variation is 20%.

Dataset JSON schema (see data/network-2015.json for the shipped file):

    {
      "name": "...",
      "regions": [{"name": "...", "upstream_bps": int, "downstream_bps": int}, ...],
      "delay_ms": {"<from>": {"<to>": float, ...}, ...},   # complete, incl. diagonal
      "region_weights": {"<region>": float, ...}           # sums to 1
    }
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ._backend import inline_kernel, kernel
from .errors import DatasetError
from .rng import pareto_cv20, round_half_up

REGION_NAMES = (
    "Europe",
    "North America",
    "Asia",
    "Australia",
    "Japan",
    "South America",
)

BUNDLED_DATASETS = ("network-2015",)


@dataclass(frozen=True)
class Region:
    name: str
    upstream_bps: float
    downstream_bps: float

    def __post_init__(self):
        if self.name not in REGION_NAMES:
            raise DatasetError(
                f"unknown region {self.name!r}; expected one of {REGION_NAMES}"
            )
        if self.upstream_bps <= 0 or self.downstream_bps <= 0:
            raise DatasetError(f"region {self.name}: bandwidths must be positive")


@dataclass(frozen=True)
class RelayOverlay:
    """Opt-in overlay granting multiplied bandwidth between members."""

    members: frozenset = field(default_factory=frozenset)
    bandwidth_multiplier: float = 10.0

    def __post_init__(self):
        if self.bandwidth_multiplier < 1.0:
            raise DatasetError("relay bandwidth multiplier must be >= 1")


class NetworkModel:
    """Immutable region table + delay matrix, loaded from a dataset file."""

    def __init__(self, name, regions, delay_ms, region_weights):
        self.name = name
        self.regions = list(regions)
        self.region_index = {r.name: i for i, r in enumerate(self.regions)}
        if len(self.region_index) != len(self.regions):
            raise DatasetError("duplicate region names in dataset")
        nr = len(self.regions)
        self.delay_mean_ms = np.zeros((nr, nr), dtype=np.float64)
        for a in self.regions:
            row = delay_ms.get(a.name)
            if row is None:
                raise DatasetError(f"delay_ms missing row for region {a.name!r}")
            for b in self.regions:
                if b.name not in row:
                    raise DatasetError(
                        f"delay_ms[{a.name!r}] missing entry for {b.name!r}"
                    )
                v = float(row[b.name])
                if v <= 0:
                    raise DatasetError(
                        f"delay_ms[{a.name!r}][{b.name!r}] must be positive, got {v}"
                    )
                self.delay_mean_ms[
                    self.region_index[a.name], self.region_index[b.name]
                ] = v
        total = sum(region_weights.get(r.name, 0.0) for r in self.regions)
        if abs(total - 1.0) > 1e-9:
            raise DatasetError(f"region weights sum to {total}, expected 1.0")
        for k in region_weights:
            if k not in self.region_index:
                raise DatasetError(f"region weight for unknown region {k!r}")
        self.region_weights = {
            r.name: float(region_weights.get(r.name, 0.0)) for r in self.regions
        }
        self.upstream_bps = np.array(
            [r.upstream_bps for r in self.regions], dtype=np.float64
        )
        self.downstream_bps = np.array(
            [r.downstream_bps for r in self.regions], dtype=np.float64
        )

    def link_bandwidth(
        self,
        sender_region,
        receiver_region,
        sender_in_relay=False,
        receiver_in_relay=False,
        overlay=None,
    ):
        """Bits/s from a sender region to a receiver region.

        min(sender upstream, receiver downstream); multiplied by the
        overlay factor only when both endpoints are relay members.
        """
        si = self._region(sender_region)
        ri = self._region(receiver_region)
        bw = min(self.upstream_bps[si], self.downstream_bps[ri])
        if sender_in_relay and receiver_in_relay:
            bw *= overlay.bandwidth_multiplier if overlay is not None else 10.0
        return bw

    def sample_delay(self, sender_region, receiver_region, rng_state):
        """One-way propagation delay draw in (float) milliseconds."""
        si = self._region(sender_region)
        ri = self._region(receiver_region)
        return pareto_cv20(rng_state, self.delay_mean_ms[si, ri])

    def message_arrival_time(
        self,
        send_at,
        size_bytes,
        sender_region,
        receiver_region,
        rng_state,
        sender_in_relay=False,
        receiver_in_relay=False,
        overlay=None,
    ):
        """Arrival SimTime: send + rounded transmission + rounded delay.

        Control messages are size 0 and contribute no transmission time.
        """
        bw = self.link_bandwidth(
            sender_region, receiver_region, sender_in_relay, receiver_in_relay, overlay
        )
        tx = round_half_up(size_bytes * 8000.0 / bw) if size_bytes else 0
        return send_at + tx + round_half_up(self.sample_delay(
            sender_region, receiver_region, rng_state
        ))

    def _region(self, name):
        try:
            return self.region_index[name]
        except KeyError:
            raise DatasetError(f"unknown region {name!r}") from None


def load_network_dataset(name_or_path) -> NetworkModel:
    """Load a dataset by bundled name or by path to a JSON file."""
    name = str(name_or_path)
    if name in BUNDLED_DATASETS:
        text = (
            resources.files("chainsim").joinpath(f"data/{name}.json").read_text()
        )
    else:
        p = Path(name)
        if not p.exists():
            raise DatasetError(f"network dataset not found: {name}")
        text = p.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise DatasetError(f"network dataset is not valid JSON: {e}") from e
    try:
        regions = [
            Region(r["name"], float(r["upstream_bps"]), float(r["downstream_bps"]))
            for r in raw["regions"]
        ]
        return NetworkModel(
            raw.get("name", name),
            regions,
            raw["delay_ms"],
            raw.get("region_weights", {}),
        )
    except KeyError as e:
        raise DatasetError(f"network dataset missing field: {e}") from e


# ---------------------------------------------------------------------------
# kernel-side helpers operating on SimState arrays


@inline_kernel
def delay_ms_between(st, a, b):
    """Rounded Pareto propagation delay between two nodes' regions."""
    ra = st.nodes.region[a]
    rb = st.nodes.region[b]
    return round_half_up(pareto_cv20(st.run.rng, st.net.dmean[ra, rb]))


@inline_kernel
def block_arrival_at(st, now, sender, receiver):
    """Arrival time of a full block body sent now from sender to receiver."""
    ra = st.nodes.region[sender]
    rb = st.nodes.region[receiver]
    bw = min(st.net.up[ra], st.net.down[rb])
    if st.nodes.relay[sender] == 1 and st.nodes.relay[receiver] == 1:
        bw *= st.prm.relay_mult
    tx = round_half_up(st.prm.block_size * 8000.0 / bw)
    return now + tx + delay_ms_between(st, sender, receiver)
