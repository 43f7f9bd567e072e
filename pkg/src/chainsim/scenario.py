"""Scenario files, validation, and the coin presets.

A scenario is a JSON object; unknown keys are rejected so typos fail
loudly. `degree` is either a constant outbound neighbor count or an
explicit CDF table ``[[degree, cumulative_probability], ...]`` ending at
1.0. Relay settings: membership is drawn uniformly at
``participation_rate``; members gain `mesh_degree` extra announce links
to random fellow members and exchange blocks with other members at
``bandwidth_multiplier`` times the regional bandwidth; every non-member
peers with `gateway_links` random member gateways (relay operators
publish public endpoints), announce links running both ways over the
peering at plain regional bandwidth.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ScenarioParseError, ScenarioValidationError

KIB = 1024

ANNOUNCE_MODES = ("bidirectional", "outbound_only")
STRATEGY_KINDS = ("static", "adaptive")

SWEEPABLE = ("participation_rate", "strategy", "lambda", "degree")


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "static"
    lam: float = 1.0  # score decay; 1.0 = plain mean
    refresh_window: int = 10  # accepted blocks between refreshes

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lam,
                "refresh_window": self.refresh_window}


@dataclass(frozen=True)
class RelayConfig:
    participation_rate: float = 0.0
    bandwidth_multiplier: float = 10.0
    mesh_degree: int = 64  # member->member overlay links (dense mesh)
    gateway_links: int = 1  # non-member announce links into the overlay

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    n_nodes: int = 600
    block_size_bytes: int = 8 * KIB
    target_interval_ms: int = 60_000
    stop_blocks: int = 10_000
    degree: object = 8  # int or CDF table [[degree, cum_p], ...]
    capacity_mean: float = 100.0
    network_dataset: str = "network-2015"
    region_weights: dict = None  # None -> dataset defaults
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    relay: RelayConfig = field(default_factory=RelayConfig)
    announce_mode: str = "outbound_only"
    seed: int = 1
    queue_capacity: int = 0  # 0 -> sized automatically
    max_inbound_tracked: int = 64

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_nodes": self.n_nodes,
            "block_size_bytes": self.block_size_bytes,
            "target_interval_ms": self.target_interval_ms,
            "stop_blocks": self.stop_blocks,
            "degree": self.degree,
            "capacity_mean": self.capacity_mean,
            "network_dataset": self.network_dataset,
            "region_weights": self.region_weights,
            "strategy": self.strategy.to_dict(),
            "relay": self.relay.to_dict(),
            "announce_mode": self.announce_mode,
            "seed": self.seed,
            "queue_capacity": self.queue_capacity,
            "max_inbound_tracked": self.max_inbound_tracked,
        }

    def validate(self) -> "Scenario":
        err = ScenarioValidationError
        if self.n_nodes < 1:
            raise err(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.block_size_bytes < 0:
            raise err("block_size_bytes cannot be negative")
        if self.target_interval_ms <= 0:
            raise err("target_interval_ms must be positive")
        if self.stop_blocks < 1:
            raise err("stop_blocks must be >= 1")
        if self.capacity_mean <= 0:
            raise err("capacity_mean must be positive")
        if isinstance(self.degree, int):
            if self.n_nodes > 1 and not (0 < self.degree < self.n_nodes):
                raise err(
                    f"degree {self.degree} must be in [1, n_nodes-1]"
                )
            if self.n_nodes == 1 and self.degree != 0:
                raise err("single-node scenario needs degree 0")
        else:
            cdf = self.degree
            if not cdf or any(len(row) != 2 for row in cdf):
                raise err("degree CDF must be [[degree, cum_p], ...]")
            last = 0.0
            for d, p in cdf:
                if int(d) < 0 or int(d) >= max(self.n_nodes, 1):
                    raise err(f"degree {d} out of range")
                if p < last:
                    raise err("degree CDF must be non-decreasing")
                last = p
            if abs(last - 1.0) > 1e-9:
                raise err(f"degree CDF must end at 1.0, got {last}")
        if self.region_weights is not None:
            total = sum(self.region_weights.values())
            if abs(total - 1.0) > 1e-9:
                raise err(f"region weights sum to {total}, expected 1.0")
            if any(w < 0 for w in self.region_weights.values()):
                raise err("region weights cannot be negative")
        if self.strategy.kind not in STRATEGY_KINDS:
            raise err(f"unknown strategy kind {self.strategy.kind!r}")
        if not (0.0 < self.strategy.lam <= 1.0):
            raise err(f"strategy lambda must be in (0, 1], got {self.strategy.lam}")
        if self.strategy.refresh_window < 1:
            raise err("strategy refresh_window must be >= 1")
        if not (0.0 <= self.relay.participation_rate <= 1.0):
            raise err(
                f"relay participation_rate must be in [0, 1], got "
                f"{self.relay.participation_rate}"
            )
        if self.relay.bandwidth_multiplier < 1.0:
            raise err("relay bandwidth_multiplier must be >= 1")
        if self.relay.mesh_degree < 0 or self.relay.gateway_links < 0:
            raise err("relay link counts cannot be negative")
        if self.announce_mode not in ANNOUNCE_MODES:
            raise err(f"announce_mode must be one of {ANNOUNCE_MODES}")
        if self.queue_capacity < 0:
            raise err("queue_capacity cannot be negative")
        if self.max_inbound_tracked < 1:
            raise err("max_inbound_tracked must be >= 1")
        return self


_TOP_KEYS = set(Scenario().to_dict())
_STRAT_KEYS = {"kind", "lambda", "refresh_window"}
_RELAY_KEYS = {"participation_rate", "bandwidth_multiplier", "mesh_degree",
               "gateway_links"}


def scenario_from_dict(raw: dict, name_hint: str = "custom") -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario file must hold a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ScenarioValidationError(f"unknown scenario keys: {sorted(unknown)}")
    strat_raw = raw.get("strategy", {})
    if not isinstance(strat_raw, dict) or set(strat_raw) - _STRAT_KEYS:
        raise ScenarioValidationError(f"bad strategy section: {strat_raw!r}")
    relay_raw = raw.get("relay", {})
    if not isinstance(relay_raw, dict) or set(relay_raw) - _RELAY_KEYS:
        raise ScenarioValidationError(f"bad relay section: {relay_raw!r}")
    base = Scenario()
    degree = raw.get("degree", base.degree)
    if not isinstance(degree, int):
        degree = [[int(d), float(p)] for d, p in degree]
    scn = Scenario(
        name=str(raw.get("name", name_hint)),
        n_nodes=int(raw.get("n_nodes", base.n_nodes)),
        block_size_bytes=int(raw.get("block_size_bytes", base.block_size_bytes)),
        target_interval_ms=int(raw.get("target_interval_ms",
                                       base.target_interval_ms)),
        stop_blocks=int(raw.get("stop_blocks", base.stop_blocks)),
        degree=degree,
        capacity_mean=float(raw.get("capacity_mean", base.capacity_mean)),
        network_dataset=str(raw.get("network_dataset", base.network_dataset)),
        region_weights=raw.get("region_weights"),
        strategy=StrategyConfig(
            kind=str(strat_raw.get("kind", "static")),
            lam=float(strat_raw.get("lambda", 1.0)),
            refresh_window=int(strat_raw.get("refresh_window", 10)),
        ),
        relay=RelayConfig(
            participation_rate=float(relay_raw.get("participation_rate", 0.0)),
            bandwidth_multiplier=float(relay_raw.get("bandwidth_multiplier", 10.0)),
            mesh_degree=int(relay_raw.get("mesh_degree", 16)),
            gateway_links=int(relay_raw.get("gateway_links", 1)),
        ),
        announce_mode=str(raw.get("announce_mode", base.announce_mode)),
        seed=int(raw.get("seed", base.seed)),
        queue_capacity=int(raw.get("queue_capacity", 0)),
        max_inbound_tracked=int(raw.get("max_inbound_tracked",
                                        base.max_inbound_tracked)),
    )
    return scn.validate()


def load_scenario(path_or_preset) -> Scenario:
    """Load a scenario by preset name or JSON file path."""
    key = str(path_or_preset)
    if key in PRESETS:
        return PRESETS[key]
    p = Path(key)
    if not p.exists():
        raise ScenarioParseError(
            f"scenario not found: {key!r} (not a preset: "
            f"{sorted(PRESETS)}; not a file)"
        )
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioParseError(
            f"{p}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}"
        ) from e
    return scenario_from_dict(raw, name_hint=p.stem)


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scn.to_dict(), indent=2, sort_keys=True) + "\n")


def apply_sweep_value(scn: Scenario, param: str, value) -> Scenario:
    """Return a scenario with one sweepable parameter replaced."""
    if param == "participation_rate":
        return replace(
            scn, relay=replace(scn.relay, participation_rate=float(value))
        ).validate()
    if param == "strategy":
        return replace(
            scn, strategy=replace(scn.strategy, kind=str(value))
        ).validate()
    if param == "lambda":
        return replace(
            scn, strategy=replace(scn.strategy, lam=float(value))
        ).validate()
    if param == "degree":
        return replace(scn, degree=int(value)).validate()
    raise ScenarioValidationError(
        f"parameter {param!r} is not sweepable; choose from {SWEEPABLE}"
    )


# Coin presets: node counts, intervals and block sizes of the three
# networks as observed in 2015; 6.11 KiB rounds to 6257 bytes.
PRESETS = {
    "bitcoin": Scenario(
        name="bitcoin",
        n_nodes=6000,
        block_size_bytes=534 * KIB,
        target_interval_ms=600_000,
        stop_blocks=10_000,
        degree=8,
    ),
    "litecoin": Scenario(
        name="litecoin",
        n_nodes=800,
        block_size_bytes=6257,
        target_interval_ms=150_000,
        stop_blocks=10_000,
        degree=8,
    ),
    "dogecoin": Scenario(
        name="dogecoin",
        n_nodes=600,
        block_size_bytes=8 * KIB,
        target_interval_ms=60_000,
        stop_blocks=10_000,
        degree=8,
    ),
}
