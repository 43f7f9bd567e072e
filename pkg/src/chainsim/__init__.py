"""chainsim: deterministic discrete-event simulation of block propagation
over a regional peer-to-peer network, with pluggable neighbor-selection
policies and an optional relay overlay."""

from ._backend import BACKEND, USING_NUMBA
from .engine import Engine, Event, EventKind
from .errors import (
    ConfigError,
    DatasetError,
    EngineStarved,
    RuntimeFault,
    ScenarioParseError,
    ScenarioValidationError,
)
from .metrics import (
    PropagationRecord,
    RunReport,
    block_half_time,
    fork_rate,
    grouped_half_time,
    grouped_median,
    longest_chain,
    timeseries_buckets,
)
from .runner import build_state, run, sweep
from .scenario import (
    PRESETS,
    RelayConfig,
    Scenario,
    StrategyConfig,
    load_scenario,
    save_scenario,
)
from .topology import NetworkModel, Region, RelayOverlay, load_network_dataset

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "USING_NUMBA",
    "Engine",
    "Event",
    "EventKind",
    "ConfigError",
    "DatasetError",
    "EngineStarved",
    "RuntimeFault",
    "ScenarioParseError",
    "ScenarioValidationError",
    "PropagationRecord",
    "RunReport",
    "block_half_time",
    "fork_rate",
    "grouped_half_time",
    "grouped_median",
    "longest_chain",
    "timeseries_buckets",
    "build_state",
    "run",
    "sweep",
    "PRESETS",
    "RelayConfig",
    "Scenario",
    "StrategyConfig",
    "load_scenario",
    "save_scenario",
    "NetworkModel",
    "Region",
    "RelayOverlay",
    "load_network_dataset",
    "__version__",
]
