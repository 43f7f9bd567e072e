"""Exception hierarchy.

Scenario/configuration problems (exit code 2 from the CLI) are
`ConfigError`s; faults occurring while a run executes (exit code 3) are
`RuntimeFault`s.
"""


class ConfigError(ValueError):
    """Invalid scenario, dataset, or parameter configuration."""


class ScenarioParseError(ConfigError):
    """Scenario file could not be parsed."""


class ScenarioValidationError(ConfigError):
    """Scenario parsed but violates an invariant."""


class DatasetError(ConfigError):
    """Network dataset missing, malformed, or inconsistent."""


class RuntimeFault(RuntimeError):
    """Simulation failed while running."""


class EngineStarved(RuntimeFault):
    """Event queue exhausted before the stop condition held."""
