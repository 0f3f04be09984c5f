class SceneryError(Exception):
    """Base class for errors raised by the simulator."""


class ParameterError(SceneryError, ValueError):
    """A precondition on an argument does not hold."""


class GenerationError(SceneryError, RuntimeError):
    """A sample path could not be generated exactly."""


class FitError(SceneryError, ValueError):
    """Not enough usable points for a regression."""


class ConfigError(SceneryError, ValueError):
    def __init__(self, problems):
        # problems: {key: reason}
        self.problems = dict(problems)
        self.keys = sorted(self.problems)
        details = "; ".join(f"{k}: {v}" for k, v in sorted(self.problems.items()))
        super().__init__(f"Invalid config keys [{', '.join(self.keys)}] ({details})")
