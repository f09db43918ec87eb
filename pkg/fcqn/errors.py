# fcqn/errors.py


class FcqnError(Exception):
    """Base class for every error raised by the simulator."""


class DimensionError(FcqnError, ValueError):
    pass


class StateError(FcqnError, ValueError):
    pass


class ParameterError(FcqnError, ValueError):
    pass


class TopologyError(FcqnError, ValueError):
    pass


class MeasurementError(FcqnError, ValueError):
    pass


class ConvergenceError(FcqnError, RuntimeError):
    pass


class ConfigError(FcqnError, ValueError):
    """Invalid experiment configuration; ``errors`` lists every offending field."""

    def __init__(self, errors: list[dict[str, str]]):
        self.errors = errors
        summary = "; ".join(f"{e['field']}: {e['message']}" for e in errors)
        super().__init__(summary or "invalid configuration")
