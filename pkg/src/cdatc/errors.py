"""Exception hierarchy shared by all modules."""


class CdatcError(Exception):
    """Base class for every error raised by this package."""

    category = "error"


class TopologyError(CdatcError, ValueError):
    category = "topology"


class IndexOutOfRange(TopologyError, IndexError):
    pass


class SelfLoop(TopologyError):
    pass


class DuplicateEdge(TopologyError):
    pass


class DisconnectedGraph(TopologyError):
    pass


class DimensionMismatch(CdatcError, ValueError):
    category = "dimension"


class MissingNeighborEstimate(CdatcError, KeyError):
    category = "diffusion"


class WeightConstraintViolated(CdatcError, ValueError):
    category = "diffusion"


class NonFiniteInput(CdatcError, ValueError):
    category = "diffusion"


class ConfigInvalid(CdatcError, ValueError):
    category = "config"


class ValidationError(ConfigInvalid):
    """A scenario value is missing or out of range; ``key`` names it."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class ParseError(CdatcError, ValueError):
    category = "parse"

    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class WindowOutOfRange(CdatcError, ValueError):
    category = "window"


class NoData(CdatcError, ValueError):
    category = "output"


class UnknownPreset(CdatcError, KeyError):
    category = "preset"

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown preset"
