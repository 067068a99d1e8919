"""Exception types shared by the Python and compiled code paths."""


class GraphFormatError(ValueError):
    """Malformed or invalid graph, suspect, candidate or partition input."""


class ReplayError(RuntimeError):
    """An encoded walk did not replay to the recorded outcome (wrong graph or seed)."""


class SamplingExhausted(RuntimeError):
    """The attempt budget ran out before enough hitting walks were found."""
