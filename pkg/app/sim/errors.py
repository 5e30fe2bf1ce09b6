class SimulationError(Exception):
    """Base class for simulator failures"""


class Livelock(SimulationError):
    """The event budget ran out before the stop condition held"""
