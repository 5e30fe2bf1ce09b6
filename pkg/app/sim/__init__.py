from app.sim.channels import FifoEndpoint, FifoProcess
from app.sim.checker import check_transport
from app.sim.engine import (
    Context,
    Interceptor,
    Process,
    ScriptRegistry,
    Simulator,
    run,
    sample_delays,
    scripts,
)
from app.sim.errors import Livelock, SimulationError
from app.sim.structures import (
    FaultPlan,
    LinkFaults,
    ScriptSpec,
    SimEvent,
    SimEventKind,
    Trace,
    Violation,
)


__all__ = [
    'Context',
    'FaultPlan',
    'FifoEndpoint',
    'FifoProcess',
    'Interceptor',
    'LinkFaults',
    'Livelock',
    'Process',
    'ScriptRegistry',
    'ScriptSpec',
    'SimEvent',
    'SimEventKind',
    'SimulationError',
    'Simulator',
    'Trace',
    'Violation',
    'check_transport',
    'run',
    'sample_delays',
    'scripts',
]
