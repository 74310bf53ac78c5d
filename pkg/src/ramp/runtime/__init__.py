from ramp.runtime.core import Agent, Context
from ramp.runtime.live import LiveRuntime
from ramp.runtime.virtual import DEFAULT_LATENCY, DEFAULT_SERVICE_TIME, VirtualRuntime

__all__ = [
    "Agent",
    "Context",
    "DEFAULT_LATENCY",
    "DEFAULT_SERVICE_TIME",
    "LiveRuntime",
    "VirtualRuntime",
]
