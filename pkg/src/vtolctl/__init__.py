"""Flight control and desk-scale simulation for convertible fixed-wing
UAVs with vectorized thrust: hover, transition, and cruise in one
framework, plus a numerical lab for the attitude-law stability claim.
"""

__version__ = "0.1.0"

from .airframe import AircraftParams, eflite_like
from .dynamics import PlantInput, RigidState, WindProfile
from .frames import DesiredFrame, FrameConfig, FrameSelector, TiltThrust

__all__ = [
    "AircraftParams",
    "eflite_like",
    "PlantInput",
    "RigidState",
    "WindProfile",
    "DesiredFrame",
    "FrameConfig",
    "FrameSelector",
    "TiltThrust",
    "__version__",
]
