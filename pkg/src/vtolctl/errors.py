"""Exception types shared across the library."""


class VtolctlError(Exception):
    """Base class for all library-specific errors."""


class DegenerateAxisError(VtolctlError, ValueError):
    """A direction vector required to be nonzero is (numerically) zero."""


class FrameSingularityError(VtolctlError, ValueError):
    """The desired-frame construction is ill-defined for the given inputs.

    Raised when the air velocity is aligned with the acceleration demand,
    when the attitude is too close to vertical for the air-velocity
    estimator, or when the thrust projections vanish simultaneously.
    """


class AllocationError(VtolctlError, ValueError):
    """The actuator mixing system has no physically valid solution."""


class DivergenceError(VtolctlError, RuntimeError):
    """A numerical state left its validity envelope (non-finite values,
    attitude too far from an orthonormal rotation to repair)."""


class ConfigError(VtolctlError, ValueError):
    """A configuration document failed schema validation."""
