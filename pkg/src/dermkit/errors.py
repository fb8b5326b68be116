"""Exception hierarchy shared across the toolkit.

Service handlers map these onto machine-readable API error codes.
"""


class DermkitError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


class ValidationError(DermkitError):
    """Input violates a documented precondition or invariant."""

    code = "validation_failed"


class InvalidCropError(ValidationError):
    code = "invalid_crop"


class InvalidRoiError(ValidationError):
    code = "invalid_roi"


class IllegalTransitionError(DermkitError):
    """Operation applied in a case state where it is not allowed."""

    code = "illegal_transition"


class AuthorizationError(DermkitError):
    """Caller role is not permitted to perform the operation."""

    code = "authorization_failed"


class NotFoundError(DermkitError):
    code = "not_found"
