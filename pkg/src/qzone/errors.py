"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, ValidationError
exits 2, SolverError (and its backend subclasses) exits 3.
"""


class QzoneError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(QzoneError, ValueError):
    """Invalid input data: bad dimensions, malformed files, broken invariants."""


class SolverError(QzoneError, RuntimeError):
    """A solver or backend failed to produce a usable result."""


class ExternalBackendError(SolverError):
    """Base class for failures of the subprocess solver protocol."""


class BackendProcessError(ExternalBackendError):
    """The backend command could not be spawned or exited abnormally."""


class BackendTimeoutError(ExternalBackendError):
    """The backend exceeded its wall-clock timeout."""


class BackendResponseError(ExternalBackendError):
    """The backend reply was not a valid protocol response document."""


class BackendAssignmentError(ExternalBackendError):
    """The backend reply carried an unusable assignment (wrong length or values)."""
