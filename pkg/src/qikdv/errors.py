"""Exception hierarchy shared by the library and the command line runner."""


class QikdvError(Exception):
    """Base class; `exit_code` is what the CLI returns for it."""

    exit_code = 3


class ValidationError(QikdvError, ValueError):
    """Invalid input or configuration. `key` names the offending entry."""

    exit_code = 2

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DomainError(QikdvError, ValueError):
    """A field left the domain of a formula (e.g. log of a nonpositive amplitude)."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"{message} (first offending index {index})")


class BlowUpError(QikdvError, FloatingPointError):
    """Non-finite state during time stepping."""

    def __init__(self, t, diagnostics=None):
        self.t = t
        self.diagnostics = dict(diagnostics or {})
        super().__init__(f"non-finite state at t={t!r}; last diagnostics {self.diagnostics}")


class SingularityError(QikdvError, ArithmeticError):
    """A gauge coefficient is singular on the integration window."""

    def __init__(self, x):
        self.x = x
        super().__init__(f"gauge coefficient singular at x={x!r}")


class TruncationError(QikdvError, OverflowError):
    """A loop-algebra grade left the active grade window."""

    def __init__(self, power, window):
        self.power = power
        self.window = window
        super().__init__(f"grade {power} outside window {window}")
