"""Exception hierarchy. The CLI maps these onto exit codes."""


class IsoflowError(Exception):
    pass


class ConfigError(IsoflowError, ValueError):
    """Invalid run configuration; ``messages`` holds one entry per problem."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))


class NumericalError(IsoflowError, ArithmeticError):
    pass


class FlowBlowUpError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class WronskianError(NumericalError):
    pass


class UnitarityError(NumericalError):
    pass


class WindowError(IsoflowError, ValueError):
    """Potential is not negligible outside the declared scattering window."""
