class ConfigurationError(ValueError):
    """Scenario, grid or material data violating a standing assumption."""


class ScenarioParseError(ValueError):
    """Malformed scenario document; carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class StepFailure(RuntimeError):
    """A sub-solver did not converge; ``info`` carries the diagnostics."""

    def __init__(self, message, step=None, **info):
        self.step = step
        self.info = info
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(prefix + message)


class QuadratureError(RuntimeError):
    pass
