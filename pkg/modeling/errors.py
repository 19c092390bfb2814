class SimulationError(Exception):
    """Base class of every failure raised by the simulation stack."""


class ConfigError(SimulationError, ValueError):

    def __init__(self, violations, message=None):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        if message is None:
            message = "invalid configuration: " + "; ".join(self.violations)
        super().__init__(message)


class IntegrationError(SimulationError, RuntimeError):

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t:.17g})"
        super().__init__(message)


class ResonanceError(SimulationError, ArithmeticError):

    def __init__(self, mode, divisor):
        self.mode = tuple(int(m) for m in mode)
        self.divisor = float(divisor)
        super().__init__(f"resonant mode m={self.mode}: |m·dH0/dJ| = {self.divisor:.3e}")


class ConvergenceError(SimulationError, RuntimeError):

    def __init__(self, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"fixed-point iteration did not converge after {self.iterations} iterations "
            f"(last residual {self.residual:.3e})"
        )


class DegenerateStateError(SimulationError, ArithmeticError):

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class PurityError(SimulationError, ValueError):

    def __init__(self, purity):
        self.purity = float(purity)
        super().__init__(
            f"state is mixed (Tr rho^2 = {self.purity:.9f}); "
            "the reduced-purity formula only holds for pure states, use concurrence() instead"
        )


class InvariantError(SimulationError, ValueError):
    pass


class NumericError(SimulationError, ArithmeticError):

    def __init__(self, message, matrix=None):
        self.matrix = matrix
        if matrix is not None:
            message = f"{message}\n{matrix}"
        super().__init__(message)
