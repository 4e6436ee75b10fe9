"""Exception and warning types shared across the package."""


class DimensionMismatch(ValueError):
    pass


# metrics uses the name ShapeMismatch for the same condition
ShapeMismatch = DimensionMismatch


class ImaginaryResidueTooLarge(ArithmeticError):
    pass


class NumericalBlowup(ArithmeticError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonFiniteLoss(ArithmeticError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ContainerFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class RankDeficientWarning(UserWarning):
    pass


class ZeroSpreadWarning(UserWarning):
    pass
