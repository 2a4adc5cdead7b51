"""Exception hierarchy shared by every module of the package."""


class SdrMiceError(Exception):
    """Base class for all package errors."""


class ConstantColumn(SdrMiceError):
    def __init__(self, index):
        super().__init__(f"column {index} has zero standard deviation")
        self.index = index


class RankDeficient(SdrMiceError):
    pass


class DegenerateDof(SdrMiceError):
    pass


class NoFeasibleThreshold(SdrMiceError):
    pass


class DeflationCollapse(SdrMiceError):
    pass


class DegenerateOutcomeWarning(UserWarning):
    """Outcome is (numerically) perfectly explained by the predictors."""


class TooFewObserved(SdrMiceError):
    pass


class InfeasibleComponents(SdrMiceError):
    pass


class SingularDesign(SdrMiceError):
    pass


class AllMissingColumn(SdrMiceError):
    def __init__(self, index):
        super().__init__(f"column {index} has no observed values")
        self.index = index


class ChainError(SdrMiceError):
    """Imputer failure annotated with the chain position where it happened."""

    def __init__(self, cause, iteration, variable, chain=None):
        where = f"iteration {iteration}, variable {variable}"
        if chain is not None:
            where = f"chain {chain}, " + where
        super().__init__(f"{type(cause).__name__} at {where}: {cause}")
        self.cause = cause
        self.iteration = iteration
        self.variable = variable
        self.chain = chain


class NotPositiveDefinite(SdrMiceError):
    pass


class DegenerateSample(SdrMiceError):
    pass


class ZeroTruth(SdrMiceError):
    pass


class EmptyGrid(SdrMiceError):
    pass


class ConfigError(SdrMiceError):
    pass
