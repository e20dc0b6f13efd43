"""Exception hierarchy shared by every module."""


class HyperInjectError(Exception):
    """Base class for all library errors."""


# structure
class EmptyHyperedge(HyperInjectError, ValueError):
    pass


class NodeIdOutOfRange(HyperInjectError, IndexError):
    pass


class HyperedgeIdOutOfRange(HyperInjectError, IndexError):
    pass


class WeightDimensionMismatch(HyperInjectError, ValueError):
    pass


class NonPositiveWeight(HyperInjectError, ValueError):
    pass


class DuplicateTargetHyperedge(HyperInjectError, ValueError):
    pass


class FeatureDimensionMismatch(HyperInjectError, ValueError):
    pass


class NotDerivedFrom(HyperInjectError, ValueError):
    pass


# numerics
class ShapeMismatch(HyperInjectError, ValueError):
    pass


class ZeroNormVector(HyperInjectError, ValueError):
    pass


class NonScalarLoss(HyperInjectError, ValueError):
    pass


class EmptyMask(HyperInjectError, ValueError):
    pass


class MissingLabels(HyperInjectError, ValueError):
    pass


class InvalidConfig(HyperInjectError, ValueError):
    pass


# attack
class EmptyCandidateSet(HyperInjectError, ValueError):
    pass


class ZeroNormHyperedgeFeature(HyperInjectError, ValueError):
    pass


# io
class ParseError(HyperInjectError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class CrossFileCountMismatch(HyperInjectError, ValueError):
    pass


class ValidationFailure(HyperInjectError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NonFiniteValue(HyperInjectError, ValueError):
    pass


class InvalidSpec(HyperInjectError, ValueError):
    pass


class BoundViolation(HyperInjectError, AssertionError):
    pass
