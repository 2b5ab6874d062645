"""Exception hierarchy shared by all rosenfied modules."""


class RosenfiedError(Exception):
    pass


class DimensionError(RosenfiedError, ValueError):
    pass


class SingularAtPoint(RosenfiedError):
    """A(λ0) is numerically singular, so λ0 is (near) a pole of R."""


class IrregularSystem(RosenfiedError):
    pass


class SingularPencil(RosenfiedError):
    pass


class DegreeMismatch(RosenfiedError, ValueError):
    pass


class StructureMismatch(RosenfiedError):
    def __init__(self, message, blocks=()):
        super().__init__(message)
        self.blocks = list(blocks)


class RelationViolation(RosenfiedError):
    def __init__(self, relation, i, j, deviation):
        super().__init__(
            f"relation ({relation}) fails at i={i}, j={j}: max deviation {deviation:.3e}")
        self.relation = relation
        self.i = i
        self.j = j
        self.deviation = deviation


class StepMismatch(RosenfiedError):
    pass


class CertificationFailure(RosenfiedError):
    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class SpectralMismatch(RosenfiedError):
    def __init__(self, message, unmatched_pencil=(), unmatched_oracle=()):
        super().__init__(message)
        self.unmatched_pencil = list(unmatched_pencil)
        self.unmatched_oracle = list(unmatched_oracle)


class PoleAtEigenvalue(RosenfiedError):
    pass


class GiveUp(RosenfiedError):
    pass
