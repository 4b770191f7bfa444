"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class InfeasibleError(ValueError):
    """Parameters are valid but the scheme cannot operate with them."""


class TieError(RuntimeError):
    """Two decoder statistics are exactly equal (should have probability zero)."""


class ShapeError(ValueError):
    """Array shapes or alphabet sizes are inconsistent."""


class EmptyError(ValueError):
    pass


class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured size cap."""


class ZeroCostError(ValueError):
    pass


class ThetaInfeasible(ValueError):
    """The duty fraction exceeds min P_S(s) / p_hat(s)."""


class NoConvergence(RuntimeError):
    pass
