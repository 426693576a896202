"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class BoundaryError(ValueError):
    """A conditioning level sits on the boundary {0, 1} where conditionals are undefined."""


class NonMonotoneBestResponse(RuntimeError):
    """The expected payoff gap increases somewhere in the player's own type.

    Attributes
    ----------
    player : int
        Zero-based player index.
    interval : tuple of float
        A type interval ``(u_lo, u_hi)`` over which the gap was seen to increase.
    """

    def __init__(self, player, interval, message=None):
        self.player = player
        self.interval = (float(interval[0]), float(interval[1]))
        if message is None:
            message = (
                f"best response of player {player} is not monotone: expected payoff gap "
                f"increases on [{self.interval[0]:.6g}, {self.interval[1]:.6g}]"
            )
        super().__init__(message)


class SupportDeficient(RuntimeError):
    """The support of the marginal choice probabilities is too thin at a query point."""


class NumericalDerivativeError(RuntimeError):
    """An estimated belief (a derivative of a choice regression) is not a probability."""


class CellEmpty(RuntimeError):
    """A covariate cell holds fewer observations than the operation needs."""


class UnderIdentifiedCell(RuntimeError):
    """The rank of the demeaned-belief Gram matrix is below the identifiable range."""


class NormalizationInfeasible(RuntimeError):
    """No covariate cell satisfies the conditions required by the payoff normalization."""


class SingularDesign(RuntimeError):
    """The sieve design matrix is rank deficient.

    Attributes
    ----------
    columns : list of str
        Names of the columns found to be collinear with earlier ones.
    """

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"collinear sieve columns: {', '.join(self.columns)}")


class ConfigError(ValueError):
    """A configuration file or command line is invalid.

    Attributes
    ----------
    key : str or None
        Dotted path of the offending key, when there is one.
    """

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class NoEquilibrium(RuntimeError):
    """The solver found no monotone equilibrium at a covariate profile.

    Attributes
    ----------
    x : tuple of float
        The offending covariate profile.
    """

    def __init__(self, x, message=None):
        self.x = tuple(float(v) for v in x)
        super().__init__(message or f"no monotone equilibrium found at x = {self.x}")
