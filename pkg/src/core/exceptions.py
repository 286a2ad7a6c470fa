class DickeError(Exception):
    """Base class for every failure raised by the simulation stack."""

    slug = "internal"
    exit_code = 3


class ConfigError(DickeError, ValueError):
    slug = "config"
    exit_code = 2


class DomainError(DickeError, ValueError):
    slug = "domain"
    exit_code = 2


class InvalidThreshold(DomainError):
    slug = "threshold"


class TruncationError(DickeError):
    """Coherent-state weight above the Fock cutoff exceeds tolerance."""

    slug = "truncation"

    def __init__(self, n_bar: float, n_fock: int, tail: float) -> None:
        super().__init__(
            f"n_fock={n_fock} too small for n_bar={n_bar:g} "
            f"(tail weight {tail:.3e})"
        )
        self.n_bar = n_bar
        self.n_fock = n_fock
        self.tail = tail


class EigSolverFailure(DickeError):
    slug = "eig"


class NumericalError(DickeError):
    slug = "numerical"
