"""First-gap times of inhomogeneous Poisson processes and their relatives.

Core objects: rate functions with cumulative intensities (:mod:`.intensity`),
the exact gap-time tail via its delay differential equation (:mod:`.dde`),
finiteness classification (:mod:`.finiteness`), tail regimes and decay rates
(:mod:`.asymptotics`), Monte Carlo cross-validation (:mod:`.montecarlo`),
the discrete success-run analogue (:mod:`.bernoulli`), and restart-protocol
completion times (:mod:`.restart`).
"""

from . import (asymptotics, bernoulli, dde, finiteness, intensity,
               montecarlo, restart)
from .errors import (BudgetExceededError, DivergenceError, DomainError,
                     NumericalIntegrityError, PreconditionError,
                     UnsupportedFamilyError)

__version__ = "0.1.0"

__all__ = [
    "asymptotics", "bernoulli", "dde", "finiteness", "intensity",
    "montecarlo", "restart",
    "BudgetExceededError", "DivergenceError", "DomainError",
    "NumericalIntegrityError", "PreconditionError", "UnsupportedFamilyError",
    "__version__",
]
