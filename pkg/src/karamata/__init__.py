"""Convergence rates of quasi-cyclic fixed-point iterations under Karamata
regularity: Lambert W and safeguarded numerics, regular-variation tools,
rate bounds, projection operators, a solver with Fejér auditing, and a
scenario benchmark."""

from .errors import *  # noqa: F401,F403
from .numerics import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .rates import *  # noqa: F401,F403
from .regvar import *  # noqa: F401,F403
from .solver import *  # noqa: F401,F403
from .bench import (  # noqa: F401
    SCENARIOS,
    RateReport,
    ScenarioConfig,
    build_scenario,
    emit,
    fit_rate,
    run_scenario,
)

__version__ = "0.1.0"
