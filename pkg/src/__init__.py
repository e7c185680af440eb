"""
ProxRecon - proximal-splitting solvers for linear imaging inverse problems.
Forward operators, proximal maps, plug-and-play denoisers and a snapshot
compressive imaging workbench, checked against dense reference arithmetic.
"""

__version__ = "1.0.0"
__author__ = "ProxRecon Team"
__description__ = "Proximal-splitting, plug-and-play and RED solvers with an SCI workbench"

from .core.reconstruction import ReconstructionWorkbench
from .core.solvers import SOLVERS, Problem, run_solver
from .models.config import RunConfig, SolverConfig
from .models.trace import IterationTrace, StopReason
from .models.volume import Shape

__all__ = [
    "ReconstructionWorkbench",
    "SOLVERS",
    "Problem",
    "run_solver",
    "RunConfig",
    "SolverConfig",
    "IterationTrace",
    "StopReason",
    "Shape"
]
